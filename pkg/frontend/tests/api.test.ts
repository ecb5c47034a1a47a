import { describe, expect, it } from "vitest";

import { ApiError, SprintOptClient } from "../src/api.js";
import { jsonResponse, recordingFetch, textResponse } from "./fixtures.js";

describe("SprintOptClient request shapes", () => {
  it("hits each route with the right method, path and JSON body", async () => {
    const { fetch, requests } = recordingFetch(() => jsonResponse({}));
    const client = new SprintOptClient("http://svc", fetch);

    await client.health();
    await client.listThreads();
    await client.createThread({ name: "demo", objective: "quadratic_bowl" });
    await client.thread("th001");
    await client.threadSprints("th001");
    await client.threadSpace("th001");
    await client.threadSpace("th001", 2);
    await client.createSprint({ thread_id: "th001", sampler: "tpe" });
    await client.sprint("sp0001");
    await client.trials("sp0001", { limit: 50, offset: 10 });
    await client.sprintSpace("sp0001");
    await client.scatter("sp0001", "lr", 10);
    await client.prime("sp0001", { source: "sp0000", mode: "cold", top_n: 3 });
    await client.prune("sp0001", { k: 10, freezes: [] });
    await client.run("sp0001", { wait: true });

    expect(requests.map((r) => [r.method, r.url])).toEqual([
      ["GET", "http://svc/health"],
      ["GET", "http://svc/threads"],
      ["POST", "http://svc/threads"],
      ["GET", "http://svc/threads/th001"],
      ["GET", "http://svc/threads/th001/sprints"],
      ["GET", "http://svc/threads/th001/space"],
      ["GET", "http://svc/threads/th001/space?version=2"],
      ["POST", "http://svc/sprints"],
      ["GET", "http://svc/sprints/sp0001"],
      ["GET", "http://svc/sprints/sp0001/trials?limit=50&offset=10"],
      ["GET", "http://svc/sprints/sp0001/space"],
      ["GET", "http://svc/sprints/sp0001/dimensions/lr/scatter?k=10"],
      ["POST", "http://svc/sprints/sp0001/prime"],
      ["POST", "http://svc/sprints/sp0001/prune"],
      ["POST", "http://svc/sprints/sp0001/run"],
    ]);

    const posts = requests.filter((r) => r.method === "POST");
    expect(posts.every((r) => r.headers["content-type"] === "application/json")).toBe(true);
    expect(posts.map((r) => r.body)).toEqual([
      { name: "demo", objective: "quadratic_bowl" },
      { thread_id: "th001", sampler: "tpe" },
      { source: "sp0000", mode: "cold", top_n: 3 },
      { k: 10, freezes: [] },
      { wait: true },
    ]);
  });

  it("run defaults to an empty JSON body (async start)", async () => {
    const { fetch, requests } = recordingFetch(() => jsonResponse({ status: "started", sprint_id: "sp0001" }, 202));
    const client = new SprintOptClient("", fetch);
    const result = await client.run("sp0001");
    expect(requests[0]?.body).toEqual({});
    expect(result).toEqual({ status: "started", sprint_id: "sp0001" });
  });

  it("encodes path segments", async () => {
    const { fetch, requests } = recordingFetch(() => jsonResponse({}));
    const client = new SprintOptClient("", fetch);
    await client.scatter("sp 1", "weight decay");
    expect(requests[0]?.url).toBe("/sprints/sp%201/dimensions/weight%20decay/scatter");
  });
});

describe("error envelope", () => {
  it("surfaces the machine-readable reason and message", async () => {
    const { fetch } = recordingFetch(() =>
      jsonResponse({ detail: { reason: "fidelity-mismatch", message: "warm priming requires identical fidelity" } }, 422),
    );
    const client = new SprintOptClient("", fetch);
    const err = await client.prime("sp0002", { source: "sp0001", mode: "warm" }).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    const apiErr = err as ApiError;
    expect(apiErr.status).toBe(422);
    expect(apiErr.reason).toBe("fidelity-mismatch");
    expect(apiErr.detailMessage).toBe("warm priming requires identical fidelity");
  });

  it("falls back gracefully on string details and non-JSON bodies", async () => {
    const stringDetail = new SprintOptClient(
      "",
      recordingFetch(() => jsonResponse({ detail: "not found" }, 404)).fetch,
    );
    const err1 = (await stringDetail.sprint("x").catch((e: unknown) => e)) as ApiError;
    expect(err1.reason).toBe("http-error");
    expect(err1.detailMessage).toBe("not found");

    const nonJson = new SprintOptClient(
      "",
      recordingFetch(() => textResponse("<html>boom</html>", 500)).fetch,
    );
    const err2 = (await nonJson.sprint("x").catch((e: unknown) => e)) as ApiError;
    expect(err2.status).toBe(500);
    expect(err2.reason).toBe("http-error");
  });
});
