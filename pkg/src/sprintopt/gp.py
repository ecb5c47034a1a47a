"""Gaussian-process surrogate over the unit cube, hedged acquisition, and a
seeded sequential minimizer.

All modelling happens in normalized coordinates: numeric dimensions map to
[0, 1] (log dimensions through their log transform) and categoricals expand
to one-hot blocks. Scores are standardized inside the fit, with a zero-mean
prior on the standardized values.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.stats import norm

from .space import HPoint, SearchSpace, sample_uniform
from .trials import (
    FULL_FIDELITY,
    FidelitySpec,
    ObjectiveHandle,
    Provenance,
    Reporter,
    SprintResult,
    Trial,
    TrialPruned,
    TrialStatus,
    incumbent,
)

SUPPORTED_NU = (0.5, 1.5, 2.5)
ACQUISITIONS = ("PI", "EI", "LCB")
DEFAULT_XI = 0.01
DEFAULT_KAPPA = 1.96
JITTER_START = 1e-10
JITTER_MAX = 1e-4


class GPError(RuntimeError):
    """Raised when the Gram matrix cannot be factorized even with jitter."""


@dataclass(frozen=True)
class KernelSpec:
    """Matérn kernel with ARD length scales."""

    nu: float = 2.5
    length_scales: tuple[float, ...] = (1.0,)
    signal_variance: float = 1.0

    def __post_init__(self) -> None:
        if self.nu not in SUPPORTED_NU:
            raise ValueError(f"nu must be one of {SUPPORTED_NU}, got {self.nu}")
        if any(ls <= 0 for ls in self.length_scales):
            raise ValueError("length scales must be > 0")
        if self.signal_variance <= 0:
            raise ValueError("signal variance must be > 0")


def _scaled_dists(x1: np.ndarray, x2: np.ndarray, length_scales: np.ndarray) -> np.ndarray:
    diff = (x1[:, None, :] - x2[None, :, :]) / length_scales
    return np.sqrt(np.maximum((diff**2).sum(axis=-1), 0.0))


def _matern_of_r(r: np.ndarray, nu: float, signal_variance: float) -> np.ndarray:
    if nu == 0.5:
        k = np.exp(-r)
    elif nu == 1.5:
        s = math.sqrt(3.0) * r
        k = (1.0 + s) * np.exp(-s)
    else:
        s = math.sqrt(5.0) * r
        k = (1.0 + s + s**2 / 3.0) * np.exp(-s)
    return signal_variance * k


def matern_kernel(x1: Sequence[float] | float, x2: Sequence[float] | float, spec: KernelSpec) -> float:
    """Kernel value for a single pair of (already normalized) coordinates."""
    a = np.atleast_1d(np.asarray(x1, dtype=float))
    b = np.atleast_1d(np.asarray(x2, dtype=float))
    ls = np.asarray(spec.length_scales, dtype=float)
    if a.shape != b.shape or a.size != ls.size:
        raise ValueError("x1, x2 and length_scales must share a dimension")
    r = _scaled_dists(a[None, :], b[None, :], ls)[0, 0]
    return float(_matern_of_r(np.asarray(r), spec.nu, spec.signal_variance))


def kernel_matrix(X1: np.ndarray, X2: np.ndarray, spec: KernelSpec) -> np.ndarray:
    ls = np.asarray(spec.length_scales, dtype=float)
    return _matern_of_r(_scaled_dists(X1, X2, ls), spec.nu, spec.signal_variance)


@dataclass
class GPModel:
    X: np.ndarray
    spec: KernelSpec
    noise: float
    jitter: float
    y_mean: float
    y_sd: float
    _chol: np.ndarray = field(repr=False)
    _alpha: np.ndarray = field(repr=False)

    def posterior(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance (original score units) at query rows."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        k_star = kernel_matrix(self.X, Xq, self.spec)  # n x m
        mu = self.y_mean + self.y_sd * (k_star.T @ self._alpha)
        v = scipy.linalg.solve_triangular(self._chol, k_star, lower=True)
        var = self.spec.signal_variance - (v**2).sum(axis=0)
        return mu, self.y_sd**2 * np.maximum(var, 0.0)


def gp_fit(points: np.ndarray, scores: Sequence[float], spec: KernelSpec, noise: float) -> GPModel:
    """Fit on normalized coordinates. Scores are standardized internally; the
    Gram factorization escalates jitter 1e-10 -> 1e-4 (x10 steps) before
    giving up."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(scores, dtype=float)
    if X.shape[0] != y.size:
        raise ValueError("points and scores must align")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    y_mean = float(y.mean())
    y_sd = float(y.std())
    if y_sd == 0.0:
        y_sd = 1.0
    y_std = (y - y_mean) / y_sd

    K = kernel_matrix(X, X, spec) + noise * np.eye(X.shape[0])
    jitter_used = 0.0
    jitter = JITTER_START
    while True:
        try:
            L = scipy.linalg.cholesky(K + jitter_used * np.eye(X.shape[0]), lower=True)
            break
        except scipy.linalg.LinAlgError:
            if jitter > JITTER_MAX:
                raise GPError("ill-conditioned kernel: jitter escalation exhausted") from None
            jitter_used = jitter
            jitter *= 10.0
    alpha = scipy.linalg.cho_solve((L, True), y_std)
    return GPModel(X=X, spec=spec, noise=noise, jitter=jitter_used, y_mean=y_mean, y_sd=y_sd, _chol=L, _alpha=alpha)


def _log_marginal_likelihood(X: np.ndarray, y_std: np.ndarray, spec: KernelSpec, noise: float) -> float:
    n = X.shape[0]
    K = kernel_matrix(X, X, spec) + (noise + 1e-10) * np.eye(n)
    try:
        L = scipy.linalg.cholesky(K, lower=True)
    except scipy.linalg.LinAlgError:
        return -np.inf
    alpha = scipy.linalg.cho_solve((L, True), y_std)
    return float(-0.5 * y_std @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * math.log(2.0 * math.pi))


_LOG_LS_BOUNDS = (math.log(5e-3), math.log(1e2))
_LOG_SV_BOUNDS = (math.log(1e-3), math.log(1e3))


def fit_kernel_params(
    points: np.ndarray,
    scores: Sequence[float],
    nu: float = 2.5,
    noise: float = 1e-6,
    rng_seed: int | Sequence[int] = 0,
    restarts: int = 5,
    maxiter: int = 80,
    warm_start: KernelSpec | None = None,
) -> KernelSpec:
    """Maximize the log marginal likelihood over log length scales and log
    signal variance with Nelder-Mead, multi-started."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(scores, dtype=float)
    sd = y.std() or 1.0
    y_std = (y - y.mean()) / sd
    d = X.shape[1]
    rng = np.random.default_rng(rng_seed)

    # pairwise squared differences do not depend on theta; build them once
    sq_diffs = (X[:, None, :] - X[None, :, :]) ** 2
    eye = np.eye(X.shape[0])
    lml_const = 0.5 * X.shape[0] * math.log(2.0 * math.pi)

    def objective(theta: np.ndarray) -> float:
        log_ls = np.clip(theta[:d], *_LOG_LS_BOUNDS)
        log_sv = float(np.clip(theta[d], *_LOG_SV_BOUNDS))
        r = np.sqrt(np.maximum(sq_diffs @ np.exp(-2.0 * log_ls), 0.0))
        K = _matern_of_r(r, nu, math.exp(log_sv)) + (noise + 1e-10) * eye
        try:
            L = scipy.linalg.cholesky(K, lower=True)
        except scipy.linalg.LinAlgError:
            return np.inf
        alpha = scipy.linalg.cho_solve((L, True), y_std)
        return float(0.5 * y_std @ alpha + np.log(np.diag(L)).sum() + lml_const)

    starts = []
    if warm_start is not None and len(warm_start.length_scales) == d:
        starts.append(np.log(np.array([*warm_start.length_scales, warm_start.signal_variance])))
    else:
        starts.append(np.log(np.array([0.3] * d + [1.0])))
    while len(starts) < restarts:
        starts.append(
            np.concatenate([rng.uniform(math.log(0.05), math.log(2.0), d), rng.uniform(math.log(0.25), math.log(4.0), 1)])
        )

    best_theta, best_val = starts[0], objective(starts[0])
    for s in starts:
        res = scipy.optimize.minimize(objective, s, method="Nelder-Mead", options={"maxiter": maxiter, "xatol": 1e-3, "fatol": 1e-4})
        if res.fun < best_val:
            best_theta, best_val = res.x, res.fun
    log_ls = np.clip(best_theta[:d], *_LOG_LS_BOUNDS)
    log_sv = float(np.clip(best_theta[d], *_LOG_SV_BOUNDS))
    return KernelSpec(nu=nu, length_scales=tuple(float(v) for v in np.exp(log_ls)), signal_variance=math.exp(log_sv))


def acquisition_values(
    model: GPModel,
    best_score: float,
    choice: str,
    candidates: np.ndarray,
    xi: float = DEFAULT_XI,
    kappa: float = DEFAULT_KAPPA,
) -> np.ndarray:
    """Acquisition utilities (higher is better to sample) for minimization.

    PI  = Phi((best - xi - mu) / sigma)
    EI  = (best - xi - mu) Phi(z) + sigma phi(z)
    LCB utility = kappa * sigma - mu  (argmax picks minimal mu - kappa*sigma)

    sigma = 0 is handled by the closed forms' limits: PI becomes the
    improvement indicator, EI the clipped improvement.
    """
    if choice not in ACQUISITIONS:
        raise ValueError(f"choice must be one of {ACQUISITIONS}, got {choice!r}")
    mu, var = model.posterior(candidates)
    sigma = np.sqrt(var)
    if choice == "LCB":
        return kappa * sigma - mu
    improve = best_score - xi - mu
    out = np.empty_like(mu)
    zero = sigma == 0.0
    if choice == "PI":
        out[zero] = (improve[zero] > 0.0).astype(float)
        nz = ~zero
        out[nz] = norm.cdf(improve[nz] / sigma[nz])
    else:
        out[zero] = np.maximum(improve[zero], 0.0)
        nz = ~zero
        z = improve[nz] / sigma[nz]
        out[nz] = improve[nz] * norm.cdf(z) + sigma[nz] * norm.pdf(z)
    return out


def acquire(
    model: GPModel,
    best_score: float,
    choice: str,
    candidates: np.ndarray,
    xi: float = DEFAULT_XI,
    kappa: float = DEFAULT_KAPPA,
) -> np.ndarray:
    """The candidate row maximizing the chosen acquisition; ties break to the
    lowest index (np.argmax)."""
    values = acquisition_values(model, best_score, choice, candidates, xi=xi, kappa=kappa)
    return np.asarray(candidates)[int(np.argmax(values))]


class VectorCodec:
    """HPoint <-> normalized vector over a space's active dimensions.

    Numeric dimensions take one [0, 1] coordinate; categoricals one-hot
    expand. Frozen dimensions are excluded and re-inserted on decode.
    """

    def __init__(self, space: SearchSpace):
        self.space = space
        self.blocks: list[tuple[str, int, int]] = []  # (dim name, start, width)
        start = 0
        for d in space.active_dimensions:
            width = len(d.categories) if d.kind == "categorical" else 1
            self.blocks.append((d.name, start, width))
            start += width
        self.width = start
        self.numeric_mask = np.zeros(self.width, dtype=bool)
        for (name, s, w) in self.blocks:
            if self.space.dimension(name).kind != "categorical":
                self.numeric_mask[s] = True

    def encode(self, point: HPoint) -> np.ndarray:
        vec = np.zeros(self.width)
        for name, s, w in self.blocks:
            d = self.space.dimension(name)
            v = point.values[name]
            if d.kind == "categorical":
                vec[s + d.categories.index(v)] = 1.0
            else:
                vec[s] = d.to_unit(v)
        return vec

    def decode(self, vec: np.ndarray) -> HPoint:
        values: dict = {}
        for d in self.space.dimensions:
            if d.is_frozen:
                values[d.name] = d.frozen_value
        for name, s, w in self.blocks:
            d = self.space.dimension(name)
            if d.kind == "categorical":
                values[name] = d.categories[int(np.argmax(vec[s : s + w]))]
            else:
                values[name] = d.from_unit(float(vec[s]))
        return HPoint(values)

    def random_vectors(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.zeros((n, self.width))
        for name, s, w in self.blocks:
            if w == 1 and self.numeric_mask[s]:
                out[:, s] = rng.uniform(0.0, 1.0, n)
            else:
                idx = rng.integers(0, w, n)
                out[np.arange(n), s + idx] = 1.0
        return out

    def perturb(self, vecs: np.ndarray, rng: np.random.Generator, sd: float = 0.05) -> np.ndarray:
        out = vecs.copy()
        noise = rng.normal(0.0, sd, out.shape)
        out[:, self.numeric_mask] = np.clip(out[:, self.numeric_mask] + noise[:, self.numeric_mask], 0.0, 1.0)
        return out


def _run_trial(
    objective: ObjectiveHandle, trial: Trial, fidelity: FidelitySpec, reporter: Reporter | None
) -> Trial:
    try:
        score = objective.evaluate(trial.point, fidelity, trial.seed, reporter)
        trial.final_score = float(score)
        trial.status = TrialStatus.COMPLETE
    except TrialPruned:
        trial.status = TrialStatus.PRUNED
    except Exception as exc:  # objective failure: record, continue
        trial.status = TrialStatus.FAILED
        trial.error = f"{type(exc).__name__}: {exc}"
    return trial


def gp_minimize(
    objective: ObjectiveHandle,
    space: SearchSpace,
    n_calls: int,
    n_random: int,
    hedge_seed: int,
    *,
    fidelity: FidelitySpec = FULL_FIDELITY,
    nu: float = 2.5,
    noise: float = 1e-6,
    xi: float = DEFAULT_XI,
    kappa: float = DEFAULT_KAPPA,
    n_candidates: int = 1000,
    n_perturbed: int = 10,
    restarts: int = 5,
    initial_points: Sequence[tuple[HPoint, Provenance]] | Sequence[HPoint] = (),
    known_observations: Sequence[tuple[HPoint, float]] = (),
    id_offset: int = 0,
    reporter_factory: Callable[[Trial], Reporter | None] | None = None,
    on_trial_start=None,
    on_trial_finish=None,
    worker_limit: int = 1,
) -> SprintResult:
    """Sequential GP minimization with a hedged PI/EI/LCB acquisition.

    Evaluation order: primed initial points, then n_random uniform draws,
    then model-guided suggestions; every evaluation (failures included)
    consumes one of the n_calls. The suggested points and per-trial seeds do
    not depend on worker_limit; with worker_limit == 1 the run is strictly
    serial and byte-for-byte deterministic. worker_limit > 1 evaluates the
    primed/random prefix concurrently (results are committed in trial order)
    while the model-guided tail stays sequential by nature.
    """
    if n_calls < 1:
        raise ValueError("n_calls must be >= 1")
    if n_random < 0:
        raise ValueError("n_random must be >= 0")
    if worker_limit < 1:
        raise ValueError("worker_limit must be >= 1")
    codec = VectorCodec(space)
    hedge_rng = np.random.default_rng([hedge_seed, 1])
    queue: list[tuple[HPoint, Provenance]] = []
    for item in initial_points:
        if isinstance(item, HPoint):
            queue.append((item, Provenance(kind="cold_primed")))
        else:
            queue.append(item)

    trials: list[Trial] = []
    X_hist: list[np.ndarray] = []
    y_hist: list[float] = []
    for pt, score in known_observations:
        X_hist.append(codec.encode(pt))
        y_hist.append(float(score))

    frozen_only = not space.active_dimensions

    def prefix_trial(i: int) -> Trial:
        provenance = Provenance()
        if i < len(queue):
            point, provenance = queue[i]
        elif frozen_only:
            point = HPoint({d.name: d.frozen_value for d in space.dimensions})
        else:
            point = sample_uniform(space, [hedge_seed, 2, i])
        return Trial(
            id=id_offset + i, point=point, status=TrialStatus.RUNNING, provenance=provenance, seed=hedge_seed * 100003 + i
        )

    def commit(trial: Trial) -> None:
        if trial.status is TrialStatus.COMPLETE:
            X_hist.append(codec.encode(trial.point))
            y_hist.append(trial.final_score)
        if on_trial_finish is not None:
            on_trial_finish(trial)
        trials.append(trial)

    start_at = 0
    prefix_end = min(n_calls, len(queue) + n_random)
    if worker_limit > 1 and prefix_end > 1:
        batch = [prefix_trial(i) for i in range(prefix_end)]
        if on_trial_start is not None:
            for trial in batch:
                on_trial_start(trial)
        with ThreadPoolExecutor(max_workers=worker_limit) as pool:
            reporters = [reporter_factory(t) if reporter_factory is not None else None for t in batch]
            list(pool.map(lambda tr: _run_trial(objective, tr[0], fidelity, tr[1]), zip(batch, reporters)))
        for trial in batch:
            commit(trial)
        start_at = prefix_end

    prev_spec: KernelSpec | None = None
    for i in range(start_at, n_calls):
        if i < prefix_end or frozen_only or len(y_hist) < 2:
            trial = prefix_trial(i)
        else:
            X = np.vstack(X_hist)
            y = np.asarray(y_hist)
            prev_spec = fit_kernel_params(
                X, y, nu=nu, noise=noise, rng_seed=[hedge_seed, 3, i], restarts=restarts, warm_start=prev_spec
            )
            model = gp_fit(X, y, prev_spec, noise)
            cand_rng = np.random.default_rng([hedge_seed, 4, i])
            cands = codec.random_vectors(n_candidates, cand_rng)
            order = np.argsort(y)[:n_perturbed]
            if order.size:
                # 10 draws per parent: one jittered copy each is too coarse to
                # resolve a small basin once dimensionality grows past 2 or 3.
                parents = np.repeat(X[order], 10, axis=0)
                cands = np.vstack([cands, codec.perturb(parents, cand_rng)])
            choice = ACQUISITIONS[int(hedge_rng.integers(len(ACQUISITIONS)))]
            # xi is read on the standardized score scale the model fits in;
            # scaling it by y_sd gives the identical argmax to evaluating the
            # acquisition on standardized (mu, sigma, best)
            values = acquisition_values(model, float(y.min()), choice, cands, xi=xi * model.y_sd, kappa=kappa)
            point = codec.decode(cands[int(np.argmax(values))])
            trial = Trial(
                id=id_offset + i,
                point=point,
                status=TrialStatus.RUNNING,
                provenance=Provenance(),
                seed=hedge_seed * 100003 + i,
            )
        if on_trial_start is not None:
            on_trial_start(trial)
        reporter = reporter_factory(trial) if reporter_factory is not None else None
        _run_trial(objective, trial, fidelity, reporter)
        commit(trial)

    return SprintResult(trials=trials, best_trial=incumbent(trials))
