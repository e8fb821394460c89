"""Bound-chain verification, tradeoff traces, and the estimation harness.

The harness samples measurement records from a model configuration, fits
them by maximum likelihood, and compares the replication covariance against
the inverse classical information matrix (the postselected Cramer-Rao
bound). Sampling is deterministic given a seed; replications derive
independent sub-seeds from (seed, replication index).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .linalg import inv_psd, invert_sym_2x2, psd_min_eig
from .models import (
    MAModel,
    PostselectionSpec,
    SensorModel,
    build_ensemble,
    outcome_distribution,
)

log = logging.getLogger(__name__)

CHAIN_TOL = 1e-9
WEIGHT_INFO_TOL = 1e-10

# Fit box for the fluctuation parameter: below the floor the model is
# effectively rank-one (the information saturates), above the cap the
# coherence is exponentially dead.
GAMMA_BOX = (1e-3, 2.0)
PHI_BOX = (-math.pi, math.pi)

# Likelihood variation below this (relative) marks a parameter as flat.
FLAT_TOL = 1e-12


# ---------------------------------------------------------------------------
# bound chain and tradeoffs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainVerdict:
    """PSD verdicts for the information-matrix chain F <= Q <= H, plus the
    scaled-covariance link M C >= F^{-1} when an experiment is supplied, and
    the (always PSD) mode-weight information term."""

    min_eig_q_minus_f: float
    min_eig_h_minus_q: float
    min_eig_scaled_cov_minus_f_inv: float | None
    weight_info_min_eig: float | None
    tolerance: float
    cov_tolerance: float | None = None

    @property
    def pass_q_minus_f(self) -> bool:
        return self.min_eig_q_minus_f >= -self.tolerance

    @property
    def pass_h_minus_q(self) -> bool:
        return self.min_eig_h_minus_q >= -self.tolerance

    @property
    def pass_weight_info(self) -> bool:
        if self.weight_info_min_eig is None:
            return True
        return self.weight_info_min_eig >= -WEIGHT_INFO_TOL

    @property
    def pass_cov(self) -> bool:
        if self.min_eig_scaled_cov_minus_f_inv is None:
            return True
        tol = self.cov_tolerance if self.cov_tolerance is not None else self.tolerance
        return self.min_eig_scaled_cov_minus_f_inv >= -tol

    @property
    def passed(self) -> bool:
        return (
            self.pass_q_minus_f
            and self.pass_h_minus_q
            and self.pass_weight_info
            and self.pass_cov
        )


def verify_chain(
    cfim: np.ndarray,
    qfim: np.ndarray,
    sensor_qfim: np.ndarray,
    scaled_cov: np.ndarray | None = None,
    weight_info: np.ndarray | None = None,
    tol: float = CHAIN_TOL,
    cov_tol: float | None = None,
) -> ChainVerdict:
    """Check the matrix inequalities of the bound chain.

    ``scaled_cov`` is M times the empirical estimator covariance; when given,
    the classical Cramer-Rao link M C - F^{-1} is checked with ``cov_tol``
    (statistical runs need a looser tolerance than the algebraic links).
    """
    for m, name in ((cfim, "cfim"), (qfim, "qfim"), (sensor_qfim, "sensor_qfim")):
        m = np.asarray(m)
        if m.shape != np.asarray(cfim).shape:
            raise ValueError(f"{name} shape {m.shape} does not match the chain dimension")
    cov_gap = None
    if scaled_cov is not None:
        f_inv = (
            invert_sym_2x2(cfim) if np.asarray(cfim).shape == (2, 2) else inv_psd(cfim).real
        )
        cov_gap = psd_min_eig(np.asarray(scaled_cov) - f_inv)
    return ChainVerdict(
        min_eig_q_minus_f=psd_min_eig(np.asarray(qfim) - np.asarray(cfim)),
        min_eig_h_minus_q=psd_min_eig(np.asarray(sensor_qfim) - np.asarray(qfim)),
        min_eig_scaled_cov_minus_f_inv=cov_gap,
        weight_info_min_eig=None if weight_info is None else psd_min_eig(weight_info),
        tolerance=tol,
        cov_tolerance=cov_tol,
    )


@dataclass(frozen=True)
class TradeoffReport:
    classical: float
    quantum: float
    ratios_classical: tuple
    ratios_quantum: tuple


def tradeoffs(cfim: np.ndarray, qfim: np.ndarray, sensor_qfim: np.ndarray) -> TradeoffReport:
    """Tr[F H^-1], Tr[Q H^-1], and the per-parameter diagonal ratios."""
    h = np.asarray(sensor_qfim, dtype=float)
    h_inv = invert_sym_2x2(h) if h.shape == (2, 2) else inv_psd(h).real
    f = np.asarray(cfim, dtype=float)
    q = np.asarray(qfim, dtype=float)
    return TradeoffReport(
        classical=float(np.trace(f @ h_inv)),
        quantum=float(np.trace(q @ h_inv)),
        ratios_classical=tuple(np.diag(f) / np.diag(h)),
        ratios_quantum=tuple(np.diag(q) / np.diag(h)),
    )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelTables:
    """Mode weights and outcome distributions of one configuration."""

    labels: tuple[str, ...]
    weights: np.ndarray
    outcome_probs: tuple[np.ndarray, ...]


def model_tables(
    sensor: SensorModel, ma: MAModel, ps: PostselectionSpec, povm
) -> ModelTables:
    ensemble = build_ensemble(sensor, ma, ps)
    labels, weights, probs = [], [], []
    for mode in ensemble:
        labels.append(mode.label)
        weights.append(mode.weight)
        if mode.degenerate:
            probs.append(np.zeros(0))
            continue
        mode_povm = povm[mode.label] if isinstance(povm, dict) else povm
        probs.append(outcome_distribution(mode.state, mode_povm))
    return ModelTables(
        labels=tuple(labels),
        weights=np.array(weights),
        outcome_probs=tuple(probs),
    )


@dataclass(frozen=True, eq=False)
class Experiment:
    """Measurement records sampled from a configuration at a true point."""

    sensor: SensorModel
    ma: MAModel
    ps: PostselectionSpec
    povm: object
    shots: int
    seed: object
    mode_labels: tuple[str, ...]
    modes: np.ndarray
    outcomes: np.ndarray

    def counts(self) -> list[np.ndarray]:
        """Outcome histograms per mode, sized to the model's outcome space."""
        tables = model_tables(self.sensor, self.ma, self.ps, self.povm)
        out = []
        for idx, probs in enumerate(tables.outcome_probs):
            sel = self.outcomes[self.modes == idx]
            out.append(np.bincount(sel, minlength=probs.size).astype(float))
        return out


def sample_experiment(
    sensor: SensorModel,
    ma: MAModel,
    ps: PostselectionSpec,
    povm,
    shots: int,
    seed,
) -> Experiment:
    """Draw i.i.d. records: first the mode (by its weight), then an outcome
    from the conditional distribution. Deterministic given ``seed``."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    tables = model_tables(sensor, ma, ps, povm)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    mode_cdf = np.cumsum(tables.weights)
    mode_cdf[-1] = 1.0
    modes = np.searchsorted(mode_cdf, rng.random(shots), side="right").astype(np.uint8)
    outcomes = np.zeros(shots, dtype=np.int64)
    for idx, probs in enumerate(tables.outcome_probs):
        mask = modes == idx
        n = int(mask.sum())
        if n == 0:
            continue
        if probs.size == 0:
            raise RuntimeError(f"sampled a degenerate mode {tables.labels[idx]!r}")
        cdf = np.cumsum(probs)
        cdf[-1] = max(cdf[-1], 1.0)
        outcomes[mask] = np.searchsorted(cdf, rng.random(n), side="right")
    return Experiment(
        sensor=sensor,
        ma=ma,
        ps=ps,
        povm=povm,
        shots=shots,
        seed=seed,
        mode_labels=tables.labels,
        modes=modes,
        outcomes=outcomes,
    )


# ---------------------------------------------------------------------------
# maximum likelihood
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MLEResult:
    """Point estimate; unidentifiable components are nan and flagged."""

    phi_hat: float
    gamma_hat: float
    flags: tuple[str, ...]
    log_likelihood: float

    @property
    def point(self) -> np.ndarray:
        return np.array([self.phi_hat, self.gamma_hat])


def _mean_log_likelihood(counts, experiment, point) -> float:
    tables = model_tables(
        SensorModel(float(point[0]), float(point[1])),
        experiment.ma,
        experiment.ps,
        experiment.povm,
    )
    total = 0.0
    shots = float(experiment.shots)
    for idx, (w, probs) in enumerate(zip(tables.weights, tables.outcome_probs)):
        c = counts[idx]
        seen = c > 0
        if not np.any(seen):
            continue
        if probs.size == 0 or w <= 0:
            return -np.inf
        joint = w * probs[: c.size][seen]
        if joint.min() <= 0:
            return -np.inf
        total += float(c[seen] @ np.log(joint))
    return total / shots


def mle(
    experiment: Experiment,
    phi_box: tuple[float, float] = PHI_BOX,
    gamma_box: tuple[float, float] = GAMMA_BOX,
    coarse_steps: int = 64,
    coarse_cache: "CoarseGrid | None" = None,
) -> MLEResult:
    """Maximize the record log-likelihood over (phi, gamma_fluct).

    Coarse 64x64 grid search locates the basin; derivative-free Nelder-Mead
    refines it to relative tolerance 1e-8. Flat likelihood directions are
    flagged unidentifiable (nan estimate); a fluctuation estimate pinned at
    the search floor is flagged as a boundary hit.
    """
    if experiment.shots < 1 or experiment.modes.size == 0:
        raise ValueError("experiment has no records")
    counts = experiment.counts()
    grid = coarse_cache if coarse_cache is not None else coarse_grid(
        experiment, phi_box, gamma_box, coarse_steps
    )
    surface = grid.evaluate(counts, experiment)
    best = np.unravel_index(np.argmax(surface), surface.shape)
    flags = []
    scale = max(abs(float(surface.max())), 1.0)
    if surface.max() - surface.min() < FLAT_TOL * scale:
        flags += ["phi_unidentifiable", "gamma_unidentifiable"]
        return MLEResult(math.nan, math.nan, tuple(flags), float(surface.max()))
    phi_profile = surface[:, best[1]]
    gam_profile = surface[best[0], :]
    phi_flat = phi_profile.max() - phi_profile.min() < FLAT_TOL * scale
    gam_flat = gam_profile.max() - gam_profile.min() < FLAT_TOL * scale

    start = np.array([grid.phi_values[best[0]], grid.gamma_values[best[1]]])
    res = minimize(
        lambda pt: -_mean_log_likelihood(counts, experiment, pt),
        start,
        method="Nelder-Mead",
        bounds=[phi_box, gamma_box],
        options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 800},
    )
    phi_hat, gamma_hat = float(res.x[0]), float(res.x[1])
    if phi_flat:
        flags.append("phi_unidentifiable")
        phi_hat = math.nan
    if gam_flat:
        flags.append("gamma_unidentifiable")
        gamma_hat = math.nan
    elif gamma_hat <= gamma_box[0] * (1 + 1e-6):
        flags.append("gamma_at_boundary")
    return MLEResult(phi_hat, gamma_hat, tuple(flags), -float(res.fun))


@dataclass(frozen=True, eq=False)
class CoarseGrid:
    """Precomputed model tables on the coarse search grid, shareable across
    replications of the same configuration."""

    phi_values: np.ndarray
    gamma_values: np.ndarray
    weights: np.ndarray  # (n_phi, n_gam, n_modes)
    probs: list  # [mode] -> (n_phi, n_gam, n_outcomes)

    def evaluate(self, counts, experiment) -> np.ndarray:
        shots = float(experiment.shots)
        out = np.zeros((self.phi_values.size, self.gamma_values.size))
        for idx, c in enumerate(counts):
            seen = np.flatnonzero(c > 0)
            if seen.size == 0:
                continue
            joint = self.weights[:, :, idx, None] * self.probs[idx][:, :, seen]
            with np.errstate(divide="ignore"):
                out += np.where(joint > 0, np.log(np.where(joint > 0, joint, 1.0)), -np.inf) @ c[seen]
        return out / shots


def coarse_grid(
    experiment: Experiment,
    phi_box: tuple[float, float] = PHI_BOX,
    gamma_box: tuple[float, float] = GAMMA_BOX,
    steps: int = 64,
) -> CoarseGrid:
    phis = np.linspace(phi_box[0], phi_box[1], steps, endpoint=False)
    gams = np.linspace(gamma_box[0], gamma_box[1], steps)
    n_modes = len(experiment.mode_labels)
    weights = np.zeros((steps, steps, n_modes))
    probs = None
    for i, phi in enumerate(phis):
        for j, gam in enumerate(gams):
            tables = model_tables(
                SensorModel(float(phi), float(gam)), experiment.ma, experiment.ps, experiment.povm
            )
            weights[i, j] = tables.weights
            if probs is None:
                probs = [
                    np.zeros((steps, steps, p.size)) for p in tables.outcome_probs
                ]
            for idx, p in enumerate(tables.outcome_probs):
                probs[idx][i, j] = p
    return CoarseGrid(phi_values=phis, gamma_values=gams, weights=weights, probs=probs)


# ---------------------------------------------------------------------------
# replications and the covariance bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EstimateSet:
    """Per-replication maximum-likelihood estimates."""

    estimates: np.ndarray  # (R, 2)
    flags: tuple
    replications: int
    shots: int
    seed: int

    def covariance(self) -> np.ndarray:
        if self.replications < 2:
            raise ValueError("cannot form a covariance from fewer than 2 replications")
        return np.cov(self.estimates, rowvar=False, ddof=1)


def replicate(
    sensor: SensorModel,
    ma: MAModel,
    ps: PostselectionSpec,
    povm,
    shots: int,
    replications: int,
    seed: int,
) -> EstimateSet:
    """Independent sample-and-fit replications; replication r uses the
    derived seed (seed, r)."""
    if replications < 1:
        raise ValueError("need at least one replication")
    estimates = np.zeros((replications, 2))
    flags = []
    cache = None
    for r in range(replications):
        exp = sample_experiment(sensor, ma, ps, povm, shots, (seed, r))
        if cache is None:
            cache = coarse_grid(exp)
        fit = mle(exp, coarse_cache=cache)
        estimates[r] = [fit.phi_hat, fit.gamma_hat]
        flags.append(fit.flags)
    return EstimateSet(
        estimates=estimates,
        flags=tuple(flags),
        replications=replications,
        shots=shots,
        seed=seed,
    )


@dataclass(frozen=True, eq=False)
class CovarianceReport:
    """M-scaled estimator covariance against the inverse classical matrix."""

    scaled_cov: np.ndarray
    f_inv: np.ndarray
    min_eig_gap: float
    rel_diag_gaps: np.ndarray
    replications: int
    shots: int


def covariance_vs_bound(estimates: EstimateSet, cfim: np.ndarray, shots: int) -> CovarianceReport:
    """Compare M * Cov(estimates) with F^{-1} (the pCCRB floor)."""
    if not np.all(np.isfinite(estimates.estimates)):
        raise ValueError("estimate set contains unidentifiable fits")
    cov = estimates.covariance()
    scaled = shots * cov
    f_inv = invert_sym_2x2(np.asarray(cfim, dtype=float))
    return CovarianceReport(
        scaled_cov=scaled,
        f_inv=f_inv,
        min_eig_gap=psd_min_eig(scaled - f_inv),
        rel_diag_gaps=(np.diag(scaled) - np.diag(f_inv)) / np.diag(f_inv),
        replications=estimates.replications,
        shots=shots,
    )
