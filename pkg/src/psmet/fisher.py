"""SLDs and Fisher information matrices for parameterized density families.

Works on two state representations: dense Hermitian matrices (qubit path,
and anything a caller brings) and the grid low-rank form produced by
postselecting a Gaussian apparatus. Low-rank states are projected onto the
small subspace spanned by the mode vectors and their parameter derivatives
before any spectral work, so grid size never enters the eigenproblems.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .linalg import eig_hermitian, grid_inner, inv_psd, orthonormalize
from .models import (
    DEGENERATE_WEIGHT,
    LowRankState,
    Mode,
    ModeEnsemble,
    SensorModel,
    outcome_derivative,
    outcome_distribution,
    sensor_state,
)

log = logging.getLogger(__name__)

# Spectral terms with eigenvalue sum below SUPPORT_EPS_REL * lambda_max are
# dropped (extended-support convention; keeps the rank-deficient boundary
# gamma_fluct -> 0 finite).
SUPPORT_EPS_REL = 1e-10

# A state derivative must not carry weight outside the retained support plus
# its image; beyond this relative tolerance the family itself is invalid.
OFF_SUPPORT_TOL = 1e-8


@dataclass(frozen=True)
class ParamFamily:
    """A parameterized density-matrix family with analytic derivatives.

    ``eval(point)`` returns ``(rho, [drho_1, ..., drho_d])`` at the given
    parameter point.
    """

    eval: Callable[[np.ndarray], tuple[np.ndarray, Sequence[np.ndarray]]]
    param_names: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.param_names)


def sensor_family() -> ParamFamily:
    """The shipped two-parameter sensor channel as a ParamFamily."""

    def _eval(point):
        st = sensor_state(SensorModel(float(point[0]), float(point[1])))
        return st.matrix, st.derivs

    return ParamFamily(eval=_eval, param_names=("phi", "gamma_fluct"))


def finite_difference_derivs(
    eval_state: Callable[[np.ndarray], np.ndarray],
    point: np.ndarray,
    step: float = 1e-5,
    relative: bool = True,
) -> list[np.ndarray]:
    """Central finite differences of a matrix-valued map; cross-check path
    for the analytic derivatives, never used by the production pipeline."""
    point = np.asarray(point, dtype=float)
    out = []
    for a in range(point.size):
        h = step * max(abs(point[a]), 1.0) if relative else step
        hi = point.copy()
        lo = point.copy()
        hi[a] += h
        lo[a] -= h
        out.append((eval_state(hi) - eval_state(lo)) / (2 * h))
    return out


# ---------------------------------------------------------------------------
# SLD and QFIM on dense matrices
# ---------------------------------------------------------------------------

def _spectral(rho: np.ndarray, support_eps: float | None):
    vals, vecs = eig_hermitian(rho)
    eps = SUPPORT_EPS_REL * max(vals[0], 0.0) if support_eps is None else support_eps
    return vals, vecs, eps


def sld(rho: np.ndarray, drho: np.ndarray, support_eps: float | None = None) -> np.ndarray:
    """Symmetric logarithmic derivative: the Hermitian solution of
    L rho + rho L = 2 drho on the retained support of rho."""
    vals, vecs, eps = _spectral(rho, support_eps)
    m = vecs.conj().T @ drho @ vecs
    denom = vals[:, None] + vals[None, :]
    keep = denom > eps
    dropped = np.abs(np.where(keep, 0.0, m)).max()
    scale = max(float(np.abs(m).max()), 1.0)
    if dropped > OFF_SUPPORT_TOL * scale:
        raise ValueError(
            f"state derivative has weight {dropped:.3e} outside the retained "
            "support; the family is not differentiable there"
        )
    core = np.where(keep, 2.0 * m / np.where(keep, denom, 1.0), 0.0)
    return vecs @ core @ vecs.conj().T


def qfim_from_derivs(
    rho: np.ndarray,
    drhos: Sequence[np.ndarray],
    support_eps: float | None = None,
) -> np.ndarray:
    """Quantum Fisher information matrix H_ab = Tr[rho (L_a L_b + L_b L_a)]/2.

    Small problems go through explicit SLD products; above dimension 8 the
    numerically identical spectral double-sum is used instead (cheaper, and
    never forms L on a large space).
    """
    d = len(drhos)
    out = np.zeros((d, d))
    if rho.shape[0] <= 8:
        slds = [sld(rho, dr, support_eps) for dr in drhos]
        for a in range(d):
            for b in range(a, d):
                anti = slds[a] @ slds[b] + slds[b] @ slds[a]
                out[a, b] = out[b, a] = float(np.trace(rho @ anti).real) / 2
        return out
    vals, vecs, eps = _spectral(rho, support_eps)
    ms = [vecs.conj().T @ dr @ vecs for dr in drhos]
    denom = vals[:, None] + vals[None, :]
    keep = denom > eps
    safe = np.where(keep, denom, 1.0)
    for a in range(d):
        for b in range(a, d):
            terms = np.where(keep, 2.0 * (ms[a] * ms[b].T).real / safe, 0.0)
            out[a, b] = out[b, a] = float(terms.sum())
    return out


def qfim(family: ParamFamily, point) -> np.ndarray:
    """QFIM of ``family`` at ``point``."""
    rho, drhos = family.eval(np.asarray(point, dtype=float))
    return qfim_from_derivs(rho, drhos)


def commutator_trace(rho: np.ndarray, l_a: np.ndarray, l_b: np.ndarray) -> complex:
    """Tr[rho (L_a L_b - L_b L_a)]; purely imaginary for Hermitian inputs."""
    return complex(np.trace(rho @ (l_a @ l_b - l_b @ l_a)))


# ---------------------------------------------------------------------------
# low-rank (Gaussian) modes: subspace projection
# ---------------------------------------------------------------------------

def mode_frame(mode: Mode) -> tuple[np.ndarray, list[np.ndarray]]:
    """Conditional state and derivatives of a mode as small dense matrices.

    Dense modes pass through; low-rank modes are projected onto the
    orthonormalized span of their vectors and derivative vectors (dimension
    at most 2 + 2d), which contains the state support and every derivative's
    image exactly.
    """
    if not isinstance(mode.state, LowRankState):
        return np.asarray(mode.state), [np.asarray(d) for d in mode.dstate]
    st = mode.state
    gens = list(st.vectors) + [dv for d in mode.dstate for dv in d.dvectors]
    basis = orthonormalize(st.grid, gens)
    nb = basis.shape[0]
    coords = np.array(
        [[grid_inner(st.grid, basis[a], v) for v in st.vectors] for a in range(nb)]
    )  # (nb, r)
    rho = (coords * st.coeffs) @ coords.conj().T
    drhos = []
    for d in mode.dstate:
        dcoords = np.array(
            [[grid_inner(st.grid, basis[a], dv) for dv in d.dvectors] for a in range(nb)]
        )
        dr = (coords * d.dcoeffs) @ coords.conj().T
        dr += (dcoords * st.coeffs) @ coords.conj().T
        dr += (coords * st.coeffs) @ dcoords.conj().T
        drhos.append(dr)
    return rho, drhos


# ---------------------------------------------------------------------------
# postselected information matrices
# ---------------------------------------------------------------------------

def pqfim(
    ensemble: ModeEnsemble, support_eps: float | None = None
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Postselected QFIM: weighted sum of the conditional-state QFIMs.

    Returns the total and the per-mode contributions (already weighted);
    degenerate modes contribute zero.
    """
    d = len(ensemble.param_names)
    per_mode: dict[str, np.ndarray] = {}
    for mode in ensemble:
        if mode.degenerate:
            log.info("mode %r is degenerate (weight %.3e); contributes zero", mode.label, mode.weight)
            per_mode[mode.label] = np.zeros((d, d))
            continue
        rho, drhos = mode_frame(mode)
        per_mode[mode.label] = mode.weight * qfim_from_derivs(rho, drhos, support_eps)
    total = np.zeros((d, d))
    for mode in ensemble:
        total = total + per_mode[mode.label]
    return total, per_mode


# Outcomes with probability below this are excluded from the classical sum,
# provided their derivative is compatibly small.
PROB_FLOOR = 1e-250
DPROB_FLOOR = 1e-120


def pcfim(
    ensemble: ModeEnsemble, povm
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Postselected classical FIM for a measurement on each mode.

    ``povm`` is either a single POVM applied to every mode or a mapping from
    mode label to POVM. Only the conditional outcome probabilities are
    differentiated; the weights enter as prefactors (their own information
    lives in :func:`weight_fisher`).
    """
    d = len(ensemble.param_names)
    per_mode: dict[str, np.ndarray] = {}
    for mode in ensemble:
        if mode.degenerate:
            log.info("mode %r is degenerate (weight %.3e); contributes zero", mode.label, mode.weight)
            per_mode[mode.label] = np.zeros((d, d))
            continue
        mode_povm = povm[mode.label] if isinstance(povm, dict) else povm
        probs = outcome_distribution(mode.state, mode_povm)
        dprobs = np.array(
            [outcome_derivative(mode.state, mode.dstate[a], mode_povm) for a in range(d)]
        )
        mask = probs > PROB_FLOOR
        bad = ~mask & (np.abs(dprobs).max(axis=0) > DPROB_FLOOR)
        if np.any(bad):
            raise ValueError(
                "outcome with zero probability but nonzero derivative: "
                "the measurement is not differentiable at this point"
            )
        f = np.zeros((d, d))
        for a in range(d):
            for b in range(a, d):
                val = float(np.sum(dprobs[a][mask] * dprobs[b][mask] / probs[mask]))
                f[a, b] = f[b, a] = val
        per_mode[mode.label] = mode.weight * f
    total = np.zeros((d, d))
    for mode in ensemble:
        total = total + per_mode[mode.label]
    return total, per_mode


def mode_commutator_traces(
    ensemble: ModeEnsemble,
    params: tuple[int, int] = (0, 1),
    support_eps: float | None = None,
) -> dict[str, complex]:
    """Tr[rho_mode [L_a, L_b]] per mode, with both SLDs built on the same
    retained support."""
    a, b = params
    out: dict[str, complex] = {}
    for mode in ensemble:
        if mode.degenerate:
            out[mode.label] = 0.0 + 0.0j
            continue
        rho, drhos = mode_frame(mode)
        l_a = sld(rho, drhos[a], support_eps)
        l_b = sld(rho, drhos[b], support_eps)
        out[mode.label] = commutator_trace(rho, l_a, l_b)
    return out


def weight_fisher(ensemble: ModeEnsemble) -> np.ndarray:
    """Classical information carried by the mode weights alone:
    sum_modes (dw)(dw)^T / w. Non-negative by construction; this is the gap
    term between the postselected QFIM and the joint-measurement QFIM."""
    d = len(ensemble.param_names)
    out = np.zeros((d, d))
    for mode in ensemble:
        if mode.weight <= DEGENERATE_WEIGHT:
            if np.abs(mode.dweight).max() > DPROB_FLOOR:
                raise ValueError(
                    f"mode {mode.label!r} has vanishing weight but nonzero "
                    "weight derivative; weight information diverges"
                )
            continue
        out += np.outer(mode.dweight, mode.dweight) / mode.weight
    return out


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FisherReport:
    """All information matrices of one configuration, plus the tradeoffs.

    ``cfim``/``qfim`` are the postselected classical/quantum matrices,
    ``sensor_qfim`` the matrix of the bare sensor; per-mode dicts hold the
    weighted contributions. Tradeoffs are Tr[F H^-1] and Tr[Q H^-1].
    """

    cfim: np.ndarray
    qfim: np.ndarray
    sensor_qfim: np.ndarray
    cfim_by_mode: dict
    qfim_by_mode: dict
    commutator_traces: dict
    weight_info: np.ndarray
    tradeoff_classical: float
    tradeoff_quantum: float


def fisher_report(ensemble: ModeEnsemble, povm, sensor_qfim: np.ndarray) -> FisherReport:
    """Assemble the full report for one ensemble and measurement choice."""
    f_total, f_modes = pcfim(ensemble, povm)
    q_total, q_modes = pqfim(ensemble)
    h_inv = inv_psd(sensor_qfim)
    return FisherReport(
        cfim=f_total,
        qfim=q_total,
        sensor_qfim=np.asarray(sensor_qfim, dtype=float),
        cfim_by_mode=f_modes,
        qfim_by_mode=q_modes,
        commutator_traces=mode_commutator_traces(ensemble),
        weight_info=weight_fisher(ensemble),
        tradeoff_classical=float(np.trace(f_total @ h_inv).real),
        tradeoff_quantum=float(np.trace(q_total @ h_inv).real),
    )
