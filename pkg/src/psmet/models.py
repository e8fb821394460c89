"""Physical models: sensor channel, measurement apparatuses, postselection.

The sensor is a two-level system carrying a phase ``phi`` and a fluctuation
strength ``gamma_fluct``. It couples to a measurement apparatus (a qubit or
a momentum-grid Gaussian mode) through a controlled-phase unitary, and is
then postselected onto a success/failure pair of states. Everything here is
built with analytic parameter derivatives attached so the Fisher layer never
needs numerical differentiation (a finite-difference path exists separately
as a cross-check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .linalg import QuadratureGrid, grid_inner, psd_min_eig, trapezoid_grid

PARAM_NAMES = ("phi", "gamma_fluct")

# Modes lighter than this are flagged degenerate: their conditional state is
# numerically undefined and they carry no information.
DEGENERATE_WEIGHT = 1e-12

# The closed forms hold in the phi -> 0 limit; numeric evaluations use this
# offset instead of coding separate limit branches.
PHI_NUMERIC_EPS = 1e-6

HALF_PI = math.pi / 2


# ---------------------------------------------------------------------------
# sensor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensorModel:
    """Parameter point (phi, gamma_fluct) of the dephased-phase channel."""

    phi: float
    gamma_fluct: float

    def __post_init__(self):
        if self.gamma_fluct < 0:
            raise ValueError("gamma_fluct must be non-negative")

    @property
    def point(self) -> np.ndarray:
        return np.array([self.phi, self.gamma_fluct])


@dataclass(frozen=True, eq=False)
class SensorState:
    """Sensor density matrix with its analytic parameter derivatives."""

    matrix: np.ndarray
    derivs: tuple[np.ndarray, np.ndarray]


def sensor_state(model: SensorModel) -> SensorState:
    """Channel output [[1, e^{-i phi - gam^2}], [e^{i phi - gam^2}, 1]] / 2."""
    phi, gam = model.phi, model.gamma_fluct
    off = np.exp(-1j * phi - gam**2) / 2
    rho = np.array([[0.5, off], [np.conj(off), 0.5]])
    d_phi = np.array([[0.0, -1j * off], [1j * np.conj(off), 0.0]])
    d_gam = np.array([[0.0, -2 * gam * off], [-2 * gam * np.conj(off), 0.0]])
    return SensorState(matrix=rho, derivs=(d_phi, d_gam))


@dataclass(frozen=True, eq=False)
class SensorSpectral:
    """Eigen-decomposition of the sensor state with parameter derivatives.

    ``values[k]`` are (1 -+ e^{-gam^2})/2 and ``vectors[:, k]`` the matching
    eigenvectors (-e^{-i phi}, 1)/sqrt2 and (e^{-i phi}, 1)/sqrt2; dvalues and
    dvectors are indexed [param][...].
    """

    values: np.ndarray
    dvalues: np.ndarray
    vectors: np.ndarray
    dvectors: np.ndarray


def sensor_spectral(model: SensorModel) -> SensorSpectral:
    phi, gam = model.phi, model.gamma_fluct
    e = math.exp(-(gam**2))
    values = np.array([(1 - e) / 2, (1 + e) / 2])
    dvalues = np.array([[0.0, 0.0], [gam * e, -gam * e]])
    u = np.exp(-1j * phi) / math.sqrt(2)
    vectors = np.array([[-u, u], [1 / math.sqrt(2), 1 / math.sqrt(2)]])
    dvectors = np.array(
        [
            [[1j * u, -1j * u], [0.0, 0.0]],
            [[0.0, 0.0], [0.0, 0.0]],
        ]
    )
    return SensorSpectral(values=values, dvalues=dvalues, vectors=vectors, dvectors=dvectors)


# ---------------------------------------------------------------------------
# measurement apparatuses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QubitMA:
    """Two-level apparatus prepared in sin(theta/2)|0> + cos(theta/2)|1>."""

    theta: float
    coupling: float = HALF_PI

    @property
    def initial_state(self) -> np.ndarray:
        return np.array([math.sin(self.theta / 2), math.cos(self.theta / 2)])


@dataclass(frozen=True, eq=False)
class GaussianMA:
    """Gaussian momentum-space apparatus sampled on a quadrature grid.

    The ground amplitudes (2 sigma^2/pi)^{1/4} e^{-p^2 sigma^2} must come out
    normalized on the grid to 1e-8 before the exact renormalization applied
    here; a larger defect means the grid does not resolve the state.
    """

    sigma: float
    grid: QuadratureGrid
    coupling: float = HALF_PI
    _amps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        p = self.grid.points
        raw = (2 * self.sigma**2 / math.pi) ** 0.25 * np.exp(-(p**2) * self.sigma**2)
        nrm2 = grid_inner(self.grid, raw, raw).real
        if abs(nrm2 - 1.0) > 1e-8:
            raise ValueError(
                f"grid does not resolve the ground state: quadrature norm^2 = {nrm2!r}"
            )
        amps = raw / math.sqrt(nrm2)
        amps.setflags(write=False)
        object.__setattr__(self, "_amps", amps)

    @property
    def initial_state(self) -> np.ndarray:
        return self._amps


MAModel = Union[QubitMA, GaussianMA]


def momentum_grid(sigma: float, n: int = 2048) -> QuadratureGrid:
    """Default grid: cover 8 standard deviations of the ground density and at
    least 3 periods of the cos(pi p) interference factor."""
    half_width = max(4.0 / sigma, 6.0)
    return trapezoid_grid(-half_width, half_width, n)


def gaussian_ma(sigma: float, n: int = 2048, coupling: float = HALF_PI) -> GaussianMA:
    return GaussianMA(sigma=sigma, grid=momentum_grid(sigma, n), coupling=coupling)


@dataclass(frozen=True)
class PostselectionSpec:
    """Success state sin(g/2)|0> + cos(g/2)|1> and its orthogonal complement."""

    gamma_ps: float

    @property
    def success_state(self) -> np.ndarray:
        return np.array([math.sin(self.gamma_ps / 2), math.cos(self.gamma_ps / 2)])

    @property
    def failure_state(self) -> np.ndarray:
        return np.array([math.cos(self.gamma_ps / 2), -math.sin(self.gamma_ps / 2)])


# ---------------------------------------------------------------------------
# joint sensor-apparatus states
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QubitJoint:
    """Dense 4x4 joint state (sensor-major ordering) with derivatives."""

    matrix: np.ndarray
    derivs: tuple[np.ndarray, np.ndarray]
    ma: QubitMA


@dataclass(frozen=True, eq=False)
class GaussianJoint:
    """Rank-2 joint state sum_k values[k] |Psi_k><Psi_k|.

    amplitudes[k, s, :] holds the apparatus amplitudes of eigen-branch k in
    sensor component s, already evolved by the coupling phases; damplitudes
    is indexed [param, k, s, :].
    """

    values: np.ndarray
    dvalues: np.ndarray
    amplitudes: np.ndarray
    damplitudes: np.ndarray
    grid: QuadratureGrid
    ma: GaussianMA


Joint = Union[QubitJoint, GaussianJoint]


def joint_state(sensor: SensorModel, ma: MAModel) -> Joint:
    """Couple the sensor output to the apparatus: U (rho x |xi><xi|) U^dag
    with U = exp(-i g sigma_z x M), M the number projector (qubit) or the
    momentum operator (Gaussian, diagonal on the grid)."""
    if isinstance(ma, QubitMA):
        state = sensor_state(sensor)
        xi = ma.initial_state
        proj = np.outer(xi, xi)
        g = ma.coupling
        # sensor-major basis (s, m); sigma_z |0> = +|0>
        u = np.diag([1.0, np.exp(-1j * g), 1.0, np.exp(1j * g)])
        to_joint = lambda m: u @ np.kron(m, proj) @ u.conj().T
        return QubitJoint(
            matrix=to_joint(state.matrix),
            derivs=(to_joint(state.derivs[0]), to_joint(state.derivs[1])),
            ma=ma,
        )
    if isinstance(ma, GaussianMA):
        spec = sensor_spectral(sensor)
        xi = ma.initial_state
        p = ma.grid.points
        phase = np.exp(-1j * ma.coupling * p)  # sensor |0> branch; |1> gets conj
        amps = np.empty((2, 2, p.size), dtype=complex)
        damps = np.empty((2, 2, 2, p.size), dtype=complex)
        for k in range(2):
            amps[k, 0] = spec.vectors[0, k] * phase * xi
            amps[k, 1] = spec.vectors[1, k] * np.conj(phase) * xi
            for a in range(2):
                damps[a, k, 0] = spec.dvectors[a][0, k] * phase * xi
                damps[a, k, 1] = spec.dvectors[a][1, k] * np.conj(phase) * xi
        return GaussianJoint(
            values=spec.values,
            dvalues=spec.dvalues,
            amplitudes=amps,
            damplitudes=damps,
            grid=ma.grid,
            ma=ma,
        )
    raise TypeError(f"unsupported measurement apparatus {type(ma).__name__}")


# ---------------------------------------------------------------------------
# postselection
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LowRankState:
    """Apparatus state sum_k coeffs[k] |vectors[k]><vectors[k]| on a grid.

    The vectors are not normalized; sum_k coeffs[k] <v_k|v_k> = 1.
    """

    grid: QuadratureGrid
    coeffs: np.ndarray
    vectors: np.ndarray

    def diagonal(self) -> np.ndarray:
        """Pointwise density rho(p_i, p_i) (no quadrature weights)."""
        return np.einsum("k,ki->i", self.coeffs, np.abs(self.vectors) ** 2).real

    def dense(self) -> np.ndarray:
        """Weight-folded dense matrix sqrt(w_i) rho(p_i,p_j) sqrt(w_j)."""
        sq = np.sqrt(self.grid.weights)
        v = self.vectors * sq
        return np.einsum("k,ki,kj->ij", self.coeffs, v, v.conj())


@dataclass(frozen=True, eq=False)
class LowRankDeriv:
    """Parameter derivative of a LowRankState:
    d rho = sum_k dcoeffs[k] |v_k><v_k| + coeffs[k](|dv_k><v_k| + h.c.)."""

    dcoeffs: np.ndarray
    dvectors: np.ndarray

    def diagonal(self, state: LowRankState) -> np.ndarray:
        base = np.einsum("k,ki->i", self.dcoeffs, np.abs(state.vectors) ** 2).real
        cross = 2 * np.einsum("k,ki->i", state.coeffs, (state.vectors.conj() * self.dvectors).real)
        return base + cross

    def dense(self, state: LowRankState) -> np.ndarray:
        sq = np.sqrt(state.grid.weights)
        v = state.vectors * sq
        dv = self.dvectors * sq
        out = np.einsum("k,ki,kj->ij", self.dcoeffs, v, v.conj())
        out += np.einsum("k,ki,kj->ij", state.coeffs, dv, v.conj())
        out += np.einsum("k,ki,kj->ij", state.coeffs, v, dv.conj())
        return out


ModeState = Union[np.ndarray, LowRankState]


@dataclass(frozen=True, eq=False)
class Mode:
    """One postselection outcome: weight, conditional state, derivatives."""

    label: str
    weight: float
    dweight: np.ndarray
    state: ModeState | None
    dstate: tuple | None
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class ModeEnsemble:
    """All postselection modes; weights sum to one."""

    modes: tuple[Mode, ...]
    param_names: tuple[str, ...] = PARAM_NAMES

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, label: str) -> Mode:
        for mode in self.modes:
            if mode.label == label:
                return mode
        raise KeyError(label)

    @property
    def total_weight(self) -> float:
        return float(sum(m.weight for m in self.modes))


def _postselect_qubit(joint: QubitJoint, ps: PostselectionSpec) -> ModeEnsemble:
    modes = []
    for label, sel in (("success", ps.success_state), ("failure", ps.failure_state)):
        proj = np.kron(sel.reshape(2, 1), np.eye(2))  # (4, 2)
        tilde = proj.conj().T @ joint.matrix @ proj
        weight = float(tilde.trace().real)
        dtilde = [proj.conj().T @ dj @ proj for dj in joint.derivs]
        dweight = np.array([float(dt.trace().real) for dt in dtilde])
        if weight < DEGENERATE_WEIGHT:
            modes.append(Mode(label, weight, dweight, None, None, degenerate=True))
            continue
        rho = tilde / weight
        drho = tuple((dt - dw * rho) / weight for dt, dw in zip(dtilde, dweight))
        modes.append(Mode(label, weight, dweight, rho, drho))
    return ModeEnsemble(modes=tuple(modes))


def _postselect_gaussian(joint: GaussianJoint, ps: PostselectionSpec) -> ModeEnsemble:
    grid = joint.grid
    modes = []
    for label, sel in (("success", ps.success_state), ("failure", ps.failure_state)):
        # eta_k(p) = <sel | Psi_k(., p)>, the unnormalized mode vectors
        eta = np.einsum("s,ksi->ki", sel, joint.amplitudes)
        deta = np.einsum("s,aksi->aki", sel, joint.damplitudes)
        norms = np.array([grid_inner(grid, eta[k], eta[k]).real for k in range(2)])
        weight = float(joint.values @ norms)
        dweight = np.empty(2)
        for a in range(2):
            cross = np.array(
                [2 * grid_inner(grid, eta[k], deta[a, k]).real for k in range(2)]
            )
            dweight[a] = joint.dvalues[a] @ norms + joint.values @ cross
        if weight < DEGENERATE_WEIGHT:
            modes.append(Mode(label, weight, dweight, None, None, degenerate=True))
            continue
        # conditional state sum_k lambda_k |xi_k><xi_k| with xi_k = eta_k/sqrt(w)
        xi = eta / math.sqrt(weight)
        state = LowRankState(grid=grid, coeffs=joint.values.copy(), vectors=xi)
        dstate = []
        for a in range(2):
            dxi = (deta[a] - (dweight[a] / (2 * weight)) * eta) / math.sqrt(weight)
            dstate.append(LowRankDeriv(dcoeffs=joint.dvalues[a].copy(), dvectors=dxi))
        modes.append(Mode(label, weight, dweight, state, tuple(dstate)))
    return ModeEnsemble(modes=tuple(modes))


def postselect(joint: Joint, ps: PostselectionSpec) -> ModeEnsemble:
    """Split the joint state into success/failure modes with their weights,
    conditional apparatus states, and parameter derivatives."""
    if isinstance(joint, QubitJoint):
        return _postselect_qubit(joint, ps)
    if isinstance(joint, GaussianJoint):
        return _postselect_gaussian(joint, ps)
    raise TypeError(f"unsupported joint state {type(joint).__name__}")


def build_ensemble(sensor: SensorModel, ma: MAModel, ps: PostselectionSpec) -> ModeEnsemble:
    """Convenience: channel output -> coupling -> postselection."""
    return postselect(joint_state(sensor, ma), ps)


# ---------------------------------------------------------------------------
# measurement outcomes
# ---------------------------------------------------------------------------

class MomentumPOVM:
    """Marker for the grid family {w_i |p_i><p_i|} on a Gaussian apparatus."""

    def __repr__(self):
        return "MomentumPOVM()"


MOMENTUM_POVM = MomentumPOVM()


def projective_povm(theta_meas: float) -> list[np.ndarray]:
    """Qubit measurement bases cos(t/2)|0> + sin(t/2)|1> and its orthogonal."""
    b0 = np.array([math.cos(theta_meas / 2), math.sin(theta_meas / 2)])
    b1 = np.array([math.sin(theta_meas / 2), -math.cos(theta_meas / 2)])
    return [np.outer(b0, b0), np.outer(b1, b1)]


def _validate_povm(povm: Sequence[np.ndarray], dim: int) -> None:
    total = np.zeros((dim, dim), dtype=complex)
    for el in povm:
        el = np.asarray(el)
        if el.shape != (dim, dim):
            raise ValueError(f"POVM element shape {el.shape} does not match dim {dim}")
        if psd_min_eig(el) < -1e-10:
            raise ValueError("POVM element is not positive semidefinite")
        total += el
    if np.abs(total - np.eye(dim)).max() > 1e-10:
        raise ValueError("POVM is incomplete: elements do not sum to identity")


def outcome_distribution(state: ModeState, povm) -> np.ndarray:
    """Outcome probabilities P(k) = Tr[rho Pi_k], clipped of rounding-level
    negatives. For a grid POVM on a low-rank state this is the weighted
    diagonal density."""
    if isinstance(state, LowRankState):
        if not isinstance(povm, MomentumPOVM):
            raise ValueError("grid-sampled states support only the momentum POVM")
        probs = state.grid.weights * state.diagonal()
    else:
        if isinstance(povm, MomentumPOVM):
            raise ValueError("the momentum POVM applies only to grid-sampled states")
        rho = np.asarray(state)
        _validate_povm(povm, rho.shape[0])
        probs = np.array([float(np.trace(rho @ el).real) for el in povm])
    if probs.min() < -1e-12:
        raise ValueError(f"outcome probability {probs.min():.3e} below rounding floor")
    probs = np.clip(probs, 0.0, None)
    if abs(probs.sum() - 1.0) > 1e-8:
        raise ValueError(f"outcome probabilities sum to {probs.sum()!r}, not 1")
    return probs


def outcome_derivative(state: ModeState, dstate, povm) -> np.ndarray:
    """d P(k) for the same POVM, from the analytic state derivative."""
    if isinstance(state, LowRankState):
        if not isinstance(povm, MomentumPOVM):
            raise ValueError("grid-sampled states support only the momentum POVM")
        return state.grid.weights * dstate.diagonal(state)
    if isinstance(povm, MomentumPOVM):
        raise ValueError("the momentum POVM applies only to grid-sampled states")
    drho = np.asarray(dstate)
    return np.array([float(np.trace(drho @ el).real) for el in povm])
