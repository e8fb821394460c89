"""Analytic results for the phase + phase-fluctuation estimation examples.

Every function here is a direct scalar/matrix evaluation of a closed-form
expression; the numeric engine in :mod:`psmet.fisher` is validated against
these, and vice versa. Most formulas are only exact on a restricted domain
(postselection angle pi/2 and/or vanishing phase); see VALIDITY below.

Notation used throughout: ``gam`` is the phase-fluctuation strength, ``sigma``
the Gaussian apparatus width, ``theta`` the qubit apparatus preparation angle,
``gamma_ps`` the postselection angle, and ``a_par = pi^2 / (8 sigma^2)`` the
combination the Gaussian results are written in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Below this the fluctuation parameter is treated as zero and series limits
# are returned instead of the raw formulas (which hit 0/0).
GAMMA_SERIES_CUTOFF = 1e-6

# Validity domain of each closed form; callers may evaluate outside it, but
# results are then only approximate and reporting layers flag that.
VALIDITY = {
    "sensor_qfim": "any (phi, gamma_fluct)",
    "gaussian_w_success": "any (phi, gamma_ps)",
    "gaussian_momentum_pdf": "any (phi, gamma_ps)",
    "gaussian_pqfim": "gamma_ps = pi/2, phi -> 0",
    "gaussian_tradeoff_quantum": "gamma_ps = pi/2, phi -> 0",
    "gaussian_mode_geometry": "phi -> 0 (cross terms); gamma_ps = pi/2 (norms)",
    "qubit_w_success": "any (phi, gamma_ps)",
    "qubit_commutator_traces": "any (phi, gamma_ps)",
    "qubit_pqfim": "gamma_ps = pi/2, phi -> 0",
    "qubit_tradeoffs": "gamma_ps = pi/2, phi -> 0",
    "qubit_conditional_matrices": "any (phi, gamma_ps)",
}


@dataclass(frozen=True)
class GaussianParams:
    sigma: float
    gamma_fluct: float
    gamma_ps: float = math.pi / 2
    phi: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.gamma_fluct < 0:
            raise ValueError("gamma_fluct must be non-negative")

    @property
    def a_par(self) -> float:
        return math.pi**2 / (8 * self.sigma**2)


@dataclass(frozen=True)
class QubitParams:
    theta: float
    gamma_fluct: float
    gamma_ps: float = math.pi / 2
    phi: float = 0.0
    theta_meas: float = math.pi / 2

    def __post_init__(self):
        if self.gamma_fluct < 0:
            raise ValueError("gamma_fluct must be non-negative")


# ---------------------------------------------------------------------------
# sensor
# ---------------------------------------------------------------------------

def sensor_qfim(gam: float) -> np.ndarray:
    """Sensor information matrix diag(exp(-2 gam^2), 4 gam^2/(e^{2 gam^2}-1))."""
    if gam < 0:
        raise ValueError("gamma_fluct must be non-negative")
    if gam < GAMMA_SERIES_CUTOFF:
        return np.diag([1.0, 2.0])
    return np.diag([math.exp(-2 * gam**2), 4 * gam**2 / math.expm1(2 * gam**2)])


# ---------------------------------------------------------------------------
# Gaussian measurement apparatus
# ---------------------------------------------------------------------------

def gaussian_w_success(params: GaussianParams) -> float:
    """Success probability (1 + e^{-gam^2 - a} cos(phi) sin(gamma_ps)) / 2."""
    return 0.5 * (
        1.0
        + math.exp(-params.gamma_fluct**2 - params.a_par)
        * math.cos(params.phi)
        * math.sin(params.gamma_ps)
    )


def gaussian_pqfim(gam: float, sigma: float) -> np.ndarray:
    """Postselected quantum information matrix of the Gaussian apparatus.

    Valid at postselection angle pi/2 in the phi -> 0 limit. The
    fluctuation-fluctuation entry is written with the sinh-ratio expanded to
    exponentials so it stays finite for very small sigma.
    """
    a = math.pi**2 / (8 * sigma**2)
    # sinh(a)/sinh(g2+a) = (1 - e^{-2a}) / (e^{g2} - e^{-g2-2a}); this form
    # cannot overflow for small sigma (large a)
    sinh_ratio = -math.expm1(-2 * a) / (math.exp(gam**2) - math.exp(-(gam**2) - 2 * a))
    if gam < GAMMA_SERIES_CUTOFF:
        # 2 g^2 csch(g^2) -> 2
        return np.diag([1.0, 2.0 * sinh_ratio])
    qpp = math.exp(-gam**2) / (math.cosh(gam**2) + math.sinh(gam**2) / math.tanh(a))
    qgg = 2 * gam**2 / math.sinh(gam**2) * sinh_ratio
    return np.diag([qpp, qgg])


def gaussian_tradeoff_quantum(gam: float, sigma: float) -> float:
    """Quantum tradeoff trace 2 e^{gam^2} csch(gam^2 + a) sinh(a)."""
    a = math.pi**2 / (8 * sigma**2)
    sinh_ratio = -math.expm1(-2 * a) / (math.exp(gam**2) - math.exp(-(gam**2) - 2 * a))
    return 2.0 * math.exp(gam**2) * sinh_ratio


def gaussian_momentum_pdf(p, mode: str, params: GaussianParams):
    """Momentum distribution of the postselected apparatus state.

    ``mode`` is "success" or "failure"; the failure branch follows from the
    orthogonal postselector, which flips the sign of the interference term.
    Accepts scalar or array ``p``.
    """
    p = np.asarray(p, dtype=float)
    sign = {"success": 1.0, "failure": -1.0}[mode]
    e_g = math.exp(params.gamma_fluct**2)
    s_gam = math.sin(params.gamma_ps)
    envelope = math.sqrt(2 * params.sigma**2 / math.pi) * np.exp(-2 * p**2 * params.sigma**2)
    num = envelope * (e_g + sign * s_gam * np.cos(math.pi * p + params.phi))
    den = e_g + sign * math.exp(-params.a_par) * s_gam * math.cos(params.phi)
    return num / den


@dataclass(frozen=True)
class GaussianModeGeometry:
    """Spectral data of the postselected apparatus states at phi -> 0.

    ``eigenvalues`` are the sensor-state weights; ``norms[mode]`` the squared
    norms (N_1, N_2) of the two unnormalized mode vectors; ``cross[mode]``
    the <xi_1|xi_2> overlap; ``dphi[mode]`` and ``dgam[mode]`` the 2x2 tables
    of <xi_k | d xi_l> inner products (phi and fluctuation derivatives).
    """

    eigenvalues: np.ndarray
    norms: dict
    cross: dict
    dphi: dict
    dgam: dict


def gaussian_mode_geometry(params: GaussianParams) -> GaussianModeGeometry:
    gam = params.gamma_fluct
    a = params.a_par
    e_g = math.exp(gam**2)
    e_ga = math.exp(gam**2 + a)
    s = math.sin(params.gamma_ps)
    c = math.cos(params.gamma_ps)

    lam = np.array([(1 - math.exp(-(gam**2))) / 2, (1 + math.exp(-(gam**2))) / 2])
    cross = {
        "success": e_ga * c / (e_ga + s),
        "failure": -e_ga * c / (e_ga - s),
    }
    norms = {
        "success": np.array([1 - (1 + e_g) / (1 + e_ga), 1 + (-1 + e_g) / (1 + e_ga)]),
        "failure": np.array([1 - (1 + e_g) / (1 - e_ga), 1 + (-1 + e_g) / (1 - e_ga)]),
    }
    # <xi_k | d_phi xi_l>: purely imaginary, proportional to the norm of the
    # row index; sign pattern (-, +; +, -).
    dphi = {}
    for mode in ("success", "failure"):
        n1, n2 = norms[mode]
        dphi[mode] = 0.5j * np.array([[-n1, n1], [n2, -n2]])
    dgam = {
        "success": gam * e_g / (1 + e_ga) ** 2 * np.array(
            [[math.exp(a) - 1, 0.0], [0.0, 1 + math.exp(a)]]
        ),
        "failure": gam * e_g / (1 - e_ga) ** 2 * np.array(
            [[-(1 + math.exp(a)), 0.0], [0.0, 1 - math.exp(a)]]
        ),
    }
    return GaussianModeGeometry(eigenvalues=lam, norms=norms, cross=cross, dphi=dphi, dgam=dgam)


# ---------------------------------------------------------------------------
# qubit measurement apparatus
# ---------------------------------------------------------------------------

def qubit_w_success(params: QubitParams) -> float:
    """Success probability (1 - e^{-gam^2} cos(theta) sin(gamma_ps) cos(phi)) / 2."""
    return 0.5 * (
        1.0
        - math.exp(-params.gamma_fluct**2)
        * math.cos(params.theta)
        * math.sin(params.gamma_ps)
        * math.cos(params.phi)
    )


def qubit_commutator_traces(params: QubitParams, reading: str = "sin_ps") -> tuple[complex, complex]:
    """Commutator traces Tr[rho [L_phi, L_gam]] for (success, failure).

    Two algebraic readings of the denominator exist: cos(theta)
    sin(gamma_ps) cos(phi) (``"sin_ps"``, adopted) and cos(theta) sin(theta)
    cos(phi) (``"sin_theta"``). Only the adopted one is consistent with the
    success probability and the conditional-state denominators; the numeric
    engine confirms it, and the verify command reports both deviations.
    """
    th, gam, gps, phi = params.theta, params.gamma_fluct, params.gamma_ps, params.phi
    e_g = math.exp(gam**2)
    num = 4 * gam * e_g * math.sin(th) ** 2 * math.sin(gps) ** 2 * math.cos(gps)
    if reading == "sin_ps":
        cross = math.cos(th) * math.sin(gps) * math.cos(phi)
    elif reading == "sin_theta":
        cross = math.cos(th) * math.sin(th) * math.cos(phi)
    else:
        raise ValueError(f"unknown reading {reading!r}")
    succ = -1j * num / (e_g - cross) ** 3
    fail = 1j * num / (e_g + cross) ** 3
    return succ, fail


def qubit_pqfim(theta: float, gam: float) -> np.ndarray:
    """Postselected quantum information matrix of the qubit apparatus.

    Valid at postselection angle pi/2. The fluctuation entry carries a
    hyperbolic cotangent; the circular-cotangent variant fails the sensor
    limit at theta = pi/2 and the tradeoff trace (the verify command
    evaluates both as evidence).
    """
    s = math.sin(theta)
    if abs(s) < 1e-12:
        return np.zeros((2, 2))
    c2 = math.cos(theta) ** 2
    e2 = math.exp(2 * gam**2)
    qpp = s**2 / (e2 - c2)
    if gam < GAMMA_SERIES_CUTOFF:
        # gam^2 (1 + coth gam^2) -> 1
        return np.diag([qpp, 2.0 * s**2 / (e2 - c2)])
    qgg = 2 * gam**2 * (1 + 1 / math.tanh(gam**2)) * s**2 / (e2 - c2)
    return np.diag([qpp, qgg])


def qubit_tradeoffs(theta: float, gam: float) -> tuple[float, float]:
    """(quantum, classical) tradeoff traces of the qubit apparatus.

    quantum = 2 / (csc^2 theta - e^{-2 gam^2} cot^2 theta); the classical
    tradeoff of the projective measurement family is exactly half of it,
    independent of the measurement angle.
    """
    s2 = math.sin(theta) ** 2
    if s2 == 0.0:
        return 0.0, 0.0
    quantum = 2.0 / (1.0 / s2 - math.exp(-2 * gam**2) * (1.0 - s2) / s2)
    return quantum, quantum / 2.0


@dataclass(frozen=True)
class QubitConditional:
    """Conditional apparatus states and their logarithmic derivatives."""

    rho: dict
    l_phi: dict
    l_gam: dict


def qubit_conditional_matrices(params: QubitParams) -> QubitConditional:
    """Explicit conditional states and logarithmic derivatives of the modes.

    Each rho is a valid density matrix; each L satisfies the defining
    equation L rho + rho L = 2 drho against the analytic derivative.
    """
    th, gam, gps, phi = params.theta, params.gamma_fluct, params.gamma_ps, params.phi
    e_g = math.exp(gam**2)
    sh, ch = math.sin(th / 2), math.cos(th / 2)
    s_t, s_g, c_g = math.sin(th), math.sin(gps), math.cos(gps)
    c_p, s_p = math.cos(phi), math.sin(phi)

    rho, l_phi, l_gam = {}, {}, {}
    for mode, sign in (("success", 1.0), ("failure", -1.0)):
        den = e_g - sign * math.cos(th) * s_g * c_p
        rho[mode] = np.array(
            [
                [
                    sh**2 * (e_g + sign * s_g * c_p) / den,
                    -sign * s_t * (1j * e_g * c_g + s_g * s_p) / (2 * den),
                ],
                [
                    -sign * s_t * (-1j * e_g * c_g + s_g * s_p) / (2 * den),
                    ch**2 * (e_g - sign * s_g * c_p) / den,
                ],
            ]
        )
        off = 1.0 / (math.cos(th) / s_t - sign * e_g / (s_t * s_g * c_p))
        l_phi[mode] = np.array(
            [
                [-sign * 2 * ch**2 * s_g * s_p / den, off],
                [off, sign * 2 * sh**2 * s_g * s_p / den],
            ]
        )
        pref = e_g * gam * (1.0 / math.tanh(gam**2) - 1.0) / den if gam > 0 else 0.0
        l_gam[mode] = pref * np.array(
            [
                [
                    2 * ch**2 * (1 - sign * e_g * s_g * c_p),
                    sign * s_t * (1j * c_g + e_g * s_g * s_p),
                ],
                [
                    sign * s_t * (-1j * c_g + e_g * s_g * s_p),
                    2 * sh**2 * (1 + sign * e_g * s_g * c_p),
                ],
            ]
        )
    return QubitConditional(rho=rho, l_phi=l_phi, l_gam=l_gam)
