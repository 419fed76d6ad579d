"""The delayed heat and transport equations on [0, 1] as spectral problems.

heat:       A phi = phi'' + sigma phi, Dirichlet;   lambda_n = -n^2 pi^2 + sigma, modes sin(n pi x)
transport:  A phi = phi' + sigma phi;               lambda_n = 2 n pi i + sigma, modes exp(2 n pi i x), |n| <= N
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotHyperbolic
from .mild import BoundedMap, Nonlinearity, ProblemSpec, theta_terms
from .pap import ErgodicTerm, PAPFunction, TrigPolynomial
from .spectral import SpectralOperator, estimate_constants, fractional_weights

HYPERBOLIC_TOL = 1e-9
PHYSICAL_POINTS = 512

DEFAULT_FORCING = {
    "frequencies": [1.0, math.sqrt(2.0)],
    "amplitude": 1.0,
    "f_amplitude": 0.1,
    "ergodic": [{"kind": "exp-decay", "rate": 1.0, "amplitude": 1.0}],
}


@dataclass(frozen=True)
class HeatModel:
    sigma: float
    n_modes: int = 16

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be at least 1")
        n = self.mode_numbers
        hit = np.abs(self.sigma - n ** 2 * math.pi ** 2) <= HYPERBOLIC_TOL
        if np.any(hit):
            raise NotHyperbolic(f"sigma = {self.sigma} equals n^2 pi^2 for n = {int(n[hit][0])}")

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1)

    def eigenvalues(self) -> np.ndarray:
        return -(self.mode_numbers ** 2) * math.pi ** 2 + self.sigma

    def operator(self) -> SpectralOperator:
        # real spectrum left of the vertex: any theta in (pi/2, pi) works
        return SpectralOperator(self.eigenvalues(), omega=self.sigma, theta=0.75 * math.pi, indices=self.mode_numbers)

    def decay_profile(self, beta: float) -> np.ndarray:
        return self.mode_numbers ** (-2.0 * beta - 1.0)

    def beta_bound(self, beta: float) -> float:
        """Uniform-in-N bound on |lambda_n|^beta n^(-2 beta - 1)."""
        return (math.pi ** 2 + abs(self.sigma)) ** beta

    def basis(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.sin(math.pi * x[..., None] * self.mode_numbers)


@dataclass(frozen=True)
class TransportModel:
    sigma: float
    n_modes: int = 8

    def __post_init__(self):
        if self.n_modes < 0:
            raise ValueError("n_modes must be nonnegative")
        if abs(self.sigma) <= HYPERBOLIC_TOL:
            raise NotHyperbolic("sigma = 0 puts the transport spectrum on the imaginary axis")

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1)

    def eigenvalues(self) -> np.ndarray:
        return 2j * math.pi * self.mode_numbers + self.sigma

    def operator(self) -> SpectralOperator:
        theta = 0.6 * math.pi
        reach = 2 * math.pi * max(self.n_modes, 1) / math.tan(math.pi - theta)
        omega = self.sigma + 1.5 * reach + 1.0
        return SpectralOperator(self.eigenvalues(), omega=omega, theta=theta, indices=self.mode_numbers)

    def decay_profile(self, beta: float) -> np.ndarray:
        return (1.0 + np.abs(self.mode_numbers)) ** (-2.0 * beta - 1.0)

    def beta_bound(self, beta: float) -> float:
        return (2 * math.pi + abs(self.sigma)) ** beta

    def basis(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(2j * math.pi * x[..., None] * self.mode_numbers)


def to_physical(model, coeffs, x) -> np.ndarray:
    """Synthesize u(x) = sum_n coeffs_n e_n(x); real output when the sum is real."""
    vals = np.asarray(model.basis(x) @ np.asarray(coeffs, dtype=complex).T)
    if isinstance(model, HeatModel) or np.allclose(vals.imag, 0.0, atol=1e-12 * max(1.0, np.abs(vals).max())):
        return vals.real
    return vals


def physical_sup_norm(model, coeffs, n_points: int = PHYSICAL_POINTS) -> float:
    x = np.linspace(0.0, 1.0, n_points)
    return float(np.abs(to_physical(model, coeffs, x)).max())


def _forcing(model, amplitude: float, spec: dict, beta: float) -> PAPFunction:
    profile = amplitude * model.decay_profile(beta)
    ap = TrigPolynomial.cosines([(nu, profile) for nu in spec.get("frequencies", [])], profile.size)
    erg = []
    for term in spec.get("ergodic", []):
        scale = term.get("amplitude", 1.0) * amplitude / max(spec.get("amplitude", 1.0), 1e-300)
        erg.append(
            ErgodicTerm(
                term.get("kind", "exp-decay"),
                term.get("rate", 1.0),
                scale * model.decay_profile(beta),
                term.get("center", 0.0),
                term.get("width", 1.0),
            )
        )
    return PAPFunction(ap, erg)


def _check_beta_decay(model, op: SpectralOperator, beta: float) -> None:
    weighted = fractional_weights(op, beta) * model.decay_profile(beta)
    if weighted.max() > model.beta_bound(beta) * (1 + 1e-12):
        raise ValueError("forcing coefficients decay too slowly for a finite beta-norm")


def _build(model, alpha, beta, K, p, forcing, kind, gamma_fraction, K_f=None, K_g=None) -> ProblemSpec:
    if not 0.0 < alpha < beta < 1.0:
        raise ValueError(f"need 0 < alpha < beta < 1, got alpha={alpha}, beta={beta}")
    spec = dict(DEFAULT_FORCING if forcing is None else forcing)
    op = model.operator()
    _check_beta_decay(model, op, beta)
    K_f = K if K_f is None else K_f
    K_g = K if K_g is None else K_g
    f_forcing = _forcing(model, spec.get("f_amplitude", 0.1), spec, beta)
    g_forcing = _forcing(model, spec.get("amplitude", 1.0), spec, beta)
    # f maps into X_beta: scale mode n by |lambda_n|^(-beta) so its beta-Lipschitz constant is K_f
    f = Nonlinearity(f_forcing, kind, K_f / fractional_weights(op, beta), beta=beta, op=op)
    g = Nonlinearity(g_forcing, kind, K_g)
    ident = BoundedMap.identity(op, alpha)
    return ProblemSpec(op, f, g, ident, BoundedMap.identity(op, alpha), alpha, beta, p, gamma_fraction)


def build_heat(
    sigma: float,
    n_modes: int = 16,
    alpha: float = 0.5,
    beta: float = 0.75,
    K: float = 0.1,
    p: float = 0.0,
    forcing: dict | None = None,
    kind: str = "tanh",
    gamma_fraction: float = 0.9,
    **kw,
) -> ProblemSpec:
    """Delayed heat equation with separable catalog nonlinearities and B = C = I."""
    return _build(HeatModel(sigma, n_modes), alpha, beta, K, p, forcing, kind, gamma_fraction, **kw)


def build_transport(
    sigma: float,
    n_modes: int = 8,
    alpha: float = 0.5,
    beta: float = 0.75,
    K: float = 0.1,
    p: float = 0.0,
    forcing: dict | None = None,
    kind: str = "tanh",
    gamma_fraction: float = 0.9,
    **kw,
) -> ProblemSpec:
    """Delayed transport equation; modes n = -N..N including n = 0."""
    return _build(TransportModel(sigma, n_modes), alpha, beta, K, p, forcing, kind, gamma_fraction, **kw)


def lipschitz_for_theta(model, alpha: float, beta: float, theta: float, gamma_fraction: float = 0.9) -> float:
    """Common Lipschitz constant K giving the requested Theta with B = C = I."""
    op = model.operator()
    consts = estimate_constants(op, alpha, beta, gamma_fraction)
    varpi = op.spectral_gap ** (-alpha)
    return theta / (varpi * sum(theta_terms(consts, alpha, beta)))


def heat_desk_problem(
    sigma: float = 1.0,
    n_modes: int = 16,
    p: float = 0.3,
    theta: float = 0.5,
    alpha: float = 0.5,
    beta: float = 0.75,
    forcing: dict | None = None,
    kind: str = "tanh",
) -> ProblemSpec:
    """Heat-with-delay problem with K scaled so the certified Theta equals ``theta``."""
    K = lipschitz_for_theta(HeatModel(sigma, n_modes), alpha, beta, theta)
    return build_heat(sigma, n_modes, alpha, beta, K, p, forcing, kind)


def scalar_operator(lam: complex) -> SpectralOperator:
    lam = complex(lam)
    omega = lam.real + 2 * abs(lam.imag) + 1.0
    return SpectralOperator([lam], omega=omega, theta=0.75 * math.pi)


def build_scalar(
    lam: complex,
    g_forcing: PAPFunction | None = None,
    f_forcing: PAPFunction | None = None,
    K_g: float = 0.0,
    K_f: float = 0.0,
    kind: str = "linear",
    alpha: float = 0.5,
    beta: float = 0.75,
    p: float = 0.0,
    gamma_fraction: float = 0.9,
) -> ProblemSpec:
    """One-mode problem u' + f' = lam u + g with N(v) = K * phi(v) and B = C = I."""
    op = scalar_operator(lam)
    zero = PAPFunction(TrigPolynomial.zero(1))
    f = Nonlinearity(f_forcing or zero, kind, K_f / fractional_weights(op, beta), beta=beta, op=op)
    g = Nonlinearity(g_forcing or zero, kind, K_g)
    return ProblemSpec(op, f, g, BoundedMap.identity(op, alpha), BoundedMap.identity(op, alpha), alpha, beta, p, gamma_fraction)


def exponential_forcing(nu: float) -> PAPFunction:
    """Scalar forcing exp(i nu t)."""
    return PAPFunction(TrigPolynomial([nu], [[1.0]]))
