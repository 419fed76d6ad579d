"""Mild solutions of  d/dt [u + f(t, Bu)] = A u + g(t, Cu)  for diagonal A.

The mild-solution map is

    (Mu)(t) = -f(t, Bu(t-p)) - G1(t) + G2(t) + G3(t) - G4(t)

with G1 = int_{-inf}^t A T(t-s) P f ds,  G2 = int_t^inf A T(t-s) Q f ds,
     G3 = int_{-inf}^t T(t-s) P g ds,    G4 = int_t^inf T(t-s) Q g ds.

Every integral is evaluated per mode in the lag variable tau = |t - s|,
truncated at an exponential horizon and discretised with composite
Gauss-Legendre panels, graded towards tau = 0 on [0, 1].
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, MaxIterExceeded, ThetaNotContractive
from .pap import PAPFunction, TimeGridFunction, TrigPolynomial
from .spectral import (
    DichotomyConstants,
    SpectralOperator,
    check_hyperbolic,
    estimate_constants,
    fractional_weights,
    sup_norm,
)
from .special import gamma_function

log = logging.getLogger(__name__)

NONLINEAR_KINDS = ("tanh", "sin", "linear")


# --- problem description ----------------------------------------------------


@dataclass
class BoundedMap:
    """Diagonal map X_alpha -> X; ``norm`` is its operator norm."""

    weights: np.ndarray
    op: SpectralOperator
    alpha: float
    norm: float = field(init=False)

    def __post_init__(self):
        self.weights = np.broadcast_to(np.asarray(self.weights, dtype=complex), (self.op.n_modes,)).copy()
        self.norm = float(np.max(np.abs(self.weights) / fractional_weights(self.op, self.alpha)))

    @classmethod
    def identity(cls, op: SpectralOperator, alpha: float) -> "BoundedMap":
        return cls(np.ones(op.n_modes), op, alpha)

    def apply(self, x) -> np.ndarray:
        return self.weights * x


@dataclass
class Nonlinearity:
    """Separable nonlinearity (t, v) -> a(t) + N(v) with N acting mode by mode.

    N_n(z) = w_n * phi(z), phi applied to real and imaginary parts. When
    ``beta`` is set, N maps into X_beta and ``lipschitz`` is measured in the
    beta-norm; otherwise in the sup norm.
    """

    forcing: PAPFunction
    kind: str = "linear"
    weights: np.ndarray | float = 0.0
    beta: float | None = None
    op: SpectralOperator | None = None

    def __post_init__(self):
        if self.kind not in NONLINEAR_KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        n = self.forcing.n_modes
        self.weights = np.broadcast_to(np.asarray(self.weights, dtype=float), (n,)).copy()
        if self.beta is not None and self.op is None:
            raise ValueError("a beta-valued nonlinearity needs its operator")

    def target_weights(self) -> np.ndarray:
        if self.beta is None:
            return np.ones(self.forcing.n_modes)
        return fractional_weights(self.op, self.beta)

    @property
    def lipschitz(self) -> float:
        return float(np.max(self.target_weights() * np.abs(self.weights)))

    def apply(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.kind == "linear":
            return self.weights * z
        phi = np.tanh if self.kind == "tanh" else np.sin
        return self.weights * (phi(z.real) + 1j * phi(z.imag))

    def __call__(self, t, v) -> np.ndarray:
        return self.forcing(t) + self.apply(v)

    def check_lipschitz(self, n_pairs: int = 200, seed: int = 0, scale: float = 3.0) -> float:
        """Largest observed ||N(u) - N(v)|| / (K ||u - v||) over random pairs."""
        rng = np.random.default_rng(seed)
        n = self.forcing.n_modes
        u = scale * (rng.standard_normal((n_pairs, n)) + 1j * rng.standard_normal((n_pairs, n)))
        v = u + (rng.standard_normal((n_pairs, n)) + 1j * rng.standard_normal((n_pairs, n))) * rng.uniform(1e-3, 2, (n_pairs, 1))
        num = sup_norm(self.target_weights() * (self.apply(u) - self.apply(v)))
        den = self.lipschitz * sup_norm(u - v)
        if self.lipschitz == 0:
            return 0.0 if np.all(num == 0) else math.inf
        return float(np.max(num / den))


@dataclass
class ProblemSpec:
    op: SpectralOperator
    f: Nonlinearity
    g: Nonlinearity
    Bmap: BoundedMap
    Cmap: BoundedMap
    alpha: float
    beta: float
    delay: float = 0.0
    gamma_fraction: float = 0.9
    _consts: DichotomyConstants | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < self.beta < 1.0:
            raise DomainError(f"need 0 < alpha < beta < 1, got alpha={self.alpha}, beta={self.beta}")
        if self.delay < 0:
            raise DomainError("delay must be nonnegative")
        check_hyperbolic(self.op)
        for m in (self.f, self.g):
            if m.forcing.n_modes != self.op.n_modes:
                raise ValueError("nonlinearity dimension does not match the operator")

    @property
    def constants(self) -> DichotomyConstants:
        if self._consts is None:
            self._consts = estimate_constants(self.op, self.alpha, self.beta, self.gamma_fraction)
        return self._consts

    @property
    def varpi(self) -> float:
        return max(self.Bmap.norm, self.Cmap.norm)

    @property
    def K(self) -> float:
        return max(self.f.lipschitz, self.g.lipschitz)

    def alpha_weights(self) -> np.ndarray:
        return fractional_weights(self.op, self.alpha)

    def alpha_norm(self, x) -> np.ndarray:
        return sup_norm(self.alpha_weights() * np.asarray(x))


@dataclass
class SolveReport:
    theta: float
    iterations: int = 0
    contraction_ratios: list[float] = field(default_factory=list)
    increments: list[float] = field(default_factory=list)
    final_residual: float = math.nan
    truncation_horizons: tuple[float, float] = (0.0, 0.0)
    quadrature: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "theta": self.theta,
            "iterations": self.iterations,
            "contraction_ratios": list(self.contraction_ratios),
            "increments": list(self.increments),
            "final_residual": self.final_residual,
            "L_gamma": self.truncation_horizons[0],
            "L_delta": self.truncation_horizons[1],
            **{f"quadrature_{k}": v for k, v in self.quadrature.items()},
        }


# --- contraction constant ---------------------------------------------------


def theta_terms(consts: DichotomyConstants, alpha: float, beta: float) -> list[float]:
    """The five bracketed terms of Theta (before the factor K * varpi)."""
    if not 0.0 < alpha < beta < 1.0:
        raise DomainError(f"need 0 < alpha < beta < 1, got alpha={alpha}, beta={beta}")
    d, g = consts.delta, consts.gamma
    return [
        consts.k_alpha,
        consts.c_beta / d,
        consts.c_beta * gamma_function(beta - alpha) / g ** (beta - alpha),
        consts.M_alpha * gamma_function(1.0 - alpha) / g ** (1.0 - alpha),
        consts.c_alpha / d,
    ]


def theta_constant(consts: DichotomyConstants, K: float, varpi: float, alpha: float, beta: float) -> float:
    """Theta = K varpi [k + c/delta + c G(b-a)/gamma^(b-a) + M_a G(1-a)/gamma^(1-a) + c_a/delta]."""
    return K * varpi * sum(theta_terms(consts, alpha, beta))


def problem_theta(problem: ProblemSpec) -> float:
    """Contraction bound of the mild-solution map of ``problem``.

    The first three bracket terms come from f and the last two from g, so
    each group is weighted by its own Lipschitz constant. With equal
    constants this is exactly ``theta_constant``.
    """
    t = theta_terms(problem.constants, problem.alpha, problem.beta)
    return problem.varpi * (problem.f.lipschitz * sum(t[:3]) + problem.g.lipschitz * sum(t[3:]))


# --- quadrature -------------------------------------------------------------


@dataclass
class KernelRule:
    """Nodes and weights in the lag variable tau on [0, horizon]."""

    nodes: np.ndarray
    weights: np.ndarray
    horizon: float


def kernel_rule(
    horizon: float,
    grading: float,
    near_panels: int = 48,
    order: int = 8,
    far_width: float = 0.5,
    min_far_panels: int = 32,
) -> KernelRule:
    """Composite Gauss-Legendre rule: mesh (j/J)^grading on [0, 1], uniform panels on [1, horizon]."""
    x, w = np.polynomial.legendre.leggauss(order)
    head = min(1.0, horizon)
    edges = [head * (np.arange(near_panels + 1) / near_panels) ** grading]
    if horizon > 1.0:
        n_far = max(min_far_panels, int(math.ceil((horizon - 1.0) / far_width)))
        edges.append(np.linspace(1.0, horizon, n_far + 1)[1:])
    edges = np.concatenate(edges)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return KernelRule(nodes.ravel(), weights.ravel(), horizon)


def _forcing_bound(m: Nonlinearity) -> float:
    return m.forcing.sup_bound()


def truncation_horizons(problem: ProblemSpec, tol_trunc: float, amplitude: float) -> tuple[float, float]:
    """(L_gamma, L_delta) making each dropped tail at most tol_trunc in the alpha-norm.

    The tail beyond L of mode n is bounded by |lambda_n|^(alpha+1) e^(Re lambda_n L) / |Re lambda_n|
    times ``amplitude`` (a bound on the integrand), and |Re lambda_n| >= delta >= gamma.
    """
    lam = problem.op.eigenvalues
    w = np.abs(lam) ** problem.alpha * np.maximum(1.0, np.abs(lam)) / np.abs(lam.real)
    consts = problem.constants
    out = []
    for mask, rate in ((problem.op.stable, consts.gamma), (problem.op.unstable, consts.delta)):
        if not np.any(mask):
            out.append(0.0)
            continue
        c_f = max(1.0, amplitude * float(w[mask].max()))
        out.append(math.log(c_f / tol_trunc) / rate)
    return out[0], out[1]


@dataclass
class Quadrature:
    past: KernelRule | None
    future: KernelRule | None

    @classmethod
    def for_problem(
        cls,
        problem: ProblemSpec,
        horizons: tuple[float, float],
        max_frequency: float = 1.0,
        near_panels: int = 48,
        order: int = 8,
    ) -> "Quadrature":
        lam = problem.op.eigenvalues
        osc = max(1.0, float(np.abs(lam.imag).max()), max_frequency)
        far_width = min(0.5, math.pi / (2 * osc))
        past = future = None
        if horizons[0] > 0:
            # grading for the t^(beta-alpha-1) singularity also covers t^(-alpha)
            grading = 1.0 / (problem.beta - problem.alpha)
            past = kernel_rule(horizons[0], grading, near_panels, order, far_width)
        if horizons[1] > 0:
            future = kernel_rule(horizons[1], 2.0, near_panels, order, far_width)
        return cls(past, future)

    def describe(self) -> dict:
        return {
            "past_nodes": 0 if self.past is None else int(self.past.nodes.size),
            "future_nodes": 0 if self.future is None else int(self.future.nodes.size),
        }


def max_forcing_frequency(problem: ProblemSpec) -> float:
    nu = np.concatenate([np.abs(problem.f.forcing.ap.frequencies), np.abs(problem.g.forcing.ap.frequencies)])
    return float(nu.max()) if nu.size else 0.0


# --- the integral operators -------------------------------------------------


def _delayed(u: Callable, p: float) -> Callable:
    if p == 0:
        return u
    if isinstance(u, TimeGridFunction):
        return u.shift(p)
    return lambda s: u(np.asarray(s) - p)


def _f_at(problem: ProblemSpec, v: Callable, s) -> np.ndarray:
    return problem.f(s, problem.Bmap.apply(v(s)))


def _g_at(problem: ProblemSpec, v: Callable, s) -> np.ndarray:
    return problem.g(s, problem.Cmap.apply(v(s)))


def f_values(problem: ProblemSpec, u: Callable, s) -> np.ndarray:
    """f(s, B u(s - p))."""
    return _f_at(problem, _delayed(u, problem.delay), s)


def g_values(problem: ProblemSpec, u: Callable, s) -> np.ndarray:
    """g(s, C u(s - p))."""
    return _g_at(problem, _delayed(u, problem.delay), s)


_SPECS = {
    # name: (uses f?, past?, multiply by lambda?)
    "gamma1": (True, True, True),
    "gamma2": (True, False, True),
    "gamma3": (False, True, False),
    "gamma4": (False, False, False),
}


def _kernel(op: SpectralOperator, rule: KernelRule, past: bool, with_a: bool) -> np.ndarray:
    lam = op.eigenvalues
    mask = op.stable if past else op.unstable
    sign = 1.0 if past else -1.0
    expo = np.where(mask, sign * lam * rule.nodes[:, None], -np.inf)
    k = np.exp(expo) * rule.weights[:, None]
    return k * lam if with_a else k


def _chunk_size(n_nodes: int, n_modes: int, budget: int = 1 << 21) -> int:
    return max(1, budget // max(1, n_nodes * n_modes))


def gamma_apply(
    name: str,
    problem: ProblemSpec,
    u: Callable,
    t,
    tol_trunc: float = 1e-8,
    quad: Quadrature | None = None,
) -> np.ndarray:
    """Evaluate one of gamma1..gamma4 of ``u`` at the times ``t``."""
    uses_f, past, with_a = _SPECS[name]
    t = np.atleast_1d(np.asarray(t, dtype=float))
    mask = problem.op.stable if past else problem.op.unstable
    out = problem.op.zeros(t.size)
    if not np.any(mask):
        return out
    if quad is None:
        quad = default_quadrature(problem, u, tol_trunc)
    rule = quad.past if past else quad.future
    kern = _kernel(problem.op, rule, past, with_a)
    values = _f_at if uses_f else _g_at
    v = _delayed(u, problem.delay)
    lag = -rule.nodes if past else rule.nodes
    step = _chunk_size(rule.nodes.size, problem.op.n_modes)
    # fixed chunking and summation order keeps results deterministic
    for i in range(0, t.size, step):
        tc = t[i:i + step]
        h = values(problem, v, tc[:, None] + lag[None, :])
        out[i:i + step] = np.einsum("cqn,qn->cn", h, kern)
    return out


def gamma1(problem, u, t, tol_trunc=1e-8, quad=None):
    return gamma_apply("gamma1", problem, u, t, tol_trunc, quad)


def gamma2(problem, u, t, tol_trunc=1e-8, quad=None):
    return gamma_apply("gamma2", problem, u, t, tol_trunc, quad)


def gamma3(problem, u, t, tol_trunc=1e-8, quad=None):
    return gamma_apply("gamma3", problem, u, t, tol_trunc, quad)


def gamma4(problem, u, t, tol_trunc=1e-8, quad=None):
    return gamma_apply("gamma4", problem, u, t, tol_trunc, quad)


def _sup_of(u: Callable, problem: ProblemSpec) -> float:
    if isinstance(u, TimeGridFunction):
        return float(sup_norm(u.values).max())
    if isinstance(u, PAPFunction):
        return u.sup_bound()
    return float(sup_norm(u(np.linspace(-20, 20, 401))).max())


def integrand_amplitude(problem: ProblemSpec, u_sup: float) -> float:
    wf = float(np.abs(problem.f.weights).max()) * float(np.abs(problem.Bmap.weights).max())
    wg = float(np.abs(problem.g.weights).max()) * float(np.abs(problem.Cmap.weights).max())
    return max(_forcing_bound(problem.f) + wf * u_sup, _forcing_bound(problem.g) + wg * u_sup, 1e-300)


def default_quadrature(problem: ProblemSpec, u: Callable, tol_trunc: float) -> Quadrature:
    horizons = truncation_horizons(problem, tol_trunc, integrand_amplitude(problem, _sup_of(u, problem)))
    return Quadrature.for_problem(problem, horizons, max_forcing_frequency(problem))


# --- AP candidates ----------------------------------------------------------


def transfer_factor(op: SpectralOperator, nu: float, name: str) -> np.ndarray:
    """Per-mode multiplier taking exp(i nu t) input to the output of gamma1..gamma4."""
    lam = op.eigenvalues
    z = 1j * nu
    if name == "gamma3":
        return np.where(op.stable, 1.0 / (z - lam), 0.0)
    if name == "gamma1":
        return np.where(op.stable, lam / (z - lam), 0.0)
    if name == "gamma4":
        return np.where(op.unstable, 1.0 / (lam - z), 0.0)
    if name == "gamma2":
        return np.where(op.unstable, lam / (lam - z), 0.0)
    raise ValueError(name)


def gamma_ap_candidate(op: SpectralOperator, name: str, h_ap: TrigPolynomial) -> TrigPolynomial:
    return h_ap.map_coefficients(lambda nu: transfer_factor(op, nu, name))


def linear_ap_response(problem: ProblemSpec) -> TrigPolynomial:
    """AP solution of the problem with N = 0: per frequency (i nu - A)^(-1)(g_hat - i nu f_hat)."""
    lam = problem.op.eigenvalues
    f_part = problem.f.forcing.ap.map_coefficients(lambda nu: -1j * nu / (1j * nu - lam))
    g_part = problem.g.forcing.ap.map_coefficients(lambda nu: 1.0 / (1j * nu - lam))
    return f_part + g_part


# --- the mild-solution map and Picard iteration -----------------------------


def default_window(problem: ProblemSpec, horizons: tuple[float, float]) -> tuple[float, float]:
    """(half width T, spacing dt) for Picard iterates."""
    T = max(4 * horizons[0], 4 * horizons[1], 8 * problem.delay, 40.0)
    nu = max_forcing_frequency(problem)
    dt = min(0.1, 2 * math.pi / (32 * nu)) if nu > 0 else 0.1
    return T, dt


def mild_map(
    problem: ProblemSpec,
    u: TimeGridFunction,
    tol_trunc: float = 1e-8,
    quad: Quadrature | None = None,
    like: TimeGridFunction | None = None,
) -> TimeGridFunction:
    """(M u) sampled on the grid of ``like`` (default: the grid of ``u``)."""
    like = u if like is None else like
    if quad is None:
        quad = default_quadrature(problem, u, tol_trunc)
    t = like.times
    val = -f_values(problem, u, t)
    val -= gamma1(problem, u, t, quad=quad)
    val += gamma2(problem, u, t, quad=quad)
    val += gamma3(problem, u, t, quad=quad)
    val -= gamma4(problem, u, t, quad=quad)
    return like.with_values(val)


def zero_iterate(problem: ProblemSpec, half_width: float, dt: float) -> TimeGridFunction:
    tail = linear_ap_response(problem)
    return TimeGridFunction.sample(lambda t: problem.op.zeros(np.size(t)), half_width, dt, tail=tail)


def interior_mask(u: TimeGridFunction, margin: float) -> np.ndarray:
    t = u.times
    return (t >= u.t0 + margin) & (t <= u.t1 - margin)


def residual(problem: ProblemSpec, u: TimeGridFunction, tol_trunc: float = 1e-8, quad: Quadrature | None = None) -> float:
    """sup over the interior grid of ||u(t) - (M u)(t)||_alpha (margin max(p, 1) at both ends)."""
    mu = mild_map(problem, u, tol_trunc, quad)
    inner = interior_mask(u, max(problem.delay, 1.0))
    return float(problem.alpha_norm(u.values[inner] - mu.values[inner]).max())


def grid_distance(problem: ProblemSpec, u: TimeGridFunction, v: TimeGridFunction, margin: float = 0.0) -> float:
    inner = interior_mask(u, margin)
    return float(problem.alpha_norm(u.values[inner] - v.values[inner]).max())


def picard_solve(
    problem: ProblemSpec,
    u0: Callable | None = None,
    tol: float = 1e-6,
    max_iter: int = 100,
    tol_trunc: float | None = None,
    theta: float | None = None,
    half_width: float | None = None,
    dt: float | None = None,
) -> tuple[TimeGridFunction, SolveReport]:
    """Banach iteration u_{k+1} = M u_k on a finite window.

    Stops once ||u_{k+1} - u_k|| <= tol (1 - Theta) in the sup-grid
    alpha-norm, which bounds the distance of u_{k+1} to the fixed point of
    the discretised map by tol. Theta defaults to the certified bound from
    ``problem_theta``; a user override is still refused when >= 1.

    ``u0`` may be a TimeGridFunction (used as is) or any callable of t,
    which is then sampled on the default window.

    Raises
    ------
    ThetaNotContractive
        If Theta >= 1.
    MaxIterExceeded
        If ``max_iter`` maps do not reach the stopping rule.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    theta = problem_theta(problem) if theta is None else float(theta)
    if theta >= 1.0:
        raise ThetaNotContractive(f"Theta = {theta:.6g} >= 1; the contraction hypothesis fails")
    tol_trunc = tol * (1.0 - theta) * 1e-2 if tol_trunc is None else tol_trunc

    # a-priori size of iterates: |M0| / (1 - Theta), with |M0| bounded by the linear AP response
    tail = linear_ap_response(problem)
    lam_w = problem.alpha_weights()
    lin = float(np.max(lam_w * np.abs(tail.coefficients).sum(axis=0))) if tail.frequencies.size else 0.0
    forcing = _forcing_bound(problem.f) + _forcing_bound(problem.g)
    u_start = 0.0 if u0 is None else _sup_of(u0, problem)
    bound = u_start + (lin + forcing * sum(theta_terms(problem.constants, problem.alpha, problem.beta))) / (1 - theta)
    horizons = truncation_horizons(problem, tol_trunc, integrand_amplitude(problem, bound))
    quad = Quadrature.for_problem(problem, horizons, max_forcing_frequency(problem))

    if not isinstance(u0, TimeGridFunction):
        T, h = default_window(problem, horizons)
        u = zero_iterate(problem, half_width or T, dt or h)
        if u0 is not None:
            u = u.with_values(np.asarray(u0(u.times), dtype=complex))
    else:
        u = u0 if u0.tail is not None else TimeGridFunction(u0.t0, u0.dt, u0.values, tail, u0.policy)

    report = SolveReport(theta=theta, truncation_horizons=horizons, quadrature=quad.describe())
    prev = None
    for k in range(1, max_iter + 1):
        nxt = mild_map(problem, u, quad=quad)
        diff = float(problem.alpha_norm(nxt.values - u.values).max())
        report.iterations = k
        report.increments.append(diff)
        if prev is not None and prev > 0:
            report.contraction_ratios.append(diff / prev)
        log.debug("picard iteration %d: increment %.3e", k, diff)
        u, prev = nxt, diff
        if diff <= tol * (1.0 - theta):
            report.final_residual = residual(problem, u, quad=quad)
            return u, report
    raise MaxIterExceeded(f"no convergence within {max_iter} iterations (last increment {prev:.3e})")
