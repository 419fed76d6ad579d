"""Pseudo almost periodic functions: trigonometric AP part plus a catalog ergodic part.

Functions of time are vectorised: calling ``f(t)`` with an array of shape
``s`` returns an array of shape ``s + (n_modes,)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import DomainError, QuadratureFail, SearchExhausted, WindowTooSmall

EXP_DECAY = "exp-decay"
RATIONAL_DECAY = "rational-decay"
BUMP = "bump"
ERGODIC_KINDS = (EXP_DECAY, RATIONAL_DECAY, BUMP)

EXTRAPOLATE_AP = "extrapolate-ap"
ERROR = "error"


def _as_vector(v) -> np.ndarray:
    return np.atleast_1d(np.asarray(v, dtype=complex))


@dataclass
class TrigPolynomial:
    """Finite sum ``sum_j c_j exp(i nu_j t)`` with vector coefficients c_j."""

    frequencies: np.ndarray
    coefficients: np.ndarray
    real: bool = False

    def __post_init__(self):
        self.frequencies = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs.reshape(self.frequencies.size, -1)
        self.coefficients = coeffs
        if coeffs.shape[0] != self.frequencies.size:
            raise ValueError("one coefficient vector per frequency is required")
        if np.unique(self.frequencies).size != self.frequencies.size:
            raise ValueError("frequencies must be pairwise distinct")
        if self.real:
            for nu, c in zip(self.frequencies, coeffs):
                partner = np.flatnonzero(self.frequencies == -nu)
                if partner.size == 0 or not np.allclose(coeffs[partner[0]], np.conj(c), rtol=0, atol=1e-14):
                    raise ValueError(f"real-valued polynomial lacks the conjugate partner of frequency {nu}")

    @classmethod
    def zero(cls, n_modes: int) -> "TrigPolynomial":
        return cls(np.zeros(0), np.zeros((0, n_modes)))

    @classmethod
    def cosines(cls, terms: Sequence[tuple[float, Sequence[float]]], n_modes: int | None = None) -> "TrigPolynomial":
        """Real polynomial sum_j a_j cos(nu_j t) from (nu_j, a_j) with nu_j > 0.

        ``n_modes`` is only needed when ``terms`` is empty.
        """
        if not terms:
            if n_modes is None:
                raise ValueError("an empty cosine sum needs n_modes")
            return cls.zero(n_modes)
        freqs, coeffs = [], []
        for nu, a in terms:
            a = np.asarray(a, dtype=float)
            freqs += [nu, -nu]
            coeffs += [a / 2, a / 2]
        return cls(np.array(freqs), np.array(coeffs, dtype=complex), real=True)

    @property
    def n_modes(self) -> int:
        return self.coefficients.shape[1]

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.frequencies.size == 0:
            return np.zeros(t.shape + (self.n_modes,), dtype=complex)
        phase = np.exp(1j * t[..., None] * self.frequencies)
        return phase @ self.coefficients

    def sup_bound(self) -> float:
        """Upper bound for sup_t ||p(t)|| (sup over modes)."""
        return float(np.abs(self.coefficients).sum(axis=0).max()) if self.frequencies.size else 0.0

    def map_coefficients(self, factor: Callable[[float], np.ndarray]) -> "TrigPolynomial":
        """Multiply each coefficient vector by a per-mode factor depending on its frequency."""
        coeffs = np.array([factor(nu) * c for nu, c in zip(self.frequencies, self.coefficients)])
        return TrigPolynomial(self.frequencies.copy(), coeffs.reshape(self.coefficients.shape))

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        freqs = list(self.frequencies)
        coeffs = [c.copy() for c in self.coefficients]
        for nu, c in zip(other.frequencies, other.coefficients):
            if nu in freqs:
                coeffs[freqs.index(nu)] = coeffs[freqs.index(nu)] + c
            else:
                freqs.append(nu)
                coeffs.append(c)
        return TrigPolynomial(np.array(freqs), np.array(coeffs).reshape(len(freqs), self.n_modes))


@dataclass
class ErgodicTerm:
    """Catalog member of AP_0: a decaying scalar profile times a fixed vector.

    exp-decay:       exp(-rate |t - center|)
    rational-decay:  (1 + ((t - center) / width)^2)^(-rate)
    bump:            exp(rate (1 - 1 / (1 - u^2))) for |u| < 1, u = (t - center) / width
    """

    kind: str
    rate: float
    coefficient: np.ndarray
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ERGODIC_KINDS:
            raise ValueError(f"unknown ergodic kind {self.kind!r}")
        if self.rate <= 0 or self.width <= 0:
            raise ValueError("rate and width must be positive")
        self.coefficient = _as_vector(self.coefficient)

    def profile(self, t) -> np.ndarray:
        s = np.asarray(t, dtype=float) - self.center
        if self.kind == EXP_DECAY:
            return np.exp(-self.rate * np.abs(s))
        if self.kind == RATIONAL_DECAY:
            return (1.0 + (s / self.width) ** 2) ** (-self.rate)
        u = s / self.width
        inside = np.abs(u) < 1
        out = np.zeros_like(u)
        out[inside] = np.exp(self.rate * (1.0 - 1.0 / (1.0 - u[inside] ** 2)))
        return out

    def __call__(self, t) -> np.ndarray:
        return self.profile(t)[..., None] * self.coefficient

    def shifted(self, s: float) -> "ErgodicTerm":
        """The term t -> term(t - s)."""
        return ErgodicTerm(self.kind, self.rate, self.coefficient, self.center + s, self.width)


@dataclass
class PAPFunction:
    ap: TrigPolynomial
    erg: list[ErgodicTerm] = field(default_factory=list)

    @property
    def n_modes(self) -> int:
        return self.ap.n_modes

    def ergodic_part(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.n_modes,), dtype=complex)
        for term in self.erg:
            out += term(t)
        return out

    def __call__(self, t) -> np.ndarray:
        return self.ap(t) + self.ergodic_part(t)

    evaluate = __call__

    def sup_bound(self) -> float:
        return self.ap.sup_bound() + sum(float(np.abs(e.coefficient).max()) for e in self.erg)

    def shifted(self, s: float) -> "PAPFunction":
        ap = self.ap.map_coefficients(lambda nu: np.exp(-1j * nu * s))
        return PAPFunction(ap, [e.shifted(s) for e in self.erg])


def evaluate(f: PAPFunction, t) -> np.ndarray:
    return f(t)


@dataclass
class TimeGridFunction:
    """Samples on a uniform time grid with piecewise-cubic interpolation.

    Outside the sampled window the function either raises WindowTooSmall
    (policy "error") or evaluates ``tail`` (policy "extrapolate-ap"); the
    tail is meant to be an AP candidate for the sampled function.
    """

    t0: float
    dt: float
    values: np.ndarray
    tail: Callable | None = None
    policy: str = EXTRAPOLATE_AP
    _spline: CubicSpline | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("grid spacing must be positive")
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.values.shape[0] < 4:
            raise ValueError("need at least 4 samples for cubic interpolation")
        if self.policy not in (EXTRAPOLATE_AP, ERROR):
            raise ValueError(f"unknown out-of-window policy {self.policy!r}")

    @classmethod
    def sample(cls, fn: Callable, half_width: float, dt: float, **kwargs) -> "TimeGridFunction":
        n = int(round(2 * half_width / dt))
        t = -half_width + dt * np.arange(n + 1)
        return cls(-half_width, 2 * half_width / n, fn(t), **kwargs)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.shape[0])

    @property
    def t1(self) -> float:
        return self.t0 + self.dt * (self.values.shape[0] - 1)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.t1 - self.t0)

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    def _interp(self) -> CubicSpline:
        if self._spline is None:
            self._spline = CubicSpline(self.times, self.values, axis=0)
        return self._spline

    def covers(self, lo: float, hi: float) -> bool:
        eps = 1e-9 * self.dt
        return lo >= self.t0 - eps and hi <= self.t1 + eps

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        eps = 1e-9 * self.dt
        inside = (t >= self.t0 - eps) & (t <= self.t1 + eps)
        if np.all(inside):
            return self._interp()(np.clip(t, self.t0, self.t1))
        if self.policy == ERROR or self.tail is None:
            raise WindowTooSmall(
                f"evaluation at t in [{t.min():.6g}, {t.max():.6g}] outside window [{self.t0:.6g}, {self.t1:.6g}]"
            )
        out = np.empty(t.shape + (self.n_modes,), dtype=complex)
        out[inside] = self._interp()(np.clip(t[inside], self.t0, self.t1))
        out[~inside] = self.tail(t[~inside])
        return out

    def shift(self, p: float) -> "TimeGridFunction":
        """The function t -> self(t - p) on the translated grid."""
        tail = None if self.tail is None else (lambda t, f=self.tail: f(np.asarray(t) - p))
        return TimeGridFunction(self.t0 + p, self.dt, self.values, tail, self.policy)

    def with_values(self, values: np.ndarray) -> "TimeGridFunction":
        return TimeGridFunction(self.t0, self.dt, values, self.tail, self.policy)


# --- ergodic means ----------------------------------------------------------

# Gauss-Kronrod 7/15 nodes on [-1, 1] (QUADPACK qk15)
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KW = np.concatenate([_WK[:-1], _WK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def pointwise_norm(f: Callable, t: np.ndarray) -> np.ndarray:
    v = np.asarray(f(t))
    if v.ndim > t.ndim:
        return np.abs(v).max(axis=-1)
    return np.abs(v)


def integrate_adaptive(
    g: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    panels: int = 8,
    rtol: float = 1e-10,
    atol: float = 1e-14,
    max_panels: int = 1 << 20,
) -> float:
    """Globally adaptive Gauss-Kronrod (7/15) integration of a scalar vectorised integrand."""
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    done_val, done_err = 0.0, 0.0
    while True:
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * _NODES[None, :]
        y = g(x.ravel()).reshape(x.shape)
        k = half * (y @ _KW)
        err = np.abs(k - half * (y @ _GW))
        total = done_val + k.sum()
        budget = max(rtol * abs(total), atol)
        if done_err + err.sum() <= budget:
            return float(total)
        # keep panels whose error is small against an even share of the budget
        share = budget / (lo.size + 1)
        split = err > 0.5 * share
        done_val += k[~split].sum()
        done_err += err[~split].sum()
        if done_err > budget:
            raise QuadratureFail("accepted panels already exceed the error budget")
        lo, hi = lo[split], hi[split]
        if 2 * lo.size > max_panels:
            raise QuadratureFail(f"adaptive refinement exceeded {max_panels} panels")
        m = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, m]), np.concatenate([m, hi])


def ergodic_mean(f: Callable, r: float, quad_points: int = 64, rtol: float = 1e-10) -> float:
    """(1 / 2r) * integral over [-r, r] of ||f(t)||."""
    if r <= 0:
        raise DomainError("r must be positive")
    if quad_points < 64:
        raise DomainError("quad_points must be at least 64")
    panels = max(4, quad_points // 15, int(math.ceil(2 * r)))
    val = integrate_adaptive(lambda t: pointwise_norm(f, t), -r, r, panels=panels, rtol=rtol)
    return val / (2 * r)


def mean_trace(f: Callable, r_list: Sequence[float], quad_points: int = 64) -> list[tuple[float, float]]:
    return [(float(r), ergodic_mean(f, r, quad_points)) for r in r_list]


def trace_decays(trace: Sequence[tuple[float, float]], slack: float = 0.10) -> bool:
    means = [m for _, m in trace]
    return all(b <= (1 + slack) * a for a, b in zip(means, means[1:]))


def check_ap0(f: Callable, r_list: Sequence[float] = (10, 40, 160, 640), tol: float = 0.05, quad_points: int = 64):
    """Numerical AP_0 membership: decaying mean trace whose last value is below ``tol``.

    Returns ``(ok, trace)`` with trace a list of (r, mean) pairs.
    """
    r_list = list(r_list)
    if len(r_list) < 3 or any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise DomainError("r_list must be strictly increasing with at least 3 entries")
    trace = mean_trace(f, r_list, quad_points)
    return trace_decays(trace) and trace[-1][1] < tol, trace


def decompose_residual(f: Callable, candidate_ap: Callable, r_list: Sequence[float] = (10, 40, 160, 640), quad_points: int = 64):
    """Mean trace of ||f - candidate_ap||; decay certifies the candidate as AP part of f."""
    return mean_trace(lambda t: f(t) - candidate_ap(t), r_list, quad_points)


# --- translation numbers ----------------------------------------------------


def _dense_grid(ap: TrigPolynomial, span: float | None = None) -> np.ndarray:
    nu = np.abs(ap.frequencies[ap.frequencies != 0])
    nu_max = nu.max() if nu.size else 1.0
    nu_min = nu.min() if nu.size else 1.0
    span = span if span is not None else max(20.0, 8 * math.pi / nu_min)
    h = 2 * math.pi / (40 * nu_max)
    return np.arange(0.0, span + h, h)


def translation_gap(ap: TrigPolynomial, tau: float, check_grid: np.ndarray | None = None) -> float:
    """sup over the check grid of ||ap(t + tau) - ap(t)||."""
    t = _dense_grid(ap) if check_grid is None else np.asarray(check_grid, dtype=float)
    return float(np.abs(ap(t + tau) - ap(t)).max()) if ap.frequencies.size else 0.0


def translation_number(
    ap: TrigPolynomial,
    epsilon: float,
    interval_length_hint: float = 1.0,
    check_grid: np.ndarray | None = None,
    start: float | None = None,
) -> float:
    """Find an epsilon-translation number tau >= start.

    Candidates are scored by the bound sum_j |c_j| |exp(i nu_j tau) - 1|,
    which dominates the translation gap uniformly in t. The search scans
    windows [start + k l, start + (k+1) l] with l the hint, takes the best
    candidate of the first window whose bound is below epsilon, and confirms
    it on the check grid.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    l = float(interval_length_hint)
    start = l if start is None else float(start)
    if ap.frequencies.size == 0 or not np.any(ap.coefficients):
        return start
    amp = np.abs(ap.coefficients).max(axis=1)
    nu = ap.frequencies

    def bound(tau):
        tau = np.asarray(tau, dtype=float)
        return np.abs(np.exp(1j * np.multiply.outer(tau, nu)) - 1.0) @ amp

    lipschitz = float(np.sum(amp * np.abs(nu)))
    h = epsilon / (4 * lipschitz)
    n_per_window = max(16, int(math.ceil(l / h)) + 1)
    offsets = np.linspace(0.0, l, n_per_window)
    for k in range(10_000):
        lo = start + k * l
        cand = lo + offsets
        b = bound(cand)
        j = int(np.argmin(b))
        if b[j] >= epsilon + lipschitz * (offsets[1] - offsets[0]):
            continue
        res = minimize_scalar(
            lambda s: float(bound(s)),
            bounds=(max(lo, cand[j] - offsets[1]), min(lo + l, cand[j] + offsets[1])),
            method="bounded",
            options={"xatol": 1e-13},
        )
        tau = float(res.x) if res.fun < b[j] else float(cand[j])
        if float(bound(tau)) < epsilon and translation_gap(ap, tau, check_grid) < epsilon:
            return tau
    raise SearchExhausted(f"no {epsilon}-translation number in [{start}, {start + 10_000 * l}]")


# --- composition ------------------------------------------------------------


def compose_nonlinearity(nonlin, cmap, u: PAPFunction, delay: float = 0.0):
    """h(t) = a(t) + N(C u(t - p)) and its AP candidate a_ap(t) + N(C u_ap(t - p)).

    ``nonlin`` needs ``forcing`` (PAPFunction) and ``apply``; ``cmap`` needs ``apply``.
    """

    def h(t):
        t = np.asarray(t, dtype=float)
        return nonlin.forcing(t) + nonlin.apply(cmap.apply(u(t - delay)))

    def candidate(t):
        t = np.asarray(t, dtype=float)
        return nonlin.forcing.ap(t) + nonlin.apply(cmap.apply(u.ap(t - delay)))

    return h, candidate
