"""Diagonal sectorial operators and the dichotomy estimates built on them.

An operator is a finite list of eigenvalues acting on mode coefficients.
Vectors are complex numpy arrays whose last axis runs over modes, so the
same routines work on a single vector or on a batch (e.g. a time grid).
The base norm is the sup norm over modes.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NotHyperbolic, SpectrumInSector, ZeroGap

FRACTIONAL = "fractional-power"
REAL_INTERP = "real-interpolation"
PARTS = ("whole", "stable", "unstable")


@dataclass(frozen=True)
class Eigenmode:
    index: int
    lam: complex

    def __post_init__(self):
        if not np.isfinite(self.lam):
            raise ValueError(f"eigenvalue of mode {self.index} is not finite")


@dataclass(frozen=True)
class AlphaSpaceSpec:
    alpha: float
    flavor: str = FRACTIONAL

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.flavor not in (FRACTIONAL, REAL_INTERP):
            raise DomainError(f"unknown alpha-norm flavor {self.flavor!r}")


@dataclass
class SpectralOperator:
    """Diagonal operator ``A e_n = lambda_n e_n`` with sector metadata.

    ``sector_bound`` is the resolvent constant M for the sector of
    half-angle ``theta`` with vertex ``omega``; it is certified on
    construction when not supplied.
    """

    eigenvalues: np.ndarray
    omega: float = 0.0
    theta: float = 0.75 * math.pi
    sector_bound: float | None = None
    indices: np.ndarray | None = None

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.eigenvalues, dtype=complex))
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("operator needs a nonempty 1-d list of eigenvalues")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        self.eigenvalues = lam
        if self.indices is None:
            self.indices = np.arange(1, lam.size + 1)
        else:
            self.indices = np.asarray(self.indices, dtype=int)
            if self.indices.shape != lam.shape:
                raise ValueError("indices and eigenvalues differ in length")
        if self.sector_bound is None:
            self.sector_bound = check_sectorial(self, self.theta, self.omega)
        else:
            _assert_outside_sector(lam, self.theta, self.omega)

    @classmethod
    def from_modes(cls, modes: Iterable[Eigenmode], **kwargs) -> "SpectralOperator":
        modes = list(modes)
        return cls(
            np.array([m.lam for m in modes], dtype=complex),
            indices=np.array([m.index for m in modes]),
            **kwargs,
        )

    @property
    def modes(self) -> list[Eigenmode]:
        return [Eigenmode(int(i), complex(l)) for i, l in zip(self.indices, self.eigenvalues)]

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    @property
    def spectral_gap(self) -> float:
        return float(np.abs(self.eigenvalues).min())

    @property
    def stable(self) -> np.ndarray:
        return self.eigenvalues.real < 0

    @property
    def unstable(self) -> np.ndarray:
        return self.eigenvalues.real > 0

    def mask(self, part: str) -> np.ndarray:
        if part == "whole":
            return np.ones(self.n_modes, dtype=bool)
        if part == "stable":
            return self.stable
        if part == "unstable":
            return self.unstable
        raise DomainError(f"part must be one of {PARTS}, got {part!r}")

    def zeros(self, *shape: int) -> np.ndarray:
        return np.zeros(shape + (self.n_modes,), dtype=complex)


@dataclass(frozen=True)
class DichotomyConstants:
    """Constants of the dichotomy estimates for one operator and (alpha, beta).

    A constant belonging to an empty stable or unstable part is 0.
    """

    M: float
    delta: float
    gamma: float
    M_alpha: float
    c_alpha: float
    c_beta: float
    k_alpha: float

    def __post_init__(self):
        if self.delta <= 0 or self.gamma <= 0:
            raise DomainError("delta and gamma must be positive")
        if self.gamma > self.delta * (1 + 1e-15):
            raise DomainError("gamma may not exceed delta")
        for name in ("M", "M_alpha", "c_alpha", "c_beta", "k_alpha"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative")

    def replace(self, **changes) -> "DichotomyConstants":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return DichotomyConstants(**values)


# --- sectoriality and hyperbolicity -----------------------------------------


def _arg_from_vertex(lam: np.ndarray, omega: float) -> np.ndarray:
    return np.abs(np.angle(lam - omega))


def _assert_outside_sector(lam: np.ndarray, theta: float, omega: float) -> None:
    if not math.pi / 2 < theta < math.pi:
        raise DomainError(f"theta must lie in (pi/2, pi), got {theta}")
    d = lam - omega
    # eigenvalues on the boundary rays make the resolvent bound infinite
    inside = (np.abs(d) > 0) & (_arg_from_vertex(lam, omega) <= theta * (1 + 1e-14))
    if np.any(inside):
        bad = lam[inside][0]
        raise SpectrumInSector(
            f"eigenvalue {bad} lies in the closed sector |arg(z - {omega})| <= {theta:.6g}"
        )


def check_sectorial(
    op: SpectralOperator,
    theta: float | None = None,
    omega: float | None = None,
    boundary_samples: int = 4096,
) -> float:
    """Certify the sector constant M of a diagonal operator.

    For a diagonal operator ``||R(z, A)|| = 1 / dist(z, spectrum)``, and
    ``|z - omega| * ||R(z, A)||`` is subharmonic in the sector, so its
    supremum is taken on the two boundary rays. The rays are sampled on a
    logarithmic grid augmented with the closed-form maximiser of each
    single-eigenvalue ratio, which makes the sampled maximum exact.

    Raises
    ------
    SpectrumInSector
        If an eigenvalue lies in the (closed) sector.
    """
    theta = op.theta if theta is None else theta
    omega = op.omega if omega is None else omega
    if boundary_samples < 16:
        raise DomainError("boundary_samples must be at least 16")
    lam = op.eigenvalues
    _assert_outside_sector(lam, theta, omega)

    d = lam - omega
    scale = max(1.0, float(np.abs(d).max()))
    radii = [np.logspace(-8, 8, boundary_samples) * scale]
    for phi in (theta, -theta):
        rot = d * np.exp(-1j * phi)
        b = rot.real
        crit = np.abs(d[b > 0]) ** 2 / b[b > 0]
        radii.append(crit)
    r = np.unique(np.concatenate(radii))

    best = 1.0
    for phi in (theta, -theta):
        z = omega + r * np.exp(1j * phi)
        dist = np.abs(z[:, None] - lam[None, :]).min(axis=1)
        best = max(best, float(np.max(np.abs(z - omega) / dist)))
    return best


def check_hyperbolic(op: SpectralOperator, tol: float = 1e-9) -> float:
    """Return delta = min |Re lambda_n|; raise NotHyperbolic if it is <= tol."""
    re = np.abs(op.eigenvalues.real)
    delta = float(re.min())
    if delta <= tol:
        n = int(op.indices[np.argmin(re)])
        raise NotHyperbolic(
            f"mode {n} has |Re lambda| = {delta:.3g} <= {tol:.3g}; spectrum meets the imaginary axis"
        )
    return delta


# --- semigroup --------------------------------------------------------------


def _check_time(t: float, part: str) -> None:
    if part in ("whole", "stable") and t < 0:
        raise DomainError(f"{part} semigroup is only defined for t >= 0, got t={t}")
    if part == "unstable" and t > 0:
        raise DomainError(f"unstable semigroup is only defined for t <= 0, got t={t}")


def semigroup_multiplier(op: SpectralOperator, t: float, part: str = "whole") -> np.ndarray:
    _check_time(t, part)
    mult = np.exp(op.eigenvalues * t)
    return np.where(op.mask(part), mult, 0.0)


def semigroup_apply(op: SpectralOperator, t: float, x, part: str = "whole") -> np.ndarray:
    """T(t) restricted to ``part`` applied to ``x`` (modes on the last axis)."""
    return semigroup_multiplier(op, t, part) * np.asarray(x, dtype=complex)


def a_semigroup_apply(op: SpectralOperator, t: float, x, part: str = "whole") -> np.ndarray:
    """A T(t) restricted to ``part`` applied to ``x``."""
    return op.eigenvalues * semigroup_multiplier(op, t, part) * np.asarray(x, dtype=complex)


# --- norms ------------------------------------------------------------------


def sup_norm(x) -> np.ndarray:
    return np.abs(np.asarray(x)).max(axis=-1)


def fractional_weights(op: SpectralOperator, alpha: float) -> np.ndarray:
    if op.spectral_gap == 0.0:
        raise ZeroGap("fractional-power norm needs every eigenvalue away from 0")
    return np.abs(op.eigenvalues) ** alpha


def interpolation_weights(op: SpectralOperator, alpha: float) -> np.ndarray:
    """Per-mode value of sup_{0<t<=1} t^(1-alpha) |lambda| e^(Re lambda t)."""
    re = op.eigenvalues.real
    p = 1.0 - alpha
    with np.errstate(divide="ignore"):
        tstar = np.where(re < 0, p / np.abs(re), np.inf)
    inner = np.where(tstar < 1.0, (np.minimum(tstar, 1.0)) ** p * np.exp(-p), np.exp(re))
    return np.abs(op.eigenvalues) * inner


def alpha_norm(op: SpectralOperator, x, spec: AlphaSpaceSpec | float) -> np.ndarray:
    """Norm of the intermediate space X_alpha.

    fractional-power:   max_n |lambda_n|^alpha |x_n|
    real-interpolation: ||x|| + sup_{0<t<=1} t^(1-alpha) ||A T(t) x||

    The interpolation seminorm is evaluated mode by mode at the exact
    maximiser in t rather than on a grid.
    """
    if not isinstance(spec, AlphaSpaceSpec):
        spec = AlphaSpaceSpec(float(spec))
    x = np.asarray(x, dtype=complex)
    if spec.flavor == FRACTIONAL:
        return sup_norm(fractional_weights(op, spec.alpha) * x)
    return sup_norm(x) + sup_norm(interpolation_weights(op, spec.alpha) * x)


def extrap_constant(op: SpectralOperator, spec: AlphaSpaceSpec) -> float:
    """A certified c with ||x||_a <= c ||x||^(1-a) (||x|| + ||Ax||)^a.

    Both flavors reduce to per-mode bounds |x_n| w_n <= C_n |x_n|^(1-a) (|lambda_n||x_n|)^a.
    """
    if spec.flavor == FRACTIONAL:
        fractional_weights(op, spec.alpha)
        return 1.0
    lam = np.abs(op.eigenvalues)
    s = interpolation_weights(op, spec.alpha) / lam
    return 1.0 + float(np.max(lam ** (1.0 - spec.alpha) * s))


def analytic_bounds(op: SpectralOperator) -> tuple[float, float]:
    """(M0, M1) with ||T(t)|| <= M0 e^(omega t), ||t (A - omega) T(t)|| <= M1 e^(omega t)."""
    d = op.eigenvalues - op.omega
    if np.any(d.real > 0):
        raise DomainError("an eigenvalue lies to the right of the sector vertex")
    m0 = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        per_mode = np.where(d.real < 0, np.abs(d) / (math.e * np.abs(d.real)), np.where(d == 0, 0.0, np.inf))
    return m0, float(per_mode.max())


# --- dichotomy constants ----------------------------------------------------


def _sup_power_exp(p: float, a: np.ndarray) -> np.ndarray:
    """sup_{t>0} t^p e^(-a t) for a > 0."""
    return (p / a) ** p * np.exp(-p)


def _max_or_zero(values: np.ndarray) -> float:
    return float(values.max()) if values.size else 0.0


def estimate_constants(
    op: SpectralOperator, alpha: float, beta: float, gamma_fraction: float = 0.9
) -> DichotomyConstants:
    """Closed-form per-mode suprema of the six dichotomy inequalities.

    All alpha/beta norms are of the fractional-power flavor. gamma is taken
    as ``gamma_fraction * delta``.
    """
    if not 0.0 < alpha < beta < 1.0:
        raise DomainError(f"need 0 < alpha < beta < 1, got alpha={alpha}, beta={beta}")
    if not 0.0 < gamma_fraction < 1.0:
        raise DomainError(f"gamma_fraction must lie in (0, 1), got {gamma_fraction}")
    delta = check_hyperbolic(op)
    gamma = gamma_fraction * delta
    lam = op.eigenvalues
    mod = np.abs(lam)
    st, un = op.stable, op.unstable
    a = np.abs(lam.real[st]) - gamma
    q = 1.0 + alpha - beta

    m_dich = 1.0
    m_alpha = _max_or_zero(mod[st] ** alpha * _sup_power_exp(alpha, a))
    c_alpha = _max_or_zero(mod[un] ** alpha)
    c_unstable = _max_or_zero(mod[un] ** q)
    c_stable = _max_or_zero(mod[st] ** q * _sup_power_exp(q, a))
    k_alpha = op.spectral_gap ** (alpha - beta)
    return DichotomyConstants(
        M=m_dich,
        delta=delta,
        gamma=gamma,
        M_alpha=m_alpha,
        c_alpha=c_alpha,
        c_beta=max(c_unstable, c_stable),
        k_alpha=k_alpha,
    )


# --- verification -----------------------------------------------------------


@dataclass
class InequalityCheck:
    name: str
    max_ratio: float
    argmax_t: float
    passed: bool


@dataclass
class EstimateReport:
    rows: list[InequalityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def ratio(self, name: str) -> float:
        return next(r.max_ratio for r in self.rows if r.name == name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["inequality", "max_ratio", "argmax_t", "pass"])
        for r in self.rows:
            w.writerow([r.name, f"{r.max_ratio:.12g}", f"{r.argmax_t:.12g}", int(r.passed)])
        return buf.getvalue()


def default_time_grid(n: int = 200, t_min: float = 1e-6, t_max: float = 50.0) -> np.ndarray:
    return np.logspace(math.log10(t_min), math.log10(t_max), n)


def sample_vectors(n_modes: int, n_random: int = 20, seed: int = 0) -> np.ndarray:
    """Basis vectors followed by random complex vectors of unit sup norm."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_random, n_modes)) + 1j * rng.standard_normal((n_random, n_modes))
    z /= np.abs(z).max(axis=1, keepdims=True)
    return np.vstack([np.eye(n_modes, dtype=complex), z])


def _ratio_table(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lhs == 0, 0.0, lhs / rhs)
    return np.where(np.isnan(ratio), np.inf, ratio)


def verify_estimates(
    op: SpectralOperator,
    consts: DichotomyConstants,
    alpha: float,
    beta: float,
    t_grid: Sequence[float] | None = None,
    x_samples: np.ndarray | None = None,
    tol: float = 1e-9,
) -> EstimateReport:
    """Largest observed LHS/RHS ratio of each dichotomy inequality.

    ``t_grid`` holds positive times; the unstable-side inequalities use
    its mirror image. t = 0 is added wherever the inequality is defined there.
    """
    t_pos = default_time_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    t_pos = np.unique(np.abs(t_pos[t_pos != 0]))
    x = sample_vectors(op.n_modes) if x_samples is None else np.asarray(x_samples, dtype=complex)
    lam = op.eigenvalues
    wa = fractional_weights(op, alpha)
    xb = sup_norm(fractional_weights(op, beta) * x)
    xs = sup_norm(x)
    st, un = op.stable, op.unstable
    d, g = consts.delta, consts.gamma

    def lhs(times, part_mask, weights, with_a=False):
        # (n_t, n_x); masked modes get exponent -inf so nothing overflows
        expo = np.where(part_mask, lam * times[:, None], -np.inf)
        mult = np.exp(expo) * (lam if with_a else 1.0)
        return sup_norm(weights * mult[:, None, :] * x[None, :, :])

    with_zero = np.concatenate([[0.0], t_pos])
    neg = -with_zero
    one = np.ones(op.n_modes)

    checks = [
        ("hyP", with_zero, lhs(with_zero, st, one),
         consts.M * np.exp(-d * with_zero)[:, None] * xs[None, :]),
        ("hyQ", neg, lhs(neg, un, one),
         consts.M * np.exp(d * neg)[:, None] * xs[None, :]),
        ("hyP*", t_pos, lhs(t_pos, st, wa),
         consts.M_alpha * (t_pos ** -alpha * np.exp(-g * t_pos))[:, None] * xs[None, :]),
        ("hyQ*", neg, lhs(neg, un, wa),
         consts.c_alpha * np.exp(d * neg)[:, None] * xs[None, :]),
        ("beta1", neg, lhs(neg, un, wa, with_a=True),
         consts.c_beta * np.exp(d * neg)[:, None] * xb[None, :]),
        ("beta2", t_pos, lhs(t_pos, st, wa, with_a=True),
         consts.c_beta * (t_pos ** (beta - alpha - 1) * np.exp(-g * t_pos))[:, None] * xb[None, :]),
    ]
    report = EstimateReport()
    for name, times, left, right in checks:
        ratio = _ratio_table(left, right)
        k = np.unravel_index(np.argmax(ratio), ratio.shape)
        worst = float(ratio[k])
        report.rows.append(InequalityCheck(name, worst, float(times[k[0]]), worst <= 1.0 + tol))
    return report


def verify_interpolation(
    op: SpectralOperator,
    alpha: float,
    beta: float,
    k_alpha: float,
    x_samples: np.ndarray | None = None,
    tol: float = 1e-9,
) -> EstimateReport:
    """Check the interpolation inequality (both flavors) and the X_beta -> X_alpha embedding."""
    x = sample_vectors(op.n_modes) if x_samples is None else np.asarray(x_samples, dtype=complex)
    xs = sup_norm(x)
    ax = sup_norm(op.eigenvalues * x)
    report = EstimateReport()
    for flavor in (FRACTIONAL, REAL_INTERP):
        spec = AlphaSpaceSpec(alpha, flavor)
        c0 = extrap_constant(op, spec)
        ratio = _ratio_table(alpha_norm(op, x, spec), c0 * xs ** (1 - alpha) * (xs + ax) ** alpha)
        worst = float(ratio.max())
        report.rows.append(InequalityCheck(f"extrap[{flavor}]", worst, math.nan, worst <= 1 + tol))
    ratio = _ratio_table(alpha_norm(op, x, alpha), k_alpha * alpha_norm(op, x, beta))
    worst = float(ratio.max())
    report.rows.append(InequalityCheck("embedding", worst, math.nan, worst <= 1 + tol))
    return report
