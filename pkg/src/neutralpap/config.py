"""Config files (YAML or JSON) for operators, PAP functions and problems.

Complex scalars are written as a number or an ``[re, im]`` pair. Coefficient
vectors are lists whose entries are numbers or ``[re, im]`` pairs, so a single
complex entry needs the nested form ``[[re, im]]``.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import yaml

from .equations import (
    HeatModel,
    TransportModel,
    build_heat,
    build_transport,
    lipschitz_for_theta,
)
from .errors import ConfigError
from .mild import BoundedMap, Nonlinearity, ProblemSpec
from .pap import ErgodicTerm, PAPFunction, TrigPolynomial
from .spectral import SpectralOperator


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping at top level")
    return data


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex values are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    try:
        return complex(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"not a number: {v!r}") from exc


def _vector(v, n: int | None = None) -> np.ndarray:
    if not isinstance(v, (list, tuple)):
        v = [v] * (n or 1)
    out = np.array([_complex(x) for x in v], dtype=complex)
    if n is not None and out.size != n:
        raise ConfigError(f"expected a vector of length {n}, got {out.size}")
    return out


def _need(d: dict, key: str):
    if key not in d:
        raise ConfigError(f"missing config key {key!r}")
    return d[key]


def model_from_config(d: dict):
    kind = d.get("model")
    if kind is None:
        return None
    if kind == "heat":
        return HeatModel(float(_need(d, "sigma")), int(d.get("n_modes", 16)))
    if kind == "transport":
        return TransportModel(float(_need(d, "sigma")), int(d.get("n_modes", 8)))
    raise ConfigError(f"unknown model {kind!r} (expected heat or transport)")


def operator_from_config(d: dict) -> SpectralOperator:
    """``operator: {eigenvalues: [[re, im], ...], omega, theta}`` or a heat/transport model."""
    model = model_from_config(d)
    if model is not None:
        return model.operator()
    spec = d.get("operator", d)
    try:
        lam = [_complex(x) for x in _need(spec, "eigenvalues")]
        return SpectralOperator(
            np.array(lam),
            omega=float(spec.get("omega", 0.0)),
            theta=float(spec.get("theta", 0.75 * math.pi)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad operator section: {exc}") from exc


def pap_from_config(d: dict | None, n_modes: int) -> PAPFunction:
    """``{ap: [{frequency, coefficient}], ergodic: [{kind, rate, coefficient, center, width}]}``."""
    d = d or {}
    terms = d.get("ap", [])
    if terms:
        freqs = [float(_need(t, "frequency")) for t in terms]
        coeffs = np.array([_vector(_need(t, "coefficient"), n_modes) for t in terms])
        ap = TrigPolynomial(np.array(freqs), coeffs)
    else:
        ap = TrigPolynomial.zero(n_modes)
    erg = []
    for t in d.get("ergodic", []):
        try:
            erg.append(
                ErgodicTerm(
                    str(_need(t, "kind")),
                    float(t.get("rate", 1.0)),
                    _vector(_need(t, "coefficient"), n_modes),
                    float(t.get("center", 0.0)),
                    float(t.get("width", 1.0)),
                )
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return PAPFunction(ap, erg)


def _nonlinearity(d: dict | None, op: SpectralOperator, beta: float | None) -> Nonlinearity:
    d = d or {}
    weights = np.abs(_vector(d.get("weights", 0.0), op.n_modes))
    try:
        return Nonlinearity(
            pap_from_config(d.get("forcing"), op.n_modes),
            str(d.get("kind", "linear")),
            weights.real,
            beta=beta,
            op=op if beta is not None else None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def problem_from_config(d: dict) -> ProblemSpec:
    """Build a ProblemSpec from either a model section or explicit operator/f/g/B/C sections."""
    alpha = float(d.get("alpha", 0.5))
    beta = float(d.get("beta", 0.75))
    p = float(d.get("delay", 0.0))
    gf = float(d.get("gamma_fraction", 0.9))
    model = model_from_config(d)
    if model is not None:
        if "theta_target" in d:
            K = lipschitz_for_theta(model, alpha, beta, float(d["theta_target"]), gf)
        else:
            K = float(d.get("K", 0.1))
        build = build_heat if isinstance(model, HeatModel) else build_transport
        return build(
            model.sigma, model.n_modes, alpha, beta, K, p,
            d.get("forcing"), str(d.get("nonlinearity", "tanh")), gf,
        )
    op = operator_from_config(d)
    try:
        B = BoundedMap(_vector(d.get("B", 1.0), op.n_modes), op, alpha)
        C = BoundedMap(_vector(d.get("C", 1.0), op.n_modes), op, alpha)
        return ProblemSpec(
            op, _nonlinearity(d.get("f"), op, beta), _nonlinearity(d.get("g"), op, None),
            B, C, alpha, beta, p, gf,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
