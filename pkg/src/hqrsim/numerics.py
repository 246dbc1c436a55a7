"""Numeric kernels: complex error function, adaptive quadrature, bounded maximizer.

The error function is evaluated in-house (Taylor series near the origin, a
Weideman rational approximation of the Faddeeva function in the middle range
and the Laplace continued fraction far out).  Quadrature and the simplex
search lean on QUADPACK and scipy's Nelder-Mead respectively.
"""

from __future__ import annotations

import cmath
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.stats import qmc

log = logging.getLogger(__name__)

ERF_DOMAIN = 1e3

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)

# region boundaries in |z|
_TAYLOR_RADIUS = 2.0
_CF_RADIUS = 12.0
_CF_DEPTH = 90


def _weideman_table(n_terms: int = 36) -> tuple[float, np.ndarray]:
    """Polynomial coefficients of Weideman's rational Faddeeva approximation."""
    m = 2 * n_terms
    k = np.arange(-m + 1, m)
    scale = math.sqrt(n_terms / math.sqrt(2.0))
    t = scale * np.tan(k * math.pi / (2 * m))
    f = np.concatenate([[0.0], np.exp(-t * t) * (scale * scale + t * t)])
    coeffs = np.real(np.fft.fft(np.fft.fftshift(f))) / (2 * m)
    return scale, coeffs[1 : n_terms + 1][::-1].copy()


_W_SCALE, _W_COEFFS = _weideman_table()
_W_COEFFS_LIST = [float(c) for c in _W_COEFFS]


def _faddeeva_upper(z: complex) -> complex:
    """w(z) = exp(-z^2) erfc(-iz) for Im z >= 0."""
    if abs(z) >= _CF_RADIUS:
        # Laplace continued fraction, evaluated bottom-up
        tail = z
        for k in range(_CF_DEPTH, 0, -1):
            tail = z - (0.5 * k) / tail
        return 1j * _INV_SQRT_PI / tail
    den = _W_SCALE - 1j * z
    x = (_W_SCALE + 1j * z) / den
    acc = 0j
    for c in _W_COEFFS_LIST:
        acc = acc * x + c
    return 2.0 * acc / (den * den) + _INV_SQRT_PI / den


def _erf_taylor(z: complex) -> complex:
    z2 = z * z
    term = z
    total = z
    n = 0
    while True:
        n += 1
        term *= -z2 / n
        piece = term / (2 * n + 1)
        total += piece
        if abs(piece) <= 1e-17 * abs(total):
            return _TWO_OVER_SQRT_PI * total


def _erf_scalar(z: complex) -> complex:
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"erf_complex: non-finite argument {z!r}")
    size = abs(z)
    if size > ERF_DOMAIN:
        raise ValueError(f"erf_complex: |z| = {size:g} outside documented domain |z| <= {ERF_DOMAIN:g}")
    if size < _TAYLOR_RADIUS:
        return _erf_taylor(z)
    if z.real < 0:
        return -_erf_scalar(-z)
    # erfc(z) = exp(-z^2) w(iz); iz lies in the closed upper half-plane here
    w = _faddeeva_upper(1j * z)
    e = -z * z
    if e.real < -745.0:
        return complex(1.0, 0.0)
    return 1.0 - cmath.exp(e) * w


def erf_complex(z):
    """Error function of a complex argument.

    Accepts a Python/NumPy scalar or an array (evaluated elementwise).  Real
    input still yields a complex result.  Raises ``ValueError`` for
    non-finite input or ``|z| > 1e3``; ``OverflowError`` if the value itself
    is not representable (large ``|Im z|``).

    >>> erf_complex(1 + 1j)
    (1.3161512816979477+0.19045346923783468j)
    """
    if np.ndim(z) == 0:
        return _erf_scalar(complex(z))
    arr = np.asarray(z, dtype=complex)
    out = np.empty_like(arr)
    flat_in, flat_out = arr.ravel(), out.ravel()
    for i, v in enumerate(flat_in):
        flat_out[i] = _erf_scalar(complex(v))
    return out


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    converged: bool
    message: str = ""

    def __float__(self) -> float:
        return self.value


def integrate_adaptive(
    f: Callable[[float], float], a: float, b: float, spec: QuadratureSpec | None = None
) -> QuadResult:
    """Adaptive Gauss-Kronrod integral of a real function over ``[a, b]``.

    Budget exhaustion or roundoff trouble does not raise; the best estimate
    is returned with ``converged=False`` and QUADPACK's message attached.
    """
    spec = spec or QuadratureSpec()
    if not (math.isfinite(a) and math.isfinite(b)) or a > b:
        raise ValueError(f"need finite a <= b, got [{a}, {b}]")
    if a == b:
        return QuadResult(0.0, 0.0, True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions, full_output=1
        )
    value, err, info = out[0], out[1], out[2]
    message = out[3] if len(out) > 3 else ""
    ok = len(out) == 3 and math.isfinite(value)
    return QuadResult(float(value), float(err), ok, "" if ok else str(message))


class NonFiniteObjective(ArithmeticError):
    pass


@dataclass
class Optimum:
    x: np.ndarray
    fun: float
    n_starts: int
    n_failed: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def __iter__(self):
        # allows ``x, f = maximize(...)``
        yield self.x
        yield self.fun


def latin_starts(bounds: np.ndarray, n: int, seed: int) -> np.ndarray:
    """``n`` Latin-hypercube points inside a ``(d, 2)`` box."""
    sampler = qmc.LatinHypercube(d=len(bounds), seed=seed)
    return qmc.scale(sampler.random(n), bounds[:, 0], bounds[:, 1]) if n else np.empty((0, len(bounds)))


def _nelder_mead(fneg, x0, lo, hi, xatol, max_evals):
    span = hi - lo
    step = np.where(span > 0, 0.05 * span, 0.0)
    simplex = [x0]
    for i in range(len(x0)):
        v = x0.copy()
        # step inward so the initial vertex stays inside the box
        v[i] = v[i] + step[i] if v[i] + step[i] <= hi[i] else v[i] - step[i]
        simplex.append(v)
    return optimize.minimize(
        fneg,
        x0,
        method="Nelder-Mead",
        bounds=list(zip(lo, hi)),
        options=dict(
            initial_simplex=np.array(simplex),
            xatol=xatol,
            fatol=1e-15,
            maxfev=max_evals,
            maxiter=max_evals,
        ),
    )


def maximize(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    bounds: Sequence[tuple[float, float]],
    n_starts: int = 16,
    seed: int = 0,
    xatol: float = 1e-9,
    max_evals: int = 20000,
    extra_starts: Sequence[Sequence[float]] = (),
) -> Optimum:
    """Multi-start bounded Nelder-Mead maximization.

    Starts are ``x0``, any ``extra_starts`` and ``n_starts`` Latin-hypercube
    points.  A start whose objective turns non-finite is abandoned and noted
    in ``diagnostics``.  Optima equal to within 1e-12 are broken by the
    lexicographically smallest ``x``.  Raises ``RuntimeError`` only when
    every start failed.
    """
    box = np.asarray(bounds, dtype=float).reshape(-1, 2)
    lo, hi = box[:, 0], box[:, 1]
    if not (np.all(np.isfinite(box)) and np.all(lo <= hi)):
        raise ValueError("bounds must be finite with lo <= hi")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != lo.shape or np.any(x0 < lo) or np.any(x0 > hi):
        raise ValueError(f"x0 {x0} not inside bounds")

    def fneg(x):
        v = f(np.clip(x, lo, hi))
        if not math.isfinite(v):
            raise NonFiniteObjective(f"objective = {v} at x = {x}")
        return -v

    starts = [x0] + [np.clip(np.asarray(s, dtype=float), lo, hi) for s in extra_starts]
    starts += list(latin_starts(box, n_starts, seed))

    best: tuple[float, np.ndarray] | None = None
    failures: list[str] = []
    for i, s in enumerate(starts):
        try:
            res = _nelder_mead(fneg, s, lo, hi, xatol, max_evals)
        except NonFiniteObjective as exc:
            failures.append(f"start {i}: {exc}")
            log.debug("maximize: start %d aborted: %s", i, exc)
            continue
        x = np.clip(res.x, lo, hi)
        val = -float(res.fun)
        if best is None or val > best[0] + 1e-12:
            best = (val, x)
        elif abs(val - best[0]) <= 1e-12 and tuple(x) < tuple(best[1]):
            best = (val, x)
    if best is None:
        raise RuntimeError("maximize: all starts failed; " + "; ".join(failures[:3]))
    return Optimum(best[1], best[0], len(starts), len(failures), failures)
