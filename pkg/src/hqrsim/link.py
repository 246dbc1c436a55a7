"""Closed-form fidelity and success probability of one repeater segment.

Both qubits start in |+>, the probe picks up a conditional rotation in each
cavity, loses photons in the fibre, is re-displaced by a real beta and then
post-selected by a p-homodyne window [-p_c, p_c].  Everything is Gaussian,
so the conditional two-qubit state has closed-form entries:

* the |01><01| and |10><10| populations are windowed Gaussians with means
  -/+ beta sin(theta/2) and variance (1 + 2 T nu(nu + mu)) / 4;
* the |01><10| coherence is a single complex Gaussian integral centred at
  p = 0, giving one complex erf times a prefactor and a phase factor.

The normalised fidelity with |Psi+> is then
(erf_- + erf_+ + 2 Re[coherence]) / (8 P_s).
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .numerics import erf_complex
from .states import LinkConfig, MeasurementConfig, SqueezedQumode, loss_variance_factor

_SQRT2 = math.sqrt(2.0)


class UnphysicalParameters(ValueError):
    pass


class UndefinedConditionalState(ArithmeticError):
    """Raised when the post-selection probability is too small to normalise."""


P_S_FLOOR = 1e-300


@dataclass(frozen=True)
class LinkResult:
    F: float
    F_abs: float
    P_s: float
    alpha: float
    r: float
    beta: float
    p_c: float
    link: LinkConfig
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    @property
    def qumode(self) -> SqueezedQumode:
        return SqueezedQumode(self.alpha, self.r)

    @property
    def meas(self) -> MeasurementConfig:
        return MeasurementConfig(self.beta, self.p_c)


def _window(centre: float, half_width: float, scale: float) -> float:
    """erf(scale (w - c)) + erf(scale (w + c)), the mass of a Gaussian inside [-w, w] times 2.

    Rewritten with erfc when the Gaussian sits outside the window so tails
    keep their relative accuracy.  Real arguments take the stdlib path;
    complex ones always go through ``erf_complex``.
    """
    a = scale * (half_width + abs(centre))
    b = scale * (half_width - abs(centre))
    if b >= 0:
        return math.erf(a) + math.erf(b)
    return math.erfc(-b) - math.erfc(a)


def success_probability(q: SqueezedQumode, link: LinkConfig, meas: MeasurementConfig) -> float:
    """Probability that the p-homodyne outcome lands in [-p_c, p_c]."""
    T, theta = link.T, link.theta
    shift = meas.beta * math.sin(theta / 2)
    # pairs (n = 0, 1) of the four erf terms share a mean up to sign
    total = 0.0
    for m in (0, 1):
        den = loss_variance_factor(q, T, m * theta)
        if den <= 0:
            raise UnphysicalParameters(f"non-positive variance factor {den} (T={T})")
        mean = shift + math.sqrt(T) * q.alpha * math.sin(m * theta)
        total += _window(mean, meas.p_c, _SQRT2 / math.sqrt(den))
    return min(max(total / 4.0, 0.0), 1.0)


def coherence_term(q: SqueezedQumode, link: LinkConfig, meas: MeasurementConfig) -> complex:
    """Windowed |01><10| coherence, scaled by 4 (i.e. without the 1/4 from |+>|+>)."""
    mu, nu = q.mu, q.nu
    T, R, theta = link.T, link.R, link.theta
    alpha, beta, pc = q.alpha, meas.beta, meas.p_c
    s = math.sin(theta / 2)
    e1, eh = cmath.exp(1j * theta), cmath.exp(0.5j * theta)
    mix = T + e1 * R
    width_sq = 2 * (mu - nu * mix) / (mu + nu * (T - e1 * R))
    det = mu * mu - nu * nu * mix * mix
    exponent = (
        2j * alpha * s * (mu + nu) * (alpha * eh * R - 2 * beta * math.sqrt(T)) / (mu + nu * mix)
        - 2j
        * beta**2
        * s
        * (mu * mu / eh - nu * nu * (eh * T + eh**3 * R) + 2j * mu * nu * T * s)
        / det
    )
    return erf_complex(pc * cmath.sqrt(width_sq)) / cmath.sqrt(det) * cmath.exp(exponent)


def fidelity(
    q: SqueezedQumode, link: LinkConfig, meas: MeasurementConfig, envelope: bool = True
) -> LinkResult:
    """Fidelity with |Psi+> of the post-selected two-qubit state.

    Both the plain fidelity ``F`` (real part of the coherence) and the
    envelope ``F_abs`` (its modulus, i.e. after an ideal local phase
    correction) are returned; ``envelope`` only documents which one the
    caller is after and does not change the result.
    """
    del envelope
    P_s = success_probability(q, link, meas)
    if P_s < P_S_FLOOR:
        raise UndefinedConditionalState(f"P_s = {P_s:g} below {P_S_FLOOR:g}")
    s = math.sin(link.theta / 2)
    den = math.sqrt(loss_variance_factor(q, link.T))
    pops = _window(meas.beta * s, meas.p_c, _SQRT2 / den)
    coh = coherence_term(q, link, meas)
    F = (pops + 2 * coh.real) / (8 * P_s)
    F_abs = (pops + 2 * abs(coh)) / (8 * P_s)
    return LinkResult(F, F_abs, P_s, q.alpha, q.r, meas.beta, meas.p_c, link)


def evaluate(alpha, r, beta, p_c, link: LinkConfig) -> LinkResult:
    """Convenience wrapper used by sweeps and the CLI."""
    return fidelity(SqueezedQumode(alpha, r), link, MeasurementConfig(beta, p_c))


@dataclass(frozen=True)
class Grid:
    """Axis values for a sweep; each axis is a sequence (length 1 = fixed)."""

    alpha: tuple = (0.0,)
    r: tuple = (0.0,)
    beta: tuple = (0.0,)
    p_c: tuple = (0.1,)

    @classmethod
    def linspace(cls, resolution: int, **ranges) -> "Grid":
        """Build a grid from ``name=(lo, hi)`` pairs or scalars."""
        if resolution < 2:
            raise ValueError("resolution must be >= 2")
        axes = {}
        for name, v in ranges.items():
            if isinstance(v, tuple) and len(v) == 2:
                lo, hi = v
                if not (math.isfinite(lo) and math.isfinite(hi)):
                    raise ValueError(f"range for {name} must be finite")
                axes[name] = tuple(float(x) for x in np.linspace(lo, hi, resolution))
            else:
                axes[name] = (float(v),)
        return cls(**axes)


def evaluate_grid(grid: Grid, link: LinkConfig) -> list[LinkResult]:
    """Row-per-point sweep in lexicographic (alpha, r, beta, p_c) order.

    Per-point failures become rows with NaN values and the error text set.
    """
    rows = []
    for alpha, r, beta, p_c in itertools.product(grid.alpha, grid.r, grid.beta, grid.p_c):
        try:
            rows.append(evaluate(alpha, r, beta, p_c, link))
        except (ArithmeticError, ValueError) as exc:
            nan = float("nan")
            rows.append(LinkResult(nan, nan, nan, alpha, r, beta, p_c, link, error=f"{type(exc).__name__}: {exc}"))
    return rows
