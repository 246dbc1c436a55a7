"""Physical configuration of one repeater segment and single-mode Gaussian states.

Quadrature convention throughout: x = (a + a^+)/2, p = (a - a^+)/(2i), so
[x, p] = i/2 and the vacuum has variance 1/4 in either quadrature.  The
probe is D(alpha) S(xi)|0> with xi = r e^{i pi}, i.e. squeezed along p.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

THETA_DEFAULT = 0.01
LOSS_DB_PER_KM_DEFAULT = 0.17


def transmittance(distance_km: float, loss_db_per_km: float = LOSS_DB_PER_KM_DEFAULT) -> float:
    """Power transmission 10^(-loss*L/10) of a fibre segment."""
    if distance_km < 0 or loss_db_per_km < 0:
        raise ValueError("distance and loss must be non-negative")
    return 10.0 ** (-loss_db_per_km * distance_km / 10.0)


@dataclass(frozen=True)
class SqueezedQumode:
    alpha: float
    r: float = 0.0
    mu: float = field(init=False)
    nu: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.r)) or self.r < 0:
            raise ValueError(f"need finite alpha and r >= 0, got alpha={self.alpha}, r={self.r}")
        object.__setattr__(self, "mu", math.cosh(self.r))
        object.__setattr__(self, "nu", -math.sinh(self.r))

    @property
    def xi(self) -> complex:
        return complex(-self.r, 0.0)


@dataclass(frozen=True)
class LinkConfig:
    """A segment: conditional rotation angle plus fibre length and loss.

    ``T`` and ``R`` are derived.  Use :meth:`from_transmittance` when a
    transmittance is given directly (distance is then back-computed).
    """

    theta: float = THETA_DEFAULT
    distance_km: float = 0.0
    loss_db_per_km: float = LOSS_DB_PER_KM_DEFAULT
    T: float = field(init=False)
    R: float = field(init=False)

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")
        T = transmittance(self.distance_km, self.loss_db_per_km)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "R", 1.0 - T)

    @classmethod
    def from_transmittance(cls, theta: float, T: float, loss_db_per_km: float = LOSS_DB_PER_KM_DEFAULT):
        if not 0 < T <= 1:
            raise ValueError(f"transmittance must lie in (0, 1], got {T}")
        if T == 1.0:
            return cls(theta, 0.0, loss_db_per_km)
        if loss_db_per_km <= 0:
            raise ValueError("lossless fibre cannot have T < 1")
        link = cls(theta, -10.0 * math.log10(T) / loss_db_per_km, loss_db_per_km)
        # pin T exactly; the distance round-trip can be off in the last ulp
        object.__setattr__(link, "T", T)
        object.__setattr__(link, "R", 1.0 - T)
        return link


@dataclass(frozen=True)
class MeasurementConfig:
    beta: float = 0.0
    p_c: float = 0.1

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if not (math.isfinite(self.p_c) and self.p_c > 0):
            raise ValueError(f"window half-width p_c must be finite and positive, got {self.p_c}")


@dataclass(frozen=True)
class BranchState:
    """Amplitude and squeezing of the probe conditioned on one qubit value."""

    alpha_b: complex
    xi_b: complex


def branch_after_first_interaction(q: SqueezedQumode, theta: float, k: int) -> BranchState:
    """Probe state after exp(i theta n sigma_z / 2) given qubit value ``k``."""
    if k not in (0, 1):
        raise ValueError("k must be 0 or 1")
    sign = 1 if k == 0 else -1
    return BranchState(
        alpha_b=cmath.exp(0.5j * theta * sign) * q.alpha,
        xi_b=cmath.exp(1j * theta * sign) * q.xi,
    )


def momentum_wavefunction(alpha: complex, xi: complex, p):
    """<p| D(alpha) S(xi) |0> including the global phase.

    The phase is fixed by <0|S(xi)|0> = 1/sqrt(cosh|xi|) > 0 and the
    ordering D(alpha) = e^{2i(Im(alpha) x - Re(alpha) p)}; relative phases
    between branches matter for the qubit coherences, so neither may be
    dropped.
    """
    r = abs(xi)
    if r >= 10:
        raise ValueError("|xi| must be < 10")
    mu = math.cosh(r)
    nu = (xi / r) * math.sinh(r) if r > 0 else 0j
    k = (mu - nu) / (mu + nu)
    x0, p0 = complex(alpha).real, complex(alpha).imag
    p = np.asarray(p, dtype=float)
    norm = (2.0 / math.pi) ** 0.25 / np.sqrt(complex(mu + nu))
    out = norm * np.exp(1j * x0 * p0 - 2j * x0 * p - k * (p - p0) ** 2)
    return out if out.ndim else complex(out)


def loss_variance_factor(q: SqueezedQumode, T: float, rotation: float = 0.0) -> float:
    """4 x Var(p) after loss for a p-squeezed probe rotated by ``rotation``.

    Equals 1 + 2 T nu (nu + mu cos(2 rotation)); at zero rotation this is
    1 - T (1 - e^{-2r}).
    """
    return 1.0 + 2.0 * T * q.nu * (q.nu + q.mu * math.cos(2.0 * rotation))
