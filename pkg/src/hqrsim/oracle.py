"""Brute-force conditional two-qubit state, independent of the closed forms.

The probe is carried as an explicit two-mode wavefunction in the
p-representation on a uniform grid:

1. each first-cavity branch |alpha_j, xi_j> meets a vacuum loss mode on a
   real-orthogonal beamsplitter (a point transformation of (p_a, p_b));
2. D(beta) multiplies by exp(-2i beta p_a);
3. the second-cavity rotation exp(+-i theta n / 2) is applied to mode a by
   integrating against the oscillator rotation (Mehler) kernel;
4. the loss mode is traced out by summing over the p_b grid.

Grid steps follow from the largest local frequency of each integrand, so
the trapezoid sums converge spectrally.  Only moderate amplitudes are
supported: at the operating point of the scheme (alpha ~ 1e2) the
integrands oscillate far too fast for this approach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .numerics import QuadratureSpec, integrate_adaptive
from .states import (
    LinkConfig,
    MeasurementConfig,
    SqueezedQumode,
    branch_after_first_interaction,
    momentum_wavefunction,
)

MAX_ALPHA = 3.0
MAX_R = 1.5
MAX_BETA = 3.0
MAX_GRID = 40000

BELL_LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")
# rows: Bell vectors in the basis |00>, |01>, |10>, |11>
BELL_BASIS = np.array(
    [[1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0]], dtype=complex
) / math.sqrt(2.0)
PSI_PLUS = BELL_BASIS[2]


class OracleDomainError(ValueError):
    pass


class OracleConvergenceError(ArithmeticError):
    pass


def rotation_kernel(phi: float, p, q):
    """<p| exp(i phi n) |q> for 0 < |phi| < pi (times dq gives the propagator)."""
    s, c = math.sin(phi), math.cos(phi)
    pref = np.exp(-0.5j * phi) / np.sqrt(complex(-1j * math.pi * s))
    return pref * np.exp(-1j * ((p * p + q * q) * c - 2.0 * p * q) / s)


def _reduce_angle(phi: float) -> float:
    phi = math.remainder(phi, 2.0 * math.pi)
    return math.pi if phi == -math.pi else phi


@dataclass(frozen=True)
class TwoQubitState:
    """Unnormalised post-selected state; ``norm`` is its trace (= P_s)."""

    m: np.ndarray
    norm: float

    @property
    def renormalized(self) -> np.ndarray:
        return self.m / self.norm

    def fidelity(self, target: np.ndarray = PSI_PLUS) -> float:
        return float(np.real(target.conj() @ self.renormalized @ target))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.m - self.m.conj().T)))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.renormalized + self.renormalized.conj().T)
        return float(np.linalg.eigvalsh(h)[0])


def bell_decomposition(s: TwoQubitState | np.ndarray) -> np.ndarray:
    """Bell-basis populations (Phi+, Phi-, Psi+, Psi-), summing to one."""
    rho = s.renormalized if isinstance(s, TwoQubitState) else np.asarray(s, dtype=complex)
    rho = rho / np.trace(rho).real
    return np.real(np.einsum("ki,ij,kj->k", BELL_BASIS.conj(), rho, BELL_BASIS))


def check_domain(q: SqueezedQumode, link: LinkConfig, meas: MeasurementConfig) -> None:
    if abs(q.alpha) > MAX_ALPHA or q.r > MAX_R or abs(meas.beta) > MAX_BETA:
        raise OracleDomainError(
            f"oracle supports |alpha| <= {MAX_ALPHA}, r <= {MAX_R}, |beta| <= {MAX_BETA}; "
            f"got alpha={q.alpha}, r={q.r}, beta={meas.beta}"
        )


class BranchFields:
    """Two-mode wavefunctions of the four (first, second cavity) branches.

    ``p_max`` bounds the mode-a momenta that will be requested; it enters the
    kernel bandwidth and hence the q-grid step.
    """

    def __init__(
        self,
        q: SqueezedQumode,
        link: LinkConfig,
        meas: MeasurementConfig,
        p_max: float,
        beamsplitter: str = "orthogonal",
        refine: float = 1.0,
    ):
        check_domain(q, link, meas)
        if beamsplitter not in ("orthogonal", "phase"):
            raise ValueError("beamsplitter must be 'orthogonal' or 'phase'")
        self.q, self.link, self.meas = q, link, meas
        self.beamsplitter = beamsplitter
        self.branches = [branch_after_first_interaction(q, link.theta, j) for j in (0, 1)]
        self.angles = [_reduce_angle(0.5 * link.theta), _reduce_angle(-0.5 * link.theta)]

        # Gaussian envelope: below ~1e-17 in amplitude outside +-half_width
        re_k = min(self._k(b.xi_b).real for b in self.branches)
        reach = abs(q.alpha) + math.sqrt(40.0 / re_k)
        self.half_width = math.sqrt(reach * reach + 40.0) + 1.0
        self.p_max = max(p_max, 0.0)

        L = self.half_width
        im_k = max(abs(self._k(b.xi_b).imag) for b in self.branches)
        state_freq = 2.0 * abs(q.alpha) + 2.0 * im_k * (2.0 * L + abs(q.alpha)) + 2.0 * abs(meas.beta)
        kernel_freq = max(
            (2.0 * L * abs(math.cos(a)) + 2.0 * self.p_max) / abs(math.sin(a))
            for a in self.angles
            if a not in (0.0, math.pi)
        ) if any(a not in (0.0, math.pi) for a in self.angles) else 0.0
        h_q = math.pi / ((state_freq + kernel_freq) * refine)
        h_b = math.pi / ((state_freq + 2.0 * L + 2.0) * refine)
        n_q = 2 * math.ceil(L / h_q) + 1
        n_b = 2 * math.ceil(L / h_b) + 1
        if max(n_q, n_b) > MAX_GRID:
            raise OracleConvergenceError(f"grid of {max(n_q, n_b)} points exceeds {MAX_GRID}")
        self.qgrid = np.linspace(-L, L, n_q)
        self.bgrid = np.linspace(-L, L, n_b)
        self.h_q = self.qgrid[1] - self.qgrid[0]
        self.h_b = self.bgrid[1] - self.bgrid[0]

    @staticmethod
    def _k(xi: complex) -> complex:
        r = abs(xi)
        if r == 0:
            return 1.0 + 0j
        nu = xi / r * math.sinh(r)
        return (math.cosh(r) - nu) / (math.cosh(r) + nu)

    def _two_mode(self, j: int, pa: np.ndarray, pb: np.ndarray) -> np.ndarray:
        """D_a(beta) U_BS |alpha_j, xi_j>|0> on the (pa, pb) mesh."""
        b = self.branches[j]
        tT, tR = math.sqrt(self.link.T), math.sqrt(self.link.R)
        A, B = pa[:, None], pb[None, :]
        psi = momentum_wavefunction(b.alpha_b, b.xi_b, tT * A - tR * B)
        psi = psi * momentum_wavefunction(0j, 0j, tR * A + tT * B)
        return psi * np.exp(-2j * self.meas.beta * A)

    @cached_property
    def _source(self) -> list[np.ndarray]:
        return [self._two_mode(j, self.qgrid, self.bgrid) for j in (0, 1)]

    @cached_property
    def _b_rotation(self) -> np.ndarray | None:
        if self.beamsplitter == "orthogonal":
            return None
        # a -> sqrt(T) a + i sqrt(R) b differs from the orthogonal splitter by
        # a quarter-turn of the loss mode, applied here on the output side
        b = self.bgrid
        return rotation_kernel(-0.5 * math.pi, b[:, None], b[None, :]) * self.h_b

    def field(self, j: int, l: int, p) -> np.ndarray:
        """Phi_{jl}(p, p_b) on ``p`` x ``bgrid``."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if np.any(np.abs(p) > self.p_max + 1e-12):
            raise ValueError(f"requested |p| beyond p_max = {self.p_max}")
        phi = self.angles[l]
        if phi == 0.0:
            out = self._two_mode(j, p, self.bgrid)
        elif phi == math.pi:
            out = self._two_mode(j, -p, self.bgrid)
        else:
            K = rotation_kernel(phi, p[:, None], self.qgrid[None, :]) * self.h_q
            out = K @ self._source[j]
        if self._b_rotation is not None:
            out = out @ self._b_rotation.T
        return out

    def densities(self, p) -> np.ndarray:
        """All sixteen <p|...|p> entries, shape (len(p), 4, 4), indices (2j+l, 2k+m)."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        fields = np.stack([self.field(j, l, p) for j in (0, 1) for l in (0, 1)], axis=1)
        return np.einsum("nab,ncb->nac", fields, fields.conj()) * self.h_b


def homodyne_density(
    j: int,
    k: int,
    l: int,
    m: int,
    p,
    q: SqueezedQumode,
    link: LinkConfig,
    meas: MeasurementConfig,
    beamsplitter: str = "orthogonal",
):
    """<p| R_l D(beta) Tr_b[|psi_j><psi_k|] D(beta)^+ R_m^+ |p> by quadrature."""
    for bit in (j, k, l, m):
        if bit not in (0, 1):
            raise ValueError("branch indices must be bits")
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    fields = BranchFields(q, link, meas, float(np.max(np.abs(p_arr))), beamsplitter)
    ket = fields.field(j, l, p_arr)
    bra = fields.field(k, m, p_arr)
    out = np.sum(ket * bra.conj(), axis=1) * fields.h_b
    return out if np.ndim(p) else complex(out[0])


def conditional_state(
    q: SqueezedQumode,
    link: LinkConfig,
    meas: MeasurementConfig,
    spec: QuadratureSpec | None = None,
    beamsplitter: str = "orthogonal",
) -> TwoQubitState:
    """Post-selected two-qubit matrix, entry (jl, km) = 1/4 int_{-p_c}^{p_c} density dp."""
    spec = spec or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-11)
    fields = BranchFields(q, link, meas, meas.p_c, beamsplitter)
    cache: dict[float, np.ndarray] = {}

    def entries(p: float) -> np.ndarray:
        hit = cache.get(p)
        if hit is None:
            hit = cache[p] = fields.densities([p])[0]
        return hit

    m = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for c in range(4):
            parts = []
            for part in (np.real, np.imag):
                res = integrate_adaptive(lambda p: float(part(entries(p)[a, c])), -meas.p_c, meas.p_c, spec)
                if not res.converged:
                    raise OracleConvergenceError(f"entry ({a},{c}): {res.message}")
                parts.append(res.value)
            m[a, c] = 0.25 * complex(*parts)
    return TwoQubitState(m, float(np.trace(m).real))
