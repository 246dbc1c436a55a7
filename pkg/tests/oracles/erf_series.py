"""Independent erf oracle: the Maclaurin series summed in mpmath arbitrary precision.

Only mpmath's multiprecision arithmetic is used (not its erf).  Working
precision grows with |z|^2 to absorb the cancellation between terms of
size ~exp(|z|^2).

Run as a script to regenerate the frozen table in tests/data.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import mpmath as mp
import numpy as np

TABLE = Path(__file__).resolve().parent.parent / "data" / "erf_oracle.npz"
N_POINTS = 10_000
RADIUS = 20.0
SEED = 20240601


def erf_series(z: complex) -> complex:
    z = complex(z)
    a2 = abs(z) ** 2
    dps = 30 + int(a2 / math.log(10))
    with mp.workdps(dps):
        zz = mp.mpc(z)
        z2 = zz * zz
        term = zz
        total = zz
        eps = mp.mpf(10) ** (-dps + 2)
        n = 0
        while True:
            n += 1
            term = -term * z2 / n
            piece = term / (2 * n + 1)
            total += piece
            if n > a2 and abs(piece) < eps * abs(total):
                return complex(2 / mp.sqrt(mp.pi) * total)


def sample_points(n: int = N_POINTS, seed: int = SEED) -> np.ndarray:
    """Half uniform over the disk |z| <= 20, half log-uniform in radius."""
    rng = np.random.default_rng(seed)
    half = n // 2
    r = np.concatenate([RADIUS * np.sqrt(rng.random(half)), np.exp(rng.uniform(math.log(1e-3), math.log(RADIUS), n - half))])
    phase = rng.uniform(0.0, 2 * math.pi, n)
    return r * np.exp(1j * phase)


def main() -> None:
    z = sample_points()
    values = np.array([erf_series(v) for v in z])
    TABLE.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(TABLE, z=z, erf=values)
    print(f"wrote {len(z)} points to {TABLE}", file=sys.stderr)


if __name__ == "__main__":
    main()
