import math

import numpy as np
import pytest

from hqrsim.states import (
    LinkConfig,
    MeasurementConfig,
    SqueezedQumode,
    branch_after_first_interaction,
    loss_variance_factor,
    momentum_wavefunction,
    transmittance,
)


def test_transmittance_values():
    assert transmittance(10) == pytest.approx(0.676082975391982, rel=1e-12)
    assert transmittance(20) == pytest.approx(0.457088189614875, rel=1e-12)
    assert transmittance(0) == 1.0
    assert transmittance(10) * transmittance(15) == pytest.approx(transmittance(25), rel=1e-14)
    with pytest.raises(ValueError):
        transmittance(-1)


def test_link_config_derived_fields():
    link = LinkConfig(0.01, 10)
    assert link.T + link.R == 1.0
    pinned = LinkConfig.from_transmittance(0.2, 0.8)
    assert pinned.T == 0.8 and pinned.distance_km == pytest.approx(-10 * math.log10(0.8) / 0.17)
    assert LinkConfig.from_transmittance(0.2, 1.0).R == 0.0
    with pytest.raises(ValueError):
        LinkConfig.from_transmittance(0.2, 0.0)


def test_qumode_and_measurement_validation():
    q = SqueezedQumode(3.0, 0.7)
    assert q.mu == math.cosh(0.7) and q.nu == -math.sinh(0.7) and q.xi == -0.7
    assert q.mu**2 - q.nu**2 == pytest.approx(1.0)
    with pytest.raises(ValueError):
        SqueezedQumode(1.0, -0.1)
    with pytest.raises(ValueError):
        MeasurementConfig(0.0, 0.0)
    with pytest.raises(ValueError):
        MeasurementConfig(float("inf"), 0.1)


def test_branch_states():
    q = SqueezedQumode(2.0, 0.5)
    b0 = branch_after_first_interaction(q, 0.4, 0)
    b1 = branch_after_first_interaction(q, 0.4, 1)
    assert b0.alpha_b == pytest.approx(2.0 * complex(math.cos(0.2), math.sin(0.2)))
    assert b1.alpha_b == pytest.approx(b0.alpha_b.conjugate())
    assert b0.xi_b == pytest.approx(-0.5 * complex(math.cos(0.4), math.sin(0.4)))
    with pytest.raises(ValueError):
        branch_after_first_interaction(q, 0.4, 2)


@pytest.mark.parametrize("alpha,xi", [(0j, 0j), (1.5 + 0.5j, -0.8 + 0j), (-0.3j, 0.6 * np.exp(0.7j))])
def test_wavefunction_normalised_with_right_mean(alpha, xi):
    p = np.linspace(-12, 12, 20001)
    h = p[1] - p[0]
    dens = np.abs(momentum_wavefunction(alpha, xi, p)) ** 2
    assert np.sum(dens) * h == pytest.approx(1.0, abs=1e-12)
    assert np.sum(p * dens) * h == pytest.approx(complex(alpha).imag, abs=1e-10)


def test_p_squeezed_variance():
    r = 0.9
    p = np.linspace(-6, 6, 20001)
    dens = np.abs(momentum_wavefunction(0j, complex(-r, 0), p)) ** 2
    var = np.sum(p * p * dens) * (p[1] - p[0])
    assert var == pytest.approx(math.exp(-2 * r) / 4, rel=1e-10)


def test_vacuum_phase_convention():
    # <0|S(xi)|0> > 0 and D(alpha) real-x displacement multiplies by exp(-2i x0 p)
    assert momentum_wavefunction(0j, -0.5 + 0j, 0.0).imag == 0
    val = momentum_wavefunction(2.0 + 0j, 0j, 0.3)
    ref = momentum_wavefunction(0j, 0j, 0.3) * np.exp(-2j * 2.0 * 0.3)
    assert val == pytest.approx(ref, rel=1e-14)


def test_loss_variance_factor():
    for r in (0.0, 0.4, 1.5):
        for T in (0.2, 0.7, 1.0):
            q = SqueezedQumode(0.0, r)
            assert loss_variance_factor(q, T) == pytest.approx(1 - T * (1 - math.exp(-2 * r)), rel=1e-13)
    q = SqueezedQumode(0.0, 1.0)
    # quarter turn swaps the squeezed and anti-squeezed quadratures
    assert loss_variance_factor(q, 1.0, math.pi / 2) == pytest.approx(math.exp(2.0), rel=1e-13)
