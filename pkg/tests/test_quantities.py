from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from gravlab.errors import DimensionError
from gravlab.quantities import (
    CODATA2018,
    EV,
    PhysicalConstants,
    Quantity,
    ScaleSystem,
    rescale,
    scale_system_from_label,
)


def test_defaults_are_codata2018():
    c = CODATA2018
    assert c.hbar == pytest.approx(1.054571817e-34, rel=1e-9)
    assert c.G == 6.67430e-11
    assert c.c == 299792458.0
    assert c.e2_coulomb == pytest.approx(2.307077552e-28, rel=1e-9)
    assert c.m_e == 9.1093837015e-31


def test_constants_immutable_and_positive():
    with pytest.raises(Exception):
        CODATA2018.G = 1.0  # type: ignore[misc]
    with pytest.raises(ValueError):
        PhysicalConstants(G=-1.0)
    with pytest.raises(ValueError):
        CODATA2018.with_overrides(G=0.0)
    assert CODATA2018.with_overrides(G=1e-10).G == 1e-10


def test_identity_rescale():
    si = ScaleSystem.si()
    q = Quantity(1.0, "length")
    assert rescale(q, si, si) == q


def test_sn_natural_definitions():
    m = 1e-17
    sys = ScaleSystem.sn_natural(m)
    c = CODATA2018
    assert sys.energy_scale == pytest.approx(c.G**2 * m**5 / c.hbar**2, rel=1e-14)
    assert sys.length_scale == pytest.approx(c.hbar**2 / (c.G * m**3), rel=1e-14)
    # one natural energy unit expressed in SI joules is the scale itself
    out = rescale(Quantity(1.0, "energy"), sys, ScaleSystem.si())
    assert out.value == pytest.approx(sys.energy_scale, rel=1e-14)


def test_hartree_value():
    # E_h = m_e e^4 / hbar^2 evaluates to 27.211386... eV from CODATA constants
    atomic = ScaleSystem.atomic()
    assert atomic.energy_scale / EV == pytest.approx(27.211386, rel=1e-6)
    one_hartree = rescale(Quantity(27.211386245988 * EV, "energy"), ScaleSystem.si(), atomic)
    assert one_hartree.value == pytest.approx(1.0, rel=1e-7)


def test_dimension_tag_mismatch():
    with pytest.raises(DimensionError):
        Quantity(1.0, "charge")
    si = ScaleSystem.si()
    bad = object.__new__(Quantity)
    object.__setattr__(bad, "value", 1.0)
    object.__setattr__(bad, "dim", "charge")
    with pytest.raises(DimensionError):
        rescale(bad, si, si)


@given(
    value=st.floats(min_value=1e-20, max_value=1e20),
    dim=st.sampled_from(["mass", "length", "time", "energy", "action"]),
    mass=st.floats(min_value=1e-20, max_value=1e-5),
)
def test_round_trip_property(value, dim, mass):
    a = ScaleSystem.sn_natural(mass)
    b = ScaleSystem.atomic()
    q = Quantity(value, dim)
    back = rescale(rescale(q, a, b), b, a)
    assert back.value == pytest.approx(value, rel=1e-12)


@given(mass=st.floats(min_value=1e-12, max_value=1e-3))
def test_gm2_over_hbar_c_invariant(mass):
    # the dimensionless combination G M^2 / (hbar c) cannot depend on units
    c = CODATA2018
    for sys in (ScaleSystem.si(), ScaleSystem.atomic(), ScaleSystem.sn_natural(1e-8)):
        m = rescale(Quantity(mass, "mass"), ScaleSystem.si(), sys).value * sys.mass_reference
        assert c.G * m**2 / (c.hbar * c.c) == pytest.approx(
            c.G * mass**2 / (c.hbar * c.c), rel=1e-12
        )


def test_scale_system_from_label():
    assert scale_system_from_label("si").label == "SI"
    assert scale_system_from_label("atomic").label == "ATOMIC"
    assert scale_system_from_label("sn-natural", mass_reference=1e-9).label == "SN-NATURAL"
    with pytest.raises(ValueError):
        scale_system_from_label("sn-natural")
    with pytest.raises(ValueError):
        scale_system_from_label("imperial")
