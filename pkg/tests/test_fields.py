import numpy as np
import pytest

from toruslock.errors import IncompatibleRepresentationsError, RepresentationError
from toruslock.fields import (ClosedFormField, PeriodicPL, ThetaShiftField,
                              arnold_field, constant_field, field_from_obj,
                              interpolate)


def test_arnold_k_bound():
    with pytest.raises(RepresentationError):
        arnold_field(K=1.0)


def test_validate_periodicity():
    arnold_field(tau=0.1, K=0.5, b=0.2).validate()
    constant_field(0.7).validate()


def test_interpolate_endpoints():
    f = arnold_field(tau=0.1, K=0.3, b=0.0)
    g = arnold_field(tau=0.2, K=0.5, b=0.1)
    assert interpolate(f, g, 0.0).d0(f) == 0.0
    assert interpolate(f, g, 1.0).d0(g) == 0.0


def test_interpolate_constants():
    f, g = constant_field(0.1), constant_field(0.3)
    h = interpolate(f, g, 0.5)
    assert h.lift(0.2, 0.7) == pytest.approx(0.2, abs=1e-15)


def test_interpolate_contraction_bound():
    # sup-norm oracle on a 64 x 64 grid: d(interp(f,g,t), f) <= t d(f,g)
    f = arnold_field(tau=0.0, K=0.4, b=0.05)
    g = arnold_field(tau=0.15, K=0.5, b=0.0)
    dfg = f.d0(g, 64)
    for t in (0.25, 0.5, 0.75):
        assert interpolate(f, g, t).d0(f, 64) <= t * dfg + 1e-12


def test_interpolate_rejects_far_fields():
    with pytest.raises(IncompatibleRepresentationsError):
        interpolate(constant_field(0.0), constant_field(0.8), 0.5)


def test_interpolate_rejects_mixed_kinds():
    f = constant_field(0.1)
    g = ThetaShiftField(constant_field(0.1), PeriodicPL.const(0.05))
    with pytest.raises(IncompatibleRepresentationsError):
        interpolate(f, g, 0.5)


def test_closed_form_roundtrip():
    f = arnold_field(tau=0.125, K=0.5, b=0.1)
    g = field_from_obj(f.to_obj())
    assert isinstance(g, ClosedFormField)
    assert g.d0(f) == 0.0


def test_theta_shift_roundtrip():
    corr = PeriodicPL(np.array([0.0, 0.25, 0.5, 0.75]),
                      np.array([0.01, -0.02, 0.005, 0.0]), 1.0)
    f = ThetaShiftField(arnold_field(tau=0.1, K=0.2, b=0.0), corr)
    g = field_from_obj(f.to_obj())
    assert g.d0(f) == 0.0


def test_periodic_pl_periodicity():
    corr = PeriodicPL(np.array([0.0, 0.1]), np.array([0.3, -0.1]), 0.25)
    th = np.array([0.05, 0.3, 0.55, 0.8])
    assert np.allclose(corr(th), corr(th + 0.25), atol=1e-12)


def test_constant_fibre_pl_exact():
    f = constant_field(0.3125)
    pl = f.fibre_pl(0.4)
    assert pl is not None
    assert pl(0.5) == 0.8125


def test_fibre_inverse_closed_form():
    f = arnold_field(tau=0.05, K=0.7, b=0.1)
    y = np.array([0.3, 1.1, -0.4])
    z = f.fibre_inverse(0.27, y)
    assert np.allclose(z + f.lift(0.27, z), y, atol=1e-11)
