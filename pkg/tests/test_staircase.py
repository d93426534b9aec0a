import math

import numpy as np
import pytest

from toruslock.dynamics import GOLDEN_MEAN, Omega, QpfSystem
from toruslock.errors import DomainError, NotATwistFamilyError
from toruslock.fields import arnold_field, constant_field
from toruslock.staircase import (StaircaseData, TwistFamily, arnold_family,
                                 detect_plateaus, interpolate_family,
                                 sweep_family)

GOLDEN = Omega.irrational(GOLDEN_MEAN)


def test_rigid_staircase_is_diagonal():
    fam = arnold_family(GOLDEN, K=0.0, b=0.0)
    taus = np.linspace(-0.2, 0.2, 21)
    data = sweep_family(fam, taus, n_max=100)
    assert np.array_equal(data.rho, taus)      # exact: rigid detection
    assert np.all(data.half_width == 0.0)
    assert detect_plateaus(data, level_tol=1e-9) == []


def test_arnold_plateau_width():
    fam = arnold_family(GOLDEN, K=0.5, b=0.0)
    taus = np.linspace(-0.2, 0.2, 101)        # cell 0.004
    data = sweep_family(fam, taus, n_max=4000)
    plats = detect_plateaus(data, level_tol=3e-4)
    assert len(plats) >= 1
    main = max(plats, key=lambda p: p.width)
    cell = 0.004
    assert main.level_rational == 0
    want = 0.5 / math.pi
    assert abs((main.width + cell) - want) <= cell + 1e-3


def test_plateau_shrinks_with_k():
    widths = {}
    for K in (0.25, 0.5):
        fam = arnold_family(GOLDEN, K=K, b=0.0)
        taus = np.linspace(-0.12, 0.12, 61)
        data = sweep_family(fam, taus, n_max=3000)
        plats = detect_plateaus(data, level_tol=5e-4)
        widths[K] = max(p.width for p in plats)
    assert widths[0.25] < widths[0.5]


def test_detect_exact_synthetic_steps():
    taus = np.linspace(0, 1, 21)
    rho = np.where(taus < 0.3, 0.25, np.where(taus < 0.7, 0.5, 0.75))
    data = StaircaseData(taus, rho, np.zeros_like(taus))
    plats = detect_plateaus(data, level_tol=1e-12)
    assert len(plats) == 3
    assert [p.level_rational for p in plats] == [
        pytest.approx(0.25), pytest.approx(0.5), pytest.approx(0.75)]


def test_sweep_rejects_antitwist():
    fam = TwistFamily(GOLDEN, lambda tau: constant_field(-tau))
    with pytest.raises(NotATwistFamilyError):
        sweep_family(fam, np.linspace(-0.1, 0.1, 5), n_max=50)


# -- family splice --------------------------------------------------------------

def base_family():
    return arnold_family(GOLDEN, K=0.3, b=0.05)


def test_splice_identity_member():
    fam = base_family()
    f_hat = QpfSystem(Omega.irrational(0.6), fam.field_of(0.05))
    out = interpolate_family(fam, 0.05, f_hat, (0.0, 0.1), eps=0.2)
    # the spliced member equals f_hat, endpoints equal the old fields
    assert out.field_of(0.05).d0(f_hat.field) < 1e-12
    assert out.field_of(0.0).d0(fam.field_of(0.0)) < 1e-12
    assert out.field_of(0.1).d0(fam.field_of(0.1)) < 1e-12
    assert out.omega.value == 0.6


def test_splice_closeness_bound():
    fam = base_family()
    hat_field = arnold_field(tau=0.052, K=0.31, b=0.05)
    f_hat = QpfSystem(GOLDEN, hat_field)
    eps = 0.2
    out = interpolate_family(fam, 0.05, f_hat, (0.0, 0.1), eps=eps)
    taus = np.linspace(-0.05, 0.15, 9)
    worst = max(out.field_of(t).d0(fam.field_of(t), 32) for t in taus)
    assert worst <= eps
    out.check_twist(np.linspace(0.0, 0.1, 4))


def test_splice_radius_precondition():
    fam = base_family()
    far = QpfSystem(GOLDEN, arnold_field(tau=0.4, K=0.3, b=0.05))
    with pytest.raises(DomainError):
        interpolate_family(fam, 0.05, far, (0.0, 0.1), eps=0.2)


def test_splice_continuity_at_junctions():
    fam = base_family()
    hat_field = arnold_field(tau=0.048, K=0.29, b=0.05)
    f_hat = QpfSystem(GOLDEN, hat_field)
    out = interpolate_family(fam, 0.05, f_hat, (0.0, 0.1), eps=0.2)
    for t0 in (0.0, 0.05, 0.1):
        gaps = [out.field_of(t0 - 1e-9).d0(out.field_of(t0 + 1e-9), 16)]
        assert max(gaps) < 1e-6
