import numpy as np
import pytest

from dampol.bath import DiscretizedBathSystem
from dampol.errors import DomainError
from dampol.medium import CouplingSpec, MediumParams
from dampol.modes import OBSERVABLES, ModeIndex, evolve_observables
from dampol.response import LaplaceResponse

M = MediumParams()
OHM = CouplingSpec.ohmic(0.1)
K1 = ModeIndex(1.0)


@pytest.fixture(scope="module")
def bath20():
    return DiscretizedBathSystem(M, OHM, K1, 400, 20.0)


def _mismatch(system, t):
    resp = LaplaceResponse(M, OHM)
    co = evolve_observables(resp, K1, t, omega=system.bath_freqs)
    out = {}
    for i, ti in enumerate(t):
        for tag in OBSERVABLES:
            ca, cd, cb = system.coefficients(tag, ti)
            s = co[tag]
            ref = np.concatenate(([ca, cd], cb))
            got = np.concatenate(([s.c_a[i], s.c_d[i]], s.c_b[i] * np.sqrt(system.bath_weights)))
            out[(ti, tag)] = np.max(np.abs(ref - got)) / np.max(np.abs(ref))
    return out


def test_validation():
    with pytest.raises(DomainError):
        DiscretizedBathSystem(M, OHM, K1, 0)


def test_symplectic(bath20):
    assert bath20.symplectic_defect(10.0) < 1e-10
    assert bath20.symplectic_defect(-7.0) < 1e-10


def test_propagator_group_property(bath20):
    G = bath20.propagator(3.0) @ bath20.propagator(-3.0)
    assert np.max(np.abs(G - np.eye(G.shape[0]))) < 1e-10


def test_spec_point_agreement(bath20):
    errs = _mismatch(bath20, [10.0])
    assert max(errs.values()) < 1e-4


def test_backward_times_agree(bath20):
    errs = _mismatch(bath20, [-5.0, -10.0])
    assert max(errs.values()) < 1e-4


def test_truncation_error_shrinks_with_band():
    # the remaining mismatch at 400 nodes on [0, 20] is the band truncation (mostly in Ydot)
    t = [1.0, 5.0, 10.0, 20.0]
    e20 = max(_mismatch(DiscretizedBathSystem(M, OHM, K1, 400, 20.0), t).values())
    e40 = max(_mismatch(DiscretizedBathSystem(M, OHM, K1, 400, 40.0), t).values())
    assert e40 < 1e-4
    assert e40 < 0.5 * e20


def test_mass_counterterm_matters():
    bare = DiscretizedBathSystem(M, OHM, K1, 400, 20.0, mass_counterterm=False)
    assert max(_mismatch(bare, [10.0]).values()) > 1e-3


def test_matter_only_system_has_no_field():
    sysm = DiscretizedBathSystem(M, OHM, None, 50, 20.0)
    ca, cd, cb = sysm.coefficients("Y", 0.0)
    assert ca == 0.0 and cd == pytest.approx((2 * np.pi) ** -1.5 * np.sqrt(0.5))
    with pytest.raises(KeyError):
        sysm.coefficients("A", 1.0)
