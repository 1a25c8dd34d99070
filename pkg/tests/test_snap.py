import math

import numpy as np
import pytest
from scipy import optimize

from sandglass.errors import DomainError, NoSolution, VerificationFailed
from sandglass.geometry import DesignSpec, Realization, build_vertices, volume
from sandglass.origami import origami_spec
from sandglass.realize import realize
from sandglass.snap import (
    FAILURE_CODES,
    EnergyLandscape,
    closed_state_check,
    extremal_candidates,
    extremal_Q2,
    extremal_residual,
    failure_code,
    find_saddle,
    path_is_monotone,
    snap_pair,
    snappability_of_lengths,
    survey_branches,
)


def bracket_scan(n, Q1, ymax=20.0, samples=20001):
    """Positive roots y of the printed extremal condition in y = sqrt(Q2), by sign changes."""
    f = lambda y: extremal_residual(n, Q1, y * y)  # noqa: E731
    ys = np.linspace(1e-9, ymax, samples)
    v = f(ys)
    out = []
    for k in np.nonzero(np.sign(v[1:]) != np.sign(v[:-1]))[0]:
        out.append(optimize.brentq(f, ys[k], ys[k + 1], xtol=1e-15) ** 2)
    return out


class TestEnergy:
    @pytest.fixture
    def land(self):
        return EnergyLandscape(origami_spec(4, 0.8, 0.3))

    def test_weights(self, land):
        n = 4
        L = np.sqrt(land.Q)
        den = 4 * n * L[0] + 2 * n * L[1] + 2 * n * L[2]
        assert land.denominator == pytest.approx(den, rel=1e-15)
        assert land.weights == pytest.approx([4 * n / (8 * L[0] ** 3) / den, 2 * n / (8 * L[1] ** 3) / den, 2 * n / (8 * L[2] ** 3) / den])

    def test_gradient_fd(self, land):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.uniform(-1, 1, 3)
            g = land.gradient(x)
            h = 1e-6
            fd = np.array([(land.energy(x + h * e) - land.energy(x - h * e)) / (2 * h) for e in np.eye(3)])
            assert np.allclose(g, fd, rtol=1e-5, atol=1e-10 * max(1, np.abs(g).max()))

    def test_hessian_fd(self, land):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = rng.uniform(-1, 1, 3)
            H = land.hessian(x)
            h = 1e-5
            fd = np.array([(land.gradient(x + h * e) - land.gradient(x - h * e)) / (2 * h) for e in np.eye(3)])
            assert np.allclose(H, fd.T, rtol=1e-5, atol=1e-9)
            assert np.allclose(H, H.T)

    def test_nonnegative_and_zero_at_realizations(self, land):
        rng = np.random.default_rng(2)
        assert np.all(land.energy(rng.uniform(-3, 3, (500, 3))) >= 0)
        for real in realize(land.spec):
            assert land.energy(real.coords) < 1e-12
            assert land.energy(real.mirror().coords) < 1e-12

    def test_vectorized(self, land):
        X = np.random.default_rng(3).normal(size=(7, 3))
        assert land.energy(X).shape == (7,)
        assert land.gradient(X).shape == (7, 3)
        assert land.energy(X)[2] == pytest.approx(float(land.energy(X[2])))


class TestExtremal:
    def test_bracket_scan_oracle(self):
        ours = extremal_candidates(3, 0.5)
        scan = bracket_scan(3, 0.5)
        assert len(ours) == len(scan) >= 1
        assert np.allclose(ours, scan, rtol=1e-10)

    @pytest.mark.parametrize("n,Q1", [(3, 0.75), (4, 1.3), (5, 2.2), (6, 4.1)])
    def test_residual_as_printed(self, n, Q1):
        for q2 in extremal_candidates(n, Q1):
            assert abs(extremal_residual(n, Q1, q2)) < 1e-10 * max(1, Q1**2, q2**2)

    def test_exact_n3(self):
        assert extremal_Q2(3, 0.75) == pytest.approx((3 - 2 * math.sqrt(2)) / 4, abs=1e-15)

    def test_lowest_branch(self):
        cands = extremal_candidates(3, 0.7)
        assert extremal_Q2(3, 0.7, verify=False) == cands[0]

    def test_survey_other_branches_fail(self):
        out = survey_branches(3, 0.7)
        assert out[0][1] == "OK"
        assert all(code != "OK" for _, code in out[1:])

    def test_domain(self):
        with pytest.raises(DomainError):
            extremal_candidates(3, 0.2)

    def test_verification_failure(self):
        with pytest.raises(VerificationFailed):
            extremal_Q2(3, 0.3)


class TestClosedState:
    def test_closed_realization(self, snap3):
        st = closed_state_check(snap3.closed)
        assert st and st.factor == "2Hrs+h" and st.dihedral == 0.0
        assert abs(st.tetra_volume) < 1e-9

    def test_open_realization(self, snap3):
        assert not closed_state_check(snap3.open)

    def test_other_factor(self):
        spec = DesignSpec.sandglass(5, 1, 1, 1)
        st = closed_state_check(Realization(0.5, 0.2, spec.R, spec))
        assert st and st.factor == "2rs-1" and st.dihedral == math.pi

    def test_exact_closed_state(self, snap3):
        x = snap3.closed.coords
        assert x == pytest.approx([1 / math.sqrt(6), -1 / (2 * math.sqrt(3)), 1 / math.sqrt(6)], abs=1e-12)


class TestSaddle:
    def test_saddle_properties(self, snap_by_n):
        for n, res in snap_by_n.items():
            assert res.sigma > 0
            assert res.grad_norm < 1e-10
            assert int(np.sum(res.hessian_eigenvalues < 0)) == 1
            assert res.saddle_shaky
            assert path_is_monotone(res.path_energy(), res.saddle_index)
            e = res.path_energy()
            assert e[0] < 1e-12 and e[-1] < 1e-12
            assert res.sigma == pytest.approx(snappability_of_lengths(res.spec, res.saddle_lengths), rel=1e-14)
            assert all(v for k, v in res.flags.items() if k not in ("closed_factor", "closed_tetra_volume"))

    def test_sigma_order(self, snap_by_n):
        for res in snap_by_n.values():
            assert 1e-5 < res.sigma < 1e-3

    def test_mirror_invariance(self, snap3):
        land = EnergyLandscape(snap3.spec)
        other = find_saddle(land, snap3.open.mirror(), snap3.closed.mirror())
        assert other.sigma == pytest.approx(snap3.sigma, rel=1e-10)
        assert np.allclose(other.saddle, snap3.saddle * [-1, -1, 1], atol=1e-9)

    def test_saddle_is_shaky_in_full_framework(self, snap3):
        # the saddle with its own lengths is a shaky realization of those lengths
        from sandglass.singular import is_shaky

        S = snap3.saddle_lengths
        spec = DesignSpec.sandglass(3, *S)
        assert is_shaky(Realization.from_coords(snap3.saddle, spec), tol=1e-6)

    def test_coinciding_endpoints(self, snap3):
        with pytest.raises(DomainError):
            find_saddle(EnergyLandscape(snap3.spec), snap3.open, snap3.open)

    def test_volumes_differ(self, snap3):
        v_open, v_closed = snap3.volumes()
        assert abs(v_open - v_closed) > 1e-3
        m = snap3.appendix_measures()
        assert m["rel_dvol"] == pytest.approx((v_open - v_closed) / v_closed)
        assert v_closed == pytest.approx(volume(build_vertices(snap3.spec, snap3.closed)))

    def test_sigma_vanishes_toward_shaky_limit(self):
        # n = 3 designs just above the lower feasibility edge: the pair merges
        out = []
        for q1 in (0.36, 0.35, 0.34):
            res = snap_pair(3, q1)
            out.append((res.sigma, float(np.linalg.norm(res.open.coords - res.closed.coords))))
        sig, gap = zip(*out)
        assert sig[0] > sig[1] > sig[2] and gap[0] > gap[1] > gap[2]
        assert sig[2] < 1e-8


class TestFailureCodes:
    def test_mapping(self):
        assert failure_code(NoSolution("x")) == "NO_EXTREMAL_Q2"
        assert failure_code(VerificationFailed("x")) == "NO_REALIZATION"
        assert set(FAILURE_CODES.values()) >= {"NO_SADDLE", "SADDLE_NOT_SHAKY", "SELF_INTERSECTING"}

    def test_unknown_reraised(self):
        with pytest.raises(KeyError):
            failure_code(KeyError("boom"))
