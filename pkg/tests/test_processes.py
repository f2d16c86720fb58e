import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyladder.processes import (
    BivariateSubordinatorSpec,
    DiscreteAtoms,
    ExponentialJumps,
    ProcessSpec,
    UniformJumps,
    kappa_biv,
    kappa_biv_rho_derivative,
    sample_skeleton,
)
from levyladder.fixtures import B1, P1, P3
from levyladder.rng import RngPolicy


class TestJumpLaws:
    def test_no_atom_at_zero(self):
        with pytest.raises(ValueError):
            DiscreteAtoms([(0.0, 1.0)])

    def test_probs_must_sum_to_one(self):
        with pytest.raises(ValueError):
            DiscreteAtoms([(1.0, 0.5), (-1.0, 0.4)])

    def test_rational_probs_are_kept_exact(self):
        law = DiscreteAtoms([(1.0, Fraction(1, 3)), (-1.0, Fraction(2, 3))])
        assert sum(law.probs, Fraction(0)) == 1

    def test_cdf_monotone_and_atoms(self):
        law = DiscreteAtoms([(-1.0, 0.25), (2.0, 0.75)])
        xs = [-2.0, -1.0, 0.0, 1.9, 2.0, 3.0]
        vals = [law.cdf(x) for x in xs]
        assert vals == sorted(vals)
        assert law.cdf(-1.0) == 0.25 and law.cdf(2.0) == 1.0  # right continuity
        assert law.atom(2.0) == 0.75 and law.atom(0.5) == 0.0

    def test_uniform_rejects_zero_in_range(self):
        with pytest.raises(ValueError):
            UniformJumps(-1.0, 1.0)
        law = UniformJumps(0.5, 1.5)
        assert law.atom(1.0) == 0.0
        assert law.cdf(1.0) == 0.5

    def test_exponential_signed(self):
        neg = ExponentialJumps(rate=2.0, sign=-1)
        assert neg.cdf(0.0) == 1.0 and neg.cdf(-10.0) < 0.01
        assert neg.mean() == -0.5


class TestProcessSpec:
    def test_pure_drift_requires_nonzero_drift(self):
        with pytest.raises(ValueError):
            ProcessSpec(drift=0.0, rate=0.0)

    def test_compound_poisson_classification(self):
        assert P3.is_compound_poisson
        assert not P1.is_compound_poisson
        assert not ProcessSpec(drift=1.0, rate=0.0).is_compound_poisson

    def test_levy_atom_scaling(self):
        assert P1.levy_atom(1.0) == pytest.approx(1.0)  # rate 2 * prob 1/2
        assert P1.levy_atom(0.5) == 0.0


class TestKappa:
    def test_at_origin_equals_killing_rate(self):
        assert kappa_biv(B1, 0.0, 0.0) == pytest.approx(0.2, abs=1e-15)

    def test_atom_sum_example(self):
        expected = 0.2 + 0.5 + 0.3 * (1 - math.exp(-1)) + 0.2 * (1 - math.exp(-2))
        assert kappa_biv(B1, 1.0, 0.0) == pytest.approx(expected, rel=1e-14)

    def test_pure_unit_drift(self):
        spec = BivariateSubordinatorSpec(d_z=0.0, d_y=1.0, q=0.0)
        assert kappa_biv(spec, 7.0, 3.0) == 3.0

    def test_rho_derivative_matches_difference_quotient(self):
        a, b = 0.7, 1.3
        d = kappa_biv_rho_derivative(B1, a, b)
        eps = 1e-7
        fd = (kappa_biv(B1, a, b + eps) - kappa_biv(B1, a, b)) / eps
        assert d == pytest.approx(fd, rel=1e-5)

    @given(
        a1=st.floats(0, 5), a2=st.floats(0, 5),
        b1=st.floats(0, 5), b2=st.floats(0, 5),
    )
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_each_argument(self, a1, a2, b1, b2):
        lo_a, hi_a = sorted((a1, a2))
        lo_b, hi_b = sorted((b1, b2))
        assert kappa_biv(B1, hi_a, lo_b) >= kappa_biv(B1, lo_a, lo_b) - 1e-12
        assert kappa_biv(B1, lo_a, hi_b) >= kappa_biv(B1, lo_a, lo_b) - 1e-12

    @given(
        a=st.one_of(st.just(0.0), st.floats(1e-6, 10)),
        b=st.one_of(st.just(0.0), st.floats(1e-6, 10)),
        dz=st.floats(0, 2), dy=st.floats(0, 2), q=st.floats(0, 2),
        r=st.floats(0.01, 3),
        dt=st.one_of(st.just(0.0), st.floats(1e-6, 2)),
        dx=st.one_of(st.just(0.0), st.floats(1e-6, 2)),
    )
    @settings(max_examples=80, deadline=None)
    def test_positive_when_nondegenerate(self, a, b, dz, dy, q, r, dt, dx):
        # Positivity needs a nondegenerate exponent: killing, or a parameter
        # paired with a coordinate that actually moves.  (A spec whose Z part
        # is identically zero has kappa(a, 0) = 0 for every a.)  Parameters
        # are kept away from subnormal scales where products underflow.
        if dt == 0 and dx == 0:
            dt = 1.0
        spec = BivariateSubordinatorSpec(d_z=dz, d_y=dy, q=q, atoms=((dt, dx, r),))
        moving_z = dz > 0 or dt > 0
        moving_y = dy > 0 or dx > 0
        if q > 0 or (a > 0 and moving_z) or (b > 0 and moving_y):
            assert kappa_biv(spec, a, b) > 0


class TestSkeleton:
    def test_pure_drift_has_no_jumps(self):
        times, sizes = sample_skeleton(ProcessSpec(1.0, 0.0), 10.0, np.random.default_rng(0))
        assert times.size == 0 and sizes.size == 0

    def test_mean_jump_count_matches_poisson(self):
        # P1 on horizon 10: E[count] = rate * horizon = 20
        pol = RngPolicy(seed=2024)
        n = 100_000
        counts = np.empty(n)
        for i in range(n):
            times, _ = sample_skeleton(P1, 10.0, pol.stream(i))
            counts[i] = times.size
        se = counts.std(ddof=1) / math.sqrt(n)
        assert abs(counts.mean() - 20.0) <= 3 * se

    def test_chunking_does_not_change_per_path_skeletons(self):
        # streams are keyed by path index, so grouping paths 1x10 vs 2x5
        # must give identical per-path skeletons
        pol = RngPolicy(seed=7)
        single = [sample_skeleton(P1, 5.0, pol.stream(i)) for i in range(10)]
        grouped = []
        for chunk in (range(0, 5), range(5, 10)):
            for i in chunk:
                grouped.append(sample_skeleton(P1, 5.0, pol.stream(i)))
        for (t1, s1), (t2, s2) in zip(single, grouped):
            np.testing.assert_array_equal(t1, t2)
            np.testing.assert_array_equal(s1, s2)

    def test_gaps_are_exponential_and_exact(self):
        times, sizes = sample_skeleton(P3, 50.0, np.random.default_rng(5))
        assert (np.diff(times) > 0).all()
        assert times[-1] <= 50.0
        assert sizes.size == times.size
        # evaluating X on the skeleton is exact: jumps are +-1, +-2
        assert set(np.unique(sizes)) <= {-2.0, -1.0, 1.0, 2.0}


class TestBivariateSpec:
    def test_rejects_zero_atom(self):
        with pytest.raises(ValueError):
            BivariateSubordinatorSpec(d_z=1, d_y=1, q=0, atoms=((0.0, 0.0, 1.0),))

    def test_rejects_negative_coordinates(self):
        with pytest.raises(ValueError):
            BivariateSubordinatorSpec(d_z=1, d_y=1, q=0, atoms=((-1.0, 1.0, 1.0),))

    def test_total_rate(self):
        assert B1.total_rate == pytest.approx(0.6)
