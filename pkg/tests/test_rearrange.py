import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lorext.errors import GridMismatchError
from lorext.rearrange import (RearrangedProfile, SampledFunction, decreasing_rearrangement,
                              distribution_function, equimeasurable, level_set_family)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
cells = arrays(np.float64, st.integers(1, 40), elements=finite)


def complex_fn(re, im=None, a=1.0):
    im = np.zeros_like(re) if im is None else im
    return SampledFunction(a, re + 1j * im)


class TestSampledFunction:
    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            SampledFunction(0.0, [1.0])
        with pytest.raises(ValueError):
            SampledFunction(1.0, [])
        with pytest.raises(ValueError):
            SampledFunction(1.0, [np.nan])

    def test_values_are_read_only(self):
        f = SampledFunction(1.0, [1, 2])
        with pytest.raises(ValueError):
            f.values[0] = 5

    def test_cell_measure_and_midpoints(self):
        f = SampledFunction(3.0, [1, 2, 3])
        assert f.cell_measure == 1.0
        np.testing.assert_allclose(f.midpoints(), [0.5, 1.5, 2.5])

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            SampledFunction(1.0, [1, 2]) + SampledFunction(1.0, [1, 2, 3])
        with pytest.raises(GridMismatchError):
            SampledFunction(1.0, [1, 2]) + SampledFunction(2.0, [1, 2])

    @given(re=cells, seed=st.integers(0, 2 ** 32 - 1))
    def test_json_and_csv_round_trip(self, re, seed):
        im = np.random.default_rng(seed).standard_normal(re.size) * 1e-3
        f = complex_fn(re, im, a=np.pi)
        for g in (SampledFunction.from_json(f.to_json()), SampledFunction.from_csv(f.to_csv())):
            assert g.interval_length == f.interval_length
            assert np.array_equal(g.values, f.values)

    def test_csv_needs_header(self):
        with pytest.raises(ValueError):
            SampledFunction.from_csv("index,re,im\n0,1,0\n")
        with pytest.raises(ValueError):
            SampledFunction.from_csv("# a=1\nindex,re,im\n0,1,0\n2,1,0\n")


class TestRearrangement:
    def test_constant(self):
        prof = decreasing_rearrangement(SampledFunction.constant(-2 + 0j, 5))
        assert np.array_equal(prof.values, np.full(5, 2.0))

    def test_small_example(self):
        prof = decreasing_rearrangement(SampledFunction(3.0, [1, 3, 2]))
        assert prof.values.tolist() == [3, 2, 1]
        assert prof.interval_length == 3.0

    def test_matches_sorted_moduli(self):
        rng = np.random.default_rng(5)
        v = rng.standard_normal(10_000) + 1j * rng.standard_normal(10_000)
        prof = decreasing_rearrangement(SampledFunction(1.0, v))
        assert np.array_equal(prof.values, -np.sort(-np.abs(v)))

    @given(re=cells)
    def test_idempotent(self, re):
        prof = decreasing_rearrangement(complex_fn(re))
        assert decreasing_rearrangement(prof) is prof
        again = decreasing_rearrangement(prof.to_function())
        assert np.array_equal(again.values, prof.values)

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            RearrangedProfile([1.0, 2.0], 1.0)
        with pytest.raises(ValueError):
            RearrangedProfile([1.0, -1.0], 1.0)

    @given(re=cells, seed=st.integers(0, 2 ** 32 - 1))
    def test_prefix_subadditive(self, re, seed):
        g = np.random.default_rng(seed).standard_normal(re.size) * 100
        f, gf = complex_fn(re), complex_fn(g)
        lhs = decreasing_rearrangement(f + gf).prefix_integrals()
        rhs = decreasing_rearrangement(f).prefix_integrals() + decreasing_rearrangement(gf).prefix_integrals()
        assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-9)


class TestDistribution:
    def test_examples(self):
        one = SampledFunction.constant(1.0, 4, interval_length=2.0)
        assert distribution_function(one, 2.0) == 0.0
        assert distribution_function(one, 0.5) == 2.0
        assert distribution_function(SampledFunction(3.0, [1, 3, 2]), 1.5) == 2.0

    def test_negative_tau(self):
        with pytest.raises(ValueError):
            distribution_function(SampledFunction(1.0, [1.0]), -1.0)


class TestEquimeasurable:
    def test_rearrangement_and_permutation(self):
        rng = np.random.default_rng(0)
        f = SampledFunction(1.0, rng.standard_normal(20) + 1j * rng.standard_normal(20))
        assert equimeasurable(f, decreasing_rearrangement(f).to_function())
        assert equimeasurable(f, f.with_values(f.values[rng.permutation(20)]))
        assert not equimeasurable(f, 2 * f)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            equimeasurable(SampledFunction(1.0, [1]), SampledFunction(1.0, [1, 2]))


class TestLevelSetFamily:
    def test_examples(self):
        assert level_set_family(SampledFunction(1.0, [3, 1, 2])).order.tolist() == [0, 2, 1]
        assert level_set_family(SampledFunction.constant(1.0, 6)).order.tolist() == list(range(6))

    @given(re=cells)
    @settings(max_examples=50)
    def test_prefix_identity_and_domination(self, re):
        f = complex_fn(np.round(re))  # rounding creates ties
        fam = level_set_family(f)
        prof = decreasing_rearrangement(f)
        assert np.array_equal(fam.prefix_integrals(f.moduli), prof.prefix_integrals())
        for k in range(1, f.n + 1):
            mask = fam.mask(k)
            level = prof.values[k - 1]
            assert np.all(f.moduli[mask] >= level)
            assert np.all(mask[f.moduli > level])
