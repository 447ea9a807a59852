import itertools

import numpy as np
import pytest

from lorext.errors import GeneratorFlagError, NotNormalizedError, PreconditionError
from lorext.extremal import (PerturbationSet, Verdict, alignment_factor, brute_force_vertices,
                             feasibility_probe, l1_witness, norm_subgradient,
                             theorem_t0_form_check)
from lorext.lorentz import ConcaveGenerator, generator_weights, lorentz_norm
from lorext.rearrange import SampledFunction

P2 = ConcaveGenerator.power(2)
LIN = ConcaveGenerator.linear()


def pairing(u, v):
    return u.cell_measure * float(np.sum((u.values * np.conj(v.values)).real))


def contains_point(points, x, atol=1e-9):
    return any(np.max(np.abs(p - x)) <= atol for p in points)


def random_boundary_point(rng, n, phi):
    x = rng.standard_normal(n)
    return x / lorentz_norm(SampledFunction(1.0, x), phi)


class TestSubgradient:
    def test_constant(self):
        phi = ConcaveGenerator.power(2, 3.0)
        f = SampledFunction.constant(2.0, 5, interval_length=3.0)
        g = norm_subgradient(f, phi)
        assert pairing(g, f) == pytest.approx(lorentz_norm(f, phi), abs=1e-14)

    def test_duality(self):
        rng = np.random.default_rng(11)
        for phi in (ConcaveGenerator.power(2, 2.0), ConcaveGenerator.power(4, 2.0),
                    ConcaveGenerator.two_slope(2.0), ConcaveGenerator.linear(2.0)):
            f = SampledFunction(2.0, rng.standard_normal(9) + 1j * rng.standard_normal(9))
            g = norm_subgradient(f, phi)
            assert pairing(g, f) == pytest.approx(lorentz_norm(f, phi), abs=1e-12)
            for _ in range(250):
                y = f.with_values(rng.standard_normal(9) + 1j * rng.standard_normal(9))
                assert pairing(g, y) <= lorentz_norm(y, phi) + 1e-12

    def test_zero_cells_get_zero(self):
        g = norm_subgradient(SampledFunction(1.0, [1.0, 0.0, 2.0]), P2)
        assert g.values[1] == 0


class TestBruteForce:
    def test_n1(self):
        verts = brute_force_vertices(1, P2)
        assert sorted(v[0] for v in verts) == [-1.0, 1.0]

    def test_n2_strict(self):
        w = generator_weights(P2, 2)
        verts = brute_force_vertices(2, P2)
        assert len(verts) == 8
        expected = [np.array(p) for p in [(1 / w[0], 0), (-1 / w[0], 0), (0, 1 / w[0]), (0, -1 / w[0])]]
        expected += [np.array([s, t]) / (w[0] + w[1]) for s in (1, -1) for t in (1, -1)]
        assert all(contains_point(verts, e) for e in expected)

    def test_n2_linear(self):
        verts = brute_force_vertices(2, LIN)
        assert len(verts) == 4
        assert not contains_point(verts, np.array([1.0, 1.0]))

    @pytest.mark.parametrize("n, count", [(3, 26), (4, 80)])
    def test_counts(self, n, count):
        # 3^n - 1 signed normalized indicators
        assert len(brute_force_vertices(n, ConcaveGenerator.power(1.5))) == count

    def test_errors(self):
        with pytest.raises(ValueError):
            brute_force_vertices(5, P2)
        with pytest.raises(GeneratorFlagError):
            brute_force_vertices(2, ConcaveGenerator.explicit([1.0, 0.0]))


class TestT0Form:
    def test_normalized_indicator(self):
        phi = ConcaveGenerator.power(1.5)
        ph = np.exp(1j * np.array([0.3, 2.0, -1.0]))
        vals = np.zeros(6, dtype=complex)
        vals[[0, 2, 5]] = ph / phi(0.5)
        assert theorem_t0_form_check(SampledFunction(1.0, vals), phi, 1e-12)

    def test_rejects(self):
        assert not theorem_t0_form_check(SampledFunction(1.0, [1.0, 0.5]), P2, 1e-9)
        assert not theorem_t0_form_check(SampledFunction(1.0, [0.0, 0.0]), P2, 1e-9)
        assert not theorem_t0_form_check(SampledFunction(1.0, [1.0, 1.0]) * 2.0, P2, 1e-9)


class TestProbe:
    def test_linear_pair_not_extreme(self):
        f = SampledFunction(1.0, [1.0, 1.0])
        v = feasibility_probe(f, LIN)
        assert v.verdict is Verdict.NOT_EXTREME
        g = v.witness
        assert lorentz_norm(g, LIN) >= 10 * v.tol
        for s in (1, -1):
            assert lorentz_norm(f + s * g, LIN) <= 1 + v.tol
        h = alignment_factor(f, g, LIN, 1e-6)
        assert np.all(np.abs(h.values.imag) <= 1e-6) and np.all(np.abs(h.values) <= 1 + 1e-6)

    def test_strict_pair_extreme(self):
        v = feasibility_probe(SampledFunction(1.0, [1.0, 1.0]), P2)
        assert v.verdict is Verdict.EXTREME
        assert v.certificate <= v.tol
        assert v.witness is None

    @pytest.mark.parametrize("phi", [P2, ConcaveGenerator.two_slope(), LIN])
    def test_single_cell_indicator(self, phi):
        n = 4
        f = SampledFunction.indicator([0], n) * (1.0 / phi(1 / n))
        assert feasibility_probe(f, phi).verdict is Verdict.EXTREME

    def test_not_normalized(self):
        with pytest.raises(NotNormalizedError):
            feasibility_probe(SampledFunction(1.0, [0.5, 0.5]), P2)

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("phi", [P2, ConcaveGenerator.power(1.5), LIN])
    def test_oracle_agreement(self, n, phi):
        rng = np.random.default_rng(n)
        verts = brute_force_vertices(n, phi)
        points = list(verts)
        for signs in itertools.product((-1.0, 0.0, 1.0), repeat=n):
            x = np.array(signs)
            if np.any(x):
                points.append(x / lorentz_norm(SampledFunction(1.0, x), phi))
        points += [random_boundary_point(rng, n, phi) for _ in range(10)]
        for x in points:
            v = feasibility_probe(SampledFunction(1.0, x), phi, seed=1)
            assert v.verdict in (Verdict.EXTREME, Verdict.NOT_EXTREME)
            assert (v.verdict is Verdict.EXTREME) == contains_point(verts, x, 1e-6)

    @pytest.mark.parametrize("phi", [ConcaveGenerator.power(1.5), P2, ConcaveGenerator.power(4),
                                     ConcaveGenerator.two_slope()])
    def test_unimodular_extreme(self, phi):
        f = SampledFunction(1.0, np.exp(2j * np.pi * np.random.default_rng(4).random(8)))
        v = feasibility_probe(f, phi)
        assert v.verdict is Verdict.EXTREME and v.certificate <= 1e-6
        assert v.stats["directions"] >= 32

    def test_phase_equivariance(self):
        rng = np.random.default_rng(9)
        f = SampledFunction(1.0, np.exp(2j * np.pi * rng.random(6)))
        rot = f * np.exp(0.7j)
        for phi, expected in ((P2, Verdict.EXTREME), (LIN, Verdict.NOT_EXTREME)):
            assert feasibility_probe(f, phi).verdict is expected
            assert feasibility_probe(rot, phi).verdict is expected

    def test_deterministic(self):
        f = SampledFunction(1.0, np.exp(2j * np.pi * np.random.default_rng(2).random(8)))
        a = feasibility_probe(f, P2, seed=5).to_dict()
        b = feasibility_probe(f, P2, seed=5).to_dict()
        assert a == b

    def test_perturbation_set_symmetric(self):
        w = generator_weights(P2, 2)
        center = SampledFunction(1.0, (np.array([1 / w[0], 0.0]) + np.array([1.0, 1.0]) / (w[0] + w[1])) / 2)
        pset = PerturbationSet(center, P2)
        rng = np.random.default_rng(0)
        for _ in range(200):
            x = rng.standard_normal(pset.dim) * 0.3
            assert pset.contains(x) == pset.contains(-x)
        assert pset.contains(np.zeros(pset.dim))


class TestAlignment:
    def test_zero_perturbation(self):
        f = SampledFunction(1.0, np.exp(1j * np.arange(4)))
        h = alignment_factor(f, f * 0.0, P2, 1e-12)
        assert np.all(h.values == 0)

    def test_rejects_scaled_center(self):
        f = SampledFunction(1.0, np.exp(1j * np.arange(4)))
        with pytest.raises(PreconditionError):
            alignment_factor(f, f * 0.3, P2, 1e-12)

    def test_edge_midpoint_is_real(self):
        w = generator_weights(P2, 2)
        p = np.array([1 / w[0], 0.0])
        q = np.array([1.0, 1.0]) / (w[0] + w[1])
        f = SampledFunction(1.0, (p + q) / 2)
        g = SampledFunction(1.0, (p - q) / 2)
        h = alignment_factor(f, g, P2, 1e-12)
        assert np.all(h.values.imag == 0) and np.all(np.abs(h.values) <= 1)

    def test_zero_cell(self):
        w = generator_weights(P2, 2)
        f = SampledFunction(1.0, [1 / w[0], 0.0])
        with pytest.raises(PreconditionError):
            alignment_factor(f, f * 0.0, P2, 1e-12)


class TestL1Witness:
    def test_constant_pair(self):
        phi = ConcaveGenerator.linear(2 * np.pi)
        f = SampledFunction.constant(1.0, 2, interval_length=2 * np.pi)
        g = l1_witness(f, phi)
        np.testing.assert_array_equal(g.values, [0.5, -0.5])
        assert lorentz_norm(f + g, phi) == 1.0 and lorentz_norm(f - g, phi) == 1.0

    @pytest.mark.parametrize("n", [2, 3, 16, 101])
    def test_random_phases(self, n):
        f = SampledFunction(1.0, np.exp(2j * np.pi * np.random.default_rng(n).random(n)))
        g = l1_witness(f, LIN)
        assert abs(lorentz_norm(f + g, LIN) - 1) <= 1e-12
        assert abs(lorentz_norm(f - g, LIN) - 1) <= 1e-12
        assert lorentz_norm(g, LIN) >= 0.1

    def test_errors(self):
        with pytest.raises(GeneratorFlagError):
            l1_witness(SampledFunction.constant(1.0, 4), P2)
        with pytest.raises(PreconditionError):
            l1_witness(SampledFunction(1.0, [2.0, 1.0, 0.0]), LIN)
