import math

import numpy as np
import pytest
from scipy import stats

from zratio import (DiscreteTable, DomainError, GeneralizedNormal,
                    Independence, NestedUniform, OrderedSweep,
                    RandomWalkMetropolis, metropolis_kernel)
from zratio.kernels import neighbor_proposal, uniform_proposal


class ScriptedRng:
    """Deterministic stand-in feeding prescribed normals and uniforms."""

    def __init__(self, normals, uniforms):
        self.normals = list(normals)
        self.uniforms = list(uniforms)

    def standard_normal(self, n):
        out, self.normals = self.normals[:n], self.normals[n:]
        return np.asarray(out)

    def random(self, n=None):
        if n is None:
            value, self.uniforms = self.uniforms[0], self.uniforms[1:]
            return value
        out, self.uniforms = self.uniforms[:n], self.uniforms[n:]
        return np.asarray(out)


class TestRandomWalkMetropolis:
    def test_acceptance_probability_is_density_ratio(self):
        # from the mode, a proposal one unit away is accepted with
        # probability exp(-1): feed uniforms either side of the threshold
        seq = GeneralizedNormal(s=1, t=0, q=2)
        kernel = RandomWalkMetropolis(seq)
        accept = kernel.step_forward(
            1.0, 0.0, ScriptedRng([1.0], [math.exp(-1) - 1e-9]))
        reject = kernel.step_forward(
            1.0, 0.0, ScriptedRng([1.0], [math.exp(-1) + 1e-9]))
        assert accept == 1.0
        assert reject == 0.0

    def test_zero_density_proposal_always_rejected(self):
        seq = NestedUniform(s=0.1)
        kernel = RandomWalkMetropolis(seq, scale_rule=lambda eta: 0.5)
        # proposal lands at 0.5, far outside the (-0.1, 0.1) support
        out = kernel.step_forward(1.0, 0.0, ScriptedRng([1.0], [1e-12]))
        assert out == 0.0

    def test_zero_density_start_is_domain_error(self, rng):
        kernel = RandomWalkMetropolis(NestedUniform(s=0.1))
        with pytest.raises(DomainError):
            kernel.step_forward(1.0, 5.0, rng)

    def test_self_reverse(self, rng):
        kernel = RandomWalkMetropolis(GeneralizedNormal(s=1, t=0, q=2))
        assert kernel.swapped() is kernel
        assert kernel.run_reverse == kernel.run_forward

    def test_default_scale_rule_tracks_family(self):
        kernel = RandomWalkMetropolis(GeneralizedNormal(s=0.05, t=0, q=2))
        assert kernel.scale_rule(0.0) == 1.0
        assert kernel.scale_rule(1.0) == pytest.approx(0.05)

    def test_invariance_against_exact_draws(self, rng):
        # a long chain started in equilibrium stays there
        seq = GeneralizedNormal(s=0.3, t=2, q=2)
        kernel = RandomWalkMetropolis(seq)
        start = seq.exact_sample(0.7, rng)
        chain = np.asarray(kernel.run_forward(0.7, start, 100_000, rng))
        fresh = seq.exact_sample(0.7, rng, size=100_000)
        result = stats.ks_2samp(chain[::10], fresh[::10])
        assert result.pvalue > 0.01


class TestIndependence:
    def test_matches_exact_sampler_distribution(self, rng):
        seq = NestedUniform(s=0.2)
        kernel = Independence(seq)
        draws = np.asarray(kernel.run_forward(1.0, 0.0, 20_000, rng))
        assert np.all(np.abs(draws) < 0.2)
        result = stats.kstest(draws, lambda x: (x + 0.2) / 0.4)
        assert result.pvalue > 0.01

    def test_self_reverse(self):
        kernel = Independence(NestedUniform(s=0.2))
        assert kernel.swapped() is kernel


class TestDiscreteMatrix:
    def setup_method(self):
        self.seq = DiscreteTable((1, 2, 3), (3, 2, 1))
        self.kernel = metropolis_kernel(self.seq, proposal=uniform_proposal(3))

    def test_one_step_frequencies_match_row(self, rng):
        eta = 0.5
        row = self.kernel.matrix(eta)[1]
        n = 100_000
        hits = np.zeros(3)
        draws = self.kernel.run_forward(eta, 1, 1, rng)
        for _ in range(n):
            hits[self.kernel.run_forward(eta, 1, 1, rng)[0]] += 1
        for state in range(3):
            se = math.sqrt(row[state] * (1 - row[state]) / n)
            assert abs(hits[state] / n - row[state]) < 3.5 * se

    def test_reverse_rows_sum_to_one(self):
        rev = self.kernel.reverse_matrix(0.3)
        assert np.allclose(rev.sum(axis=1), 1.0, atol=1e-12)

    def test_mutual_reversibility_identity(self):
        eta = 0.3
        probs = self.seq.probs(eta)
        fwd = self.kernel.matrix(eta)
        rev = self.kernel.reverse_matrix(eta)
        lhs = probs[:, None] * fwd
        rhs = (probs[:, None] * rev).T
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_invariance(self):
        probs = self.seq.probs(0.8)
        assert np.abs(probs @ self.kernel.matrix(0.8) - probs).max() < 1e-12

    def test_non_invariant_matrix_rejected(self):
        from zratio import DiscreteMatrix
        biased = DiscreteMatrix(self.seq,
                                lambda eta: np.array([[0.5, 0.5, 0.0],
                                                      [0.0, 0.5, 0.5],
                                                      [0.5, 0.0, 0.5]]))
        with pytest.raises(ValueError):
            biased.matrix(0.5)

    def test_zero_probability_start_rejected(self, rng):
        holes = DiscreteTable((1, 0, 2), (2, 0, 1))
        kernel = metropolis_kernel(holes)
        with pytest.raises(DomainError):
            kernel.step_forward(0.5, 1, rng)


class _SpyKernel:
    """Logs (direction, tag) of every step; state passes through."""

    cost_per_step = 1

    def __init__(self, tag, log):
        self.tag = tag
        self.log = log
        self.target = None

    def run_forward(self, eta, x, count, rng):
        self.log.extend(("fwd", self.tag) for _ in range(count))
        return [x] * count

    def run_reverse(self, eta, x, count, rng):
        self.log.extend(("rev", self.tag) for _ in range(count))
        return [x] * count

    def step_forward(self, eta, x, rng):
        return self.run_forward(eta, x, 1, rng)[0]

    def step_reverse(self, eta, x, rng):
        return self.run_reverse(eta, x, 1, rng)[0]

    def swapped(self):
        from zratio.kernels import _Swapped
        return _Swapped(self)


class TestOrderedSweep:
    def test_reverse_applies_components_in_opposite_order(self, rng):
        log = []
        sweep = OrderedSweep([_SpyKernel("A", log), _SpyKernel("B", log)])
        sweep.step_forward(0.5, 0, rng)
        assert log == [("fwd", "A"), ("fwd", "B")]
        log.clear()
        sweep.step_reverse(0.5, 0, rng)
        assert log == [("rev", "B"), ("rev", "A")]

    def test_swapped_reverses_component_list(self, rng):
        log = []
        sweep = OrderedSweep([_SpyKernel("A", log), _SpyKernel("B", log)])
        swapped = sweep.swapped()
        swapped.step_forward(0.5, 0, rng)
        assert log == [("rev", "B"), ("rev", "A")]

    def test_cost_accumulates(self):
        log = []
        sweep = OrderedSweep([_SpyKernel("A", log), _SpyKernel("B", log)])
        assert sweep.cost_per_step == 2

    def test_sweep_of_metropolis_keeps_invariance(self):
        seq = DiscreteTable((1, 2, 3, 4), (4, 3, 2, 1))
        a = metropolis_kernel(seq, proposal=neighbor_proposal(4))
        b = metropolis_kernel(seq, proposal=uniform_proposal(4))
        sweep = OrderedSweep([a, b])
        eta = 0.4
        probs = seq.probs(eta)
        combined = a.matrix(eta) @ b.matrix(eta)
        assert np.abs(probs @ combined - probs).max() < 1e-12
