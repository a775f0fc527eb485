import math

import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from gwlab.exceptions import ReplicaFailed, TooFewSamples
from montecarlo.accumulators import (
    EstimateCI, MomentAccumulator, accumulate, ci, combined_sigma, estimate, ratio_ci, student_sigmas, z_value,
)
from montecarlo.rng import RngStream, stream_label
from montecarlo.runner import collect_replicated, run_replicated


def _uniform_task(stream):
    return stream.generator().random()


def _pair_task(stream):
    return stream.generator().random(), 1.0


def _failing_task(stream):
    if stream.stream_id == 3:
        raise ValueError('bad replica')
    return 1.0


class AccumulatorTest(SimpleTestCase):
    """Test streaming moments and interval helpers"""

    def test_two_point_interval(self):
        """Test {0, 2} gives mean 1 and stderr 1 with a Student-t width"""
        result = ci(MomentAccumulator.of([0.0, 2.0]))
        self.assertEqual(result.mean, 1.0)
        self.assertAlmostEqual(result.stderr, 1.0)
        self.assertAlmostEqual(result.half_width, stats.t.ppf(stats.norm.cdf(3.0), 1))

    def test_large_sample_interval_is_normal(self):
        """Test the 3 sigma width is exact once n reaches the small-sample threshold"""
        result = ci(MomentAccumulator.of([0.0, 2.0] * 20))
        self.assertAlmostEqual(result.half_width, 3.0 * result.stderr)

    def test_small_sample_widens_coverage(self):
        """Test five replicas need more than 3 stderr before a target is rejected"""
        est = EstimateCI(0.0, 1.0, 5, 3.0)
        self.assertTrue(est.covers(3.5))
        self.assertFalse(EstimateCI(0.0, 1.0, 50, 3.0).covers(3.5))
        self.assertAlmostEqual(student_sigmas(3.0, 5), stats.t.ppf(stats.norm.cdf(3.0), 4))
        self.assertEqual(student_sigmas(3.0, 30), 3.0)

    def test_single_sample_rejected(self):
        """Test one sample is not enough for an interval"""
        with self.assertRaises(TooFewSamples):
            ci(MomentAccumulator.of([1.0]))
        self.assertTrue(math.isnan(MomentAccumulator.of([1.0]).stderr))

    def test_merge_matches_single_pass(self):
        """Test merged partial accumulators match one pass"""
        values = np.random.default_rng(1).normal(size=101)
        whole = MomentAccumulator.of(values)
        merged = MomentAccumulator.of(values[:40]).merge(MomentAccumulator.of(values[40:]))
        self.assertEqual(merged.n, whole.n)
        self.assertAlmostEqual(merged.mean, whole.mean, places=12)
        self.assertAlmostEqual(merged.variance, whole.variance, places=10)
        self.assertEqual(merged.max, whole.max)
        self.assertAlmostEqual(accumulate(values).mean, whole.mean, places=12)

    def test_merge_with_empty(self):
        """Test merging an empty accumulator is the identity"""
        acc = MomentAccumulator.of([1.0, 3.0])
        self.assertEqual(acc.merge(MomentAccumulator()).mean, 2.0)
        self.assertEqual(MomentAccumulator().merge(acc).n, 2)

    def test_z_values(self):
        """Test supported confidence levels"""
        self.assertEqual(z_value('3sigma'), 3.0)
        self.assertAlmostEqual(z_value('0.95'), 1.959964, places=5)
        self.assertAlmostEqual(z_value(0.99), 2.575829, places=5)
        with self.assertRaises(ValueError):
            z_value('1.5')

    def test_sigma_distance(self):
        """Test distance to a target in stderr units"""
        est = EstimateCI(1.0, 0.1, 10, 0.3)
        self.assertAlmostEqual(est.sigma_distance(1.5), 5.0)
        self.assertTrue(est.covers(1.2))
        self.assertFalse(est.covers(1.5))
        self.assertEqual(est.sigma_distance(1.5, slack=0.6), 0.0)
        self.assertEqual(EstimateCI(1.0, 0.0, 10, 0.0).sigma_distance(2.0), math.inf)

    def test_combined_sigma(self):
        """Test independent estimates combine in quadrature"""
        a = EstimateCI(1.0, 0.3, 10)
        b = EstimateCI(2.0, 0.4, 10)
        self.assertAlmostEqual(combined_sigma(a, b), 2.0)
        self.assertEqual(combined_sigma(a, a), 0.0)

    def test_ratio_of_constants(self):
        """Test a constant ratio has no bias correction and zero error"""
        result = ratio_ci([2.0, 4.0, 6.0], [1.0, 2.0, 3.0])
        self.assertAlmostEqual(result.naive, 2.0)
        self.assertAlmostEqual(result.corrected, 2.0)
        self.assertAlmostEqual(result.stderr, 0.0)
        with self.assertRaises(TooFewSamples):
            ratio_ci([1.0], [1.0])

    def test_ratio_power(self):
        """Test mean(num) / mean(den)^2"""
        result = ratio_ci([1.0, 1.0], [2.0, 2.0], power=2.0)
        self.assertAlmostEqual(result.naive, 0.25)

    def test_estimate_of_array(self):
        """Test estimate on a flat array"""
        result = estimate(np.array([1.0, 2.0, 3.0, 4.0]), level='0.95')
        self.assertEqual(result.n, 4)
        self.assertAlmostEqual(result.mean, 2.5)
        self.assertEqual(result.level, '0.95')


class RngStreamTest(SimpleTestCase):
    """Test counter-based streams"""

    def test_same_stream_same_draws(self):
        """Test a stream is reproducible"""
        a = RngStream(7, 3).generator().random(5)
        b = RngStream(7, 3).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        """Test distinct ids and branches give distinct draws"""
        base = RngStream(7, 3).generator().random()
        self.assertNotEqual(base, RngStream(7, 4).generator().random())
        self.assertNotEqual(base, RngStream(8, 3).generator().random())
        self.assertNotEqual(base, RngStream(7, 3).child(1).generator().random())

    def test_stream_label_stable(self):
        """Test branch labels are stable integers"""
        self.assertEqual(stream_label('phi'), stream_label('phi'))
        self.assertNotEqual(stream_label('phi'), stream_label('escape'))
        self.assertEqual(stream_label(''), 0)

    def test_source_buffers(self):
        """Test the buffered source replays the generator"""
        source = RngStream(2, 0).source(block=4)
        draws = [source.uniform() for _ in range(6)]
        expected = RngStream(2, 0).generator().random(8)[:6]
        np.testing.assert_allclose(draws, expected)
        self.assertGreater(source.exponential(), 0.0)


class RunnerTest(SimpleTestCase):
    """Test replica fan-out"""

    def test_results_in_replica_order(self):
        """Test replica i sees stream i"""
        values = collect_replicated(_uniform_task, 5, seed=11)
        expected = [RngStream(11, i).generator().random() for i in range(5)]
        np.testing.assert_array_equal(values, expected)

    def test_worker_count_does_not_change_results(self):
        """Test a process pool returns the serial values"""
        serial = collect_replicated(_uniform_task, 12, parallelism=1, seed=8)
        pooled = collect_replicated(_uniform_task, 12, parallelism=2, seed=8)
        np.testing.assert_array_equal(serial, pooled)

    def test_run_replicated_moments(self):
        """Test the reduced accumulator covers every replica"""
        acc = run_replicated(_uniform_task, 20, seed=4)
        self.assertEqual(acc.n, 20)
        self.assertTrue(0.0 < acc.mean < 1.0)

    def test_run_replicated_rejects_rows(self):
        """Test tuple-valued replicas are not flattened into one stream"""
        self.assertEqual(collect_replicated(_pair_task, 3).shape, (3, 2))
        with self.assertRaises(ValueError):
            run_replicated(_pair_task, 3)

    def test_failures_collected(self):
        """Test a failing replica is reported with its id"""
        with self.assertRaises(ReplicaFailed) as caught:
            collect_replicated(_failing_task, 5)
        self.assertEqual(caught.exception.failures[0][0], 3)

    def test_replicas_required(self):
        """Test zero replicas is rejected"""
        with self.assertRaises(ValueError):
            collect_replicated(_uniform_task, 0)
