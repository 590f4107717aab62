import unittest

import numpy as np

from distributed_safe_bo import ConfigError, InputError, PreRkhsFunction, quantile_threshold, sample
from distributed_safe_bo.kernels import Matern12, Matern32, Matern52, RBF, gram
from distributed_safe_bo.rkhs_sampler import evaluate, quantile_of, uniform_points


class TestSample(unittest.TestCase):
    def setUp(self) -> None:
        self.unit_box = [(0., 1.)] * 4

    def testNormIsExactForRewardConfiguration(self):
        f = sample(Matern32(lengthscale=0.4), 1000, 1., self.unit_box, rng=0)
        self.assertLessEqual(abs(f.squared_norm() - 1.), 1e-9)

    def testNormIsExactAcrossKernels(self):
        rng = np.random.default_rng(1)
        kernels = [RBF(0.3), Matern12(0.2), Matern32(0.1), Matern52(0.5, output_scale=2.)]
        for trial in range(20):
            kernel = kernels[trial % len(kernels)]
            target = float(rng.uniform(0.1, 5.))
            f = sample(kernel, int(rng.integers(1, 200)), target, [(0., 1.)] * 2, rng=rng)
            self.assertLessEqual(abs(f.squared_norm() - target ** 2), 1e-9 * target ** 2)

    def testSingleCenter(self):
        kernel = Matern52(lengthscale=0.3, output_scale=2.)
        f = sample(kernel, 1, 1., [(0., 1.)], rng=3)
        self.assertAlmostEqual(0.5, abs(f.coefficients[0]), places=12)
        self.assertAlmostEqual(2., abs(f(f.centers)[0]), places=12)

    def testScalingIsLinear(self):
        f = sample(RBF(0.3), 30, 1., [(0., 1.)], rng=4)
        g = sample(RBF(0.3), 30, 2., [(0., 1.)], rng=4)
        np.testing.assert_allclose(2. * f.coefficients, g.coefficients, rtol=1e-12)
        x = np.linspace(0., 1., 11)[:, None]
        np.testing.assert_allclose(2. * f(x), g(x), rtol=1e-12, atol=1e-15)

    def testReproducible(self):
        f = sample(Matern32(0.4), 50, 1., self.unit_box, rng=7)
        g = sample(Matern32(0.4), 50, 1., self.unit_box, rng=7)
        np.testing.assert_array_equal(f.centers, g.centers)
        np.testing.assert_array_equal(f.coefficients, g.coefficients)

    def testCentersInsideBox(self):
        f = sample(RBF(0.3), 200, 1., [(2., 3.), (-1., 0.)], rng=8)
        self.assertTrue(np.all((f.centers[:, 0] >= 2.) & (f.centers[:, 0] <= 3.)))
        self.assertTrue(np.all((f.centers[:, 1] >= -1.) & (f.centers[:, 1] <= 0.)))

    def testInvalidArguments(self):
        with self.assertRaises(ConfigError):
            sample(RBF(0.3), 0, 1., [(0., 1.)])
        with self.assertRaises(ConfigError):
            sample(RBF(0.3), 10, 0., [(0., 1.)])
        with self.assertRaises(ConfigError):
            sample(RBF(0.3), 10, 1., [(1., 1.)])


class TestEvaluate(unittest.TestCase):
    def testMatchesLoopSum(self):
        rng = np.random.default_rng(2)
        kernel = Matern52(0.3)
        f = sample(kernel, 40, 1., [(0., 1.)] * 3, rng=rng)
        x = rng.uniform(size=(100, 3))
        expected = [sum(c * kernel.eval(point, center) for c, center in zip(f.coefficients, f.centers))
                    for point in x]
        np.testing.assert_allclose(expected, evaluate(f, x), rtol=0, atol=1e-12)

    def testZeroCoefficients(self):
        f = PreRkhsFunction(np.array([[0.2], [0.8]]), np.zeros(2), RBF(0.3))
        np.testing.assert_array_equal(np.zeros(5), f(np.linspace(0., 1., 5)[:, None]))

    def testDecaysAwayFromCenter(self):
        f = PreRkhsFunction(np.array([[0.]]), np.array([1.]), Matern12(0.1))
        self.assertLess(abs(f(np.array([[100.]]))[0]), 1e-12)

    def testNormRecomputedFromGram(self):
        centers = np.array([[0.], [0.5]])
        f = PreRkhsFunction(centers, np.array([1., -1.]), RBF(1.))
        g = gram(RBF(1.), centers)
        self.assertAlmostEqual(np.sqrt(2. - 2. * g[0, 1]), f.norm(), places=12)

    def testLengthMismatch(self):
        with self.assertRaises(InputError):
            PreRkhsFunction(np.zeros((3, 1)), np.zeros(2), RBF(1.))


class TestQuantileThreshold(unittest.TestCase):
    def testLowerInterpolation(self):
        self.assertEqual(2., quantile_of(np.arange(1., 11.), 0.2))

    def testOrderIndependent(self):
        values = np.random.default_rng(0).permutation(np.arange(1., 11.))
        self.assertEqual(2., quantile_of(values, 0.2))

    def testConstantFunction(self):
        f = PreRkhsFunction(np.array([[0.]]), np.array([0.]), RBF(1.))
        grid = uniform_points([(0., 1.)], 100, 0)
        for q in (0.1, 0.5, 0.9):
            self.assertEqual(0., quantile_threshold(f, grid, q))

    def testInvalidQuantile(self):
        f = PreRkhsFunction(np.array([[0.]]), np.array([1.]), RBF(1.))
        with self.assertRaises(ConfigError):
            quantile_threshold(f, np.zeros((3, 1)), 1.5)
        with self.assertRaises(InputError):
            quantile_threshold(f, np.zeros((0, 1)), 0.2)
