import unittest

import numpy as np
from scipy.linalg import eigvalsh

from distributed_safe_bo import ConfigError, Dataset, InputError, beta, confidence_bounds, fit
from distributed_safe_bo.gaussian_process import bounds_from_moments
from distributed_safe_bo.kernels import Matern52, RBF, spatio_temporal_kernel
from distributed_safe_bo.rkhs_sampler import sample


class TestFit(unittest.TestCase):
    def setUp(self) -> None:
        self.kernel = RBF(lengthscale=0.5)
        self.rng = np.random.default_rng(11)

    def testEmptyDatasetIsPrior(self):
        posterior = fit(Dataset(np.zeros((0, 2)), np.zeros(0)), Matern52(0.3, output_scale=2.))
        mean, std = posterior.predict(self.rng.uniform(size=(5, 2)))
        np.testing.assert_array_equal(np.zeros(5), mean)
        np.testing.assert_allclose(np.full(5, 2.), std)

    def testNoiselessInterpolation(self):
        x = np.array([[0.3, 0.6]])
        posterior = fit(Dataset(x, np.array([0.8])), self.kernel)
        mean, std = posterior.predict(x)
        self.assertAlmostEqual(0.8, mean[0], places=6)
        self.assertLessEqual(std[0], 1e-4)

    def testMatchesDenseSolve(self):
        for trial in range(50):
            n, dims = int(self.rng.integers(1, 51)), int(self.rng.integers(1, 5))
            x = self.rng.uniform(size=(n, dims))
            y = self.rng.normal(size=n)
            query = self.rng.uniform(size=(20, dims))
            posterior = fit(Dataset(x, y, noise_std=0.1), self.kernel)
            mean, std = posterior.predict(query)

            system = self.kernel(x) + posterior.noise_variance * np.eye(n)
            cross = self.kernel(x, query)
            expected_mean = cross.T @ np.linalg.solve(system, y)
            expected_var = 1. - np.sum(cross * np.linalg.solve(system, cross), axis=0)
            np.testing.assert_allclose(expected_mean, mean, rtol=0, atol=1e-8)
            np.testing.assert_allclose(np.maximum(expected_var, 0.), std ** 2, rtol=0, atol=1e-8)

    def testLogDeterminantTerm(self):
        x = self.rng.uniform(size=(10, 2))
        posterior = fit(Dataset(x, self.rng.normal(size=10), noise_std=0.1), self.kernel)
        eigenvalues = eigvalsh(self.kernel(x))
        expected = np.sum(np.log1p(eigenvalues / posterior.noise_variance))
        self.assertAlmostEqual(expected, posterior.log_det_term, places=8)

    def testStdNeverExceedsPrior(self):
        x = self.rng.uniform(size=(15, 1))
        posterior = fit(Dataset(x, np.sin(6 * x[:, 0]), noise_std=0.01), self.kernel)
        std = posterior.std(np.linspace(-1., 2., 200)[:, None])
        self.assertTrue(np.all(std >= 0))
        self.assertTrue(np.all(std <= 1. + 1e-8))

    def testPosteriorContraction(self):
        x = self.rng.uniform(size=(8, 2))
        y = self.rng.normal(size=8)
        query = np.array([[0.5, 0.5]])
        before = fit(Dataset(x, y, noise_std=0.05), self.kernel).std(query)[0]
        after = fit(Dataset(np.vstack([x, query]), np.append(y, 0.), noise_std=0.05), self.kernel).std(query)[0]
        self.assertLessEqual(after, before + 1e-6)

    def testDuplicateInputsAreFactorized(self):
        x = np.array([[0.2, 1.], [0.2, 1.], [0.2, 2.]])
        kernel = spatio_temporal_kernel(0.3, 1., 5, 20., 0.1, 5., 0.1)
        posterior = fit(Dataset(x, np.array([0.1, 0.1, 0.2])), kernel)
        self.assertGreater(posterior.noise_variance, 0.)
        self.assertTrue(np.all(np.isfinite(posterior.mean(x))))

    def testMismatchedLengths(self):
        with self.assertRaises(InputError):
            Dataset(np.zeros((3, 1)), np.zeros(2))
        with self.assertRaises(ConfigError):
            Dataset(np.zeros((1, 1)), np.zeros(1), noise_std=-1.)


class TestBeta(unittest.TestCase):
    def setUp(self) -> None:
        rng = np.random.default_rng(5)
        self.kernel = RBF(lengthscale=0.5)
        self.dataset = Dataset(rng.uniform(size=(10, 2)), rng.normal(size=10), noise_std=0.1)
        self.posterior = fit(self.dataset, self.kernel)

    def testEmptyDataAndDeltaNearOne(self):
        posterior = fit(Dataset(np.zeros((0, 1)), np.zeros(0)), self.kernel)
        self.assertAlmostEqual(1., beta(posterior, 1., 0.1, delta=1. - 1e-12), places=5)

    def testNoiselessIsBound(self):
        self.assertEqual(0., beta(self.posterior, 0., 0.))
        self.assertEqual(5., beta(self.posterior, 5., 0.))

    def testFormula(self):
        eigenvalues = eigvalsh(self.kernel(self.dataset.inputs))
        log_det = np.sum(np.log1p(eigenvalues / self.posterior.noise_variance))
        expected = 1. + 0.1 * np.sqrt(2. * (np.log(100.) + 0.5 * log_det))
        self.assertAlmostEqual(expected, beta(self.posterior, 1., 0.1, delta=0.01), places=8)

    def testMonotoneInBound(self):
        values = [beta(self.posterior, b, 0.1) for b in (0., 0.5, 1., 3.)]
        self.assertEqual(sorted(values), values)

    def testInvalidDelta(self):
        for delta in (0., 1., 1.5):
            with self.assertRaises(ConfigError):
                beta(self.posterior, 1., 0.1, delta=delta)


class TestConfidenceBounds(unittest.TestCase):
    def testPriorBounds(self):
        posterior = fit(Dataset(np.zeros((0, 1)), np.zeros(0)), RBF(lengthscale=1.))
        lower, upper = confidence_bounds(posterior, 1., np.array([[0.2], [3.]]))
        np.testing.assert_array_equal([-1., -1.], lower)
        np.testing.assert_array_equal([1., 1.], upper)

    def testZeroBetaCollapses(self):
        mean = np.array([0.1, -0.3])
        lower, upper = bounds_from_moments(mean, np.array([0.2, 0.5]), 0.)
        np.testing.assert_array_equal(mean, lower)
        np.testing.assert_array_equal(mean, upper)

    def testWidth(self):
        std = np.array([0.25, 0.5, 2.])
        lower, upper = bounds_from_moments(np.zeros(3), std, 1.5)
        np.testing.assert_array_equal(2. * 1.5 * std, upper - lower)

    def testNegativeBeta(self):
        with self.assertRaises(ConfigError):
            bounds_from_moments(np.zeros(1), np.ones(1), -1.)


class TestBoundsContainRkhsFunctions(unittest.TestCase):
    def testNoiselessSandwich(self):
        kernels = [
            (Matern52(0.3), [(0., 1.), (0., 1.)]),
            (spatio_temporal_kernel(0.3, 1., 11, 20., 1., 5., 0.3), [(0., 1.), (1., 11.)]),
        ]
        for kernel, bounds in kernels:
            for seed in range(5):
                rng = np.random.default_rng(seed)
                f = sample(kernel, 40, 1., bounds, rng=rng)
                box = np.asarray(bounds)
                x = rng.uniform(box[:, 0], box[:, 1], size=(12, 2))
                query = rng.uniform(box[:, 0], box[:, 1], size=(400, 2))
                posterior = fit(Dataset(x, f(x)), kernel)
                lower, upper = confidence_bounds(posterior, beta(posterior, 1., 0.), query)
                values = f(query)
                self.assertTrue(np.all(lower <= values + 1e-9), seed)
                self.assertTrue(np.all(values <= upper + 1e-9), seed)
