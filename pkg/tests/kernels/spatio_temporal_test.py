import unittest

import numpy as np

from distributed_safe_bo import ConfigError, InputError
from distributed_safe_bo.kernels import (
    Matern12,
    Matern32,
    Matern52,
    Product,
    RBF,
    Sum,
    Weighting,
    check_psd,
    eval_spatio_temporal,
    eval_temporal,
    gram,
    kernel_from_dict,
    spatio_temporal_kernel,
    split_spatio_temporal,
    stack_input,
    temporal_kernel,
)


class TestTemporalKernel(unittest.TestCase):
    def setUp(self) -> None:
        # sample-path hyperparameters: ℓ_RBF=5, σ_RBF=1, ℓ_Ma12=1, σ_Ma12=10
        self.rbf = (5., 1.)
        self.ma12 = (1., 10.)

    def testZeroLagAtMidpoint(self):
        self.assertEqual(26., eval_temporal(25., 25., self.rbf, self.ma12, 50))

    def testDistantTimesDecorrelate(self):
        self.assertLess(eval_temporal(1., 50., self.rbf, self.ma12, 50), 1e-20)

    def testSpatioTemporalIdenticalInputs(self):
        kernel = spatio_temporal_kernel(0.3, 1., 50, 5., 1., 1., 10.)
        z = stack_input([0.2, 0.7], 25.)
        self.assertAlmostEqual(26., eval_spatio_temporal(kernel, z, z), places=12)

    def testProductFactorizes(self):
        kernel = spatio_temporal_kernel(0.3, 1., 50, 5., 1., 1., 10.)
        z, z_prime = stack_input([0.1, 0.4], 12.), stack_input([0.3, 0.2], 17.)
        expected = Matern52(0.3).eval([0.1, 0.4], [0.3, 0.2]) * eval_temporal(12., 17., self.rbf, self.ma12, 50)
        self.assertAlmostEqual(expected, kernel.eval(z, z_prime), places=12)

    def testSplit(self):
        spatial, temporal = split_spatio_temporal(spatio_temporal_kernel(0.3, 1., 50, 20., .1, 5., .1))
        self.assertEqual("Matern52", spatial.kind)
        self.assertEqual("time", temporal.inputs)
        with self.assertRaises(ConfigError):
            split_spatio_temporal(Sum([RBF(1.), RBF(2.)]))

    def testTimeBeyondHorizon(self):
        with self.assertRaises(InputError):
            temporal_kernel(10, 5., 1., 1., 1.).eval(11., 1.)


class TestKernelSpec(unittest.TestCase):
    def testRoundTrip(self):
        kernel = spatio_temporal_kernel(0.3, 1., 51, 20., .1, 5., .1)
        rebuilt = kernel_from_dict(kernel.to_dict())
        self.assertEqual(kernel.to_dict(), rebuilt.to_dict())
        x = np.array([[0.1, 0.5, 3.], [0.9, 0.2, 40.]])
        np.testing.assert_array_equal(kernel(x), rebuilt(x))

    def testUnknownKeyNamesPath(self):
        spec = {"kind": "Product", "children": [{"kind": "Matern52", "lengthscale": 0.3, "variance": 1.}]}
        with self.assertRaises(ConfigError) as ctx:
            kernel_from_dict(spec)
        self.assertIn("kernel.children[0]", str(ctx.exception))

    def testMissingHorizon(self):
        with self.assertRaises(ConfigError) as ctx:
            kernel_from_dict({"kind": "Weighting"}, path="kernel.custom")
        self.assertIn("kernel.custom.horizon", str(ctx.exception))

    def testUnknownKind(self):
        with self.assertRaises(ConfigError):
            kernel_from_dict({"kind": "Periodic", "lengthscale": 1.})


class TestPsd(unittest.TestCase):
    def testIndefiniteMatrix(self):
        self.assertFalse(check_psd(np.array([[1., 2.], [2., 1.]])))

    def testRejectsNonSymmetric(self):
        with self.assertRaises(InputError):
            check_psd(np.array([[1., 0.5], [0.4, 1.]]))
        with self.assertRaises(InputError):
            check_psd(np.ones((2, 3)))

    def testCompositeGramIsPositiveSemiDefinite(self):
        rng = np.random.default_rng(0)
        kernel = spatio_temporal_kernel(0.3, 1., 51, 20., .1, 5., .1)
        for trial in range(200):
            size, dims = int(rng.integers(1, 41)), int(rng.integers(1, 5))
            inputs = np.hstack([rng.uniform(size=(size, dims)), rng.uniform(0., 51., size=(size, 1))])
            matrix = gram(kernel, inputs)
            np.testing.assert_array_equal(matrix, matrix.T)
            self.assertTrue(check_psd(matrix))

    def testProductOfSumsIsSymmetric(self):
        kernel = Product([Sum([RBF(0.5), Matern52(0.2)]), RBF(1.)])
        x = np.random.default_rng(1).uniform(size=(9, 2))
        matrix = kernel(x)
        np.testing.assert_allclose(matrix, matrix.T, rtol=0, atol=0)

    def testEveryKindIsSymmetric(self):
        rng = np.random.default_rng(3)
        horizon = 51
        spatial = rng.uniform(size=(1000, 3))
        spatial_other = rng.uniform(size=(1000, 3))
        times = rng.uniform(0., horizon, size=(1000, 1))
        times_other = rng.uniform(0., horizon, size=(1000, 1))
        kernels = {
            "RBF": RBF(0.3, 2.),
            "Matern12": Matern12(0.3),
            "Matern32": Matern32(0.3, 0.5),
            "Matern52": Matern52(0.3),
            "Sum": Sum([RBF(0.5), Matern52(0.2)]),
            "Product": Product([Matern32(0.5), RBF(1.)]),
        }
        for kind, kernel in kernels.items():
            np.testing.assert_allclose(kernel.paired(spatial, spatial_other), kernel.paired(spatial_other, spatial),
                                       rtol=1e-14, atol=1e-15, err_msg=kind)
        temporal = {
            "Weighting": Weighting(horizon),
            "temporal": temporal_kernel(horizon, 20., 1., 5., 0.3),
        }
        for kind, kernel in temporal.items():
            np.testing.assert_allclose(kernel.paired(times, times_other), kernel.paired(times_other, times),
                                       rtol=1e-14, atol=1e-15, err_msg=kind)
        kernel = spatio_temporal_kernel(0.3, 1., horizon, 20., 1., 5., 0.3)
        z, z_other = np.hstack([spatial, times]), np.hstack([spatial_other, times_other])
        np.testing.assert_allclose(kernel.paired(z, z_other), kernel.paired(z_other, z), rtol=1e-14, atol=1e-15)
