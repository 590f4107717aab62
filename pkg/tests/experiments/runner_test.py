import json
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np

from distributed_safe_bo import ConfigError, Dataset, ParamGrid, beta, compute_sets, fit
from distributed_safe_bo.experiments import load_config
from distributed_safe_bo.experiments.runner import (
    SUMMARY_COLUMNS,
    kernel_factory,
    run_ablation_suite,
    run_experiment,
    sample_rkhs,
    toy_setup,
    validate_kernel,
)


def small_toy_config(**overrides):
    values = {
        "iterations": 2,
        "resolution": 5,
        "reward.num_centers": 30,
        "reward.evaluation_points": 500,
        "reward.initial_candidates": 500,
    }
    values.update(overrides)
    return load_config(experiment="toy4", overrides=values)


class TestToySetup(unittest.TestCase):
    def testIndependentOfVariant(self):
        config = small_toy_config()
        a = toy_setup(config)
        b = toy_setup(replace(config, variant="no_comm", topology="empty"))
        self.assertEqual(a.safety_threshold, b.safety_threshold)
        np.testing.assert_array_equal(a.initial_params, b.initial_params)
        self.assertGreaterEqual(a.initial_value, a.safety_threshold)

    def testFixedThreshold(self):
        self.assertEqual(-0.25, toy_setup(small_toy_config(**{"reward.threshold": -0.25})).safety_threshold)


class TestRunExperiment(unittest.TestCase):
    def setUp(self) -> None:
        self.config = small_toy_config()

    def testArtifacts(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = run_experiment(self.config, tmp)
            out = Path(tmp)
            for name in ("rewards.csv", "agents.csv", "config.json", "manifest.json", "ucb_agent1.csv",
                         "ucb_agent4.csv"):
                self.assertTrue((out / name).exists(), name)
            self.assertFalse((out / "ucb_agent2.csv").exists())
            header = (out / "rewards.csv").read_text().splitlines()[0]
            self.assertEqual("t,reward,violation,a1,a2,a3,a4", header)
            manifest = json.loads((out / "manifest.json").read_text())
            self.assertEqual(2, manifest["iterations"])
            self.assertEqual(result.best_reward, manifest["best_reward"])
            self.assertEqual(result.violation_count, manifest["violation_count"])

    def testRepeatedRunsWriteIdenticalFiles(self):
        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            run_experiment(self.config, a)
            run_experiment(self.config, b)
            for name in ("rewards.csv", "agents.csv", "config.json", "ucb_agent1.csv"):
                self.assertEqual((Path(a) / name).read_bytes(), (Path(b) / name).read_bytes(), name)

    def testNoCommunicationVariant(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = run_experiment(replace(self.config, variant="no_comm"), tmp)
            self.assertFalse(any(trace.overridden for trace in result.per_agent_traces))
            self.assertTrue((Path(tmp) / "ucb_agent2.csv").exists())
            self.assertEqual("empty", json.loads((Path(tmp) / "config.json").read_text())["topology"])

    def testNoLatentVariant(self):
        result = run_experiment(replace(self.config, variant="no_latent"))
        self.assertEqual(3, len(result.rewards))

    def testRejectsNonRunExperiments(self):
        with self.assertRaises(ConfigError):
            run_experiment(load_config(experiment="validate_kernel"))

    def testPlatooning(self):
        config = load_config(experiment="platooning", overrides={"iterations": 1, "resolution": 5,
                                                                 "platoon.episode_length": 5.})
        with tempfile.TemporaryDirectory() as tmp:
            result = run_experiment(config, tmp)
            self.assertEqual((2, 4, 1), result.joint_params.shape)
            np.testing.assert_array_equal([[4.], [5.], [4.], [5.]], result.joint_params[0])
            episode = (Path(tmp) / "episode.csv").read_text().splitlines()
            self.assertEqual(51, len(episode) - 1)
            vehicles = (Path(tmp) / "vehicles.csv").read_text().splitlines()
            self.assertEqual("follower,wheel_radius,rolling_coeff,frontal_area,drag_coeff,mass", vehicles[0])
            self.assertEqual(5, len(vehicles))


class TestStartingSets(unittest.TestCase):
    def starting_sets(self, config, initial, reward, h):
        dims = len(initial)
        grid = ParamGrid.from_bounds([tuple(config.param_bounds[0])] * dims, config.resolution or 30,
                                     include=np.array([initial]))
        kernel = kernel_factory(config)(dims)
        posterior = fit(Dataset(np.array([initial + [1.]]), np.array([reward]), noise_std=config.noise_std), kernel)
        beta_value = beta(posterior, config.bound_b, config.noise_std, config.delta)
        anchor = grid.index_of(initial)
        return kernel, compute_sets(grid, posterior, beta_value, config.bound_b, h, [anchor], time=2.)

    def testToyPriorCoversUnitNormReward(self):
        config = load_config(experiment="toy4")
        kernel, sets = self.starting_sets(config, [0.5, 0.5], 0.5, 0.)
        times = np.arange(0., config.iterations + 2.)
        self.assertTrue(np.all(kernel.diag(np.column_stack([np.full((times.size, 2), 0.5), times])) >= 1.))
        self.assertFalse(sets.safe_mask.all())
        self.assertTrue(sets.expander_mask.any())

    def testPlatooningStartCanExpand(self):
        config = load_config(experiment="platooning")
        _, sets = self.starting_sets(config, [4., 5., 4.], 15., -1.)
        self.assertFalse(sets.safe_mask.all())
        self.assertGreater(int(sets.safe_mask.sum()), 1)
        self.assertTrue(sets.expander_mask.any())
        self.assertGreater(int((sets.maximizer_mask | sets.expander_mask).sum()), 1)


class TestAblationSuite(unittest.TestCase):
    def testSummary(self):
        config = small_toy_config(iterations=1)
        with tempfile.TemporaryDirectory() as tmp:
            summary = run_ablation_suite(config, 2, variants=("full_algorithm", "no_comm"), out_dir=tmp)
            self.assertEqual(SUMMARY_COLUMNS, list(summary.columns))
            self.assertEqual(6, len(summary))
            self.assertEqual([0, 1, 0, 1], list(summary["seed"][:4]))
            medians = summary[summary["row"] == "median"]
            self.assertEqual(["full_algorithm", "no_comm"], list(medians["variant"]))
            self.assertTrue((Path(tmp) / "summary.csv").exists())
            self.assertTrue((Path(tmp) / "no_comm" / "seed_1" / "rewards.csv").exists())

    def testNeedsSeeds(self):
        with self.assertRaises(ConfigError):
            run_ablation_suite(small_toy_config(), 0)


class TestSampleRkhs(unittest.TestCase):
    def testTemporal(self):
        df = sample_rkhs(load_config(experiment="sample_rkhs"))
        self.assertEqual(["t"] + [f"sample_{i}" for i in range(1, 6)], list(df.columns))
        self.assertEqual(50, len(df))

    def testRewardLattice(self):
        config = load_config(experiment="sample_rkhs", overrides={"sample.kind": "reward", "sample.dims": 2,
                                                                  "sample.resolution": 5, "sample.num_samples": 2})
        with tempfile.TemporaryDirectory() as tmp:
            df = sample_rkhs(config, tmp)
            self.assertEqual(["x1", "x2", "sample_1", "sample_2"], list(df.columns))
            self.assertEqual(25, len(df))
            self.assertTrue((Path(tmp) / "rkhs_samples.csv").exists())

    def testDeterministic(self):
        config = load_config(experiment="sample_rkhs", overrides={"seed": 5})
        self.assertTrue(sample_rkhs(config).equals(sample_rkhs(config)))


class TestValidateKernel(unittest.TestCase):
    def testAllTrialsPass(self):
        config = load_config(experiment="validate_kernel", overrides={"validate.trials": 9})
        with tempfile.TemporaryDirectory() as tmp:
            df = validate_kernel(config, tmp)
            self.assertEqual(9, len(df))
            self.assertTrue(df["ok"].all())
            self.assertEqual(["temporal", "spatial", "joint"] * 3, list(df["domain"]))
            self.assertTrue((Path(tmp) / "kernel_validation.csv").exists())
