import unittest

import numpy as np

from distributed_safe_bo import Agent, InputError, InternalError, ParamGrid
from distributed_safe_bo.kernels import spatio_temporal_kernel


class TestAgent(unittest.TestCase):
    def setUp(self) -> None:
        self.grid = ParamGrid.from_bounds([(0., 1.), (0., 1.)], 5)
        self.kernel = spatio_temporal_kernel(0.3, 1., 11, 20., 0.1, 5., 0.1)
        self.agent = Agent(1, (2, 1), self.grid, self.kernel, safety_threshold=0., bound_b=1., noise_std=1e-3)

    def testNeighborhoodIsSorted(self):
        self.assertEqual((1, 2), self.agent.neighborhood)

    def testRejectsForeignNeighborhood(self):
        with self.assertRaises(InputError):
            Agent(3, (1, 2), self.grid, self.kernel, 0., 1.)
        with self.assertRaises(InputError):
            Agent(1, (1, 2, 3), self.grid, self.kernel, 0., 1.)

    def testDatasetCarriesTime(self):
        self.agent.observe([0.5, 0.5], 1, 0.4)
        self.agent.observe([0.75, 0.5], 2, 0.3)
        np.testing.assert_array_equal([[0.5, 0.5, 1.], [0.75, 0.5, 2.]], self.agent.dataset.inputs)
        np.testing.assert_array_equal([0.4, 0.3], self.agent.dataset.targets)
        with self.assertRaises(InputError):
            self.agent.observe([0.5], 3, 0.1)

    def testUnsafeRowsAreNotAnchors(self):
        self.agent.observe([0.5, 0.5], 1, -0.2)
        self.agent.observe([0.75, 0.5], 2, -0.1)
        self.agent.observe([0.25, 0.5], 3, 0.1)
        expected = [self.grid.index_of([0.5, 0.5]), self.grid.index_of([0.25, 0.5])]
        self.assertEqual(expected, self.agent.sampled_safe_indices())

    def testNoAnchorOnGrid(self):
        self.agent.observe([0.55, 0.55], 1, 0.4)
        with self.assertRaises(InternalError):
            self.agent.sampled_safe_indices()

    def testProposalIsSafe(self):
        self.agent.observe([0.5, 0.5], 1, 0.4)
        proposal = self.agent.propose(1)
        self.assertTrue(proposal.in_safe_set)
        self.assertTrue(self.agent.last_sets.safe_mask[proposal.index])
        self.assertEqual(1, proposal.own_value.size)
        np.testing.assert_array_equal(proposal.point[1:], proposal.value_for(2))
        with self.assertRaises(InputError):
            proposal.value_for(3)

    def testMirror(self):
        twin = Agent(2, (1, 2), self.grid, self.kernel, 0., 1., noise_std=1e-3)
        for agent in (self.agent, twin):
            agent.observe([0.5, 0.5], 1, 0.4)
        proposal = self.agent.propose(1)
        mirrored = twin.mirror(proposal, self.agent)
        self.assertEqual(2, mirrored.agent_id)
        self.assertEqual(proposal.index, mirrored.index)
        self.assertIs(self.agent.last_sets, twin.last_sets)
