import unittest

import numpy as np

from unmac.airspace.doctype.rvo_engine.rvo_engine import (
	AgentKinematics,
	Neighbor,
	RvoConstraint,
	choose_velocity,
	constraint_arrays,
	estimate_avoidance_probability,
	is_feasible,
	point_in_vo,
	rvo_clearance,
	rvo_value,
	satisfies_chance_constraint,
	select_velocity,
)
from unmac.exceptions import DegenerateGeometryError, InvalidParameterError

HEAD_ON = RvoConstraint(r_ij=(-10.0, 0.0), v_i=(1.0, 0.0), v_j=(-1.0, 0.0), radius=2.0)


class TestVelocityObstacle(unittest.TestCase):
	def test_head_on(self):
		self.assertTrue(point_in_vo((0, 0), (10, 0), (1, 0), (-1, 0), 2))

	def test_perpendicular_escape(self):
		self.assertFalse(point_in_vo((0, 0), (10, 0), (0, 1), (0, 0), 2))

	def test_zero_relative_velocity(self):
		self.assertFalse(point_in_vo((0, 0), (10, 0), (-1, 0), (-1, 0), 2))

	def test_moving_away(self):
		self.assertFalse(point_in_vo((0, 0), (10, 0), (-1, 0), (0, 0), 2))

	def test_coincident_positions(self):
		with self.assertRaises(DegenerateGeometryError):
			point_in_vo((3, 4), (3, 4), (1, 0), (0, 0), 2)

	def test_matches_time_sampling(self):
		rng = np.random.default_rng(11)
		checked = 0
		while checked < 10_000:
			p_i, p_j = rng.uniform(-50, 50, 2), rng.uniform(-50, 50, 2)
			v, v_j = rng.uniform(-10, 10, 2), rng.uniform(-10, 10, 2)
			radius = rng.uniform(1, 20)
			d, u = p_j - p_i, v - v_j
			if np.linalg.norm(d) <= radius + 0.5 or np.linalg.norm(u) < 0.5:
				continue

			horizon = 2 * (np.linalg.norm(d) + radius) / np.linalg.norm(u)
			t = np.linspace(0, horizon, 4001)[1:, None]
			closest = np.linalg.norm(d - t * u, axis=1).min()
			if abs(closest - radius) < 0.1:
				continue

			self.assertEqual(point_in_vo(p_i, p_j, v, v_j, radius), closest < radius)
			checked += 1


class TestRvoValue(unittest.TestCase):
	def test_reference_cases(self):
		self.assertAlmostEqual(rvo_value(HEAD_ON, (1, 0)), -4.0, places=9)
		self.assertAlmostEqual(rvo_value(HEAD_ON, (1, 1)), 46.0, places=9)

	def test_tangent_boundary(self):
		c = RvoConstraint(r_ij=(2.0, 0.0), v_i=(0.0, 0.0), v_j=(0.0, 0.0), radius=2.0)
		self.assertAlmostEqual(rvo_value(c, (0, 1)), 0.0, places=12)

	def test_singular_direction_keeps_separation(self):
		self.assertAlmostEqual(rvo_value(HEAD_ON, (0, 0)), 96.0, places=12)
		self.assertTrue(np.isfinite(rvo_value(HEAD_ON, (0, 0))))

	def test_scale_invariance(self):
		k = 3.0
		scaled = RvoConstraint(r_ij=(-30.0, 0.0), v_i=(3.0, 0.0), v_j=(-3.0, 0.0), radius=6.0)
		self.assertAlmostEqual(rvo_value(scaled, (3, 0)), k**2 * -4.0, places=9)
		self.assertAlmostEqual(rvo_value(scaled, (3, 3)), k**2 * 46.0, places=9)

	def test_diverging_motion_is_feasible(self):
		c = RvoConstraint(r_ij=(-10.0, 0.0), v_i=(-1.0, 0.0), v_j=(1.0, 0.0), radius=2.0)
		self.assertLess(rvo_value(c, (-1, 0)), 0)
		self.assertEqual(rvo_clearance(c, (-1, 0)), 0.0)
		self.assertTrue(is_feasible(c, (-1, 0)))
		self.assertFalse(is_feasible(HEAD_ON, (1, 0)))

	def test_stopping_inside_overlap_is_infeasible(self):
		c = RvoConstraint(r_ij=(153.0, 0.0), v_i=(0.0, 0.0), v_j=(0.0, 0.0), radius=178.0)
		self.assertAlmostEqual(rvo_value(c, (0, 0)), 153.0**2 - 178.0**2, places=6)
		self.assertLess(rvo_clearance(c, (0, 0)), 0)
		self.assertFalse(is_feasible(c, (0, 0)))
		self.assertFalse(is_feasible(c, (0, 5)))
		self.assertTrue(is_feasible(c, (5, 0)))

	def test_stopping_outside_overlap_is_feasible(self):
		self.assertTrue(is_feasible(HEAD_ON, (0, 0)))

	def test_static_obstacle_uses_plain_relative_velocity(self):
		c = RvoConstraint(r_ij=(-10.0, 0.0), v_i=(5.0, 0.0), v_j=(0.0, 0.0), radius=2.0, reciprocal=False)
		self.assertAlmostEqual(rvo_value(c, (1, 0)), -4.0, places=9)
		self.assertAlmostEqual(rvo_value(c, (1, 1)), 46.0, places=9)

	def test_radius_must_be_positive(self):
		with self.assertRaises(InvalidParameterError):
			RvoConstraint(r_ij=(1, 0), v_i=(0, 0), v_j=(0, 0), radius=0.0)


def make_agent(position=(0.0, 0.0), velocity=(10.0, 0.0), goal=(100.0, 0.0), v_cruise=10.0):
	return AgentKinematics(
		position=position, velocity=velocity, radius=5.0, v_max=20.0, goal=goal, v_cruise=v_cruise
	)


class TestSelectVelocity(unittest.TestCase):
	def test_no_neighbors(self):
		np.testing.assert_array_equal(select_velocity(make_agent(), [], 0.1), [10.0, 0.0])

	def test_slows_down_near_goal(self):
		agent = make_agent(goal=(0.5, 0.0))
		np.testing.assert_allclose(select_velocity(agent, [], 0.1), [5.0, 0.0])

	def test_inactive_neighbor(self):
		far = Neighbor(position=(0.0, 500.0), velocity=(0.0, 0.0), radius=10.0)
		np.testing.assert_array_equal(select_velocity(make_agent(), [far], 0.1), [10.0, 0.0])

	def test_head_on_pair_turns_right_symmetrically(self):
		a = make_agent(position=(-50.0, 0.0), velocity=(10.0, 0.0), goal=(50.0, 0.0))
		b = make_agent(position=(50.0, 0.0), velocity=(-10.0, 0.0), goal=(-50.0, 0.0))
		v_a = select_velocity(a, [Neighbor(position=b.position, velocity=b.velocity, radius=10.0)], 0.1)
		v_b = select_velocity(b, [Neighbor(position=a.position, velocity=a.velocity, radius=10.0)], 0.1)

		self.assertLess(v_a[1], 0)
		self.assertGreater(v_b[1], 0)
		np.testing.assert_allclose(v_b, -v_a, atol=1e-9)
		np.testing.assert_allclose(v_a, 10 * np.array([np.cos(np.pi / 12), -np.sin(np.pi / 12)]), atol=1e-9)

	def test_boxed_in_agent_stops(self):
		neighbors = [
			Neighbor(position=p, velocity=(0.0, 0.0), radius=5.0, reciprocal=False)
			for p in ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))
		]
		np.testing.assert_array_equal(select_velocity(make_agent(), neighbors, 0.1), [0.0, 0.0])

	def test_overlapping_agents_move_apart(self):
		agent = make_agent(position=(0.0, 0.0), velocity=(0.0, 0.0), goal=(0.0, 100.0))
		neighbors = [Neighbor(position=(-15.0, 0.0), velocity=(0.0, 0.0), radius=20.0)]
		self.assertFalse(is_feasible(neighbors[0].constraint_for(agent), np.zeros(2)))

		v = select_velocity(agent, neighbors, 0.1)
		self.assertGreater(v[0], 0)
		self.assertTrue(all(is_feasible(n.constraint_for(agent), v) for n in neighbors))

	def test_array_form_matches_neighbor_form(self):
		rng = np.random.default_rng(8)
		for _ in range(50):
			agent = make_agent(velocity=tuple(rng.uniform(-10, 10, 2)), goal=tuple(rng.uniform(-200, 200, 2)))
			neighbors = [
				Neighbor(
					position=tuple(rng.uniform(-80, 80, 2)),
					velocity=tuple(rng.uniform(-15, 15, 2)),
					radius=20.0,
					reciprocal=bool(rng.integers(0, 2)),
				)
				for _ in range(4)
			]
			arrays = constraint_arrays([n.constraint_for(agent) for n in neighbors])
			np.testing.assert_array_equal(
				choose_velocity(agent.preferred_velocity(0.1), agent.velocity, agent.v_max, *arrays),
				select_velocity(agent, neighbors, 0.1),
			)

	def test_random_scenes(self):
		rng = np.random.default_rng(5)
		for _ in range(200):
			agent = make_agent(velocity=tuple(rng.uniform(-10, 10, 2)), goal=tuple(rng.uniform(-200, 200, 2)))
			neighbors = [
				Neighbor(position=tuple(rng.uniform(-80, 80, 2)), velocity=tuple(rng.uniform(-15, 15, 2)), radius=20.0)
				for _ in range(3)
			]
			v = select_velocity(agent, neighbors, 0.1)
			self.assertLessEqual(np.linalg.norm(v), agent.v_max + 1e-9)

			v_pref = agent.preferred_velocity(0.1)
			if all(is_feasible(n.constraint_for(agent), v_pref) for n in neighbors):
				np.testing.assert_array_equal(v, v_pref)
			elif all(is_feasible(n.constraint_for(agent), np.zeros(2)) for n in neighbors):
				self.assertTrue(all(is_feasible(n.constraint_for(agent), v) for n in neighbors))

	def test_agent_validation(self):
		with self.assertRaises(InvalidParameterError):
			AgentKinematics(position=(0, 0), velocity=(30, 0), radius=1.0, v_max=20.0, goal=(1, 0))
		with self.assertRaises(InvalidParameterError):
			AgentKinematics(position=(0, 0), velocity=(0, 0), radius=0.0, v_max=20.0, goal=(1, 0))


def brute_force_probability(c, v_rvo, sigma, samples, seed):
	rng = np.random.default_rng(seed)
	r = np.tile(np.asarray(c.r_ij, dtype=float), (samples, 1))
	for sign in (1, -1):
		magnitude = np.abs(rng.standard_normal(samples)) * sigma
		angle = rng.random(samples) * 2 * np.pi
		r[:, 0] += sign * magnitude * np.cos(angle)
		r[:, 1] += sign * magnitude * np.sin(angle)
	w = 2 * np.asarray(v_rvo, dtype=float) - np.asarray(c.v_i) - np.asarray(c.v_j)
	along = r @ w / np.linalg.norm(w)
	value = (r**2).sum(axis=1) - along**2 - c.radius**2
	return np.mean((value >= 0) | (along > 0))


class TestAvoidanceProbability(unittest.TestCase):
	def test_without_uncertainty(self):
		exact = ((0.0, 0.0), 0.0)
		self.assertEqual(estimate_avoidance_probability(HEAD_ON, (1, 1), exact, exact, 100, 0), 1.0)
		self.assertEqual(estimate_avoidance_probability(HEAD_ON, (1, 0), exact, exact, 100, 0), 0.0)

	def test_agrees_with_feasibility(self):
		exact = ((0.0, 0.0), 0.0)
		leaving = RvoConstraint(r_ij=(-10.0, 0.0), v_i=(0.0, 0.0), v_j=(0.0, 0.0), radius=2.0, reciprocal=False)
		self.assertTrue(is_feasible(leaving, (-1, 0)))
		self.assertEqual(estimate_avoidance_probability(leaving, (-1, 0), exact, exact, 100, 0), 1.0)

		rng = np.random.default_rng(3)
		for _ in range(200):
			c = RvoConstraint(
				r_ij=tuple(rng.uniform(-30, 30, 2)),
				v_i=tuple(rng.uniform(-5, 5, 2)),
				v_j=tuple(rng.uniform(-5, 5, 2)),
				radius=float(rng.uniform(1, 20)),
			)
			v = rng.uniform(-5, 5, 2)
			p = estimate_avoidance_probability(c, v, exact, exact, 10, 0)
			self.assertEqual(p, 1.0 if is_feasible(c, v) else 0.0)

	def test_matches_brute_force(self):
		n = 100_000
		noisy = ((0.0, 0.0), 10.0)
		p = estimate_avoidance_probability(HEAD_ON, (1, 1), noisy, noisy, n, 1)
		q = brute_force_probability(HEAD_ON, (1, 1), 10.0, n, 2)
		self.assertGreater(p, 0)
		self.assertLess(p, 1)
		self.assertLess(abs(p - q), 4 * np.sqrt(2 * q * (1 - q) / n))

	def test_deterministic_for_seed(self):
		noisy = ((0.0, 0.0), 10.0)
		self.assertEqual(
			estimate_avoidance_probability(HEAD_ON, (1, 1), noisy, noisy, 1000, 9),
			estimate_avoidance_probability(HEAD_ON, (1, 1), noisy, noisy, 1000, 9),
		)

	def test_invalid_parameters(self):
		exact = ((0.0, 0.0), 0.0)
		with self.assertRaises(InvalidParameterError):
			estimate_avoidance_probability(HEAD_ON, (1, 1), exact, exact, 0, 0)
		with self.assertRaises(InvalidParameterError):
			estimate_avoidance_probability(HEAD_ON, (1, 1), ((0, 0), -1.0), exact, 10, 0)

	def test_chance_constraint(self):
		exact = ((0.0, 0.0), 0.0)
		self.assertTrue(satisfies_chance_constraint(HEAD_ON, (1, 1), exact, exact, eta=0.99))
		self.assertFalse(satisfies_chance_constraint(HEAD_ON, (1, 0), exact, exact, eta=0.5))
		with self.assertRaises(InvalidParameterError):
			satisfies_chance_constraint(HEAD_ON, (1, 1), exact, exact, eta=1.5)
