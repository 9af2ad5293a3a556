"""
Velocity Obstacle and Reciprocal Velocity Obstacle tests, sampling-based velocity
selection and a Monte Carlo estimate of the probability that a chosen velocity
keeps two uncertain agents apart.
"""

from dataclasses import dataclass

import numpy as np

from unmac.airspace.doctype.separation_model.separation_model import sample_radial_error
from unmac.exceptions import DegenerateGeometryError, InvalidParameterError

GRID_DIRECTIONS = 24
GRID_SPEEDS = 8
TIE_DECIMALS = 9
SINGULAR_TOL = 1e-18


def _vec(value):
	return np.asarray(value, dtype=float).reshape(2)


def preferred_velocity(position, goal, v_cruise, v_max, dt):
	"""Cruise towards the goal, slowing down to land exactly on it within one step."""
	to_goal = _vec(goal) - _vec(position)
	distance = np.linalg.norm(to_goal)
	if distance == 0:
		return np.zeros(2)
	speed = min(v_max if v_cruise is None else v_cruise, v_max, distance / dt)
	return to_goal / distance * speed


@dataclass(frozen=True)
class AgentKinematics:
	position: tuple
	velocity: tuple
	radius: float
	v_max: float
	goal: tuple
	v_cruise: float | None = None

	def __post_init__(self):
		if not self.radius > 0:
			raise InvalidParameterError(f"Agent radius must be positive, got {self.radius}")
		if not self.v_max > 0:
			raise InvalidParameterError(f"v_max must be positive, got {self.v_max}")
		speed = np.linalg.norm(_vec(self.velocity))
		if speed > self.v_max * (1 + 1e-9):
			raise InvalidParameterError(f"Speed {speed:.3f} exceeds v_max {self.v_max}")
		if self.v_cruise is None:
			object.__setattr__(self, "v_cruise", self.v_max)

	def preferred_velocity(self, dt):
		return preferred_velocity(self.position, self.goal, self.v_cruise, self.v_max, dt)


@dataclass(frozen=True)
class RvoConstraint:
	"""
	One pairwise constraint seen from agent i.

	``reciprocal`` is False for a static obstacle, whose velocity obstacle is not shared.
	"""

	r_ij: tuple
	v_i: tuple
	v_j: tuple
	radius: float
	reciprocal: bool = True

	def __post_init__(self):
		if not self.radius > 0:
			raise InvalidParameterError(f"Combined radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Neighbor:
	position: tuple
	velocity: tuple
	radius: float
	reciprocal: bool = True

	def constraint_for(self, agent):
		return RvoConstraint(
			r_ij=tuple(_vec(agent.position) - _vec(self.position)),
			v_i=tuple(_vec(agent.velocity)),
			v_j=tuple(_vec(self.velocity)),
			radius=self.radius,
			reciprocal=self.reciprocal,
		)


def point_in_vo(p_i, p_j, v_candidate, v_j, radius):
	"""
	Whether moving at ``v_candidate`` leads agent i into the disk of radius ``radius``
	around agent j moving at ``v_j``.

	Raises:
		DegenerateGeometryError: If the two positions coincide.
	"""
	d = _vec(p_j) - _vec(p_i)
	dd = d @ d
	if dd == 0:
		raise DegenerateGeometryError("Velocity obstacle is undefined for coincident positions")

	u = _vec(v_candidate) - _vec(v_j)
	uu = u @ u
	if uu == 0:
		return False
	if dd < radius**2:
		return True

	du = d @ u
	if du <= 0:
		return False
	return bool(dd - du**2 / uu < radius**2)


def relative_velocity(c, v):
	v = _vec(v)
	if c.reciprocal:
		return 2 * v - _vec(c.v_i) - _vec(c.v_j)
	return v - _vec(c.v_j)


def _line_margin(r, w, radius):
	rw = np.einsum("...d,...d->...", r, w)
	ww = np.einsum("...d,...d->...", w, w)
	rr = np.einsum("...d,...d->...", r, r)
	singular = ww <= SINGULAR_TOL
	with np.errstate(divide="ignore", invalid="ignore"):
		projection = np.where(singular, 0.0, rw**2 / ww)
	return rr - projection - radius**2, rw, singular


def _clearance(r, w, radius):
	"""
	Feasibility margin over broadcast arrays of offsets ``r``, relative velocities ``w``
	and combined radii. Only strictly diverging motion is exempt from the line test; a
	vanishing relative velocity keeps the current separation.
	"""
	value, rw, singular = _line_margin(r, w, radius)
	return np.where((rw > 0) & ~singular, np.maximum(value, 0.0), value)


def rvo_value(c, v_rvo):
	"""
	Signed feasibility margin of ``v_rvo`` against one constraint, in square meters.

	The relative motion line is extended in both directions. When the relative velocity
	vanishes the current separation is kept, giving ``|r|^2 - R^2``.
	"""
	return float(_line_margin(_vec(c.r_ij), relative_velocity(c, v_rvo), c.radius)[0])


def rvo_clearance(c, v_rvo):
	"""Like :func:`rvo_value`, but motion that strictly opens the distance never counts as a conflict."""
	return float(_clearance(_vec(c.r_ij), relative_velocity(c, v_rvo), c.radius))


def is_feasible(c, v_rvo):
	return rvo_clearance(c, v_rvo) >= 0


def constraint_arrays(constraints):
	"""Stack constraints into ``(r, v_i, v_j, radius, reciprocal)`` arrays, one row each."""
	r = np.array([c.r_ij for c in constraints], dtype=float).reshape(-1, 2)
	v_i = np.array([c.v_i for c in constraints], dtype=float).reshape(-1, 2)
	v_j = np.array([c.v_j for c in constraints], dtype=float).reshape(-1, 2)
	radius = np.array([c.radius for c in constraints], dtype=float)
	reciprocal = np.array([c.reciprocal for c in constraints], dtype=bool)
	return r, v_i, v_j, radius, reciprocal


def _candidate_grid(v_pref, velocity, v_max, directions=GRID_DIRECTIONS, speeds=GRID_SPEEDS):
	speed = np.linalg.norm(v_pref)
	heading = v_pref / speed if speed > 0 else np.array([1.0, 0.0])

	offsets = 2 * np.pi * np.arange(-(directions // 2) + 1, directions // 2 + 1) / directions
	magnitudes = v_max * np.arange(1, speeds + 1) / speeds
	local_x = np.outer(magnitudes, np.cos(offsets)).ravel()
	local_y = np.outer(magnitudes, np.sin(offsets)).ravel()
	grid = np.column_stack(
		(local_x * heading[0] - local_y * heading[1], local_x * heading[1] + local_y * heading[0])
	)

	current = np.asarray(velocity, dtype=float)
	current_speed = np.linalg.norm(current)
	if current_speed > v_max:
		current = current / current_speed * v_max

	return np.vstack((v_pref, grid, np.zeros(2), current))


def _clearances(candidates, r, v_i, v_j, radius, reciprocal):
	v = candidates[:, None, :]
	w = np.where(reciprocal[None, :, None], 2 * v - v_i - v_j, v - v_j)
	return _clearance(r[None, :, :], w, radius[None, :])


def choose_velocity(
	v_pref, velocity, v_max, r, v_i, v_j, radius, reciprocal, directions=GRID_DIRECTIONS, speeds=GRID_SPEEDS
):
	"""
	Array form of :func:`select_velocity`: one row per constraint, as built by
	:func:`constraint_arrays`.
	"""
	v_pref = _vec(v_pref)
	radius = np.asarray(radius, dtype=float)
	if radius.size == 0:
		return v_pref

	candidates = _candidate_grid(v_pref, velocity, v_max, directions, speeds)
	worst = _clearances(
		candidates,
		np.asarray(r, dtype=float).reshape(-1, 2),
		np.asarray(v_i, dtype=float).reshape(-1, 2),
		np.asarray(v_j, dtype=float).reshape(-1, 2),
		radius,
		np.asarray(reciprocal, dtype=bool),
	).min(axis=1)

	feasible = np.flatnonzero(worst >= 0)
	if feasible.size == 0:
		return candidates[int(np.argmax(worst))]

	distance = np.round(np.linalg.norm(candidates[feasible] - v_pref, axis=1), TIE_DECIMALS)
	cross = v_pref[0] * candidates[feasible, 1] - v_pref[1] * candidates[feasible, 0]
	order = np.lexsort((feasible, cross >= 0, distance))
	return candidates[feasible[order[0]]]


def select_velocity(agent, neighbors, dt, directions=GRID_DIRECTIONS, speeds=GRID_SPEEDS, v_pref=None):
	"""
	Pick the velocity closest to the preferred one that is feasible against every neighbor.

	Candidates are the preferred velocity, a polar grid around its heading, a stop and the
	current velocity. Equally close candidates prefer the right-hand side of the preferred
	heading. Without a feasible candidate the one with the largest worst-case clearance wins.

	Args:
		agent (AgentKinematics): Own (reported) state.
		neighbors (list[Neighbor]): Agents and obstacles within sensing range.
		dt (float): Control step in seconds.
		directions (int): Headings in the polar candidate grid.
		speeds (int): Speed levels in the polar candidate grid.
		v_pref (optional): Preferred velocity, defaults to cruising from ``agent.position`` to the goal.

	Returns:
		numpy.ndarray: Selected velocity with norm at most ``agent.v_max``.
	"""
	if not dt > 0:
		raise InvalidParameterError(f"dt must be positive, got {dt}")

	v_pref = agent.preferred_velocity(dt) if v_pref is None else _vec(v_pref)
	if not neighbors:
		return v_pref

	arrays = constraint_arrays([n.constraint_for(agent) for n in neighbors])
	return choose_velocity(v_pref, agent.velocity, agent.v_max, *arrays, directions=directions, speeds=speeds)


def estimate_avoidance_probability(c, v_rvo, pos_uncertainty_i, pos_uncertainty_j, samples, seed):
	"""
	Monte Carlo estimate of the probability that ``v_rvo`` satisfies the constraint
	when both positions carry radial half-normal errors.

	Each draw is scored with the same clearance :func:`is_feasible` uses.

	Args:
		c (RvoConstraint): Constraint built from the reported positions.
		v_rvo: Candidate velocity.
		pos_uncertainty_i (tuple): ``(mean_offset, sigma)`` of agent i's position error.
		pos_uncertainty_j (tuple): ``(mean_offset, sigma)`` of agent j's position error.
		samples (int): Number of draws, at least 1.
		seed (int): Seed of the random generator.

	Returns:
		float: Fraction of draws with a non-negative clearance.
	"""
	if samples < 1:
		raise InvalidParameterError(f"samples must be at least 1, got {samples}")
	(mean_i, sigma_i), (mean_j, sigma_j) = pos_uncertainty_i, pos_uncertainty_j
	if sigma_i < 0 or sigma_j < 0:
		raise InvalidParameterError(f"sigma must be non-negative, got {sigma_i} and {sigma_j}")

	rng = np.random.default_rng(seed)
	error_i = _vec(mean_i) + sample_radial_error(rng, sigma_i, samples)
	error_j = _vec(mean_j) + sample_radial_error(rng, sigma_j, samples)
	r = _vec(c.r_ij) + error_i - error_j

	clearance = _clearance(r, relative_velocity(c, v_rvo)[None, :], c.radius)
	return float(np.mean(clearance >= 0))


def satisfies_chance_constraint(c, v_rvo, pos_uncertainty_i, pos_uncertainty_j, eta, samples=10_000, seed=0):
	if not 0 <= eta <= 1:
		raise InvalidParameterError(f"eta must lie in [0, 1], got {eta}")
	return (
		estimate_avoidance_probability(c, v_rvo, pos_uncertainty_i, pos_uncertainty_j, samples, seed) >= eta
	)
