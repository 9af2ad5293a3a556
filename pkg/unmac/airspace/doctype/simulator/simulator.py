"""
Discrete-time multi-UAV simulation: fleet generation, scenario layouts, the
broadcast/decide/move loop, swept mid-air collision detection and the Monte Carlo
harness that compares safety-disk policies on common random numbers.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np
import structlog

from unmac.airspace.doctype.remote_id.remote_id import (
	MessageFormat,
	RemoteIdMessage,
	disk_radius,
	wire_roundtrip,
)
from unmac.airspace.doctype.rvo_engine.rvo_engine import choose_velocity, preferred_velocity
from unmac.airspace.doctype.scenario_config.scenario_config import Layout, ScenarioConfig
from unmac.airspace.doctype.separation_model.separation_model import (
	ACCURACY_CLASSES,
	AF_MAX,
	AF_MIN,
	SPEED_CATEGORIES,
	AccuracyClass,
	UavSpec,
	sample_radial_error,
)
from unmac.exceptions import InvalidParameterError

logger = structlog.get_logger(__name__)

# Stream tags keep fleet and noise draws independent even when both seeds are equal
FLEET_STREAM = 0
NOISE_STREAM = 1


class UavStatus(str, Enum):
	ACTIVE = "ACTIVE"
	ARRIVED = "ARRIVED"
	COLLIDED = "COLLIDED"


@dataclass
class UavState:
	uav_id: str
	spec: UavSpec
	true_position: np.ndarray
	reported_position: np.ndarray
	velocity: np.ndarray
	goal: np.ndarray
	status: UavStatus = UavStatus.ACTIVE
	arrival_time: float | None = None

	@property
	def is_active(self):
		return self.status is UavStatus.ACTIVE

	def mark_arrived(self, time):
		if not self.is_active:
			raise InvalidParameterError(f"{self.uav_id} is {self.status.value} and cannot arrive")
		self.status = UavStatus.ARRIVED
		self.arrival_time = float(time)

	def mark_collided(self):
		if not self.is_active:
			raise InvalidParameterError(f"{self.uav_id} is {self.status.value} and cannot collide")
		self.status = UavStatus.COLLIDED


@dataclass(frozen=True)
class MacEvent:
	time: float
	uav_i: str
	uav_j: str
	distance: float


@dataclass
class SimOutcome:
	policy: MessageFormat
	run_index: int
	fleet_seed: int
	noise_seed: int
	arrival_times: dict
	statuses: dict
	mac_events: list = field(default_factory=list)
	min_separation_trace: list = field(default_factory=list)
	stalled: list = field(default_factory=list)

	@property
	def mac_count(self):
		return len(self.mac_events)

	@property
	def mission_times(self):
		return [t for t in self.arrival_times.values() if t is not None]

	@property
	def status_counts(self):
		counts = {status.value: 0 for status in UavStatus}
		for status in self.statuses.values():
			counts[status.value] += 1
		return counts

	@property
	def min_separation(self):
		values = [d for d in self.min_separation_trace if d is not None]
		return min(values) if values else None

	def as_row(self):
		"""Flat per-run record, one line of ``runs.csv``."""
		times = self.mission_times
		counts = self.status_counts
		return {
			"policy": self.policy.value,
			"run_index": self.run_index,
			"fleet_seed": self.fleet_seed,
			"noise_seed": self.noise_seed,
			"agents": len(self.statuses),
			"arrived": counts[UavStatus.ARRIVED.value],
			"collided": counts[UavStatus.COLLIDED.value],
			"stalled": len(self.stalled),
			"mac_count": self.mac_count,
			"median_time_s": float(np.median(times)) if times else None,
			"mean_time_s": float(np.mean(times)) if times else None,
			"max_time_s": max(times) if times else None,
			"min_separation_m": self.min_separation,
		}

	def as_dict(self):
		return {
			**self.as_row(),
			"arrival_times": dict(self.arrival_times),
			"statuses": {uav_id: status.value for uav_id, status in self.statuses.items()},
			"mac_events": [asdict(e) for e in self.mac_events],
			"stalled_uavs": list(self.stalled),
		}


@dataclass(frozen=True)
class PolicySummary:
	policy: MessageFormat
	runs: int
	flights: int
	arrived: int
	collided: int
	stalled: int
	mac_count: int
	runs_with_mac: int
	median_time_s: float | None
	mean_time_s: float | None
	p95_time_s: float | None

	@property
	def mac_rate(self):
		return self.runs_with_mac / self.runs if self.runs else 0.0

	@classmethod
	def from_outcomes(cls, policy, outcomes):
		"""Aggregate runs of one policy; mission times are pooled over every arrived flight."""
		times = [t for outcome in outcomes for t in outcome.mission_times]
		return cls(
			policy=MessageFormat.parse(policy),
			runs=len(outcomes),
			flights=sum(len(o.statuses) for o in outcomes),
			arrived=len(times),
			collided=sum(o.status_counts[UavStatus.COLLIDED.value] for o in outcomes),
			stalled=sum(len(o.stalled) for o in outcomes),
			mac_count=sum(o.mac_count for o in outcomes),
			runs_with_mac=sum(1 for o in outcomes if o.mac_count),
			median_time_s=float(np.median(times)) if times else None,
			mean_time_s=float(np.mean(times)) if times else None,
			p95_time_s=float(np.percentile(times, 95)) if times else None,
		)

	def as_dict(self):
		data = asdict(self)
		data["policy"] = self.policy.value
		data["mac_rate"] = self.mac_rate
		return data


@dataclass
class PolicyRuns:
	summary: PolicySummary
	outcomes: list


@dataclass
class World:
	"""Mutable state of one run."""

	config: ScenarioConfig
	agents: list
	noise_rng: np.random.Generator
	step_index: int = 0
	broadcasts: dict = field(default_factory=dict)
	mac_events: list = field(default_factory=list)
	min_separation_trace: list = field(default_factory=list)

	@property
	def time(self):
		return self.step_index * self.config.dt

	@property
	def active(self):
		return [a for a in self.agents if a.is_active]


def generate_fleet(
	n,
	seed=None,
	rng=None,
	sigma=ACCURACY_CLASSES["worst_case"].sigma,
	category=3,
	airframe_min=AF_MIN,
	airframe_max=AF_MAX,
	broadcast_interval=0.1,
):
	"""
	Draw ``n`` UAVs: uniform airframes, one accuracy class and per-airframe cruise speeds
	from the category's Gaussian, truncated to ``(0, v_max]`` by resampling.
	"""
	if n < 1:
		raise InvalidParameterError(f"Fleet size must be at least 1, got {n}")
	if rng is None:
		rng = np.random.default_rng(seed)

	speed = SPEED_CATEGORIES[category]
	airframes = rng.uniform(airframe_min, airframe_max, n)
	cruise = rng.normal(speed.v_cruise, speed.sigma_v, n)
	rejected = (cruise <= 0) | (cruise > speed.v_max)
	while rejected.any():
		cruise[rejected] = rng.normal(speed.v_cruise, speed.sigma_v, int(rejected.sum()))
		rejected = (cruise <= 0) | (cruise > speed.v_max)

	accuracy = AccuracyClass.for_sigma(sigma)
	return [
		UavSpec(
			airframe_diameter=float(a),
			speed=speed,
			accuracy=accuracy,
			broadcast_interval=broadcast_interval,
			cruise_speed=float(v),
		)
		for a, v in zip(airframes, cruise, strict=True)
	]


def _square_perimeter(side, per_side):
	half = side / 2
	offsets = (np.arange(per_side) + 0.5) * side / per_side - half
	bottom = [(x, -half) for x in offsets]
	right = [(half, y) for y in offsets]
	top = [(x, half) for x in offsets[::-1]]
	left = [(-half, y) for y in offsets[::-1]]
	return bottom + right + top + left


def build_scenario(cfg, fleet):
	"""Place the fleet on the layout around the origin; every goal is the start reflected through it."""
	if len(fleet) != cfg.agent_count:
		raise InvalidParameterError(f"{cfg.layout.value} needs {cfg.agent_count} UAVs, got {len(fleet)}")

	if cfg.layout is Layout.CIRCLE8:
		angles = 2 * np.pi * np.arange(cfg.agent_count) / cfg.agent_count
		starts = [(cfg.circle_radius * math.cos(a), cfg.circle_radius * math.sin(a)) for a in angles]
	else:
		starts = _square_perimeter(cfg.square_side, cfg.agent_count // 4)

	agents = []
	for k, (spec, start) in enumerate(zip(fleet, starts, strict=True)):
		position = np.asarray(start, dtype=float)
		agents.append(
			UavState(
				uav_id=f"UAV-{k:03d}",
				spec=spec,
				true_position=position.copy(),
				reported_position=position.copy(),
				velocity=np.zeros(2),
				goal=-position,
			)
		)
	return agents


def broadcast(world):
	"""Every active UAV samples a fresh localization error and broadcasts its message."""
	fmt = world.config.policy.broadcast_format
	world.broadcasts = {}
	for agent in world.active:
		sigma = agent.spec.accuracy.sigma
		reported = agent.true_position + sample_radial_error(world.noise_rng, sigma)
		msg = RemoteIdMessage(
			uav_id=agent.uav_id,
			timestamp=world.time,
			position=tuple(reported),
			velocity=tuple(agent.velocity),
			loc_error=agent.spec.accuracy.three_sigma if fmt is not MessageFormat.STANDARD else None,
			airframe=agent.spec.airframe_diameter if fmt is MessageFormat.CANDIDATE2 else None,
		)
		if world.config.wire_codec:
			msg = wire_roundtrip(msg)
		agent.reported_position = np.asarray(msg.position, dtype=float)
		world.broadcasts[agent.uav_id] = msg


def decide(world):
	"""Velocity of every active UAV, chosen from the frozen broadcast snapshot."""
	cfg = world.config
	policy = cfg.safety_policy
	active = world.active
	messages = [world.broadcasts[a.uav_id] for a in active]

	positions = np.array([m.position for m in messages], dtype=float).reshape(-1, 2)
	velocities = np.array([m.velocity for m in messages], dtype=float).reshape(-1, 2)
	radii = np.array([disk_radius(policy, m, cfg.dt) for m in messages], dtype=float)
	gaps = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
	in_range = (gaps <= cfg.sensing_range) & ~np.eye(len(active), dtype=bool)

	obstacle = cfg.obstacle
	decisions = {}
	for k, agent in enumerate(active):
		others = np.flatnonzero(in_range[k])
		r = positions[k] - positions[others]
		v_j = velocities[others]
		radius = radii[k] + radii[others]
		reciprocal = np.ones(len(others), dtype=bool)

		if obstacle is not None:
			reach = cfg.sensing_range + obstacle.avoidance_radius
			if math.dist(obstacle.center, positions[k]) <= reach:
				r = np.vstack((r, positions[k] - np.asarray(obstacle.center, dtype=float)))
				v_j = np.vstack((v_j, np.zeros(2)))
				radius = np.append(radius, radii[k] + obstacle.avoidance_radius)
				reciprocal = np.append(reciprocal, False)

		v_max = agent.spec.speed.v_max
		# Goal steering and arrival both use the true position
		v_pref = preferred_velocity(agent.true_position, agent.goal, agent.spec.cruise_speed, v_max, cfg.dt)
		decisions[agent.uav_id] = choose_velocity(
			v_pref,
			agent.velocity,
			v_max,
			r,
			np.broadcast_to(agent.velocity, r.shape),
			v_j,
			radius,
			reciprocal,
			directions=cfg.candidate_directions,
			speeds=cfg.candidate_speeds,
		)
	return decisions


def detect_mac(state_i, state_j, prev_i, prev_j, t0=0.0, dt=0.0):
	"""
	Check one pair for a mid-air collision over the step that moved them from
	``prev_i``/``prev_j`` to their current true positions.

	The minimum distance along both straight-line motions is compared with half the sum
	of the airframe diameters. On a MAC both UAVs become COLLIDED.

	Returns:
		MacEvent | None: The collision, timed at the closest approach within the step.
	"""
	if not (state_i.is_active and state_j.is_active):
		return None

	d0 = np.asarray(prev_i, dtype=float) - np.asarray(prev_j, dtype=float)
	dd = (state_i.true_position - np.asarray(prev_i, dtype=float)) - (
		state_j.true_position - np.asarray(prev_j, dtype=float)
	)
	dd2 = float(dd @ dd)
	t = 0.0 if dd2 == 0 else min(max(-float(d0 @ dd) / dd2, 0.0), 1.0)
	distance = float(np.linalg.norm(d0 + t * dd))

	r_mac = (state_i.spec.airframe_diameter + state_j.spec.airframe_diameter) / 2
	if distance >= r_mac:
		return None

	state_i.mark_collided()
	state_j.mark_collided()
	return MacEvent(time=float(t0 + t * dt), uav_i=state_i.uav_id, uav_j=state_j.uav_id, distance=distance)


def _close_pairs(agents, previous):
	"""Index pairs ``i < j`` whose swept distance over the step may be below their MAC radius."""
	start = np.array([previous[a.uav_id] for a in agents], dtype=float)
	moved = np.array([a.true_position for a in agents], dtype=float) - start
	d0 = start[:, None, :] - start[None, :, :]
	dd = moved[:, None, :] - moved[None, :, :]

	dd2 = np.einsum("ijd,ijd->ij", dd, dd)
	with np.errstate(divide="ignore", invalid="ignore"):
		t = np.where(dd2 > 0, np.clip(-np.einsum("ijd,ijd->ij", d0, dd) / dd2, 0.0, 1.0), 0.0)
	distance = np.linalg.norm(d0 + t[..., None] * dd, axis=-1)

	airframes = np.array([a.spec.airframe_diameter for a in agents], dtype=float)
	r_mac = (airframes[:, None] + airframes[None, :]) / 2
	# Exact decision is left to detect_mac
	close = np.triu(distance < r_mac + 1e-6, k=1)
	return zip(*np.nonzero(close), strict=True)


def _min_separation(agents):
	if len(agents) < 2:
		return None
	positions = np.array([a.true_position for a in agents])
	gaps = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
	return float(gaps[np.triu_indices(len(agents), k=1)].min())


def step(world):
	"""Advance the world by one broadcast interval."""
	cfg = world.config
	broadcast(world)
	decisions = decide(world)

	moving = world.active
	previous = {a.uav_id: a.true_position.copy() for a in moving}
	for agent in moving:
		agent.velocity = np.asarray(decisions[agent.uav_id], dtype=float)
		agent.true_position = agent.true_position + agent.velocity * cfg.dt

	if len(moving) > 1:
		for i, j in _close_pairs(moving, previous):
			agent_i, agent_j = moving[i], moving[j]
			event = detect_mac(
				agent_i, agent_j, previous[agent_i.uav_id], previous[agent_j.uav_id], world.time, cfg.dt
			)
			if event is not None:
				world.mac_events.append(event)

	world.min_separation_trace.append(_min_separation(world.active))

	world.step_index += 1
	for agent in world.active:
		if np.linalg.norm(agent.true_position - agent.goal) <= cfg.arrival_tolerance:
			agent.mark_arrived(world.time)
	return world


def simulate_world(world):
	"""Step until every UAV has landed, collided or the time limit is hit."""
	max_steps = math.ceil(world.config.max_sim_time / world.config.dt - 1e-9)
	while world.active and world.step_index < max_steps:
		step(world)
	return world


def run_simulation(cfg, run_index=0):
	"""One seeded run of ``cfg`` under its policy."""
	fleet_rng = np.random.default_rng([cfg.fleet_seed, run_index, FLEET_STREAM])
	noise_rng = np.random.default_rng([cfg.noise_seed, run_index, NOISE_STREAM])
	fleet = generate_fleet(
		cfg.agent_count,
		rng=fleet_rng,
		sigma=cfg.sigma,
		category=cfg.speed_category,
		airframe_min=cfg.airframe_min,
		airframe_max=cfg.airframe_max,
		broadcast_interval=cfg.dt,
	)
	world = simulate_world(World(config=cfg, agents=build_scenario(cfg, fleet), noise_rng=noise_rng))

	return SimOutcome(
		policy=cfg.policy,
		run_index=run_index,
		fleet_seed=cfg.fleet_seed,
		noise_seed=cfg.noise_seed,
		arrival_times={a.uav_id: a.arrival_time for a in world.agents},
		statuses={a.uav_id: a.status for a in world.agents},
		mac_events=list(world.mac_events),
		min_separation_trace=list(world.min_separation_trace),
		stalled=[a.uav_id for a in world.agents if a.is_active],
	)


def log_outcome(outcome):
	policy = outcome.policy.value
	for event in outcome.mac_events:
		logger.warning(
			"mac_detected",
			policy=policy,
			run_index=outcome.run_index,
			time=round(event.time, 3),
			uav_i=event.uav_i,
			uav_j=event.uav_j,
			distance=round(event.distance, 3),
		)
	if outcome.stalled:
		logger.info("agents_stalled", policy=policy, run_index=outcome.run_index, uavs=outcome.stalled)
	logger.debug("run_finished", policy=policy, run_index=outcome.run_index, macs=outcome.mac_count)


def run_monte_carlo(cfg, runs, policies=None, workers=1):
	"""
	Repeat :func:`run_simulation` for every policy.

	Run ``k`` draws the same fleet and noise streams under every policy, so policies are
	compared on common random numbers. With more than one worker the runs of all policies
	are spread over a process pool; outcomes are logged here, in run order.

	Args:
		cfg (ScenarioConfig): Scenario; its ``policy`` is replaced per requested policy.
		runs (int): Runs per policy, at least 1.
		policies (list, optional): Policies to compare; defaults to ``cfg.policy``.
		workers (int): Worker processes; results do not depend on it.

	Returns:
		dict[MessageFormat, PolicyRuns]: Summary and per-run outcomes, in policy order.
	"""
	if runs < 1:
		raise InvalidParameterError(f"runs must be at least 1, got {runs}")
	if workers < 1:
		raise InvalidParameterError(f"workers must be at least 1, got {workers}")

	policies = [cfg.policy] if not policies else [MessageFormat.parse(p) for p in policies]
	jobs = [(replace(cfg, policy=policy), k) for policy in policies for k in range(runs)]
	logger.info(
		"monte_carlo_started",
		policies=[p.value for p in policies],
		runs=runs,
		layout=cfg.layout.value,
		workers=workers,
	)

	if workers == 1:
		outcomes = [run_simulation(c, k) for c, k in jobs]
	else:
		configs, indices = zip(*jobs, strict=True)
		chunksize = max(1, len(jobs) // (4 * workers))
		with ProcessPoolExecutor(max_workers=workers) as executor:
			outcomes = list(executor.map(run_simulation, configs, indices, chunksize=chunksize))

	results = {}
	for n, policy in enumerate(policies):
		policy_outcomes = outcomes[n * runs : (n + 1) * runs]
		for outcome in policy_outcomes:
			log_outcome(outcome)

		summary = PolicySummary.from_outcomes(policy, policy_outcomes)
		results[policy] = PolicyRuns(summary=summary, outcomes=policy_outcomes)
		logger.info(
			"monte_carlo_finished",
			policy=policy.value,
			runs=runs,
			mac_rate=summary.mac_rate,
			median_time_s=summary.median_time_s,
			stalled=summary.stalled,
		)
	return results
