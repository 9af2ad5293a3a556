"""
Experiment configuration: the schema in ``scenario_config.json``, JSON/XML document
loading with field and line diagnostics, and the typed configs the simulator runs on.
"""

import json
import math
import os
import re
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from xml.parsers.expat import ExpatError

import structlog
import xmltodict

from unmac import hooks
from unmac.airspace.doctype.remote_id.remote_id import MessageFormat, SafetyDiskPolicy
from unmac.airspace.doctype.separation_model.separation_model import SPEED_CATEGORIES
from unmac.exceptions import ConfigError, InvalidParameterError

logger = structlog.get_logger(__name__)

BREAK_FIELDTYPES = {"Section Break", "Column Break"}


class Layout(str, Enum):
	CIRCLE8 = "CIRCLE8"
	SQUARE24 = "SQUARE24"

	@property
	def agent_count(self):
		return 8 if self is Layout.CIRCLE8 else 24


@dataclass(frozen=True)
class Obstacle:
	"""Axis-aligned square, avoided as its circumscribed disk."""

	center: tuple = (0.0, 0.0)
	half_extent: float = 20.0

	@property
	def avoidance_radius(self):
		return self.half_extent * math.sqrt(2)


@dataclass(frozen=True)
class ScenarioConfig:
	layout: Layout = Layout.CIRCLE8
	circle_radius: float = 200.0
	square_side: float = 400.0
	obstacle: Obstacle | None = None
	sensing_range: float = 400.0
	dt: float = 0.1
	policy: MessageFormat = MessageFormat.SNMAC_BASELINE
	fleet_seed: int = 0
	noise_seed: int = 1
	arrival_tolerance: float = 5.0
	max_sim_time: float = 600.0
	sigma: float = 10.0
	speed_category: int = 3
	airframe_min: float = 0.1
	airframe_max: float = 7.5
	af_max: float = 7.5
	eps_upper_bound: float = 80.0
	candidate_directions: int = 24
	candidate_speeds: int = 8
	wire_codec: bool = False
	broadcast_interval: str = ""

	def __post_init__(self):
		object.__setattr__(self, "layout", Layout(self.layout))
		object.__setattr__(self, "policy", MessageFormat.parse(self.policy))
		for name in ("circle_radius", "square_side", "sensing_range", "dt", "arrival_tolerance", "max_sim_time"):
			if not getattr(self, name) > 0:
				raise ConfigError(f"must be positive, got {getattr(self, name)}", field=name)
		if self.layout is Layout.SQUARE24 and self.obstacle is None:
			raise ConfigError("SQUARE24 always places an obstacle at the center", field="obstacle")
		if self.speed_category not in SPEED_CATEGORIES:
			raise ConfigError(f"unknown speed category {self.speed_category}", field="speed_category")
		if self.airframe_min > self.airframe_max:
			raise ConfigError(
				f"smallest airframe {self.airframe_min} exceeds largest {self.airframe_max}", field="airframe_min"
			)

	@property
	def agent_count(self):
		return self.layout.agent_count

	@property
	def safety_policy(self):
		return SafetyDiskPolicy(self.policy, af_max=self.af_max, eps_upper_bound=self.eps_upper_bound)


@dataclass(frozen=True)
class ExperimentConfig:
	scenario: ScenarioConfig
	policies: tuple = tuple(MessageFormat)
	runs: int = 500
	workers: int = 1

	def __post_init__(self):
		object.__setattr__(self, "policies", tuple(MessageFormat.parse(p) for p in self.policies))
		if not self.policies:
			raise ConfigError("at least one policy is required", field="policies")
		if len(set(self.policies)) != len(self.policies):
			raise ConfigError("a policy is listed twice", field="policies")
		if self.runs < 1:
			raise ConfigError(f"runs must be at least 1, got {self.runs}", field="runs")
		if self.workers < 1:
			raise ConfigError(f"workers must be at least 1, got {self.workers}", field="workers")

	def with_overrides(self, runs=None, policies=None, seed=None, workers=None):
		"""Apply command line values on top of the loaded document."""
		config = self
		if runs is not None:
			config = replace(config, runs=runs)
		if workers is not None:
			config = replace(config, workers=workers)
		if policies:
			try:
				parsed = tuple(MessageFormat.parse(p) for p in policies)
			except InvalidParameterError as e:
				raise ConfigError(str(e), field="policies")
			config = replace(config, policies=parsed, scenario=replace(config.scenario, policy=parsed[0]))
		if seed is not None:
			config = replace(config, scenario=replace(config.scenario, fleet_seed=seed, noise_seed=seed))
		return config

	def as_dict(self):
		s = self.scenario
		obstacle = s.obstacle or Obstacle()
		return {
			"layout": s.layout.value,
			"circle_radius": s.circle_radius,
			"square_side": s.square_side,
			"obstacle": s.obstacle is not None,
			"obstacle_x": float(obstacle.center[0]),
			"obstacle_y": float(obstacle.center[1]),
			"obstacle_half_extent": obstacle.half_extent,
			"sensing_range": s.sensing_range,
			"dt": s.dt,
			"broadcast_interval": s.broadcast_interval,
			"arrival_tolerance": s.arrival_tolerance,
			"max_sim_time": s.max_sim_time,
			"sigma": s.sigma,
			"speed_category": s.speed_category,
			"airframe_min": s.airframe_min,
			"airframe_max": s.airframe_max,
			"fleet_seed": s.fleet_seed,
			"noise_seed": s.noise_seed,
			"af_max": s.af_max,
			"eps_upper_bound": s.eps_upper_bound,
			"candidate_directions": s.candidate_directions,
			"candidate_speeds": s.candidate_speeds,
			"wire_codec": s.wire_codec,
			"policies": [p.value for p in self.policies],
			"runs": self.runs,
			"workers": self.workers,
		}


@lru_cache(maxsize=1)
def get_config_schema():
	with open(os.path.join(os.path.dirname(__file__), "scenario_config.json"), encoding="utf-8") as f:
		return json.load(f)


def get_config_fields():
	schema = get_config_schema()
	by_name = {f["fieldname"]: f for f in schema["fields"]}
	return {
		name: by_name[name] for name in schema["field_order"] if by_name[name]["fieldtype"] not in BREAK_FIELDTYPES
	}


def detect_config_format(text):
	"""
	Detects whether a configuration document is JSON or XML.

	Returns:
		"json" if JSON,
		"xml" if XML,
		"unknown" if neither.
	"""
	text = text.strip()

	try:
		json.loads(text)
		return "json"
	except (json.JSONDecodeError, TypeError):
		pass

	try:
		xmltodict.parse(text)
		return "xml"
	except ExpatError:
		pass

	# Broken documents are still reported by the parser their first character points to
	if text.startswith("{"):
		return "json"
	if text.startswith("<"):
		return "xml"
	return "unknown"


def find_line(text, key, fmt):
	if not text:
		return None
	pattern = rf'"{re.escape(key)}"\s*:' if fmt == "json" else rf"<{re.escape(key)}[\s/>]"
	match = re.search(pattern, text)
	if match is None:
		return None
	return text.count("\n", 0, match.start()) + 1


def _options(field):
	return (field.get("options") or "").split("\n")


def _coerce(field, value, strict, line):
	"""Convert a raw document value to the field's type. ``strict`` rejects strings for non-text fields."""
	name, fieldtype = field["fieldname"], field["fieldtype"]

	def fail(message):
		raise ConfigError(message, field=name, line=line)

	if fieldtype == "Float":
		if isinstance(value, bool) or (strict and not isinstance(value, int | float)):
			fail(f"expected a number, got {value!r}")
		try:
			number = float(value)
		except (TypeError, ValueError):
			fail(f"expected a number, got {value!r}")
		if not math.isfinite(number):
			fail(f"expected a finite number, got {value!r}")
		return number

	if fieldtype == "Int":
		if isinstance(value, bool) or (strict and not isinstance(value, int)):
			fail(f"expected an integer, got {value!r}")
		try:
			return int(str(value).strip()) if isinstance(value, str) else int(value)
		except (TypeError, ValueError):
			fail(f"expected an integer, got {value!r}")

	if fieldtype == "Check":
		if isinstance(value, bool):
			return value
		if isinstance(value, int) and value in (0, 1):
			return bool(value)
		if not strict and isinstance(value, str) and value.strip().lower() in ("0", "1", "true", "false"):
			return value.strip().lower() in ("1", "true")
		fail(f"expected 0/1 or true/false, got {value!r}")

	if fieldtype == "Select":
		value = "" if value is None else value
		if not isinstance(value, str):
			fail(f"expected one of {', '.join(o for o in _options(field) if o)}, got {value!r}")
		value = value.strip()
		if value not in _options(field):
			fail(f"expected one of {', '.join(o for o in _options(field) if o)}, got {value!r}")
		return value

	if fieldtype == "MultiSelect":
		if isinstance(value, dict) and len(value) == 1:
			value = next(iter(value.values()))
		items = re.split(r"[,\n]", value) if isinstance(value, str) else value
		if not isinstance(items, list) or not all(isinstance(i, str) for i in items):
			fail(f"expected a list of names, got {value!r}")
		items = [i.strip() for i in items if i.strip()]
		unknown = [i for i in items if i not in _options(field)]
		if unknown:
			fail(f"unknown option(s) {', '.join(unknown)}; expected {', '.join(_options(field))}")
		return items

	fail(f"unsupported field type {fieldtype}")


def _check_range(field, value, line):
	if field["fieldtype"] not in ("Float", "Int"):
		return
	lo, hi = field.get("min"), field.get("max")
	if lo is not None:
		if field.get("min_exclusive") and not value > lo:
			raise ConfigError(f"must be greater than {lo}, got {value}", field=field["fieldname"], line=line)
		if not value >= lo:
			raise ConfigError(f"must be at least {lo}, got {value}", field=field["fieldname"], line=line)
	if hi is not None and not value <= hi:
		raise ConfigError(f"must be at most {hi}, got {value}", field=field["fieldname"], line=line)


def load_config_dict(data, text=None, fmt="json"):
	"""
	Validate a parsed configuration document and build the experiment config.

	Args:
		data (dict): Parsed key/value document.
		text (str, optional): Source text, used to locate offending keys.
		fmt (str): "json" or "xml"; XML values arrive as strings.

	Returns:
		ExperimentConfig: Validated configuration with schema defaults filled in.

	Raises:
		ConfigError: On unknown keys, wrong types, out-of-range values or inconsistent fields.
	"""
	if not isinstance(data, dict):
		raise ConfigError("configuration must be a key/value document")

	fields = get_config_fields()

	def line_of(key):
		return find_line(text, key, fmt)

	for key in data:
		if key not in fields:
			raise ConfigError("unknown configuration key", field=key, line=line_of(key))

	values = {}
	for name, field in fields.items():
		if name not in data:
			values[name] = _coerce(field, field.get("default", ""), strict=False, line=None)
			continue
		values[name] = _coerce(field, data[name], strict=fmt == "json", line=line_of(name))
		_check_range(field, values[name], line_of(name))

	layout = Layout(values["layout"])
	if layout is Layout.SQUARE24:
		if "obstacle" in data and not values["obstacle"]:
			raise ConfigError(
				"SQUARE24 always places an obstacle at the center", field="obstacle", line=line_of("obstacle")
			)
		values["obstacle"] = True

	if values["broadcast_interval"]:
		preset_dt = hooks.broadcast_interval_presets[values["broadcast_interval"]]
		if "dt" in data and not math.isclose(values["dt"], preset_dt):
			raise ConfigError(
				f"dt {values['dt']} contradicts broadcast_interval '{values['broadcast_interval']}' ({preset_dt} s)",
				field="dt",
				line=line_of("dt"),
			)
		values["dt"] = preset_dt

	obstacle = None
	if values["obstacle"]:
		obstacle = Obstacle(
			center=(values["obstacle_x"], values["obstacle_y"]), half_extent=values["obstacle_half_extent"]
		)

	try:
		policies = tuple(MessageFormat.parse(p) for p in values["policies"])
		scenario = ScenarioConfig(
			layout=layout,
			circle_radius=values["circle_radius"],
			square_side=values["square_side"],
			obstacle=obstacle,
			sensing_range=values["sensing_range"],
			dt=values["dt"],
			policy=policies[0] if policies else MessageFormat.SNMAC_BASELINE,
			fleet_seed=values["fleet_seed"],
			noise_seed=values["noise_seed"],
			arrival_tolerance=values["arrival_tolerance"],
			max_sim_time=values["max_sim_time"],
			sigma=values["sigma"],
			speed_category=values["speed_category"],
			airframe_min=values["airframe_min"],
			airframe_max=values["airframe_max"],
			af_max=values["af_max"],
			eps_upper_bound=values["eps_upper_bound"],
			candidate_directions=values["candidate_directions"],
			candidate_speeds=values["candidate_speeds"],
			wire_codec=values["wire_codec"],
			broadcast_interval=values["broadcast_interval"],
		)
		return ExperimentConfig(
			scenario=scenario, policies=policies, runs=values["runs"], workers=values["workers"]
		)
	except ConfigError as e:
		if e.line is None and e.field:
			e.line = line_of(e.field)
		raise


def parse_config_text(text):
	fmt = detect_config_format(text)
	if fmt == "json":
		try:
			data = json.loads(text)
		except json.JSONDecodeError as e:
			raise ConfigError(f"Failed to parse JSON config: {e.msg}", line=e.lineno)
		return load_config_dict(data, text, "json")

	if fmt == "xml":
		try:
			document = xmltodict.parse(text)
		except ExpatError as e:
			raise ConfigError(f"Failed to parse XML config: {e!s}", line=e.lineno)
		# Single root element wrapping one child per field
		root = next(iter(document.values())) if len(document) == 1 else None
		return load_config_dict(root or {}, text, "xml")

	raise ConfigError("Failed to parse config: document is neither JSON nor XML", line=1)


def load_config(path=None):
	"""Load and validate a configuration file; without a path the schema defaults are used."""
	if path is None:
		return load_config_dict({})

	try:
		with open(path, encoding="utf-8") as f:
			text = f.read()
	except (OSError, UnicodeDecodeError) as e:
		raise ConfigError(f"Failed to read config {path}: {e!s}")

	config = parse_config_text(text)
	logger.debug("config_loaded", path=str(path), runs=config.runs, policies=[p.value for p in config.policies])
	return config
