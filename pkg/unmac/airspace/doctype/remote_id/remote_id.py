"""
Remote ID broadcast messages, their binary wire codec and the safety-disk policies
that turn a received message into an RVO disk radius.

The wire layout is declared in ``remote_id.json`` next to this module and compiled
into a ``construct`` structure on import.
"""

import json
import math
import os
from dataclasses import asdict, dataclass, fields
from enum import Enum
from functools import lru_cache

import construct as cst

from unmac import hooks
from unmac.exceptions import EncodeOverflowError, InvalidParameterError, MalformedMessageError

AF_MAX = 7.5
EPS_UPPER_BOUND = 80.0


class MessageFormat(str, Enum):
	SNMAC_BASELINE = "SNMAC_BASELINE"
	STANDARD = "STANDARD"
	CANDIDATE1 = "CANDIDATE1"
	CANDIDATE2 = "CANDIDATE2"

	@classmethod
	def parse(cls, value):
		if isinstance(value, cls):
			return value
		try:
			return cls(str(value).strip().upper())
		except ValueError:
			raise InvalidParameterError(
				f"Unknown message format '{value}', expected one of {', '.join(f.value for f in cls)}"
			)

	@property
	def broadcast_format(self):
		"""Format UAVs actually transmit under this policy; sNMAC uses plain Remote ID."""
		return MessageFormat.STANDARD if self is MessageFormat.SNMAC_BASELINE else self

	@property
	def must_be_safe(self):
		return self.value in hooks.must_be_safe_policies


@lru_cache(maxsize=1)
def get_wire_layout():
	with open(os.path.join(os.path.dirname(__file__), "remote_id.json"), encoding="utf-8") as f:
		return json.load(f)


FORMAT_CODES = {MessageFormat(name): code for name, code in get_wire_layout()["format_codes"].items()}
FORMATS_BY_CODE = {code: fmt for fmt, code in FORMAT_CODES.items()}

FLAGS = cst.BitStruct(
	"reserved" / cst.BitsInteger(5),
	"format_code" / cst.BitsInteger(2),
	"emergency" / cst.Flag,
)

# Representable integer ranges per wire type
INT_RANGES = {
	"Int64ul": (0, 2**64 - 1),
	"Int32sl": (-(2**31), 2**31 - 1),
	"Int24sl": (-(2**23), 2**23 - 1),
	"Int16ul": (0, 2**16 - 1),
}


def _field_construct(field):
	if field["fieldtype"] == "Flags":
		subcon = FLAGS
	elif field["fieldtype"] == "Bytes":
		subcon = cst.Bytes(field["length"])
	else:
		subcon = getattr(cst, field["fieldtype"])

	if field.get("count"):
		subcon = subcon[field["count"]]

	if field.get("depends_on"):
		codes = frozenset(FORMAT_CODES[MessageFormat(name)] for name in field["depends_on"])
		subcon = cst.If(lambda ctx, codes=codes: ctx.flags["format_code"] in codes, subcon)

	return field["fieldname"] / subcon


def _build_message_struct(layout):
	by_name = {f["fieldname"]: f for f in layout["fields"]}
	return cst.Struct(*(_field_construct(by_name[name]) for name in layout["field_order"]), cst.Terminated)


MESSAGE_STRUCT = _build_message_struct(get_wire_layout())
WIRE_FIELDS = {f["fieldname"]: f for f in get_wire_layout()["fields"]}
FLAGS_OFFSET = 46
PAYLOAD_LENGTHS = {
	MessageFormat.STANDARD: 47,
	MessageFormat.CANDIDATE1: 49,
	MessageFormat.CANDIDATE2: 51,
}


def _xy(value, name):
	try:
		x, y = value
		return (float(x), float(y))
	except (TypeError, ValueError):
		raise MalformedMessageError(f"Field '{name}' must be a 2D coordinate, got {value!r}")


@dataclass(frozen=True)
class RemoteIdMessage:
	"""
	One Remote ID broadcast.

	``loc_error`` (reported 3 sigma bound) is carried by both candidate formats,
	``airframe`` (reported diameter) only by CANDIDATE2.
	"""

	uav_id: str
	timestamp: float
	position: tuple
	velocity: tuple
	control_station: tuple = (0.0, 0.0)
	emergency: bool = False
	loc_error: float | None = None
	airframe: float | None = None

	def __post_init__(self):
		object.__setattr__(self, "uav_id", str(self.uav_id))
		object.__setattr__(self, "timestamp", float(self.timestamp))
		object.__setattr__(self, "emergency", bool(self.emergency))
		for name in ("position", "velocity", "control_station"):
			object.__setattr__(self, name, _xy(getattr(self, name), name))

		if self.loc_error is not None:
			object.__setattr__(self, "loc_error", float(self.loc_error))
			if self.loc_error < 0:
				raise MalformedMessageError(f"Localization error must be non-negative, got {self.loc_error}")
		if self.airframe is not None:
			object.__setattr__(self, "airframe", float(self.airframe))
			if self.loc_error is None:
				raise MalformedMessageError("Airframe size is only carried together with a localization error")
			if not 0 < self.airframe <= AF_MAX:
				raise MalformedMessageError(f"Airframe must lie in (0, {AF_MAX}] m, got {self.airframe}")

	@property
	def message_format(self):
		if self.airframe is not None:
			return MessageFormat.CANDIDATE2
		if self.loc_error is not None:
			return MessageFormat.CANDIDATE1
		return MessageFormat.STANDARD

	@property
	def speed(self):
		return math.hypot(*self.velocity)

	def as_dict(self):
		data = asdict(self)
		for name in ("position", "velocity", "control_station"):
			data[name] = list(data[name])
		return data


@dataclass(frozen=True)
class SafetyDiskPolicy:
	format: MessageFormat
	af_max: float = AF_MAX
	eps_upper_bound: float = EPS_UPPER_BOUND

	def __post_init__(self):
		object.__setattr__(self, "format", MessageFormat.parse(self.format))
		if not self.af_max > 0:
			raise InvalidParameterError(f"af_max must be positive, got {self.af_max}")
		if not self.eps_upper_bound > 0:
			raise InvalidParameterError(f"eps_upper_bound must be positive, got {self.eps_upper_bound}")

	def disk_radius(self, msg, dt):
		return disk_radius(self, msg, dt)


def disk_radius(policy, msg, dt):
	"""
	Radius of the safety disk a receiver draws around the sender of ``msg``.

	Maximum-size policies (sNMAC, STANDARD, CANDIDATE1) reserve ``af_max`` per UAV, so two
	such disks sum to the 15 m sNMAC separation. CANDIDATE2 uses half the reported diameter.

	Raises:
		MalformedMessageError: If the message lacks a field the policy relies on.
		InvalidParameterError: If dt is not positive.
	"""
	if not dt > 0:
		raise InvalidParameterError(f"dt must be positive, got {dt}")

	fmt = policy.format
	if fmt is MessageFormat.SNMAC_BASELINE:
		return policy.af_max

	if fmt is MessageFormat.STANDARD:
		airframe_term, loc_term = policy.af_max, policy.eps_upper_bound
	elif fmt is MessageFormat.CANDIDATE1:
		if msg.loc_error is None:
			raise MalformedMessageError(f"CANDIDATE1 policy needs loc_error, message from {msg.uav_id} has none")
		airframe_term, loc_term = policy.af_max, msg.loc_error
	else:
		if msg.loc_error is None or msg.airframe is None:
			raise MalformedMessageError(
				f"CANDIDATE2 policy needs loc_error and airframe, message from {msg.uav_id} lacks them"
			)
		airframe_term, loc_term = msg.airframe / 2, msg.loc_error

	return airframe_term + loc_term + msg.speed * dt


def pairwise_disk_radius(policy, msg_i, msg_j, dt):
	return disk_radius(policy, msg_i, dt) + disk_radius(policy, msg_j, dt)


def _scaled(value, fieldname):
	field = WIRE_FIELDS[fieldname]
	if not math.isfinite(value):
		raise EncodeOverflowError(f"Failed to encode field '{fieldname}': {value} is not a finite number")
	raw = round(value * field["scale"])
	lo, hi = INT_RANGES[field["fieldtype"]]
	if not lo <= raw <= hi:
		raise EncodeOverflowError(
			f"Failed to encode field '{fieldname}': {value} {field.get('unit', '')} is outside [{lo}, {hi}]"
		)
	return raw


def encode(msg, format=None):
	"""
	Serialize a message into its fixed little-endian layout.

	Args:
		msg (RemoteIdMessage): Message to send.
		format (MessageFormat, optional): Declared format, checked against the message fields.

	Returns:
		bytes: 47, 49 or 51 byte payload.

	Raises:
		InvalidParameterError: If the format is not a broadcast format or disagrees with the message.
		EncodeOverflowError: If a field is out of its representable range.
	"""
	fmt = msg.message_format if format is None else MessageFormat.parse(format)
	if fmt is MessageFormat.SNMAC_BASELINE:
		raise InvalidParameterError("SNMAC_BASELINE is a sizing policy, not a broadcast format")
	if fmt is not msg.message_format:
		raise InvalidParameterError(
			f"Message from {msg.uav_id} carries {msg.message_format.value} fields, not {fmt.value}"
		)

	uav_id = msg.uav_id.encode("utf-8")
	if len(uav_id) > WIRE_FIELDS["uav_id"]["length"]:
		raise EncodeOverflowError(f"Failed to encode field 'uav_id': {msg.uav_id!r} exceeds 16 bytes")

	values = {
		"uav_id": uav_id.ljust(WIRE_FIELDS["uav_id"]["length"], b"\x00"),
		"timestamp": _scaled(msg.timestamp, "timestamp"),
		"position": [_scaled(c, "position") for c in msg.position],
		"velocity": [_scaled(c, "velocity") for c in msg.velocity],
		"control_station": [_scaled(c, "control_station") for c in msg.control_station],
		"flags": {"reserved": 0, "format_code": FORMAT_CODES[fmt], "emergency": msg.emergency},
		"loc_error": None if msg.loc_error is None else _scaled(msg.loc_error, "loc_error"),
		"airframe": None if msg.airframe is None else _scaled(msg.airframe, "airframe"),
	}

	try:
		return MESSAGE_STRUCT.build(values)
	except cst.ConstructError as e:
		raise EncodeOverflowError(f"Failed to encode message from {msg.uav_id}: {e!s}")


def decode(data):
	"""
	Parse a payload produced by :func:`encode`.

	Raises:
		MalformedMessageError: On a bad length, reserved flag bits, an unknown format code,
			a code that disagrees with the length, or field values violating message invariants.
	"""
	data = bytes(data)
	if len(data) not in PAYLOAD_LENGTHS.values():
		raise MalformedMessageError(f"Payload length {len(data)} is not one of 47, 49 or 51 bytes")

	flags = data[FLAGS_OFFSET]
	if flags >> 3:
		raise MalformedMessageError(f"Reserved flag bits set in flags byte 0x{flags:02x}")
	code = (flags >> 1) & 0b11
	fmt = FORMATS_BY_CODE.get(code)
	if fmt is None:
		raise MalformedMessageError(f"Unknown format code {code}")
	if PAYLOAD_LENGTHS[fmt] != len(data):
		raise MalformedMessageError(
			f"Format {fmt.value} requires {PAYLOAD_LENGTHS[fmt]} bytes, payload has {len(data)}"
		)

	try:
		parsed = MESSAGE_STRUCT.parse(data)
		uav_id = parsed.uav_id.rstrip(b"\x00").decode("utf-8")
	except (cst.ConstructError, UnicodeDecodeError) as e:
		raise MalformedMessageError(f"Failed to parse payload: {e!s}")

	def unscale(raw, fieldname):
		return raw / WIRE_FIELDS[fieldname]["scale"]

	return RemoteIdMessage(
		uav_id=uav_id,
		timestamp=unscale(parsed.timestamp, "timestamp"),
		position=tuple(unscale(c, "position") for c in parsed.position),
		velocity=tuple(unscale(c, "velocity") for c in parsed.velocity),
		control_station=tuple(unscale(c, "control_station") for c in parsed.control_station),
		emergency=parsed.flags.emergency,
		loc_error=None if parsed.loc_error is None else unscale(parsed.loc_error, "loc_error"),
		airframe=None if parsed.airframe is None else unscale(parsed.airframe, "airframe"),
	)


def quantize(msg):
	"""Snap every field to wire resolution, so that ``decode(encode(quantize(m)))`` equals ``quantize(m)``."""

	def snap(value, fieldname):
		scale = WIRE_FIELDS[fieldname]["scale"]
		return round(value * scale) / scale

	return RemoteIdMessage(
		uav_id=msg.uav_id,
		timestamp=snap(msg.timestamp, "timestamp"),
		position=tuple(snap(c, "position") for c in msg.position),
		velocity=tuple(snap(c, "velocity") for c in msg.velocity),
		control_station=tuple(snap(c, "control_station") for c in msg.control_station),
		emergency=msg.emergency,
		loc_error=None if msg.loc_error is None else snap(msg.loc_error, "loc_error"),
		airframe=None if msg.airframe is None else snap(msg.airframe, "airframe"),
	)


def wire_roundtrip(msg):
	return decode(encode(msg))


def to_json_line(msg):
	return json.dumps(msg.as_dict(), separators=(",", ":"))


def from_json_line(line):
	try:
		data = json.loads(line)
	except json.JSONDecodeError as e:
		raise MalformedMessageError(f"Failed to parse JSON message: {e!s}")
	if not isinstance(data, dict):
		raise MalformedMessageError("JSON message must be an object")

	known = {f.name for f in fields(RemoteIdMessage)}
	unknown = set(data) - known
	if unknown:
		raise MalformedMessageError(f"Unknown message fields: {', '.join(sorted(unknown))}")
	try:
		return RemoteIdMessage(**data)
	except (TypeError, ValueError) as e:
		raise MalformedMessageError(f"Failed to build message from JSON: {e!s}")
