"""
UAV separation model: airframe, localization and mobility contributions to the
uNMAC volume, their distributions and quantiles.

All functions are pure; random samplers take an explicit numpy Generator.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize, special, stats

from unmac.exceptions import InvalidParameterError

AF_MAX = 7.5
AF_MIN = 0.1
QUANTILE_TOL = 1e-6


@dataclass(frozen=True)
class AccuracyClass:
	sigma: float
	label: str = ""

	def __post_init__(self):
		if not self.sigma > 0:
			raise InvalidParameterError(f"Accuracy class sigma must be positive, got {self.sigma}")

	@property
	def three_sigma(self):
		return 3 * self.sigma

	@classmethod
	def for_sigma(cls, sigma):
		"""The labelled canonical class with this sigma, or an unlabelled one."""
		for accuracy in ACCURACY_CLASSES.values():
			if accuracy.sigma == sigma:
				return accuracy
		return cls(sigma)


# GPS SPS accuracy standards, sigma = (3 sigma bound) / 3
ACCURACY_CLASSES = {
	"zero_aod": AccuracyClass(1.9, "Normal Operations at Zero AOD"),
	"all_aods": AccuracyClass(3.5, "Normal Operations over all AODs"),
	"any_aod": AccuracyClass(4.85, "Normal Operations at Any AOD"),
	"worst_case": AccuracyClass(10.0, "Worst case, during Normal Operations"),
}


@dataclass(frozen=True)
class SpeedCategory:
	v_cruise: float
	v_max: float
	label: str = ""

	def __post_init__(self):
		if not 0 < self.v_cruise < self.v_max:
			raise InvalidParameterError(
				f"Speed category requires 0 < v_cruise < v_max, got {self.v_cruise} and {self.v_max}"
			)

	@property
	def sigma_v(self):
		return (self.v_max - self.v_cruise) / 3


SPEED_CATEGORIES = {
	1: SpeedCategory(12.9, 20.6, "MGTOW 0-1.8 kg"),
	2: SpeedCategory(10.3, 15.4, "MGTOW 0-9 kg"),
	3: SpeedCategory(15.4, 30.7, "MGTOW 0-9 kg"),
	4: SpeedCategory(30.7, 51.5, "MGTOW 9-25 kg"),
}


@dataclass(frozen=True)
class UavSpec:
	"""
	Static truth about one UAV.

	``cruise_speed`` is the speed this particular airframe flies at; it defaults to the
	category mean and is drawn once per run by the fleet generator.
	"""

	airframe_diameter: float
	speed: SpeedCategory
	accuracy: AccuracyClass
	broadcast_interval: float
	cruise_speed: float | None = field(default=None)

	def __post_init__(self):
		if not AF_MIN <= self.airframe_diameter <= AF_MAX:
			raise InvalidParameterError(
				f"Airframe diameter must lie in [{AF_MIN}, {AF_MAX}] m, got {self.airframe_diameter}"
			)
		if not self.broadcast_interval > 0:
			raise InvalidParameterError(
				f"Broadcast interval must be positive, got {self.broadcast_interval}"
			)
		if self.cruise_speed is None:
			object.__setattr__(self, "cruise_speed", self.speed.v_cruise)
		elif not 0 < self.cruise_speed <= self.speed.v_max:
			raise InvalidParameterError(
				f"Cruise speed must lie in (0, {self.speed.v_max}] m/s, got {self.cruise_speed}"
			)


@dataclass(frozen=True)
class SeparationBreakdown:
	mac_radius: float
	loc_term: float
	mobility_term: float
	unmac_radius: float

	@property
	def unmac_diameter(self):
		return 2 * self.unmac_radius

	def as_dict(self):
		return asdict(self)


@dataclass(frozen=True)
class Stadium:
	"""Disk of ``radius`` swept from ``start`` along ``displacement``."""

	start: tuple
	displacement: tuple
	radius: float

	@property
	def segment_length(self):
		return float(np.hypot(*self.displacement))

	@property
	def length(self):
		return self.segment_length + 2 * self.radius

	@property
	def width(self):
		return 2 * self.radius

	@property
	def max_extent(self):
		return self.length

	def contains(self, point):
		a = np.asarray(self.start, dtype=float)
		d = np.asarray(self.displacement, dtype=float)
		q = np.asarray(point, dtype=float) - a
		seg2 = float(d @ d)
		t = 0.0 if seg2 == 0 else min(max(float(q @ d) / seg2, 0.0), 1.0)
		return float(np.hypot(*(q - t * d))) <= self.radius


def _require_positive(name, value):
	if not value > 0:
		raise InvalidParameterError(f"{name} must be positive, got {value}")


def _require_non_negative(**values):
	for name, value in values.items():
		if value < 0:
			raise InvalidParameterError(f"{name} must be non-negative, got {value}")


def _require_probability(p):
	if not 0 < p < 1:
		raise InvalidParameterError(f"Probability must lie in (0, 1), got {p}")


def triangular_mac_pdf(x, af_max=AF_MAX, lo=0.0, mode=None):
	"""
	Density of the MAC radius (mean of two uniform airframe diameters).

	Args:
		x (float | array): Evaluation point(s) in meters.
		af_max (float): Upper support limit.
		lo (float): Lower support limit; 0 gives the textbook triangle on [0, af_max].
		mode (float, optional): Peak location, midpoint of the support when omitted.

	Returns:
		float | ndarray: Density in 1/m, zero outside [lo, af_max].

	Raises:
		InvalidParameterError: If the support or mode is inconsistent.
	"""
	_require_positive("af_max", af_max)
	if not 0 <= lo < af_max:
		raise InvalidParameterError(f"Lower limit must lie in [0, {af_max}), got {lo}")
	if mode is None:
		mode = (lo + af_max) / 2
	if not lo <= mode <= af_max:
		raise InvalidParameterError(f"Mode must lie in [{lo}, {af_max}], got {mode}")

	width = af_max - lo
	density = stats.triang(c=(mode - lo) / width, loc=lo, scale=width).pdf(x)
	return float(density) if np.ndim(density) == 0 else density


def half_normal_pdf(x, sigma):
	_require_positive("sigma", sigma)
	density = stats.halfnorm(scale=sigma).pdf(x)
	return float(density) if np.ndim(density) == 0 else density


def loc_error_sum_pdf(x, sigma_i, sigma_j):
	"""
	Closed-form density of the sum of two independent half-normal localization errors.

	Returns 0 for x < 0.
	"""
	_require_positive("sigma_i", sigma_i)
	_require_positive("sigma_j", sigma_j)

	x = np.asarray(x, dtype=float)
	s = math.sqrt(sigma_i**2 + sigma_j**2)
	envelope = (1 / s) * math.sqrt(2 / math.pi) * np.exp(-(x**2) / (2 * s**2))
	erf_terms = special.erf(sigma_i * x / (math.sqrt(2) * sigma_j * s)) + special.erf(
		sigma_j * x / (math.sqrt(2) * sigma_i * s)
	)
	density = np.where(x >= 0, envelope * erf_terms, 0.0)
	return float(density) if density.ndim == 0 else density


def loc_error_sum_cdf(x, sigma_i, sigma_j):
	if x <= 0:
		return 0.0
	value, _ = integrate.quad(
		loc_error_sum_pdf, 0.0, x, args=(sigma_i, sigma_j), epsabs=1e-12, epsrel=1e-10, limit=200
	)
	return min(value, 1.0)


def loc_error_sum_mean(sigma_i, sigma_j):
	value, _ = integrate.quad(
		lambda x: x * loc_error_sum_pdf(x, sigma_i, sigma_j), 0.0, np.inf, epsabs=1e-10, limit=200
	)
	return value


def loc_error_sum_quantile(p, sigma_i, sigma_j):
	"""
	Smallest error sum not exceeded with probability ``p``.

	The CDF is integrated numerically and inverted with Brent's method to 1e-6 m.
	"""
	_require_probability(p)
	_require_positive("sigma_i", sigma_i)
	_require_positive("sigma_j", sigma_j)

	upper = math.sqrt(sigma_i**2 + sigma_j**2)
	while loc_error_sum_cdf(upper, sigma_i, sigma_j) < p:
		upper *= 2
	return optimize.brentq(
		lambda x: loc_error_sum_cdf(x, sigma_i, sigma_j) - p, 0.0, upper, xtol=QUANTILE_TOL
	)


def relative_displacement_mean(cat_i, cat_j, dt):
	_require_positive("dt", dt)
	return dt * (cat_i.v_cruise + cat_j.v_cruise)


def relative_displacement_quantile(p, cat_i, cat_j, dt):
	"""
	Quantile of the displacement V*dt of two UAVs between broadcasts.

	V is Gaussian with mean v_cruise_i + v_cruise_j and variance sigma_v_i^2 + sigma_v_j^2.
	At p = 0.997 the mean + 3 sigma convention is used instead of the exact Gaussian quantile.
	"""
	_require_probability(p)
	_require_positive("dt", dt)

	mean = relative_displacement_mean(cat_i, cat_j, dt)
	std = dt * math.hypot(cat_i.sigma_v, cat_j.sigma_v)
	if math.isclose(p, 0.997):
		return mean + 3 * std
	return float(stats.norm(loc=mean, scale=std).ppf(p))


def unmac_diameter_unknown_dir(d_af, eps, v, dt):
	_require_non_negative(d_af=d_af, eps=eps, v=v, dt=dt)
	return d_af + 2 * (eps + v * dt)


def pairwise_unmac(spec_i, spec_j, eps_i, eps_j, v_i, v_j, dt):
	"""
	Split the pairwise separation into its airframe, localization and mobility terms.

	Args:
		spec_i, spec_j (UavSpec | float): The two UAVs, or their airframe diameters.
		eps_i, eps_j (float): Localization errors in meters.
		v_i, v_j (float): Speeds in m/s.
		dt (float): Broadcast interval in seconds.

	Returns:
		SeparationBreakdown: Radii in meters; ``unmac_radius`` is half the pairwise uNMAC diameter.
	"""
	d_i = getattr(spec_i, "airframe_diameter", spec_i)
	d_j = getattr(spec_j, "airframe_diameter", spec_j)
	_require_non_negative(d_af_i=d_i, d_af_j=d_j, eps_i=eps_i, eps_j=eps_j, v_i=v_i, v_j=v_j, dt=dt)

	d_unmac = d_i + d_j + 2 * (eps_i + eps_j + dt * (v_i + v_j))
	mac_radius = (d_i + d_j) / 2
	loc_term = eps_i + eps_j
	mobility_term = dt * (v_i + v_j)
	return SeparationBreakdown(
		mac_radius=mac_radius,
		loc_term=loc_term,
		mobility_term=mobility_term,
		unmac_radius=d_unmac / 2,
	)


def unmac_known_direction(d_af, eps, velocity, dt, start=(0.0, 0.0)):
	_require_non_negative(d_af=d_af, eps=eps, dt=dt)
	vx, vy = (float(c) for c in velocity)
	return Stadium(
		start=tuple(float(c) for c in start),
		displacement=(vx * dt, vy * dt),
		radius=d_af / 2 + eps,
	)


def sample_radial_error(rng, sigma, size=None):
	"""
	Planar localization errors with uniform direction and half-normal magnitude.

	Returns an array of shape (2,) when ``size`` is None, otherwise (size, 2).
	"""
	n = 1 if size is None else size
	magnitude = np.abs(rng.normal(0.0, sigma, n))
	angle = rng.uniform(0.0, 2 * np.pi, n)
	errors = np.column_stack((magnitude * np.cos(angle), magnitude * np.sin(angle)))
	return errors[0] if size is None else errors


def sample_loc_error_sum(rng, sigma_i, sigma_j, size):
	return np.abs(rng.normal(0.0, sigma_i, size)) + np.abs(rng.normal(0.0, sigma_j, size))


def sample_airframe_sum_radius(rng, size, lo=AF_MIN, hi=AF_MAX):
	return (rng.uniform(lo, hi, size) + rng.uniform(lo, hi, size)) / 2


def unmac_radius_quantiles(
	sigma, dt, category, ps=(0.5, 0.9, 0.99, 0.999), samples=200_000, seed=0, af_lo=AF_MIN, af_hi=AF_MAX
):
	"""
	Distribution of the pairwise uNMAC radius for two UAVs of the same class.

	Airframes are uniform on [af_lo, af_hi], errors half-normal(sigma) and speeds
	Gaussian per ``category``. Returns a dict with ``mean`` and one entry per quantile.
	"""
	_require_positive("sigma", sigma)
	_require_positive("dt", dt)
	rng = np.random.default_rng(seed)

	mac = sample_airframe_sum_radius(rng, samples, af_lo, af_hi)
	loc = sample_loc_error_sum(rng, sigma, sigma, samples)
	speed_sum = rng.normal(
		2 * category.v_cruise, math.sqrt(2) * category.sigma_v, samples
	).clip(min=0.0)
	radius = mac + loc + dt * speed_sum

	result = {"mean": float(radius.mean())}
	for p, q in zip(ps, np.quantile(radius, ps), strict=True):
		result[p] = float(q)
	return result
