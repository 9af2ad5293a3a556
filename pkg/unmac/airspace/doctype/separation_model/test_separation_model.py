import math
import unittest

import numpy as np
from scipy import integrate

from unmac.airspace.doctype.separation_model.separation_model import (
	ACCURACY_CLASSES,
	SPEED_CATEGORIES,
	AccuracyClass,
	SpeedCategory,
	UavSpec,
	half_normal_pdf,
	loc_error_sum_cdf,
	loc_error_sum_mean,
	loc_error_sum_pdf,
	loc_error_sum_quantile,
	pairwise_unmac,
	relative_displacement_mean,
	relative_displacement_quantile,
	sample_loc_error_sum,
	sample_radial_error,
	triangular_mac_pdf,
	unmac_diameter_unknown_dir,
	unmac_known_direction,
	unmac_radius_quantiles,
)
from unmac.exceptions import InvalidParameterError

CLASS_SIGMAS = (1.9, 3.5, 4.85, 10.0)
REFERENCE_Q999 = (9.34, 17.3, 23.94, 49.5)


def make_spec(d_af, sigma=10.0, category=3, dt=0.1):
	return UavSpec(d_af, SPEED_CATEGORIES[category], AccuracyClass(sigma), dt)


class TestDomainTypes(unittest.TestCase):
	def test_accuracy_classes(self):
		sigmas = sorted(c.sigma for c in ACCURACY_CLASSES.values())
		self.assertEqual(sigmas, list(CLASS_SIGMAS))
		self.assertAlmostEqual(ACCURACY_CLASSES["worst_case"].three_sigma, 30.0)

	def test_category_three_sigma_v(self):
		self.assertAlmostEqual(SPEED_CATEGORIES[3].sigma_v, 5.1, places=12)

	def test_invalid_types(self):
		with self.assertRaises(InvalidParameterError):
			AccuracyClass(0)
		with self.assertRaises(InvalidParameterError):
			SpeedCategory(20.0, 10.0)
		with self.assertRaises(InvalidParameterError):
			make_spec(8.0)
		with self.assertRaises(InvalidParameterError):
			make_spec(2.0, dt=0)

	def test_cruise_speed_defaults_to_category(self):
		self.assertEqual(make_spec(2.0).cruise_speed, 15.4)


class TestDensities(unittest.TestCase):
	def test_triangular_cases(self):
		self.assertEqual(triangular_mac_pdf(0, 7.5), 0)
		self.assertAlmostEqual(triangular_mac_pdf(3.75, 7.5), 2 / 7.5, places=12)
		self.assertEqual(triangular_mac_pdf(-1, 7.5), 0)
		self.assertEqual(triangular_mac_pdf(8.0, 7.5), 0)

	def test_triangular_matches_piecewise_formula(self):
		af = 7.5
		for x in np.linspace(0.01, 7.49, 37):
			expected = x / (af**2 / 4) if x < af / 2 else (af - x) / (af**2 / 4)
			self.assertAlmostEqual(triangular_mac_pdf(x, af), expected, places=10)

	def test_triangular_with_fleet_support(self):
		self.assertAlmostEqual(triangular_mac_pdf(3.8, 7.5, lo=0.1), 2 / 7.4, places=10)
		self.assertAlmostEqual(triangular_mac_pdf(3.7, 7.5, lo=0.1, mode=3.7), 2 / 7.4, places=10)

	def test_triangular_rejects_bad_support(self):
		with self.assertRaises(InvalidParameterError):
			triangular_mac_pdf(1.0, 0)
		with self.assertRaises(InvalidParameterError):
			triangular_mac_pdf(1.0, -7.5)
		with self.assertRaises(InvalidParameterError):
			triangular_mac_pdf(1.0, 7.5, mode=9.0)

	def test_half_normal_cases(self):
		self.assertAlmostEqual(half_normal_pdf(0, 1), math.sqrt(2 / math.pi), places=12)
		self.assertEqual(half_normal_pdf(-0.5, 1), 0)
		mean, _ = integrate.quad(lambda x: x * half_normal_pdf(x, 10), 0, np.inf)
		self.assertAlmostEqual(mean, 10 * math.sqrt(2 / math.pi), places=6)
		with self.assertRaises(InvalidParameterError):
			half_normal_pdf(1.0, 0)

	def test_loc_error_sum_at_zero(self):
		for sigma in CLASS_SIGMAS:
			self.assertEqual(loc_error_sum_pdf(0, sigma, sigma), 0)
		self.assertEqual(loc_error_sum_pdf(-3, 2, 2), 0)
		with self.assertRaises(InvalidParameterError):
			loc_error_sum_pdf(1.0, -1, 2)

	def test_normalization(self):
		total, _ = integrate.quad(triangular_mac_pdf, 0, 7.5, args=(7.5,), points=[3.75])
		self.assertAlmostEqual(total, 1.0, delta=1e-6)
		total, _ = integrate.quad(triangular_mac_pdf, 0.1, 7.5, args=(7.5, 0.1), points=[3.8])
		self.assertAlmostEqual(total, 1.0, delta=1e-6)
		total, _ = integrate.quad(half_normal_pdf, 0, np.inf, args=(4.85,))
		self.assertAlmostEqual(total, 1.0, delta=1e-6)
		total, _ = integrate.quad(loc_error_sum_pdf, 0, np.inf, args=(3.5, 4.85))
		self.assertAlmostEqual(total, 1.0, delta=1e-6)

	def test_means_follow_half_normal_sum(self):
		for sigma in CLASS_SIGMAS:
			self.assertAlmostEqual(
				loc_error_sum_mean(sigma, sigma), 2 * sigma * math.sqrt(2 / math.pi), delta=1e-6
			)

	def test_means_match_reference_values(self):
		# 4.85 m gives 7.74 m analytically, 4.6 % above the rounded 7.4 m
		for sigma, reference, tolerance in ((1.9, 3.0, 0.03), (3.5, 5.6, 0.03), (4.85, 7.4, 0.05), (10.0, 16.0, 0.03)):
			mean = loc_error_sum_mean(sigma, sigma)
			self.assertLess(abs(mean - reference) / reference, tolerance)

	def test_empirical_histogram_matches_density(self):
		rng = np.random.default_rng(7)
		sigma_i, sigma_j = 3.5, 4.85
		samples = sample_loc_error_sum(rng, sigma_i, sigma_j, 1_000_000)
		edges = np.linspace(0, 30, 61)
		counts, _ = np.histogram(samples, bins=edges)
		observed = counts / samples.size
		cdf = np.array([loc_error_sum_cdf(e, sigma_i, sigma_j) for e in edges])
		expected = np.diff(cdf)
		self.assertLess(np.max(np.abs(observed - expected)) / expected.max(), 0.02)


class TestQuantiles(unittest.TestCase):
	def test_reference_quantiles(self):
		for sigma, reference in zip(CLASS_SIGMAS, REFERENCE_Q999, strict=True):
			q = loc_error_sum_quantile(0.999, sigma, sigma)
			self.assertLess(abs(q - reference) / reference, 0.03, msg=f"sigma={sigma}")

	def test_quantile_inverts_cdf(self):
		q = loc_error_sum_quantile(0.9, 3.5, 10)
		self.assertAlmostEqual(loc_error_sum_cdf(q, 3.5, 10), 0.9, delta=1e-6)

	def test_quantile_monotone_in_p(self):
		self.assertLess(loc_error_sum_quantile(0.5, 4.85, 4.85), loc_error_sum_quantile(0.999, 4.85, 4.85))

	def test_quantile_rejects_bad_probability(self):
		for p in (0, 1, -0.1, 1.5):
			with self.assertRaises(InvalidParameterError):
				loc_error_sum_quantile(p, 1.9, 1.9)

	def test_relative_displacement_cases(self):
		cat1, cat3 = SPEED_CATEGORIES[1], SPEED_CATEGORIES[3]
		self.assertAlmostEqual(
			relative_displacement_quantile(0.997, cat3, cat3, 0.1),
			0.1 * 30.8 + 3 * 0.1 * math.hypot(5.1, 5.1),
			places=9,
		)
		self.assertAlmostEqual(relative_displacement_quantile(0.997, cat3, cat3, 0.1), 5.24, delta=0.01)
		self.assertAlmostEqual(relative_displacement_quantile(0.997, cat1, cat1, 1.0), 36.7, delta=0.05)

	def test_relative_displacement_is_linear_in_dt(self):
		cat2, cat4 = SPEED_CATEGORIES[2], SPEED_CATEGORIES[4]
		self.assertAlmostEqual(
			relative_displacement_mean(cat2, cat4, 0.4), 2 * relative_displacement_mean(cat2, cat4, 0.2)
		)
		self.assertAlmostEqual(
			relative_displacement_quantile(0.9, cat2, cat4, 0.4),
			2 * relative_displacement_quantile(0.9, cat2, cat4, 0.2),
		)

	def test_mobility_term_rate_dependence(self):
		cat3 = SPEED_CATEGORIES[3]
		self.assertLessEqual(relative_displacement_quantile(0.997, cat3, cat3, 0.1), 6.0)
		self.assertGreaterEqual(relative_displacement_quantile(0.997, cat3, cat3, 1.0), 52.0)

	def test_relative_displacement_rejects_bad_input(self):
		cat3 = SPEED_CATEGORIES[3]
		with self.assertRaises(InvalidParameterError):
			relative_displacement_quantile(0.997, cat3, cat3, 0)
		with self.assertRaises(InvalidParameterError):
			relative_displacement_quantile(1.2, cat3, cat3, 0.1)


class TestSeparation(unittest.TestCase):
	def test_unknown_direction_cases(self):
		self.assertAlmostEqual(unmac_diameter_unknown_dir(2, 5, 10, 0.1), 14)
		self.assertEqual(unmac_diameter_unknown_dir(3.3, 0, 0, 0.1), 3.3)
		self.assertAlmostEqual(unmac_diameter_unknown_dir(7.5, 30, 30.7, 0.1), 73.64)
		with self.assertRaises(InvalidParameterError):
			unmac_diameter_unknown_dir(2, -5, 10, 0.1)

	def test_pairwise_cases(self):
		b = pairwise_unmac(make_spec(2), make_spec(2), 5, 5, 10, 10, 0.1)
		self.assertAlmostEqual(b.unmac_radius, 14)
		self.assertAlmostEqual(b.mac_radius, 2)

		b = pairwise_unmac(make_spec(3), make_spec(5), 0, 0, 0, 0, 0.1)
		self.assertEqual(b.unmac_radius, 4)
		self.assertEqual(b.mac_radius, 4)

		b = pairwise_unmac(7.5, 7.5, 30, 30, 30.7, 30.7, 0.1)
		self.assertAlmostEqual(b.unmac_radius, 73.64)
		self.assertAlmostEqual(b.unmac_radius, b.mac_radius + b.loc_term + b.mobility_term)

		with self.assertRaises(InvalidParameterError):
			pairwise_unmac(2, 2, 5, 5, -10, 10, 0.1)

	def test_pairwise_is_monotone(self):
		rng = np.random.default_rng(3)
		for _ in range(200):
			args = rng.uniform(0, 10, 7)
			base = pairwise_unmac(*args)
			self.assertGreaterEqual(base.unmac_radius, base.mac_radius)
			for k in range(7):
				bumped = args.copy()
				bumped[k] += 0.5
				self.assertGreaterEqual(pairwise_unmac(*bumped).unmac_radius, base.unmac_radius)

	def test_known_direction_region(self):
		still = unmac_known_direction(2, 5, (0, 0), 0.1)
		self.assertEqual(still.max_extent, unmac_diameter_unknown_dir(2, 5, 0, 0.1))

		moving = unmac_known_direction(2, 5, (10, 0), 0.1)
		self.assertAlmostEqual(moving.length, 13)
		self.assertAlmostEqual(moving.width, 12)
		self.assertTrue(moving.contains((6.9, 0)))
		self.assertFalse(moving.contains((7.1, 0)))
		self.assertLessEqual(moving.max_extent, unmac_diameter_unknown_dir(2, 5, 10, 0.1))


class TestSamplers(unittest.TestCase):
	def test_radial_error_magnitude_is_half_normal(self):
		rng = np.random.default_rng(11)
		errors = sample_radial_error(rng, 10.0, 200_000)
		magnitude = np.hypot(errors[:, 0], errors[:, 1])
		self.assertAlmostEqual(magnitude.mean(), 10 * math.sqrt(2 / math.pi), delta=0.1)
		self.assertEqual(sample_radial_error(rng, 10.0).shape, (2,))

	def test_unmac_radius_quantiles_are_ordered(self):
		result = unmac_radius_quantiles(10.0, 0.1, SPEED_CATEGORIES[3], samples=20_000, seed=1)
		self.assertLess(result[0.5], result[0.9])
		self.assertLess(result[0.99], result[0.999])
		self.assertEqual(result, unmac_radius_quantiles(10.0, 0.1, SPEED_CATEGORIES[3], samples=20_000, seed=1))
