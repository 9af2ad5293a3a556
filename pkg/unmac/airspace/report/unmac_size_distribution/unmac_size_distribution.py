# Copyright (c) 2026, uNMAC Developers and contributors
# For license information, please see license.txt

import numpy as np

from unmac import hooks
from unmac.airspace.doctype.separation_model.separation_model import (
	AF_MAX,
	AF_MIN,
	SPEED_CATEGORIES,
	triangular_mac_pdf,
	unmac_radius_quantiles,
)
from unmac.exceptions import InvalidParameterError

QUANTILES = (0.5, 0.9, 0.99, 0.999)
DEFAULT_CATEGORY = 3
DEFAULT_SAMPLES = 200_000
AIRFRAME_POINTS = 151


def execute(filters=None):
	filters = dict(filters or {})
	columns = get_columns()
	data = get_data(filters)
	return columns, data


def execute_airframe_pdf(filters=None):
	filters = dict(filters or {})
	return get_airframe_columns(), get_airframe_data(filters)


def _quantile_field(p):
	return "q" + f"{p:g}".split(".")[1].ljust(2, "0") + "_m"


def get_columns():
	columns = [
		{"fieldname": "sigma_m", "label": "Sigma (m)", "fieldtype": "Float"},
		{"fieldname": "dt_s", "label": "Broadcast Interval (s)", "fieldtype": "Float"},
		{"fieldname": "category", "label": "Speed Category", "fieldtype": "Int"},
		{"fieldname": "mean_m", "label": "Mean Radius (m)", "fieldtype": "Float"},
	]
	columns.extend(
		{"fieldname": _quantile_field(p), "label": f"{p:.1%} Radius (m)", "fieldtype": "Float"}
		for p in QUANTILES
	)
	return columns


def get_data(filters):
	"""
	Sampled pairwise uNMAC radius per accuracy class, broadcast interval and speed category.

	Every row reuses the same seed, so rows differ only through their parameters.
	"""
	sigmas = [float(s) for s in filters.get("sigmas") or hooks.default_analysis_sigmas]
	dts = [float(dt) for dt in filters.get("dts") or hooks.default_analysis_dts]
	categories = [int(c) for c in filters.get("categories") or [DEFAULT_CATEGORY]]
	samples = int(filters.get("samples") or DEFAULT_SAMPLES)
	seed = int(filters.get("seed") or 0)

	data = []
	for category in categories:
		if category not in SPEED_CATEGORIES:
			raise InvalidParameterError(f"Unknown speed category: {category}")
		for sigma in sigmas:
			for dt in dts:
				result = unmac_radius_quantiles(
					sigma, dt, SPEED_CATEGORIES[category], ps=QUANTILES, samples=samples, seed=seed
				)
				row = {"sigma_m": sigma, "dt_s": dt, "category": category, "mean_m": result["mean"]}
				row.update({_quantile_field(p): result[p] for p in QUANTILES})
				data.append(row)
	return data


def get_airframe_columns():
	return [
		{"fieldname": "x_m", "label": "MAC Radius (m)", "fieldtype": "Float"},
		{"fieldname": "pdf_per_m", "label": "Density (1/m)", "fieldtype": "Float"},
	]


def get_airframe_data(filters):
	lo = float(filters.get("airframe_min", 0.0))
	hi = float(filters.get("airframe_max", AF_MAX))
	points = int(filters.get("points") or AIRFRAME_POINTS)
	if lo and lo < AF_MIN:
		raise InvalidParameterError(f"airframe_min must be 0 or at least {AF_MIN}, got {lo}")

	x = np.linspace(0.0, hi, points)
	pdf = triangular_mac_pdf(x, af_max=hi, lo=lo)
	return [{"x_m": float(xk), "pdf_per_m": float(fk)} for xk, fk in zip(x, pdf, strict=True)]
