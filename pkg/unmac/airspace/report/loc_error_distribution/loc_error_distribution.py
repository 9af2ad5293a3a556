# Copyright (c) 2026, uNMAC Developers and contributors
# For license information, please see license.txt

import itertools

import numpy as np

from unmac import hooks
from unmac.airspace.doctype.separation_model.separation_model import (
	loc_error_sum_cdf,
	loc_error_sum_mean,
	loc_error_sum_pdf,
	loc_error_sum_quantile,
)

QUANTILE = 0.999
PDF_POINTS = 201


def execute(filters=None):
	filters = dict(filters or {})
	columns = get_columns()
	data = get_data(filters)
	return columns, data


def execute_pdf(filters=None):
	filters = dict(filters or {})
	columns = get_pdf_columns()
	data = get_pdf_data(filters)
	return columns, data


def get_sigma_pairs(filters):
	"""Identical accuracy classes by default, every unordered pair with ``cross_pairs``."""
	sigmas = [float(s) for s in filters.get("sigmas") or hooks.default_analysis_sigmas]
	if filters.get("cross_pairs"):
		return list(itertools.combinations_with_replacement(sigmas, 2))
	return [(s, s) for s in sigmas]


def get_columns():
	return [
		{"fieldname": "sigma_i_m", "label": "Sigma i (m)", "fieldtype": "Float"},
		{"fieldname": "sigma_j_m", "label": "Sigma j (m)", "fieldtype": "Float"},
		{"fieldname": "mean_m", "label": "Mean (m)", "fieldtype": "Float"},
		{"fieldname": "q999_m", "label": "99.9% Quantile (m)", "fieldtype": "Float"},
		{"fieldname": "three_sigma_sum_m", "label": "3 Sigma Sum (m)", "fieldtype": "Float"},
	]


def get_data(filters):
	return [
		{
			"sigma_i_m": sigma_i,
			"sigma_j_m": sigma_j,
			"mean_m": loc_error_sum_mean(sigma_i, sigma_j),
			"q999_m": loc_error_sum_quantile(QUANTILE, sigma_i, sigma_j),
			"three_sigma_sum_m": 3 * (sigma_i + sigma_j),
		}
		for sigma_i, sigma_j in get_sigma_pairs(filters)
	]


def get_pdf_columns():
	return [
		{"fieldname": "sigma_i_m", "label": "Sigma i (m)", "fieldtype": "Float"},
		{"fieldname": "sigma_j_m", "label": "Sigma j (m)", "fieldtype": "Float"},
		{"fieldname": "x_m", "label": "Error Sum (m)", "fieldtype": "Float"},
		{"fieldname": "pdf_per_m", "label": "Density (1/m)", "fieldtype": "Float"},
		{"fieldname": "cdf", "label": "Cumulative", "fieldtype": "Float"},
	]


def get_pdf_data(filters):
	points = int(filters.get("points") or PDF_POINTS)
	data = []
	for sigma_i, sigma_j in get_sigma_pairs(filters):
		upper = 1.25 * loc_error_sum_quantile(QUANTILE, sigma_i, sigma_j)
		x = np.linspace(0.0, upper, points)
		pdf = loc_error_sum_pdf(x, sigma_i, sigma_j)
		cdf = [loc_error_sum_cdf(float(xk), sigma_i, sigma_j) for xk in x]
		data.extend(
			{"sigma_i_m": sigma_i, "sigma_j_m": sigma_j, "x_m": float(xk), "pdf_per_m": float(fk), "cdf": float(ck)}
			for xk, fk, ck in zip(x, pdf, cdf, strict=True)
		)
	return data
