# Copyright (c) 2026, uNMAC Developers and contributors
# For license information, please see license.txt

import itertools

from unmac import hooks
from unmac.airspace.doctype.separation_model.separation_model import (
	SPEED_CATEGORIES,
	relative_displacement_mean,
	relative_displacement_quantile,
)
from unmac.exceptions import InvalidParameterError

BOUND = 0.997


def execute(filters=None):
	filters = dict(filters or {})
	columns = get_columns()
	data = get_data(filters)
	return columns, data


def get_columns():
	return [
		{"fieldname": "category_i", "label": "Category i", "fieldtype": "Int"},
		{"fieldname": "category_j", "label": "Category j", "fieldtype": "Int"},
		{"fieldname": "dt_s", "label": "Broadcast Interval (s)", "fieldtype": "Float"},
		{"fieldname": "mean_m", "label": "Mean Displacement (m)", "fieldtype": "Float"},
		{"fieldname": "q997_m", "label": "99.7% Displacement (m)", "fieldtype": "Float"},
	]


def get_data(filters):
	categories = [int(c) for c in filters.get("categories") or hooks.default_analysis_categories]
	unknown = sorted(set(categories) - set(SPEED_CATEGORIES))
	if unknown:
		raise InvalidParameterError(f"Unknown speed categories: {unknown}")
	dts = [float(dt) for dt in filters.get("dts") or hooks.default_analysis_dts]

	data = []
	for i, j in itertools.combinations_with_replacement(sorted(categories), 2):
		cat_i, cat_j = SPEED_CATEGORIES[i], SPEED_CATEGORIES[j]
		for dt in dts:
			data.append(
				{
					"category_i": i,
					"category_j": j,
					"dt_s": dt,
					"mean_m": relative_displacement_mean(cat_i, cat_j, dt),
					"q997_m": relative_displacement_quantile(BOUND, cat_i, cat_j, dt),
				}
			)
	return data
