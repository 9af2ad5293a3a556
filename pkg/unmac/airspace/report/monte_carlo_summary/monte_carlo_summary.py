# Copyright (c) 2026, uNMAC Developers and contributors
# For license information, please see license.txt

from unmac.airspace.doctype.remote_id.remote_id import MessageFormat


def execute(filters=None):
	"""
	Per-policy summary of a Monte Carlo comparison.

	Args:
		filters (dict): ``results`` maps each policy to its ``PolicyRuns``, as returned by
			``run_monte_carlo``.
	"""
	filters = dict(filters or {})
	results = filters.get("results") or {}
	columns = get_columns()
	data = get_data(results)
	chart = get_mac_rate_chart(data)
	summary = get_report_summary(data)
	return columns, data, None, chart, summary


def get_columns():
	return [
		{"fieldname": "policy", "label": "Policy", "fieldtype": "Data"},
		{"fieldname": "runs", "label": "Runs", "fieldtype": "Int"},
		{"fieldname": "flights", "label": "Flights", "fieldtype": "Int"},
		{"fieldname": "arrived", "label": "Arrived", "fieldtype": "Int"},
		{"fieldname": "collided", "label": "Collided", "fieldtype": "Int"},
		{"fieldname": "stalled", "label": "Stalled", "fieldtype": "Int"},
		{"fieldname": "mac_count", "label": "MACs", "fieldtype": "Int"},
		{"fieldname": "runs_with_mac", "label": "Runs With MAC", "fieldtype": "Int"},
		{"fieldname": "mac_rate", "label": "MAC Rate", "fieldtype": "Float"},
		{"fieldname": "median_time_s", "label": "Median Mission Time (s)", "fieldtype": "Float"},
		{"fieldname": "mean_time_s", "label": "Mean Mission Time (s)", "fieldtype": "Float"},
		{"fieldname": "p95_time_s", "label": "95th Percentile Time (s)", "fieldtype": "Float"},
	]


def get_data(results):
	return [policy_runs.summary.as_dict() for policy_runs in results.values()]


def get_run_columns():
	return [
		{"fieldname": "policy", "label": "Policy", "fieldtype": "Data"},
		{"fieldname": "run_index", "label": "Run", "fieldtype": "Int"},
		{"fieldname": "fleet_seed", "label": "Fleet Seed", "fieldtype": "Int"},
		{"fieldname": "noise_seed", "label": "Noise Seed", "fieldtype": "Int"},
		{"fieldname": "agents", "label": "Agents", "fieldtype": "Int"},
		{"fieldname": "arrived", "label": "Arrived", "fieldtype": "Int"},
		{"fieldname": "collided", "label": "Collided", "fieldtype": "Int"},
		{"fieldname": "stalled", "label": "Stalled", "fieldtype": "Int"},
		{"fieldname": "mac_count", "label": "MACs", "fieldtype": "Int"},
		{"fieldname": "median_time_s", "label": "Median Time (s)", "fieldtype": "Float"},
		{"fieldname": "mean_time_s", "label": "Mean Time (s)", "fieldtype": "Float"},
		{"fieldname": "max_time_s", "label": "Max Time (s)", "fieldtype": "Float"},
		{"fieldname": "min_separation_m", "label": "Min Separation (m)", "fieldtype": "Float"},
	]


def get_run_data(results):
	"""
	One record per run, grouped by policy in comparison order and by run index within a policy.

	Records carry the ``runs.csv`` columns plus arrival times, statuses and MAC events.
	"""
	return [
		outcome.as_dict()
		for policy_runs in results.values()
		for outcome in sorted(policy_runs.outcomes, key=lambda o: o.run_index)
	]


def get_unsafe_policies(data):
	"""Policies that must stay MAC-free but recorded at least one MAC."""
	return [row["policy"] for row in data if MessageFormat.parse(row["policy"]).must_be_safe and row["mac_count"] > 0]


def get_report_summary(data):
	flights = sum(row["flights"] for row in data)
	macs = sum(row["mac_count"] for row in data)
	unsafe = get_unsafe_policies(data)
	return [
		{"value": len(data), "label": "Policies", "datatype": "Int", "indicator": "blue"},
		{"value": flights, "label": "Flights", "datatype": "Int", "indicator": "blue"},
		{"value": macs, "label": "MACs", "datatype": "Int", "indicator": "red" if macs else "green"},
		{
			"value": len(unsafe),
			"label": "Unsafe Policies",
			"datatype": "Int",
			"indicator": "red" if unsafe else "green",
		},
	]


def get_mac_rate_chart(data):
	return {
		"data": {
			"labels": [row["policy"] for row in data],
			"datasets": [{"name": "MAC Rate", "values": [row["mac_rate"] for row in data]}],
		},
		"type": "bar",
		"height": 300,
	}
