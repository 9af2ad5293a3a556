app_name = "unmac"
app_title = "uNMAC"
app_publisher = "uNMAC Developers"
app_description = "UAV separation model, Remote ID safety disks and RVO Monte Carlo simulation"
app_email = "unmac@users.noreply.github.com"
app_license = "mit"

# Reports
# ------------------
# Tables written by `unmac analyze`, in output order. Each entry maps an output file to the
# report module whose execute(filters) produces it.

analysis_reports = {
	"analysis_loc_error_pdf.csv": "unmac.airspace.report.loc_error_distribution.loc_error_distribution.execute_pdf",
	"analysis_loc_error_quantiles.csv": "unmac.airspace.report.loc_error_distribution.loc_error_distribution.execute",
	"analysis_mobility.csv": "unmac.airspace.report.mobility_expansion.mobility_expansion.execute",
	"analysis_unmac_size.csv": "unmac.airspace.report.unmac_size_distribution.unmac_size_distribution.execute",
	"analysis_airframe_pdf.csv": "unmac.airspace.report.unmac_size_distribution.unmac_size_distribution.execute_airframe_pdf",
}

simulation_report = "unmac.airspace.report.monte_carlo_summary.monte_carlo_summary.execute"

# Policies
# ------------------
# A MAC under any of these makes `unmac simulate` exit with status 2.

must_be_safe_policies = ["STANDARD", "CANDIDATE1", "CANDIDATE2"]

# Broadcast intervals
# ------------------
# Named localization/broadcast update rates in seconds, selectable as `broadcast_interval`.

broadcast_interval_presets = {
	"gnss_100hz": 0.01,
	"recommended": 0.1,
	"gnss_8hz": 0.125,
	"gnss_1hz": 1.0,
	"gnss_0_2hz": 5.0,
}

# Analysis defaults
# ------------------

default_analysis_sigmas = [1.9, 3.5, 4.85, 10.0]
default_analysis_dts = [0.01, 0.1, 0.125, 1.0, 5.0]
default_analysis_categories = [1, 2, 3, 4]
