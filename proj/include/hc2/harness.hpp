#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "hc2/config.hpp"
#include "hc2/gl_solver.hpp"

namespace hc2 {

/// One (kappa, mu) point with its predictions, fixed before any solve.
struct PlanEntry {
    double kappa = 0.0, mu = 0.0, H = 0.0;
    double predicted = 0.0;         ///< A(mu; Omega) = (E1 |dOmega| + [mu]_+^2 E2 |Omega|) kappa
    double predicted_bulk = 0.0;    ///< A(mu; V) for the bulk sub-region (no boundary part)
    double predicted_collar = 0.0;  ///< A(mu; Omega \ V)
};

struct ExperimentPlan {
    DomainSpec domain = DomainSpec::disc(1.0);
    std::vector<double> kappa_list{25.0};
    std::vector<double> mu_list{0.0};
    double res = 0.0;     ///< bulk mesh spacing; 0 = a quarter of the magnetic length eps
    double tol = 1e-6;
    double delta = 0.5;
    int restarts = 1;
    std::uint64_t seed = 1;
    std::string e1_run, e2_run;   ///< number or run directory holding result.json
    double E1 = 0.0, E2 = 0.0;    ///< resolved constants (0 = not available)
    std::string e1_id, e2_id;     ///< run ids of the constants ("literal" for numbers)
    std::vector<std::string> warnings;

    static const std::set<std::string>& keys();
    /// Applies config keys on top of the defaults and validates.
    static ExperimentPlan from_config(const ConfigFile& c);
    /// Resolved `key = value` text (round-trips through from_config).
    std::string to_config() const;
    std::string hash() const { return hash_hex(to_config()); }
    void validate() const;

    /// Cartesian product kappa_list x mu_list with predictions.
    std::vector<PlanEntry> entries() const;
    /// Bulk reporting region: the concentric disc of half the radius (or the points at
    /// depth >= inradius / 2 on rectangles).
    Region bulk_region() const;
    double bulk_area() const;
    double spacing(double kappa, double H) const;
    GridPtr grid_for(double kappa, double H) const;
};

struct RunRecord {
    double kappa = 0.0, mu = 0.0, H = 0.0, delta = 0.5, h = 0.0;
    int nodes = 0;
    double energy = 0.0, energy_bulk = 0.0, energy_collar = 0.0;
    double reduced_energy = 0.0;
    double quartic = 0.0, quartic_bulk = 0.0;   ///< int |psi|^4
    double linf_interior = 0.0;                 ///< |psi|_inf on omega_kappa
    double lambda = 0.0;
    double l2 = 0.0, max_abs_psi = 0.0;
    double curl_energy = 0.0;                   ///< kappa^2 H^2 int |curl A - 1|^2
    double curl_sup = 0.0;                      ///< max |curl A - 1|
    double virial_defect = 0.0;
    double predicted = 0.0, predicted_bulk = 0.0, predicted_collar = 0.0;
    double ratio = 0.0;                         ///< energy / (-predicted)
    double ratio_quartic = 0.0;                 ///< kappa int |psi|^4 / (2 predicted / kappa)
    double trial_energy = 0.0;
    bool converged = false;
    std::string status;
    int iterations = 0;
    double grad_ratio = 0.0;
    double seconds = 0.0;                       ///< wall time; not written to records.json
    std::uint64_t seed = 0;
    std::vector<double> restart_values;

    bool operator==(const RunRecord&) const = default;
    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
    static std::string csv_header();
    std::string csv_row() const;
};

using ProgressFn = std::function<void(const RunRecord&)>;

/// Solves every plan entry (jobs workers, results in plan order).  A failed solve gives
/// a record with converged = false and the error in `status`.
std::vector<RunRecord> run_expansion_experiment(const ExperimentPlan& plan, int jobs = 1,
                                                const ProgressFn& progress = {});
RunRecord solve_entry(const ExperimentPlan& plan, const PlanEntry& e);

struct Aggregate {
    int total = 0, converged = 0;
    double converged_fraction() const { return total ? double(converged) / total : 0.0; }
};
Aggregate aggregate(const std::vector<RunRecord>& r);

struct QuarticRow {
    double kappa = 0.0, mu = 0.0;
    double lhs = 0.0;        ///< kappa int |psi|^4
    double predicted = 0.0;  ///< 2 A / kappa
    double ratio = 0.0;
    double virial = 0.0;     ///< -2 E0 / kappa
    double virial_error = 0.0;
};
std::vector<QuarticRow> run_quartic_identity(const std::vector<RunRecord>& r);

struct LinftyFit {
    std::vector<double> lambda, linf, ratio;
    double slope = 0.0, intercept = 0.0;
    double c = 0.0, C = 0.0;  ///< min and max of linf / lambda
    bool fitted = false;      ///< at least 3 converged mu > 0 points
};
LinftyFit run_linfty_scaling(const std::vector<RunRecord>& r);

struct CurlSummary {
    std::vector<double> kappa, ratio;   ///< kappa^2 H^2 int |curl A - 1|^2 / (max(mu_+^2, 1) kappa)
    std::vector<double> sup_constant;   ///< |curl A - 1|_inf H / (kappa^{-1+delta} + |psi|_inf(omega))
    bool decreasing = false;
    double constant_spread = 0.0;       ///< max / min of sup_constant
};
/// Rows sorted by kappa; meant for a fixed mu.
CurlSummary run_curl_smallness(const std::vector<RunRecord>& r);

// ---------------------------------------------------------------- persistence

/// Creates root/<kind>-<hash8>-<k> with the smallest free k (atomic on collision).
std::string make_run_dir(const std::string& root, const std::string& kind, const std::string& hash);
/// Write to a temporary file in the same directory, then rename.
void write_atomic(const std::string& path, const std::string& content);

struct Manifest {
    nlohmann::json data;  ///< deterministic content; wall-clock data lives under "timing"
};
/// Writes config.cfg, records.json, records.csv, summary.json and manifest.json into dir.
Manifest persist(const std::string& dir, const std::string& kind, const ExperimentPlan& plan,
                 const std::vector<RunRecord>& records, const nlohmann::json& summary, double wall_seconds);
std::vector<RunRecord> load_records(const std::string& dir);

std::string tool_version();

} // namespace hc2
