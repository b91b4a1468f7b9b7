#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "hc2/objective.hpp"

namespace hc2 {

enum class SolverMode { ConjugateGradient, GradientFlow };

struct SolverConfig {
    double rel_tol = 1e-8;     ///< stop when |g|_M <= rel_tol * |g0|_M
    double abs_tol = 1e-14;    ///< or when |g|_M <= abs_tol
    int max_iter = 50000;
    int restart_every = 200;   ///< steepest-descent restart period
    double armijo = 1e-4;
    int restarts = 3;          ///< best-of-k in minimize_restarts
    std::uint64_t seed = 1;
    int history_stride = 10;
    double max_seconds = 0.0;  ///< 0 = unlimited
    SolverMode mode = SolverMode::ConjugateGradient;
};

struct ConvergenceReport {
    bool converged = false;
    std::string status;
    int iterations = 0;
    int evaluations = 0;
    double value = 0.0;
    double grad_norm = 0.0;
    double grad_norm0 = 0.0;
    double seconds = 0.0;
    std::vector<double> history;          ///< decimated objective values (non-increasing up to roundoff)
    std::vector<double> restart_values;   ///< final value of each restart
    int best_restart = 0;

    nlohmann::json to_json() const;
};

struct MinimizeResult {
    std::vector<double> x;
    ConvergenceReport report;
};

/// Preconditioned nonlinear CG (Polak-Ribiere+) with Armijo backtracking and
/// quadratic-interpolation step selection.  Non-finite values are rejected by
/// shrinking the step; the returned report is never NaN.
MinimizeResult minimize(const Objective& f, std::vector<double> x0, const SolverConfig& cfg);

using InitFn = std::function<std::vector<double>(int restart, std::mt19937_64& rng)>;

/// Runs cfg.restarts independent starts and returns the lowest value.
MinimizeResult minimize_restarts(const Objective& f, const InitFn& init, const SolverConfig& cfg);

} // namespace hc2
