#include "hc2/minimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "hc2/common.hpp"

namespace hc2 {

nlohmann::json ConvergenceReport::to_json() const {
    return {{"converged", converged},   {"status", status},         {"iterations", iterations},
            {"evaluations", evaluations}, {"value", value},         {"grad_norm", grad_norm},
            {"grad_norm0", grad_norm0}, {"seconds", seconds},       {"restart_values", restart_values},
            {"best_restart", best_restart}};
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool finite_all(double f, const std::vector<double>& g) {
    if (!std::isfinite(f)) return false;
    for (double v : g)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace

MinimizeResult minimize(const Objective& obj, std::vector<double> x, const SolverConfig& cfg) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    const std::size_t n = obj.size();
    if (x.size() != n) throw ConfigError("initial vector has wrong length");
    ConvergenceReport rep;
    std::vector<double> g(n), z(n), d(n), xt(n), gt(n), zt(n), xb(n), gb(n);

    double f = obj.evaluate(x, g);
    rep.evaluations = 1;
    if (!finite_all(f, g)) throw SolverError("objective is not finite at the initial point");
    obj.refresh_preconditioner(x);
    obj.precondition(g, z);
    double gz = dot(g, z);
    double gn = std::sqrt(std::max(gz, 0.0));
    rep.grad_norm0 = gn;
    const double tol = std::max(cfg.abs_tol, cfg.rel_tol * gn);
    rep.history.push_back(f);
    for (std::size_t k = 0; k < n; ++k) d[k] = -z[k];
    double alpha_prev = 1.0, gd_prev = -gz;
    int since_restart = 0, stall = 0;
    double gn_min = gn;
    const bool cg = cfg.mode == SolverMode::ConjugateGradient;

    auto trial = [&](double a, std::vector<double>& xo, std::vector<double>& go) {
        for (std::size_t k = 0; k < n; ++k) xo[k] = x[k] + a * d[k];
        ++rep.evaluations;
        double v = obj.evaluate(xo, go);
        return finite_all(v, go) ? v : std::numeric_limits<double>::infinity();
    };

    int it = 0;
    rep.status = "max_iter";
    while (true) {
        if (gn <= tol) {
            rep.converged = true;
            rep.status = "converged";
            break;
        }
        if (it >= cfg.max_iter) break;
        if (cfg.max_seconds > 0 && std::chrono::duration<double>(clock::now() - t0).count() > cfg.max_seconds) {
            rep.status = "time_limit";
            break;
        }
        double gd = dot(g, d);
        if (!(gd < 0)) {
            for (std::size_t k = 0; k < n; ++k) d[k] = -z[k];
            gd = -gz;
            since_restart = 0;
        }
        double a = it == 0 ? 1.0 : std::min(alpha_prev * gd_prev / gd, 1e3 * alpha_prev);
        if (!(a > 0) || !std::isfinite(a)) a = 1.0;

        // line search; noise is the roundoff level of f
        const double noise = 1e-13 * (1 + std::abs(f));
        double fa = trial(a, xt, gt);
        int shrink = 0;
        while (!std::isfinite(fa) && shrink < 60) {
            a *= 0.1;
            fa = trial(a, xt, gt);
            ++shrink;
        }
        bool accepted = false;
        double fbest = fa, abest = a;
        xb = xt;
        gb = gt;
        for (int ls = 0; ls < 60 && std::isfinite(fa); ++ls) {
            double curv = fa - f - gd * a;
            if (curv > 0) {
                double aq = -gd * a * a / (2 * curv);
                if (aq > 1e-3 * a && aq < 1e3 * a && std::abs(aq - a) > 1e-3 * a) {
                    double fq = trial(aq, xt, gt);
                    if (fq < fbest) {
                        fbest = fq;
                        abest = aq;
                        xb = xt;
                        gb = gt;
                    }
                }
            }
            if (fbest <= f + cfg.armijo * abest * gd) {
                accepted = true;
                break;
            }
            if (std::abs(fa - f) <= noise && std::abs(fbest - f) <= noise) break;
            // backtrack
            double anew = curv > 0 ? std::max(0.1 * a, std::min(0.5 * a, -gd * a * a / (2 * curv))) : 0.5 * a;
            a = anew;
            fa = trial(a, xt, gt);
            if (fa < fbest) {
                fbest = fa;
                abest = a;
                xb = xt;
                gb = gt;
            }
        }
        if (!accepted && std::abs(fbest - f) <= noise) {
            // f is flat to roundoff along d: secant steps on the directional derivative
            double a0 = 0, p0 = gd, a1 = abest;
            double f1 = trial(a1, xt, gt), p1 = dot(gt, d);
            for (int s = 0; s < 20 && std::isfinite(f1); ++s) {
                if (f1 <= f + noise && std::abs(p1) <= 0.5 * std::abs(gd)) {
                    accepted = true;
                    fbest = f1;
                    abest = a1;
                    xb = xt;
                    gb = gt;
                    break;
                }
                if (p1 == p0) break;
                double a2 = a1 - p1 * (a1 - a0) / (p1 - p0);
                if (!(a2 > 0) || !std::isfinite(a2)) break;
                a0 = a1;
                p0 = p1;
                a1 = a2;
                f1 = trial(a1, xt, gt);
                p1 = dot(gt, d);
            }
        }
        if (!accepted) {
            if (since_restart > 0) {  // retry from steepest descent
                for (std::size_t k = 0; k < n; ++k) d[k] = -z[k];
                since_restart = 0;
                gd_prev = -gz;
                ++it;
                continue;
            }
            rep.status = "line_search_failed";
            break;
        }
        ++it;
        double df = f - fbest;
        x.swap(xb);
        gt.swap(gb);
        ++since_restart;
        // the preconditioner is rebuilt only at restarts so each CG sequence sees a fixed metric
        bool refresh = since_restart >= cfg.restart_every || it == 20;
        if (refresh && obj.refresh_preconditioner(x)) since_restart = cfg.restart_every;
        obj.precondition(gt, zt);
        double gz_new = dot(gt, zt);
        double beta = 0.0;
        if (cg && since_restart < cfg.restart_every) {
            double num = 0;
            for (std::size_t k = 0; k < n; ++k) num += gt[k] * (zt[k] - z[k]);
            beta = std::max(0.0, num / gz);
        } else {
            since_restart = 0;
        }
        for (std::size_t k = 0; k < n; ++k) d[k] = -zt[k] + beta * d[k];
        g.swap(gt);
        z.swap(zt);
        gz = gz_new;
        gn = std::sqrt(std::max(gz, 0.0));
        alpha_prev = abest;
        gd_prev = gd;
        f = fbest;
        if (cfg.history_stride > 0 && it % cfg.history_stride == 0) rep.history.push_back(f);
        bool progress = df > 1e-16 * std::abs(f) || gn < gn_min;
        gn_min = std::min(gn_min, gn);
        stall = progress ? 0 : stall + 1;
        if (stall >= 50) {
            rep.status = "stalled";
            break;
        }
    }
    if (rep.history.back() != f) rep.history.push_back(f);
    rep.iterations = it;
    rep.value = f;
    rep.grad_norm = gn;
    rep.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return {std::move(x), std::move(rep)};
}

MinimizeResult minimize_restarts(const Objective& obj, const InitFn& init, const SolverConfig& cfg) {
    MinimizeResult best;
    std::vector<double> values;
    int k_best = -1;
    for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
        std::mt19937_64 rng(cfg.seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(r));
        auto res = minimize(obj, init(r, rng), cfg);
        values.push_back(res.report.value);
        if (k_best < 0 || res.report.value < best.report.value) {
            best = std::move(res);
            k_best = r;
        }
    }
    best.report.restart_values = values;
    best.report.best_restart = k_best;
    return best;
}

} // namespace hc2
