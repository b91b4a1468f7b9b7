#pragma once

#include <span>
#include <vector>

namespace hc2 {

/// Smooth real function of a real vector.
class Objective {
public:
    virtual ~Objective() = default;
    virtual std::size_t size() const = 0;
    /// Returns f(x) and writes the gradient into g (same length as x).
    virtual double evaluate(std::span<const double> x, std::span<double> g) const = 0;
    /// out = M^{-1} g for a symmetric positive preconditioner; identity by default.
    virtual void precondition(std::span<const double> g, std::span<double> out) const {
        std::copy(g.begin(), g.end(), out.begin());
    }
    /// Rebuilds a state-dependent preconditioner at x; returns false if there is none.
    virtual bool refresh_preconditioner(std::span<const double> /*x*/) const { return false; }
};

} // namespace hc2
