#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hc2 {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
};

/// Invalid input: malformed configuration, unsupported domain, bad parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (NaN, no convergence where convergence is required).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fields defined on different grids were combined.
class GridMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hc2
