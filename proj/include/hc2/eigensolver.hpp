#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "hc2/common.hpp"

namespace hc2 {

/// Hermitian pencil K u = lambda M u with diagonal positive M.
struct HermitianPencil {
    std::size_t n = 0;
    std::function<void(const cplx* in, cplx* out)> apply_K;
    std::vector<double> mass;
    /// Optional approximate inverse of K (original variables); empty = none.
    std::function<void(const cplx* in, cplx* out)> precondition;
};

struct EigenResult {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;  ///< M-orthonormal columns
    Eigen::VectorXd residuals; ///< |K u - lambda M u|_{M^-1} / |lambda|
    int iterations = 0;
    bool converged = false;
};

/// Lowest k eigenpairs by block LOBPCG (block size >= k), SVQB orthonormalisation,
/// soft locking of converged columns.
EigenResult lobpcg(const HermitianPencil& A, int k, int block, double tol, int max_iter, std::uint64_t seed);

} // namespace hc2
