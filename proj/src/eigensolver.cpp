#include "hc2/eigensolver.hpp"

#include <Eigen/Eigenvalues>
#include <random>

namespace hc2 {

namespace {

using Mat = Eigen::MatrixXcd;

/// Orthonormalises the columns of Y, dropping numerically dependent directions.
Mat svqb(const Mat& Y) {
    if (Y.cols() == 0) return Y;
    Mat G = Y.adjoint() * Y;
    Eigen::VectorXd d = G.diagonal().real().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Mat Gs = d.asDiagonal() * G * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(Gs);
    const auto& th = es.eigenvalues();
    double tmax = th.maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < th.size(); ++i)
        if (th[i] > 1e-13 * tmax) keep.push_back(i);
    Mat V(Y.cols(), keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) V.col(j) = es.eigenvectors().col(keep[j]) / std::sqrt(th[keep[j]]);
    return Y * (d.asDiagonal() * V);
}

} // namespace

EigenResult lobpcg(const HermitianPencil& A, int k, int block, double tol, int max_iter, std::uint64_t seed) {
    const int n = static_cast<int>(A.n);
    const int m = std::max(block, k);
    if (m > n) throw ConfigError("eigensolver block larger than the problem");
    Eigen::VectorXd sm(n), ism(n);
    for (int i = 0; i < n; ++i) {
        sm[i] = std::sqrt(A.mass[i]);
        ism[i] = 1.0 / sm[i];
    }
    // symmetrised operator B = M^{-1/2} K M^{-1/2}
    std::vector<cplx> tin(n), tout(n);
    auto applyB = [&](const Mat& X) {
        Mat Y(n, X.cols());
        for (int c = 0; c < X.cols(); ++c) {
            for (int i = 0; i < n; ++i) tin[i] = X(i, c) * ism[i];
            A.apply_K(tin.data(), tout.data());
            for (int i = 0; i < n; ++i) Y(i, c) = tout[i] * ism[i];
        }
        return Y;
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Mat X(n, m);
    for (int c = 0; c < m; ++c)
        for (int i = 0; i < n; ++i) X(i, c) = cplx(nd(rng), nd(rng));
    X = svqb(svqb(X));
    Mat AX = applyB(X), P(n, 0);
    EigenResult res;
    Eigen::VectorXd lam(m), rn(m);
    for (int it = 0; it <= max_iter; ++it) {
        Mat H = X.adjoint() * AX;
        H = 0.5 * (H + H.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Mat> es(H);
        X = X * es.eigenvectors();
        AX = AX * es.eigenvectors();
        lam = es.eigenvalues();
        Mat R = AX - X * lam.asDiagonal();
        for (int c = 0; c < m; ++c) rn[c] = R.col(c).norm() / std::max(std::abs(lam[c]), 1e-300);
        res.iterations = it;
        bool done = true;
        for (int c = 0; c < k; ++c) done = done && rn[c] <= tol;
        if (done) {
            res.converged = true;
            break;
        }
        if (it == max_iter) break;
        std::vector<int> active;
        for (int c = 0; c < m; ++c)
            if (rn[c] > 0.1 * tol) active.push_back(c);
        Mat W(n, active.size());
        for (std::size_t j = 0; j < active.size(); ++j) {
            if (A.precondition) {
                // approximate inverse of B is M^{1/2} K^{-1} M^{1/2}
                for (int i = 0; i < n; ++i) tin[i] = R(i, active[j]) * sm[i];
                A.precondition(tin.data(), tout.data());
                for (int i = 0; i < n; ++i) W(i, j) = tout[i] * sm[i];
            } else {
                W.col(j) = R.col(active[j]);
            }
        }
        Mat Q(n, W.cols() + P.cols());
        Q << W, P;
        for (int pass = 0; pass < 2; ++pass) Q -= X * (X.adjoint() * Q);
        Q = svqb(Q);
        Q -= X * (X.adjoint() * Q);
        Q = svqb(Q);
        if (Q.cols() == 0) break;
        Mat AQ = applyB(Q);
        const int q = static_cast<int>(Q.cols());
        Mat S(n, m + q), AS(n, m + q);
        S << X, Q;
        AS << AX, AQ;
        Mat G = S.adjoint() * AS;
        G = 0.5 * (G + G.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Mat> es2(G);
        Mat C = es2.eigenvectors().leftCols(m);
        Mat Xn = S * C, AXn = AS * C;
        P = Q * C.bottomRows(q);
        X = Xn;
        AX = AXn;
        X = svqb(X);
        AX = applyB(X);
    }
    res.values = lam.head(k);
    res.residuals = rn.head(k);
    res.vectors = ism.asDiagonal() * X.leftCols(k);
    return res;
}

} // namespace hc2
