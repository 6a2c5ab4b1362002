#pragma once

#include "cgdft/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace cgdft {

struct LanczosOptions {
    int wanted = 4;
    /// Maximum Krylov basis size before a restart.
    int subspace = 64;
    int max_restarts = 400;
    /// Residual bound ||H y - theta y|| <= tolerance * max|theta|.
    Scalar tolerance = 1e-12;
    unsigned seed = 20240611u;
};

struct LanczosResult {
    Vector values;
    Matrix vectors;
    int products = 0;
    bool converged = false;
};

/// Lowest eigenpairs of a symmetric operator by thick-restart Lanczos with full
/// reorthogonalization (Krylov-Schur form: the projected matrix is recomputed
/// as V^T H V at every restart).
///
/// `apply(x, y)` must set y = H x. `start` may be empty, in which case a
/// seeded pseudo-random vector is used, so results are deterministic.
template <typename Apply>
LanczosResult lowest_eigenpairs(const Apply& apply, int dim, const LanczosOptions& opts, const Vector& start = {})
{
    const int wanted = std::min(opts.wanted, dim);
    const int max_basis = std::min(dim, std::max(opts.subspace, 2 * wanted + 8));

    Matrix basis(dim, max_basis);
    Matrix image(dim, max_basis);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<Scalar> gauss;
    auto random_vector = [&] {
        Vector x(dim);
        for (int i = 0; i < dim; ++i)
            x[i] = gauss(rng);
        return x;
    };

    Vector next = start.size() == dim && start.norm() > 0 ? Vector(start) : random_vector();
    next /= next.norm();

    LanczosResult result;
    int filled = 0;
    Vector product(dim);

    for (int restart = 0; restart <= opts.max_restarts; ++restart) {
        while (filled < max_basis) {
            basis.col(filled) = next;
            apply(basis.col(filled), product);
            ++result.products;
            image.col(filled) = product;
            ++filled;

            Vector r = product;
            for (int pass = 0; pass < 2; ++pass)
                r -= basis.leftCols(filled) * (basis.leftCols(filled).transpose() * r);
            Scalar beta = r.norm();
            if (beta <= 1e-13 * std::max<Scalar>(1, product.norm())) {
                // Invariant subspace: continue with a fresh orthogonal direction.
                if (filled == dim)
                    break;
                for (int attempt = 0; attempt < 4 && beta <= 1e-8; ++attempt) {
                    r = random_vector();
                    for (int pass = 0; pass < 2; ++pass)
                        r -= basis.leftCols(filled) * (basis.leftCols(filled).transpose() * r);
                    beta = r.norm() / std::sqrt(static_cast<Scalar>(dim));
                }
                beta = r.norm();
            }
            next = r / beta;
        }

        Matrix projected = basis.leftCols(filled).transpose() * image.leftCols(filled);
        projected = 0.5 * (projected + projected.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> small(projected);
        const Vector& theta = small.eigenvalues();
        const Matrix& y = small.eigenvectors();

        const Scalar scale = std::max<Scalar>(1, theta.cwiseAbs().maxCoeff());
        bool done = true;
        for (int j = 0; j < wanted && done; ++j) {
            const Vector residual = image.leftCols(filled) * y.col(j) - theta[j] * (basis.leftCols(filled) * y.col(j));
            if (residual.norm() > opts.tolerance * scale)
                done = false;
        }
        if (done || filled == dim || restart == opts.max_restarts) {
            result.values = theta.head(wanted);
            result.vectors = basis.leftCols(filled) * y.leftCols(wanted);
            result.converged = done || filled == dim;
            return result;
        }

        const int keep = std::min(filled - 1, std::max(wanted + 4, (max_basis + wanted) / 2));
        basis.leftCols(keep) = (basis.leftCols(filled) * y.leftCols(keep)).eval();
        image.leftCols(keep) = (image.leftCols(filled) * y.leftCols(keep)).eval();
        filled = keep;
        // `next` is orthogonal to the old basis, hence to the kept Ritz vectors.
        for (int pass = 0; pass < 2; ++pass)
            next -= basis.leftCols(filled) * (basis.leftCols(filled).transpose() * next);
        next /= next.norm();
    }
    return result;
}

/// Solve A x = b for symmetric positive definite A restricted to the
/// orthogonal complement of `deflate` (columns orthonormal), by conjugate
/// gradients. `b` is projected first; returns the number of iterations or
/// throws NonConvergence.
template <typename Apply>
int deflated_conjugate_gradient(const Apply& apply, const Matrix& deflate, const Vector& b, Vector& x,
                                Scalar tolerance, int max_iterations)
{
    auto project = [&](Vector& v) {
        if (deflate.cols() > 0)
            v -= deflate * (deflate.transpose() * v);
    };
    Vector rhs = b;
    project(rhs);
    const Scalar target = tolerance * rhs.norm();
    x = Vector::Zero(b.size());
    if (rhs.norm() == 0)
        return 0;
    Vector r = rhs;
    Vector p = r;
    Vector ap(b.size());
    Scalar rr = r.squaredNorm();
    for (int it = 1; it <= max_iterations; ++it) {
        apply(p, ap);
        project(ap);
        const Scalar alpha = rr / p.dot(ap);
        x += alpha * p;
        r -= alpha * ap;
        const Scalar rr_new = r.squaredNorm();
        if (std::sqrt(rr_new) <= target) {
            project(x);
            return it;
        }
        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }
    throw NonConvergence("deflated_conjugate_gradient: no convergence");
}

}  // namespace cgdft
