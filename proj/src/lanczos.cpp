#include "pspinlab/lanczos.hpp"

#include <algorithm>
#include <cmath>

#include "pspinlab/rng.hpp"

namespace pspin {

namespace {

void project_constraints(Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& cons) {
    for (const auto& c : cons) v -= c.dot(v) * c;
}

Eigen::VectorXd random_start(int n, std::uint64_t seed,
                             const std::vector<Eigen::VectorXd>& cons) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng::gaussian_at(seed, static_cast<std::uint64_t>(i));
    project_constraints(v, cons);
    project_constraints(v, cons);
    const double nrm = v.norm();
    return nrm > 0 ? Eigen::VectorXd(v / nrm) : Eigen::VectorXd::Unit(n, 0);
}

}  // namespace

EigenPair extreme_eigenpair(int n, const LinearOp& apply, bool largest, double rel_tol,
                            std::uint64_t seed, const std::vector<Eigen::VectorXd>& project_out,
                            int max_matvecs) {
    EigenPair result;
    const int m = std::min(n, 64);  // Krylov block per sweep
    Eigen::MatrixXd V(n, m + 1);
    Eigen::VectorXd alpha(m), beta(m), w(n);

    Eigen::VectorXd v = random_start(n, rng::mix(seed, 0x6c616e), project_out);
    int fresh_starts = 0;
    double scale = 0.0;

    while (result.matvecs < max_matvecs) {
        V.col(0) = v;
        int j = 0;
        for (; j < m && result.matvecs < max_matvecs; ++j) {
            apply(V.col(j), w);
            ++result.matvecs;
            alpha(j) = V.col(j).dot(w);
            w -= alpha(j) * V.col(j);
            if (j > 0) w -= beta(j - 1) * V.col(j - 1);
            // Full reorthogonalization, twice, plus constraint deflation.
            for (int pass = 0; pass < 2; ++pass) {
                project_constraints(w, project_out);
                w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
            }
            beta(j) = w.norm();
            scale = std::max({scale, std::abs(alpha(j)), beta(j)});

            // Ritz values of the current tridiagonal section.
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(j + 1, j + 1);
            for (int i = 0; i <= j; ++i) {
                T(i, i) = alpha(i);
                if (i < j) T(i, i + 1) = T(i + 1, i) = beta(i);
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            const int pick = largest ? j : 0;
            const double theta = es.eigenvalues()(pick);
            const double resid = beta(j) * std::abs(es.eigenvectors()(j, pick));
            if (resid <= rel_tol * std::abs(theta) + 1e-13 * std::max(scale, 1.0)) {
                result.value = theta;
                result.vector = V.leftCols(j + 1) * es.eigenvectors().col(pick);
                result.vector.normalize();
                result.converged = true;
                return result;
            }
            if (beta(j) <= 1e-14 * std::max(scale, 1.0)) {
                // Invariant subspace hit without meeting the tolerance:
                // restart from a fresh random direction.
                break;
            }
            V.col(j + 1) = w / beta(j);
        }

        if (j > 0 && beta(std::min(j, m) - 1) > 1e-14 * std::max(scale, 1.0)) {
            // Sweep exhausted: restart from the best Ritz vector.
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(j, j);
            for (int i = 0; i < j; ++i) {
                T(i, i) = alpha(i);
                if (i + 1 < j) T(i, i + 1) = T(i + 1, i) = beta(i);
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            const int pick = largest ? j - 1 : 0;
            v = V.leftCols(j) * es.eigenvectors().col(pick);
            project_constraints(v, project_out);
            const double nrm = v.norm();
            if (nrm > 1e-14) {
                v /= nrm;
                result.value = es.eigenvalues()(pick);
                result.vector = v;
                continue;
            }
        }
        v = random_start(n, rng::mix(seed, 0xf00d + (++fresh_starts)), project_out);
    }
    return result;  // converged stays false; best Ritz value reported
}

}  // namespace pspin
