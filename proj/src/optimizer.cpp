#include "pspinlab/optimizer.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "pspinlab/lanczos.hpp"
#include "pspinlab/rng.hpp"

namespace pspin {

void SpherePath::validate(double tol) const {
    if (k < 1 || n < 1) throw std::invalid_argument("SpherePath: empty path");
    if (points.size() != static_cast<std::size_t>(k) + 1 ||
        energies.size() != points.size() ||
        steps.size() != static_cast<std::size_t>(k)) {
        throw std::invalid_argument("SpherePath: inconsistent record sizes");
    }
    const double dn = delta * n;
    for (int i = 0; i <= k; ++i) {
        const double r2 = points[i].squaredNorm();
        const double want = i * dn;
        if (std::abs(r2 - want) > tol * std::max(want, 1.0)) {
            throw std::runtime_error("SpherePath: radius schedule violated at i=" +
                                     std::to_string(i));
        }
    }
    for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd u = points[i + 1] - points[i];
        if (std::abs(u.dot(points[i])) > tol * n) {
            throw std::runtime_error("SpherePath: increment not orthogonal at i=" +
                                     std::to_string(i));
        }
        if (std::abs(u.squaredNorm() - dn) > tol * dn) {
            throw std::runtime_error("SpherePath: increment length off at i=" +
                                     std::to_string(i));
        }
    }
}

namespace {

// One pass of the incremental construction shared by both descent flavours.
// `ascend` selects the top restricted eigenvector and the larger of the two
// trial energies; otherwise the bottom eigenvector and the smaller value.
SpherePath run_path(int n, bool ascend,
                    const std::function<double(const Eigen::VectorXd&)>& value,
                    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& hess,
                    const DescentOptions& opt) {
    if (opt.k < 2) throw std::invalid_argument("descent: k must be >= 2");
    if (n < 2) throw std::invalid_argument("descent: dimension must be >= 2");

    SpherePath path;
    path.n = n;
    path.k = opt.k;
    path.delta = 1.0 / opt.k;
    const double dn = path.delta * n;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    path.points.push_back(x);
    path.energies.push_back(value(x) / n);

    for (int i = 0; i < opt.k; ++i) {
        const Eigen::MatrixXd hd = hess(x);

        std::vector<Eigen::VectorXd> constraints;
        if (i > 0) constraints.push_back(x.normalized());

        Eigen::VectorXd uhat;
        double eig_estimate = 0.0;
        bool converged = true;
        int retries = 0;

        if (hd.norm() <= 1e-14 * n) {
            // No curvature information (e.g. first step without a p = 2
            // term): take a seeded random direction.
            const std::uint64_t key = rng::derive_seed(opt.seed, "descent-dir", i);
            uhat.resize(n);
            for (int j = 0; j < n; ++j) uhat[j] = rng::gaussian_at(key, j);
        } else {
            const auto apply = [&hd](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
                out.noalias() = hd * v;
            };
            EigenPair best;
            for (retries = 0; retries <= opt.max_retries; ++retries) {
                const std::uint64_t s =
                    rng::derive_seed(opt.seed, "descent-eig", i * 1024 + retries);
                best = extreme_eigenpair(n, apply, ascend, opt.eig_tol, s, constraints);
                if (best.converged) break;
            }
            converged = best.converged;
            eig_estimate = best.value;
            uhat = best.vector;
        }

        // Exact re-orthogonalization against the current point.
        if (i > 0) uhat -= x * (x.dot(uhat) / x.squaredNorm());
        uhat.normalize();

        const Eigen::VectorXd u = std::sqrt(dn) * uhat;
        const double e_plus = value(x + u);
        const double e_minus = value(x - u);
        const bool take_plus = ascend ? (e_plus >= e_minus) : (e_plus <= e_minus);
        const int sign = take_plus ? 1 : -1;
        x += sign > 0 ? u : Eigen::VectorXd(-u);
        const double e = take_plus ? e_plus : e_minus;

        path.points.push_back(x);
        path.energies.push_back(e / n);
        path.steps.push_back(PathStep{i, x.squaredNorm() / n, e / n, eig_estimate,
                                      sign, converged, retries});
    }
    return path;
}

}  // namespace

SpherePath hessian_descent(const HamiltonianRealization& h, const DescentOptions& opt) {
    const auto value = [&h](const Eigen::VectorXd& x) { return h.energy(x); };
    const auto hess = [&h](const Eigen::VectorXd& x) { return h.euclidean_hess(x); };
    return run_path(h.dimension(), /*ascend=*/true, value, hess, opt);
}

LsqSystem::LsqSystem(std::vector<HamiltonianRealization> equations, double c)
    : equations_(std::move(equations)), c_(c) {
    if (equations_.empty()) throw std::invalid_argument("LsqSystem: no equations");
    n_ = equations_.front().dimension();
    for (const auto& eq : equations_) {
        if (eq.dimension() != n_) {
            throw std::invalid_argument("LsqSystem: equations must share a dimension");
        }
    }
}

LsqSystem LsqSystem::sample(const Mixture& m, int N, double alpha, double c,
                            std::uint64_t seed) {
    const int count = static_cast<int>(std::floor(alpha * N));
    if (count < 1) throw std::invalid_argument("LsqSystem: alpha N below one equation");
    std::vector<HamiltonianRealization> eqs;
    eqs.reserve(count);
    for (int i = 0; i < count; ++i) {
        eqs.push_back(HamiltonianRealization::sample(m, N, rng::derive_seed(seed, "lsq-eq", i)));
    }
    return LsqSystem(std::move(eqs), c);
}

std::vector<double> LsqSystem::equation_values(const Eigen::VectorXd& x) const {
    const double root_n = std::sqrt(static_cast<double>(n_));
    std::vector<double> out;
    out.reserve(equations_.size());
    for (const auto& eq : equations_) out.push_back(eq.energy(x) / root_n);
    return out;
}

double LsqSystem::value(const Eigen::VectorXd& x) const {
    double total = 0.0;
    for (double f : equation_values(x)) total += (f - c_) * (f - c_);
    return total;
}

Eigen::VectorXd LsqSystem::gradient(const Eigen::VectorXd& x) const {
    const double root_n = std::sqrt(static_cast<double>(n_));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
    for (const auto& eq : equations_) {
        const auto [e, ge] = eq.energy_grad(x);
        g.noalias() += (2.0 * (e / root_n - c_) / root_n) * ge;
    }
    return g;
}

Eigen::MatrixXd LsqSystem::hessian(const Eigen::VectorXd& x) const {
    const double root_n = std::sqrt(static_cast<double>(n_));
    Eigen::MatrixXd hd = Eigen::MatrixXd::Zero(n_, n_);
    for (const auto& eq : equations_) {
        const auto [e, ge] = eq.energy_grad(x);
        const Eigen::VectorXd gf = ge / root_n;
        hd.noalias() += 2.0 * gf * gf.transpose();
        hd.noalias() += (2.0 * (e / root_n - c_) / root_n) * eq.euclidean_hess(x);
    }
    return hd;
}

LsqResult least_squares_descent(const LsqSystem& sys, const DescentOptions& opt) {
    const auto value = [&sys](const Eigen::VectorXd& x) { return sys.value(x); };
    const auto hess = [&sys](const Eigen::VectorXd& x) { return sys.hessian(x); };
    LsqResult result;
    result.path = run_path(sys.dimension(), /*ascend=*/false, value, hess, opt);
    result.residuals = result.path.energies;
    return result;
}

}  // namespace pspin
