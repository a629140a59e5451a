#include "pspinlab/landscape.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pspinlab/rng.hpp"

namespace pspin {

namespace {

// Damped Riemannian Newton iteration for spherical_grad = 0. The tangent
// system uses the spherical Hessian (the exact Riemannian linearization);
// Levenberg-style damping grows until the gradient norm decreases.
bool newton_to_critical(const HamiltonianRealization& h, Eigen::VectorXd start,
                        Eigen::VectorXd& out) {
    const int n = h.dimension();
    const double root_n = std::sqrt(static_cast<double>(n));
    const double tol = 1e-10 * root_n;

    SpherePoint pt = SpherePoint::on_sphere(std::move(start));
    Eigen::VectorXd g = h.spherical_grad(pt);
    double merit = g.norm();

    double lambda = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        if (merit <= tol) {
            out = pt.coords;
            return true;
        }
        const SphericalHessian sh = h.spherical_hess(pt);
        const Eigen::MatrixXd b = sh.tangent_basis();
        const Eigen::MatrixXd a = b.transpose() * sh.dense() * b;
        const Eigen::VectorXd rhs = -b.transpose() * g;
        const double scale = a.diagonal().cwiseAbs().maxCoeff() + 1e-300;

        bool accepted = false;
        for (int inner = 0; inner < 60; ++inner) {
            Eigen::MatrixXd damped = a;
            damped.diagonal().array() += lambda;
            const Eigen::VectorXd y = damped.ldlt().solve(rhs);
            if (y.allFinite()) {
                const Eigen::VectorXd trial =
                    root_n * (pt.coords + b * y).normalized();
                SpherePoint pt_trial = SpherePoint::on_sphere(trial);
                Eigen::VectorXd g_trial = h.spherical_grad(pt_trial);
                const double m_trial = g_trial.norm();
                if (m_trial < merit) {
                    pt = std::move(pt_trial);
                    g = std::move(g_trial);
                    merit = m_trial;
                    lambda *= 0.25;
                    accepted = true;
                    break;
                }
            }
            lambda = std::max(1e-8 * scale, lambda * 10.0);
        }
        if (!accepted) return false;  // stalled away from a zero
    }
    return false;
}

CriticalPoint describe(const HamiltonianRealization& h, const Eigen::VectorXd& x) {
    CriticalPoint cp;
    cp.location = SpherePoint::on_sphere(x);
    const auto [e, grad] = h.energy_grad(x);
    const int n = h.dimension();
    cp.energy_density = e / n;
    cp.radial_derivative = x.dot(grad) / n;
    const Eigen::VectorXd eigs = h.spherical_hess(cp.location).tangent_eigenvalues();
    cp.index = static_cast<int>((eigs.array() < 0.0).count());
    return cp;
}

}  // namespace

CriticalPointSet find_critical_points(const HamiltonianRealization& h, int n_starts,
                                      std::uint64_t seed, double dedup_tol) {
    const int n = h.dimension();
    if (n > 64) throw std::invalid_argument("find_critical_points: N must be <= 64");
    if (n_starts < 1) throw std::invalid_argument("find_critical_points: n_starts >= 1");
    if (!(dedup_tol > 0.0 && dedup_tol < 1.0)) {
        throw std::invalid_argument("find_critical_points: dedup_tol in (0,1)");
    }

    CriticalPointSet set;
    set.n_starts = n_starts;

    // When every active order shares a parity, H(-x) = +/-H(x) and the
    // spherical gradient is odd or even under x -> -x, so -x is critical
    // exactly whenever x is. Found sets are then closed under the antipodal
    // map before counting or reporting.
    bool all_even = true, all_odd = true;
    for (const auto& [p, g2] : h.mixture().pairs()) {
        (p % 2 == 0 ? all_odd : all_even) = false;
    }
    const bool parity_symmetric = all_even || all_odd;

    std::vector<Eigen::VectorXd> reps;
    const auto is_known = [&](const Eigen::VectorXd& x) {
        for (const auto& r : reps) {
            if (r.dot(x) / n > 1.0 - dedup_tol) return true;
        }
        return false;
    };
    const auto closed_count = [&]() -> std::size_t {
        if (!parity_symmetric) return reps.size();
        std::vector<bool> consumed(reps.size(), false);
        std::size_t orbits = 0;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            if (consumed[i]) continue;
            ++orbits;
            for (std::size_t j = i + 1; j < reps.size(); ++j) {
                if (!consumed[j] && reps[j].dot(reps[i]) / n < -(1.0 - dedup_tol)) {
                    consumed[j] = true;
                    break;
                }
            }
        }
        return 2 * orbits;
    };

    const int quarter = (n_starts + 3) / 4;
    const int half = (n_starts + 1) / 2;
    std::size_t count_quarter = 0, count_half = 0;

    for (int s = 0; s < n_starts; ++s) {
        const std::uint64_t key = rng::derive_seed(seed, "cp-start", s);
        Eigen::VectorXd x0(n);
        for (int j = 0; j < n; ++j) x0[j] = rng::gaussian_at(key, j);

        Eigen::VectorXd x;
        if (!newton_to_critical(h, std::move(x0), x)) {
            ++set.diverged;
        } else if (!is_known(x)) {
            reps.push_back(std::move(x));
        }
        if (s + 1 == quarter) count_quarter = closed_count();
        if (s + 1 == half) count_half = closed_count();
    }
    const std::size_t count_final = closed_count();
    set.saturated = (count_quarter == count_half) && (count_half == count_final);

    // Canonicalize each found point's partner to the exact antipode and
    // complete any pair the random starts missed.
    if (parity_symmetric) {
        std::vector<Eigen::VectorXd> paired;
        std::vector<bool> consumed(reps.size(), false);
        for (std::size_t i = 0; i < reps.size(); ++i) {
            if (consumed[i]) continue;
            for (std::size_t j = i + 1; j < reps.size(); ++j) {
                if (!consumed[j] && reps[j].dot(reps[i]) / n < -(1.0 - dedup_tol)) {
                    consumed[j] = true;
                    break;
                }
            }
            paired.push_back(reps[i]);
            paired.push_back(-reps[i]);
        }
        reps = std::move(paired);
    }

    set.points.reserve(reps.size());
    for (const auto& r : reps) set.points.push_back(describe(h, r));

    std::sort(set.points.begin(), set.points.end(),
              [](const CriticalPoint& a, const CriticalPoint& b) {
                  if (a.energy_density != b.energy_density)
                      return a.energy_density < b.energy_density;
                  if (a.radial_derivative != b.radial_derivative)
                      return a.radial_derivative < b.radial_derivative;
                  return std::lexicographical_compare(
                      a.location.coords.begin(), a.location.coords.end(),
                      b.location.coords.begin(), b.location.coords.end());
              });

    int next_id = 0;
    for (std::size_t i = 0; i < set.points.size(); ++i) {
        if (set.points[i].pair_id >= 0) continue;
        for (std::size_t j = i + 1; j < set.points.size(); ++j) {
            if (set.points[j].pair_id >= 0) continue;
            const double r = set.points[i].location.coords.dot(set.points[j].location.coords) / n;
            if (r < -(1.0 - dedup_tol)) {
                set.points[i].pair_id = next_id;
                set.points[j].pair_id = next_id;
                ++next_id;
                break;
            }
        }
    }
    return set;
}

int count_in_window(const std::vector<CriticalPoint>& points, const Window& energy_window,
                    const Window& radial_window) {
    int count = 0;
    for (const auto& p : points) {
        if (p.energy_density >= energy_window.first && p.energy_density <= energy_window.second &&
            p.radial_derivative >= radial_window.first &&
            p.radial_derivative <= radial_window.second) {
            ++count;
        }
    }
    return count;
}

std::vector<ComplexityCell> empirical_complexity(const Mixture& m, const std::vector<int>& n_list,
                                                 int n_starts, const std::vector<Window>& windows,
                                                 const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("empirical_complexity: need seeds");
    if (windows.empty()) throw std::invalid_argument("empirical_complexity: need windows");

    const Window all_radial{-std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity()};
    std::vector<ComplexityCell> table;
    for (int n : n_list) {
        // One finder run per seed, shared across windows.
        std::vector<std::vector<CriticalPoint>> runs;
        bool all_saturated = true;
        for (std::uint64_t seed : seeds) {
            const auto h = HamiltonianRealization::sample(m, n, seed);
            auto set = find_critical_points(h, n_starts, rng::derive_seed(seed, "cp-run", n));
            all_saturated = all_saturated && set.saturated;
            runs.push_back(std::move(set.points));
        }
        for (std::size_t w = 0; w < windows.size(); ++w) {
            ComplexityCell cell;
            cell.n = n;
            cell.window = w;
            cell.saturated = all_saturated;
            std::vector<double> logs;
            for (const auto& pts : runs) {
                const int c = count_in_window(pts, windows[w], all_radial);
                if (c == 0) {
                    ++cell.zero_seeds;
                } else {
                    logs.push_back(std::log(static_cast<double>(c)) / n);
                }
            }
            cell.seeds_counted = static_cast<int>(logs.size());
            if (!logs.empty()) {
                double mean = 0.0;
                for (double v : logs) mean += v;
                mean /= logs.size();
                cell.mean_log_count = mean;
                if (logs.size() > 1) {
                    double ss = 0.0;
                    for (double v : logs) ss += (v - mean) * (v - mean);
                    cell.spread = std::sqrt(ss / (logs.size() - 1));
                }
            }
            table.push_back(cell);
        }
    }
    return table;
}

}  // namespace pspin
