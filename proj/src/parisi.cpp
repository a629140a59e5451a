#include "pspinlab/parisi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pspinlab/nelder_mead.hpp"

namespace pspin {

void DiscreteMeasure::validate() const {
    if (atoms.empty() || atoms.size() != weights.size())
        throw std::invalid_argument("measure: atoms/weights size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!(atoms[i] >= 0.0 && atoms[i] < 1.0))
            throw std::invalid_argument("measure: atoms must lie in [0,1)");
        if (i > 0 && !(atoms[i] > atoms[i - 1]))
            throw std::invalid_argument("measure: atoms must be strictly increasing");
        if (!(weights[i] > 0.0)) throw std::invalid_argument("measure: weights must be positive");
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("measure: weights must sum to 1");
    if (!(qhat >= atoms.back() && qhat < 1.0))
        throw std::invalid_argument("measure: qhat must lie in [q_k, 1)");
}

double cs_functional(const DiscreteMeasure& mu, const XiFunction& xi, double beta) {
    mu.validate();
    if (!(beta > 0.0)) throw std::invalid_argument("cs functional: beta must be positive");
    if (mu.atoms.front() != 0.0)
        throw std::invalid_argument(
            "cs functional: first atom must sit at 0 (the middle integral diverges otherwise)");

    const std::size_t k = mu.atoms.size();
    std::vector<double> W(k);  // cumulative distribution on [q_i, q_{i+1})
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        acc += mu.weights[i];
        W[i] = acc;
    }
    W[k - 1] = 1.0;

    double term1 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double hi = (i + 1 < k) ? mu.atoms[i + 1] : 1.0;
        term1 += W[i] * (xi(hi) - xi(mu.atoms[i]));
    }

    // D(q) = int_q^1 mu([0,s]) ds is piecewise linear with slope -W_i, so
    // each interval contributes (log D(a) - log D(b))/W_i. Written with
    // log1p of the increment ratio: stable when W_i is tiny and cancelling
    // the log(1-qhat) term exactly for measures concentrated below qhat.
    const double hat_d = 1.0 - mu.qhat;
    double middle = 0.0;
    double d_next = hat_d;
    for (std::size_t i = k; i-- > 0;) {
        const double a = mu.atoms[i];
        const double b = (i + 1 < k) ? mu.atoms[i + 1] : mu.qhat;
        const double seg = W[i] * (b - a);
        middle += std::log1p(seg / d_next) / W[i];
        d_next += seg;
    }

    return 0.5 * (beta * beta * term1 + middle + std::log(hat_d));
}

double cs_functional(const DiscreteMeasure& mu, const Mixture& m, double beta) {
    return cs_functional(mu, [&m](double t) { return m.eval(t); }, beta);
}

double cs_functional(const DiscreteMeasure& mu, const BandMixture& m, double beta) {
    return cs_functional(mu, [&m](double t) { return m.eval(t); }, beta);
}

namespace {

double sigmoid(double z) {
    z = std::clamp(z, -36.0, 36.0);
    return 1.0 / (1.0 + std::exp(-z));
}

double logit(double s) {
    s = std::clamp(s, 1e-15, 1.0 - 1e-15);
    return std::log(s / (1.0 - s));
}

// Unconstrained coordinates for a k-atom measure, k >= 2: k-1 logits for
// the successive gap fractions and k-1 weight logits relative to atom 1.
// qhat is pinned to the last atom: for step measures the functional does
// not depend on qhat on [q_k, 1), so it carries no information.
struct MeasureParam {
    int k;

    DiscreteMeasure unpack(const Eigen::VectorXd& z) const {
        DiscreteMeasure mu;
        mu.atoms.resize(k);
        mu.weights.resize(k);
        mu.atoms[0] = 0.0;
        double prev = 0.0;
        for (int j = 1; j < k; ++j) {
            double q = prev + (1.0 - prev) * sigmoid(z(j - 1));
            q = std::min(q, 1.0 - 1e-9);
            if (q <= prev) q = prev + 1e-13;
            mu.atoms[j] = q;
            prev = q;
        }
        double mx = 0.0;
        for (int j = 1; j < k; ++j) mx = std::max(mx, z(k - 2 + j));
        double norm = std::exp(0.0 - mx);
        mu.weights[0] = norm;
        for (int j = 1; j < k; ++j) {
            mu.weights[j] = std::exp(std::clamp(z(k - 2 + j), -500.0, 500.0) - mx);
            norm += mu.weights[j];
        }
        for (int j = 0; j < k; ++j) mu.weights[j] /= norm;
        mu.qhat = mu.atoms.back();
        return mu;
    }

    Eigen::VectorXd pack(const DiscreteMeasure& mu) const {
        Eigen::VectorXd z(2 * (k - 1));
        double prev = 0.0;
        for (int j = 1; j < k; ++j) {
            z(j - 1) = logit((mu.atoms[j] - prev) / (1.0 - prev));
            prev = mu.atoms[j];
        }
        for (int j = 1; j < k; ++j)
            z(k - 2 + j) = std::clamp(std::log(mu.weights[j] / mu.weights[0]), -34.0, 34.0);
        return z;
    }
};

// Reshape a measure to exactly k atoms: grow by inserting low-weight atoms
// into the widest gaps, shrink by dropping the lightest non-anchor atoms.
DiscreteMeasure pad_to_k(DiscreteMeasure mu, int k) {
    while (static_cast<int>(mu.atoms.size()) > k) {
        std::size_t drop = 1;
        for (std::size_t i = 2; i < mu.atoms.size(); ++i)
            if (mu.weights[i] < mu.weights[drop]) drop = i;
        mu.weights[drop - 1] += mu.weights[drop];
        mu.atoms.erase(mu.atoms.begin() + drop);
        mu.weights.erase(mu.weights.begin() + drop);
    }
    while (static_cast<int>(mu.atoms.size()) < k) {
        // Widest gap, counting [q_last, (1+q_last)/2] as the tail gap.
        std::size_t pos = mu.atoms.size();
        double best_gap = (1.0 - mu.atoms.back()) * 0.5;
        for (std::size_t i = 1; i < mu.atoms.size(); ++i) {
            const double gap = mu.atoms[i] - mu.atoms[i - 1];
            if (gap > best_gap) {
                best_gap = gap;
                pos = i;
            }
        }
        const double newq = (pos == mu.atoms.size())
                                ? mu.atoms.back() + best_gap * 0.5
                                : 0.5 * (mu.atoms[pos - 1] + mu.atoms[pos]);
        mu.atoms.insert(mu.atoms.begin() + pos, newq);
        mu.weights.insert(mu.weights.begin() + pos, 1e-4);
    }
    double sum = 0.0;
    for (double w : mu.weights) sum += w;
    for (double& w : mu.weights) w /= sum;
    mu.qhat = mu.atoms.back();
    return mu;
}

DiscreteMeasure uniform_init(int k) {
    DiscreteMeasure mu;
    for (int j = 0; j < k; ++j) {
        mu.atoms.push_back(0.95 * j / (k - 1));
        mu.weights.push_back(1.0 / k);
    }
    mu.qhat = mu.atoms.back();
    return mu;
}

DiscreteMeasure near_delta0_init(int k) {
    DiscreteMeasure mu;
    for (int j = 0; j < k; ++j) {
        mu.atoms.push_back(0.3 * j / (k - 1));
        mu.weights.push_back(j == 0 ? 0.99 : 0.01 / (k - 1));
    }
    mu.qhat = mu.atoms.back();
    return mu;
}

void prune_measure(CsResult& r, const XiFunction& xi, double beta) {
    DiscreteMeasure pruned;
    pruned.atoms.push_back(r.measure.atoms[0]);  // the anchor at 0 stays
    pruned.weights.push_back(r.measure.weights[0]);
    for (std::size_t i = 1; i < r.measure.atoms.size(); ++i) {
        if (r.measure.weights[i] >= 1e-8) {
            pruned.atoms.push_back(r.measure.atoms[i]);
            pruned.weights.push_back(r.measure.weights[i]);
        }
    }
    double sum = 0.0;
    for (double w : pruned.weights) sum += w;
    for (double& w : pruned.weights) w /= sum;
    pruned.qhat = pruned.atoms.back();
    r.measure = pruned;
    r.value = cs_functional(pruned, xi, beta);
}

}  // namespace

CsResult minimize_cs(const XiFunction& xi, double xi_at_1, double beta, CsOptions opt) {
    if (!(beta > 0.0)) throw std::invalid_argument("minimize_cs: beta must be positive");
    if (opt.k_max < 1) throw std::invalid_argument("minimize_cs: k_max must be >= 1");

    CsResult best;
    best.value = 0.5 * beta * beta * xi_at_1;  // delta_0, independent of qhat
    best.measure = DiscreteMeasure::delta0();

    double prev_level = best.value;
    for (int k = 2; k <= opt.k_max; ++k) {
        const MeasureParam param{k};
        auto objective = [&](const Eigen::VectorXd& z) {
            try {
                return cs_functional(param.unpack(z), xi, beta);
            } catch (const std::exception&) {
                return 1e300;
            }
        };

        std::vector<DiscreteMeasure> inits;
        inits.push_back(pad_to_k(best.measure, k));
        if (opt.warm_start) inits.push_back(pad_to_k(*opt.warm_start, k));
        inits.push_back(uniform_init(k));
        inits.push_back(near_delta0_init(k));

        nm::Options nm_opt;
        nm_opt.max_iter = 400 * param.k * 2;
        nm_opt.f_tol = 1e-14;
        nm_opt.f_tol_rel = 1e-13;
        nm_opt.x_tol = 1e-8;

        double level = std::numeric_limits<double>::infinity();
        Eigen::VectorXd level_z;
        bool level_conv = false;
        for (const auto& init : inits) {
            const auto res = nm::minimize(objective, param.pack(init), 0.6, nm_opt);
            if (res.f < level) {
                level = res.f;
                level_z = res.x;
                level_conv = res.converged;
            }
        }
        for (int r = 0; r < opt.restarts; ++r) {
            const auto res =
                nm::minimize(objective, level_z, 0.4 / static_cast<double>(1 << r), nm_opt);
            if (res.f < level) {
                level = res.f;
                level_z = res.x;
                level_conv = res.converged;
            }
        }

        if (level < best.value) {
            best.value = level;
            best.measure = param.unpack(level_z);
            best.k_used = k;
            best.converged = level_conv;
        }
        if (prev_level - level < opt.tol) break;
        prev_level = level;
    }

    prune_measure(best, xi, beta);
    return best;
}

CsResult minimize_cs(const Mixture& m, double beta, CsOptions opt) {
    return minimize_cs([&m](double t) { return m.eval(t); }, m.eval(1.0), beta, opt);
}

CsResult minimize_cs(const BandMixture& m, double beta, CsOptions opt) {
    return minimize_cs([&m](double t) { return m.eval(t); }, m.eval(1.0), beta, opt);
}

std::vector<std::string> FreeEnergyCurve::check(double slack) const {
    std::vector<std::string> violations;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        if (values[i + 1] < values[i] - slack * std::max(1.0, std::abs(values[i])))
            violations.push_back("free energy decreases between beta=" +
                                 std::to_string(betas[i]) + " and beta=" +
                                 std::to_string(betas[i + 1]));
    }
    std::vector<double> slopes;
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        slopes.push_back((values[i + 1] - values[i]) / (betas[i + 1] - betas[i]));
    for (std::size_t i = 0; i + 1 < slopes.size(); ++i) {
        if (slopes[i + 1] < slopes[i] - slack * (1.0 + std::abs(slopes[i])))
            violations.push_back("free energy not convex around beta=" +
                                 std::to_string(betas[i + 1]));
    }
    return violations;
}

FreeEnergyCurve free_energy_curve(const Mixture& m, const std::vector<double>& betas,
                                  int k_max, double tol) {
    if (betas.empty()) throw std::invalid_argument("free_energy_curve: empty beta grid");
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (!(betas[i] > 0.0))
            throw std::invalid_argument("free_energy_curve: betas must be positive");
        if (i > 0 && !(betas[i] > betas[i - 1]))
            throw std::invalid_argument("free_energy_curve: betas must be increasing");
    }
    FreeEnergyCurve curve;
    curve.betas = betas;
    CsOptions opt;
    opt.k_max = k_max;
    opt.tol = tol;
    for (double beta : betas) {
        const CsResult r = minimize_cs(m, beta, opt);
        curve.values.push_back(r.value);
        curve.measures.push_back(r.measure);
        curve.converged.push_back(r.converged);
        opt.warm_start = r.measure;
    }
    return curve;
}

GroundState ground_state(const Mixture& m, double tol, int j_max, int k_max) {
    GroundState gs;
    CsOptions opt;
    opt.k_max = k_max;
    for (int j = 0; j <= j_max; ++j) {
        const double beta = std::pow(2.0, j);
        const CsResult r = minimize_cs(m, beta, opt);
        opt.warm_start = r.measure;
        gs.betas.push_back(beta);
        gs.values.push_back(r.value);
        if (j >= 1) {
            const std::size_t n = gs.values.size();
            gs.slopes.push_back((gs.values[n - 1] - gs.values[n - 2]) /
                                (gs.betas[n - 1] - gs.betas[n - 2]));
        }
        if (gs.slopes.size() >= 2) {
            const double s1 = gs.slopes[gs.slopes.size() - 2];
            const double s2 = gs.slopes.back();
            if (std::abs(s2 - s1) < tol) {
                gs.settled = true;
                break;
            }
        }
    }
    // One geometric-sequence extrapolation step: for F ~ beta E - a log beta
    // the secant slopes approach E as E - c 2^{-j}, so 2 s_J - s_{J-1}
    // removes the leading deficit.
    const std::size_t ns = gs.slopes.size();
    if (ns >= 2)
        gs.value = 2.0 * gs.slopes[ns - 1] - gs.slopes[ns - 2];
    else if (ns == 1)
        gs.value = gs.slopes[0];
    return gs;
}

double volume_exponent(const FreeEnergyCurve& curve, double E) {
    const std::size_t n = curve.values.size();
    if (n < 2) throw std::invalid_argument("volume_exponent: curve too short");
    const double s_max = (curve.values[n - 1] - curve.values[n - 2]) /
                         (curve.betas[n - 1] - curve.betas[n - 2]);
    if (!(std::abs(E) < s_max))
        throw std::invalid_argument(
            "volume_exponent: |E| outside the slope range covered by the curve");

    // Grid objective with the exact F(0)=0 anchor prepended.
    std::vector<double> b(1, 0.0), g(1, 0.0);
    b.insert(b.end(), curve.betas.begin(), curve.betas.end());
    for (std::size_t i = 0; i < n; ++i) g.push_back(curve.values[i] - curve.betas[i] * E);

    std::size_t lo = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
        if (g[i] < g[lo]) lo = i;
    double best = g[lo];

    // Parabolic refinement through the bracketing triple.
    if (lo > 0 && lo + 1 < g.size()) {
        const double x1 = b[lo - 1], x2 = b[lo], x3 = b[lo + 1];
        const double y1 = g[lo - 1], y2 = g[lo], y3 = g[lo + 1];
        const double d21 = (y2 - y1) / (x2 - x1), d32 = (y3 - y2) / (x3 - x2);
        const double curv = (d32 - d21) / (x3 - x1);
        if (curv > 0.0) {
            const double vertex = 0.5 * (x1 + x2 - d21 / curv);
            if (vertex > x1 && vertex < x3) {
                const double val =
                    y1 + d21 * (vertex - x1) + curv * (vertex - x1) * (vertex - x2);
                best = std::min(best, val);
            }
        }
    }
    return best;
}

double tap_correction(const Mixture& m, double beta, double q, int k_max, double tol) {
    if (!(q >= 0.0 && q < 1.0))
        throw std::invalid_argument("tap_correction: q must be in [0,1)");
    CsOptions opt;
    opt.k_max = k_max;
    opt.tol = tol;
    const CsResult r = minimize_cs(band_mixture(m, q), beta, opt);
    return 0.5 * std::log1p(-q) + r.value;
}

TapScan tap_scan(const Mixture& m, double beta, const std::vector<double>& q_grid,
                 double tol, int k_max) {
    if (q_grid.empty()) throw std::invalid_argument("tap_scan: empty q grid");
    for (double q : q_grid)
        if (!(q >= 0.0 && q <= 1.0 - 1e-3))
            throw std::invalid_argument("tap_scan: grid must lie in [0, 1-1e-3]");

    TapScan scan;
    scan.f_beta = minimize_cs(m, beta, CsOptions{k_max, 1e-9, 5, std::nullopt}).value;
    for (double q : q_grid) {
        TapScanRow row;
        row.q = q;
        if (q == 0.0) {
            row.e_star = 0.0;  // the radius-0 sphere is the single point 0
        } else {
            const GroundState gs = ground_state(restricted_mixture(m, q), 1e-4, 14, k_max);
            row.e_star = gs.value;
            row.e_star_settled = gs.settled;
        }
        row.f_tap = tap_correction(m, beta, q, k_max);
        row.g = beta * row.e_star + row.f_tap;
        scan.rows.push_back(row);
    }
    scan.f_rep = -std::numeric_limits<double>::infinity();
    for (const auto& row : scan.rows) scan.f_rep = std::max(scan.f_rep, row.g);
    for (const auto& row : scan.rows)
        if (row.g >= scan.f_rep - tol) scan.multisamplable.push_back(row.q);
    return scan;
}

}  // namespace pspin
