#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pspinlab/mixture.hpp"

namespace pspin {

// k-RSB candidate Parisi measure: atoms 0 = q_1 < ... < q_k with positive
// weights summing to 1, plus the support bound qhat in [q_k, 1).
struct DiscreteMeasure {
    std::vector<double> atoms;
    std::vector<double> weights;
    double qhat = 0.0;

    static DiscreteMeasure delta0() { return {{0.0}, {1.0}, 0.0}; }
    void validate() const;
};

// xi as a plain function of t, so that the Crisanti-Sommers machinery works
// unchanged for band mixtures.
using XiFunction = std::function<double(double)>;

// Crisanti-Sommers functional
//   P(mu) = 1/2 (beta^2 int_0^1 mu([0,q]) xi'(q) dq
//           + int_0^qhat dq / int_q^1 mu([0,s]) ds + log(1-qhat))
// in closed form for step-function mu([0,.)): both integrals reduce to
// finite sums (the inner integral is piecewise linear, its reciprocal
// integrates to logarithms). The first atom must sit at 0.
double cs_functional(const DiscreteMeasure& mu, const XiFunction& xi, double beta);
double cs_functional(const DiscreteMeasure& mu, const Mixture& m, double beta);
double cs_functional(const DiscreteMeasure& mu, const BandMixture& m, double beta);

struct CsOptions {
    int k_max = 8;
    double tol = 1e-9;     // stop growing k when the gain drops below this
    int restarts = 5;      // refinement restarts around the incumbent
    std::optional<DiscreteMeasure> warm_start;
};

struct CsResult {
    double value = 0.0;
    DiscreteMeasure measure;
    int k_used = 1;
    bool converged = true;  // false if a simplex search hit its iteration cap
};

// Minimize the CS functional over k-RSB measures, k = 1..k_max.
CsResult minimize_cs(const Mixture& m, double beta, CsOptions opt = {});
CsResult minimize_cs(const BandMixture& m, double beta, CsOptions opt = {});
CsResult minimize_cs(const XiFunction& xi, double xi_at_1, double beta, CsOptions opt = {});

struct FreeEnergyCurve {
    std::vector<double> betas;
    std::vector<double> values;
    std::vector<DiscreteMeasure> measures;
    std::vector<bool> converged;

    // Monotonicity/convexity diagnostics; empty means clean.
    std::vector<std::string> check(double slack = 1e-8) const;
};

FreeEnergyCurve free_energy_curve(const Mixture& m, const std::vector<double>& betas,
                                  int k_max = 8, double tol = 1e-9);

struct GroundState {
    double value = 0.0;   // extrapolated large-beta slope of F
    bool settled = false; // successive slopes stabilized before the cap
    std::vector<double> betas;
    std::vector<double> values;
    std::vector<double> slopes;  // raw secant slopes, for auditing
};

// Ground-state energy from the large-beta slope of F along beta_j = 2^j,
// j <= j_max; settles when consecutive secant slopes differ by < tol.
GroundState ground_state(const Mixture& m, double tol = 1e-4, int j_max = 14, int k_max = 8);

// Large-deviation rate V(E) = min_{beta >= 0} (F(beta) - beta E), evaluated
// on the curve grid (with the exact anchor F(0) = 0) plus parabolic
// refinement. Rejects E outside the slope range the curve covers.
double volume_exponent(const FreeEnergyCurve& curve, double E);

// F_TAP(q) = 1/2 log(1-q) + F(xi_q, beta).
double tap_correction(const Mixture& m, double beta, double q, int k_max = 8,
                      double tol = 1e-9);

struct TapScanRow {
    double q = 0.0;
    double e_star = 0.0;      // ground state of the restricted mixture
    double f_tap = 0.0;       // TAP correction at q
    double g = 0.0;           // beta e_star + f_tap
    bool e_star_settled = true;
};

struct TapScan {
    double f_rep = 0.0;                  // max_q G(q)
    double f_beta = 0.0;                 // F(beta) for comparison
    std::vector<double> multisamplable;  // {q : G(q) >= f_rep - tol}
    std::vector<TapScanRow> rows;
};

TapScan tap_scan(const Mixture& m, double beta, const std::vector<double>& q_grid,
                 double tol = 1e-2, int k_max = 8);

}  // namespace pspin
