#pragma once

#include <utility>
#include <vector>

namespace pspin {

// Mixture function xi(t) = sum_p gamma_p^2 t^p of a spherical mixed p-spin
// model, stored as the coefficient list {gamma_p^2} indexed by p >= 1.
class Mixture {
  public:
    // coeffs[p-1] = gamma_p^2. Coefficients must be >= 0 and at least one
    // must be positive.
    explicit Mixture(std::vector<double> coeffs);

    static Mixture pure(int p, double gamma_sq = 1.0);
    // Build from (p, gamma_p^2) pairs, the serialization used by configs.
    static Mixture from_pairs(const std::vector<std::pair<int, double>>& pairs);

    // d^order/dt^order xi(t) for order in {0,1,2}.
    double eval(double t, int order = 0) const;
    double d1(double t) const { return eval(t, 1); }
    double d2(double t) const { return eval(t, 2); }

    double coeff(int p) const;  // gamma_p^2, zero if p beyond stored range
    const std::vector<double>& coeffs() const { return coeffs_; }
    std::vector<std::pair<int, double>> pairs() const;  // active terms only

    int max_p() const;
    int min_active_p() const;
    bool pure_p(int* p_out = nullptr) const;  // single active term?
    bool even() const;                        // only even p active
    bool has_p_ge2() const;

  private:
    std::vector<double> coeffs_;
};

// Mixture of the band model at overlap q:
//   xi_q(t) = xi(q + (1-q) t) - xi(q) - xi'(q) (1-q) t.
// Derivatives follow by the chain rule; xi_q(0) = xi_q'(0) = 0 exactly.
class BandMixture {
  public:
    BandMixture(Mixture base, double q);

    double eval(double t, int order = 0) const;
    double d1(double t) const { return eval(t, 1); }
    double d2(double t) const { return eval(t, 2); }

    const Mixture& base() const { return base_; }
    double q() const { return q_; }

  private:
    Mixture base_;
    double q_;
};

inline BandMixture band_mixture(const Mixture& m, double q) { return BandMixture(m, q); }

// Mixture of the model restricted to the sphere of radius sqrt(qN):
// xi(qt), i.e. coefficients gamma_p^2 q^p.
Mixture restricted_mixture(const Mixture& m, double q);

// Threshold energy 2 sqrt((p-1)/p) of the pure p-spin model, p >= 2.
double e_infinity(int p);

// Best energy reachable by Lipschitz optimization algorithms:
// integral over [0,1] of sqrt(xi''(t)) dt. Requires some p >= 2 term.
double alg_energy(const Mixture& m, double abs_tol = 1e-12);

struct ConcavityReport {
    bool candidate = false;     // xi''(t)^{-1/2} weakly concave on (0,1]?
    double worst_violation = 0; // largest positive second difference found
    double worst_t = 0;
    int grid = 0;
};

// Grid check of weak concavity of t -> xi''(t)^{-1/2} on (0,1].
ConcavityReport is_full_rsb_candidate(const Mixture& m, int grid = 4096);

}  // namespace pspin
