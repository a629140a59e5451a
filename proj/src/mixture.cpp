#include "pspinlab/mixture.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pspinlab/quadrature.hpp"

namespace pspin {

Mixture::Mixture(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("mixture: empty coefficient list");
    bool any = false;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (coeffs_[i] < 0.0)
            throw std::invalid_argument("mixture: negative coefficient at p=" +
                                        std::to_string(i + 1));
        if (coeffs_[i] > 0.0) any = true;
    }
    if (!any) throw std::invalid_argument("mixture: all coefficients vanish");
    while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
}

Mixture Mixture::pure(int p, double gamma_sq) {
    if (p < 1) throw std::invalid_argument("mixture: p must be >= 1");
    std::vector<double> c(static_cast<std::size_t>(p), 0.0);
    c.back() = gamma_sq;
    return Mixture(std::move(c));
}

Mixture Mixture::from_pairs(const std::vector<std::pair<int, double>>& pairs) {
    int pmax = 0;
    for (const auto& [p, g2] : pairs) {
        if (p < 1) throw std::invalid_argument("mixture: p must be >= 1");
        pmax = std::max(pmax, p);
    }
    if (pmax == 0) throw std::invalid_argument("mixture: empty pair list");
    std::vector<double> c(static_cast<std::size_t>(pmax), 0.0);
    for (const auto& [p, g2] : pairs) {
        if (c[p - 1] != 0.0) throw std::invalid_argument("mixture: duplicate p in pair list");
        c[p - 1] = g2;
    }
    return Mixture(std::move(c));
}

double Mixture::eval(double t, int order) const {
    if (order < 0 || order > 2) throw std::invalid_argument("mixture: order must be 0, 1 or 2");
    // Horner evaluation of sum_p g2_p * p!/(p-order)! * t^(p-order).
    // Terms with p < order differentiate to zero and are skipped; the loop
    // bottoms out at p = max(order, 1), whose power of t is 1 - order when
    // order = 0 (no constant term in xi) and 0 otherwise.
    double acc = 0.0;
    for (int p = max_p(); p >= order && p >= 1; --p) {
        double fall = 1.0;  // falling factorial p (p-1) ... (p-order+1)
        for (int j = 0; j < order; ++j) fall *= (p - j);
        acc = acc * t + coeffs_[p - 1] * fall;
    }
    if (order == 0) acc *= t;
    return acc;
}

double Mixture::coeff(int p) const {
    if (p < 1 || p > max_p()) return 0.0;
    return coeffs_[p - 1];
}

std::vector<std::pair<int, double>> Mixture::pairs() const {
    std::vector<std::pair<int, double>> out;
    for (int p = 1; p <= max_p(); ++p)
        if (coeffs_[p - 1] > 0.0) out.emplace_back(p, coeffs_[p - 1]);
    return out;
}

int Mixture::max_p() const { return static_cast<int>(coeffs_.size()); }

int Mixture::min_active_p() const {
    for (int p = 1; p <= max_p(); ++p)
        if (coeffs_[p - 1] > 0.0) return p;
    return 0;
}

bool Mixture::pure_p(int* p_out) const {
    int found = 0;
    for (int p = 1; p <= max_p(); ++p) {
        if (coeffs_[p - 1] > 0.0) {
            if (found) return false;
            found = p;
        }
    }
    if (p_out) *p_out = found;
    return found != 0;
}

bool Mixture::even() const {
    for (int p = 1; p <= max_p(); p += 2)
        if (coeffs_[p - 1] > 0.0) return false;
    return true;
}

bool Mixture::has_p_ge2() const {
    for (int p = 2; p <= max_p(); ++p)
        if (coeffs_[p - 1] > 0.0) return true;
    return false;
}

BandMixture::BandMixture(Mixture base, double q) : base_(std::move(base)), q_(q) {
    if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("band mixture: q must be in [0,1)");
}

double BandMixture::eval(double t, int order) const {
    const double s = q_ + (1.0 - q_) * t;
    switch (order) {
        case 0:
            return base_.eval(s) - base_.eval(q_) - base_.d1(q_) * (1.0 - q_) * t;
        case 1:
            return (1.0 - q_) * (base_.d1(s) - base_.d1(q_));
        case 2:
            return (1.0 - q_) * (1.0 - q_) * base_.d2(s);
        default:
            throw std::invalid_argument("band mixture: order must be 0, 1 or 2");
    }
}

Mixture restricted_mixture(const Mixture& m, double q) {
    if (!(q > 0.0 && q <= 1.0))
        throw std::invalid_argument("restricted mixture: q must be in (0,1]");
    std::vector<double> c = m.coeffs();
    double qp = q;
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] *= qp;
        qp *= q;
    }
    return Mixture(std::move(c));
}

double e_infinity(int p) {
    if (p < 2) throw std::invalid_argument("e_infinity: defined for p >= 2");
    return 2.0 * std::sqrt((p - 1.0) / p);
}

double alg_energy(const Mixture& m, double abs_tol) {
    if (!m.has_p_ge2())
        throw std::invalid_argument("alg_energy: mixture needs a term with p >= 2");
    // Substitute t = s^2: the integrand sqrt(xi''(t)) behaves like
    // t^{(p_min-2)/2} near 0, which has infinite slope for odd p_min; after
    // substitution the integrand 2 s sqrt(xi''(s^2)) is smooth.
    return quad::integrate(
        [&m](double s) { return 2.0 * s * std::sqrt(std::max(0.0, m.d2(s * s))); }, 0.0, 1.0,
        abs_tol);
}

ConcavityReport is_full_rsb_candidate(const Mixture& m, int grid) {
    if (grid < 8) throw std::invalid_argument("is_full_rsb_candidate: grid too small");
    ConcavityReport rep;
    rep.grid = grid;
    rep.candidate = true;
    // Second differences of phi(t) = xi''(t)^{-1/2} on a uniform grid over
    // (0,1]. Weak concavity means phi(t-h) - 2 phi(t) + phi(t+h) <= 0 up to
    // rounding; tolerate 1e-9 relative to the local scale.
    const double h = 1.0 / grid;
    auto phi = [&m](double t) {
        const double v = m.d2(t);
        if (!(v > 0.0))
            throw std::invalid_argument("is_full_rsb_candidate: xi'' vanishes on the grid");
        return 1.0 / std::sqrt(v);
    };
    double prev = phi(h), cur = phi(2 * h);
    for (int i = 3; i <= grid; ++i) {
        const double next = phi(i * h);
        const double d2 = prev - 2.0 * cur + next;
        const double scale = std::abs(prev) + std::abs(cur) + std::abs(next);
        if (d2 > 1e-9 * scale && d2 > rep.worst_violation) {
            rep.candidate = false;
            rep.worst_violation = d2;
            rep.worst_t = (i - 1) * h;
        }
        prev = cur;
        cur = next;
    }
    return rep;
}

}  // namespace pspin
