#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pspinlab/gibbs.hpp"
#include "pspinlab/hamiltonian.hpp"
#include "pspinlab/mixture.hpp"
#include "pspinlab/optimizer.hpp"
#include "pspinlab/quadrature.hpp"
#include "pspinlab/rng.hpp"

using pspin::BandFeOptions;
using pspin::BandSpec;
using pspin::Chain;
using pspin::HamiltonianRealization;
using pspin::Mixture;
using pspin::MultisampVerdict;
using pspin::mcmc_chain;
using pspin::overlap_statistics;

namespace {

// Equal-probability bin edges for the sphere overlap marginal density
// (1-t^2)^{(N-3)/2} on [-1,1], by bisection on the quadrature CDF.
std::vector<double> marginal_edges(int n, int bins) {
    const double a = 0.5 * (n - 3);
    const auto dens = [a](double t) { return std::pow(1.0 - t * t, a); };
    const double z = pspin::quad::integrate(dens, -1.0, 1.0, 1e-13);
    std::vector<double> edges{-1.0};
    for (int b = 1; b < bins; ++b) {
        const double target = static_cast<double>(b) / bins;
        double lo = -1.0, hi = 1.0;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (pspin::quad::integrate(dens, -1.0, mid, 1e-13) / z < target ? lo : hi) = mid;
        }
        edges.push_back(0.5 * (lo + hi));
    }
    edges.push_back(1.0);
    return edges;
}

double chi2_against_equal_bins(const std::vector<double>& values,
                               const std::vector<double>& edges) {
    const int bins = static_cast<int>(edges.size()) - 1;
    std::vector<int> counts(bins, 0);
    for (double v : values) {
        const int b = static_cast<int>(
                          std::lower_bound(edges.begin(), edges.end(), v) - edges.begin()) -
                      1;
        ++counts[std::clamp(b, 0, bins - 1)];
    }
    const double expect = static_cast<double>(values.size()) / bins;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
    return chi2;
}

std::vector<double> cross_chain_overlaps(const pspin::OverlapStats& st) {
    std::vector<double> out;
    const int total = static_cast<int>(st.array.samples.size());
    for (int i = 0; i < total; ++i) {
        for (int j = i + 1; j < total; ++j) {
            if (st.array.chain_of[i] != st.array.chain_of[j]) {
                out.push_back(st.array.overlaps(i, j));
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("metropolis acceptance rule satisfies detailed balance on a 3-state toy") {
    // Target pi proportional to {1, 2, 5}; proposal uniform over the other
    // two states; acceptance min(1, pi_j/pi_i) as in the sphere kernel.
    const double weight[3] = {1.0, 2.0, 5.0};
    long counts[3] = {0, 0, 0};
    int state = 0;
    const long steps = 200000;
    for (long s = 0; s < steps; ++s) {
        const std::uint64_t key = pspin::rng::mix(424242, static_cast<std::uint64_t>(s));
        const double u1 = pspin::rng::to_unit(pspin::rng::splitmix64(key ^ 0x1111));
        const double u2 = pspin::rng::to_unit(pspin::rng::splitmix64(key ^ 0x2222));
        const int prop = (state + 1 + (u1 < 0.5 ? 0 : 1)) % 3;
        if (weight[prop] >= weight[state] || u2 < weight[prop] / weight[state]) state = prop;
        ++counts[state];
    }
    for (int i = 0; i < 3; ++i) {
        CHECK(static_cast<double>(counts[i]) / steps ==
              doctest::Approx(weight[i] / 8.0).epsilon(0.03));
    }
}

TEST_CASE("beta = 0 chain samples the uniform sphere measure") {
    const int n = 50;
    const auto h = HamiltonianRealization::sample(Mixture::pure(2, 1.0), n, 7);
    const Chain c = mcmc_chain(h, 0.0, 12500, 3);

    // Everything is accepted at beta = 0 and the tuner inflates the step
    // until proposals are nearly independent uniforms.
    CHECK(c.acceptance == 1.0);
    CHECK(c.step_scale > 10.0);
    CHECK_FALSE(c.untunable);
    CHECK(c.samples.size() == 10000);  // 20% burn-in, thin 1
    CHECK(c.sample_energies.size() == c.samples.size());

    // Single-coordinate marginal x_1/sqrt(N) against the exact density,
    // 20 equal-probability bins; 36.19 is the 99th chi-square percentile.
    std::vector<double> t;
    t.reserve(c.samples.size());
    for (const auto& s : c.samples) t.push_back(s.coords[0] / std::sqrt(static_cast<double>(n)));
    CHECK(chi2_against_equal_bins(t, marginal_edges(n, 20)) < 36.19);
}

TEST_CASE("chains are deterministic in the seed and flag untunable acceptance") {
    const auto h = HamiltonianRealization::sample(Mixture({0, 1.0, 0.5}), 30, 12);
    const Chain a = mcmc_chain(h, 0.7, 2000, 5);
    const Chain b = mcmc_chain(h, 0.7, 2000, 5);
    const Chain c = mcmc_chain(h, 0.7, 2000, 6);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].coords == b.samples[i].coords);
    }
    CHECK(a.acceptance == b.acceptance);
    CHECK(a.samples[0].coords != c.samples[0].coords);
    CHECK(a.acceptance > 0.2);
    CHECK(a.acceptance < 0.5);

    // A band far thinner than the minimal proposal scale can resolve:
    // almost every proposal leaves it, so tuning bottoms out and flags.
    const auto h2 = HamiltonianRealization::sample(Mixture::pure(2, 1.0), 40, 1);
    BandSpec thin;
    thin.center = Eigen::VectorXd::Ones(40) * std::sqrt(0.5);  // q = 0.5
    thin.delta = 1e-7;
    pspin::McmcOptions mo;
    mo.band = thin;
    const Chain frozen = mcmc_chain(h2, 0.0, 40000, 2, mo);
    CHECK(frozen.untunable);
    CHECK(frozen.acceptance < 0.05);

    CHECK_THROWS_AS(mcmc_chain(h, -0.1, 1000, 1), std::invalid_argument);
    CHECK_THROWS_AS(mcmc_chain(h, 1.0, 5, 1), std::invalid_argument);
}

TEST_CASE("pure 2-spin at large beta aligns with the top eigenvector") {
    const int n = 100;
    const double beta = 30.0;
    const auto h = HamiltonianRealization::sample(Mixture::pure(2, 1.0), n, 11);

    const auto& t = h.tensor(2);
    Eigen::MatrixXd s(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = 0.5 * (t[i * n + j] + t[j * n + i]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const Eigen::VectorXd v = es.eigenvectors().col(n - 1);

    // Laplace (harmonic) oracle around the top eigenvector: each transverse
    // mode j carries variance 1/(2 beta sqrt(N) (lambda_max - lambda_j)).
    double transverse = 0.0;
    for (int j = 0; j < n - 1; ++j) {
        transverse += 1.0 / (2.0 * beta * std::sqrt(static_cast<double>(n)) *
                             (es.eigenvalues()[n - 1] - es.eigenvalues()[j]));
    }
    const double predicted_r2 = 1.0 - transverse;

    const Chain c = mcmc_chain(h, beta, 40000, 5);
    double r2 = 0.0;
    for (const auto& x : c.samples) {
        const double r = x.coords.dot(v) / std::sqrt(static_cast<double>(n));
        r2 += r * r;
    }
    r2 /= c.samples.size();
    CHECK(r2 > 0.9);
    CHECK(r2 == doctest::Approx(predicted_r2).epsilon(0.012));
}

TEST_CASE("overlap statistics: array invariants and high-temperature tails") {
    const int n = 200;
    const auto h = HamiltonianRealization::sample(Mixture::pure(2, 1.0), n, 21);
    const Chain c1 = mcmc_chain(h, 0.1, 3000, 1);
    const Chain c2 = mcmc_chain(h, 0.1, 3000, 2);
    const auto st = overlap_statistics({c1, c2}, 40, 70);

    const int total = static_cast<int>(st.array.samples.size());
    CHECK(total == 140);
    CHECK(st.array.overlaps.rows() == total);
    for (int i = 0; i < total; ++i) {
        CHECK(st.array.overlaps(i, i) == doctest::Approx(1.0).epsilon(1e-12));
        for (int j = 0; j < total; ++j) {
            CHECK(st.array.overlaps(i, j) == st.array.overlaps(j, i));
            CHECK(std::abs(st.array.overlaps(i, j)) <= 1.0 + 1e-12);
        }
    }
    CHECK(st.cross_histogram.total == 70 * 70);
    long hist_sum = 0;
    for (int ccount : st.cross_histogram.counts) hist_sum += ccount;
    CHECK(hist_sum == st.cross_histogram.total);

    // High temperature: overlaps concentrate at 0.
    const auto rs = cross_chain_overlaps(st);
    long big = 0;
    for (double r : rs) big += std::abs(r) > 0.2 ? 1 : 0;
    CHECK(static_cast<double>(big) / rs.size() < 0.03);

    CHECK_THROWS_AS(overlap_statistics({c1}), std::invalid_argument);
    CHECK_THROWS_AS(overlap_statistics({c1, Chain{}}), std::invalid_argument);
}

TEST_CASE("beta = 0 cross-chain overlaps match the uniform-sphere density") {
    const int n = 50;
    const auto h = HamiltonianRealization::sample(Mixture::pure(2, 1.0), n, 7);
    const Chain c1 = mcmc_chain(h, 0.0, 12500, 31);
    const Chain c2 = mcmc_chain(h, 0.0, 12500, 32);
    const auto st = overlap_statistics({c1, c2}, 40, 100);
    const auto rs = cross_chain_overlaps(st);
    REQUIRE(rs.size() == 10000);
    CHECK(chi2_against_equal_bins(rs, marginal_edges(n, 20)) < 36.19);
}

TEST_CASE("even mixture: cross-chain overlap law is symmetric under R -> -R") {
    // 12 independent two-chain groups give iid group means; under the
    // H(x) = H(-x) symmetry each has zero expectation.
    const auto h = HamiltonianRealization::sample(Mixture({0, 1.0, 0, 0.5}), 20, 8);
    std::vector<double> group_means;
    for (int g = 0; g < 12; ++g) {
        const Chain a = mcmc_chain(h, 0.5, 1800, 100 + 2 * g);
        const Chain b = mcmc_chain(h, 0.5, 1800, 101 + 2 * g);
        const auto rs = cross_chain_overlaps(overlap_statistics({a, b}, 40, 50));
        double mean = 0.0;
        for (double r : rs) mean += r;
        group_means.push_back(mean / rs.size());
    }
    double m = 0.0;
    for (double v : group_means) m += v;
    m /= group_means.size();
    double ss = 0.0;
    for (double v : group_means) ss += (v - m) * (v - m);
    const double se = std::sqrt(ss / (group_means.size() - 1) / group_means.size());
    CHECK(std::abs(m / se) <= 4.0);  // ~t(11), 4.0 is beyond the 99.8th pct
}

TEST_CASE("band log-volume: exact cases, quadrature oracle, Monte Carlo, trends") {
    using pspin::band_log_volume;

    CHECK(band_log_volume(0.0, 0.05, 100) == 0.0);
    // Window covering every attainable overlap: full mass.
    CHECK(band_log_volume(0.25, 1.0, 50) == 0.0);

    // Independent linear-domain quadrature of the marginal density.
    for (int n : {10, 25, 40}) {
        for (double q : {0.2, 0.5}) {
            const double delta = 0.05;
            const double a = 0.5 * (n - 3);
            const auto dens = [a](double t) { return std::pow(1.0 - t * t, a); };
            const double lo = std::max((q - delta) / std::sqrt(q), -1.0);
            const double hi = std::min((q + delta) / std::sqrt(q), 1.0);
            const double direct =
                std::log(pspin::quad::integrate(dens, lo, hi, 1e-15) /
                         pspin::quad::integrate(dens, -1.0, 1.0, 1e-15)) /
                n;
            CHECK(band_log_volume(q, delta, n) == doctest::Approx(direct).epsilon(1e-10));
        }
    }

    // Monte Carlo oracle (t = z_1/|z| over Gaussian vectors) in a regime
    // with enough hits for a meaningful comparison.
    struct Case {
        double q, delta;
        int n;
    };
    for (const Case cs : {Case{0.3, 0.05, 20}, Case{0.5, 0.05, 25}}) {
        long hits = 0;
        const long trials = 400000;
        for (long i = 0; i < trials; ++i) {
            const std::uint64_t key = pspin::rng::mix(999, static_cast<std::uint64_t>(i));
            double z0 = 0.0, s2 = 0.0;
            for (int j = 0; j < cs.n; ++j) {
                const double z = pspin::rng::gaussian_at(key, j);
                if (j == 0) z0 = z;
                s2 += z * z;
            }
            const double t = z0 / std::sqrt(s2);
            if (std::abs(t * std::sqrt(cs.q) - cs.q) <= cs.delta) ++hits;
        }
        REQUIRE(hits > 50);
        const double mc = std::log(static_cast<double>(hits) / trials) / cs.n;
        CHECK(std::abs(band_log_volume(cs.q, cs.delta, cs.n) - mc) <= 0.01);
    }

    // Narrower bands have less mass; delta_N ~ N^{-1/2} approaches the
    // (1/2) log(1-q) limit from above.
    CHECK(band_log_volume(0.5, 0.1, 50) > band_log_volume(0.5, 0.05, 50));
    CHECK(band_log_volume(0.5, 0.05, 50) > band_log_volume(0.5, 0.02, 50));
    const double limit = 0.5 * std::log(0.5);
    double prev_gap = 1e30;
    for (int n : {50, 100, 200, 400}) {
        const double v = band_log_volume(0.5, 1.0 / std::sqrt(static_cast<double>(n)), n);
        CHECK(v > limit);
        CHECK(v - limit < prev_gap);
        prev_gap = v - limit;
    }

    CHECK_THROWS_AS(band_log_volume(1.0, 0.1, 50), std::invalid_argument);
    CHECK_THROWS_AS(band_log_volume(-0.1, 0.1, 50), std::invalid_argument);
    CHECK_THROWS_AS(band_log_volume(0.5, 0.0, 50), std::invalid_argument);
    CHECK_THROWS_AS(band_log_volume(0.5, 0.1, 1), std::invalid_argument);
}

TEST_CASE("band-restricted chains stay in the band and start at the center overlap") {
    const int n = 32;
    const auto h = HamiltonianRealization::sample(Mixture::pure(3, 1.0), n, 9);
    Eigen::VectorXd g(n);
    for (int j = 0; j < n; ++j) g[j] = pspin::rng::gaussian_at(77, j);
    BandSpec spec;
    spec.center = std::sqrt(0.36 * n) * g.normalized();
    spec.delta = 0.05;

    pspin::McmcOptions opts;
    opts.band = spec;
    const Chain c = mcmc_chain(h, 1.0, 4000, 3, opts);
    REQUIRE(!c.samples.empty());
    for (const auto& x : c.samples) CHECK(spec.contains(x.coords, n));
    CHECK(c.acceptance > 0.05);

    BandSpec bad;
    bad.center = Eigen::VectorXd::Ones(n) * 2.0;  // |m|^2 = 4N > N
    bad.delta = 0.1;
    CHECK_THROWS_AS(bad.validate(n), std::invalid_argument);
}

TEST_CASE("band free energy: beta = 0 anchor and the annealed upper bound") {
    using pspin::band_free_energy;
    const Mixture m = Mixture::pure(2, 1.0);

    {
        const auto h = HamiltonianRealization::sample(m, 40, 2);
        BandSpec spec;
        spec.center = Eigen::VectorXd::Zero(40);
        spec.delta = 1.0;
        const auto fe = band_free_energy(h, spec, 0.0, 4, {1, 2});
        CHECK(fe.value == fe.log_volume);
        CHECK(fe.log_volume == 0.0);
        CHECK_THROWS_AS(band_free_energy(h, spec, -1.0, 4, {1}), std::invalid_argument);
        CHECK_THROWS_AS(band_free_energy(h, spec, 1.0, 4, {}), std::invalid_argument);
        CHECK_THROWS_AS(band_free_energy(h, spec, 1.0, 1, {1}), std::invalid_argument);
    }

    // Jensen direction: the disorder-averaged unrestricted estimate sits
    // below (1/N) log E Z = beta^2 xi(1)/2 up to sampling error.
    const double beta = 0.35;
    std::vector<double> values;
    BandFeOptions opts;
    opts.n_steps = 3000;
    for (std::uint64_t js = 1; js <= 6; ++js) {
        const auto h = HamiltonianRealization::sample(m, 60, js);
        BandSpec spec;
        spec.center = Eigen::VectorXd::Zero(60);
        spec.delta = 1.0;
        const auto fe = band_free_energy(h, spec, beta, 5, {js * 100 + 1}, opts);
        CHECK_FALSE(fe.mixing_flag);
        CHECK(std::abs(fe.mean_energy.front()) < 0.05);  // <H/N> at beta' = 0
        values.push_back(fe.value);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (values.size() - 1) / values.size());
    const double annealed = beta * beta * m.eval(1.0, 0) / 2.0;
    CHECK(mean <= annealed + 3.0 * se);
    CHECK(mean > annealed - 0.02);  // high temperature: bound is nearly tight
}

TEST_CASE("band free energy of a sub-band never exceeds the full-sphere value") {
    const int n = 32;
    const auto h = HamiltonianRealization::sample(Mixture::pure(3, 1.0), n, 4);
    Eigen::VectorXd g(n);
    for (int j = 0; j < n; ++j) g[j] = pspin::rng::gaussian_at(5150, j);

    BandSpec band;
    band.center = std::sqrt(0.36 * n) * g.normalized();
    band.delta = 0.05;
    BandSpec full;
    full.center = Eigen::VectorXd::Zero(n);
    full.delta = 1.0;

    BandFeOptions opts;
    opts.n_steps = 2500;
    const auto fe_band = band_free_energy(h, band, 1.0, 5, {11, 12}, opts);
    const auto fe_full = band_free_energy(h, full, 1.0, 5, {11, 12}, opts);
    CHECK(fe_band.value <= fe_full.value + 3.0 * (fe_band.std_error + fe_full.std_error) + 0.01);
}

TEST_CASE("optimizer landing points make better band centers than random ones") {
    const Mixture m3 = Mixture::pure(3, 1.0);
    const int n = 32;
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto h = HamiltonianRealization::sample(m3, n, seed);
        pspin::DescentOptions d;
        d.k = 25;
        d.seed = seed;
        const auto path = hessian_descent(h, d);
        const Eigen::VectorXd m_opt = path.points[9];  // radius^2 = 0.36 N

        Eigen::VectorXd g(n);
        const std::uint64_t key = pspin::rng::derive_seed(seed, "rand-center", 0);
        for (int j = 0; j < n; ++j) g[j] = pspin::rng::gaussian_at(key, j);
        const Eigen::VectorXd m_rand = std::sqrt(0.36 * n) * g.normalized();

        BandSpec so;
        so.center = m_opt;
        so.delta = 0.05;
        BandSpec sr;
        sr.center = m_rand;
        sr.delta = 0.05;
        BandFeOptions opts;
        opts.n_steps = 2500;
        const auto feo = pspin::band_free_energy(h, so, 2.0, 5, {seed * 10 + 1, seed * 10 + 2}, opts);
        const auto fer = pspin::band_free_energy(h, sr, 2.0, 5, {seed * 10 + 1, seed * 10 + 2}, opts);
        wins += feo.value > fer.value ? 1 : 0;
    }
    CHECK(wins >= 4);
}

TEST_CASE("multisamplability diagnostic: verdicts at q = 0 and deep q") {
    using pspin::multisamplability_diagnostic;
    const Mixture m({0, 1.0, 0.5});
    const auto h = HamiltonianRealization::sample(m, 40, 17);

    const auto r2 = multisamplability_diagnostic(h, 0.2, 0.0, 2, 0.1, {1, 2, 3});
    CHECK_FALSE(r2.is_bound);
    CHECK(r2.hits >= 50);
    CHECK(r2.verdict == MultisampVerdict::Consistent);
    CHECK(r2.estimate >= -0.05);
    CHECK(r2.estimate <= 3.0 * r2.std_error);  // probabilities never exceed 1

    const auto r3 = multisamplability_diagnostic(h, 0.2, 0.0, 3, 0.15, {1, 2, 3});
    CHECK(r3.verdict == MultisampVerdict::Consistent);
    CHECK(r3.trials > 0);

    const auto deep = multisamplability_diagnostic(h, 0.2, 0.9, 2, 0.05, {1, 2, 3});
    CHECK(deep.is_bound);
    CHECK(deep.hits == 0);
    CHECK(deep.estimate < -0.1);
    CHECK(deep.verdict == MultisampVerdict::Inconclusive);

    CHECK_THROWS_AS(multisamplability_diagnostic(h, 0.2, 0.0, 4, 0.1, {1}), std::invalid_argument);
    CHECK_THROWS_AS(multisamplability_diagnostic(h, 0.2, 1.0, 2, 0.1, {1}), std::invalid_argument);
    CHECK_THROWS_AS(multisamplability_diagnostic(h, 0.2, 0.0, 2, 0.1, {}), std::invalid_argument);
    const auto big = HamiltonianRealization::sample(m, 70, 1);
    CHECK_THROWS_AS(multisamplability_diagnostic(big, 0.2, 0.0, 2, 0.1, {1}), std::invalid_argument);
}
