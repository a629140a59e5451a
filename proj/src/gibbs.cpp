#include "pspinlab/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pspinlab/rng.hpp"

namespace pspin {

namespace {

constexpr double sigma_min = 1e-4;
constexpr double sigma_max = 1e4;

double logsumexp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / (v.size() - 1));
}

}  // namespace

void BandSpec::validate(int n) const {
    if (center.size() != n) throw std::invalid_argument("BandSpec: center dimension mismatch");
    if (!(delta > 0.0)) throw std::invalid_argument("BandSpec: delta must be positive");
    if (center.squaredNorm() > n * (1.0 + 1e-12)) {
        throw std::invalid_argument("BandSpec: center norm exceeds sqrt(N)");
    }
}

Chain mcmc_chain(const HamiltonianRealization& h, double beta, int n_steps,
                 std::uint64_t seed, const McmcOptions& opts) {
    const int n = h.dimension();
    if (beta < 0.0) throw std::invalid_argument("mcmc_chain: beta must be >= 0");
    if (n_steps < 10) throw std::invalid_argument("mcmc_chain: n_steps too small");
    if (opts.thin < 1) throw std::invalid_argument("mcmc_chain: thin must be >= 1");
    if (opts.band) opts.band->validate(n);

    const double root_n = std::sqrt(static_cast<double>(n));
    const std::uint64_t init_key = rng::derive_seed(seed, "mcmc-init", 0);
    Eigen::VectorXd g(n);
    for (int j = 0; j < n; ++j) g[j] = rng::gaussian_at(init_key, j);

    Eigen::VectorXd x;
    if (opts.band && opts.band->center.squaredNorm() > 0.0) {
        // Start at overlap exactly R(m,m): m plus an orthogonal completion.
        const Eigen::VectorXd& m = opts.band->center;
        g -= m * (g.dot(m) / m.squaredNorm());
        const double rest = std::max(0.0, n - m.squaredNorm());
        x = m + std::sqrt(rest) * g.normalized();
    } else {
        x = root_n * g.normalized();
    }
    x = SpherePoint::on_sphere(std::move(x)).coords;

    double sigma = opts.step_scale > 0.0 ? opts.step_scale : 0.5;
    double cur_e = h.energy(x);

    const int burn = n_steps / 5;
    constexpr int epoch = 200;
    int epoch_acc = 0, epoch_len = 0;
    double last_rate = 1.0;
    long kept_acc = 0, kept_steps = 0;
    double esum = 0.0;
    long esamples = 0;

    Chain chain;
    const std::uint64_t step_base = rng::derive_seed(seed, "mcmc-step", 0);
    Eigen::VectorXd prop(n), noise(n);
    for (int s = 0; s < n_steps; ++s) {
        const std::uint64_t key = rng::mix(step_base, static_cast<std::uint64_t>(s));
        for (int j = 0; j < n; ++j) noise[j] = rng::gaussian_at(key, j);
        noise -= x * (noise.dot(x) / x.squaredNorm());
        prop = x + sigma * noise;
        prop *= root_n / prop.norm();

        bool accept = false;
        if (!opts.band || opts.band->contains(prop, n)) {
            const double prop_e = h.energy(prop);
            const double log_ratio = beta * (prop_e - cur_e);
            if (log_ratio >= 0.0 ||
                rng::to_unit(rng::splitmix64(key ^ 0xD1CEB00Full)) < std::exp(log_ratio)) {
                x.swap(prop);
                cur_e = prop_e;
                accept = true;
            }
        }

        if (s < burn) {
            epoch_acc += accept ? 1 : 0;
            if (++epoch_len == epoch || s == burn - 1) {
                last_rate = static_cast<double>(epoch_acc) / epoch_len;
                if (last_rate > 0.45) {
                    sigma = std::min(sigma * 1.35, sigma_max);
                } else if (last_rate < 0.25) {
                    sigma = std::max(sigma / 1.35, sigma_min);
                }
                epoch_acc = 0;
                epoch_len = 0;
            }
        } else {
            kept_acc += accept ? 1 : 0;
            ++kept_steps;
            if ((s - burn) % opts.thin == 0) {
                chain.samples.push_back(SpherePoint::on_sphere(x));
                chain.sample_energies.push_back(cur_e / n);
                esum += cur_e;
                ++esamples;
            }
        }
    }

    chain.acceptance = kept_steps > 0 ? static_cast<double>(kept_acc) / kept_steps : 0.0;
    chain.step_scale = sigma;
    chain.untunable = last_rate < 0.05 && sigma <= sigma_min * (1.0 + 1e-9);
    chain.mean_energy_density = esamples > 0 ? esum / (static_cast<double>(esamples) * n) : 0.0;
    return chain;
}

OverlapStats overlap_statistics(const std::vector<Chain>& chains, int bins,
                                int max_per_chain) {
    if (chains.size() < 2) throw std::invalid_argument("overlap_statistics: need >= 2 chains");
    if (bins < 2 || max_per_chain < 1) {
        throw std::invalid_argument("overlap_statistics: bad bins or subsample cap");
    }

    OverlapStats stats;
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const auto& s = chains[c].samples;
        if (s.empty()) throw std::invalid_argument("overlap_statistics: empty chain");
        const std::size_t keep = std::min<std::size_t>(s.size(), max_per_chain);
        for (std::size_t j = 0; j < keep; ++j) {
            stats.array.samples.push_back(s[j * s.size() / keep]);
            stats.array.chain_of.push_back(static_cast<int>(c));
        }
    }

    const int total = static_cast<int>(stats.array.samples.size());
    const int n = stats.array.samples.front().dimension();
    stats.array.overlaps.resize(total, total);
    for (int i = 0; i < total; ++i) {
        for (int j = i; j < total; ++j) {
            const double r =
                stats.array.samples[i].coords.dot(stats.array.samples[j].coords) / n;
            stats.array.overlaps(i, j) = r;
            stats.array.overlaps(j, i) = r;
        }
    }

    auto& hist = stats.cross_histogram;
    hist.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b) hist.edges[b] = -1.0 + 2.0 * b / bins;
    hist.counts.assign(bins, 0);
    for (int i = 0; i < total; ++i) {
        for (int j = i + 1; j < total; ++j) {
            if (stats.array.chain_of[i] == stats.array.chain_of[j]) continue;
            const double r = stats.array.overlaps(i, j);
            int b = static_cast<int>((r + 1.0) / 2.0 * bins);
            b = std::clamp(b, 0, bins - 1);
            ++hist.counts[b];
            ++hist.total;
        }
    }
    return stats;
}

double band_log_volume(double q, double delta, int n) {
    if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("band_log_volume: q in [0,1)");
    if (!(delta > 0.0)) throw std::invalid_argument("band_log_volume: delta > 0");
    if (n < 2) throw std::invalid_argument("band_log_volume: N >= 2");
    if (q == 0.0) return 0.0;  // R(x,0) = 0: the band is the whole sphere

    const double rq = std::sqrt(q);
    const double t0 = (q - delta) / rq;
    const double t1 = (q + delta) / rq;
    if (t0 <= -1.0 && t1 >= 1.0) return 0.0;
    const double lo = std::max(t0, -1.0);
    const double hi = std::min(t1, 1.0);
    if (!(lo < hi)) throw std::invalid_argument("band_log_volume: empty band window");

    // Integrate (1-t^2)^{(N-3)/2} dt = cos^{N-2}(theta) dtheta in the log
    // domain (composite Simpson, log-sum-exp).
    const double a = std::asin(lo);
    const double b = std::asin(hi);
    constexpr int intervals = 4096;  // even
    const double step = (b - a) / intervals;
    std::vector<double> terms;
    terms.reserve(intervals + 1);
    for (int i = 0; i <= intervals; ++i) {
        const double theta = a + step * i;
        const double c = std::cos(theta);
        double logf = c > 0.0 ? (n - 2) * std::log(c) : -std::numeric_limits<double>::infinity();
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        terms.push_back(logf + std::log(w * step / 3.0));
    }
    const double log_band = logsumexp(terms);
    const double log_full =
        std::lgamma(0.5) + std::lgamma(0.5 * (n - 1)) - std::lgamma(0.5 * n);
    return (log_band - log_full) / n;
}

BandFreeEnergy band_free_energy(const HamiltonianRealization& h, const BandSpec& spec,
                                double beta, int n_integration_points,
                                const std::vector<std::uint64_t>& seeds,
                                const BandFeOptions& opts) {
    const int n = h.dimension();
    spec.validate(n);
    if (beta < 0.0) throw std::invalid_argument("band_free_energy: beta >= 0");
    if (seeds.empty()) throw std::invalid_argument("band_free_energy: need seeds");

    BandFreeEnergy fe;
    fe.log_volume = band_log_volume(spec.q(n), spec.delta, n);

    if (beta == 0.0) {
        fe.beta_grid = {0.0};
        fe.mean_energy = {0.0};
        fe.per_seed.assign(seeds.size(), fe.log_volume);
        fe.value = fe.log_volume;
        return fe;
    }
    if (n_integration_points < 2) {
        throw std::invalid_argument("band_free_energy: need >= 2 integration points");
    }

    const int points = n_integration_points;
    fe.beta_grid.resize(points);
    for (int j = 0; j < points; ++j) fe.beta_grid[j] = beta * j / (points - 1);

    McmcOptions mopts;
    mopts.band = spec;
    mopts.thin = opts.thin;
    mopts.step_scale = opts.step_scale;

    std::vector<std::vector<double>> energy(seeds.size(), std::vector<double>(points));
    std::vector<double> within_se(seeds.size(), 0.0);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        double var_integral = 0.0;
        for (int j = 0; j < points; ++j) {
            const auto chain = mcmc_chain(h, fe.beta_grid[j], opts.n_steps,
                                          rng::derive_seed(seeds[s], "band-ti", j), mopts);
            energy[s][j] = chain.mean_energy_density;
            // Within-chain error from 10 batch means.
            const std::size_t batches = 10;
            if (chain.sample_energies.size() >= 2 * batches) {
                std::vector<double> bm(batches, 0.0);
                const std::size_t len = chain.sample_energies.size() / batches;
                for (std::size_t bi = 0; bi < batches; ++bi) {
                    double acc = 0.0;
                    for (std::size_t t = 0; t < len; ++t) {
                        acc += chain.sample_energies[bi * len + t];
                    }
                    bm[bi] = acc / len;
                }
                const double se = sample_sd(bm) / std::sqrt(static_cast<double>(batches));
                const double w = (j == 0 || j == points - 1) ? 0.5 : 1.0;
                const double db = beta / (points - 1);
                var_integral += (w * db * se) * (w * db * se);
            }
        }
        within_se[s] = std::sqrt(var_integral);
    }

    fe.mean_energy.resize(points);
    for (int j = 0; j < points; ++j) {
        double acc = 0.0;
        for (std::size_t s = 0; s < seeds.size(); ++s) acc += energy[s][j];
        fe.mean_energy[j] = acc / seeds.size();
    }

    for (std::size_t s = 0; s < seeds.size(); ++s) {
        double integral = 0.0;
        for (int j = 0; j + 1 < points; ++j) {
            integral += 0.5 * (energy[s][j] + energy[s][j + 1]) *
                        (fe.beta_grid[j + 1] - fe.beta_grid[j]);
        }
        fe.per_seed.push_back(fe.log_volume + integral);
    }
    fe.value = mean_of(fe.per_seed);
    fe.std_error = sample_sd(fe.per_seed) / std::sqrt(static_cast<double>(seeds.size()));

    const double within = mean_of(within_se);
    double worst = 0.0;
    for (double v : fe.per_seed) worst = std::max(worst, std::abs(v - fe.value));
    fe.mixing_flag = seeds.size() >= 2 && worst > 3.0 * std::max(within, 1e-12);
    return fe;
}

MultisampResult multisamplability_diagnostic(const HamiltonianRealization& h, double beta,
                                             double q, int k, double epsilon,
                                             const std::vector<std::uint64_t>& seeds,
                                             const MultisampOptions& opts) {
    const int n = h.dimension();
    if (k != 2 && k != 3) throw std::invalid_argument("multisamplability: k in {2,3}");
    if (n > 60) throw std::invalid_argument("multisamplability: N must be <= 60");
    if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("multisamplability: q in [0,1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("multisamplability: epsilon > 0");
    if (seeds.empty()) throw std::invalid_argument("multisamplability: need seeds");

    McmcOptions mopts;
    mopts.thin = opts.thin;
    mopts.step_scale = opts.step_scale;

    MultisampResult res;
    for (std::uint64_t seed : seeds) {
        std::vector<Chain> chains;
        for (int c = 0; c < k; ++c) {
            chains.push_back(mcmc_chain(h, beta, opts.n_steps,
                                        rng::derive_seed(seed, "ms-chain", c), mopts));
        }
        std::size_t depth = chains.front().samples.size();
        for (const auto& c : chains) depth = std::min(depth, c.samples.size());
        for (std::size_t t = 0; t < depth; ++t) {
            bool ok = true;
            for (int a = 0; a < k && ok; ++a) {
                for (int b = a + 1; b < k && ok; ++b) {
                    const double r = chains[a].samples[t].coords.dot(
                                         chains[b].samples[t].coords) /
                                     n;
                    ok = std::abs(r - q) < epsilon;
                }
            }
            res.hits += ok ? 1 : 0;
            ++res.trials;
        }
    }

    if (res.hits >= 50) {
        const double p = static_cast<double>(res.hits) / res.trials;
        res.estimate = std::log(p) / n;
        res.std_error = std::sqrt((1.0 - p) / res.hits) / n;
        res.verdict = res.estimate >= -opts.threshold ? MultisampVerdict::Consistent
                                                      : MultisampVerdict::NotConsistent;
    } else if (res.hits > 0) {
        res.is_bound = true;
        res.estimate = std::log((res.hits + 3.0) / res.trials) / n;
        res.verdict = res.estimate < -opts.threshold ? MultisampVerdict::NotConsistent
                                                     : MultisampVerdict::Inconclusive;
    } else {
        res.is_bound = true;
        res.estimate = std::log(3.0 / res.trials) / n;
        res.verdict = MultisampVerdict::Inconclusive;
    }
    return res;
}

}  // namespace pspin
