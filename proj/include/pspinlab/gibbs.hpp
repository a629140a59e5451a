#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "pspinlab/hamiltonian.hpp"

namespace pspin {

// Spherical band around a center m with |m|^2 <= N: all sphere points x
// with |R(x,m) - R(m,m)| <= delta, R(x,y) = <x,y>/N.
struct BandSpec {
    Eigen::VectorXd center;
    double delta = 0.0;

    double q(int n) const { return center.squaredNorm() / n; }
    bool contains(const Eigen::VectorXd& x, int n) const {
        return std::abs(x.dot(center) / n - q(n)) <= delta;
    }
    void validate(int n) const;
};

struct McmcOptions {
    double step_scale = 0.0;  // initial proposal scale; 0 picks a default
    int thin = 1;
    std::optional<BandSpec> band;  // restrict the chain to a band
};

struct Chain {
    std::vector<SpherePoint> samples;    // post-burn-in, thinned
    std::vector<double> sample_energies; // H/N at each kept sample
    double acceptance = 0.0;             // post-burn-in acceptance rate
    double step_scale = 0.0;             // tuned proposal scale
    bool untunable = false;              // acceptance < 5% at the minimal scale
    double mean_energy_density = 0.0;    // <H/N> over the kept samples
};

// Metropolis chain targeting exp(beta H) on the sphere (optionally band
// restricted by propose-then-test). Proposals x' = sqrt(N) normalize(x +
// sigma g) with tangent Gaussian g are angle-symmetric, so the acceptance
// ratio is exp(beta dH). sigma is tuned to acceptance in [0.25, 0.45]
// during the 20% burn-in and then frozen.
Chain mcmc_chain(const HamiltonianRealization& h, double beta, int n_steps,
                 std::uint64_t seed, const McmcOptions& opts = {});

struct OverlapArray {
    std::vector<SpherePoint> samples;
    std::vector<int> chain_of;  // chain index per sample
    Eigen::MatrixXd overlaps;   // symmetric; diagonal = per-sample q
};

struct Histogram {
    std::vector<double> edges;  // bins + 1 entries
    std::vector<int> counts;
    long total = 0;
};

struct OverlapStats {
    OverlapArray array;
    Histogram cross_histogram;  // cross-chain entries only
};

// Overlap array over (evenly subsampled) replicas from >= 2 independent
// chains; the histogram uses cross-chain pairs only.
OverlapStats overlap_statistics(const std::vector<Chain>& chains, int bins = 40,
                                int max_per_chain = 64);

// (1/N) log of the uniform-sphere mass of Band(m, delta) with |m|^2 = qN,
// via the overlap marginal density (1-t^2)^{(N-3)/2} in the log domain.
double band_log_volume(double q, double delta, int n);

struct BandFeOptions {
    int n_steps = 4000;  // chain length per integration point
    int thin = 1;
    double step_scale = 0.0;
};

struct BandFreeEnergy {
    double value = 0.0;       // log_volume + thermodynamic integral, seed mean
    double std_error = 0.0;   // cross-seed standard error of the integral
    double log_volume = 0.0;
    std::vector<double> beta_grid;
    std::vector<double> mean_energy;  // cross-seed mean <H/N> per grid point
    std::vector<double> per_seed;     // per-seed estimates of the full value
    bool mixing_flag = false;  // cross-seed disagreement > 3x within-seed error
};

// F_N(m, delta, beta) = band_log_volume + int_0^beta <H/N> dbeta' by
// trapezoidal thermodynamic integration over band-restricted chains.
BandFreeEnergy band_free_energy(const HamiltonianRealization& h, const BandSpec& spec,
                                double beta, int n_integration_points,
                                const std::vector<std::uint64_t>& seeds,
                                const BandFeOptions& opts = {});

enum class MultisampVerdict { Consistent, NotConsistent, Inconclusive };

struct MultisampOptions {
    int n_steps = 20000;
    int thin = 10;
    double threshold = 0.05;  // verdict cut in (1/N) log units
    double step_scale = 0.0;
};

struct MultisampResult {
    double estimate = 0.0;   // (1/N) log of the joint event probability
    double std_error = 0.0;  // delta-method error (0 when only a bound)
    bool is_bound = false;   // estimate is a one-sided upper bound
    long hits = 0;
    long trials = 0;
    MultisampVerdict verdict = MultisampVerdict::Inconclusive;
};

// Joint k-replica event {all pairwise |R - q| < epsilon} under independent
// Gibbs chains; direct frequency when >= 50 hits, otherwise a one-sided
// upper bound.
MultisampResult multisamplability_diagnostic(const HamiltonianRealization& h, double beta,
                                             double q, int k, double epsilon,
                                             const std::vector<std::uint64_t>& seeds,
                                             const MultisampOptions& opts = {});

}  // namespace pspin
