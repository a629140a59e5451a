#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pspinlab/hamiltonian.hpp"
#include "pspinlab/mixture.hpp"

namespace pspin {

struct CriticalPoint {
    SpherePoint location;
    double energy_density = 0.0;      // H(x)/N
    double radial_derivative = 0.0;   // <x, grad H>/N
    int index = 0;                    // negative tangent-Hessian eigenvalues
    int pair_id = -1;                 // shared by antipodal partners, -1 if none
};

struct CriticalPointSet {
    std::vector<CriticalPoint> points;
    int n_starts = 0;
    int diverged = 0;   // Newton runs discarded for non-convergence
    bool saturated = false;  // distinct count already stable at n/4 and n/2 starts
};

// Enumerate critical points of H on the sphere from n_starts random starts
// using damped Riemannian Newton iteration (dense tangent solves; N <= 64).
// Points closer than overlap 1 - dedup_tol are merged; antipodal partners
// (overlap below -(1 - dedup_tol)) share a pair_id. For even mixtures the
// exact antipode of every point is itself critical and is added if the
// search missed it.
CriticalPointSet find_critical_points(const HamiltonianRealization& h, int n_starts,
                                      std::uint64_t seed, double dedup_tol = 1e-6);

using Window = std::pair<double, double>;  // closed interval

// Number of points with energy density and radial derivative inside the
// given closed windows. Antipodal partners both count.
int count_in_window(const std::vector<CriticalPoint>& points, const Window& energy_window,
                    const Window& radial_window);

struct ComplexityCell {
    int n = 0;
    std::size_t window = 0;    // index into the caller's window list
    double mean_log_count = 0; // mean over seeds of log(count)/N, zero-count seeds excluded
    double spread = 0;         // sample standard deviation of log(count)/N
    int seeds_counted = 0;     // seeds with at least one point in the window
    int zero_seeds = 0;
    bool saturated = false;    // every seed's finder saturated
};

// Finite-N complexity diagnostic: per (N, window) cell, the spread of
// log(count)/N across seeds. Counts come from fresh disorder per seed.
std::vector<ComplexityCell> empirical_complexity(const Mixture& m, const std::vector<int>& n_list,
                                                 int n_starts, const std::vector<Window>& windows,
                                                 const std::vector<std::uint64_t>& seeds);

}  // namespace pspin
