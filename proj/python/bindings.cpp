#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "pspinlab/cli.hpp"
#include "pspinlab/gibbs.hpp"
#include "pspinlab/hamiltonian.hpp"
#include "pspinlab/landscape.hpp"
#include "pspinlab/mixture.hpp"
#include "pspinlab/optimizer.hpp"
#include "pspinlab/parisi.hpp"
#include "pspinlab/rng.hpp"

namespace py = pybind11;
using namespace pspin;

namespace {

SpherePoint make_point(Eigen::VectorXd x, double q) {
    SpherePoint pt{std::move(x), q};
    pt.validate();
    return pt;
}

DescentOptions descent_options(int k, double eig_tol, std::uint64_t seed) {
    DescentOptions opt;
    opt.k = k;
    opt.eig_tol = eig_tol;
    opt.seed = seed;
    return opt;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Numerical laboratory for spherical mixed p-spin glass models.";

    py::register_exception<CapacityError>(mod, "CapacityError", PyExc_MemoryError);

    // ---- mixture ----------------------------------------------------------

    py::class_<Mixture>(mod, "Mixture")
        .def(py::init([](const std::vector<std::pair<int, double>>& pairs) {
                 return Mixture::from_pairs(pairs);
             }),
             py::arg("pairs"), "Build from [(p, gamma_p^2), ...] pairs.")
        .def_static("pure", &Mixture::pure, py::arg("p"), py::arg("gamma_sq") = 1.0)
        .def("eval", &Mixture::eval, py::arg("t"), py::arg("order") = 0)
        .def("d1", &Mixture::d1, py::arg("t"))
        .def("d2", &Mixture::d2, py::arg("t"))
        .def("coeff", &Mixture::coeff, py::arg("p"))
        .def("pairs", &Mixture::pairs)
        .def_property_readonly("max_p", &Mixture::max_p)
        .def_property_readonly("min_active_p", &Mixture::min_active_p)
        .def_property_readonly("even", &Mixture::even)
        .def_property_readonly("has_p_ge2", &Mixture::has_p_ge2)
        .def("pure_p",
             [](const Mixture& m) {
                 int p = 0;
                 return m.pure_p(&p) ? std::optional<int>(p) : std::nullopt;
             })
        .def("__repr__", [](const Mixture& m) {
            std::string r = "Mixture([";
            bool first = true;
            for (const auto& [p, g] : m.pairs()) {
                if (!first) r += ", ";
                first = false;
                r += "(" + std::to_string(p) + ", " + std::to_string(g) + ")";
            }
            return r + "])";
        });

    mod.def("e_infinity", &e_infinity, py::arg("p"));
    mod.def("alg_energy", &alg_energy, py::arg("mixture"), py::arg("abs_tol") = 1e-12);
    mod.def("restricted_mixture", &restricted_mixture, py::arg("mixture"), py::arg("q"));

    py::class_<ConcavityReport>(mod, "ConcavityReport")
        .def_readonly("candidate", &ConcavityReport::candidate)
        .def_readonly("worst_violation", &ConcavityReport::worst_violation)
        .def_readonly("worst_t", &ConcavityReport::worst_t)
        .def_readonly("grid", &ConcavityReport::grid);
    mod.def("is_full_rsb_candidate", &is_full_rsb_candidate, py::arg("mixture"),
            py::arg("grid") = 4096);

    // ---- hamiltonian ------------------------------------------------------

    py::class_<SpherePoint>(mod, "SpherePoint")
        .def(py::init(&make_point), py::arg("coords"), py::arg("q") = 1.0)
        .def_static("on_sphere", &SpherePoint::on_sphere, py::arg("v"), py::arg("q") = 1.0)
        .def_readonly("coords", &SpherePoint::coords)
        .def_readonly("q", &SpherePoint::q)
        .def_property_readonly("dimension", &SpherePoint::dimension);

    py::class_<HamiltonianRealization>(mod, "Hamiltonian")
        .def_static("sample", &HamiltonianRealization::sample, py::arg("mixture"), py::arg("n"),
                    py::arg("seed"),
                    py::arg("memory_cap") = HamiltonianRealization::default_memory_cap)
        .def_static("tensor_bytes", &HamiltonianRealization::tensor_bytes, py::arg("mixture"),
                    py::arg("n"))
        .def_static("load", &HamiltonianRealization::load, py::arg("path"))
        .def("save", &HamiltonianRealization::save, py::arg("path"))
        .def_property_readonly("dimension", &HamiltonianRealization::dimension)
        .def_property_readonly("mixture", &HamiltonianRealization::mixture)
        .def_property_readonly("seed", &HamiltonianRealization::seed)
        .def_property_readonly("active_orders", &HamiltonianRealization::active_orders)
        .def("energy",
             py::overload_cast<const Eigen::VectorXd&>(&HamiltonianRealization::energy,
                                                       py::const_),
             py::arg("x"))
        .def("euclidean_grad", &HamiltonianRealization::euclidean_grad, py::arg("x"))
        .def("euclidean_hess", &HamiltonianRealization::euclidean_hess, py::arg("x"))
        .def(
            "spherical_grad",
            [](const HamiltonianRealization& h, const Eigen::VectorXd& x, double q) {
                return h.spherical_grad(make_point(x, q));
            },
            py::arg("x"), py::arg("q") = 1.0)
        .def(
            "tangent_eigenvalues",
            [](const HamiltonianRealization& h, const Eigen::VectorXd& x, double q) {
                return h.spherical_hess(make_point(x, q)).tangent_eigenvalues();
            },
            py::arg("x"), py::arg("q") = 1.0);

    // ---- parisi / tap -----------------------------------------------------

    py::class_<DiscreteMeasure>(mod, "DiscreteMeasure")
        .def_readonly("atoms", &DiscreteMeasure::atoms)
        .def_readonly("weights", &DiscreteMeasure::weights)
        .def_readonly("qhat", &DiscreteMeasure::qhat);

    py::class_<CsResult>(mod, "CsResult")
        .def_readonly("value", &CsResult::value)
        .def_readonly("measure", &CsResult::measure)
        .def_readonly("k_used", &CsResult::k_used)
        .def_readonly("converged", &CsResult::converged);
    mod.def(
        "minimize_cs",
        [](const Mixture& m, double beta, int k_max, double tol) {
            CsOptions opt;
            opt.k_max = k_max;
            opt.tol = tol;
            return minimize_cs(m, beta, opt);
        },
        py::arg("mixture"), py::arg("beta"), py::arg("k_max") = 8, py::arg("tol") = 1e-9);

    py::class_<FreeEnergyCurve>(mod, "FreeEnergyCurve")
        .def_readonly("betas", &FreeEnergyCurve::betas)
        .def_readonly("values", &FreeEnergyCurve::values)
        .def_readonly("measures", &FreeEnergyCurve::measures)
        .def_readonly("converged", &FreeEnergyCurve::converged)
        .def("check", &FreeEnergyCurve::check, py::arg("slack") = 1e-8);
    mod.def("free_energy_curve", &free_energy_curve, py::arg("mixture"), py::arg("betas"),
            py::arg("k_max") = 8, py::arg("tol") = 1e-9);

    py::class_<GroundState>(mod, "GroundState")
        .def_readonly("value", &GroundState::value)
        .def_readonly("settled", &GroundState::settled)
        .def_readonly("betas", &GroundState::betas)
        .def_readonly("values", &GroundState::values)
        .def_readonly("slopes", &GroundState::slopes);
    mod.def("ground_state", &ground_state, py::arg("mixture"), py::arg("tol") = 1e-4,
            py::arg("j_max") = 14, py::arg("k_max") = 8);

    mod.def("volume_exponent", &volume_exponent, py::arg("curve"), py::arg("energy"));
    mod.def("tap_correction", &tap_correction, py::arg("mixture"), py::arg("beta"), py::arg("q"),
            py::arg("k_max") = 8, py::arg("tol") = 1e-9);

    py::class_<TapScanRow>(mod, "TapScanRow")
        .def_readonly("q", &TapScanRow::q)
        .def_readonly("e_star", &TapScanRow::e_star)
        .def_readonly("f_tap", &TapScanRow::f_tap)
        .def_readonly("g", &TapScanRow::g)
        .def_readonly("e_star_settled", &TapScanRow::e_star_settled);
    py::class_<TapScan>(mod, "TapScan")
        .def_readonly("f_rep", &TapScan::f_rep)
        .def_readonly("f_beta", &TapScan::f_beta)
        .def_readonly("multisamplable", &TapScan::multisamplable)
        .def_readonly("rows", &TapScan::rows);
    mod.def("tap_scan", &tap_scan, py::arg("mixture"), py::arg("beta"), py::arg("q_grid"),
            py::arg("tol") = 1e-2, py::arg("k_max") = 8);

    // ---- optimizer --------------------------------------------------------

    py::class_<PathStep>(mod, "PathStep")
        .def_readonly("i", &PathStep::i)
        .def_readonly("radius_sq_over_n", &PathStep::radius_sq_over_n)
        .def_readonly("objective_density", &PathStep::objective_density)
        .def_readonly("eig_estimate", &PathStep::eig_estimate)
        .def_readonly("sign", &PathStep::sign)
        .def_readonly("eig_converged", &PathStep::eig_converged)
        .def_readonly("eig_retries", &PathStep::eig_retries);

    py::class_<SpherePath>(mod, "SpherePath")
        .def_readonly("n", &SpherePath::n)
        .def_readonly("k", &SpherePath::k)
        .def_readonly("delta", &SpherePath::delta)
        .def_readonly("points", &SpherePath::points)
        .def_readonly("energies", &SpherePath::energies)
        .def_readonly("steps", &SpherePath::steps)
        .def("validate", &SpherePath::validate, py::arg("tol") = 1e-8);

    mod.def(
        "hessian_descent",
        [](const HamiltonianRealization& h, int k, double eig_tol, std::uint64_t seed) {
            return hessian_descent(h, descent_options(k, eig_tol, seed));
        },
        py::arg("hamiltonian"), py::arg("k") = 16, py::arg("eig_tol") = 1e-6, py::arg("seed") = 0);

    py::class_<LsqSystem>(mod, "LsqSystem")
        .def_static("sample", &LsqSystem::sample, py::arg("mixture"), py::arg("n"),
                    py::arg("alpha"), py::arg("c"), py::arg("seed"))
        .def_property_readonly("dimension", &LsqSystem::dimension)
        .def_property_readonly("target", &LsqSystem::target)
        .def_property_readonly("size", &LsqSystem::size)
        .def("value", &LsqSystem::value, py::arg("x"))
        .def("gradient", &LsqSystem::gradient, py::arg("x"))
        .def("hessian", &LsqSystem::hessian, py::arg("x"))
        .def("equation_values", &LsqSystem::equation_values, py::arg("x"));

    py::class_<LsqResult>(mod, "LsqResult")
        .def_readonly("path", &LsqResult::path)
        .def_readonly("residuals", &LsqResult::residuals);
    mod.def(
        "least_squares_descent",
        [](const LsqSystem& sys, int k, double eig_tol, std::uint64_t seed) {
            return least_squares_descent(sys, descent_options(k, eig_tol, seed));
        },
        py::arg("system"), py::arg("k") = 16, py::arg("eig_tol") = 1e-6, py::arg("seed") = 0);

    // ---- landscape --------------------------------------------------------

    py::class_<CriticalPoint>(mod, "CriticalPoint")
        .def_readonly("location", &CriticalPoint::location)
        .def_readonly("energy_density", &CriticalPoint::energy_density)
        .def_readonly("radial_derivative", &CriticalPoint::radial_derivative)
        .def_readonly("index", &CriticalPoint::index)
        .def_readonly("pair_id", &CriticalPoint::pair_id);

    py::class_<CriticalPointSet>(mod, "CriticalPointSet")
        .def_readonly("points", &CriticalPointSet::points)
        .def_readonly("n_starts", &CriticalPointSet::n_starts)
        .def_readonly("diverged", &CriticalPointSet::diverged)
        .def_readonly("saturated", &CriticalPointSet::saturated);
    mod.def("find_critical_points", &find_critical_points, py::arg("hamiltonian"),
            py::arg("n_starts"), py::arg("seed"), py::arg("dedup_tol") = 1e-6);
    mod.def("count_in_window", &count_in_window, py::arg("points"), py::arg("energy_window"),
            py::arg("radial_window"));

    py::class_<ComplexityCell>(mod, "ComplexityCell")
        .def_readonly("n", &ComplexityCell::n)
        .def_readonly("window", &ComplexityCell::window)
        .def_readonly("mean_log_count", &ComplexityCell::mean_log_count)
        .def_readonly("spread", &ComplexityCell::spread)
        .def_readonly("seeds_counted", &ComplexityCell::seeds_counted)
        .def_readonly("zero_seeds", &ComplexityCell::zero_seeds)
        .def_readonly("saturated", &ComplexityCell::saturated);
    mod.def("empirical_complexity", &empirical_complexity, py::arg("mixture"), py::arg("n_list"),
            py::arg("n_starts"), py::arg("windows"), py::arg("seeds"));

    // ---- gibbs ------------------------------------------------------------

    py::class_<BandSpec>(mod, "BandSpec")
        .def(py::init([](Eigen::VectorXd center, double delta) {
                 return BandSpec{std::move(center), delta};
             }),
             py::arg("center"), py::arg("delta"))
        .def_readonly("center", &BandSpec::center)
        .def_readonly("delta", &BandSpec::delta)
        .def("q", &BandSpec::q, py::arg("n"))
        .def("contains", &BandSpec::contains, py::arg("x"), py::arg("n"));

    py::class_<Chain>(mod, "Chain")
        .def_readonly("samples", &Chain::samples)
        .def_readonly("sample_energies", &Chain::sample_energies)
        .def_readonly("acceptance", &Chain::acceptance)
        .def_readonly("step_scale", &Chain::step_scale)
        .def_readonly("untunable", &Chain::untunable)
        .def_readonly("mean_energy_density", &Chain::mean_energy_density);
    mod.def(
        "mcmc_chain",
        [](const HamiltonianRealization& h, double beta, int n_steps, std::uint64_t seed,
           double step_scale, int thin, std::optional<BandSpec> band) {
            McmcOptions opts;
            opts.step_scale = step_scale;
            opts.thin = thin;
            opts.band = std::move(band);
            return mcmc_chain(h, beta, n_steps, seed, opts);
        },
        py::arg("hamiltonian"), py::arg("beta"), py::arg("n_steps"), py::arg("seed"),
        py::arg("step_scale") = 0.0, py::arg("thin") = 1, py::arg("band") = std::nullopt);

    py::class_<OverlapArray>(mod, "OverlapArray")
        .def_readonly("samples", &OverlapArray::samples)
        .def_readonly("chain_of", &OverlapArray::chain_of)
        .def_readonly("overlaps", &OverlapArray::overlaps);
    py::class_<Histogram>(mod, "Histogram")
        .def_readonly("edges", &Histogram::edges)
        .def_readonly("counts", &Histogram::counts)
        .def_readonly("total", &Histogram::total);
    py::class_<OverlapStats>(mod, "OverlapStats")
        .def_readonly("array", &OverlapStats::array)
        .def_readonly("cross_histogram", &OverlapStats::cross_histogram);
    mod.def("overlap_statistics", &overlap_statistics, py::arg("chains"), py::arg("bins") = 40,
            py::arg("max_per_chain") = 64);

    mod.def("band_log_volume", &band_log_volume, py::arg("q"), py::arg("delta"), py::arg("n"));

    py::class_<BandFreeEnergy>(mod, "BandFreeEnergy")
        .def_readonly("value", &BandFreeEnergy::value)
        .def_readonly("std_error", &BandFreeEnergy::std_error)
        .def_readonly("log_volume", &BandFreeEnergy::log_volume)
        .def_readonly("beta_grid", &BandFreeEnergy::beta_grid)
        .def_readonly("mean_energy", &BandFreeEnergy::mean_energy)
        .def_readonly("per_seed", &BandFreeEnergy::per_seed)
        .def_readonly("mixing_flag", &BandFreeEnergy::mixing_flag);
    mod.def(
        "band_free_energy",
        [](const HamiltonianRealization& h, const BandSpec& spec, double beta,
           int n_integration_points, const std::vector<std::uint64_t>& seeds, int n_steps,
           int thin, double step_scale) {
            BandFeOptions opts;
            opts.n_steps = n_steps;
            opts.thin = thin;
            opts.step_scale = step_scale;
            return band_free_energy(h, spec, beta, n_integration_points, seeds, opts);
        },
        py::arg("hamiltonian"), py::arg("band"), py::arg("beta"),
        py::arg("n_integration_points"), py::arg("seeds"), py::arg("n_steps") = 4000,
        py::arg("thin") = 1, py::arg("step_scale") = 0.0);

    py::enum_<MultisampVerdict>(mod, "MultisampVerdict")
        .value("Consistent", MultisampVerdict::Consistent)
        .value("NotConsistent", MultisampVerdict::NotConsistent)
        .value("Inconclusive", MultisampVerdict::Inconclusive);
    py::class_<MultisampResult>(mod, "MultisampResult")
        .def_readonly("estimate", &MultisampResult::estimate)
        .def_readonly("std_error", &MultisampResult::std_error)
        .def_readonly("is_bound", &MultisampResult::is_bound)
        .def_readonly("hits", &MultisampResult::hits)
        .def_readonly("trials", &MultisampResult::trials)
        .def_readonly("verdict", &MultisampResult::verdict);
    mod.def(
        "multisamplability_diagnostic",
        [](const HamiltonianRealization& h, double beta, double q, int k, double epsilon,
           const std::vector<std::uint64_t>& seeds, int n_steps, int thin, double threshold,
           double step_scale) {
            MultisampOptions opts;
            opts.n_steps = n_steps;
            opts.thin = thin;
            opts.threshold = threshold;
            opts.step_scale = step_scale;
            return multisamplability_diagnostic(h, beta, q, k, epsilon, seeds, opts);
        },
        py::arg("hamiltonian"), py::arg("beta"), py::arg("q"), py::arg("k"), py::arg("epsilon"),
        py::arg("seeds"), py::arg("n_steps") = 20000, py::arg("thin") = 10,
        py::arg("threshold") = 0.05, py::arg("step_scale") = 0.0);

    // ---- plumbing ---------------------------------------------------------

    mod.def(
        "derive_seed",
        [](std::uint64_t master, const std::string& tag, std::uint64_t index) {
            return rng::derive_seed(master, tag, index);
        },
        py::arg("master"), py::arg("tag"), py::arg("index"));

    mod.def("cli_run", [](const std::vector<std::string>& args) { return pspin::cli::run(args); },
            py::arg("args"), "Invoke the command-line interface in-process.");

    mod.attr("__version__") = "0.1.0";
}
