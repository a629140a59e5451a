#include "pspinlab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pspinlab/gibbs.hpp"
#include "pspinlab/hamiltonian.hpp"
#include "pspinlab/landscape.hpp"
#include "pspinlab/mixture.hpp"
#include "pspinlab/optimizer.hpp"
#include "pspinlab/parisi.hpp"
#include "pspinlab/rng.hpp"

namespace pspin::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

// Config/schema violation: unknown key, wrong type, out-of-range value.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] void fail(const std::string& msg) { throw SchemaError(msg); }

struct Ctx {
    std::string command;
    json config = json::object();
    fs::path out_dir = ".";
    std::uint64_t seed = 1;
    std::vector<std::string> outputs;  // file names written, in order
};

// ---- config access -------------------------------------------------------

void check_keys(const json& cfg, std::initializer_list<const char*> allowed) {
    for (const auto& item : cfg.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                known = true;
                break;
            }
        if (!known) fail("unknown config key: '" + item.key() + "'");
    }
}

double as_num(const json& v, const std::string& key) {
    if (!v.is_number()) fail("config key '" + key + "' must be a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail("config key '" + key + "' must be an integer");
    return v.get<int>();
}

std::uint64_t as_u64(const json& v, const std::string& key) {
    if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)))
        fail("config key '" + key + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& key) {
    if (!v.is_boolean()) fail("config key '" + key + "' must be a boolean");
    return v.get<bool>();
}

// Fetch-or-default accessors write applied defaults back into the config so
// the emitted manifest echoes the fully resolved run.
double num_or(json& c, const char* k, double def) {
    if (!c.contains(k)) {
        c[k] = def;
        return def;
    }
    return as_num(c[k], k);
}

double num_req(const json& c, const char* k) {
    if (!c.contains(k)) fail(std::string("missing required config key '") + k + "'");
    return as_num(c[k], k);
}

int int_or(json& c, const char* k, int def) {
    if (!c.contains(k)) {
        c[k] = def;
        return def;
    }
    return as_int(c[k], k);
}

int int_req(const json& c, const char* k) {
    if (!c.contains(k)) fail(std::string("missing required config key '") + k + "'");
    return as_int(c[k], k);
}

bool bool_or(json& c, const char* k, bool def) {
    if (!c.contains(k)) {
        c[k] = def;
        return def;
    }
    return as_bool(c[k], k);
}

std::string str_or(json& c, const char* k, const std::string& def) {
    if (!c.contains(k)) {
        c[k] = def;
        return def;
    }
    if (!c[k].is_string()) fail(std::string("config key '") + k + "' must be a string");
    return c[k].get<std::string>();
}

std::vector<double> as_num_array(const json& v, const std::string& key) {
    if (!v.is_array() || v.empty())
        fail("config key '" + key + "' must be a nonempty array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(as_num(e, key));
    return out;
}

std::vector<double> num_array_req(const json& c, const char* k) {
    if (!c.contains(k)) fail(std::string("missing required config key '") + k + "'");
    return as_num_array(c[k], k);
}

std::vector<double> num_array_or(json& c, const char* k, std::vector<double> def) {
    if (!c.contains(k)) {
        c[k] = def;
        return def;
    }
    return as_num_array(c[k], k);
}

Mixture mixture_from(const json& cfg) {
    if (!cfg.contains("mixture"))
        fail("missing required config key 'mixture' ([[p, gamma_p^2], ...])");
    const json& mj = cfg["mixture"];
    if (!mj.is_array() || mj.empty())
        fail("'mixture' must be a nonempty array of [p, gamma_p^2] pairs");
    std::vector<std::pair<int, double>> pairs;
    for (const auto& e : mj) {
        if (!e.is_array() || e.size() != 2) fail("'mixture' entries must be [p, gamma_p^2] pairs");
        pairs.emplace_back(as_int(e[0], "mixture"), as_num(e[1], "mixture"));
    }
    try {
        return Mixture::from_pairs(pairs);
    } catch (const std::invalid_argument& ex) {
        fail(std::string("invalid mixture: ") + ex.what());
    }
}

int dim_req(const json& c) {
    const int n = int_req(c, "N");
    if (n < 2) fail("'N' must be >= 2");
    return n;
}

double beta_req(const json& c) {
    const double beta = num_req(c, "beta");
    if (!(beta >= 0.0)) fail("'beta' must be >= 0");
    return beta;
}

// Explicit "seeds" array, or count_key-many seeds derived from the master
// seed (written back so reruns use the same list verbatim).
std::vector<std::uint64_t> seed_list(json& c, const char* count_key, int def_count,
                                     std::uint64_t master, std::string_view tag) {
    if (c.contains("seeds")) {
        const json& sj = c["seeds"];
        if (!sj.is_array() || sj.empty()) fail("'seeds' must be a nonempty array");
        std::vector<std::uint64_t> out;
        for (const auto& e : sj) out.push_back(as_u64(e, "seeds"));
        return out;
    }
    const int count = int_or(c, count_key, def_count);
    if (count < 1) fail(std::string("'") + count_key + "' must be >= 1");
    std::vector<std::uint64_t> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(rng::derive_seed(master, tag, i));
    c["seeds"] = out;
    return out;
}

// ---- output plumbing -----------------------------------------------------

std::ofstream open_output(Ctx& ctx, const std::string& name) {
    const fs::path p = ctx.out_dir / name;
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot open output file: " + p.string());
    ctx.outputs.push_back(name);
    return f;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_json_file(Ctx& ctx, const std::string& name, const json& j) {
    auto f = open_output(ctx, name);
    f << j.dump(2) << '\n';
}

// ---- shared path emission (optimize / lsq) -------------------------------

void emit_steps(Ctx& ctx, const SpherePath& path) {
    auto jf = open_output(ctx, "records.jsonl");
    for (const PathStep& s : path.steps) {
        const json r = {{"i", s.i},
                        {"radius_sq_over_n", s.radius_sq_over_n},
                        {"objective_density", s.objective_density},
                        {"eig_estimate", s.eig_estimate},
                        {"sign", s.sign},
                        {"eig_converged", s.eig_converged},
                        {"eig_retries", s.eig_retries}};
        jf << r.dump() << '\n';
    }
    auto cf = open_output(ctx, "steps.csv");
    cf << "i,radius_sq_over_n,objective_density,eig_estimate,sign,eig_converged,eig_retries\n";
    for (const PathStep& s : path.steps)
        cf << s.i << ',' << g17(s.radius_sq_over_n) << ',' << g17(s.objective_density) << ','
           << g17(s.eig_estimate) << ',' << s.sign << ',' << (s.eig_converged ? 1 : 0) << ','
           << s.eig_retries << '\n';
}

void emit_path_csv(Ctx& ctx, const SpherePath& path) {
    auto f = open_output(ctx, "path.csv");
    f << "i";
    for (int j = 0; j < path.n; ++j) f << ",x" << j;
    f << '\n';
    for (std::size_t i = 0; i < path.points.size(); ++i) {
        f << i;
        for (int j = 0; j < path.n; ++j) f << ',' << g17(path.points[i][j]);
        f << '\n';
    }
}

void descent_options_from(json& c, DescentOptions& opt) {
    opt.k = int_or(c, "k", 16);
    if (opt.k < 1) fail("'k' must be >= 1");
    opt.eig_tol = num_or(c, "eig_tol", 1e-6);
    if (!(opt.eig_tol > 0.0)) fail("'eig_tol' must be positive");
}

// ---- subcommand handlers --------------------------------------------------

void cmd_mixture_info(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "grid", "rsb_grid", "seed"});
    const Mixture m = mixture_from(c);
    const std::vector<double> grid = num_array_or(c, "grid", {0.0, 0.25, 0.5, 0.75, 1.0});
    for (double t : grid)
        if (!(t >= 0.0 && t <= 1.0)) fail("'grid' entries must lie in [0, 1]");
    const int rsb_grid = int_or(c, "rsb_grid", 4096);
    if (rsb_grid < 8) fail("'rsb_grid' must be >= 8");

    json info;
    info["mixture"] = c["mixture"];
    json xi = json::array();
    for (double t : grid)
        xi.push_back({{"t", t}, {"xi", m.eval(t)}, {"xi1", m.d1(t)}, {"xi2", m.d2(t)}});
    info["xi_table"] = xi;
    int p = 0;
    if (m.pure_p(&p)) {
        info["pure_p"] = p;
        if (p >= 2) info["e_infinity"] = e_infinity(p);
    }
    if (m.has_p_ge2()) {
        info["alg_energy"] = alg_energy(m);
        const ConcavityReport rep = is_full_rsb_candidate(m, rsb_grid);
        info["full_rsb"] = {{"candidate", rep.candidate},
                            {"worst_violation", rep.worst_violation},
                            {"worst_t", rep.worst_t},
                            {"grid", rep.grid}};
    }
    write_json_file(ctx, "mixture_info.json", info);
}

void cmd_sample(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "N", "memory_cap", "seed"});
    const Mixture m = mixture_from(c);
    const int n = dim_req(c);
    std::size_t cap = HamiltonianRealization::default_memory_cap;
    if (c.contains("memory_cap"))
        cap = static_cast<std::size_t>(as_u64(c["memory_cap"], "memory_cap"));
    else
        c["memory_cap"] = cap;
    const std::uint64_t dseed = rng::derive_seed(ctx.seed, "disorder", 0);
    const HamiltonianRealization h = HamiltonianRealization::sample(m, n, dseed, cap);
    h.save((ctx.out_dir / "realization.bin").string());
    ctx.outputs.push_back("realization.bin");
    json s;
    s["N"] = n;
    s["active_orders"] = h.active_orders();
    s["realization_seed"] = dseed;
    s["tensor_bytes"] = HamiltonianRealization::tensor_bytes(m, n);
    write_json_file(ctx, "sample.json", s);
}

void cmd_optimize(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "N", "k", "eig_tol", "emit_path", "seed"});
    const Mixture m = mixture_from(c);
    const int n = dim_req(c);
    DescentOptions opt;
    descent_options_from(c, opt);
    opt.seed = rng::derive_seed(ctx.seed, "optimize", 0);
    const bool emit_path = bool_or(c, "emit_path", false);

    const auto h = HamiltonianRealization::sample(m, n, rng::derive_seed(ctx.seed, "disorder", 0));
    const SpherePath path = hessian_descent(h, opt);
    path.validate();
    emit_steps(ctx, path);
    if (emit_path) emit_path_csv(ctx, path);
    json s;
    s["N"] = n;
    s["k"] = opt.k;
    s["delta"] = path.delta;
    s["terminal_energy_density"] = path.energies.back();
    write_json_file(ctx, "summary.json", s);
}

void cmd_lsq(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "N", "alpha", "c", "k", "eig_tol", "emit_path", "seed"});
    const Mixture m = mixture_from(c);
    const int n = dim_req(c);
    const double alpha = num_req(c, "alpha");
    if (!(alpha > 0.0)) fail("'alpha' must be positive");
    if (static_cast<int>(alpha * n) < 1) fail("'alpha' too small: floor(alpha N) must be >= 1");
    const double target = num_req(c, "c");
    DescentOptions opt;
    descent_options_from(c, opt);
    opt.seed = rng::derive_seed(ctx.seed, "lsq", 0);
    const bool emit_path = bool_or(c, "emit_path", false);

    const LsqSystem sys =
        LsqSystem::sample(m, n, alpha, target, rng::derive_seed(ctx.seed, "lsq-system", 0));
    const LsqResult res = least_squares_descent(sys, opt);
    res.path.validate();
    emit_steps(ctx, res.path);
    if (emit_path) emit_path_csv(ctx, res.path);
    auto rf = open_output(ctx, "residuals.csv");
    rf << "i,residual_density\n";
    for (std::size_t i = 0; i < res.residuals.size(); ++i)
        rf << i << ',' << g17(res.residuals[i]) << '\n';
    json s;
    s["N"] = n;
    s["n_equations"] = sys.size();
    s["k"] = opt.k;
    s["terminal_residual_density"] = res.residuals.back();
    write_json_file(ctx, "summary.json", s);
}

std::vector<double> betas_req(const json& c) {
    const std::vector<double> betas = num_array_req(c, "betas");
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (!(betas[i] > 0.0)) fail("'betas' must be positive");
        if (i > 0 && !(betas[i] > betas[i - 1])) fail("'betas' must be strictly increasing");
    }
    return betas;
}

void cmd_parisi(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "betas", "k_max", "tol", "ground_state", "seed"});
    const Mixture m = mixture_from(c);
    const std::vector<double> betas = betas_req(c);
    const int k_max = int_or(c, "k_max", 8);
    if (k_max < 1) fail("'k_max' must be >= 1");
    const double tol = num_or(c, "tol", 1e-9);
    if (!(tol > 0.0)) fail("'tol' must be positive");
    const bool want_gs = bool_or(c, "ground_state", false);

    const FreeEnergyCurve curve = free_energy_curve(m, betas, k_max, tol);
    auto cf = open_output(ctx, "curve.csv");
    cf << "beta,value,k_atoms,converged\n";
    for (std::size_t i = 0; i < curve.betas.size(); ++i)
        cf << g17(curve.betas[i]) << ',' << g17(curve.values[i]) << ','
           << curve.measures[i].atoms.size() << ',' << (curve.converged[i] ? 1 : 0) << '\n';
    auto mf = open_output(ctx, "measures.jsonl");
    for (std::size_t i = 0; i < curve.betas.size(); ++i) {
        const json r = {{"beta", curve.betas[i]},
                        {"atoms", curve.measures[i].atoms},
                        {"weights", curve.measures[i].weights},
                        {"qhat", curve.measures[i].qhat}};
        mf << r.dump() << '\n';
    }
    json s;
    s["diagnostics"] = curve.check();
    if (want_gs) {
        const GroundState gs = ground_state(m);
        s["ground_state"] = {{"value", gs.value}, {"settled", gs.settled}};
    }
    write_json_file(ctx, "summary.json", s);
}

void cmd_volume(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "betas", "energies", "k_max", "tol", "seed"});
    const Mixture m = mixture_from(c);
    const std::vector<double> betas = betas_req(c);
    const std::vector<double> energies = num_array_req(c, "energies");
    const int k_max = int_or(c, "k_max", 8);
    if (k_max < 1) fail("'k_max' must be >= 1");
    const double tol = num_or(c, "tol", 1e-9);
    if (!(tol > 0.0)) fail("'tol' must be positive");

    const FreeEnergyCurve curve = free_energy_curve(m, betas, k_max, tol);
    auto f = open_output(ctx, "volume.csv");
    f << "energy,exponent,feasible\n";
    int feasible = 0;
    for (double e : energies) {
        double v = std::numeric_limits<double>::quiet_NaN();
        bool ok = true;
        try {
            v = volume_exponent(curve, e);
        } catch (const std::invalid_argument&) {
            ok = false;  // outside the slope range the curve covers
        }
        feasible += ok ? 1 : 0;
        f << g17(e) << ',' << g17(v) << ',' << (ok ? 1 : 0) << '\n';
    }
    const json s = {{"requested", energies.size()}, {"feasible", feasible}};
    write_json_file(ctx, "summary.json", s);
}

void cmd_tap_scan(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "beta", "q_grid", "tol", "k_max", "seed"});
    const Mixture m = mixture_from(c);
    const double beta = beta_req(c);
    if (!(beta > 0.0)) fail("'beta' must be positive");
    std::vector<double> default_grid;
    for (int i = 0; i < 10; ++i) default_grid.push_back(0.1 * i);
    const std::vector<double> q_grid = num_array_or(c, "q_grid", default_grid);
    const double tol = num_or(c, "tol", 1e-2);
    if (!(tol > 0.0)) fail("'tol' must be positive");
    const int k_max = int_or(c, "k_max", 8);
    if (k_max < 1) fail("'k_max' must be >= 1");

    const TapScan scan = tap_scan(m, beta, q_grid, tol, k_max);
    auto f = open_output(ctx, "tap.csv");
    f << "q,e_star,f_tap,g,e_star_settled\n";
    for (const TapScanRow& r : scan.rows)
        f << g17(r.q) << ',' << g17(r.e_star) << ',' << g17(r.f_tap) << ',' << g17(r.g) << ','
          << (r.e_star_settled ? 1 : 0) << '\n';
    json s;
    s["f_rep"] = scan.f_rep;
    s["f_beta"] = scan.f_beta;
    s["multisamplable"] = scan.multisamplable;
    write_json_file(ctx, "summary.json", s);
}

void cmd_critical_points(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "N", "n_starts", "dedup_tol", "seed"});
    const Mixture m = mixture_from(c);
    const int n = dim_req(c);
    const int n_starts = int_or(c, "n_starts", 1000);
    if (n_starts < 1) fail("'n_starts' must be >= 1");
    const double dedup_tol = num_or(c, "dedup_tol", 1e-6);
    if (!(dedup_tol > 0.0 && dedup_tol < 1.0)) fail("'dedup_tol' must lie in (0, 1)");

    const auto h = HamiltonianRealization::sample(m, n, rng::derive_seed(ctx.seed, "disorder", 0));
    const CriticalPointSet cps =
        find_critical_points(h, n_starts, rng::derive_seed(ctx.seed, "critical-points", 0), dedup_tol);
    auto f = open_output(ctx, "points.csv");
    f << "energy_density,radial_derivative,index,pair_id\n";
    long morse = 0;
    for (const CriticalPoint& p : cps.points) {
        f << g17(p.energy_density) << ',' << g17(p.radial_derivative) << ',' << p.index << ','
          << p.pair_id << '\n';
        morse += (p.index % 2 == 0) ? 1 : -1;
    }
    json s;
    s["count"] = cps.points.size();
    s["n_starts"] = cps.n_starts;
    s["diverged"] = cps.diverged;
    s["saturated"] = cps.saturated;
    s["morse_sum"] = morse;
    write_json_file(ctx, "summary.json", s);
}

void cmd_complexity(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "N_list", "n_starts", "windows", "n_seeds", "seeds", "seed"});
    const Mixture m = mixture_from(c);
    if (!c.contains("N_list")) fail("missing required config key 'N_list'");
    if (!c["N_list"].is_array() || c["N_list"].empty())
        fail("'N_list' must be a nonempty array of integers");
    std::vector<int> n_list;
    for (const auto& e : c["N_list"]) {
        n_list.push_back(as_int(e, "N_list"));
        if (n_list.back() < 2) fail("'N_list' entries must be >= 2");
    }
    const int n_starts = int_or(c, "n_starts", 2000);
    if (n_starts < 4) fail("'n_starts' must be >= 4");
    if (!c.contains("windows")) fail("missing required config key 'windows'");
    if (!c["windows"].is_array() || c["windows"].empty())
        fail("'windows' must be a nonempty array of [lo, hi] pairs");
    std::vector<Window> windows;
    for (const auto& e : c["windows"]) {
        if (!e.is_array() || e.size() != 2) fail("'windows' entries must be [lo, hi] pairs");
        const double lo = as_num(e[0], "windows");
        const double hi = as_num(e[1], "windows");
        if (!(lo <= hi)) fail("'windows' entries must satisfy lo <= hi");
        windows.emplace_back(lo, hi);
    }
    const std::vector<std::uint64_t> seeds = seed_list(c, "n_seeds", 4, ctx.seed, "complexity");

    const std::vector<ComplexityCell> table =
        empirical_complexity(m, n_list, n_starts, windows, seeds);
    auto f = open_output(ctx, "complexity.csv");
    f << "n,window_lo,window_hi,mean_log_count,spread,seeds_counted,zero_seeds,saturated\n";
    for (const ComplexityCell& cell : table)
        f << cell.n << ',' << g17(windows[cell.window].first) << ','
          << g17(windows[cell.window].second) << ',' << g17(cell.mean_log_count) << ','
          << g17(cell.spread) << ',' << cell.seeds_counted << ',' << cell.zero_seeds << ','
          << (cell.saturated ? 1 : 0) << '\n';
}

void cmd_gibbs(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "N", "beta", "n_steps", "n_chains", "thin", "step_scale", "bins",
                   "max_per_chain", "emit_samples", "seed"});
    const Mixture m = mixture_from(c);
    const int n = dim_req(c);
    const double beta = beta_req(c);
    const int n_steps = int_or(c, "n_steps", 20000);
    if (n_steps < 10) fail("'n_steps' must be >= 10");
    const int n_chains = int_or(c, "n_chains", 4);
    if (n_chains < 1) fail("'n_chains' must be >= 1");
    McmcOptions mo;
    mo.thin = int_or(c, "thin", 10);
    if (mo.thin < 1) fail("'thin' must be >= 1");
    mo.step_scale = num_or(c, "step_scale", 0.0);
    if (mo.step_scale < 0.0) fail("'step_scale' must be >= 0");
    const int bins = int_or(c, "bins", 40);
    if (bins < 1) fail("'bins' must be >= 1");
    const int max_per_chain = int_or(c, "max_per_chain", 64);
    if (max_per_chain < 1) fail("'max_per_chain' must be >= 1");
    const bool emit_samples = bool_or(c, "emit_samples", false);

    const auto h = HamiltonianRealization::sample(m, n, rng::derive_seed(ctx.seed, "disorder", 0));
    std::vector<Chain> chains;
    chains.reserve(n_chains);
    for (int i = 0; i < n_chains; ++i)
        chains.push_back(
            mcmc_chain(h, beta, n_steps, rng::derive_seed(ctx.seed, "gibbs-chain", i), mo));

    auto jf = open_output(ctx, "chains.jsonl");
    for (int i = 0; i < n_chains; ++i) {
        const Chain& ch = chains[i];
        const json r = {{"chain", i},
                        {"acceptance", ch.acceptance},
                        {"step_scale", ch.step_scale},
                        {"untunable", ch.untunable},
                        {"n_samples", ch.samples.size()},
                        {"mean_energy_density", ch.mean_energy_density}};
        jf << r.dump() << '\n';
    }
    auto ef = open_output(ctx, "energies.csv");
    ef << "chain,sample,energy_density\n";
    for (int i = 0; i < n_chains; ++i)
        for (std::size_t s = 0; s < chains[i].sample_energies.size(); ++s)
            ef << i << ',' << s << ',' << g17(chains[i].sample_energies[s]) << '\n';
    if (emit_samples) {
        auto sf = open_output(ctx, "samples.csv");
        sf << "chain,sample";
        for (int j = 0; j < n; ++j) sf << ",x" << j;
        sf << '\n';
        for (int i = 0; i < n_chains; ++i)
            for (std::size_t s = 0; s < chains[i].samples.size(); ++s) {
                sf << i << ',' << s;
                for (int j = 0; j < n; ++j) sf << ',' << g17(chains[i].samples[s].coords[j]);
                sf << '\n';
            }
    }

    json s;
    if (n_chains >= 2) {
        const OverlapStats stats = overlap_statistics(chains, bins, max_per_chain);
        auto hf = open_output(ctx, "histogram.csv");
        hf << "lo,hi,count\n";
        for (std::size_t b = 0; b < stats.cross_histogram.counts.size(); ++b)
            hf << g17(stats.cross_histogram.edges[b]) << ',' << g17(stats.cross_histogram.edges[b + 1])
               << ',' << stats.cross_histogram.counts[b] << '\n';
        long cross = 0, tail = 0;
        double abs_sum = 0.0;
        const auto& arr = stats.array;
        for (std::size_t a = 0; a < arr.samples.size(); ++a)
            for (std::size_t b = a + 1; b < arr.samples.size(); ++b) {
                if (arr.chain_of[a] == arr.chain_of[b]) continue;
                const double r = arr.overlaps(a, b);
                ++cross;
                abs_sum += std::abs(r);
                if (std::abs(r) > 0.2) ++tail;
            }
        s["cross_pairs"] = cross;
        s["tail_mass_above_0p2"] = cross > 0 ? static_cast<double>(tail) / cross : 0.0;
        s["mean_abs_overlap"] = cross > 0 ? abs_sum / cross : 0.0;
    } else {
        s["cross_pairs"] = 0;
    }
    write_json_file(ctx, "summary.json", s);
}

void cmd_band_f(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "N", "beta", "q", "delta", "center", "opt_k", "n_integration_points",
                   "n_steps", "thin", "step_scale", "n_mc_seeds", "seeds", "seed"});
    const Mixture m = mixture_from(c);
    const int n = dim_req(c);
    const double beta = beta_req(c);
    const double q = num_req(c, "q");
    if (!(q >= 0.0 && q < 1.0)) fail("'q' must lie in [0, 1)");
    const double delta = num_req(c, "delta");
    if (!(delta > 0.0)) fail("'delta' must be positive");
    const std::string center_mode = str_or(c, "center", "random");
    const int nip = int_or(c, "n_integration_points", 6);
    if (nip < 2) fail("'n_integration_points' must be >= 2");
    BandFeOptions bo;
    bo.n_steps = int_or(c, "n_steps", 4000);
    if (bo.n_steps < 10) fail("'n_steps' must be >= 10");
    bo.thin = int_or(c, "thin", 1);
    if (bo.thin < 1) fail("'thin' must be >= 1");
    bo.step_scale = num_or(c, "step_scale", 0.0);
    if (bo.step_scale < 0.0) fail("'step_scale' must be >= 0");
    const std::vector<std::uint64_t> seeds = seed_list(c, "n_mc_seeds", 3, ctx.seed, "band-mc");

    const auto h = HamiltonianRealization::sample(m, n, rng::derive_seed(ctx.seed, "disorder", 0));
    Eigen::VectorXd center = Eigen::VectorXd::Zero(n);
    if (center_mode == "zero") {
        if (q != 0.0) fail("center 'zero' requires q = 0");
    } else if (center_mode == "random") {
        if (q > 0.0) {
            const std::uint64_t key = rng::derive_seed(ctx.seed, "band-center", 0);
            Eigen::VectorXd g(n);
            for (int j = 0; j < n; ++j) g[j] = rng::gaussian_at(key, j);
            center = std::sqrt(q * n) * g.normalized();
        }
    } else if (center_mode == "optimizer") {
        DescentOptions opt;
        opt.k = int_or(c, "opt_k", 32);
        if (opt.k < 1) fail("'opt_k' must be >= 1");
        opt.seed = rng::derive_seed(ctx.seed, "band-opt", 0);
        const SpherePath path = hessian_descent(h, opt);
        int idx = static_cast<int>(std::lround(q * opt.k));
        idx = std::max(0, std::min(opt.k, idx));
        center = path.points[idx];
    } else {
        fail("'center' must be one of 'zero', 'random', 'optimizer'");
    }
    const BandSpec spec{center, delta};
    spec.validate(n);

    const BandFreeEnergy fe = band_free_energy(h, spec, beta, nip, seeds, bo);
    auto tf = open_output(ctx, "ti.csv");
    tf << "beta,mean_energy_density\n";
    for (std::size_t i = 0; i < fe.beta_grid.size(); ++i)
        tf << g17(fe.beta_grid[i]) << ',' << g17(fe.mean_energy[i]) << '\n';
    json s;
    s["value"] = fe.value;
    s["std_error"] = fe.std_error;
    s["log_volume"] = fe.log_volume;
    s["per_seed"] = fe.per_seed;
    s["mixing_flag"] = fe.mixing_flag;
    s["q_realized"] = spec.q(n);
    s["center_mode"] = center_mode;
    s["center_energy_density"] = h.energy(center) / n;
    write_json_file(ctx, "band.json", s);
}

void cmd_multisamp(Ctx& ctx) {
    json& c = ctx.config;
    check_keys(c, {"mixture", "N", "beta", "q", "k", "epsilon", "n_seeds", "seeds", "n_steps",
                   "thin", "threshold", "step_scale", "seed"});
    const Mixture m = mixture_from(c);
    const int n = dim_req(c);
    const double beta = beta_req(c);
    const double q = num_req(c, "q");
    if (!(q >= 0.0 && q < 1.0)) fail("'q' must lie in [0, 1)");
    const int k = int_or(c, "k", 2);
    if (k < 2) fail("'k' must be >= 2");
    const double epsilon = num_req(c, "epsilon");
    if (!(epsilon > 0.0)) fail("'epsilon' must be positive");
    MultisampOptions mo;
    mo.n_steps = int_or(c, "n_steps", 20000);
    if (mo.n_steps < 10) fail("'n_steps' must be >= 10");
    mo.thin = int_or(c, "thin", 10);
    if (mo.thin < 1) fail("'thin' must be >= 1");
    mo.threshold = num_or(c, "threshold", 0.05);
    if (!(mo.threshold > 0.0)) fail("'threshold' must be positive");
    mo.step_scale = num_or(c, "step_scale", 0.0);
    if (mo.step_scale < 0.0) fail("'step_scale' must be >= 0");
    const std::vector<std::uint64_t> seeds = seed_list(c, "n_seeds", 3, ctx.seed, "multisamp");

    const auto h = HamiltonianRealization::sample(m, n, rng::derive_seed(ctx.seed, "disorder", 0));
    const MultisampResult res = multisamplability_diagnostic(h, beta, q, k, epsilon, seeds, mo);
    const char* verdict = res.verdict == MultisampVerdict::Consistent        ? "consistent"
                          : res.verdict == MultisampVerdict::NotConsistent ? "not_consistent"
                                                                            : "inconclusive";
    json s;
    s["estimate"] = res.estimate;
    s["std_error"] = res.std_error;
    s["is_bound"] = res.is_bound;
    s["hits"] = res.hits;
    s["trials"] = res.trials;
    s["verdict"] = verdict;
    write_json_file(ctx, "multisamp.json", s);
}

// ---- dispatch -------------------------------------------------------------

struct CommandDef {
    const char* name;
    const char* desc;
    void (*fn)(Ctx&);
};

constexpr CommandDef kCommands[] = {
    {"mixture-info", "xi table, ALG energy, full-RSB concavity report", cmd_mixture_info},
    {"sample", "draw and save a disorder realization", cmd_sample},
    {"optimize", "incremental Hessian ascent on the sphere", cmd_optimize},
    {"lsq", "least-squares descent on a random equation system", cmd_lsq},
    {"parisi", "free-energy curve and minimizing overlap measures", cmd_parisi},
    {"volume", "large-deviation volume exponents V(E)", cmd_volume},
    {"tap-scan", "TAP-corrected band decomposition scan over q", cmd_tap_scan},
    {"critical-points", "enumerate critical points of one realization", cmd_critical_points},
    {"complexity", "empirical complexity table over N and energy windows", cmd_complexity},
    {"gibbs", "Metropolis chains and overlap statistics", cmd_gibbs},
    {"band-f", "band-restricted free energy by thermodynamic integration", cmd_band_f},
    {"multisamp", "k-replica multisamplability diagnostic", cmd_multisamp},
};

void error_record(const std::string& command, const std::string& kind, const std::string& message) {
    const json err = {{"error", {{"command", command}, {"kind", kind}, {"message", message}}}};
    std::cerr << err.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"pspin: numerical laboratory for spherical mixed p-spin models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    int threads = 1;
    int k_flag = 0;
    bool k_given = false;
    double eig_tol_flag = 0.0;
    bool eig_tol_given = false;
    bool emit_path_flag = false;

    for (const CommandDef& cmd : kCommands) {
        CLI::App* s = app.add_subcommand(cmd.name, cmd.desc);
        s->add_option("--config", config_path,
                      "JSON config file (a previously emitted manifest also works)");
        s->add_option("--seed", seed_flag, "master seed, overrides the config")
            ->each([&seed_given](const std::string&) { seed_given = true; });
        s->add_option("--threads", threads,
                      "worker threads; execution is single-threaded either way, so outputs are "
                      "bit-reproducible for any value");
        s->add_option("--out", out_dir, "output directory (created if missing)");
        if (std::string(cmd.name) == "optimize") {
            s->add_option("--k", k_flag, "number of path steps, overrides the config")
                ->each([&k_given](const std::string&) { k_given = true; });
            s->add_option("--eig-tol", eig_tol_flag,
                          "eigensolver relative tolerance, overrides the config")
                ->each([&eig_tol_given](const std::string&) { eig_tol_given = true; });
            s->add_flag("--emit-path", emit_path_flag, "write the full path coordinates");
        }
    }

    std::string command = "(none)";
    try {
        std::vector<const char*> argv;
        argv.push_back("pspin");
        for (const std::string& a : args) argv.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
            fail(std::string("usage: ") + e.what());
        }
        CLI::App* sub = app.get_subcommands().front();
        command = sub->get_name();
        if (threads < 1) fail("--threads must be >= 1");

        json cfg = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) fail("cannot read config file: " + config_path);
            try {
                in >> cfg;
            } catch (const json::parse_error& e) {
                fail(std::string("config is not valid JSON: ") + e.what());
            }
        }
        if (cfg.is_object() && cfg.contains("config") && cfg.contains("command")) {
            // A manifest was passed back in: unwrap its resolved config.
            if (!cfg["command"].is_string() || cfg["command"].get<std::string>() != command)
                fail("manifest command mismatch: manifest was written by a different subcommand");
            if (cfg.contains("master_seed") && !seed_given) {
                seed_flag = as_u64(cfg["master_seed"], "master_seed");
                seed_given = true;
            }
            cfg = cfg["config"];
        }
        if (!cfg.is_object()) fail("config must be a JSON object");
        if (seed_given) cfg["seed"] = seed_flag;
        if (k_given) cfg["k"] = k_flag;
        if (eig_tol_given) cfg["eig_tol"] = eig_tol_flag;
        if (emit_path_flag) cfg["emit_path"] = true;

        Ctx ctx;
        ctx.command = command;
        ctx.config = std::move(cfg);
        ctx.out_dir = out_dir;
        if (ctx.config.contains("seed"))
            ctx.seed = as_u64(ctx.config["seed"], "seed");
        else
            ctx.config["seed"] = ctx.seed;
        fs::create_directories(ctx.out_dir);

        for (const CommandDef& cmd : kCommands)
            if (command == cmd.name) {
                cmd.fn(ctx);
                break;
            }

        json man;
        man["version"] = kVersion;
        man["command"] = ctx.command;
        man["master_seed"] = ctx.seed;
        man["config"] = ctx.config;
        man["outputs"] = ctx.outputs;
        std::ofstream mf(ctx.out_dir / "manifest.json");
        if (!mf) throw std::runtime_error("cannot write manifest.json");
        mf << man.dump(2) << '\n';
        return 0;
    } catch (const SchemaError& e) {
        error_record(command, "schema", e.what());
        return 2;
    } catch (const CapacityError& e) {
        error_record(command, "capacity", e.what());
        return 3;
    } catch (const json::exception& e) {
        error_record(command, "schema", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        error_record(command, "invalid_argument", e.what());
        return 2;
    } catch (const std::exception& e) {
        error_record(command, "runtime", e.what());
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace pspin::cli
