#include "pspinlab/hamiltonian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "pspinlab/rng.hpp"

namespace pspin {

namespace {

static_assert(std::endian::native == std::endian::little,
              "realization dump format assumes a little-endian host");

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// Collapse the last index: out[r] = sum_i T[r*N + i] x[i]. Safe in place
// (out == T): the write to out[r] lands below every row still to be read.
void contract_last(const double* T, std::size_t rows, int N, const double* x, double* out) {
    Eigen::Map<const Eigen::VectorXd> xv(x, N);
    for (std::size_t r = 0; r < rows; ++r)
        out[r] = Eigen::Map<const Eigen::VectorXd>(T + r * N, N).dot(xv);
}

// Collapse the first index: out[c] = sum_i x[i] T[i*cols + c]. Needs a
// distinct output buffer.
void contract_first(const double* T, int N, std::size_t cols, const double* x, double* out) {
    Eigen::Map<Eigen::VectorXd> ov(out, static_cast<Eigen::Index>(cols));
    ov.setZero();
    for (int i = 0; i < N; ++i)
        ov += x[i] * Eigen::Map<const Eigen::VectorXd>(T + i * cols, cols);
}

// Collapse slot `slot` (0-based) of a rank-r tensor. Distinct output buffer.
void contract_slot(const double* T, int r, int N, int slot, const double* x, double* out) {
    const std::size_t suffix = ipow(static_cast<std::size_t>(N), r - 1 - slot);
    const std::size_t prefix = ipow(static_cast<std::size_t>(N), slot);
    for (std::size_t a = 0; a < prefix; ++a) {
        Eigen::Map<Eigen::VectorXd> ov(out + a * suffix, static_cast<Eigen::Index>(suffix));
        ov.setZero();
        const double* base = T + a * N * suffix;
        for (int i = 0; i < N; ++i)
            ov += x[i] * Eigen::Map<const Eigen::VectorXd>(base + i * suffix, suffix);
    }
}

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

constexpr char kMagic[8] = {'P', 'S', 'P', 'N', 'H', 'A', 'M', '1'};

}  // namespace

SpherePoint SpherePoint::on_sphere(Eigen::VectorXd v, double q) {
    if (!(q > 0.0 && q <= 1.0))
        throw std::invalid_argument("sphere point: q must be in (0,1]");
    const double nrm = v.norm();
    if (!(nrm > 0.0)) throw std::invalid_argument("sphere point: zero vector");
    v *= std::sqrt(q * static_cast<double>(v.size())) / nrm;
    return SpherePoint{std::move(v), q};
}

void SpherePoint::validate() const {
    if (coords.size() < 1) throw std::invalid_argument("sphere point: empty");
    if (!(q > 0.0 && q <= 1.0))
        throw std::invalid_argument("sphere point: q must be in (0,1]");
    const double target = q * static_cast<double>(coords.size());
    if (std::abs(coords.squaredNorm() - target) > 1e-9 * target)
        throw std::invalid_argument("sphere point: |x|^2 deviates from qN");
}

SphericalHessian::SphericalHessian(Eigen::MatrixXd euclidean_hess, Eigen::VectorXd x_unit,
                                   double radial_term)
    : hess_(std::move(euclidean_hess)), xhat_(std::move(x_unit)), c_(radial_term) {}

void SphericalHessian::apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    Eigen::VectorXd w = v - xhat_ * xhat_.dot(v);
    out.noalias() = hess_ * w;
    out -= xhat_ * xhat_.dot(out);
    out -= c_ * w;
}

Eigen::MatrixXd SphericalHessian::dense() const {
    const int n = dimension();
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) - xhat_ * xhat_.transpose();
    return P * hess_ * P - c_ * P;
}

Eigen::MatrixXd SphericalHessian::tangent_basis() const {
    const int n = dimension();
    // Householder reflector mapping e_{n-1} to -sign * xhat: its first n-1
    // columns are an orthonormal basis of the tangent space.
    Eigen::VectorXd u = xhat_;
    u(n - 1) += (xhat_(n - 1) >= 0.0 ? 1.0 : -1.0);
    u.normalize();
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n) - 2.0 * u * u.transpose();
    return Q.leftCols(n - 1);
}

Eigen::VectorXd SphericalHessian::tangent_eigenvalues() const {
    const Eigen::MatrixXd B = tangent_basis();
    Eigen::MatrixXd M = B.transpose() * hess_ * B;
    M.diagonal().array() -= c_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

EigenPair SphericalHessian::extreme_eigenpair(bool largest, double rel_tol,
                                              std::uint64_t seed) const {
    return pspin::extreme_eigenpair(
        dimension(), [this](const Eigen::VectorXd& v, Eigen::VectorXd& out) { apply(v, out); },
        largest, rel_tol, seed, {xhat_});
}

HamiltonianRealization::HamiltonianRealization(Mixture m, int N, std::uint64_t seed)
    : mixture_(std::move(m)), N_(N), seed_(seed), tensors_(mixture_.max_p()) {
    if (N < 2) throw std::invalid_argument("hamiltonian: N must be >= 2");
}

std::size_t HamiltonianRealization::tensor_bytes(const Mixture& m, int N) {
    std::size_t total = 0;
    for (const auto& [p, g2] : m.pairs()) {
        (void)g2;
        total += sizeof(double) * ipow(static_cast<std::size_t>(N), p);
    }
    return total;
}

HamiltonianRealization HamiltonianRealization::sample(const Mixture& m, int N,
                                                      std::uint64_t seed,
                                                      std::size_t memory_cap) {
    std::size_t total = 0;
    for (const auto& [p, g2] : m.pairs()) {
        (void)g2;
        const std::size_t bytes = sizeof(double) * ipow(static_cast<std::size_t>(N), p);
        total += bytes;
        if (total > memory_cap)
            throw CapacityError("sampling at N=" + std::to_string(N) + ": tensor order p=" +
                                    std::to_string(p) + " pushes storage to " +
                                    std::to_string(total) + " bytes, over the cap of " +
                                    std::to_string(memory_cap),
                                p);
    }

    HamiltonianRealization h(m, N, seed);
    for (const auto& [p, g2] : m.pairs()) {
        (void)g2;
        const std::size_t count = ipow(static_cast<std::size_t>(N), p);
        auto& t = h.tensors_[p - 1];
        t.resize(count);
        const std::uint64_t key = rng::mix(seed, static_cast<std::uint64_t>(p));
        for (std::size_t idx = 0; idx < count; ++idx)
            t[idx] = rng::gaussian_at(key, static_cast<std::uint64_t>(idx));
    }
    return h;
}

HamiltonianRealization HamiltonianRealization::from_tensors(
    const Mixture& m, int N, std::vector<std::pair<int, std::vector<double>>> tensors,
    std::uint64_t seed) {
    HamiltonianRealization h(m, N, seed);
    auto active = m.pairs();
    if (tensors.size() != active.size())
        throw std::invalid_argument("from_tensors: need one tensor per active order");
    std::sort(tensors.begin(), tensors.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < active.size(); ++i) {
        const int p = tensors[i].first;
        if (p != active[i].first)
            throw std::invalid_argument("from_tensors: tensor orders do not match mixture");
        if (tensors[i].second.size() != ipow(static_cast<std::size_t>(N), p))
            throw std::invalid_argument("from_tensors: tensor for p=" + std::to_string(p) +
                                        " must have N^p entries");
        h.tensors_[p - 1] = std::move(tensors[i].second);
    }
    return h;
}

std::vector<int> HamiltonianRealization::active_orders() const {
    std::vector<int> out;
    for (int p = 1; p <= mixture_.max_p(); ++p)
        if (!tensors_[p - 1].empty()) out.push_back(p);
    return out;
}

const std::vector<double>& HamiltonianRealization::tensor(int p) const {
    if (p < 1 || p > mixture_.max_p() || tensors_[p - 1].empty())
        throw std::invalid_argument("tensor: order p=" + std::to_string(p) + " not active");
    return tensors_[p - 1];
}

void HamiltonianRealization::check_dimension(const Eigen::VectorXd& x) const {
    if (x.size() != N_)
        throw std::invalid_argument("hamiltonian: point dimension " + std::to_string(x.size()) +
                                    " does not match N=" + std::to_string(N_));
}

double HamiltonianRealization::energy(const Eigen::VectorXd& x) const {
    check_dimension(x);
    double total = 0.0;
    std::vector<double> work;
    for (int p = 1; p <= mixture_.max_p(); ++p) {
        if (tensors_[p - 1].empty()) continue;
        const double factor =
            std::sqrt(mixture_.coeff(p)) * std::pow(static_cast<double>(N_), -(p - 1) / 2.0);
        const std::size_t n = static_cast<std::size_t>(N_);
        work.resize(std::max<std::size_t>(work.size(), ipow(n, p - 1)));
        const double* cur = tensors_[p - 1].data();
        for (int rank = p; rank >= 1; --rank) {
            contract_last(cur, ipow(n, rank - 1), N_, x.data(), work.data());
            cur = work.data();
        }
        total += factor * work[0];
    }
    return total;
}

std::pair<double, Eigen::VectorXd> HamiltonianRealization::energy_grad(
    const Eigen::VectorXd& x) const {
    check_dimension(x);
    double total = 0.0;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(N_);
    const std::size_t n = static_cast<std::size_t>(N_);
    std::vector<double> left, next, work;
    for (int p = 1; p <= mixture_.max_p(); ++p) {
        if (tensors_[p - 1].empty()) continue;
        const double factor =
            std::sqrt(mixture_.coeff(p)) * std::pow(static_cast<double>(N_), -(p - 1) / 2.0);
        const std::size_t scratch = ipow(n, p - 1);
        left.resize(std::max(left.size(), scratch));
        next.resize(std::max(next.size(), scratch));
        work.resize(std::max(work.size(), scratch));

        // Slot-k term: contract the first k-1 slots and the last p-k slots
        // with x, leaving slot k free. The left chain advances by one
        // first-index contraction per k; the tail is a last-index chain.
        const double* base = tensors_[p - 1].data();
        for (int k = 1; k <= p; ++k) {
            const int rank = p - k + 1;  // rank of the left-chain tensor
            const double* term;
            if (rank == 1) {
                term = base;
            } else {
                contract_last(base, ipow(n, rank - 1), N_, x.data(), work.data());
                for (int r = rank - 1; r >= 2; --r)
                    contract_last(work.data(), ipow(n, r - 1), N_, x.data(), work.data());
                term = work.data();
            }
            g += factor * Eigen::Map<const Eigen::VectorXd>(term, N_);
            if (k == 1) total += factor * Eigen::Map<const Eigen::VectorXd>(term, N_).dot(x);
            if (k < p) {
                contract_first(base, N_, ipow(n, p - k), x.data(), next.data());
                std::swap(left, next);
                base = left.data();
            }
        }
    }
    return {total, std::move(g)};
}

Eigen::VectorXd HamiltonianRealization::euclidean_grad(const Eigen::VectorXd& x) const {
    return energy_grad(x).second;
}

Eigen::MatrixXd HamiltonianRealization::euclidean_hess(const Eigen::VectorXd& x) const {
    check_dimension(x);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N_, N_);
    const std::size_t n = static_cast<std::size_t>(N_);
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    std::vector<double> left, next, chain, mid_a, mid_b;
    for (int p = 2; p <= mixture_.max_p(); ++p) {
        if (tensors_[p - 1].empty()) continue;
        const double factor =
            std::sqrt(mixture_.coeff(p)) * std::pow(static_cast<double>(N_), -(p - 1) / 2.0);
        const std::size_t scratch = ipow(n, p - 1);
        left.resize(std::max(left.size(), scratch));
        next.resize(std::max(next.size(), scratch));
        chain.resize(std::max(chain.size(), scratch));
        mid_a.resize(std::max(mid_a.size(), scratch));
        mid_b.resize(std::max(mid_b.size(), std::max<std::size_t>(ipow(n, p - 2), n * n)));

        Eigen::MatrixXd Hp = Eigen::MatrixXd::Zero(N_, N_);
        const double* base = tensors_[p - 1].data();
        // Free-slot pairs (k1, k2), k1 < k2: walk the left chain over k1;
        // within each k1, collapse trailing slots one at a time so that k2
        // sweeps down from p, contracting the middle slots on demand.
        for (int k1 = 1; k1 <= p - 1; ++k1) {
            const int r0 = p - k1 + 1;  // rank with slots k1..p of the left chain
            const double* cur = base;
            for (int l = r0 - 1; l >= 1; --l) {
                // cur has rank l+1; free slots: local 0 (= k1) and local l.
                const double* pair_mat;
                if (l == 1) {
                    pair_mat = cur;
                } else {
                    const double* s = cur;
                    double* dst = mid_a.data();
                    double* alt = mid_b.data();
                    for (int rs = l + 1; rs > 2; --rs) {
                        contract_slot(s, rs, N_, 1, x.data(), dst);
                        s = dst;
                        std::swap(dst, alt);
                    }
                    pair_mat = s;
                }
                Eigen::Map<const RowMat> M(pair_mat, N_, N_);
                Hp += M;
                Hp += M.transpose();
                if (l > 1) {
                    contract_last(cur, ipow(n, l), N_, x.data(), chain.data());
                    cur = chain.data();
                }
            }
            if (k1 < p - 1) {
                contract_first(base, N_, ipow(n, p - k1), x.data(), next.data());
                std::swap(left, next);
                base = left.data();
            }
        }
        H += factor * Hp;
    }
    return H;
}

Eigen::VectorXd HamiltonianRealization::spherical_grad(const SpherePoint& x) const {
    x.validate();
    check_dimension(x.coords);
    Eigen::VectorXd g = euclidean_grad(x.coords);
    const double qn = x.q * static_cast<double>(N_);
    return g - (x.coords.dot(g) / qn) * x.coords;
}

SphericalHessian HamiltonianRealization::spherical_hess(const SpherePoint& x) const {
    x.validate();
    check_dimension(x.coords);
    const double qn = x.q * static_cast<double>(N_);
    const Eigen::VectorXd g = euclidean_grad(x.coords);
    return SphericalHessian(euclidean_hess(x.coords), x.coords.normalized(),
                            x.coords.dot(g) / qn);
}

void HamiltonianRealization::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save: cannot open " + path);
    os.write(kMagic, sizeof(kMagic));
    write_raw(os, std::uint32_t{1});
    write_raw(os, static_cast<std::uint32_t>(N_));
    write_raw(os, seed_);
    const auto active = mixture_.pairs();
    write_raw(os, static_cast<std::uint32_t>(active.size()));
    for (const auto& [p, g2] : active) {
        write_raw(os, static_cast<std::uint32_t>(p));
        write_raw(os, g2);
    }
    for (const auto& [p, g2] : active) {
        (void)g2;
        const auto& t = tensors_[p - 1];
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("save: write failed for " + path);
}

HamiltonianRealization HamiltonianRealization::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load: bad magic in " + path);
    std::uint32_t version = 0, N = 0, n_active = 0;
    std::uint64_t seed = 0;
    read_raw(is, version);
    if (version != 1) throw std::runtime_error("load: unsupported version");
    read_raw(is, N);
    read_raw(is, seed);
    read_raw(is, n_active);
    std::vector<std::pair<int, double>> pairs;
    for (std::uint32_t i = 0; i < n_active; ++i) {
        std::uint32_t p = 0;
        double g2 = 0;
        read_raw(is, p);
        read_raw(is, g2);
        pairs.emplace_back(static_cast<int>(p), g2);
    }
    if (!is) throw std::runtime_error("load: truncated header in " + path);
    std::vector<std::pair<int, std::vector<double>>> tensors;
    for (const auto& [p, g2] : pairs) {
        (void)g2;
        std::vector<double> t(ipow(N, p));
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!is) throw std::runtime_error("load: truncated tensor data in " + path);
        tensors.emplace_back(p, std::move(t));
    }
    return from_tensors(Mixture::from_pairs(pairs), static_cast<int>(N), std::move(tensors),
                        seed);
}

}  // namespace pspin
