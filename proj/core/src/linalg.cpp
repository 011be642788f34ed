#include "sg/linalg.hpp"

#include <cmath>
#include <numbers>

namespace sg {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::uint64_t SeededRng::splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
}  // namespace

std::uint64_t SeededRng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (int i = 0; i < 4; ++i) {
        s = splitmix(s + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL);
        state_[i] = s;
    }
    // all-zero state is invalid for xoshiro
    if (state_[0] == 0 && state_[1] == 0 && state_[2] == 0 && state_[3] == 0)
        state_[0] = 1;
}

double SeededRng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double SeededRng::normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::fork(std::uint64_t salt) const {
    return SeededRng(splitmix(seed_ ^ rotl(salt, 13) ^ 0xd2b74407b1ce6e93ULL));
}

DenseVector matvec(const DenseMatrix& m, const DenseVector& v) {
    if (m.cols != v.len())
        throw ShapeError("matvec: matrix cols " + std::to_string(m.cols) +
                         " != vector len " + std::to_string(v.len()));
    DenseVector out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
    return out;
}

void matvec_transpose_add(const DenseMatrix& m, const DenseVector& v, DenseVector& y) {
    if (m.rows != v.len() || m.cols != y.len())
        throw ShapeError("matvec_transpose_add: shape mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        const double vi = v[i];
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += vi * row[j];
    }
}

double dot(const DenseVector& a, const DenseVector& b) {
    if (a.len() != b.len()) throw ShapeError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.len(); ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double a, const DenseVector& x, DenseVector& y) {
    if (x.len() != y.len()) throw ShapeError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.len(); ++i) y[i] += a * x[i];
}

double norm2(const DenseVector& v) {
    double acc = 0.0;
    for (double x : v.data) acc += x * x;
    return std::sqrt(acc);
}

DenseMatrix outer(const DenseVector& a, const DenseVector& b) {
    DenseMatrix m(a.len(), b.len());
    for (std::size_t i = 0; i < a.len(); ++i)
        for (std::size_t j = 0; j < b.len(); ++j) m(i, j) = a[i] * b[j];
    return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: inner dimension mismatch");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* crow = c.data.data() + i * c.cols;
        const double* arow = a.data.data() + i * a.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

void matmul_at_b_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
    if (a.rows != b.rows || c.rows != a.cols || c.cols != b.cols)
        throw ShapeError("matmul_at_b_add: shape mismatch");
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.data.data() + k * a.cols;
        const double* brow = b.data.data() + k * b.cols;
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.data.data() + i * c.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
}

double empirical_std(const double* data, std::size_t n) {
    if (n == 0) throw DomainError("empirical_std: empty input");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += data[i];
    mean /= static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = data[i] - mean;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

double empirical_std(const DenseVector& v) {
    return empirical_std(v.data.data(), v.len());
}

double empirical_std_joined(const std::vector<std::pair<const double*, std::size_t>>& parts) {
    std::size_t n = 0;
    double mean = 0.0;
    for (const auto& [p, len] : parts) {
        for (std::size_t i = 0; i < len; ++i) mean += p[i];
        n += len;
    }
    if (n == 0) throw DomainError("empirical_std_joined: empty input");
    mean /= static_cast<double>(n);
    double acc = 0.0;
    for (const auto& [p, len] : parts) {
        for (std::size_t i = 0; i < len; ++i) {
            const double d = p[i] - mean;
            acc += d * d;
        }
    }
    return std::sqrt(acc / static_cast<double>(n));
}

PowerIterationResult power_iteration(
    const std::function<void(const DenseVector&, DenseVector&)>& apply,
    std::size_t dim, double tol, std::size_t max_iter, SeededRng& rng) {
    PowerIterationResult res;
    if (dim == 0) {
        res.converged = true;
        return res;
    }
    DenseVector v(dim), w(dim);
    for (auto& x : v.data) x = rng.normal();
    double vn = norm2(v);
    for (auto& x : v.data) x /= vn;

    double lambda_prev = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        std::fill(w.data.begin(), w.data.end(), 0.0);
        apply(v, w);
        const double lambda = dot(v, w);  // Rayleigh quotient, v normalized
        const double wn = norm2(w);
        res.iterations = it;
        if (wn == 0.0) {
            // operator annihilates the iterate: dominant eigenvalue 0
            res.lambda_max = 0.0;
            res.converged = true;
            return res;
        }
        if (it > 1 &&
            std::abs(lambda - lambda_prev) < tol * std::max(std::abs(lambda), 1e-300)) {
            res.lambda_max = lambda;
            res.converged = true;
            return res;
        }
        lambda_prev = lambda;
        for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / wn;
    }
    res.lambda_max = lambda_prev;
    res.converged = false;
    return res;
}

bool all_finite(const double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(data[i])) return false;
    return true;
}

}  // namespace sg
