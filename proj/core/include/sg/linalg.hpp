#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sg/errors.hpp"

namespace sg {

struct DenseVector {
    std::vector<double> data;

    DenseVector() = default;
    explicit DenseVector(std::size_t n, double fill = 0.0) : data(n, fill) {}
    DenseVector(std::initializer_list<double> init) : data(init) {}

    std::size_t len() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    double* begin() { return data.data(); }
    double* end() { return data.data() + data.size(); }
    const double* begin() const { return data.data(); }
    const double* end() const { return data.data() + data.size(); }
};

// Row-major dense matrix.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static DenseMatrix identity(std::size_t n);
};

// Deterministic seeded RNG. Streams are identical across platforms:
// xoshiro256** seeded through splitmix64, with a fixed Box-Muller
// normal transform (std distributions are not portable).
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    // Uniform in [0, 1).
    double uniform01();
    double uniform(double lo, double hi);
    double normal();  // standard normal

    // Derive an independent deterministic substream.
    SeededRng fork(std::uint64_t salt) const;

  private:
    static std::uint64_t splitmix(std::uint64_t x);

    std::uint64_t seed_;
    std::uint64_t state_[4];  // xoshiro256** state
};

// --- kernels ---------------------------------------------------------------

DenseVector matvec(const DenseMatrix& m, const DenseVector& v);
// y += m^T v
void matvec_transpose_add(const DenseMatrix& m, const DenseVector& v, DenseVector& y);
double dot(const DenseVector& a, const DenseVector& b);
// y += a * x
void axpy(double a, const DenseVector& x, DenseVector& y);
double norm2(const DenseVector& v);
DenseMatrix outer(const DenseVector& a, const DenseVector& b);

// C = A * B
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// C += A^T * B
void matmul_at_b_add(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);

// Population standard deviation (divide by N). Throws DomainError on
// empty input; exactly 0 for constant input.
double empirical_std(const DenseVector& v);
double empirical_std(const double* data, std::size_t n);
// Std over a collection of spans treated as one flattened sample.
double empirical_std_joined(const std::vector<std::pair<const double*, std::size_t>>& parts);

struct PowerIterationResult {
    double lambda_max = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

// Dominant eigenvalue of a symmetric PSD operator. Convergence is a
// relative Rayleigh-quotient change below tol between iterations;
// non-convergence is reported via the flag, never silently.
PowerIterationResult power_iteration(
    const std::function<void(const DenseVector&, DenseVector&)>& apply,
    std::size_t dim, double tol, std::size_t max_iter, SeededRng& rng);

inline PowerIterationResult power_iteration(
    const std::function<void(const DenseVector&, DenseVector&)>& apply,
    std::size_t dim, SeededRng& rng) {
    return power_iteration(apply, dim, 1e-6, 2000, rng);
}

bool all_finite(const double* data, std::size_t n);

}  // namespace sg
