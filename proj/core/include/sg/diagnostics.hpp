#pragma once

#include <vector>

#include "sg/optim.hpp"
#include "sg/residuals.hpp"

namespace sg {

// Residual Jacobian J = dr/dtheta assembled densely, with parameter
// block column ranges for per-layer slicing.
struct JacobianBlocks {
    DenseMatrix j;  // residual entries x parameters
    DenseVector r;
    std::vector<MlpNetwork::BlockRange> blocks;

    std::size_t rows() const { return j.rows; }
    std::size_t params() const { return j.cols; }
    // g^l = J_l^T r
    std::vector<double> block_grad_sq_norms() const;
    DenseVector grad() const;  // J^T r
};

// Block-diagonal rescale operator P = diag(alpha_l I_l).
struct AlphaBlocks {
    std::vector<double> alpha;
};

constexpr std::size_t kJacobianEntryCap = 20'000'000;

JacobianBlocks assemble_jacobian(const MlpNetwork& net, const ProblemSpec& spec,
                                 const CollocationBatch& batch,
                                 std::size_t entry_cap = kJacobianEntryCap);

// rho = r^T K r / ||r||^2 = ||J^T r||^2 / ||r||^2, matrix-free.
double rayleigh_k(const JacobianBlocks& jac);
// rho_SG = sum_l alpha_l ||g^l||^2 / ||r||^2.
double rayleigh_ksg(const JacobianBlocks& jac, const AlphaBlocks& alphas);

PowerIterationResult lambda_max_k(const JacobianBlocks& jac, SeededRng& rng,
                                  double tol = 1e-8, std::size_t max_iter = 5000);
// Dominant eigenvalue of K_SG = J P J^T via v -> J(P(J^T v)).
PowerIterationResult lambda_max_ksg(const JacobianBlocks& jac, const AlphaBlocks& alphas,
                                    SeededRng& rng, double tol = 1e-8,
                                    std::size_t max_iter = 5000);

struct TheoremMargin {
    double s_sg = 0.0;    // eta * lambda_max(K_SG)
    double margin = 0.0;  // rho_SG (1 - s_sg/2) - rho
};
TheoremMargin theorem_margin(double rho, double rho_sg, double lambda_max_ksg, double eta);

// ||r(theta+dt) - r(theta) - J dt|| / (||r(theta+dt) - r(theta)|| + eps)
// on the given batch; the network is restored before returning.
double linearization_error(MlpNetwork& net, const ProblemSpec& spec,
                           const CollocationBatch& batch, const DenseVector& delta_theta,
                           double eps = 1e-12);

struct LocalDecrease {
    double delta_std = 0.0;
    double delta_sg = 0.0;
    bool theorem_holds = false;
    bool decrease_holds = false;
};

// Exact quadratic decrease of both linearized steps on a dense instance.
// alpha_per_param applies P entrywise (block structure already expanded).
LocalDecrease local_decrease_check(const DenseMatrix& j, const DenseVector& alpha_per_param,
                                   const DenseVector& r, double eta, SeededRng& rng);

struct RStdRatio {
    double ratio = 0.0;
    bool infinite = false;
};
RStdRatio r_std_ratio(const GradientBlocks& grads);
RStdRatio r_std_ratio(const std::vector<double>& sigmas);

struct UpdateGeometry {
    double valid_relative_update_ratio = 0.0;
    double max_energy_concentration = 0.0;
};
// delta_norms and param_norms are per-block l2 norms; blocks with a
// parameter norm below `floor` are excluded from the ratio.
UpdateGeometry update_geometry(const std::vector<double>& delta_norms,
                               const std::vector<double>& param_norms,
                               double floor = 1e-8);

struct KernelDiagnostics {
    std::size_t epoch = 0;
    double val_loss = 0.0;
    double rho = 0.0;
    double rho_sg = 0.0;
    double lambda_max_k = 0.0;
    double lambda_max_ksg = 0.0;
    double s_sg = 0.0;
    double margin_sg = 0.0;
    double e_lin = 0.0;
    double r_std_raw = 0.0;
    double r_std_scaled = 0.0;
};

// One Table-2-shaped record: kernels, Rayleigh quotients, margin, E_lin,
// and the gradient-scale imbalance before/after StableGrad, measured at
// theta (the state before `realized_delta` was applied).
KernelDiagnostics compute_kernel_diagnostics(MlpNetwork& net, const ProblemSpec& spec,
                                             const CollocationBatch& diag_batch,
                                             double eta, const StableGradConfig& cfg,
                                             const DenseVector& realized_delta,
                                             SeededRng& rng);

}  // namespace sg
