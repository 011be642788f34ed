#include "sg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sg {

std::vector<double> JacobianBlocks::block_grad_sq_norms() const {
    DenseVector g = grad();
    std::vector<double> out;
    for (const auto& b : blocks) {
        double acc = 0.0;
        for (std::size_t i = b.offset; i < b.offset + b.len; ++i) acc += g[i] * g[i];
        out.push_back(acc);
    }
    return out;
}

DenseVector JacobianBlocks::grad() const {
    DenseVector g(j.cols);
    matvec_transpose_add(j, r, g);
    return g;
}

JacobianBlocks assemble_jacobian(const MlpNetwork& net, const ProblemSpec& spec,
                                 const CollocationBatch& batch, std::size_t entry_cap) {
    ResidualAssembly asmb = assemble_residual(net, spec, batch);
    const std::size_t rows = asmb.residual.entries.len();
    const std::size_t params = net.param_count();
    if (rows * params > entry_cap)
        throw ConfigError("assemble_jacobian: " + std::to_string(rows * params) +
                          " Jacobian entries exceed the cap of " +
                          std::to_string(entry_cap) +
                          "; use a smaller diagnostic batch");

    JacobianBlocks jac;
    jac.j = DenseMatrix(rows, params);
    jac.r = asmb.residual.entries;
    jac.blocks = net.block_ranges();
    GradientBlocks row_grad = GradientBlocks::zeros_like(net);
    for (std::size_t k = 0; k < rows; ++k) {
        for (auto& blk : row_grad.blocks)
            for (auto& [p, n] : blk.parts_mut()) std::fill(p, p + n, 0.0);
        residual_entry_gradient(net, asmb, k, row_grad);
        const DenseVector flat = row_grad.flat();
        std::copy(flat.data.begin(), flat.data.end(), jac.j.data.data() + k * params);
    }
    return jac;
}

double rayleigh_k(const JacobianBlocks& jac) {
    const double rn = dot(jac.r, jac.r);
    if (rn == 0.0) throw DomainError("rayleigh: zero residual");
    DenseVector g = jac.grad();
    return dot(g, g) / rn;
}

double rayleigh_ksg(const JacobianBlocks& jac, const AlphaBlocks& alphas) {
    const double rn = dot(jac.r, jac.r);
    if (rn == 0.0) throw DomainError("rayleigh: zero residual");
    const auto sq = jac.block_grad_sq_norms();
    if (sq.size() != alphas.alpha.size())
        throw ShapeError("rayleigh_ksg: alpha count mismatch");
    double acc = 0.0;
    for (std::size_t l = 0; l < sq.size(); ++l) acc += alphas.alpha[l] * sq[l];
    return acc / rn;
}

namespace {

// v -> J diag(scale) J^T v  (scale == nullptr means identity)
void apply_kernel(const JacobianBlocks& jac, const DenseVector* scale,
                  const DenseVector& v, DenseVector& out) {
    DenseVector jt_v(jac.params());
    matvec_transpose_add(jac.j, v, jt_v);
    if (scale)
        for (std::size_t i = 0; i < jt_v.len(); ++i) jt_v[i] *= (*scale)[i];
    DenseVector jv = matvec(jac.j, jt_v);
    for (std::size_t i = 0; i < out.len(); ++i) out[i] += jv[i];
}

DenseVector expand_alphas(const JacobianBlocks& jac, const AlphaBlocks& alphas) {
    DenseVector scale(jac.params());
    for (std::size_t l = 0; l < jac.blocks.size(); ++l)
        for (std::size_t i = jac.blocks[l].offset;
             i < jac.blocks[l].offset + jac.blocks[l].len; ++i)
            scale[i] = alphas.alpha[l];
    return scale;
}

}  // namespace

PowerIterationResult lambda_max_k(const JacobianBlocks& jac, SeededRng& rng, double tol,
                                  std::size_t max_iter) {
    return power_iteration(
        [&](const DenseVector& v, DenseVector& out) { apply_kernel(jac, nullptr, v, out); },
        jac.rows(), tol, max_iter, rng);
}

PowerIterationResult lambda_max_ksg(const JacobianBlocks& jac, const AlphaBlocks& alphas,
                                    SeededRng& rng, double tol, std::size_t max_iter) {
    if (alphas.alpha.size() != jac.blocks.size())
        throw ShapeError("lambda_max_ksg: alpha count mismatch");
    const DenseVector scale = expand_alphas(jac, alphas);
    return power_iteration(
        [&](const DenseVector& v, DenseVector& out) { apply_kernel(jac, &scale, v, out); },
        jac.rows(), tol, max_iter, rng);
}

TheoremMargin theorem_margin(double rho, double rho_sg, double lambda_max_ksg, double eta) {
    TheoremMargin m;
    m.s_sg = eta * lambda_max_ksg;
    m.margin = rho_sg * (1.0 - 0.5 * m.s_sg) - rho;
    return m;
}

double linearization_error(MlpNetwork& net, const ProblemSpec& spec,
                           const CollocationBatch& batch, const DenseVector& delta_theta,
                           double eps) {
    const DenseVector theta0 = net.flatten_params();
    if (delta_theta.len() != theta0.len())
        throw ShapeError("linearization_error: delta shape mismatch");

    JacobianBlocks jac = assemble_jacobian(net, spec, batch);
    DenseVector j_dt = matvec(jac.j, delta_theta);

    DenseVector theta1 = theta0;
    axpy(1.0, delta_theta, theta1);
    net.unflatten_params(theta1);
    ResidualAssembly asmb1 = assemble_residual(net, spec, batch);
    net.unflatten_params(theta0);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < jac.r.len(); ++i) {
        const double dr = asmb1.residual.entries[i] - jac.r[i];
        const double err = dr - j_dt[i];
        num += err * err;
        den += dr * dr;
    }
    return std::sqrt(num) / (std::sqrt(den) + eps);
}

LocalDecrease local_decrease_check(const DenseMatrix& j, const DenseVector& alpha_per_param,
                                   const DenseVector& r, double eta, SeededRng& rng) {
    if (j.cols != alpha_per_param.len() || j.rows != r.len())
        throw ShapeError("local_decrease_check: shape mismatch");
    LocalDecrease res;

    DenseVector g(j.cols);
    matvec_transpose_add(j, r, g);
    DenseVector pg = g;
    for (std::size_t i = 0; i < pg.len(); ++i) pg[i] *= alpha_per_param[i];

    const DenseVector kr = matvec(j, g);    // K r
    const DenseVector ksgr = matvec(j, pg); // K_SG r

    const double r_k_r = dot(g, g);
    const double r_ksg_r = dot(g, pg);
    res.delta_std = eta * r_k_r - 0.5 * eta * eta * dot(kr, kr);
    res.delta_sg = eta * r_ksg_r - 0.5 * eta * eta * dot(ksgr, ksgr);

    const double rn = dot(r, r);
    if (rn == 0.0) throw DomainError("local_decrease_check: zero residual");
    const double rho = r_k_r / rn;
    const double rho_sg = r_ksg_r / rn;

    auto lam = power_iteration(
        [&](const DenseVector& v, DenseVector& out) {
            DenseVector jt_v(j.cols);
            matvec_transpose_add(j, v, jt_v);
            for (std::size_t i = 0; i < jt_v.len(); ++i) jt_v[i] *= alpha_per_param[i];
            DenseVector jv = matvec(j, jt_v);
            for (std::size_t i = 0; i < out.len(); ++i) out[i] += jv[i];
        },
        j.rows, 1e-12, 20000, rng);

    const TheoremMargin m = theorem_margin(rho, rho_sg, lam.lambda_max, eta);
    res.theorem_holds = lam.converged && m.s_sg < 2.0 && m.margin > 0.0;
    res.decrease_holds = res.delta_sg > res.delta_std;
    return res;
}

RStdRatio r_std_ratio(const std::vector<double>& sigmas) {
    if (sigmas.size() < 2)
        throw ContractError("r_std_ratio: need at least two blocks");
    const double smax = *std::max_element(sigmas.begin(), sigmas.end());
    const double smin = *std::min_element(sigmas.begin(), sigmas.end());
    RStdRatio r;
    if (smin <= 0.0) {
        r.infinite = true;
        r.ratio = std::numeric_limits<double>::infinity();
        return r;
    }
    r.ratio = smax / smin;
    return r;
}

RStdRatio r_std_ratio(const GradientBlocks& grads) {
    std::vector<double> sigmas;
    for (std::size_t l = 0; l < grads.blocks.size(); ++l)
        sigmas.push_back(grads.block_std(l));
    return r_std_ratio(sigmas);
}

UpdateGeometry update_geometry(const std::vector<double>& delta_norms,
                               const std::vector<double>& param_norms, double floor) {
    if (delta_norms.size() != param_norms.size())
        throw ShapeError("update_geometry: block count mismatch");
    UpdateGeometry geo;
    double rel_max = -1.0, rel_min = -1.0;
    double energy_sum = 0.0, energy_max = 0.0;
    for (std::size_t l = 0; l < delta_norms.size(); ++l) {
        const double e = delta_norms[l] * delta_norms[l];
        energy_sum += e;
        energy_max = std::max(energy_max, e);
        if (param_norms[l] < floor) continue;
        const double rel = delta_norms[l] / param_norms[l];
        if (rel_max < 0.0 || rel > rel_max) rel_max = rel;
        if (rel_min < 0.0 || rel < rel_min) rel_min = rel;
    }
    if (rel_max < 0.0)
        throw DomainError("update_geometry: all blocks below the validity floor");
    geo.valid_relative_update_ratio = rel_min > 0.0 ? rel_max / rel_min
                                                    : std::numeric_limits<double>::infinity();
    geo.max_energy_concentration = energy_sum > 0.0 ? energy_max / energy_sum : 0.0;
    return geo;
}

KernelDiagnostics compute_kernel_diagnostics(MlpNetwork& net, const ProblemSpec& spec,
                                             const CollocationBatch& diag_batch,
                                             double eta, const StableGradConfig& cfg,
                                             const DenseVector& realized_delta,
                                             SeededRng& rng) {
    KernelDiagnostics diag;
    const bool have_delta = realized_delta.len() == net.param_count();
    const DenseVector theta_new = net.flatten_params();
    if (have_delta) {
        DenseVector theta_old = theta_new;
        axpy(-1.0, realized_delta, theta_old);
        net.unflatten_params(theta_old);
    }

    JacobianBlocks jac = assemble_jacobian(net, spec, diag_batch);
    diag.val_loss = 0.5 * dot(jac.r, jac.r);

    // alphas from the actual residual gradient at theta
    ResidualAssembly asmb = assemble_residual(net, spec, diag_batch);
    double sigma_out = 0.0;
    GradientBlocks grads = residual_gradient(net, asmb, &sigma_out);
    if (cfg.sigma_source == SigmaSource::ResidualStd)
        sigma_out = empirical_std(asmb.residual.entries);

    std::vector<double> sigma_raw;
    for (std::size_t l = 0; l < grads.blocks.size(); ++l)
        sigma_raw.push_back(grads.block_std(l));
    AlphaBlocks alphas;
    for (double s : sigma_raw) alphas.alpha.push_back(sigma_out / (s + cfg.epsilon));

    diag.rho = rayleigh_k(jac);
    diag.rho_sg = rayleigh_ksg(jac, alphas);
    auto lk = lambda_max_k(jac, rng);
    auto lsg = lambda_max_ksg(jac, alphas, rng);
    diag.lambda_max_k = lk.lambda_max;
    diag.lambda_max_ksg = lsg.lambda_max;
    const TheoremMargin m = theorem_margin(diag.rho, diag.rho_sg, diag.lambda_max_ksg, eta);
    diag.s_sg = m.s_sg;
    diag.margin_sg = m.margin;

    diag.r_std_raw = r_std_ratio(sigma_raw).ratio;
    std::vector<double> sigma_scaled;
    for (std::size_t l = 0; l < sigma_raw.size(); ++l)
        sigma_scaled.push_back(sigma_raw[l] * alphas.alpha[l]);
    diag.r_std_scaled = r_std_ratio(sigma_scaled).ratio;

    if (have_delta) {
        diag.e_lin = linearization_error(net, spec, diag_batch, realized_delta);
        net.unflatten_params(theta_new);
    }
    return diag;
}

}  // namespace sg
