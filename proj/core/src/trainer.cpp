#include "sg/trainer.hpp"

#include <cmath>

#include "sg/errors.hpp"

namespace sg {

std::string to_string(GradTransform t) {
    switch (t) {
        case GradTransform::None: return "adamw";
        case GradTransform::StableGrad: return "stablegrad";
        case GradTransform::Sign: return "sign";
    }
    throw ContractError("unknown GradTransform");
}

GradTransform grad_transform_from_string(const std::string& s) {
    if (s == "adamw" || s == "none") return GradTransform::None;
    if (s == "stablegrad") return GradTransform::StableGrad;
    if (s == "sign") return GradTransform::Sign;
    throw ConfigError("unknown gradient transform '" + s + "'");
}

namespace {

double batch_loss(const MlpNetwork& net, const ProblemSpec& spec,
                  const CollocationBatch& batch) {
    return assemble_residual(net, spec, batch).loss();
}

std::vector<double> block_stds(const GradientBlocks& grads) {
    std::vector<double> s;
    for (std::size_t l = 0; l < grads.blocks.size(); ++l) s.push_back(grads.block_std(l));
    return s;
}

double safe_ratio(const std::vector<double>& sigmas) {
    double smax = 0.0, smin = -1.0;
    for (double s : sigmas) {
        smax = std::max(smax, s);
        if (smin < 0.0 || s < smin) smin = s;
    }
    return smin > 0.0 ? smax / smin : 0.0;
}

}  // namespace

TrainResult train(MlpNetwork& net, const ProblemSpec& spec, const TrainConfig& cfg,
                  const std::vector<TrainPhase>& phases, const CheckpointFn& checkpoint) {
    TrainResult result;

    SeededRng batch_rng = SeededRng(cfg.seed).fork(0x62617463686573ULL);  // "batches"
    SeededRng val_rng = SeededRng(cfg.seed).fork(0x76616cULL);            // "val"
    const CollocationBatch val_batch = sample_batch(spec, cfg.val_batch, val_rng);

    AdamWState opt = AdamWState::init(net.param_count(), cfg.weight_decay);

    std::size_t global_step = 0;
    std::size_t total_steps = 0;
    for (const auto& phase : phases) total_steps += phase.steps;

    DenseVector theta = net.flatten_params();
    DenseVector realized_delta(theta.len());

    for (const auto& phase : phases) {
        for (std::size_t k = 0; k < phase.steps; ++k, ++global_step) {
            // schedules are indexed by global step so a phase change never
            // restarts the schedule
            const double lr = lr_at(phase.schedule, global_step);
            CollocationBatch batch = sample_batch(spec, cfg.batch, batch_rng);

            MetricsRecord rec;
            rec.step = global_step;
            rec.phase = to_string(phase.transform);
            rec.lr = lr;

            double sigma_out = 0.0;
            GradientBlocks grads;
            try {
                ResidualAssembly asmb = assemble_residual(net, spec, batch);
                rec.train_loss = asmb.loss();
                rec.pde_loss = asmb.component_loss(BlockLabel::PDE);
                rec.bc_loss = asmb.component_loss(BlockLabel::BC);
                rec.ic_loss = asmb.component_loss(BlockLabel::IC);
                grads = residual_gradient(net, asmb, &sigma_out);
                if (cfg.stablegrad.sigma_source == SigmaSource::ResidualStd)
                    sigma_out = empirical_std(asmb.residual.entries);
                bool grads_finite = true;
                for (std::size_t l = 0; l < grads.blocks.size(); ++l)
                    grads_finite = grads_finite && grads.block_finite(l);
                if (!std::isfinite(rec.train_loss) || !grads_finite)
                    throw OverflowError("non-finite loss or gradient", -1);
            } catch (const OverflowError& e) {
                rec.aborted = true;
                result.metrics.push_back(rec);
                result.aborted = true;
                result.abort_reason =
                    "numeric abort at step " + std::to_string(global_step) + ": " + e.what();
                result.steps_completed = global_step;
                result.final_train_loss = rec.train_loss;
                result.final_val_loss = batch_loss(net, spec, val_batch);
                return result;
            }
            rec.sigma_out = sigma_out;

            const std::vector<double> raw_sigmas = block_stds(grads);
            rec.r_std_raw = safe_ratio(raw_sigmas);

            switch (phase.transform) {
                case GradTransform::None:
                    rec.r_std_scaled = rec.r_std_raw;
                    break;
                case GradTransform::StableGrad: {
                    RescaleReport report =
                        stablegrad_rescale(grads, sigma_out, cfg.stablegrad);
                    rec.r_std_scaled = safe_ratio(report.sigma_scaled);
                    break;
                }
                case GradTransform::Sign:
                    sign_rescale(grads);
                    rec.r_std_scaled = safe_ratio(block_stds(grads));
                    break;
            }

            const DenseVector flat_grad = grads.flat();
            rec.grad_norm = norm2(flat_grad);

            const DenseVector theta_old = theta;
            adamw_step(theta, flat_grad, opt, lr);
            for (std::size_t i = 0; i < theta.len(); ++i)
                realized_delta[i] = theta[i] - theta_old[i];
            net.unflatten_params(theta);

            const bool last = global_step + 1 == total_steps;
            if (cfg.metrics_every > 0 &&
                (global_step % cfg.metrics_every == 0 || last)) {
                rec.val_loss = batch_loss(net, spec, val_batch);
                result.metrics.push_back(rec);
            }
            // first checkpoint lands after a full cadence interval, and
            // checkpoint_start skips the initial transient entirely
            if (checkpoint && cfg.checkpoint_every > 0 &&
                (global_step + 1) % cfg.checkpoint_every == 0 &&
                global_step + 1 > cfg.checkpoint_start)
                checkpoint(global_step, net, realized_delta);

            result.final_train_loss = rec.train_loss;
        }
    }

    result.steps_completed = global_step;
    result.final_val_loss = batch_loss(net, spec, val_batch);
    return result;
}

}  // namespace sg
