#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sg/network.hpp"

namespace sg {

enum class ReferenceScale { OutputAdjoint, NormPreserving, InnerProductPreserving };
enum class BlockMode { PerLayerJoint, PerTensor };
// What feeds the output-adjoint reference scale during training.
enum class SigmaSource { ValueAdjoint, ResidualStd };

struct StableGradConfig {
    double epsilon = 1e-12;
    ReferenceScale reference_scale = ReferenceScale::OutputAdjoint;
    BlockMode block_mode = BlockMode::PerLayerJoint;
    SigmaSource sigma_source = SigmaSource::ValueAdjoint;
};

struct RescaleReport {
    double reference = 0.0;               // the realized scale c
    std::vector<double> sigma_raw;        // per rescale unit
    std::vector<double> alpha;
    std::vector<double> sigma_scaled;
};

// g_block <- (c / (sigma_block + eps)) * g_block, in place.
RescaleReport stablegrad_rescale(GradientBlocks& grads, double sigma_out,
                                 const StableGradConfig& cfg);

// Per-layer alpha factors without mutating the gradient (PerLayerJoint).
std::vector<double> stablegrad_alphas(const GradientBlocks& grads, double sigma_out,
                                      const StableGradConfig& cfg);

void sign_rescale(GradientBlocks& grads);

struct AdamWState {
    DenseVector m, v;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;

    static AdamWState init(std::size_t n, double weight_decay = 0.0);
};

// Bias-corrected moment update followed by decoupled weight decay.
void adamw_step(DenseVector& params, const DenseVector& grads, AdamWState& state,
                double lr);

void sgd_step(DenseVector& params, const DenseVector& grads, double lr);

enum class ScheduleKind { Constant, CosineAnnealing, WarmupThenConstant, PiecewiseMultiplier };

struct LrSchedule {
    ScheduleKind kind = ScheduleKind::Constant;
    double base_lr = 1e-3;
    std::size_t total_steps = 0;   // cosine horizon; lr holds at floor_lr past it
    std::size_t warmup_steps = 0;
    double floor_lr = 0.0;
    struct Interval {
        std::size_t begin = 0;  // inclusive
        std::size_t end = 0;    // exclusive
        double multiplier = 1.0;
    };
    std::vector<Interval> intervals;

    static LrSchedule constant(double base_lr);
    static LrSchedule cosine(double base_lr, std::size_t total_steps);
    static LrSchedule warmup(double base_lr, std::size_t warmup_steps);
    // CSV rows "begin,end,multiplier" with step indices
    static LrSchedule piecewise_from_csv(const std::string& path, double base_lr);
    // Map paper epoch-interval multipliers onto [0, total_steps) by
    // equal fractions.
    static LrSchedule piecewise_scaled(const std::vector<double>& multipliers,
                                       double base_lr, std::size_t total_steps);
};

double lr_at(const LrSchedule& schedule, std::size_t step);

std::string to_string(ReferenceScale s);
ReferenceScale reference_scale_from_string(const std::string& s);

}  // namespace sg
