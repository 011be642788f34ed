#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sg/optim.hpp"
#include "sg/residuals.hpp"

namespace sg {

enum class GradTransform { None, StableGrad, Sign };

std::string to_string(GradTransform t);
GradTransform grad_transform_from_string(const std::string& s);

// A contiguous span of optimizer steps sharing one gradient transform
// and one learning-rate schedule.
struct TrainPhase {
    std::size_t steps = 0;
    GradTransform transform = GradTransform::None;
    LrSchedule schedule;
};

struct TrainConfig {
    BatchSizes batch;
    BatchSizes val_batch;        // fixed validation batch, sampled once
    StableGradConfig stablegrad;
    double weight_decay = 0.0;
    std::size_t metrics_every = 10;
    std::size_t checkpoint_every = 0;  // 0 disables the callback
    std::size_t checkpoint_start = 0;  // steps to skip before the first checkpoint
    std::uint64_t seed = 0;
};

struct MetricsRecord {
    std::size_t step = 0;
    std::string phase;
    double lr = 0.0;
    double train_loss = 0.0;
    double pde_loss = 0.0;
    double bc_loss = 0.0;
    double ic_loss = 0.0;
    double val_loss = 0.0;
    double grad_norm = 0.0;
    double sigma_out = 0.0;
    double r_std_raw = 0.0;
    double r_std_scaled = 0.0;
    bool aborted = false;
};

// Called after the optimizer step; `realized_delta` is the actual
// parameter change of that step (theta_new - theta_old).
using CheckpointFn =
    std::function<void(std::size_t step, MlpNetwork& net, const DenseVector& realized_delta)>;

struct TrainResult {
    std::vector<MetricsRecord> metrics;
    std::size_t steps_completed = 0;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

TrainResult train(MlpNetwork& net, const ProblemSpec& spec, const TrainConfig& cfg,
                  const std::vector<TrainPhase>& phases,
                  const CheckpointFn& checkpoint = nullptr);

}  // namespace sg
