#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sg/diagnostics.hpp"
#include "sg/trainer.hpp"

namespace sg {

struct NetworkConfig {
    std::size_t width = 32;
    std::size_t depth = 6;
    ActKind activation = ActKind::Tanh;
    bool fourier_features = false;
    std::size_t fourier_max_freq = 12;
    Initializer init;
};

struct OptimizerConfig {
    double lr = 1e-3;
    double weight_decay = 0.0;
    ScheduleKind schedule = ScheduleKind::CosineAnnealing;
    std::size_t warmup_steps = 0;
    std::size_t decay_steps = 0;  // cosine horizon; 0 means the full run
    double lr_floor = 0.0;
};

struct PhaseConfig {
    std::size_t steps = 0;
    GradTransform preprocessor = GradTransform::None;
};

struct ExperimentConfig {
    std::string name = "experiment";
    ProblemSpec problem;
    NetworkConfig network;
    OptimizerConfig optimizer;
    StableGradConfig stablegrad;
    std::vector<PhaseConfig> phases;
    BatchSizes batch{1024, 256, 256};
    BatchSizes val_batch{2048, 512, 512};
    std::size_t validation_points = 10'000;  // reference-grid comparison budget
    std::uint64_t seed = 1;
    std::size_t metrics_every = 10;
    std::size_t checkpoint_every = 100;
    std::size_t checkpoint_start = 0;  // steps before the first checkpoint

    std::size_t total_steps() const;
};

// JSON round-trip; load throws ConfigError on malformed or missing files.
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

// Built-in presets: burgers-desk, burgers-desk-adamw, burgers-desk-sign,
// poisson-desk, helmholtz-desk, burgers-paper.
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

MlpNetwork build_network(const ExperimentConfig& cfg);
std::vector<TrainPhase> build_phases(const ExperimentConfig& cfg);

struct RunOutcome {
    int exit_code = 0;  // 0 success, 3 numeric abort
    TrainResult result;
    double relative_l2 = 0.0;
    double val_pde_loss = 0.0;
    double val_bc_loss = 0.0;
    double val_ic_loss = 0.0;
};

// Trains, writing metrics.jsonl and summary.json into out_dir.
RunOutcome run_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// Trains with periodic kernel diagnostics; writes table2.csv (one row per
// checkpoint) plus the metrics.jsonl of the underlying run.
RunOutcome run_diagnose(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// Per-layer scale probe across depth; writes scaleflow_<panel>.csv.
void run_scaleflow(const std::string& panel, std::size_t depth, std::size_t width,
                   ActKind activation, FanMode fan, GradTransform preprocessor,
                   std::uint64_t seed, const std::filesystem::path& out_dir);

struct LrControlReport {
    double plain_final = 0.0;
    double boosted_final = 0.0;
    double stablegrad_final = 0.0;
    double boosted_concentration = 0.0;
    double stablegrad_concentration = 0.0;
    int exit_code = 0;
};

// Three-arm comparison (plain AdamW, multiplier-boosted AdamW, StableGrad)
// on one seed; writes lr_control.csv and summary.json.
LrControlReport run_lr_control(const ExperimentConfig& cfg,
                               const std::vector<double>& multipliers,
                               const std::filesystem::path& out_dir);

// Piecewise multipliers reported for the scheduler control, one per
// equal fraction of the run.
const std::vector<double>& lr_control_multipliers();

void export_reference(const ProblemSpec& spec, std::size_t grid_points,
                      const std::filesystem::path& path);

struct SeedSweepSummary {
    std::vector<std::uint64_t> seeds;
    std::vector<double> final_val_losses;
    std::vector<double> relative_l2s;
    double mean_val_loss = 0.0, range_val_loss = 0.0;
    double mean_relative_l2 = 0.0, range_relative_l2 = 0.0;
    int exit_code = 0;
};

SeedSweepSummary run_seed_sweep(const ExperimentConfig& cfg,
                                const std::vector<std::uint64_t>& seeds,
                                const std::filesystem::path& out_dir);

// One metrics record as a single JSONL line (stable key order, no
// wall-clock so seeded reruns are byte-identical).
std::string metrics_to_jsonl(const MetricsRecord& rec);

}  // namespace sg
