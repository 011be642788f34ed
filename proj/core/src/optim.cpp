#include "sg/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sg {

namespace {

// A rescale unit: the spans sharing one sigma/alpha. PerLayerJoint
// yields one unit per layer, PerTensor one per tensor.
struct Unit {
    std::size_t block = 0;
    std::vector<std::pair<double*, std::size_t>> parts;
};

std::vector<Unit> rescale_units(GradientBlocks& grads, BlockMode mode) {
    std::vector<Unit> units;
    for (std::size_t l = 0; l < grads.blocks.size(); ++l) {
        auto parts = grads.blocks[l].parts_mut();
        if (mode == BlockMode::PerLayerJoint) {
            units.push_back({l, std::move(parts)});
        } else {
            for (auto& p : parts) units.push_back({l, {p}});
        }
    }
    return units;
}

double unit_std(const Unit& u) {
    std::vector<std::pair<const double*, std::size_t>> parts;
    for (const auto& [p, n] : u.parts) parts.emplace_back(p, n);
    return empirical_std_joined(parts);
}

double unit_sq_norm(const Unit& u) {
    double acc = 0.0;
    for (const auto& [p, n] : u.parts)
        for (std::size_t i = 0; i < n; ++i) acc += p[i] * p[i];
    return acc;
}

}  // namespace

RescaleReport stablegrad_rescale(GradientBlocks& grads, double sigma_out,
                                 const StableGradConfig& cfg) {
    for (std::size_t l = 0; l < grads.blocks.size(); ++l)
        if (!grads.block_finite(l))
            throw OverflowError("stablegrad_rescale: non-finite gradient in block " +
                                    std::to_string(l),
                                static_cast<int>(l));

    auto units = rescale_units(grads, cfg.block_mode);
    RescaleReport report;
    report.sigma_raw.reserve(units.size());
    std::vector<double> sq_norms;
    for (const auto& u : units) {
        report.sigma_raw.push_back(unit_std(u));
        sq_norms.push_back(unit_sq_norm(u));
    }

    double c = sigma_out;
    if (cfg.reference_scale == ReferenceScale::NormPreserving) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < units.size(); ++i) {
            const double s = report.sigma_raw[i] + cfg.epsilon;
            num += sq_norms[i];
            den += sq_norms[i] / (s * s);
        }
        c = den > 0.0 ? std::sqrt(num / den) : 0.0;
    } else if (cfg.reference_scale == ReferenceScale::InnerProductPreserving) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < units.size(); ++i) {
            const double s = report.sigma_raw[i] + cfg.epsilon;
            num += sq_norms[i];
            den += sq_norms[i] / s;
        }
        c = den > 0.0 ? num / den : 0.0;
    }
    report.reference = c;

    for (std::size_t i = 0; i < units.size(); ++i) {
        const double alpha = c / (report.sigma_raw[i] + cfg.epsilon);
        report.alpha.push_back(alpha);
        for (auto& [p, n] : units[i].parts)
            for (std::size_t k = 0; k < n; ++k) p[k] *= alpha;
        report.sigma_scaled.push_back(report.sigma_raw[i] * alpha);
    }
    return report;
}

std::vector<double> stablegrad_alphas(const GradientBlocks& grads, double sigma_out,
                                      const StableGradConfig& cfg) {
    std::vector<double> alphas;
    for (std::size_t l = 0; l < grads.blocks.size(); ++l)
        alphas.push_back(sigma_out / (grads.block_std(l) + cfg.epsilon));
    return alphas;
}

void sign_rescale(GradientBlocks& grads) {
    for (auto& blk : grads.blocks)
        for (auto& [p, n] : blk.parts_mut())
            for (std::size_t i = 0; i < n; ++i)
                p[i] = (p[i] > 0.0) ? 1.0 : (p[i] < 0.0 ? -1.0 : 0.0);
}

AdamWState AdamWState::init(std::size_t n, double weight_decay) {
    AdamWState st;
    st.m = DenseVector(n);
    st.v = DenseVector(n);
    st.weight_decay = weight_decay;
    return st;
}

void adamw_step(DenseVector& params, const DenseVector& grads, AdamWState& state,
                double lr) {
    if (params.len() != grads.len() || params.len() != state.m.len())
        throw ShapeError("adamw_step: shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.len(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * (mhat / (std::sqrt(vhat) + state.eps) +
                           state.weight_decay * params[i]);
    }
}

void sgd_step(DenseVector& params, const DenseVector& grads, double lr) {
    if (params.len() != grads.len()) throw ShapeError("sgd_step: shape mismatch");
    for (std::size_t i = 0; i < params.len(); ++i) params[i] -= lr * grads[i];
}

LrSchedule LrSchedule::constant(double base_lr) {
    LrSchedule s;
    s.kind = ScheduleKind::Constant;
    s.base_lr = base_lr;
    return s;
}

LrSchedule LrSchedule::cosine(double base_lr, std::size_t total_steps) {
    LrSchedule s;
    s.kind = ScheduleKind::CosineAnnealing;
    s.base_lr = base_lr;
    s.total_steps = total_steps;
    return s;
}

LrSchedule LrSchedule::warmup(double base_lr, std::size_t warmup_steps) {
    LrSchedule s;
    s.kind = ScheduleKind::WarmupThenConstant;
    s.base_lr = base_lr;
    s.warmup_steps = warmup_steps;
    return s;
}

LrSchedule LrSchedule::piecewise_from_csv(const std::string& path, double base_lr) {
    std::ifstream in(path);
    if (!in) throw ConfigError("piecewise_from_csv: cannot open " + path);
    LrSchedule s;
    s.kind = ScheduleKind::PiecewiseMultiplier;
    s.base_lr = base_lr;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') ||
            !std::getline(ss, c, ','))
            throw ConfigError("piecewise_from_csv: malformed row: " + line);
        Interval iv;
        iv.begin = std::stoull(a);
        iv.end = std::stoull(b);
        iv.multiplier = std::stod(c);
        if (iv.multiplier <= 0.0)
            throw ConfigError("piecewise_from_csv: multiplier must be positive");
        s.intervals.push_back(iv);
    }
    return s;
}

LrSchedule LrSchedule::piecewise_scaled(const std::vector<double>& multipliers,
                                        double base_lr, std::size_t total_steps) {
    LrSchedule s;
    s.kind = ScheduleKind::PiecewiseMultiplier;
    s.base_lr = base_lr;
    s.total_steps = total_steps;
    const std::size_t n = multipliers.size();
    for (std::size_t i = 0; i < n; ++i) {
        Interval iv;
        iv.begin = total_steps * i / n;
        iv.end = (i + 1 == n) ? total_steps : total_steps * (i + 1) / n;
        iv.multiplier = multipliers[i];
        if (iv.multiplier <= 0.0)
            throw ConfigError("piecewise_scaled: multiplier must be positive");
        s.intervals.push_back(iv);
    }
    return s;
}

double lr_at(const LrSchedule& schedule, std::size_t step) {
    switch (schedule.kind) {
        case ScheduleKind::Constant:
            return schedule.base_lr;
        case ScheduleKind::CosineAnnealing: {
            if (schedule.total_steps == 0)
                throw ConfigError("lr_at: cosine schedule needs total_steps");
            const double frac =
                std::min(1.0, static_cast<double>(step) /
                                  static_cast<double>(schedule.total_steps));
            const double lr =
                schedule.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
            return std::max(lr, schedule.floor_lr);
        }
        case ScheduleKind::WarmupThenConstant: {
            if (step >= schedule.warmup_steps) return schedule.base_lr;
            return schedule.base_lr * static_cast<double>(step + 1) /
                   static_cast<double>(schedule.warmup_steps);
        }
        case ScheduleKind::PiecewiseMultiplier: {
            for (const auto& iv : schedule.intervals)
                if (step >= iv.begin && step < iv.end)
                    return schedule.base_lr * iv.multiplier;
            throw ConfigError("lr_at: step " + std::to_string(step) +
                              " not covered by any piecewise interval");
        }
    }
    return schedule.base_lr;
}

std::string to_string(ReferenceScale s) {
    switch (s) {
        case ReferenceScale::OutputAdjoint: return "output_adjoint";
        case ReferenceScale::NormPreserving: return "norm_preserving";
        case ReferenceScale::InnerProductPreserving: return "inner_product_preserving";
    }
    return "?";
}

ReferenceScale reference_scale_from_string(const std::string& s) {
    if (s == "output_adjoint") return ReferenceScale::OutputAdjoint;
    if (s == "norm_preserving") return ReferenceScale::NormPreserving;
    if (s == "inner_product_preserving") return ReferenceScale::InnerProductPreserving;
    throw ConfigError("unknown reference scale: " + s);
}

}  // namespace sg
