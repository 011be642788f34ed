#pragma once

#include <cmath>
#include <string>

#include "sg/errors.hpp"

namespace sg {

enum class ActKind { Tanh, Silu, Identity };

// Scalar activation with analytic derivatives up to third order. The
// third derivative is needed to backpropagate through the diagonal
// second-order input-derivative channel.
struct Activation {
    ActKind kind = ActKind::Tanh;

    double f(double x) const {
        switch (kind) {
            case ActKind::Tanh: return std::tanh(x);
            case ActKind::Silu: return x * sigmoid(x);
            case ActKind::Identity: return x;
        }
        return x;
    }

    double d1(double x) const {
        switch (kind) {
            case ActKind::Tanh: {
                const double t = std::tanh(x);
                return 1.0 - t * t;
            }
            case ActKind::Silu: {
                const double s = sigmoid(x);
                return s * (1.0 + x * (1.0 - s));
            }
            case ActKind::Identity: return 1.0;
        }
        return 1.0;
    }

    double d2(double x) const {
        switch (kind) {
            case ActKind::Tanh: {
                const double t = std::tanh(x);
                return -2.0 * t * (1.0 - t * t);
            }
            case ActKind::Silu: {
                const double s = sigmoid(x);
                const double sp = s * (1.0 - s);
                return 2.0 * sp + x * sp * (1.0 - 2.0 * s);
            }
            case ActKind::Identity: return 0.0;
        }
        return 0.0;
    }

    double d3(double x) const {
        switch (kind) {
            case ActKind::Tanh: {
                const double t = std::tanh(x);
                return (6.0 * t * t - 2.0) * (1.0 - t * t);
            }
            case ActKind::Silu: {
                const double s = sigmoid(x);
                const double sp = s * (1.0 - s);
                const double one_minus_2s = 1.0 - 2.0 * s;
                return 3.0 * sp * one_minus_2s +
                       x * (sp * one_minus_2s * one_minus_2s - 2.0 * sp * sp);
            }
            case ActKind::Identity: return 0.0;
        }
        return 0.0;
    }

    // Activation-aware default gain for fan-scaled initialization.
    // SiLU is near-linear at the origin, gain 1.
    double default_gain() const {
        switch (kind) {
            case ActKind::Tanh: return 5.0 / 3.0;
            case ActKind::Silu: return 1.0;
            case ActKind::Identity: return 1.0;
        }
        return 1.0;
    }

  private:
    static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
};

ActKind act_kind_from_string(const std::string& s);
std::string to_string(ActKind k);

}  // namespace sg
