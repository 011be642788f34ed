#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sg/activation.hpp"
#include "sg/linalg.hpp"

namespace sg {

enum class NormKind { BatchNorm, LayerNorm };
enum class FanMode { FanIn, FanOut };
enum class InitDistribution { Uniform, Normal };

// Sinusoidal input features sin(pi f x_i), cos(pi f x_i) per coordinate,
// optionally keeping the raw coordinates.
struct FourierFeatures {
    std::vector<double> frequencies;
    bool include_raw = true;
    std::size_t coordinate_count = 1;

    static FourierFeatures standard(std::size_t coords, std::size_t max_freq = 12);

    std::size_t output_dim() const {
        return coordinate_count * (2 * frequencies.size() + (include_raw ? 1 : 0));
    }
    std::size_t per_coord_dim() const {
        return 2 * frequencies.size() + (include_raw ? 1 : 0);
    }
};

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation;
    std::optional<NormKind> norm;  // diagnostic use only
};

struct MlpNetwork {
    std::size_t input_dim = 0;
    std::optional<FourierFeatures> feature_map;
    std::vector<LayerSpec> layers;
    std::vector<DenseMatrix> weights;   // per layer, out_dim x in_dim
    std::vector<DenseVector> biases;    // per layer, out_dim
    std::vector<DenseVector> norm_scale;  // gamma, empty when layer has no norm
    std::vector<DenseVector> norm_shift;  // beta

    // Hidden stack of `depth` layers of `width`, then a linear readout.
    static MlpNetwork make(std::size_t input_dim, std::size_t width, std::size_t depth,
                           std::size_t output_dim, ActKind act,
                           std::optional<FourierFeatures> features = std::nullopt,
                           std::optional<NormKind> norm = std::nullopt);

    std::size_t depth() const { return layers.size(); }
    std::size_t feature_dim() const {
        return feature_map ? feature_map->output_dim() : input_dim;
    }
    std::size_t output_dim() const { return layers.back().out_dim; }
    bool has_norm() const;
    std::size_t param_count() const;

    struct BlockRange {
        std::size_t offset = 0;
        std::size_t len = 0;  // weights + biases (+ norm scale/shift)
    };
    std::vector<BlockRange> block_ranges() const;

    DenseVector flatten_params() const;
    void unflatten_params(const DenseVector& flat);
};

// Cached forward state: activations plus first- and diagonal second-order
// input-derivative channels. Matrices are batch-major (B x width) so one
// collocation point is one contiguous row.
struct DerivativeTrace {
    int order = 0;
    std::size_t batch = 0;
    std::size_t coords = 0;

    DenseMatrix input;  // B x input_dim

    // index 0 is the feature-map output, index l+1 the output of layer l
    std::vector<DenseMatrix> h;
    // per layer: pre-norm preactivation and cached phi', phi'' at the
    // activation argument
    std::vector<DenseMatrix> z;
    std::vector<DenseMatrix> act_d1;
    std::vector<DenseMatrix> act_d2;  // only when order >= 1
    // value used as activation argument when a norm layer is present
    std::vector<DenseMatrix> zn;
    std::vector<DenseVector> bn_mean, bn_var;  // batch-norm statistics
    std::vector<DenseVector> ln_mean, ln_rstd; // layer-norm per-sample stats

    // channels, [layer][coordinate]: p/q at layer inputs, s = W p and
    // t = W q at layer level
    std::vector<std::vector<DenseMatrix>> p, q;
    std::vector<std::vector<DenseMatrix>> s, t;

    double value(std::size_t out, std::size_t point) const { return h.back()(point, out); }
    double d1(std::size_t coord, std::size_t out, std::size_t point) const {
        return p.back()[coord](point, out);
    }
    double d2(std::size_t coord, std::size_t out, std::size_t point) const {
        return q.back()[coord](point, out);
    }
};

// Per-layer parameter gradients. Tensors mirror the network layout.
struct GradientBlocks {
    struct Block {
        DenseMatrix d_weight;
        DenseVector d_bias;
        DenseVector d_scale, d_shift;  // present only for norm layers

        std::size_t size() const {
            return d_weight.data.size() + d_bias.len() + d_scale.len() + d_shift.len();
        }
        std::vector<std::pair<const double*, std::size_t>> parts() const;
        std::vector<std::pair<double*, std::size_t>> parts_mut();
    };
    std::vector<Block> blocks;

    static GradientBlocks zeros_like(const MlpNetwork& net);

    std::size_t total_size() const;
    DenseVector flat() const;
    void add(const GradientBlocks& other);
    void scale_block(std::size_t l, double factor);
    // population std over the flattened block (weights and biases jointly)
    double block_std(std::size_t l) const;
    double block_sq_norm(std::size_t l) const;
    bool block_finite(std::size_t l) const;
};

// Adjoint seeds at the network output, batch-major like the trace.
// Empty channel vectors mean "no adjoint on that channel".
struct AdjointSeeds {
    DenseMatrix value;                 // B x out_dim
    std::vector<DenseMatrix> first;    // per coordinate, B x out_dim
    std::vector<DenseMatrix> second;   // per coordinate, B x out_dim
};

// Adjoint seed for a single collocation point.
struct PointSeed {
    std::size_t point = 0;
    DenseVector value;
    std::vector<DenseVector> first;
    std::vector<DenseVector> second;
};

struct Initializer {
    FanMode mode = FanMode::FanIn;
    std::optional<double> gain;  // defaults to the layer activation's gain
    InitDistribution distribution = InitDistribution::Normal;
};

DerivativeTrace forward(const MlpNetwork& net, const DenseMatrix& points, int order);

GradientBlocks backward_params(const MlpNetwork& net, const DerivativeTrace& trace,
                               const AdjointSeeds& seeds);
// Accumulating single-point variant used for Jacobian row assembly.
void backward_point(const MlpNetwork& net, const DerivativeTrace& trace,
                    const PointSeed& seed, GradientBlocks& out);

// std of the value-channel adjoint entries across the batch
double output_adjoint_std(const AdjointSeeds& seeds);

void initialize(MlpNetwork& net, const Initializer& init, SeededRng& rng);

struct LayerScales {
    double activation_std = 0.0;
    double adjoint_std = 0.0;
    double weight_grad_std = 0.0;
};

struct ScaleProbeResult {
    std::vector<LayerScales> layers;
    GradientBlocks grads;
    double sigma_out = 0.0;
};

// Forward/backward scale diagnostic: fits random unit-normal targets with
// the squared loss and reports per-layer activation, adjoint, and
// weight-gradient stds. Works with norm layers (value channel only).
ScaleProbeResult scale_probe(const MlpNetwork& net, const DenseMatrix& points,
                             SeededRng& target_rng);

}  // namespace sg
