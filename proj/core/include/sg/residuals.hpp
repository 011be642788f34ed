#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sg/network.hpp"
#include "sg/reference.hpp"

namespace sg {

enum class BlockLabel : std::uint8_t { PDE, BC, IC };

enum class ProblemKind { Burgers1d, Poisson2d, Helmholtz3d };

struct ProblemSpec {
    ProblemKind kind = ProblemKind::Burgers1d;
    double nu = 0.05;             // Burgers viscosity
    double wave_number = 0.0;     // Helmholtz k, defaults to 10*pi
    int mode = 10;                // Helmholtz mode m
    double lambda_pde = 1.0;
    double lambda_bc = 10.0;
    double lambda_ic = 10.0;

    static ProblemSpec burgers(double nu = 0.05);
    static ProblemSpec poisson();
    static ProblemSpec helmholtz();

    std::size_t input_dim() const;
    bool has_ic() const { return kind == ProblemKind::Burgers1d; }
};

struct CollocationBatch {
    DenseMatrix pde_points;  // N_f x d
    DenseMatrix bc_points;   // N_bc x d
    DenseVector bc_values;
    DenseMatrix ic_points;   // empty when the problem has no IC term
    DenseVector ic_values;
};

// Weighted residual vector: sqrt(lambda/N) factors are folded into the
// entries so that 0.5*||entries||^2 is exactly the weighted loss.
struct ResidualVector {
    DenseVector entries;
    std::vector<BlockLabel> labels;
};

// Residual plus everything needed for reverse passes: per-group traces
// and the per-entry derivatives with respect to the output channels.
struct ResidualAssembly {
    ResidualVector residual;
    struct Group {
        BlockLabel label;
        std::size_t entry_offset = 0;
        std::size_t count = 0;
        DerivativeTrace trace;
        // d(entry_k)/d(channel at point k); empty matrices mean zero
        DenseVector d_value;
        std::vector<DenseVector> d_first;   // per coordinate
        std::vector<DenseVector> d_second;  // per coordinate
    };
    std::vector<Group> groups;

    double loss() const;
    double component_loss(BlockLabel label) const;
};

ResidualAssembly assemble_residual(const MlpNetwork& net, const ProblemSpec& spec,
                                   const CollocationBatch& batch);

// convenience wrappers for single-problem use
ResidualVector burgers_residual(const MlpNetwork& net, const CollocationBatch& batch,
                                double nu);
ResidualVector poisson_residual(const MlpNetwork& net, const CollocationBatch& batch);
ResidualVector helmholtz_residual(const MlpNetwork& net, const CollocationBatch& batch,
                                  double wave_number, int mode);

// Gradient of 0.5*||r||^2 through all channels. When sigma_out is non-null
// it receives the empirical std of the value-channel adjoint.
GradientBlocks residual_gradient(const MlpNetwork& net, const ResidualAssembly& assembly,
                                 double* sigma_out = nullptr);

// Reverse pass seeded with a single residual entry: one Jacobian row.
void residual_entry_gradient(const MlpNetwork& net, const ResidualAssembly& assembly,
                             std::size_t entry, GradientBlocks& out);

struct BatchSizes {
    std::size_t pde = 0;
    std::size_t bc = 0;
    std::size_t ic = 0;
};

CollocationBatch sample_batch(const ProblemSpec& spec, const BatchSizes& sizes,
                              SeededRng& rng);

// ||u_net - u_ref||_2 / ||u_ref||_2 over the reference grid, chunked.
double relative_l2(const MlpNetwork& net, const GridField& reference,
                   std::size_t chunk = 65536);

std::string to_string(BlockLabel label);
std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

}  // namespace sg
