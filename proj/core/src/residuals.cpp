#include "sg/residuals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sg {

namespace {
constexpr double kPi = std::numbers::pi;
}

ProblemSpec ProblemSpec::burgers(double nu) {
    ProblemSpec s;
    s.kind = ProblemKind::Burgers1d;
    s.nu = nu;
    s.lambda_pde = 1.0;
    s.lambda_bc = 10.0;
    s.lambda_ic = 10.0;
    return s;
}

ProblemSpec ProblemSpec::poisson() {
    ProblemSpec s;
    s.kind = ProblemKind::Poisson2d;
    s.lambda_pde = 1.0;
    s.lambda_bc = 100.0;
    s.lambda_ic = 0.0;
    return s;
}

ProblemSpec ProblemSpec::helmholtz() {
    ProblemSpec s;
    s.kind = ProblemKind::Helmholtz3d;
    s.wave_number = 10.0 * kPi;
    s.mode = 10;
    s.lambda_pde = 1.0;
    s.lambda_bc = 100.0;
    s.lambda_ic = 0.0;
    return s;
}

std::size_t ProblemSpec::input_dim() const {
    switch (kind) {
        case ProblemKind::Burgers1d: return 2;   // (x, t)
        case ProblemKind::Poisson2d: return 2;   // (x, y)
        case ProblemKind::Helmholtz3d: return 3; // (x, y, z)
    }
    return 0;
}

double ResidualAssembly::loss() const {
    double acc = 0.0;
    for (double e : residual.entries.data) acc += e * e;
    return 0.5 * acc;
}

double ResidualAssembly::component_loss(BlockLabel label) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < residual.entries.len(); ++i)
        if (residual.labels[i] == label) acc += residual.entries[i] * residual.entries[i];
    return 0.5 * acc;
}

namespace {

void check_arity(const MlpNetwork& net, const ProblemSpec& spec) {
    if (net.input_dim != spec.input_dim())
        throw ContractError("residual: network input dim " +
                            std::to_string(net.input_dim) + " does not match problem dim " +
                            std::to_string(spec.input_dim()));
    if (net.output_dim() != 1)
        throw ContractError("residual: network must have a single output");
}

// PDE-group entry derivatives for each problem. coords: Burgers (x,t),
// Poisson (x,y), Helmholtz (x,y,z).
void fill_pde_group(const MlpNetwork& net, const ProblemSpec& spec,
                    ResidualAssembly::Group& g, DenseVector& entries) {
    const std::size_t n = g.trace.batch;
    const std::size_t d = g.trace.coords;
    const double w = std::sqrt(spec.lambda_pde / static_cast<double>(n));
    g.d_value = DenseVector(n);
    g.d_first.assign(d, DenseVector());
    g.d_second.assign(d, DenseVector());
    entries = DenseVector(n);

    switch (spec.kind) {
        case ProblemKind::Burgers1d: {
            // u_t + u u_x - nu u_xx
            g.d_first[0] = DenseVector(n);
            g.d_first[1] = DenseVector(n);
            g.d_second[0] = DenseVector(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double u = g.trace.value(0, i);
                const double ux = g.trace.d1(0, 0, i);
                const double ut = g.trace.d1(1, 0, i);
                const double uxx = g.trace.d2(0, 0, i);
                entries[i] = w * (ut + u * ux - spec.nu * uxx);
                g.d_value[i] = w * ux;
                g.d_first[0][i] = w * u;
                g.d_first[1][i] = w;
                g.d_second[0][i] = -w * spec.nu;
            }
            break;
        }
        case ProblemKind::Poisson2d: {
            // laplace(u) - f with u* = sin(pi x) sin(pi y), f = -2 pi^2 u*
            g.d_second[0] = DenseVector(n);
            g.d_second[1] = DenseVector(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double x = g.trace.input(i, 0), y = g.trace.input(i, 1);
                const double f = -2.0 * kPi * kPi * poisson_exact(x, y);
                const double lap = g.trace.d2(0, 0, i) + g.trace.d2(1, 0, i);
                entries[i] = w * (lap - f);
                g.d_second[0][i] = w;
                g.d_second[1][i] = w;
            }
            break;
        }
        case ProblemKind::Helmholtz3d: {
            // (laplace(u) + k^2 u - q) / k^2, q = (k^2 - 3 m^2 pi^2) u*
            const double k2 = spec.wave_number * spec.wave_number;
            const double mpi = static_cast<double>(spec.mode) * kPi;
            const double qc = k2 - 3.0 * mpi * mpi;
            for (std::size_t c = 0; c < 3; ++c) g.d_second[c] = DenseVector(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double x = g.trace.input(i, 0), y = g.trace.input(i, 1),
                             z = g.trace.input(i, 2);
                const double q = qc * helmholtz_exact(x, y, z, spec.mode);
                double lap = 0.0;
                for (std::size_t c = 0; c < 3; ++c) lap += g.trace.d2(c, 0, i);
                const double u = g.trace.value(0, i);
                entries[i] = w * (lap + k2 * u - q) / k2;
                g.d_value[i] = w;  // k^2/k^2
                for (std::size_t c = 0; c < 3; ++c) g.d_second[c][i] = w / k2;
            }
            break;
        }
    }
    (void)net;
}

}  // namespace

ResidualAssembly assemble_residual(const MlpNetwork& net, const ProblemSpec& spec,
                                   const CollocationBatch& batch) {
    check_arity(net, spec);
    ResidualAssembly asmb;
    std::vector<double> all_entries;
    std::vector<BlockLabel> all_labels;

    if (batch.pde_points.rows > 0) {
        ResidualAssembly::Group g;
        g.label = BlockLabel::PDE;
        g.entry_offset = all_entries.size();
        g.count = batch.pde_points.rows;
        g.trace = forward(net, batch.pde_points, 2);
        DenseVector entries;
        fill_pde_group(net, spec, g, entries);
        for (double e : entries.data) {
            all_entries.push_back(e);
            all_labels.push_back(BlockLabel::PDE);
        }
        asmb.groups.push_back(std::move(g));
    }

    if (batch.bc_points.rows > 0) {
        ResidualAssembly::Group g;
        g.label = BlockLabel::BC;
        g.entry_offset = all_entries.size();
        g.count = batch.bc_points.rows;
        g.trace = forward(net, batch.bc_points, 0);
        const double w = std::sqrt(spec.lambda_bc / static_cast<double>(g.count));
        g.d_value = DenseVector(g.count, w);
        for (std::size_t i = 0; i < g.count; ++i) {
            all_entries.push_back(w * (g.trace.value(0, i) - batch.bc_values[i]));
            all_labels.push_back(BlockLabel::BC);
        }
        asmb.groups.push_back(std::move(g));
    }

    if (batch.ic_points.rows > 0) {
        if (!spec.has_ic())
            throw ContractError("residual: IC points supplied for a problem without IC");
        ResidualAssembly::Group g;
        g.label = BlockLabel::IC;
        g.entry_offset = all_entries.size();
        g.count = batch.ic_points.rows;
        g.trace = forward(net, batch.ic_points, 0);
        const double w = std::sqrt(spec.lambda_ic / static_cast<double>(g.count));
        g.d_value = DenseVector(g.count, w);
        for (std::size_t i = 0; i < g.count; ++i) {
            all_entries.push_back(w * (g.trace.value(0, i) - batch.ic_values[i]));
            all_labels.push_back(BlockLabel::IC);
        }
        asmb.groups.push_back(std::move(g));
    }

    asmb.residual.entries.data = std::move(all_entries);
    asmb.residual.labels = std::move(all_labels);
    return asmb;
}

ResidualVector burgers_residual(const MlpNetwork& net, const CollocationBatch& batch,
                                double nu) {
    return assemble_residual(net, ProblemSpec::burgers(nu), batch).residual;
}

ResidualVector poisson_residual(const MlpNetwork& net, const CollocationBatch& batch) {
    return assemble_residual(net, ProblemSpec::poisson(), batch).residual;
}

ResidualVector helmholtz_residual(const MlpNetwork& net, const CollocationBatch& batch,
                                  double wave_number, int mode) {
    ProblemSpec spec = ProblemSpec::helmholtz();
    spec.wave_number = wave_number;
    spec.mode = mode;
    return assemble_residual(net, spec, batch).residual;
}

GradientBlocks residual_gradient(const MlpNetwork& net, const ResidualAssembly& assembly,
                                 double* sigma_out) {
    GradientBlocks total = GradientBlocks::zeros_like(net);
    std::vector<double> value_adjoints;
    for (const auto& g : assembly.groups) {
        AdjointSeeds seeds;
        const std::size_t n = g.count;
        seeds.value = DenseMatrix(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = assembly.residual.entries[g.entry_offset + i];
            seeds.value(i, 0) = r * g.d_value[i];
            value_adjoints.push_back(seeds.value(i, 0));
        }
        const bool any_first = std::any_of(g.d_first.begin(), g.d_first.end(),
                                           [](const DenseVector& v) { return v.len(); });
        const bool any_second = std::any_of(g.d_second.begin(), g.d_second.end(),
                                            [](const DenseVector& v) { return v.len(); });
        if (any_first) {
            seeds.first.assign(g.trace.coords, DenseMatrix(n, 1));
            for (std::size_t c = 0; c < g.trace.coords; ++c)
                if (g.d_first[c].len())
                    for (std::size_t i = 0; i < n; ++i)
                        seeds.first[c](i, 0) =
                            assembly.residual.entries[g.entry_offset + i] * g.d_first[c][i];
        }
        if (any_second) {
            seeds.second.assign(g.trace.coords, DenseMatrix(n, 1));
            for (std::size_t c = 0; c < g.trace.coords; ++c)
                if (g.d_second[c].len())
                    for (std::size_t i = 0; i < n; ++i)
                        seeds.second[c](i, 0) =
                            assembly.residual.entries[g.entry_offset + i] * g.d_second[c][i];
        }
        total.add(backward_params(net, g.trace, seeds));
    }
    if (sigma_out) {
        if (value_adjoints.empty()) throw DomainError("residual_gradient: empty batch");
        *sigma_out = empirical_std(value_adjoints.data(), value_adjoints.size());
    }
    return total;
}

void residual_entry_gradient(const MlpNetwork& net, const ResidualAssembly& assembly,
                             std::size_t entry, GradientBlocks& out) {
    for (const auto& g : assembly.groups) {
        if (entry < g.entry_offset || entry >= g.entry_offset + g.count) continue;
        const std::size_t i = entry - g.entry_offset;
        PointSeed seed;
        seed.point = i;
        seed.value = DenseVector(1);
        seed.value[0] = g.d_value.len() ? g.d_value[i] : 0.0;
        const bool any_first = std::any_of(g.d_first.begin(), g.d_first.end(),
                                           [](const DenseVector& v) { return v.len(); });
        const bool any_second = std::any_of(g.d_second.begin(), g.d_second.end(),
                                            [](const DenseVector& v) { return v.len(); });
        if (any_first) {
            seed.first.assign(g.trace.coords, DenseVector(1));
            for (std::size_t c = 0; c < g.trace.coords; ++c)
                if (g.d_first[c].len()) seed.first[c][0] = g.d_first[c][i];
        }
        if (any_second) {
            seed.second.assign(g.trace.coords, DenseVector(1));
            for (std::size_t c = 0; c < g.trace.coords; ++c)
                if (g.d_second[c].len()) seed.second[c][0] = g.d_second[c][i];
        }
        backward_point(net, g.trace, seed, out);
        return;
    }
    throw ContractError("residual_entry_gradient: entry index out of range");
}

CollocationBatch sample_batch(const ProblemSpec& spec, const BatchSizes& sizes,
                              SeededRng& rng) {
    CollocationBatch batch;
    const std::size_t d = spec.input_dim();

    switch (spec.kind) {
        case ProblemKind::Burgers1d: {
            batch.pde_points = DenseMatrix(sizes.pde, d);
            for (std::size_t i = 0; i < sizes.pde; ++i) {
                batch.pde_points(i, 0) = rng.uniform(-1.0, 1.0);
                batch.pde_points(i, 1) = rng.uniform(0.0, 1.0);
            }
            batch.bc_points = DenseMatrix(sizes.bc, d);
            batch.bc_values = DenseVector(sizes.bc);
            for (std::size_t i = 0; i < sizes.bc; ++i) {
                batch.bc_points(i, 0) = (rng.uniform01() < 0.5) ? -1.0 : 1.0;
                batch.bc_points(i, 1) = rng.uniform(0.0, 1.0);
            }
            batch.ic_points = DenseMatrix(sizes.ic, d);
            batch.ic_values = DenseVector(sizes.ic);
            for (std::size_t i = 0; i < sizes.ic; ++i) {
                const double x = rng.uniform(-1.0, 1.0);
                batch.ic_points(i, 0) = x;
                batch.ic_points(i, 1) = 0.0;
                batch.ic_values[i] = -std::sin(kPi * x);
            }
            break;
        }
        case ProblemKind::Poisson2d: {
            batch.pde_points = DenseMatrix(sizes.pde, d);
            for (std::size_t i = 0; i < sizes.pde; ++i)
                for (std::size_t c = 0; c < d; ++c)
                    batch.pde_points(i, c) = rng.uniform(0.0, 1.0);
            batch.bc_points = DenseMatrix(sizes.bc, d);
            batch.bc_values = DenseVector(sizes.bc);
            for (std::size_t i = 0; i < sizes.bc; ++i) {
                const std::size_t edge = static_cast<std::size_t>(rng.uniform01() * 4.0) % 4;
                const double s = rng.uniform(0.0, 1.0);
                double x = 0.0, y = 0.0;
                switch (edge) {
                    case 0: x = s; y = 0.0; break;
                    case 1: x = s; y = 1.0; break;
                    case 2: x = 0.0; y = s; break;
                    default: x = 1.0; y = s; break;
                }
                batch.bc_points(i, 0) = x;
                batch.bc_points(i, 1) = y;
                batch.bc_values[i] = poisson_exact(x, y);
            }
            break;
        }
        case ProblemKind::Helmholtz3d: {
            batch.pde_points = DenseMatrix(sizes.pde, d);
            for (std::size_t i = 0; i < sizes.pde; ++i)
                for (std::size_t c = 0; c < d; ++c)
                    batch.pde_points(i, c) = rng.uniform(0.0, 1.0);
            batch.bc_points = DenseMatrix(sizes.bc, d);
            batch.bc_values = DenseVector(sizes.bc);
            for (std::size_t i = 0; i < sizes.bc; ++i) {
                const std::size_t face = static_cast<std::size_t>(rng.uniform01() * 6.0) % 6;
                double pt[3] = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                                rng.uniform(0.0, 1.0)};
                pt[face / 2] = (face % 2 == 0) ? 0.0 : 1.0;
                for (std::size_t c = 0; c < 3; ++c) batch.bc_points(i, c) = pt[c];
                batch.bc_values[i] = helmholtz_exact(pt[0], pt[1], pt[2], spec.mode);
            }
            break;
        }
    }
    return batch;
}

double relative_l2(const MlpNetwork& net, const GridField& reference, std::size_t chunk) {
    const std::size_t total = reference.size();
    const std::size_t nd = reference.dims.size();
    if (net.input_dim != nd)
        throw ContractError("relative_l2: grid dimension does not match network input");
    double num = 0.0, den = 0.0;
    std::vector<std::size_t> idx(nd, 0);
    std::size_t pos = 0;
    while (pos < total) {
        const std::size_t n = std::min(chunk, total - pos);
        DenseMatrix pts(n, nd);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t lin = pos + i;
            for (std::size_t dd = nd; dd-- > 0;) {
                idx[dd] = lin % reference.dims[dd];
                lin /= reference.dims[dd];
            }
            for (std::size_t dd = 0; dd < nd; ++dd)
                pts(i, dd) = reference.coord(dd, idx[dd]);
        }
        DerivativeTrace tr = forward(net, pts, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const double ref = reference.data[pos + i];
            const double diff = tr.value(0, i) - ref;
            num += diff * diff;
            den += ref * ref;
        }
        pos += n;
    }
    if (den == 0.0) throw DomainError("relative_l2: reference field has zero norm");
    return std::sqrt(num / den);
}

std::string to_string(BlockLabel label) {
    switch (label) {
        case BlockLabel::PDE: return "pde";
        case BlockLabel::BC: return "bc";
        case BlockLabel::IC: return "ic";
    }
    return "?";
}

std::string to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::Burgers1d: return "burgers1d";
        case ProblemKind::Poisson2d: return "poisson2d";
        case ProblemKind::Helmholtz3d: return "helmholtz";
    }
    return "?";
}

ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "burgers1d" || s == "burgers") return ProblemKind::Burgers1d;
    if (s == "poisson2d" || s == "poisson") return ProblemKind::Poisson2d;
    if (s == "helmholtz" || s == "helmholtz3d") return ProblemKind::Helmholtz3d;
    throw ConfigError("unknown problem kind: " + s);
}

}  // namespace sg
