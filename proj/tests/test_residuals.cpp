#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sg/residuals.hpp"

using namespace sg;

namespace {

constexpr double kPi = 3.14159265358979323846;

MlpNetwork make_net(const ProblemSpec& spec, std::size_t width, std::size_t depth,
                    std::uint64_t seed) {
    std::optional<FourierFeatures> features;
    ActKind act = ActKind::Tanh;
    if (spec.kind == ProblemKind::Helmholtz3d) {
        act = ActKind::Silu;
        features = FourierFeatures::standard(spec.input_dim(), 3);
    }
    MlpNetwork net = MlpNetwork::make(spec.input_dim(), width, depth, 1, act, features);
    SeededRng rng(seed);
    initialize(net, {}, rng);
    return net;
}

double total_loss(const MlpNetwork& net, const ProblemSpec& spec,
                  const CollocationBatch& batch) {
    return assemble_residual(net, spec, batch).loss();
}

}  // namespace

TEST_CASE("burgers residual entries match a direct evaluation") {
    ProblemSpec spec = ProblemSpec::burgers(0.07);
    SeededRng rng(21);
    CollocationBatch batch = sample_batch(spec, {8, 4, 4}, rng);
    MlpNetwork net = make_net(spec, 6, 2, 22);

    ResidualAssembly asmb = assemble_residual(net, spec, batch);
    REQUIRE(asmb.residual.entries.len() == 16);

    DerivativeTrace trace = forward(net, batch.pde_points, 2);
    const double w = std::sqrt(spec.lambda_pde / 8.0);
    for (std::size_t k = 0; k < 8; ++k) {
        const double u = trace.value(0, k);
        const double u_x = trace.d1(0, 0, k);
        const double u_t = trace.d1(1, 0, k);
        const double u_xx = trace.d2(0, 0, k);
        const double expect = w * (u_t + u * u_x - spec.nu * u_xx);
        CHECK(asmb.residual.entries[k] == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
        CHECK(asmb.residual.labels[k] == BlockLabel::PDE);
    }
}

TEST_CASE("half squared residual norm equals the weighted loss decomposition") {
    ProblemSpec spec = ProblemSpec::burgers();
    SeededRng rng(33);
    CollocationBatch batch = sample_batch(spec, {16, 8, 8}, rng);
    MlpNetwork net = make_net(spec, 8, 2, 34);
    ResidualAssembly asmb = assemble_residual(net, spec, batch);

    const double direct = 0.5 * dot(asmb.residual.entries, asmb.residual.entries);
    CHECK(asmb.loss() == doctest::Approx(direct).epsilon(1e-14));
    CHECK(asmb.loss() == doctest::Approx(asmb.component_loss(BlockLabel::PDE) +
                                         asmb.component_loss(BlockLabel::BC) +
                                         asmb.component_loss(BlockLabel::IC))
                             .epsilon(1e-12));
}

TEST_CASE("residual gradient matches central finite differences on all problems") {
    struct Case {
        ProblemSpec spec;
        BatchSizes sizes;
    };
    const Case cases[] = {
        {ProblemSpec::burgers(0.05), {6, 4, 4}},
        {ProblemSpec::poisson(), {6, 4, 0}},
        {ProblemSpec::helmholtz(), {4, 4, 0}},
    };
    for (const auto& c : cases) {
        SeededRng rng(40 + static_cast<int>(c.spec.kind));
        CollocationBatch batch = sample_batch(c.spec, c.sizes, rng);
        MlpNetwork net = make_net(c.spec, 4, 2, 50 + static_cast<int>(c.spec.kind));

        ResidualAssembly asmb = assemble_residual(net, c.spec, batch);
        GradientBlocks grads = residual_gradient(net, asmb);
        DenseVector flat = grads.flat();

        DenseVector theta = net.flatten_params();
        MlpNetwork probe = net;
        const double h = 1e-6;
        double max_rel = 0.0;
        for (std::size_t i = 0; i < theta.len(); i += 5) {
            DenseVector tp = theta;
            tp[i] += h;
            probe.unflatten_params(tp);
            const double lp = total_loss(probe, c.spec, batch);
            tp[i] -= 2 * h;
            probe.unflatten_params(tp);
            const double lm = total_loss(probe, c.spec, batch);
            const double fd = (lp - lm) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(flat[i]), 1e-8});
            max_rel = std::max(max_rel, std::abs(flat[i] - fd) / denom);
        }
        CHECK(max_rel < 1e-5);
    }
}

TEST_CASE("entry gradients assemble into the full gradient via J^T r") {
    ProblemSpec spec = ProblemSpec::burgers();
    SeededRng rng(61);
    CollocationBatch batch = sample_batch(spec, {5, 3, 3}, rng);
    MlpNetwork net = make_net(spec, 5, 2, 62);
    ResidualAssembly asmb = assemble_residual(net, spec, batch);

    GradientBlocks full = residual_gradient(net, asmb);
    DenseVector expect = full.flat();

    DenseVector acc(net.param_count());
    GradientBlocks row = GradientBlocks::zeros_like(net);
    for (std::size_t k = 0; k < asmb.residual.entries.len(); ++k) {
        for (auto& blk : row.blocks)
            for (auto& [p, n] : blk.parts_mut()) std::fill(p, p + n, 0.0);
        residual_entry_gradient(net, asmb, k, row);
        DenseVector rk = row.flat();
        axpy(asmb.residual.entries[k], rk, acc);
    }
    for (std::size_t i = 0; i < acc.len(); ++i)
        CHECK(acc[i] == doctest::Approx(expect[i]).epsilon(1e-9).scale(1e-12));
}

TEST_CASE("sigma_out equals the std of entrywise value adjoints") {
    ProblemSpec spec = ProblemSpec::burgers();
    SeededRng rng(71);
    CollocationBatch batch = sample_batch(spec, {10, 6, 6}, rng);
    MlpNetwork net = make_net(spec, 6, 2, 72);
    ResidualAssembly asmb = assemble_residual(net, spec, batch);

    double sigma = 0.0;
    residual_gradient(net, asmb, &sigma);

    // oracle: adjoint_k = r_k * d(entry_k)/d(u_k), gathered over all groups
    std::vector<double> adj;
    for (const auto& g : asmb.groups)
        for (std::size_t k = 0; k < g.count; ++k) {
            const double dv = g.d_value.len() ? g.d_value[k] : 0.0;
            adj.push_back(asmb.residual.entries[g.entry_offset + k] * dv);
        }
    CHECK(sigma == doctest::Approx(empirical_std(adj.data(), adj.size())).epsilon(1e-10));
}

TEST_CASE("sampled batches respect the domain geometry") {
    SUBCASE("burgers") {
        ProblemSpec spec = ProblemSpec::burgers();
        SeededRng rng(80);
        CollocationBatch b = sample_batch(spec, {64, 16, 16}, rng);
        for (std::size_t k = 0; k < 64; ++k) {
            CHECK(b.pde_points(k, 0) >= -1.0);
            CHECK(b.pde_points(k, 0) <= 1.0);
            CHECK(b.pde_points(k, 1) >= 0.0);
            CHECK(b.pde_points(k, 1) <= 1.0);
        }
        for (std::size_t k = 0; k < 16; ++k) {
            CHECK(std::abs(b.bc_points(k, 0)) == 1.0);
            CHECK(b.bc_values[k] == 0.0);
            CHECK(b.ic_points(k, 1) == 0.0);
            CHECK(b.ic_values[k] ==
                  doctest::Approx(-std::sin(kPi * b.ic_points(k, 0))).epsilon(1e-12));
        }
    }
    SUBCASE("poisson boundary carries the exact solution") {
        ProblemSpec spec = ProblemSpec::poisson();
        SeededRng rng(81);
        CollocationBatch b = sample_batch(spec, {16, 12, 0}, rng);
        for (std::size_t k = 0; k < 12; ++k) {
            const double x = b.bc_points(k, 0), y = b.bc_points(k, 1);
            const bool on_edge = x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0;
            CHECK(on_edge);
            CHECK(b.bc_values[k] == doctest::Approx(poisson_exact(x, y)).scale(1.0));
        }
        CHECK(b.ic_points.rows == 0);
    }
    SUBCASE("sampling is deterministic per seed") {
        ProblemSpec spec = ProblemSpec::burgers();
        SeededRng r1(99), r2(99);
        CollocationBatch a = sample_batch(spec, {8, 4, 4}, r1);
        CollocationBatch b = sample_batch(spec, {8, 4, 4}, r2);
        CHECK(a.pde_points.data == b.pde_points.data);
        CHECK(a.bc_points.data == b.bc_points.data);
    }
}

TEST_CASE("relative_l2 is zero against a field sampled from the net itself") {
    ProblemSpec spec = ProblemSpec::poisson();
    MlpNetwork net = make_net(spec, 6, 2, 90);
    GridField grid;
    grid.dims = {9, 9};
    grid.bounds = {{{0.0, 1.0}}, {{0.0, 1.0}}};
    grid.data.resize(81);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
            DenseMatrix pt(1, 2);
            pt(0, 0) = grid.coord(0, i);
            pt(0, 1) = grid.coord(1, j);
            grid.data[i * 9 + j] = forward(net, pt, 0).value(0, 0);
        }
    CHECK(relative_l2(net, grid) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    SUBCASE("zero reference norm is rejected") {
        for (double& v : grid.data) v = 0.0;
        CHECK_THROWS_AS(relative_l2(net, grid), DomainError);
    }
}

TEST_CASE("helmholtz residual is normalized by k^2") {
    ProblemSpec spec = ProblemSpec::helmholtz();
    SeededRng rng(95);
    CollocationBatch batch = sample_batch(spec, {4, 4, 0}, rng);
    MlpNetwork net = make_net(spec, 4, 1, 96);
    ResidualAssembly asmb = assemble_residual(net, spec, batch);

    const double k2 = spec.wave_number * spec.wave_number;
    DerivativeTrace trace = forward(net, batch.pde_points, 2);
    const double w = std::sqrt(spec.lambda_pde / 4.0);
    for (std::size_t k = 0; k < 4; ++k) {
        const double u = trace.value(0, k);
        double lap = 0.0;
        for (std::size_t c = 0; c < 3; ++c) lap += trace.d2(c, 0, k);
        const double x = batch.pde_points(k, 0), y = batch.pde_points(k, 1),
                     z = batch.pde_points(k, 2);
        const double m = spec.mode;
        const double q = (k2 - 3.0 * m * m * kPi * kPi) * helmholtz_exact(x, y, z, spec.mode);
        const double expect = w * (lap + k2 * u - q) / k2;
        CHECK(asmb.residual.entries[k] == doctest::Approx(expect).epsilon(1e-10).scale(1e-12));
    }
}
