#include "sg/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

namespace sg {

namespace {
constexpr double kPi = std::numbers::pi;
}

double burgers_cole_hopf(double nu, double x, double t) {
    if (nu <= 0.0) throw DomainError("burgers_cole_hopf: nu must be positive");
    if (t < 1e-12) return -std::sin(kPi * x);

    // Heat-kernel substitution y = x - 2 sqrt(nu t) z turns the Cole-Hopf
    // quotient into Gaussian-weighted integrals over z. The initial
    // potential is phi0(y) = exp((1 - cos(pi y)) / (2 pi nu)).
    const double a = 2.0 * std::sqrt(nu * t);
    const std::size_t n = 600;
    const double zmax = 10.0;
    const double dz = 2.0 * zmax / static_cast<double>(n);

    double emax = -1e300;
    std::vector<double> expo(n + 1), zs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double z = -zmax + static_cast<double>(i) * dz;
        const double y = x - a * z;
        const double e = -z * z + (1.0 - std::cos(kPi * y)) / (2.0 * kPi * nu);
        zs[i] = z;
        expo[i] = e;
        emax = std::max(emax, e);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        const double g = w * std::exp(expo[i] - emax);
        num += g * (a * zs[i] / t);
        den += g;
    }
    return num / den;
}

namespace {

// du/dt for the interior nodes; Dirichlet ends held at zero.
void burgers_rhs(const std::vector<double>& u, double nu, double dx, bool advection,
                 std::vector<double>& out) {
    const std::size_t n = u.size();
    out.assign(n, 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double ux = (u[j + 1] - u[j - 1]) / (2.0 * dx);
        const double uxx = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (dx * dx);
        out[j] = nu * uxx - (advection ? u[j] * ux : 0.0);
    }
}

}  // namespace

GridField burgers_mol(double nu, std::size_t nx, std::size_t nt, const MolOptions& opts) {
    if (nx < 3 || nt < 2) throw ConfigError("burgers_mol: grid too small");
    if (nu <= 0.0) throw DomainError("burgers_mol: nu must be positive");
    const double dx = 2.0 / static_cast<double>(opts.nx - 1);
    const double dt_bound = std::min(dx * dx / (2.0 * nu), dx);  // |u| <= 1
    if (opts.cfl > 1.0)
        throw ConfigError("burgers_mol: CFL violation, time step must satisfy dt <= " +
                          std::to_string(dt_bound));
    if (opts.fixed_dt > 0.0 && opts.fixed_dt > dt_bound)
        throw ConfigError("burgers_mol: CFL violation, time step must satisfy dt <= " +
                          std::to_string(dt_bound));

    GridField field;
    field.dims = {nx, nt};
    field.bounds = {{-1.0, 1.0}, {0.0, 1.0}};
    field.nu = nu;
    field.data.assign(nx * nt, 0.0);

    std::vector<double> u(opts.nx), k1, k2, k3, k4, tmp(opts.nx);
    for (std::size_t j = 0; j < opts.nx; ++j)
        u[j] = -std::sin(kPi * (-1.0 + static_cast<double>(j) * dx));

    auto store_snapshot = [&](std::size_t ti) {
        // sample the solver grid onto the requested x grid (linear interp)
        for (std::size_t xi = 0; xi < nx; ++xi) {
            const double x = field.coord(0, xi);
            const double pos = (x + 1.0) / dx;
            const std::size_t j0 = std::min(static_cast<std::size_t>(pos), opts.nx - 2);
            const double frac = pos - static_cast<double>(j0);
            field.data[xi * nt + ti] = (1.0 - frac) * u[j0] + frac * u[j0 + 1];
        }
    };
    store_snapshot(0);

    double t_now = 0.0;
    for (std::size_t ti = 1; ti < nt; ++ti) {
        const double t_target =
            static_cast<double>(ti) / static_cast<double>(nt - 1);
        const double span = t_target - t_now;
        const double dt_auto = opts.fixed_dt > 0.0 ? opts.fixed_dt : opts.cfl * dt_bound;
        const std::size_t nsub =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / dt_auto)));
        const double dt = span / static_cast<double>(nsub);
        for (std::size_t s = 0; s < nsub; ++s) {
            burgers_rhs(u, nu, dx, opts.advection, k1);
            for (std::size_t j = 0; j < opts.nx; ++j) tmp[j] = u[j] + 0.5 * dt * k1[j];
            burgers_rhs(tmp, nu, dx, opts.advection, k2);
            for (std::size_t j = 0; j < opts.nx; ++j) tmp[j] = u[j] + 0.5 * dt * k2[j];
            burgers_rhs(tmp, nu, dx, opts.advection, k3);
            for (std::size_t j = 0; j < opts.nx; ++j) tmp[j] = u[j] + dt * k3[j];
            burgers_rhs(tmp, nu, dx, opts.advection, k4);
            for (std::size_t j = 0; j < opts.nx; ++j)
                u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            u.front() = 0.0;
            u.back() = 0.0;
        }
        t_now = t_target;
        store_snapshot(ti);
    }
    return field;
}

GridField burgers_reference(double nu, std::size_t nx, std::size_t nt) {
    if (nu >= 0.05) {
        GridField field;
        field.dims = {nx, nt};
        field.bounds = {{-1.0, 1.0}, {0.0, 1.0}};
        field.nu = nu;
        field.data.assign(nx * nt, 0.0);
        for (std::size_t xi = 0; xi < nx; ++xi)
            for (std::size_t ti = 0; ti < nt; ++ti)
                field.data[xi * nt + ti] =
                    burgers_cole_hopf(nu, field.coord(0, xi), field.coord(1, ti));
        return field;
    }
    MolOptions opts;
    opts.nx = 4096;
    return burgers_mol(nu, nx, nt, opts);
}

double poisson_exact(double x, double y) {
    return std::sin(kPi * x) * std::sin(kPi * y);
}

double helmholtz_exact(double x, double y, double z, int mode) {
    const double mpi = static_cast<double>(mode) * kPi;
    return std::sin(mpi * x) * std::sin(mpi * y) * std::sin(mpi * z);
}

GridField poisson_reference(std::size_t n) {
    GridField field;
    field.dims = {n, n};
    field.bounds = {{0.0, 1.0}, {0.0, 1.0}};
    field.data.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            field.data[i * n + j] = poisson_exact(field.coord(0, i), field.coord(1, j));
    return field;
}

GridField helmholtz_reference(int mode, double wave_number, std::size_t n) {
    GridField field;
    field.dims = {n, n, n};
    field.bounds = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
    field.wave_number = wave_number;
    field.mode = mode;
    field.data.assign(n * n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                field.data[(i * n + j) * n + k] = helmholtz_exact(
                    field.coord(0, i), field.coord(1, j), field.coord(2, k), mode);
    return field;
}

// --- serialization ---------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'S', 'G', 'F', '1'};
}

void save_grid_field(const GridField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("save_grid_field: cannot open " + path);
    out.write(kMagic, 4);
    const std::uint32_t nd = static_cast<std::uint32_t>(field.dims.size());
    out.write(reinterpret_cast<const char*>(&nd), sizeof(nd));
    for (auto d : field.dims) {
        const std::uint64_t v = d;
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    for (const auto& b : field.bounds)
        out.write(reinterpret_cast<const char*>(b.data()), 2 * sizeof(double));
    out.write(reinterpret_cast<const char*>(&field.nu), sizeof(double));
    out.write(reinterpret_cast<const char*>(&field.wave_number), sizeof(double));
    const std::int32_t mode = field.mode;
    out.write(reinterpret_cast<const char*>(&mode), sizeof(mode));
    out.write(reinterpret_cast<const char*>(field.data.data()),
              static_cast<std::streamsize>(field.data.size() * sizeof(double)));
    if (!out) throw ConfigError("save_grid_field: write failed for " + path);
}

GridField load_grid_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_grid_field: cannot open " + path);
    auto fail = [&](const char* what) {
        throw ConfigError("load_grid_field: " + std::string(what) + " at byte offset " +
                          std::to_string(static_cast<long long>(in.tellg())));
    };
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ConfigError("load_grid_field: bad magic at byte offset 0");
    std::uint32_t nd = 0;
    in.read(reinterpret_cast<char*>(&nd), sizeof(nd));
    if (!in || nd == 0 || nd > 8) fail("bad dimension count");
    GridField field;
    field.dims.resize(nd);
    for (auto& d : field.dims) {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in || v == 0 || v > (1ULL << 32)) fail("bad dimension size");
        d = static_cast<std::size_t>(v);
    }
    field.bounds.resize(nd);
    for (auto& b : field.bounds) {
        in.read(reinterpret_cast<char*>(b.data()), 2 * sizeof(double));
        if (!in || !(b[0] < b[1])) fail("bad bounds");
    }
    in.read(reinterpret_cast<char*>(&field.nu), sizeof(double));
    in.read(reinterpret_cast<char*>(&field.wave_number), sizeof(double));
    std::int32_t mode = 0;
    in.read(reinterpret_cast<char*>(&mode), sizeof(mode));
    if (!in) fail("truncated header");
    field.mode = mode;
    field.data.resize(field.size());
    in.read(reinterpret_cast<char*>(field.data.data()),
            static_cast<std::streamsize>(field.data.size() * sizeof(double)));
    if (!in || static_cast<std::size_t>(in.gcount()) != field.data.size() * sizeof(double))
        fail("truncated data section");
    return field;
}

}  // namespace sg
