#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "sg/errors.hpp"

namespace sg {

// Uniform gridded scalar field with inclusive bounds per dimension.
struct GridField {
    std::vector<std::size_t> dims;
    std::vector<std::array<double, 2>> bounds;
    double nu = 0.0;
    double wave_number = 0.0;
    int mode = 0;
    std::vector<double> data;  // row-major over dims

    std::size_t size() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
    double coord(std::size_t dim_i, std::size_t idx) const {
        const auto [lo, hi] = bounds[dim_i];
        if (dims[dim_i] == 1) return lo;
        return lo + (hi - lo) * static_cast<double>(idx) /
                        static_cast<double>(dims[dim_i] - 1);
    }
};

// Closed-form viscous Burgers solution for u(x,0) = -sin(pi x) on
// [-1,1], Dirichlet, via the Cole-Hopf transform evaluated by
// numerically stable quadrature. Accurate for moderate viscosity.
double burgers_cole_hopf(double nu, double x, double t);

struct MolOptions {
    std::size_t nx = 1024;
    double cfl = 0.4;      // must be <= 1
    double fixed_dt = 0.0; // 0 -> automatic from the CFL bound
    bool advection = true; // false gives the pure heat-equation limit
};

// Method-of-lines solver (central differences + explicit RK4) on an
// (nx x nt) grid over [-1,1] x [0,1].
GridField burgers_mol(double nu, std::size_t nx, std::size_t nt,
                      const MolOptions& opts = {});

// Cole-Hopf for nu >= 0.05, method-of-lines below.
GridField burgers_reference(double nu, std::size_t nx, std::size_t nt);

double poisson_exact(double x, double y);
double helmholtz_exact(double x, double y, double z, int mode);

GridField poisson_reference(std::size_t n);
GridField helmholtz_reference(int mode, double wave_number, std::size_t n);

// Flat binary serialization with a validated header; corrupt headers
// report the byte offset of the first bad field.
void save_grid_field(const GridField& field, const std::string& path);
GridField load_grid_field(const std::string& path);

}  // namespace sg
