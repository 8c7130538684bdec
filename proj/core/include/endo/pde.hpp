#pragma once

#include <functional>
#include <memory>

#include "endo/grid.hpp"
#include "endo/model.hpp"

namespace endo::pde {

/// Matrix/vector coefficient of (t, x), written into a caller buffer.
using TensorFunc = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
/// Function of x alone (terminal / initial data).
using SpatialFunc = std::function<double(std::span<const double> x)>;

/// Second-order elliptic operator
///   factor_half:  L(t) = 1/2 sum a_ij d2_ij + sum b_i d_i + c   (generator of X)
///   otherwise:    A(t) =     sum a_ij d2_ij + sum b_i d_i + c
struct GeneratorSpec {
    int dim = 0;
    TensorFunc a;       // d x d, row-major; must be symmetric positive definite
    TensorFunc b;       // d
    ScalarFunc c;       // optional zero-order term
    bool factor_half = true;
};

/// L(t) + c for a diffusion model.
GeneratorSpec generator(const DiffusionModel& m, ScalarFunc c = nullptr);

ScalarFunc to_func(const expr::Expression& e, int dim);
SpatialFunc to_spatial(const expr::Expression& e, int dim);

/// Source term src(t,x) = f(t,x) * u_factor(t,x); either part may be absent.
struct SourceSpec {
    ScalarFunc f;
    const FieldSeries* u_factor = nullptr;
};

struct SolveOptions {
    /// Number of implicit-Euler half-steps replacing the first Crank-Nicolson
    /// step (Rannacher smoothing of weakly differentiable terminal data).
    int rannacher_half_steps = 2;
    /// Time weighting after the startup: 0.5 is Crank-Nicolson, 1.0 implicit
    /// Euler.
    double theta = 0.5;
};

/// Solves du/dt + A(t)u + src = 0 on [0,1] with u(1,.) = terminal, on the
/// truncated domain with linear-extrapolation ghost nodes (zero second
/// normal derivative at the faces). Dense grids support d in {1, 2}.
FieldSeries solve_backward(const GeneratorSpec& gen, const SourceSpec& src,
                           const SpatialFunc& terminal, std::shared_ptr<const Grid> grid,
                           const std::string& label = "u", SolveOptions opts = {});

/// Model convenience: A = L(t) + c, i.e. the Cauchy problem of the
/// state-price construction.
FieldSeries solve_backward(const DiffusionModel& m, const expr::Expression* c_potential,
                           const SourceSpec& src, const expr::Expression& terminal,
                           std::shared_ptr<const Grid> grid, const std::string& label = "u",
                           SolveOptions opts = {});

/// Solves du/dt = A(t)u + src with u(0,.) = initial (the forward problem;
/// equivalent to solve_backward after the time change t -> 1-t).
FieldSeries solve_forward(const GeneratorSpec& gen, const SourceSpec& src,
                          const SpatialFunc& initial, std::shared_ptr<const Grid> grid,
                          const std::string& label = "u", SolveOptions opts = {});

FieldSeries solve_forward(const DiffusionModel& m, const expr::Expression* c_potential,
                          const SourceSpec& src, const expr::Expression& initial,
                          std::shared_ptr<const Grid> grid, const std::string& label = "u",
                          SolveOptions opts = {});

}  // namespace endo::pde
