#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "endo/equilibrium.hpp"
#include "endo/mc.hpp"
#include "endo/model.hpp"

namespace endo::fixtures {

/// A complete counter-example or economy setup: model, payoffs, density,
/// closed-form oracles where the construction admits them, and default
/// numerical resolutions that keep every pipeline inside its tolerance.
struct Fixture {
    std::string name;
    DiffusionModel model;
    PayoffSpec payoffs;
    DensitySpec density;

    TruncatedDomain domain;
    std::vector<int> grid_nx;
    int grid_nt = 128;
    int mc_nt = 256;
    long mc_npaths = 10000;
    std::uint64_t seed = 20240801;

    /// Closed-form oracle S^j_t evaluated along a simulated path prefix
    /// (some oracles are path functionals, not point functions).
    std::function<double(const mc::PathBundle&, long path, int step, int j)> oracle_S;

    /// Closed-form dispersion block w(t,x) (row-major d x J), when the
    /// construction provides one exactly.
    std::function<void(double, std::span<const double>, std::span<double>)> oracle_w;

    /// Orthogonal claim exhibiting non-replicability, when the example has one.
    std::optional<mc::ClaimSpec> orthogonal_claim;

    std::shared_ptr<const Grid> make_grid() const {
        return std::make_shared<Grid>(domain, grid_nx, grid_nt);
    }
};

/// Volatility that is C-infinity but not t-analytic at 1/2: the rank of the
/// dispersion collapses on [0,1/2] although the terminal Jacobian has full
/// rank almost surely.
Fixture example1();

/// Non-analytic running dividend f: the price freezes at 1 on [0,1/2].
Fixture example2();

/// C-infinity (not x-analytic) terminal data: the dispersion loses rank
/// exactly on {x <= 0} for all t.
Fixture example3();

/// d=1 terminal-consumption economy (CRRA agent, Lipschitz log-wealth) whose
/// completeness diagnostic passes.
eq::TerminalEconomy terminal_log_economy(double crra_a = 2.0, double rate = 0.05);
Fixture terminal_economy_fixture();

/// Intermediate-consumption economy with discounted log utility and
/// g(t,x) = x; the rate kernel has the closed form beta = rho - 1/2,
/// gamma = -1.
eq::IntermediateEconomy intermediate_log_economy(double rho = 0.05);
Fixture intermediate_economy_fixture();

/// The time bump g(t) = exp(-1/(t-1/2)) on (1/2,1], 0 before, and its
/// running integral (adaptive Simpson, exact to near machine precision).
double bump_g(double t);
double bump_g_integral(double t);

/// Example-1 auxiliary h(t,y) = (1 + e^{(t-1)/2} sin y)/2 and its
/// y-derivative.
double ex1_h(double t, double y);
double ex1_h_dy(double t, double y);

/// Writes the fixture as a standard JSON model file (the CLI consumes these
/// like any user model).
void write_model_json(const Fixture& fx, const std::string& path);

}  // namespace endo::fixtures
