#pragma once

#include <memory>
#include <vector>

#include "endo/mc.hpp"
#include "endo/model.hpp"
#include "endo/pde.hpp"
#include "endo/utility.hpp"

namespace endo::eq {

/// Representative agent consuming at the horizon: utility U, terminal wealth
/// Lambda = e^{H(X_1)}, exogenous rate r_t = beta(t,X_t), dividends (F, alpha, f).
struct TerminalEconomy {
    utility::UtilityFunction U;
    expr::Expression H;      // of x
    expr::Expression beta;   // the interest rate, of (t,x)
    PayoffSpec payoffs;
};

/// Representative agent consuming continuously: time-dependent utility and
/// consumption rate lambda_t = e^{g(t,X_t)}.
struct IntermediateEconomy {
    utility::UtilityFunction u;
    expr::Expression g;  // of (t,x)
    PayoffSpec payoffs;
};

/// G(x) = U'(e^{H(x)}) and beta packaged as state-price inputs for the
/// completeness pipeline. Requires a closed-form marginal on U (the CRRA
/// family provides one).
DensitySpec state_price_density(const TerminalEconomy& ec, int dim);

struct PricingResult {
    mc::ProcessPanel panel;            // Y, R^j, S^j plus P^j and helpers
    double v0 = 0.0;
    double p1_theta_rms = 0.0;         // pathwise ||P_1 - Theta||
    FieldSeries u;
    std::vector<FieldSeries> v;
    mc::FeynmanKacReport fk;
};

/// Terminal-consumption pipeline: state-price density, Cauchy problems,
/// S along paths, P_t = S_t e^{int r} - int e^{int_s^t r} theta_s ds,
/// v0 = E^Q[Lambda e^{-int r}].
PricingResult terminal_prices(const TerminalEconomy& ec, const DiffusionModel& m,
                              std::shared_ptr<const Grid> grid, int mc_nt, long npaths,
                              std::uint64_t seed);

/// Pareto aggregation: U = w1 U_1 (+) ... (+) wM U_M via iterated
/// sup-convolution of the scaled utilities.
utility::UtilityFunction pareto_aggregate(const std::vector<utility::UtilityFunction>& us,
                                          const std::vector<double>& weights);

/// beta and gamma of the marginal-utility decomposition
///   u_x(t, lambda_t) = u_x(0, lambda_0) Z_t e^{-int beta},
/// sampled as callables:
///   beta  = q + a (g_t + sum g_k b^k + 1/2 sum (sigma sigma*)_{kl} c^{kl}),
///   gamma^i = -a sum_k g_k sigma^{ki},
///   c^{kl} = (1 - p) g_k g_l + g_{kl},
/// with a, p, q evaluated at (t, e^{g(t,x)}).
struct RateKernel {
    ScalarFunc beta;
    std::vector<ScalarFunc> gamma;
};

RateKernel intermediate_rate_kernel(const IntermediateEconomy& ec, const DiffusionModel& m);

struct IntermediateResult {
    mc::ProcessPanel panel;            // S^j, P^j, Z, r integrals
    double v0 = 0.0;
    double p1_theta_rms = 0.0;
    double decomposition_rms = 0.0;    // pathwise u_x(t,lambda) vs u_x(0,lambda_0) Z e^{-int r}
    FieldSeries u;
    std::vector<FieldSeries> v;
    bool z_martingale_ok = true;
};

/// Intermediate-consumption pipeline: rate kernel, Girsanov shift
/// b -> b + sigma gamma for the price solves, Z weights, undiscounted P,
/// v0 = E^Q[int e^{-int r} lambda dt].
IntermediateResult intermediate_prices(const IntermediateEconomy& ec, const DiffusionModel& m,
                                       std::shared_ptr<const Grid> grid, int mc_nt, long npaths,
                                       std::uint64_t seed);

}  // namespace endo::eq
