#include "endo/equilibrium.hpp"

#include <algorithm>
#include <cmath>

namespace endo::eq {

namespace {

std::vector<std::string> model_vars(int d) {
    std::vector<std::string> v = {"t"};
    for (int i = 1; i <= d; ++i) v.push_back("x" + std::to_string(i));
    return v;
}

}  // namespace

DensitySpec state_price_density(const TerminalEconomy& ec, int dim) {
    if (!ec.U.marginal_expr())
        throw InputError("state_price_density: the utility needs a closed-form marginal");
    auto vars = model_vars(dim);

    // G(x) = U'(e^{H(x)}): substitute s -> e^H and pin t at the horizon.
    expr::Expression marg = *ec.U.marginal_expr();  // vars {t, s}
    expr::Expression at_horizon = marg.substitute("t", expr::Expression::lit(1.0), {"t", "s"});
    expr::Expression expH = expr::Expression::call(expr::Fun::Exp, ec.H);
    expr::Expression G = at_horizon.substitute("s", expH, vars);
    return DensitySpec{std::move(G), ec.beta};
}

namespace {

/// Prices from the discounted panel. The buy-and-hold S is built with the
/// effective (discounted) growth rate, so undiscounting reads
///     P^j_k = e^{I_k} (S^j_k - sum_{l<k} f^j e^{A~_l} dt),
/// with I_k = int_0^{t_k} r and A~ = int (alpha - r). Shared left-endpoint
/// sums make the terminal identity P_1 = Theta exact up to field
/// interpolation.
void append_prices(mc::ProcessPanel& panel, const mc::PathBundle& paths, const PayoffSpec& p,
                   const mc::SweepCoeffs& eff, const ScalarFunc& rate, double* p1_theta_rms) {
    const int nt = paths.nt();
    const int d = paths.dim();
    const double dt = paths.dt();
    const int J = p.J;

    std::vector<std::vector<double>*> P;
    for (int j = 1; j <= J; ++j) P.push_back(&panel.add("P" + std::to_string(j)));
    auto& Iserie = panel.add("int_r");

    double env[9];
    double sum2 = 0.0;
    long used = 0;
    for (long path = 0; path < paths.npaths(); ++path) {
        if (!panel.excluded.empty() && panel.excluded[static_cast<std::size_t>(path)]) continue;
        std::size_t base = static_cast<std::size_t>(path) * (nt + 1);

        double I = 0.0;
        std::vector<double> A(static_cast<std::size_t>(J), 0.0);       // int (alpha - r)
        std::vector<double> divsum(static_cast<std::size_t>(J), 0.0);  // int f e^{A~}
        for (int k = 0; k <= nt; ++k) {
            double t = paths.time(k);
            auto x = paths.x(path, k);
            double eI = std::exp(I);
            for (int j = 0; j < J; ++j) {
                auto S = panel.series("S" + std::to_string(j + 1));
                (*P[static_cast<std::size_t>(j)])[base + static_cast<std::size_t>(k)] =
                    eI * (S[base + static_cast<std::size_t>(k)] - divsum[static_cast<std::size_t>(j)]);
            }
            Iserie[base + static_cast<std::size_t>(k)] = I;
            if (k == nt) break;
            for (int j = 0; j < J; ++j) {
                divsum[static_cast<std::size_t>(j)] +=
                    eff.f[static_cast<std::size_t>(j)](t, x) *
                    std::exp(A[static_cast<std::size_t>(j)]) * dt;
                A[static_cast<std::size_t>(j)] += eff.alpha[static_cast<std::size_t>(j)](t, x) * dt;
            }
            I += rate(t, x) * dt;
        }

        // Terminal dividend Theta^j = F^j(X_1) e^{int alpha^j}, with
        // int alpha = A~_n + I_n.
        auto xT = paths.x(path, nt);
        env[0] = 1.0;
        for (int i = 0; i < d; ++i) env[i + 1] = xT[static_cast<std::size_t>(i)];
        std::span<const double> e(env, static_cast<std::size_t>(d + 1));
        for (int j = 0; j < J; ++j) {
            double theta_T = p.F[static_cast<std::size_t>(j)].eval(e) *
                             std::exp(A[static_cast<std::size_t>(j)] + I);
            double diff = (*P[static_cast<std::size_t>(j)])[base + static_cast<std::size_t>(nt)] - theta_T;
            sum2 += diff * diff;
        }
        ++used;
    }
    if (p1_theta_rms) *p1_theta_rms = used > 0 ? std::sqrt(sum2 / (used * J)) : 0.0;
}

}  // namespace

PricingResult terminal_prices(const TerminalEconomy& ec, const DiffusionModel& m,
                              std::shared_ptr<const Grid> grid, int mc_nt, long npaths,
                              std::uint64_t seed) {
    const int d = m.dim();
    DensitySpec dsp = state_price_density(ec, d);

    // The traded objects are the discounted cash flows, so the pricing
    // machinery runs with the effective growth rate alpha - r. The Cauchy
    // potential (alpha - r) + beta collapses to alpha since r = beta here.
    PayoffSpec eff = ec.payoffs;
    for (int j = 0; j < eff.J; ++j)
        eff.alpha[static_cast<std::size_t>(j)] = expr::Expression::bin(
            expr::BinOp::Sub, ec.payoffs.alpha[static_cast<std::size_t>(j)], dsp.beta);

    FieldSeries u = pde::solve_backward(m, &dsp.beta, {}, dsp.G, grid, "u");
    std::vector<FieldSeries> v;
    for (int j = 0; j < ec.payoffs.J; ++j) {
        const expr::Expression& pot = ec.payoffs.alpha[static_cast<std::size_t>(j)];
        expr::Expression term = expr::Expression::bin(expr::BinOp::Mul,
                                                      ec.payoffs.F[static_cast<std::size_t>(j)],
                                                      dsp.G);
        pde::SourceSpec src{pde::to_func(ec.payoffs.f[static_cast<std::size_t>(j)], d), &u};
        v.push_back(pde::solve_backward(m, &pot, src, term, grid, "v" + std::to_string(j + 1)));
    }

    auto paths = mc::simulate(m, mc_nt, npaths, seed);
    auto panel = mc::pathwise_yrs(paths, u, v, eff, dsp);

    PricingResult res{std::move(panel), 0.0, 0.0, std::move(u), std::move(v), {}};
    ScalarFunc rate = pde::to_func(dsp.beta, d);
    mc::SweepCoeffs effcs = mc::SweepCoeffs::from(eff, dsp, d);
    append_prices(res.panel, paths, ec.payoffs, effcs, rate, &res.p1_theta_rms);

    // v0 = E^Q[Lambda e^{-int r}] = E[xi Lambda e^{-int r}] / E[xi].
    const int nt = paths.nt();
    auto xi = res.panel.series("xi");
    auto Ir = res.panel.series("int_r");
    double env[9];
    double num = 0.0, den = 0.0;
    for (long path = 0; path < paths.npaths(); ++path) {
        if (!res.panel.excluded.empty() && res.panel.excluded[static_cast<std::size_t>(path)]) continue;
        std::size_t base = static_cast<std::size_t>(path) * (nt + 1);
        auto xT = paths.x(path, nt);
        env[0] = 1.0;
        for (int i = 0; i < d; ++i) env[i + 1] = xT[static_cast<std::size_t>(i)];
        double lambda = std::exp(ec.H.eval(std::span<const double>(env, static_cast<std::size_t>(d + 1))));
        double w = xi[base + static_cast<std::size_t>(nt)];
        num += w * lambda * std::exp(-Ir[base + static_cast<std::size_t>(nt)]);
        den += w;
    }
    res.v0 = den != 0.0 ? num / den : 0.0;
    res.fk = mc::feynman_kac_check(m, eff, dsp, res.u, res.v, paths);
    return res;
}

utility::UtilityFunction pareto_aggregate(const std::vector<utility::UtilityFunction>& us,
                                          const std::vector<double>& weights) {
    if (us.empty() || us.size() != weights.size())
        throw InputError("pareto_aggregate: need one weight per agent");
    utility::UtilityFunction agg = utility::scale(us[0], weights[0]);
    for (std::size_t mth = 1; mth < us.size(); ++mth)
        agg = utility::sup_convolution(agg, utility::scale(us[mth], weights[mth]));
    return agg;
}

RateKernel intermediate_rate_kernel(const IntermediateEconomy& ec, const DiffusionModel& m) {
    const int d = m.dim();
    auto rp = std::make_shared<utility::RiskProfile>(utility::risk_profile(ec.u));
    auto g = std::make_shared<expr::Expression>(ec.g);
    auto model = &m;

    RateKernel kernel;
    kernel.beta = [rp, g, model, d](double t, std::span<const double> x) {
        double env[9];
        env[0] = t;
        for (int i = 0; i < d; ++i) env[i + 1] = x[static_cast<std::size_t>(i)];
        std::span<const double> e(env, static_cast<std::size_t>(d + 1));

        double gval = g->eval(e);
        double lambda = std::exp(gval);
        double a = rp->a_at(t, lambda);
        double p = rp->p_at(t, lambda);
        double q = rp->q_at(t, lambda);

        double gt = expr::diff_fd(*g, 0, e);
        std::vector<double> gx(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) gx[static_cast<std::size_t>(i)] = expr::diff_fd(*g, i + 1, e);

        std::vector<double> amat(static_cast<std::size_t>(d * d));
        model->eval_a(t, x, amat);
        double quad = 0.0;
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                double ckl = (1.0 - p) * gx[static_cast<std::size_t>(k)] * gx[static_cast<std::size_t>(l)] +
                             expr::diff2_fd(*g, k + 1, l + 1, e);
                quad += amat[static_cast<std::size_t>(k * d + l)] * ckl;
            }
        std::vector<double> b(static_cast<std::size_t>(d));
        model->eval_b(t, x, b);
        double drift = 0.0;
        for (int k = 0; k < d; ++k) drift += gx[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(k)];
        return q + a * (gt + drift + 0.5 * quad);
    };

    for (int i = 0; i < d; ++i) {
        kernel.gamma.push_back([rp, g, model, d, i](double t, std::span<const double> x) {
            double env[9];
            env[0] = t;
            for (int k = 0; k < d; ++k) env[k + 1] = x[static_cast<std::size_t>(k)];
            std::span<const double> e(env, static_cast<std::size_t>(d + 1));
            double lambda = std::exp(g->eval(e));
            double a = rp->a_at(t, lambda);
            std::vector<double> sig(static_cast<std::size_t>(d * d));
            model->eval_sigma(t, x, sig);
            double acc = 0.0;
            for (int k = 0; k < d; ++k)
                acc += expr::diff_fd(*g, k + 1, e) * sig[static_cast<std::size_t>(k * d + i)];
            return -a * acc;
        });
    }
    return kernel;
}

IntermediateResult intermediate_prices(const IntermediateEconomy& ec, const DiffusionModel& m,
                                       std::shared_ptr<const Grid> grid, int mc_nt, long npaths,
                                       std::uint64_t seed) {
    const int d = m.dim();
    RateKernel kernel = intermediate_rate_kernel(ec, m);

    // Girsanov reduction: under the pricing measure the state drifts at
    // b + sigma gamma, so the price fields solve with the shifted drift and
    // a unit density.
    pde::GeneratorSpec shifted;
    shifted.dim = d;
    shifted.factor_half = true;
    shifted.a = [&m](double t, std::span<const double> x, std::span<double> out) { m.eval_a(t, x, out); };
    shifted.b = [&m, &kernel, d](double t, std::span<const double> x, std::span<double> out) {
        m.eval_b(t, x, out);
        std::vector<double> sig(static_cast<std::size_t>(d * d));
        m.eval_sigma(t, x, sig);
        for (int i = 0; i < d; ++i) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k)
                acc += sig[static_cast<std::size_t>(i * d + k)] * kernel.gamma[static_cast<std::size_t>(k)](t, x);
            out[static_cast<std::size_t>(i)] += acc;
        }
    };

    auto vars = model_vars(d);
    DensitySpec unit{expr::parse("1", vars), expr::parse("0", vars)};

    // Effective growth rate of the discounted flows: alpha - r with the
    // kernel-derived r, entering both the Cauchy potentials and the path
    // integrals as callables.
    auto eff_alpha = [&](int j) -> ScalarFunc {
        ScalarFunc a = pde::to_func(ec.payoffs.alpha[static_cast<std::size_t>(j)], d);
        ScalarFunc r = kernel.beta;
        return [a, r](double t, std::span<const double> x) { return a(t, x) - r(t, x); };
    };

    FieldSeries u = pde::solve_backward(shifted, {}, pde::to_spatial(unit.G, d), grid, "u");
    std::vector<FieldSeries> v;
    for (int j = 0; j < ec.payoffs.J; ++j) {
        pde::GeneratorSpec genj = shifted;
        genj.c = eff_alpha(j);
        pde::SourceSpec src{pde::to_func(ec.payoffs.f[static_cast<std::size_t>(j)], d), &u};
        v.push_back(pde::solve_backward(
            genj, src,
            pde::to_spatial(ec.payoffs.F[static_cast<std::size_t>(j)], d), grid,
            "v" + std::to_string(j + 1)));
    }

    // Paths under P; Q enters through the Z weights.
    auto paths = mc::simulate(m, mc_nt, npaths, seed);
    mc::SweepCoeffs effcs = mc::SweepCoeffs::from(ec.payoffs, unit, d);
    for (int j = 0; j < ec.payoffs.J; ++j)
        effcs.alpha[static_cast<std::size_t>(j)] = eff_alpha(j);
    auto panel = mc::pathwise_yrs(paths, u, v, ec.payoffs, unit, 0.01, &effcs);
    mc::append_girsanov(panel, paths, kernel.gamma, "Z");

    IntermediateResult res{std::move(panel), 0.0, 0.0, 0.0, std::move(u), std::move(v), true};
    append_prices(res.panel, paths, ec.payoffs, effcs, kernel.beta, &res.p1_theta_rms);

    // Decomposition residual and v0 = E^Q[int e^{-int r} lambda dt]
    // = E[Z_1 int ...].
    const int nt = paths.nt();
    const double dt = paths.dt();
    auto Z = res.panel.series("Z");
    auto Ir = res.panel.series("int_r");
    double env[9];
    double sum2 = 0.0;
    long count = 0;
    double v0num = 0.0, v0den = 0.0;
    for (long path = 0; path < paths.npaths(); ++path) {
        if (!res.panel.excluded.empty() && res.panel.excluded[static_cast<std::size_t>(path)]) continue;
        std::size_t base = static_cast<std::size_t>(path) * (nt + 1);
        double ux0 = 0.0;
        double consumption = 0.0;
        for (int k = 0; k <= nt; ++k) {
            double t = paths.time(k);
            auto x = paths.x(path, k);
            env[0] = t;
            for (int i = 0; i < d; ++i) env[i + 1] = x[static_cast<std::size_t>(i)];
            std::span<const double> e(env, static_cast<std::size_t>(d + 1));
            double lambda = std::exp(ec.g.eval(e));
            double uxm;
            if (ec.u.marginal_expr()) {
                double menv[2] = {t, lambda};
                uxm = ec.u.marginal_expr()->eval(std::span<const double>(menv, 2));
            } else {
                int it = ec.u.t_index(t);
                const auto& wg = ec.u.grid();
                double l = std::log(std::clamp(lambda, wg.x_min, wg.x_max));
                int ix = std::clamp(static_cast<int>(std::lround((l - wg.logx[0]) / wg.dlog())),
                                    0, wg.n - 1);
                uxm = ec.u.marginal_at(it, ix);
            }
            if (k == 0) ux0 = uxm;
            double rhs = ux0 * Z[base + static_cast<std::size_t>(k)] *
                         std::exp(-Ir[base + static_cast<std::size_t>(k)]);
            double diff = uxm - rhs;
            sum2 += diff * diff;
            ++count;
            if (k < nt) consumption += std::exp(-Ir[base + static_cast<std::size_t>(k)]) * lambda * dt;
        }
        v0num += Z[base + static_cast<std::size_t>(nt)] * consumption;
        v0den += 1.0;
    }
    res.decomposition_rms = count > 0 ? std::sqrt(sum2 / count) : 0.0;
    res.v0 = v0den > 0 ? v0num / v0den : 0.0;

    // Z S^j should be P-martingales (the EMM property, checked by simulation).
    for (int j = 1; j <= ec.payoffs.J; ++j) {
        auto& ZS = res.panel.add("ZS" + std::to_string(j));
        auto S = res.panel.series("S" + std::to_string(j));
        for (long path = 0; path < paths.npaths(); ++path) {
            std::size_t base = static_cast<std::size_t>(path) * (nt + 1);
            for (int k = 0; k <= nt; ++k)
                ZS[base + static_cast<std::size_t>(k)] =
                    Z[base + static_cast<std::size_t>(k)] * S[base + static_cast<std::size_t>(k)];
        }
        auto mt = mc::martingale_test(res.panel, "ZS" + std::to_string(j), {0.0, 0.25, 0.5, 0.75, 1.0});
        if (mt.drift_detected) res.z_martingale_ok = false;
    }
    return res;
}

}  // namespace eq
