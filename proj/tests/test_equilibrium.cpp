#include <doctest.h>

#include <cmath>

#include "endo/equilibrium.hpp"
#include "endo/fixtures.hpp"

using namespace endo;
using namespace endo::eq;

TEST_CASE("state price density from the terminal economy") {
    SUBCASE("log utility with unit terminal wealth gives G = 1") {
        TerminalEconomy ec{utility::crra("0", 1.0), expr::parse("0", {"t", "x1"}),
                           expr::parse("0", {"t", "x1"}),
                           make_payoff(1, {"x1"}, {"0"}, {"0"})};
        auto dsp = state_price_density(ec, 1);
        for (double x : {-2.0, 0.0, 1.7}) {
            double env[2] = {1.0, x};
            CHECK(dsp.G.eval(std::span<const double>(env, 2)) == doctest::Approx(1.0));
        }
    }
    SUBCASE("CRRA a=2 with H = x gives G = e^{-2x}") {
        TerminalEconomy ec{utility::crra("0", 2.0), expr::parse("x1", {"t", "x1"}),
                           expr::parse("0", {"t", "x1"}),
                           make_payoff(1, {"x1"}, {"0"}, {"0"})};
        auto dsp = state_price_density(ec, 1);
        for (double x : {-1.0, 0.0, 0.5, 2.0}) {
            double env[2] = {1.0, x};
            CHECK(dsp.G.eval(std::span<const double>(env, 2)) ==
                  doctest::Approx(std::exp(-2.0 * x)).epsilon(1e-12));
        }
    }
    SUBCASE("log-derivative identity d ln G/dx = -A(e^H) dH/dx") {
        TerminalEconomy ec{utility::crra("0", 3.0), expr::parse("0.5*x1", {"t", "x1"}),
                           expr::parse("0", {"t", "x1"}),
                           make_payoff(1, {"x1"}, {"0"}, {"0"})};
        auto dsp = state_price_density(ec, 1);
        auto lnG = expr::Expression::call(expr::Fun::Log, dsp.G);
        for (double x : {-0.8, 0.3, 1.1}) {
            double env[2] = {1.0, x};
            double got = expr::diff_fd(lnG, "x1", std::span<const double>(env, 2));
            // A = 3 for CRRA(3); dH/dx = 0.5.
            CHECK(got == doctest::Approx(-3.0 * 0.5).epsilon(1e-6));
        }
    }
}

TEST_CASE("terminal prices: r = 0, theta = 0 collapses P to S") {
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    TerminalEconomy ec{utility::crra("0", 2.0), expr::parse("x1", {"t", "x1"}),
                       expr::parse("0", {"t", "x1"}),
                       make_payoff(1, {"x1"}, {"0"}, {"0"})};
    auto grid = std::make_shared<Grid>(TruncatedDomain{{-7.0}, {7.0}}, std::vector<int>{281}, 128);
    auto res = terminal_prices(ec, m, grid, 64, 4000, 5);
    for (long path = 0; path < 4000; path += 531) {
        if (res.panel.excluded[static_cast<std::size_t>(path)]) continue;
        for (int k = 0; k <= 64; k += 16)
            CHECK(res.panel.at("P1", path, k) ==
                  doctest::Approx(res.panel.at("S1", path, k)).epsilon(1e-12));
    }
    CHECK(res.p1_theta_rms < 1e-2);
}

TEST_CASE("terminal prices: the shipped economy fixture") {
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    auto ec = fixtures::terminal_log_economy();  // CRRA 2, H = x, r = 5%, dividends 0.1
    auto grid = std::make_shared<Grid>(TruncatedDomain{{-7.0}, {7.0}}, std::vector<int>{421}, 128);
    auto res = terminal_prices(ec, m, grid, 128, 20000, 11);

    // P_1 = Theta pathwise within the combined PDE + interpolation budget.
    CHECK(res.p1_theta_rms < 1e-2);
    // v0 = E^Q[Lambda e^{-r}]: under Q, X_1 ~ N(-2, 1), so
    // E^Q[e^{X_1}] e^{-0.05} = e^{-2 + 1/2 - 0.05}.
    CHECK(res.v0 == doctest::Approx(std::exp(-1.55)).epsilon(0.05));
    CHECK(res.fk.worst_z < 4.0);
}

TEST_CASE("terminal prices: near-risk-neutral limit prices Lambda at 1") {
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    TerminalEconomy ec{utility::crra("0", 1e-6), expr::parse("0", {"t", "x1"}),
                       expr::parse("0", {"t", "x1"}),
                       make_payoff(1, {"x1"}, {"0"}, {"0"})};
    auto grid = std::make_shared<Grid>(TruncatedDomain{{-6.0}, {6.0}}, std::vector<int>{241}, 64);
    auto res = terminal_prices(ec, m, grid, 64, 4000, 7);
    CHECK(res.v0 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pareto aggregation") {
    SUBCASE("single agent: pure scaling") {
        auto u = utility::crra("0", 2.0);
        auto agg = pareto_aggregate({u}, {3.0});
        for (int ix = 0; ix < u.grid().n; ix += 37)
            CHECK(agg.value(0, ix) == doctest::Approx(3.0 * u.value(0, ix)));
    }
    SUBCASE("two equal CRRA agents keep the class") {
        auto u = utility::crra("0", 2.0);
        auto agg = pareto_aggregate({u, u}, {1.0, 1.0});
        auto rp = utility::risk_profile(agg);
        int n = agg.grid().n;
        // Splits reach an octave below each probe, so stay well above the
        // wealth-grid floor.
        int pad = n / 10;
        for (int ix = std::max(agg.first_valid + 2, pad); ix <= std::min(agg.last_valid - 2, n - 1 - pad);
             ix += 7)
            CHECK(rp.at(rp.a, 0, ix) == doctest::Approx(2.0).epsilon(1e-3));
    }
    SUBCASE("marginal utility equalizes at the optimum") {
        // Two log agents, equal weights: U(x) = 2 log(x/2), U'(x) = 2/x,
        // and the optimal split is x/2 each: w1 u1'(x/2) = 2/x.
        auto u = utility::crra("0", 1.0);
        auto agg = pareto_aggregate({u, u}, {1.0, 1.0});
        for (double x : {0.5, 1.0, 4.0, 20.0}) {
            int it = 0;
            double lhs_slope;
            {
                // slope of the aggregate by symmetric difference in ln x
                double h = 1e-3;
                double up = agg.value_at(it, x * std::exp(h));
                double dn = agg.value_at(it, x * std::exp(-h));
                lhs_slope = (up - dn) / (2.0 * h * x);
            }
            CHECK(lhs_slope == doctest::Approx(2.0 / x).epsilon(1e-3));
        }
    }
}

TEST_CASE("intermediate rate kernel closed forms") {
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});

    SUBCASE("constant consumption, no discounting: beta = gamma = 0") {
        IntermediateEconomy ec{utility::crra("0", 1.0), expr::parse("0", {"t", "x1"}),
                               make_payoff(1, {"x1"}, {"0"}, {"0"})};
        auto kernel = intermediate_rate_kernel(ec, m);
        for (double t : {0.1, 0.5, 0.9}) {
            for (double x : {-1.0, 0.0, 2.0}) {
                double xv[1] = {x};
                CHECK(std::fabs(kernel.beta(t, std::span<const double>(xv, 1))) < 1e-6);
                CHECK(std::fabs(kernel.gamma[0](t, std::span<const double>(xv, 1))) < 1e-6);
            }
        }
    }
    SUBCASE("discounted log with g(t,x) = x: beta = rho - 1/2, gamma = -1") {
        auto ec = fixtures::intermediate_log_economy(0.05);
        auto kernel = intermediate_rate_kernel(ec, m);
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            for (double x : {-2.0, -0.3, 0.0, 1.4, 3.0}) {
                double xv[1] = {x};
                CHECK(kernel.beta(t, std::span<const double>(xv, 1)) ==
                      doctest::Approx(0.05 - 0.5).epsilon(1e-6));
                CHECK(kernel.gamma[0](t, std::span<const double>(xv, 1)) ==
                      doctest::Approx(-1.0).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("intermediate prices on the log fixture") {
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    auto ec = fixtures::intermediate_log_economy(0.05);
    auto grid = std::make_shared<Grid>(TruncatedDomain{{-7.0}, {7.0}}, std::vector<int>{141}, 128);
    auto res = intermediate_prices(ec, m, grid, 128, 20000, 13);

    // The pathwise decomposition is exact in discrete arithmetic here.
    CHECK(res.decomposition_rms < 1e-10);
    CHECK(res.p1_theta_rms < 1e-2);
    // v0 = int_0^1 e^{-rho t} dt for this fixture.
    double want = (1.0 - std::exp(-0.05)) / 0.05;
    CHECK(res.v0 == doctest::Approx(want).epsilon(0.02));
    CHECK(res.z_martingale_ok);
}

TEST_CASE("intermediate prices: flat economy is the unit annuity") {
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    IntermediateEconomy ec{utility::crra("0", 1.0), expr::parse("0", {"t", "x1"}),
                           make_payoff(1, {"x1"}, {"0"}, {"0"})};
    auto grid = std::make_shared<Grid>(TruncatedDomain{{-6.0}, {6.0}}, std::vector<int>{141}, 64);
    auto res = intermediate_prices(ec, m, grid, 64, 2000, 17);
    CHECK(res.v0 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.decomposition_rms < 1e-10);
}
