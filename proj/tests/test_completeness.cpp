#include <doctest.h>

#include <cmath>
#include <random>

#include "endo/completeness.hpp"
#include "endo/pde.hpp"

using namespace endo;
using namespace endo::completeness;

namespace {

std::shared_ptr<const Grid> grid1d(int nx = 101, int nt = 16) {
    return std::make_shared<Grid>(TruncatedDomain{{-5.0}, {5.0}}, std::vector<int>{nx}, nt);
}

FieldSeries fill(std::shared_ptr<const Grid> g, const std::string& label,
                 const std::function<double(double, double)>& f) {
    FieldSeries out(g, label);
    for (int k = 0; k <= g->nt(); ++k)
        for (long node = 0; node < g->total_nodes(); ++node)
            out.at(k, node) = f(g->time(k), g->coord(0, static_cast<int>(node)));
    return out;
}

}  // namespace

TEST_CASE("compute_w on flat numeraire") {
    auto g = grid1d();
    auto u = fill(g, "u", [](double, double) { return 1.0; });

    SUBCASE("price field x gives unit dispersion") {
        std::vector<FieldSeries> v;
        v.push_back(fill(g, "v1", [](double, double x) { return x; }));
        auto w = compute_w(u, v);
        for (long node = 1; node < g->total_nodes() - 1; ++node)
            CHECK(w.at(3, node, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant price field is degenerate") {
        std::vector<FieldSeries> v;
        v.push_back(fill(g, "v1", [](double, double) { return 0.7; }));
        auto w = compute_w(u, v);
        for (long node = 0; node < g->total_nodes(); ++node)
            CHECK(w.at(5, node, 0, 0) == doctest::Approx(0.0));
    }
    SUBCASE("non-positive u is rejected") {
        auto bad = fill(g, "u", [](double, double x) { return x; });  // sign change
        std::vector<FieldSeries> v;
        v.push_back(fill(g, "v1", [](double, double x) { return x; }));
        CHECK_THROWS_AS(compute_w(bad, v), NumericError);
    }
}

TEST_CASE("terminal identity w(1,.) = G^2 dF/dx") {
    auto g = grid1d(501, 8);
    auto G = [](double x) { return std::exp(-0.5 * x); };
    auto F = [](double x) { return std::sin(x); };
    auto u = fill(g, "u", [&](double, double x) { return G(x); });
    std::vector<FieldSeries> v;
    v.push_back(fill(g, "v1", [&](double, double x) { return F(x) * G(x); }));
    auto w = compute_w(u, v);
    for (long node = 1; node < g->total_nodes() - 1; ++node) {
        double x = g->coord(0, static_cast<int>(node));
        double want = G(x) * G(x) * std::cos(x);
        // Two central-difference tolerances at dx = 0.02, relative to the
        // local G^2 scale that both gradients carry.
        double tol = 5e-4 * std::max(1.0, G(x) * G(x));
        CHECK(std::fabs(w.at(g->nt(), node, 0, 0) - want) <= tol);
    }
}

TEST_CASE("rank diagnostic on a clean one-asset market") {
    auto g = grid1d();
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    auto u = fill(g, "u", [](double, double) { return 1.0; });
    std::vector<FieldSeries> v;
    v.push_back(fill(g, "v1", [](double, double x) { return x; }));
    auto w = compute_w(u, v);
    auto rep = rank_diagnostic(w, m, 1e-6);
    CHECK(rep.aggregate_degenerate_fraction < 0.02);
    CHECK(rep.slices.size() == static_cast<std::size_t>(g->nt() + 1));
    CHECK_THROWS_AS(rank_diagnostic(w, m, 0.0), InputError);
    CHECK_THROWS_AS(rank_diagnostic(w, m, 1.5), InputError);
}

TEST_CASE("rank ratio is scale invariant") {
    auto g = grid1d(61, 6);
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1 + 0.2*sin(x1)"});
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> c(0.5, 3.0);
    auto u = fill(g, "u", [](double t, double x) { return std::exp(0.2 * x + t); });
    std::vector<FieldSeries> v;
    v.push_back(fill(g, "v1", [](double t, double x) { return x + 0.3 * t * x * x; }));
    auto base = rank_diagnostic(compute_w(u, v), m, 1e-6);

    double scale = c(rng);
    auto us = fill(g, "u", [&](double t, double x) { return scale * std::exp(0.2 * x + t); });
    std::vector<FieldSeries> vs;
    vs.push_back(fill(g, "v1", [&](double t, double x) { return scale * (x + 0.3 * t * x * x); }));
    auto scaled = rank_diagnostic(compute_w(us, vs), m, 1e-6);

    for (std::size_t i = 0; i < base.slices.size(); ++i) {
        CHECK(scaled.slices[i].min_sv_q50 ==
              doctest::Approx(base.slices[i].min_sv_q50).epsilon(1e-9));
        CHECK(scaled.slices[i].degenerate_fraction == base.slices[i].degenerate_fraction);
    }
}

TEST_CASE("price dispersion along paths") {
    auto g = grid1d(201, 32);
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});

    SUBCASE("S = X is hedged one for one") {
        auto u = fill(g, "u", [](double, double) { return 1.0; });
        std::vector<FieldSeries> v;
        v.push_back(fill(g, "v1", [](double, double x) { return x; }));
        PathDispersion disp(u, v, m, nullptr);
        double zero[1] = {0.0};
        double x[1] = {0.4};
        auto D = disp.price_dispersion(0.37, std::span<const double>(x, 1),
                                       std::span<const double>(zero, 1));
        CHECK(D(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("v = u makes S = 1 riskless") {
        auto u = fill(g, "u", [](double t, double x) { return std::exp(x + 0.5 * (1 - t)); });
        std::vector<FieldSeries> v;
        v.push_back(fill(g, "v1", [](double t, double x) { return std::exp(x + 0.5 * (1 - t)); }));
        PathDispersion disp(u, v, m, nullptr);
        double zero[1] = {0.0};
        double x[1] = {-0.3};
        auto D = disp.price_dispersion(0.5, std::span<const double>(x, 1),
                                       std::span<const double>(zero, 1));
        CHECK(D(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("chain-rule oracle for v = 1") {
        auto u = fill(g, "u", [](double t, double x) { return std::exp(x + 0.5 * (1 - t)); });
        std::vector<FieldSeries> v;
        v.push_back(fill(g, "v1", [](double, double) { return 1.0; }));
        PathDispersion disp(u, v, m, nullptr);
        double zero[1] = {0.0};
        for (double xq : {-1.0, 0.0, 0.8}) {
            double x[1] = {xq};
            auto D = disp.price_dispersion(0.25, std::span<const double>(x, 1),
                                           std::span<const double>(zero, 1));
            // S = 1/u, so the loading is d(1/u)/dx * sigma; cross-check it
            // against finite differences of S along x.
            double h = 1e-4;
            double xp[1] = {xq + h}, xm[1] = {xq - h};
            double Sp = 1.0 / u.interpolate(0.25, std::span<const double>(xp, 1));
            double Sm = 1.0 / u.interpolate(0.25, std::span<const double>(xm, 1));
            double want = (Sp - Sm) / (2.0 * h);
            CHECK(D(0, 0) == doctest::Approx(want).epsilon(2e-3));
        }
    }
}

TEST_CASE("market price of risk") {
    auto g = grid1d(335, 16);
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});

    SUBCASE("flat numeraire has no drift correction") {
        auto u = fill(g, "u", [](double, double) { return 1.0; });
        PathDispersion disp(u, {}, m, nullptr);
        double x[1] = {0.7};
        auto mpr = disp.market_price_of_risk(0.3, std::span<const double>(x, 1));
        CHECK(mpr[0] == doctest::Approx(0.0));
    }
    SUBCASE("exponential numeraire gives unit drift") {
        auto u = fill(g, "u", [](double t, double x) { return std::exp(x + 0.5 * (1 - t)); });
        PathDispersion disp(u, {}, m, nullptr);
        double x[1] = {0.25};
        auto mpr = disp.market_price_of_risk(0.5, std::span<const double>(x, 1));
        CHECK(mpr[0] == doctest::Approx(1.0).epsilon(2e-4));
    }
    SUBCASE("d=2, u independent of x2, diagonal sigma: second component vanishes") {
        auto m2 = DiffusionModel::from_sources(2, {0.0, 0.0}, {"0", "0"}, {"1", "0", "0", "1"});
        auto g2 = std::make_shared<Grid>(TruncatedDomain{{-3.0, -3.0}, {3.0, 3.0}},
                                         std::vector<int>{61, 61}, 8);
        FieldSeries u(g2, "u");
        for (int k = 0; k <= g2->nt(); ++k)
            for (long node = 0; node < g2->total_nodes(); ++node) {
                double x = g2->coord(0, static_cast<int>(node % 61));
                u.at(k, node) = std::exp(0.3 * x);
            }
        PathDispersion disp(u, {}, m2, nullptr);
        double x[2] = {0.2, -0.7};
        auto mpr = disp.market_price_of_risk(0.4, std::span<const double>(x, 2));
        CHECK(mpr[0] == doctest::Approx(0.3).epsilon(1e-3));
        CHECK(mpr[1] == doctest::Approx(0.0));
    }
}
