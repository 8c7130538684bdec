#include <doctest.h>

#include <cmath>

#include "endo/completeness.hpp"
#include "endo/fixtures.hpp"
#include "endo/io.hpp"
#include "endo/pde.hpp"

using namespace endo;
using namespace endo::fixtures;

namespace {

// Pipeline S panels vs the fixture's closed-form oracle, RMS by slice band.
double oracle_rms(const Fixture& fx, const mc::PathBundle& paths, const mc::ProcessPanel& panel,
                  int j, double t_max, long npaths_cap = 2000) {
    double sum2 = 0.0;
    long n = 0;
    for (long path = 0; path < std::min(paths.npaths(), npaths_cap); ++path) {
        if (!panel.excluded.empty() && panel.excluded[static_cast<std::size_t>(path)]) continue;
        for (int k = 0; k <= paths.nt(); k += 8) {
            if (paths.time(k) > t_max) break;
            double got = panel.at("S" + std::to_string(j + 1), path, k);
            double want = fx.oracle_S(paths, path, k, j);
            sum2 += (got - want) * (got - want);
            ++n;
        }
    }
    return std::sqrt(sum2 / static_cast<double>(n));
}

struct Solved {
    FieldSeries u;
    std::vector<FieldSeries> v;
};

Solved solve_fixture(const Fixture& fx) {
    auto grid = fx.make_grid();
    Solved out{pde::solve_backward(fx.model, &fx.density.beta, {}, fx.density.G, grid, "u"), {}};
    for (int j = 0; j < fx.payoffs.J; ++j) {
        expr::Expression pot = expr::Expression::bin(
            expr::BinOp::Add, fx.payoffs.alpha[static_cast<std::size_t>(j)], fx.density.beta);
        expr::Expression term = expr::Expression::bin(
            expr::BinOp::Mul, fx.payoffs.F[static_cast<std::size_t>(j)], fx.density.G);
        pde::SourceSpec src{pde::to_func(fx.payoffs.f[static_cast<std::size_t>(j)], fx.model.dim()),
                            &out.u};
        out.v.push_back(
            pde::solve_backward(fx.model, &pot, src, term, grid, "v" + std::to_string(j + 1)));
    }
    return out;
}

}  // namespace

TEST_CASE("bump function and its integral") {
    CHECK(bump_g(0.3) == 0.0);
    CHECK(bump_g(0.5) == 0.0);
    CHECK(bump_g(1.0) == doctest::Approx(std::exp(-2.0)));
    CHECK(bump_g_integral(0.5) == 0.0);
    CHECK(bump_g_integral(0.6) > 0.0);
    // Simpson vs a fine Riemann reference on [1/2, 1].
    double ref = 0.0;
    int n = 200000;
    for (int i = 0; i < n; ++i) ref += bump_g(0.5 + 0.5 * (i + 0.5) / n) * 0.5 / n;
    CHECK(bump_g_integral(1.0) == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("example 1: oracle structure") {
    auto fx = example1();

    SUBCASE("the closed-form R equals x^2 - t on the frozen band") {
        auto paths = mc::simulate(fx.model, 64, 50, fx.seed);
        for (long p = 0; p < 50; ++p)
            for (int k = 0; k <= 32; k += 8) {
                double x = paths.x(p, k)[0];
                double want = x * x - paths.time(k);
                CHECK(fx.oracle_S(paths, p, k, 1) == doctest::Approx(want).epsilon(1e-12));
            }
    }
    SUBCASE("terminal Jacobian determinant is -h_y(1,y) * int g") {
        double C = bump_g_integral(1.0);
        for (double y : {-2.0, -0.5, 0.3, 1.9}) {
            double det = -ex1_h_dy(1.0, y) * C;  // dF/dx dH/dy - dF/dy dH/dx
            CHECK(std::fabs(det) > 0.0);
            CHECK(det == doctest::Approx(-0.5 * std::cos(y) * C));
        }
        // Degenerate only where cos y = 0.
        CHECK(std::fabs(-ex1_h_dy(1.0, M_PI / 2) * C) < 1e-12);
    }
    SUBCASE("h solves the backward heat equation") {
        auto h = expr::parse("0.5*(1 + exp((t - 1)/2)*sin(x2))", {"t", "x2"});
        for (double t : {0.2, 0.7}) {
            for (double y : {-1.0, 0.4, 2.2}) {
                double env[2] = {t, y};
                std::span<const double> e(env, 2);
                double ht = expr::diff_fd(h, 0, e);
                double hyy = expr::diff2_fd(h, 1, 1, e);
                CHECK(std::fabs(ht + 0.5 * hyy) < 1e-5);
            }
        }
    }
    SUBCASE("closed-form dispersion rank bands") {
        auto grid = fx.make_grid();
        auto rep = completeness::rank_diagnostic_closed_form(fx.oracle_w, fx.payoffs.J, fx.model,
                                                             *grid, 1e-12);
        CHECK(rep.band_fraction(0.0, 0.499) > 0.99);
        CHECK(rep.band_fraction(0.601, 1.0) < 0.05);
    }
}

TEST_CASE("example 1: pipeline S and R match the oracles") {
    auto fx = example1();
    fx.mc_npaths = 4000;
    auto solved = solve_fixture(fx);
    auto paths = mc::simulate(fx.model, fx.mc_nt, fx.mc_npaths, fx.seed);
    auto panel = mc::pathwise_yrs(paths, solved.u, solved.v, fx.payoffs, fx.density);
    CHECK(panel.excluded_fraction() < 0.01);
    CHECK(oracle_rms(fx, paths, panel, 0, 0.5) < 2e-2);
    CHECK(oracle_rms(fx, paths, panel, 1, 0.5) < 2e-2);
    // The construction extends past the kink: the oracles hold on all of [0,1].
    CHECK(oracle_rms(fx, paths, panel, 0, 1.0) < 2e-2);
    CHECK(oracle_rms(fx, paths, panel, 1, 1.0) < 2e-2);
}

TEST_CASE("example 2: frozen price band") {
    auto fx = example2();
    fx.mc_npaths = 2000;
    auto solved = solve_fixture(fx);
    auto paths = mc::simulate(fx.model, fx.mc_nt, fx.mc_npaths, fx.seed);
    auto panel = mc::pathwise_yrs(paths, solved.u, solved.v, fx.payoffs, fx.density);

    SUBCASE("S = 1 on the dead band, against both pipeline and oracle") {
        for (long p = 0; p < paths.npaths(); p += 97) {
            if (panel.excluded[static_cast<std::size_t>(p)]) continue;
            for (int k = 0; k <= paths.nt() / 2; k += 16) {
                CHECK(panel.at("S1", p, k) == doctest::Approx(1.0).epsilon(1e-2));
                CHECK(fx.oracle_S(paths, p, k, 0) == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
    SUBCASE("price dispersion vanishes on the band") {
        completeness::PathDispersion disp(solved.u, solved.v, fx.model, &fx.payoffs);
        double zero[1] = {0.0};
        for (long p = 0; p < 200; ++p) {
            if (panel.excluded[static_cast<std::size_t>(p)]) continue;
            for (int k = 0; k <= paths.nt() / 2; k += 16) {
                auto D = disp.price_dispersion(paths.time(k), paths.x(p, k),
                                               std::span<const double>(zero, 1));
                CHECK(std::fabs(D(0, 0)) < 1e-6);
            }
        }
    }
    SUBCASE("feynman-kac consistency of the mean") {
        auto fk = mc::feynman_kac_check(fx.model, fx.payoffs, fx.density, solved.u, solved.v, paths);
        CHECK(std::fabs(fk.z_xipsi[0]) < 4.0);
        // E[psi] = S_0 = 1.
        CHECK(fk.v00[0] == doctest::Approx(1.0).epsilon(1e-2));
    }
    SUBCASE("oracle matches the pipeline everywhere") {
        CHECK(oracle_rms(fx, paths, panel, 0, 1.0) < 2e-2);
    }
}

TEST_CASE("example 3: rank drops exactly on the closed half-line") {
    auto fx = example3();

    SUBCASE("closed-form dispersion: zero singular value iff x <= 0") {
        double w[4];
        for (double x : {-3.0, -0.1, 0.0}) {
            double pt[2] = {x, 0.7};
            fx.oracle_w(0.4, std::span<const double>(pt, 2), std::span<double>(w, 4));
            linalg::Matrix m(2, 2);
            for (int i = 0; i < 4; ++i) m.a[static_cast<std::size_t>(i)] = w[i];
            CHECK(linalg::smallest_singular_value(m) < 1e-15);
        }
        for (double x : {0.5, 1.0, 3.0}) {
            double pt[2] = {x, -0.2};
            fx.oracle_w(0.4, std::span<const double>(pt, 2), std::span<double>(w, 4));
            linalg::Matrix m(2, 2);
            for (int i = 0; i < 4; ++i) m.a[static_cast<std::size_t>(i)] = w[i];
            CHECK(linalg::smallest_singular_value(m) > 1e-3);
        }
    }
    SUBCASE("terminal Jacobian determinant is 2 g'(x)") {
        for (double x : {0.5, 1.0, 2.0}) {
            double gp = std::exp(-1.0 / x) / (x * x);
            CHECK(2.0 * gp > 0.0);
        }
    }
    SUBCASE("pipeline S and R match the oracles") {
        auto fx2 = example3();
        fx2.mc_npaths = 1000;
        auto solved = solve_fixture(fx2);
        auto paths = mc::simulate(fx2.model, fx2.mc_nt, fx2.mc_npaths, fx2.seed);
        auto panel = mc::pathwise_yrs(paths, solved.u, solved.v, fx2.payoffs, fx2.density);
        CHECK(oracle_rms(fx2, paths, panel, 0, 1.0) < 2e-2);
        CHECK(oracle_rms(fx2, paths, panel, 1, 1.0) < 2e-2);
    }
}

TEST_CASE("fixture JSON export round-trips through the loader") {
    auto fx = example1();
    std::string path = "/tmp/endo_test_ex1.json";
    write_model_json(fx, path);
    auto mf = io::load_model_file(path);
    CHECK(mf.d == 2);
    CHECK(mf.payoff_F.size() == 2);
    auto model = io::build_model(mf);
    auto rep = validate(model, TruncatedDomain{mf.grid_lo, mf.grid_hi}, 17);
    CHECK(rep.pass());
}
