#include "endo/fixtures.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "endo/io.hpp"

namespace endo::fixtures {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
    if (b <= a) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

const std::string kBumpSrc = "ite(t > 0.5, exp(-1/(t - 0.5)), 0)";

}  // namespace

double bump_g(double t) {
    if (t <= 0.5) return 0.0;
    return std::exp(-1.0 / (t - 0.5));
}

double bump_g_integral(double t) {
    if (t <= 0.5) return 0.0;
    static thread_local std::map<double, double> cache;
    auto it = cache.find(t);
    if (it != cache.end()) return it->second;
    double v = integrate([](double s) { return bump_g(s); }, 0.5, t);
    cache.emplace(t, v);
    return v;
}

double ex1_h(double t, double y) { return 0.5 * (1.0 + std::exp(0.5 * (t - 1.0)) * std::sin(y)); }
double ex1_h_dy(double t, double y) { return 0.5 * std::exp(0.5 * (t - 1.0)) * std::cos(y); }

Fixture example1() {
    const double C = bump_g_integral(1.0);  // int_0^1 g

    std::string h_src = "0.5*(1 + exp((t - 1)/2)*sin(x2))";
    std::string sigma11 = "sqrt(1 + " + kBumpSrc + "*(" + h_src + "))";

    auto model = DiffusionModel::from_sources(
        2, {0.0, 0.0}, {"0", "0"}, {sigma11, "0", "0", "1"}, /*asserted_t_analytic=*/false);

    // Terminal dividends: F(x,y) = x and H(x,y) = x^2 - 1 - h(1,y) int_0^1 g.
    std::string F2 = "x1^2 - 1 - 0.5*(1 + sin(x2))*" + fmt(C);
    Fixture fx{
        "example1",
        std::move(model),
        make_payoff(2, {"x1", F2}, {"0", "0"}, {"0", "0"}),
        make_density(2, "1", "0"),
        TruncatedDomain{{-7.0, -6.0}, {7.0, 6.0}},
        {151, 61},
        128,
        256,
        10000,
        20240801,
        {},
        {},
        {},
    };

    fx.oracle_S = [](const mc::PathBundle& paths, long path, int step, int j) {
        double t = paths.time(step);
        auto x = paths.x(path, step);
        if (j == 0) return x[0];
        return x[0] * x[0] - t - ex1_h(t, x[1]) * bump_g_integral(t);
    };
    fx.oracle_w = [](double t, std::span<const double> x, std::span<double> out) {
        // Row-major d x J: w = [[1, 2x], [0, -h_y(t,y) I(t)]].
        out[0] = 1.0;
        out[1] = 2.0 * x[0];
        out[2] = 0.0;
        out[3] = -ex1_h_dy(t, x[1]) * bump_g_integral(t);
    };
    fx.orthogonal_claim = mc::ClaimSpec{expr::parse("x2", fx.model.coeff_vars()),
                                        expr::parse("0", fx.model.coeff_vars()),
                                        expr::parse("0", fx.model.coeff_vars())};
    return fx;
}

Fixture example2() {
    const double g1 = bump_g(1.0);  // e^{-2}

    std::string gp_src = "(exp(-1/(t - 0.5))/((t - 0.5)^2))";
    std::string g_src = "exp(-1/(t - 0.5))";
    std::string f_src = "ite(t > 0.5, -(" + gp_src + "*x1 + 0.5*" + g_src + "^2)*exp(" + g_src +
                        "*x1), 0)";

    auto model = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"},
                                              /*asserted_t_analytic=*/true);
    Fixture fx{
        "example2",
        std::move(model),
        make_payoff(1, {"exp(" + fmt(g1) + "*x1)"}, {"0"}, {f_src}),
        make_density(1, "1", "0"),
        TruncatedDomain{{-8.0}, {8.0}},
        {535},
        2048,
        128,
        10000,
        20240802,
        {},
        {},
        {},
    };

    fx.oracle_S = [](const mc::PathBundle& paths, long path, int step, int) {
        // S_t = e^{g(t)W_t} - int_0^t (g' W + g^2/2) e^{g W} ds, left sums.
        double t = paths.time(step);
        double dt = paths.dt();
        double acc = 0.0;
        for (int k = 0; k < step; ++k) {
            double s = paths.time(k);
            double w = paths.x(path, k)[0];
            double g = bump_g(s);
            double gp = s > 0.5 ? std::exp(-1.0 / (s - 0.5)) / ((s - 0.5) * (s - 0.5)) : 0.0;
            acc += (gp * w + 0.5 * g * g) * std::exp(g * w) * dt;
        }
        double w = paths.x(path, step)[0];
        return std::exp(bump_g(t) * w) - acc;
    };
    return fx;
}

Fixture example3() {
    std::string g_src = "ite(x1 > 0, exp(-1/x1), 0)";
    std::string gpp_src = "ite(x1 > 0, (1/x1^4 - 2/x1^3)*exp(-1/x1), 0)";

    auto model = DiffusionModel::from_sources(2, {0.0, 0.0}, {"0", gpp_src},
                                              {"1", "0", "0", "1"},
                                              /*asserted_t_analytic=*/true);
    Fixture fx{
        "example3",
        std::move(model),
        make_payoff(2, {"x2", "x2 - 2*" + g_src}, {"0", "0"}, {"-(" + gpp_src + ")", "0"}),
        make_density(2, "1", "0"),
        TruncatedDomain{{-4.0, -5.0}, {4.0, 5.0}},
        {321, 41},
        128,
        // The R oracle is a stochastic integral, so matching it pathwise
        // carries an O(1/sqrt(nt)) Ito-discretization term; 2048 steps keep
        // it inside the 2e-2 budget.
        2048,
        1000,
        20240803,
        {},
        {},
        {},
    };

    fx.oracle_S = [](const mc::PathBundle& paths, long path, int step, int j) {
        // S_t = W_t; R_t = W_t - 2 int g'(X) dB, both via the path's own sums.
        double dt = paths.dt();
        double acc_drift = 0.0;  // int g''(X) ds reconstructs W from Y
        double acc_stoch = 0.0;  // int g'(X) dB
        for (int k = 0; k < step; ++k) {
            double x = paths.x(path, k)[0];
            if (x > 0.0) {
                double e = std::exp(-1.0 / x);
                acc_drift += (1.0 / (x * x * x * x) - 2.0 / (x * x * x)) * e * dt;
                acc_stoch += e / (x * x) * paths.dw(path, k)[0];
            }
        }
        double w = paths.x(path, step)[1] - acc_drift;  // Y_t - int g'' dt = W_t
        if (j == 0) return w;
        return w - 2.0 * acc_stoch;
    };
    fx.oracle_w = [](double, std::span<const double> x, std::span<double> out) {
        double gp = x[0] > 0.0 ? std::exp(-1.0 / x[0]) / (x[0] * x[0]) : 0.0;
        // w = [[0, -2 g'(x)], [1, 1]].
        out[0] = 0.0;
        out[1] = -2.0 * gp;
        out[2] = 1.0;
        out[3] = 1.0;
    };
    return fx;
}

eq::TerminalEconomy terminal_log_economy(double crra_a, double rate) {
    eq::TerminalEconomy ec{
        utility::crra("0", crra_a),
        expr::parse("x1", {"t", "x1"}),
        expr::parse(fmt(rate), {"t", "x1"}),
        make_payoff(1, {"x1"}, {"0"}, {"0.1"}),
    };
    return ec;
}

Fixture terminal_economy_fixture() {
    auto model = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    auto ec = terminal_log_economy();
    DensitySpec dsp = eq::state_price_density(ec, 1);
    Fixture fx{
        "terminal_economy",
        std::move(model),
        ec.payoffs,
        std::move(dsp),
        TruncatedDomain{{-7.0}, {7.0}},
        {421},
        256,
        128,
        20000,
        20240804,
        {},
        {},
        {},
    };
    return fx;
}

eq::IntermediateEconomy intermediate_log_economy(double rho) {
    eq::IntermediateEconomy ec{
        utility::crra("-" + fmt(rho) + "*t", 1.0),
        expr::parse("x1", {"t", "x1"}),
        make_payoff(1, {"x1"}, {"0"}, {"0"}),
    };
    return ec;
}

Fixture intermediate_economy_fixture() {
    auto model = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    auto ec = intermediate_log_economy();
    Fixture fx{
        "intermediate_economy",
        std::move(model),
        ec.payoffs,
        make_density(1, "1", "0"),
        TruncatedDomain{{-7.0}, {7.0}},
        {141},
        128,
        128,
        20000,
        20240805,
        {},
        {},
        {},
    };
    return fx;
}

void write_model_json(const Fixture& fx, const std::string& path) {
    io::ModelFile mf;
    mf.d = fx.model.dim();
    mf.x0 = fx.model.x0();
    for (int i = 0; i < mf.d; ++i) mf.b.push_back(fx.model.b(i).print());
    for (int i = 0; i < mf.d; ++i)
        for (int j = 0; j < mf.d; ++j) mf.sigma.push_back(fx.model.sigma(i, j).print());
    mf.asserted_t_analytic = fx.model.asserted_t_analytic();

    for (const auto& e : fx.payoffs.F) mf.payoff_F.push_back(e.print());
    for (const auto& e : fx.payoffs.alpha) mf.payoff_alpha.push_back(e.print());
    for (const auto& e : fx.payoffs.f) mf.payoff_f.push_back(e.print());

    mf.density_G = fx.density.G.print();
    mf.density_beta = fx.density.beta.print();

    mf.grid_auto = false;
    mf.grid_lo = fx.domain.lo;
    mf.grid_hi = fx.domain.hi;
    mf.grid_nx = fx.grid_nx;
    mf.grid_nt = fx.grid_nt;
    mf.mc_nt = fx.mc_nt;
    mf.mc_npaths = fx.mc_npaths;
    mf.mc_seed = fx.seed;

    if (fx.orthogonal_claim) {
        mf.has_claim = true;
        mf.claim_F = fx.orthogonal_claim->F.print();
        mf.claim_alpha = fx.orthogonal_claim->alpha.print();
        mf.claim_f = fx.orthogonal_claim->f.print();
    }
    io::save_model_file(mf, path);
}

}  // namespace endo::fixtures
