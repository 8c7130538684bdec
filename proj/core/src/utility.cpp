#include "endo/utility.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace endo::utility {

std::shared_ptr<const WealthGrid> WealthGrid::make(double x_min, double x_max, int n) {
    if (!(x_min > 0.0) || !(x_max > x_min) || n < 8)
        throw InputError("WealthGrid: need 0 < x_min < x_max and n >= 8");
    auto g = std::make_shared<WealthGrid>();
    g->x_min = x_min;
    g->x_max = x_max;
    g->n = n;
    g->x.resize(static_cast<std::size_t>(n));
    g->logx.resize(static_cast<std::size_t>(n));
    double l0 = std::log(x_min), l1 = std::log(x_max);
    for (int i = 0; i < n; ++i) {
        double l = l0 + (l1 - l0) * i / (n - 1);
        g->logx[static_cast<std::size_t>(i)] = l;
        g->x[static_cast<std::size_t>(i)] = std::exp(l);
    }
    return g;
}

std::shared_ptr<const WealthGrid> WealthGrid::standard() {
    static std::shared_ptr<const WealthGrid> g = make();
    return g;
}

UtilityFunction::UtilityFunction(std::shared_ptr<const WealthGrid> grid, std::vector<double> tgrid,
                                 Family tag)
    : grid_(std::move(grid)), tgrid_(std::move(tgrid)), tag_(tag) {
    if (!grid_) grid_ = WealthGrid::standard();
    if (tgrid_.empty()) tgrid_ = {0.0, 1.0};
    u_.assign(static_cast<std::size_t>(nt()) * static_cast<std::size_t>(grid_->n), 0.0);
    last_valid = grid_->n - 1;
}

int UtilityFunction::t_index(double t) const {
    int best = 0;
    double dist = std::fabs(tgrid_[0] - t);
    for (int i = 1; i < nt(); ++i) {
        double d = std::fabs(tgrid_[static_cast<std::size_t>(i)] - t);
        if (d < dist) { dist = d; best = i; }
    }
    return best;
}

double UtilityFunction::marginal_at(int it, int ix) const {
    if (marginal_) {
        double env[2] = {tgrid_[static_cast<std::size_t>(it)], grid_->x[static_cast<std::size_t>(ix)]};
        return marginal_->eval(std::span<const double>(env, 2));
    }
    if (!marginal_samples_.empty()) return marginal_samples_[slot(it, ix)];
    // d/dx = (du/dlog x)/x with central differences, one-sided at the edges.
    const int n = grid_->n;
    double dl = grid_->dlog();
    double du;
    if (ix == 0) du = (value(it, 1) - value(it, 0)) / dl;
    else if (ix == n - 1) du = (value(it, n - 1) - value(it, n - 2)) / dl;
    else du = (value(it, ix + 1) - value(it, ix - 1)) / (2.0 * dl);
    return du / grid_->x[static_cast<std::size_t>(ix)];
}

double UtilityFunction::value_at(int it, double x) const {
    const auto& lx = grid_->logx;
    const int n = grid_->n;
    double l = std::log(std::clamp(x, grid_->x_min, grid_->x_max));
    double f = (l - lx[0]) / grid_->dlog();
    int i = std::clamp(static_cast<int>(f), 0, n - 2);
    double w = f - i;
    // Catmull-Rom in log-wealth, falling back to linear at the edges.
    if (i == 0 || i == n - 2)
        return (1.0 - w) * value(it, i) + w * value(it, i + 1);
    double p0 = value(it, i - 1), p1 = value(it, i), p2 = value(it, i + 1), p3 = value(it, i + 2);
    double w2 = w * w, w3 = w2 * w;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * w + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * w2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * w3);
}

void UtilityFunction::check_shape() const {
    // Stencils must not touch invalid (truncation-flagged) nodes.
    const int n = grid_->n;
    for (int it = 0; it < nt(); ++it) {
        for (int ix = std::max(1, first_valid + 1); ix <= std::min(n - 2, last_valid - 1); ++ix) {
            double ux = marginal_at(it, ix);
            if (!(ux > 0.0)) throw NumericError("utility: u_x must be strictly positive");
            double dl = grid_->dlog();
            double ul = (value(it, ix + 1) - value(it, ix - 1)) / (2.0 * dl);
            double ull = (value(it, ix + 1) - 2.0 * value(it, ix) + value(it, ix - 1)) / (dl * dl);
            double x = grid_->x[static_cast<std::size_t>(ix)];
            double uxx = (ull - ul) / (x * x);
            if (!(uxx < 0.0)) throw NumericError("utility: u_xx must be strictly negative");
        }
    }
}

void UtilityFunction::write_csv(std::ostream& os, const RiskProfile* profile) const {
    os << (profile ? "t,x,u,u_x,a,p,q\n" : "t,x,u,u_x\n");
    os.precision(17);
    for (int it = 0; it < nt(); ++it)
        for (int ix = 0; ix < grid_->n; ++ix) {
            os << tgrid_[static_cast<std::size_t>(it)] << ',' << grid_->x[static_cast<std::size_t>(ix)]
               << ',' << value(it, ix) << ',' << marginal_at(it, ix);
            if (profile)
                os << ',' << profile->at(profile->a, it, ix) << ',' << profile->at(profile->p, it, ix)
                   << ',' << profile->at(profile->q, it, ix);
            os << '\n';
        }
}

double RiskProfile::lookup(const std::vector<double>& f, double t, double x) const {
    int it = 0;
    double dist = std::fabs(tgrid[0] - t);
    for (std::size_t i = 1; i < tgrid.size(); ++i) {
        double d = std::fabs(tgrid[i] - t);
        if (d < dist) { dist = d; it = static_cast<int>(i); }
    }
    double l = std::log(std::clamp(x, grid->x_min, grid->x_max));
    double fr = (l - grid->logx[0]) / grid->dlog();
    int i = std::clamp(static_cast<int>(fr), 0, grid->n - 2);
    double w = fr - i;
    return (1.0 - w) * at(f, it, i) + w * at(f, it, i + 1);
}

UtilityFunction crra(const expr::Expression& nu, double a, std::shared_ptr<const WealthGrid> grid,
                     std::vector<double> tgrid) {
    if (!(a > 0.0)) throw InputError("crra: risk aversion must be positive");
    if (!grid) grid = WealthGrid::standard();
    if (tgrid.empty()) {
        tgrid.resize(33);
        for (int i = 0; i < 33; ++i) tgrid[static_cast<std::size_t>(i)] = i / 32.0;
    }
    UtilityFunction u(grid, tgrid, Family::U4);
    bool log_type = std::fabs(a - 1.0) < 1e-12;
    for (int it = 0; it < u.nt(); ++it) {
        double env[1] = {u.tgrid()[static_cast<std::size_t>(it)]};
        double scale = std::exp(nu.eval(std::span<const double>(env, 1)));
        for (int ix = 0; ix < grid->n; ++ix) {
            double x = grid->x[static_cast<std::size_t>(ix)];
            u.value(it, ix) = log_type ? scale * std::log(x)
                                       : scale * (std::pow(x, 1.0 - a) - 1.0) / (1.0 - a);
        }
    }
    // Closed-form marginal e^{nu(t)} s^{-a}, assembled over variables {t, s}.
    std::vector<std::string> ms_vars = {"t", "s"};
    auto nu_t = nu;  // nu is parsed against {t}; lift it onto {t, s}
    expr::Expression lifted = nu_t.substitute("__none__", expr::Expression::lit(0.0), ms_vars);
    expr::Expression marg = expr::Expression::bin(
        expr::BinOp::Mul, expr::Expression::call(expr::Fun::Exp, lifted),
        expr::Expression::bin(expr::BinOp::Pow, expr::Expression::var("s", ms_vars),
                              expr::Expression::lit(-a)));
    u.set_marginal_expr(std::move(marg));
    return u;
}

UtilityFunction crra(const std::string& nu_src, double a, std::shared_ptr<const WealthGrid> grid,
                     std::vector<double> tgrid) {
    return crra(expr::parse(nu_src, {"t"}), a, std::move(grid), std::move(tgrid));
}

RiskProfile risk_profile(const UtilityFunction& u) {
    const auto& g = u.grid();
    const int n = g.n;
    const int nt = u.nt();
    const double dl = g.dlog();
    u.check_shape();

    RiskProfile rp;
    rp.tgrid = u.tgrid();
    rp.grid = u.grid_ptr();
    rp.a.assign(static_cast<std::size_t>(nt) * n, 0.0);
    rp.p.assign(static_cast<std::size_t>(nt) * n, 0.0);
    rp.q.assign(static_cast<std::size_t>(nt) * n, 0.0);

    auto slot = [n](int it, int ix) {
        return static_cast<std::size_t>(it) * static_cast<std::size_t>(n) + static_cast<std::size_t>(ix);
    };

    // Truncation-flagged nodes carry grid artifacts; all stencils stay
    // inside the valid window and outside values are zero-filled.
    const int wlo = std::max(0, u.first_valid);
    const int whi = std::min(n - 1, u.last_valid);
    if (whi - wlo < 2) throw NumericError("risk_profile: valid window too small");

    for (int it = 0; it < nt; ++it) {
        // ln u_x on the grid; a = -d ln u_x / d ln x.
        std::vector<double> lux(static_cast<std::size_t>(n), 0.0);
        for (int ix = wlo; ix <= whi; ++ix) {
            double ux = u.marginal_at(it, ix);
            if (!(ux > 0.0)) throw NumericError("risk_profile: non-positive marginal");
            lux[static_cast<std::size_t>(ix)] = std::log(ux);
        }
        // u_xx in log coordinates: u_xx = (d u_x/d ln x)/x; its log-derivative
        // gives the prudence without amplifying grid error.
        std::vector<double> uxx(static_cast<std::size_t>(n), 0.0);
        for (int ix = wlo; ix <= whi; ++ix) {
            double dux;
            if (ix == wlo) dux = (u.marginal_at(it, wlo + 1) - u.marginal_at(it, wlo)) / dl;
            else if (ix == whi) dux = (u.marginal_at(it, whi) - u.marginal_at(it, whi - 1)) / dl;
            else dux = (u.marginal_at(it, ix + 1) - u.marginal_at(it, ix - 1)) / (2.0 * dl);
            uxx[static_cast<std::size_t>(ix)] = dux / g.x[static_cast<std::size_t>(ix)];
        }
        for (int ix = wlo; ix <= whi; ++ix) {
            double da;
            if (ix == wlo) da = (lux[static_cast<std::size_t>(wlo + 1)] - lux[static_cast<std::size_t>(wlo)]) / dl;
            else if (ix == whi) da = (lux[static_cast<std::size_t>(whi)] - lux[static_cast<std::size_t>(whi - 1)]) / dl;
            else da = (lux[static_cast<std::size_t>(ix + 1)] - lux[static_cast<std::size_t>(ix - 1)]) / (2.0 * dl);
            rp.a[slot(it, ix)] = -da;

            double au = std::fabs(uxx[static_cast<std::size_t>(ix)]);
            if (au <= 0.0) { rp.p[slot(it, ix)] = 0.0; continue; }
            double dp;
            auto labs = [&](int i) { return std::log(std::fabs(uxx[static_cast<std::size_t>(i)])); };
            if (ix == wlo) dp = (labs(wlo + 1) - labs(wlo)) / dl;
            else if (ix == whi) dp = (labs(whi) - labs(whi - 1)) / dl;
            else dp = (labs(ix + 1) - labs(ix - 1)) / (2.0 * dl);
            rp.p[slot(it, ix)] = -dp;
        }
        // Impatience from time differences of ln u_x.
        for (int ix = wlo; ix <= whi; ++ix) {
            double dq = 0.0;
            if (nt > 1) {
                auto lq = [&](int jt) { return std::log(u.marginal_at(jt, ix)); };
                if (it == 0)
                    dq = (lq(1) - lq(0)) / (u.tgrid()[1] - u.tgrid()[0]);
                else if (it == nt - 1)
                    dq = (lq(nt - 1) - lq(nt - 2)) /
                         (u.tgrid()[static_cast<std::size_t>(nt - 1)] - u.tgrid()[static_cast<std::size_t>(nt - 2)]);
                else
                    dq = (lq(it + 1) - lq(it - 1)) /
                         (u.tgrid()[static_cast<std::size_t>(it + 1)] - u.tgrid()[static_cast<std::size_t>(it - 1)]);
            }
            rp.q[slot(it, ix)] = -dq;
        }
    }
    return rp;
}

UtilityFunction weighted_sum(const UtilityFunction& u1, const UtilityFunction& u2, double w1,
                             double w2) {
    if (!u1.grid().compatible(u2.grid()) || u1.tgrid() != u2.tgrid())
        throw InputError("weighted_sum: utilities must share grids");
    UtilityFunction out(u1.grid_ptr(), u1.tgrid(), u1.tag());
    for (int it = 0; it < out.nt(); ++it)
        for (int ix = 0; ix < out.grid().n; ++ix)
            out.value(it, ix) = w1 * u1.value(it, ix) + w2 * u2.value(it, ix);
    if (u1.marginal_expr() && u2.marginal_expr()) {
        auto m = expr::Expression::bin(
            expr::BinOp::Add,
            expr::Expression::bin(expr::BinOp::Mul, expr::Expression::lit(w1), *u1.marginal_expr()),
            expr::Expression::bin(expr::BinOp::Mul, expr::Expression::lit(w2), *u2.marginal_expr()));
        out.set_marginal_expr(std::move(m));
    }
    out.first_valid = std::max(u1.first_valid, u2.first_valid);
    out.last_valid = std::min(u1.last_valid, u2.last_valid);
    return out;
}

UtilityFunction scale(const UtilityFunction& u, double c) {
    if (!(c > 0.0)) throw InputError("scale: weight must be positive");
    UtilityFunction out(u.grid_ptr(), u.tgrid(), u.tag());
    for (int it = 0; it < out.nt(); ++it)
        for (int ix = 0; ix < out.grid().n; ++ix) out.value(it, ix) = c * u.value(it, ix);
    if (u.marginal_expr()) {
        out.set_marginal_expr(expr::Expression::bin(expr::BinOp::Mul, expr::Expression::lit(c),
                                                    *u.marginal_expr()));
    }
    out.first_valid = u.first_valid;
    out.last_valid = u.last_valid;
    return out;
}

UtilityFunction sup_convolution(const UtilityFunction& u1, const UtilityFunction& u2) {
    if (!u1.grid().compatible(u2.grid()) || u1.tgrid() != u2.tgrid())
        throw InputError("sup_convolution: utilities must share grids");
    const auto& g = u1.grid();
    UtilityFunction out(u1.grid_ptr(), u1.tgrid(), u1.tag());

    const double gold = 0.6180339887498949;
    for (int it = 0; it < out.nt(); ++it) {
        for (int ix = 0; ix < g.n; ++ix) {
            double x = g.x[static_cast<std::size_t>(ix)];
            double lo = g.x_min, hi = x - g.x_min;
            if (hi <= lo) {
                // Both parts cannot stay on the grid; mark as truncated.
                out.value(it, ix) = u1.value(it, 0) + u2.value(it, 0);
                out.first_valid = std::max(out.first_valid, ix + 1);
                continue;
            }
            auto phi = [&](double x1) { return u1.value_at(it, x1) + u2.value_at(it, x - x1); };
            // Grid scan for a bracket.
            double best_x = 0.5 * x, best_v = phi(0.5 * x);
            for (int k = 0; k < g.n && g.x[static_cast<std::size_t>(k)] < hi; ++k) {
                double cand = g.x[static_cast<std::size_t>(k)];
                if (cand <= lo) continue;
                double v = phi(cand);
                if (v > best_v) { best_v = v; best_x = cand; }
            }
            // Golden-section refinement around the best grid split.
            double a = std::max(lo, best_x * 0.5), b = std::min(hi, best_x * 2.0);
            double c1 = b - gold * (b - a), c2 = a + gold * (b - a);
            double f1 = phi(c1), f2 = phi(c2);
            for (int iter = 0; iter < 48 && (b - a) > 1e-12 * x; ++iter) {
                if (f1 < f2) {
                    a = c1; c1 = c2; f1 = f2;
                    c2 = a + gold * (b - a);
                    f2 = phi(c2);
                } else {
                    b = c2; c2 = c1; f2 = f1;
                    c1 = b - gold * (b - a);
                    f1 = phi(c1);
                }
            }
            out.value(it, ix) = std::max(best_v, std::max(f1, f2));
        }
    }
    out.first_valid = std::max({out.first_valid, u1.first_valid, u2.first_valid});
    out.last_valid = std::min(u1.last_valid, u2.last_valid);
    return out;
}

double inverse_marginal(const UtilityFunction& u, double t, double y) {
    if (!(y > 0.0)) throw InputError("inverse_marginal: y must be positive");
    const auto& g = u.grid();
    const int n = g.n;
    int it = u.t_index(t);
    double ly = std::log(y);

    // ln u_x is strictly decreasing in ln x.
    auto lux = [&](int ix) { return std::log(u.marginal_at(it, ix)); };
    double l_hi = lux(0), l_lo = lux(n - 1);
    if (ly > l_hi || ly < l_lo)
        throw NumericError("inverse_marginal: y outside the marginal range of the grid");

    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (lux(mid) >= ly) lo = mid;
        else hi = mid;
    }
    double la = lux(lo), lb = lux(hi);
    double w = la == lb ? 0.0 : (la - ly) / (la - lb);
    double lx = g.logx[static_cast<std::size_t>(lo)] + w * g.dlog();
    return std::exp(lx);
}

UtilityFunction conjugate(const UtilityFunction& u) {
    const auto& g = u.grid();
    UtilityFunction out(u.grid_ptr(), u.tgrid(), u.tag());
    std::vector<double> gsamples(static_cast<std::size_t>(u.nt()) * static_cast<std::size_t>(g.n), 0.0);

    for (int it = 0; it < out.nt(); ++it) {
        double m_hi = u.marginal_at(it, 0), m_lo = u.marginal_at(it, g.n - 1);
        for (int ix = 0; ix < g.n; ++ix) {
            double x = g.x[static_cast<std::size_t>(ix)];  // the conjugate variable (a price)
            double gv;
            if (x >= m_hi) {
                gv = g.x_min;
                out.first_valid = std::max(out.first_valid, ix + 1);
            } else if (x <= m_lo) {
                gv = g.x_max;
                out.last_valid = std::min(out.last_valid, ix - 1);
            } else {
                gv = inverse_marginal(u, u.tgrid()[static_cast<std::size_t>(it)], x);
            }
            out.value(it, ix) = x * gv - u.value_at(it, gv);
            // u*_x(t,x) = g(t,x)
            gsamples[static_cast<std::size_t>(it) * static_cast<std::size_t>(g.n) +
                     static_cast<std::size_t>(ix)] = gv;
        }
    }
    out.set_marginal_samples(std::move(gsamples));
    return out;
}

}  // namespace endo::utility
