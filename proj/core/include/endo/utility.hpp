#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "endo/expr.hpp"

namespace endo::utility {

enum class Family { U1, U2, U3, U4 };

/// Geometric wealth grid; relative quantities (risk aversion, prudence) are
/// natural in log coordinates, and the Inada limits need decades of range.
struct WealthGrid {
    double x_min = 1e-4, x_max = 1e4;
    int n = 512;
    std::vector<double> x;     // geometric nodes
    std::vector<double> logx;  // ln x, uniform spacing

    static std::shared_ptr<const WealthGrid> make(double x_min = 1e-4, double x_max = 1e4,
                                                  int n = 512);
    /// Shared default grid; utilities built on it combine without copying.
    static std::shared_ptr<const WealthGrid> standard();
    double dlog() const { return logx[1] - logx[0]; }
    bool compatible(const WealthGrid& other) const {
        return n == other.n && x_min == other.x_min && x_max == other.x_max;
    }
};

/// Time-indexed concave utility sampled on the wealth grid, with an optional
/// closed-form marginal u_x(t, s) (variables {t, s}).
class UtilityFunction {
public:
    UtilityFunction(std::shared_ptr<const WealthGrid> grid, std::vector<double> tgrid,
                    Family tag = Family::U2);

    const WealthGrid& grid() const { return *grid_; }
    std::shared_ptr<const WealthGrid> grid_ptr() const { return grid_; }
    const std::vector<double>& tgrid() const { return tgrid_; }
    int nt() const { return static_cast<int>(tgrid_.size()); }
    Family tag() const { return tag_; }
    void set_tag(Family f) { tag_ = f; }

    double& value(int it, int ix) { return u_[slot(it, ix)]; }
    double value(int it, int ix) const { return u_[slot(it, ix)]; }

    const std::optional<expr::Expression>& marginal_expr() const { return marginal_; }
    void set_marginal_expr(expr::Expression e) { marginal_ = std::move(e); }
    /// Sampled marginal (used by conjugate outputs where no closed form exists).
    void set_marginal_samples(std::vector<double> m) { marginal_samples_ = std::move(m); }
    bool has_marginal() const { return marginal_.has_value() || !marginal_samples_.empty(); }

    /// u_x at a grid node, from the best available source: closed form,
    /// sampled marginal, or log-grid stencil.
    double marginal_at(int it, int ix) const;
    /// u interpolated at arbitrary wealth (cubic in ln x).
    double value_at(int it, double x) const;
    /// Nearest time index for t.
    int t_index(double t) const;

    /// Nodes outside [first_valid, last_valid] carry truncation artifacts
    /// (conjugation infima pinned at grid edges) and are excluded from
    /// identity tests.
    int first_valid = 0;
    int last_valid = -1;  // set at construction to n-1

    /// Enforces u_x > 0 and u_xx < 0 at interior nodes; throws on violation.
    void check_shape() const;

    /// Columns t,x,u,u_x and, when a profile is supplied, a,p,q.
    void write_csv(std::ostream& os, const struct RiskProfile* profile = nullptr) const;

private:
    std::size_t slot(int it, int ix) const {
        return static_cast<std::size_t>(it) * static_cast<std::size_t>(grid_->n) +
               static_cast<std::size_t>(ix);
    }
    std::shared_ptr<const WealthGrid> grid_;
    std::vector<double> tgrid_;
    std::vector<double> u_;
    std::optional<expr::Expression> marginal_;
    std::vector<double> marginal_samples_;  // same layout as u_
    Family tag_;
};

/// a = -x u_xx / u_x (relative risk aversion), p = -x u_xxx / u_xx
/// (relative prudence), q = -d/dt ln u_x (impatience), sampled on the grids.
struct RiskProfile {
    std::vector<double> tgrid;
    std::shared_ptr<const WealthGrid> grid;
    std::vector<double> a, p, q;  // [t][x] layout

    double at(const std::vector<double>& f, int it, int ix) const {
        return f[static_cast<std::size_t>(it) * static_cast<std::size_t>(grid->n) +
                 static_cast<std::size_t>(ix)];
    }
    /// Interpolated lookup (linear in ln x, nearest in t).
    double lookup(const std::vector<double>& f, double t, double x) const;
    double a_at(double t, double x) const { return lookup(a, t, x); }
    double p_at(double t, double x) const { return lookup(p, t, x); }
    double q_at(double t, double x) const { return lookup(q, t, x); }
};

/// u(t,x) = e^{nu(t)} (x^{1-a} - 1)/(1-a), with the log limit at a = 1.
/// `nu` is an expression of t alone; pass "0" for undiscounted utilities.
UtilityFunction crra(const expr::Expression& nu, double a,
                     std::shared_ptr<const WealthGrid> grid = nullptr,
                     std::vector<double> tgrid = {});
UtilityFunction crra(const std::string& nu_src, double a,
                     std::shared_ptr<const WealthGrid> grid = nullptr,
                     std::vector<double> tgrid = {});

RiskProfile risk_profile(const UtilityFunction& u);

/// w1 u1 + w2 u2 on shared grids (the utility families are closed under
/// positive combinations).
UtilityFunction weighted_sum(const UtilityFunction& u1, const UtilityFunction& u2, double w1,
                             double w2);
UtilityFunction scale(const UtilityFunction& u, double c);

/// (u1 (+) u2)(t,x) = sup_{x1+x2=x} u1(t,x1) + u2(t,x2); grid scan with
/// golden-section refinement between nodes.
UtilityFunction sup_convolution(const UtilityFunction& u1, const UtilityFunction& u2);

/// u*(t,x) = inf_{y>0} (xy - u(t,y)) = x g(t,x) - u(t, g(t,x)) where g is the
/// inverse marginal. Output nodes whose infimum pins at a grid edge are
/// flagged through [first_valid, last_valid].
UtilityFunction conjugate(const UtilityFunction& u);

/// g with u_x(t, g(t,y)) = y: monotone bisection on the log-grid with linear
/// interpolation of ln u_x.
double inverse_marginal(const UtilityFunction& u, double t, double y);

}  // namespace endo::utility
