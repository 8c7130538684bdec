#include "endo/completeness.hpp"

#include <algorithm>
#include <cmath>

namespace endo::completeness {

DispersionField::DispersionField(std::shared_ptr<const Grid> grid, int J)
    : grid_(std::move(grid)), J_(J),
      data_(static_cast<std::size_t>(grid_->nt() + 1) *
                static_cast<std::size_t>(grid_->total_nodes()) *
                static_cast<std::size_t>(grid_->dim() * J),
            0.0) {}

DispersionField compute_w(const FieldSeries& u, const std::vector<FieldSeries>& v) {
    if (v.empty()) throw InputError("compute_w: need at least one price field");
    const Grid& g = u.grid();
    for (const auto& vj : v)
        if (&vj.grid() != &g) throw InputError("compute_w: u and v must share one grid");

    const int d = g.dim();
    const int J = static_cast<int>(v.size());
    auto gu = gradient(u);
    DispersionField w(u.grid_ptr(), J);

    for (int j = 0; j < J; ++j) {
        auto gv = gradient(v[static_cast<std::size_t>(j)]);
        for (int k = 0; k <= g.nt(); ++k) {
            for (long node = 0; node < g.total_nodes(); ++node) {
                double uv = u.at(k, node);
                if (!(uv > 0.0))
                    throw NumericError("compute_w: u must be strictly positive on the grid");
                double vv = v[static_cast<std::size_t>(j)].at(k, node);
                for (int i = 0; i < d; ++i) {
                    w.at(k, node, i, j) = uv * gv[static_cast<std::size_t>(i)].at(k, node) -
                                          vv * gu[static_cast<std::size_t>(i)].at(k, node);
                }
            }
        }
    }
    return w;
}

namespace {

struct SliceAccum {
    std::vector<double> rel_sv;
    long degenerate = 0;
};

RankReport summarize(std::vector<SliceAccum>& acc, const Grid& g, double threshold_rel) {
    RankReport rep;
    rep.threshold_rel = threshold_rel;
    double total_nodes = 0.0, total_deg = 0.0;
    for (int k = 0; k <= g.nt(); ++k) {
        auto& a = acc[static_cast<std::size_t>(k)];
        RankSlice s;
        s.t = g.time(k);
        long n = static_cast<long>(a.rel_sv.size());
        s.degenerate_fraction = n > 0 ? static_cast<double>(a.degenerate) / n : 0.0;
        std::sort(a.rel_sv.begin(), a.rel_sv.end());
        auto q = [&](double p) {
            if (a.rel_sv.empty()) return 0.0;
            std::size_t i = static_cast<std::size_t>(p * (a.rel_sv.size() - 1));
            return a.rel_sv[i];
        };
        s.min_sv_q05 = q(0.05);
        s.min_sv_q50 = q(0.50);
        s.min_sv_q95 = q(0.95);
        rep.slices.push_back(s);
        total_nodes += static_cast<double>(n);
        total_deg += static_cast<double>(a.degenerate);
    }
    rep.aggregate_degenerate_fraction = total_nodes > 0 ? total_deg / total_nodes : 0.0;
    return rep;
}

// sigma_min/sigma_max of the J x d product (w* sigma); returns 0 for a zero
// matrix. The ratio is scale invariant: (cu, cv) rescale w by c^2.
double relative_min_sv(const linalg::Matrix& m) {
    auto sv = linalg::singular_values(m);
    if (sv.empty() || sv.front() == 0.0) return 0.0;
    return sv.back() / sv.front();
}

}  // namespace

double RankReport::band_fraction(double t0, double t1) const {
    double n = 0.0, d = 0.0;
    for (const auto& s : slices) {
        if (s.t < t0 || s.t > t1) continue;
        n += s.degenerate_fraction;
        d += 1.0;
    }
    return d > 0.0 ? n / d : 0.0;
}

RankReport rank_diagnostic(const DispersionField& w, const DiffusionModel& m,
                           double threshold_rel) {
    if (threshold_rel <= 0.0 || threshold_rel >= 1.0)
        throw InputError("rank_diagnostic: threshold_rel must lie in (0,1)");
    const Grid& g = w.grid();
    const int d = w.dim();
    const int J = w.J();

    std::vector<SliceAccum> acc(static_cast<std::size_t>(g.nt() + 1));
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> sig(static_cast<std::size_t>(d * d));
    linalg::Matrix prod(J, d);
    for (int k = 0; k <= g.nt(); ++k) {
        double t = g.time(k);
        auto& a = acc[static_cast<std::size_t>(k)];
        a.rel_sv.reserve(static_cast<std::size_t>(g.total_nodes()));
        for (long node = 0; node < g.total_nodes(); ++node) {
            g.node_coords(node, x);
            m.eval_sigma(t, x, sig);
            // prod = w^T sigma  (J x d)
            for (int j = 0; j < J; ++j)
                for (int c = 0; c < d; ++c) {
                    double s = 0.0;
                    for (int i = 0; i < d; ++i) s += w.at(k, node, i, j) * sig[static_cast<std::size_t>(i * d + c)];
                    prod(j, c) = s;
                }
            double rel = relative_min_sv(prod);
            a.rel_sv.push_back(rel);
            if (rel < threshold_rel) ++a.degenerate;
        }
    }
    return summarize(acc, g, threshold_rel);
}

RankReport rank_diagnostic_closed_form(
    const std::function<void(double, std::span<const double>, std::span<double>)>& w_at, int J,
    const DiffusionModel& m, const Grid& g, double threshold_rel) {
    if (threshold_rel <= 0.0 || threshold_rel >= 1.0)
        throw InputError("rank_diagnostic: threshold_rel must lie in (0,1)");
    const int d = m.dim();
    std::vector<SliceAccum> acc(static_cast<std::size_t>(g.nt() + 1));
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> sig(static_cast<std::size_t>(d * d));
    std::vector<double> wblk(static_cast<std::size_t>(d * J));
    linalg::Matrix prod(J, d);
    for (int k = 0; k <= g.nt(); ++k) {
        double t = g.time(k);
        auto& a = acc[static_cast<std::size_t>(k)];
        for (long node = 0; node < g.total_nodes(); ++node) {
            g.node_coords(node, x);
            m.eval_sigma(t, x, sig);
            w_at(t, x, wblk);
            for (int j = 0; j < J; ++j)
                for (int c = 0; c < d; ++c) {
                    double s = 0.0;
                    for (int i = 0; i < d; ++i)
                        s += wblk[static_cast<std::size_t>(i * J + j)] * sig[static_cast<std::size_t>(i * d + c)];
                    prod(j, c) = s;
                }
            double rel = relative_min_sv(prod);
            a.rel_sv.push_back(rel);
            if (rel < threshold_rel) ++a.degenerate;
        }
    }
    return summarize(acc, g, threshold_rel);
}

PathDispersion::PathDispersion(const FieldSeries& u, const std::vector<FieldSeries>& v,
                               const DiffusionModel& m, const PayoffSpec* payoff)
    : u_(&u), m_(&m), payoff_(payoff) {
    grad_u_ = gradient(u);
    for (const auto& vj : v) {
        v_.push_back(&vj);
        grad_v_.push_back(gradient(vj));
    }
}

linalg::Matrix PathDispersion::price_dispersion(double t, std::span<const double> x,
                                                std::span<const double> int_alpha) const {
    const int d = dim();
    const int J = this->J();
    double uv = u_->interpolate(t, x);
    if (!(uv > 0.0)) throw NumericError("price_dispersion: u is not positive at the query point");

    std::vector<double> sig(static_cast<std::size_t>(d * d));
    m_->eval_sigma(t, x, sig);

    linalg::Matrix D(J, d);
    for (int j = 0; j < J; ++j) {
        double growth = std::exp(int_alpha.empty() ? 0.0 : int_alpha[static_cast<std::size_t>(j)]);
        double vv = v_[static_cast<std::size_t>(j)]->interpolate(t, x);
        for (int k = 0; k < d; ++k) {
            double acc = 0.0;
            for (int i = 0; i < d; ++i) {
                double w_ij = uv * grad_v_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]
                                       .interpolate(t, x) -
                              vv * grad_u_[static_cast<std::size_t>(i)].interpolate(t, x);
                acc += w_ij * sig[static_cast<std::size_t>(i * d + k)];
            }
            D(j, k) = growth * acc / (uv * uv);
        }
    }
    return D;
}

std::vector<double> PathDispersion::market_price_of_risk(double t, std::span<const double> x) const {
    const int d = dim();
    double uv = u_->interpolate(t, x);
    if (!(uv > 0.0)) throw NumericError("market_price_of_risk: u is not positive at the query point");
    std::vector<double> sig(static_cast<std::size_t>(d * d));
    m_->eval_sigma(t, x, sig);
    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    for (int k = 0; k < d; ++k) {
        double acc = 0.0;
        for (int l = 0; l < d; ++l)
            acc += grad_u_[static_cast<std::size_t>(l)].interpolate(t, x) *
                   sig[static_cast<std::size_t>(l * d + k)];
        out[static_cast<std::size_t>(k)] = acc / uv;
    }
    return out;
}

}  // namespace endo::completeness
