#pragma once

#include <memory>
#include <vector>

#include "endo/grid.hpp"
#include "endo/linalg.hpp"
#include "endo/model.hpp"

namespace endo::completeness {

/// The d x J dispersion matrix w^{ij} = u dv^j/dx^i - v^j du/dx^i sampled on
/// every space-time node.
class DispersionField {
public:
    DispersionField(std::shared_ptr<const Grid> grid, int J);

    int J() const { return J_; }
    int dim() const { return grid_->dim(); }
    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }

    double& at(int k, long node, int i, int j) {
        return data_[offset(k, node) + static_cast<std::size_t>(i * J_ + j)];
    }
    double at(int k, long node, int i, int j) const {
        return data_[offset(k, node) + static_cast<std::size_t>(i * J_ + j)];
    }
    /// Row-major d x J block at a node.
    std::span<const double> block(int k, long node) const {
        return {data_.data() + offset(k, node), static_cast<std::size_t>(dim() * J_)};
    }

private:
    std::size_t offset(int k, long node) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(grid_->total_nodes()) +
                static_cast<std::size_t>(node)) * static_cast<std::size_t>(dim() * J_);
    }
    std::shared_ptr<const Grid> grid_;
    int J_;
    std::vector<double> data_;
};

/// w from the solved fields; u must be strictly positive on the grid.
DispersionField compute_w(const FieldSeries& u, const std::vector<FieldSeries>& v);

/// Per-slice degeneracy summary of w* sigma.
struct RankSlice {
    double t = 0.0;
    double degenerate_fraction = 0.0;   // volume-weighted fraction of nodes
    double min_sv_q05 = 0.0, min_sv_q50 = 0.0, min_sv_q95 = 0.0;  // of sigma_min/sigma_max
};

struct RankReport {
    std::vector<RankSlice> slices;
    double threshold_rel = 0.0;
    double aggregate_degenerate_fraction = 0.0;  // volume aggregate over all slices

    /// Volume-weighted degenerate fraction over slices with t in [t0, t1].
    double band_fraction(double t0, double t1) const;
};

/// Marks a node degenerate when sigma_min(w* sigma) / sigma_max(w* sigma)
/// falls below threshold_rel. Reported per slice and in volume aggregate; the
/// almost-sure rank statement is a measure estimate, never a boolean.
RankReport rank_diagnostic(const DispersionField& w, const DiffusionModel& m,
                           double threshold_rel = 1e-6);

/// Same diagnostic for a closed-form dispersion: `w_at(t, x, out)` fills the
/// row-major d x J block. Used by the counter-example fixtures, whose w is
/// known exactly.
RankReport rank_diagnostic_closed_form(
    const std::function<void(double, std::span<const double>, std::span<double>)>& w_at, int J,
    const DiffusionModel& m, const Grid& grid, double threshold_rel = 1e-6);

/// Evaluates the price volatility loadings and the Girsanov drift along
/// paths. Holds u, v and their gradients; all queries interpolate.
class PathDispersion {
public:
    PathDispersion(const FieldSeries& u, const std::vector<FieldSeries>& v,
                   const DiffusionModel& m, const PayoffSpec* payoff);

    int J() const { return static_cast<int>(v_.size()); }
    int dim() const { return m_->dim(); }

    /// J x d matrix D: dS^j = sum_k D_jk dW^{Q,k}; int_alpha holds the
    /// accumulated integrals of alpha^j along the path (size J).
    linalg::Matrix price_dispersion(double t, std::span<const double> x,
                                    std::span<const double> int_alpha) const;

    /// Girsanov drift relating W and W^Q: component k = (1/u) sum_l d_l u sigma^{lk}.
    std::vector<double> market_price_of_risk(double t, std::span<const double> x) const;

    double u_at(double t, std::span<const double> x) const { return u_->interpolate(t, x); }

private:
    const FieldSeries* u_;
    std::vector<const FieldSeries*> v_;
    std::vector<FieldSeries> grad_u_;
    std::vector<std::vector<FieldSeries>> grad_v_;
    const DiffusionModel* m_;
    const PayoffSpec* payoff_;
};

}  // namespace endo::completeness
