#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "endo/errors.hpp"

namespace endo {

/// Finite box standing in for R^d, with the fixed unit horizon.
struct TruncatedDomain {
    std::vector<double> lo, hi;  // per-axis bounds
    double terminal_time = 1.0;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(std::span<const double> x) const {
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }
};

/// Uniform tensor grid on a truncated domain with nt time steps.
/// Spatial nodes flatten axis-0 fastest.
class Grid {
public:
    Grid(TruncatedDomain dom, std::vector<int> nx, int nt);

    int dim() const { return dom_.dim(); }
    int nt() const { return nt_; }
    int nx(int axis) const { return nx_[static_cast<std::size_t>(axis)]; }
    long total_nodes() const { return total_; }
    double dt() const { return dt_; }
    double dx(int axis) const { return dx_[static_cast<std::size_t>(axis)]; }
    double time(int k) const { return dt_ * k; }
    const TruncatedDomain& domain() const { return dom_; }

    double coord(int axis, int i) const {
        return dom_.lo[static_cast<std::size_t>(axis)] + i * dx_[static_cast<std::size_t>(axis)];
    }
    long flatten(std::span<const int> idx) const;
    void unflatten(long node, std::span<int> idx) const;
    void node_coords(long node, std::span<double> x) const;

private:
    TruncatedDomain dom_;
    std::vector<int> nx_;
    int nt_;
    double dt_;
    std::vector<double> dx_;
    long total_;
};

/// Scalar field sampled on every (time slice, spatial node) of a grid.
class FieldSeries {
public:
    FieldSeries() = default;
    FieldSeries(std::shared_ptr<const Grid> grid, std::string label);

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    const std::string& label() const { return label_; }

    std::span<double> slice(int k);
    std::span<const double> slice(int k) const;
    double at(int k, long node) const { return data_[index(k, node)]; }
    double& at(int k, long node) { return data_[index(k, node)]; }

    /// Multilinear interpolation in space, linear in time.
    /// Throws NumericError if (t, x) leaves the grid hull.
    double interpolate(double t, std::span<const double> x) const;

    /// True when (t, x) is inside the hull (cheap pre-check for path loops).
    bool in_hull(double t, std::span<const double> x) const;

    void check_finite() const;

    /// CSV export: header t,x1[,x2],value; row-major by time slice.
    void write_csv(std::ostream& os) const;

private:
    std::size_t index(int k, long node) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(grid_->total_nodes()) +
               static_cast<std::size_t>(node);
    }
    std::shared_ptr<const Grid> grid_;
    std::string label_;
    std::vector<double> data_;
};

/// Spatial gradient of every time slice: central differences at interior
/// nodes, one-sided at boundary faces. Returns one field per axis.
std::vector<FieldSeries> gradient(const FieldSeries& u);

}  // namespace endo
