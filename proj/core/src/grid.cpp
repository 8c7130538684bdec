#include "endo/grid.hpp"

#include <cmath>
#include <ostream>

namespace endo {

Grid::Grid(TruncatedDomain dom, std::vector<int> nx, int nt)
    : dom_(std::move(dom)), nx_(std::move(nx)), nt_(nt) {
    if (static_cast<int>(nx_.size()) != dom_.dim())
        throw InputError("Grid: nx size does not match domain dimension");
    if (nt_ < 2) throw InputError("Grid: nt must be at least 2");
    total_ = 1;
    dx_.resize(nx_.size());
    for (std::size_t i = 0; i < nx_.size(); ++i) {
        if (nx_[i] < 3) throw InputError("Grid: need at least 3 nodes per axis");
        if (!(dom_.hi[i] > dom_.lo[i])) throw InputError("Grid: empty axis range");
        dx_[i] = (dom_.hi[i] - dom_.lo[i]) / (nx_[i] - 1);
        total_ *= nx_[i];
    }
    dt_ = dom_.terminal_time / nt_;
}

long Grid::flatten(std::span<const int> idx) const {
    long node = 0, stride = 1;
    for (std::size_t a = 0; a < nx_.size(); ++a) {
        node += stride * idx[a];
        stride *= nx_[a];
    }
    return node;
}

void Grid::unflatten(long node, std::span<int> idx) const {
    for (std::size_t a = 0; a < nx_.size(); ++a) {
        idx[a] = static_cast<int>(node % nx_[a]);
        node /= nx_[a];
    }
}

void Grid::node_coords(long node, std::span<double> x) const {
    for (std::size_t a = 0; a < nx_.size(); ++a) {
        int i = static_cast<int>(node % nx_[a]);
        node /= nx_[a];
        x[a] = dom_.lo[a] + i * dx_[a];
    }
}

FieldSeries::FieldSeries(std::shared_ptr<const Grid> grid, std::string label)
    : grid_(std::move(grid)), label_(std::move(label)),
      data_(static_cast<std::size_t>(grid_->nt() + 1) *
            static_cast<std::size_t>(grid_->total_nodes()), 0.0) {}

std::span<double> FieldSeries::slice(int k) {
    return {data_.data() + index(k, 0), static_cast<std::size_t>(grid_->total_nodes())};
}

std::span<const double> FieldSeries::slice(int k) const {
    return {data_.data() + index(k, 0), static_cast<std::size_t>(grid_->total_nodes())};
}

bool FieldSeries::in_hull(double t, std::span<const double> x) const {
    const auto& dom = grid_->domain();
    if (t < -1e-12 || t > dom.terminal_time + 1e-12) return false;
    return dom.contains(x);
}

double FieldSeries::interpolate(double t, std::span<const double> x) const {
    const Grid& g = *grid_;
    const auto& dom = g.domain();
    if (!in_hull(t, x)) throw NumericError("interpolate: query outside grid hull");

    double tf = std::clamp(t / g.dt(), 0.0, static_cast<double>(g.nt()));
    int k0 = std::min(static_cast<int>(tf), g.nt() - 1);
    double wt = tf - k0;

    const int d = g.dim();
    int base[2] = {0, 0};
    double frac[2] = {0.0, 0.0};
    for (int a = 0; a < d; ++a) {
        double f = (x[static_cast<std::size_t>(a)] - dom.lo[static_cast<std::size_t>(a)]) / g.dx(a);
        f = std::clamp(f, 0.0, static_cast<double>(g.nx(a) - 1));
        int i0 = std::min(static_cast<int>(f), g.nx(a) - 2);
        base[a] = i0;
        frac[a] = f - i0;
    }

    auto corner = [&](int k, int da, int db) {
        int idx[2] = {base[0] + da, d > 1 ? base[1] + db : 0};
        return at(k, g.flatten(std::span<const int>(idx, static_cast<std::size_t>(d))));
    };
    auto bilinear = [&](int k) {
        if (d == 1) return (1 - frac[0]) * corner(k, 0, 0) + frac[0] * corner(k, 1, 0);
        double v00 = corner(k, 0, 0), v10 = corner(k, 1, 0);
        double v01 = corner(k, 0, 1), v11 = corner(k, 1, 1);
        return (1 - frac[0]) * (1 - frac[1]) * v00 + frac[0] * (1 - frac[1]) * v10 +
               (1 - frac[0]) * frac[1] * v01 + frac[0] * frac[1] * v11;
    };
    if (d > 2) throw NumericError("interpolate: only d <= 2 grids are supported");
    return (1 - wt) * bilinear(k0) + wt * bilinear(k0 + 1);
}

void FieldSeries::check_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) throw NumericError("field '" + label_ + "' has non-finite values");
}

void FieldSeries::write_csv(std::ostream& os) const {
    const Grid& g = *grid_;
    const int d = g.dim();
    os << "t,x1";
    if (d > 1) os << ",x2";
    os << ",value\n";
    os.precision(17);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int k = 0; k <= g.nt(); ++k) {
        for (long node = 0; node < g.total_nodes(); ++node) {
            g.node_coords(node, x);
            os << g.time(k) << ',' << x[0];
            if (d > 1) os << ',' << x[1];
            os << ',' << at(k, node) << '\n';
        }
    }
}

std::vector<FieldSeries> gradient(const FieldSeries& u) {
    const Grid& g = u.grid();
    const int d = g.dim();
    std::vector<FieldSeries> out;
    out.reserve(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a)
        out.emplace_back(u.grid_ptr(), u.label() + "_d" + std::to_string(a + 1));

    std::vector<int> idx(static_cast<std::size_t>(d));
    for (int k = 0; k <= g.nt(); ++k) {
        for (long node = 0; node < g.total_nodes(); ++node) {
            g.unflatten(node, idx);
            for (int a = 0; a < d; ++a) {
                long stride = 1;
                for (int b = 0; b < a; ++b) stride *= g.nx(b);
                int i = idx[static_cast<std::size_t>(a)];
                double dxa = g.dx(a);
                double v;
                if (i == 0) {
                    v = (u.at(k, node + stride) - u.at(k, node)) / dxa;
                } else if (i == g.nx(a) - 1) {
                    v = (u.at(k, node) - u.at(k, node - stride)) / dxa;
                } else {
                    v = (u.at(k, node + stride) - u.at(k, node - stride)) / (2.0 * dxa);
                }
                out[static_cast<std::size_t>(a)].at(k, node) = v;
            }
        }
    }
    return out;
}

}  // namespace endo
