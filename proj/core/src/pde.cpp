#include "endo/pde.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "endo/linalg.hpp"

namespace endo::pde {

GeneratorSpec generator(const DiffusionModel& m, ScalarFunc c) {
    GeneratorSpec g;
    g.dim = m.dim();
    g.factor_half = true;
    g.a = [&m](double t, std::span<const double> x, std::span<double> out) { m.eval_a(t, x, out); };
    g.b = [&m](double t, std::span<const double> x, std::span<double> out) { m.eval_b(t, x, out); };
    g.c = std::move(c);
    return g;
}

ScalarFunc to_func(const expr::Expression& e, int dim) {
    auto shared = std::make_shared<expr::Expression>(e);
    return [shared, dim](double t, std::span<const double> x) {
        double buf[9];
        buf[0] = t;
        for (int i = 0; i < dim; ++i) buf[i + 1] = x[static_cast<std::size_t>(i)];
        return shared->eval(std::span<const double>(buf, static_cast<std::size_t>(dim + 1)));
    };
}

SpatialFunc to_spatial(const expr::Expression& e, int dim) {
    auto shared = std::make_shared<expr::Expression>(e);
    return [shared, dim](std::span<const double> x) {
        double buf[9];
        buf[0] = 1.0;  // terminal data may reference t; it is pinned to the horizon
        for (int i = 0; i < dim; ++i) buf[i + 1] = x[static_cast<std::size_t>(i)];
        return shared->eval(std::span<const double>(buf, static_cast<std::size_t>(dim + 1)));
    };
}

namespace {

// Ghost-node resolution for the zero-second-normal-derivative boundary:
// an index one step outside a face maps to the linear extrapolation
// 2*u(face) - u(inner neighbour).
struct Resolved {
    int n = 0;
    int idx[2];
    double w[2];
};

Resolved resolve_axis(int i, int n_axis) {
    Resolved r;
    if (i >= 0 && i < n_axis) {
        r.n = 1;
        r.idx[0] = i;
        r.w[0] = 1.0;
    } else if (i == -1) {
        r.n = 2;
        r.idx[0] = 0; r.w[0] = 2.0;
        r.idx[1] = 1; r.w[1] = -1.0;
    } else if (i == n_axis) {
        r.n = 2;
        r.idx[0] = n_axis - 1; r.w[0] = 2.0;
        r.idx[1] = n_axis - 2; r.w[1] = -1.0;
    } else {
        throw NumericError("pde: stencil reaches more than one node outside the domain");
    }
    return r;
}

// One operator row: column indices and weights of A(t) at a node.
struct Row {
    int n = 0;
    int col[12];
    double w[12];

    void add(int c, double v) {
        for (int k = 0; k < n; ++k)
            if (col[k] == c) { w[k] += v; return; }
        col[n] = c;
        w[n++] = v;
    }
};

class Stepper {
public:
    Stepper(const GeneratorSpec& gen, std::shared_ptr<const Grid> grid)
        : gen_(gen), grid_(std::move(grid)), d_(gen.dim) {
        const Grid& g = *grid_;
        if (d_ != g.dim()) throw InputError("pde: generator dimension does not match grid");
        if (d_ < 1 || d_ > 2)
            throw InputError("pde: dense grids support d in {1, 2}; higher dimensions are "
                             "Monte Carlo territory");
        n_ = g.total_nodes();
        // Band the linear system along the shorter axis.
        if (d_ == 2 && g.nx(0) > g.nx(1)) permute_ = true;
        half_ = d_ == 1 ? 1 : (permute_ ? g.nx(1) : g.nx(0)) + 1;
        band_ = std::make_unique<linalg::BandMatrix>(static_cast<int>(n_), half_);
        rows_lo_.resize(static_cast<std::size_t>(n_));
        rows_hi_.resize(static_cast<std::size_t>(n_));
    }

    long nodes() const { return n_; }

    int band_index(long node) const {
        if (!permute_) return static_cast<int>(node);
        const Grid& g = *grid_;
        int i0 = static_cast<int>(node % g.nx(0));
        int i1 = static_cast<int>(node / g.nx(0));
        return i1 + g.nx(1) * i0;
    }

    // Builds operator rows of A(t) into `rows`.
    void build(double t, std::vector<Row>& rows) {
        const Grid& g = *grid_;
        const double fac = gen_.factor_half ? 0.5 : 1.0;
        std::vector<double> x(static_cast<std::size_t>(d_));
        std::vector<double> a(static_cast<std::size_t>(d_ * d_));
        std::vector<double> b(static_cast<std::size_t>(d_));
        int idx[2] = {0, 0};

        for (long node = 0; node < n_; ++node) {
            g.node_coords(node, x);
            gen_.a(t, x, a);
            gen_.b(t, x, b);
            double cval = gen_.c ? gen_.c(t, x) : 0.0;

            Row& row = rows[static_cast<std::size_t>(node)];
            row.n = 0;
            idx[0] = static_cast<int>(node % g.nx(0));
            idx[1] = d_ == 2 ? static_cast<int>(node / g.nx(0)) : 0;

            auto add_logical = [&](int di, int dj, double wgt) {
                if (wgt == 0.0) return;
                Resolved rx = resolve_axis(idx[0] + di, g.nx(0));
                if (d_ == 1) {
                    for (int p = 0; p < rx.n; ++p) row.add(rx.idx[p], wgt * rx.w[p]);
                    return;
                }
                Resolved ry = resolve_axis(idx[1] + dj, g.nx(1));
                for (int p = 0; p < rx.n; ++p)
                    for (int q = 0; q < ry.n; ++q)
                        row.add(rx.idx[p] + g.nx(0) * ry.idx[q], wgt * rx.w[p] * ry.w[q]);
            };

            // Diffusion along each axis.
            for (int ax = 0; ax < d_; ++ax) {
                double coeff = fac * a[static_cast<std::size_t>(ax * d_ + ax)] / (g.dx(ax) * g.dx(ax));
                int di = ax == 0 ? 1 : 0, dj = ax == 1 ? 1 : 0;
                add_logical(di, dj, coeff);
                add_logical(-di, -dj, coeff);
                add_logical(0, 0, -2.0 * coeff);
            }
            // Cross term (standard 4-point stencil).
            if (d_ == 2) {
                double axy = fac * (a[1] + a[2]);
                if (axy != 0.0) {
                    double coeff = axy / (4.0 * g.dx(0) * g.dx(1));
                    add_logical(1, 1, coeff);
                    add_logical(-1, -1, coeff);
                    add_logical(1, -1, -coeff);
                    add_logical(-1, 1, -coeff);
                }
            }
            // Drift, central differences.
            for (int ax = 0; ax < d_; ++ax) {
                double coeff = b[static_cast<std::size_t>(ax)] / (2.0 * g.dx(ax));
                int di = ax == 0 ? 1 : 0, dj = ax == 1 ? 1 : 0;
                add_logical(di, dj, coeff);
                add_logical(-di, -dj, -coeff);
            }
            if (cval != 0.0) add_logical(0, 0, cval);
        }
    }

    // y = A u for assembled rows.
    void apply(const std::vector<Row>& rows, std::span<const double> u, std::span<double> y) const {
        for (long node = 0; node < n_; ++node) {
            const Row& r = rows[static_cast<std::size_t>(node)];
            double acc = 0.0;
            for (int k = 0; k < r.n; ++k)
                acc += r.w[k] * u[static_cast<std::size_t>(r.col[k])];
            y[static_cast<std::size_t>(node)] = acc;
        }
    }

    // Solves (I - w A) out = rhs with A given by `rows`.
    void implicit_solve(const std::vector<Row>& rows, double w, std::span<const double> rhs,
                        std::span<double> out) {
        band_->clear();
        for (long node = 0; node < n_; ++node) {
            const Row& r = rows[static_cast<std::size_t>(node)];
            int bi = band_index(node);
            band_->add(bi, bi, 1.0);
            for (int k = 0; k < r.n; ++k)
                band_->add(bi, band_index(r.col[k]), -w * r.w[k]);
        }
        band_->factor();
        std::vector<double> tmp(static_cast<std::size_t>(n_));
        for (long node = 0; node < n_; ++node)
            tmp[static_cast<std::size_t>(band_index(node))] = rhs[static_cast<std::size_t>(node)];
        band_->solve(tmp);
        for (long node = 0; node < n_; ++node)
            out[static_cast<std::size_t>(node)] = tmp[static_cast<std::size_t>(band_index(node))];
    }

    std::vector<Row> rows_lo_, rows_hi_;

private:
    const GeneratorSpec& gen_;
    std::shared_ptr<const Grid> grid_;
    int d_;
    long n_;
    bool permute_ = false;
    int half_;
    std::unique_ptr<linalg::BandMatrix> band_;
};

// src slice at arbitrary time (the u-factor is interpolated linearly
// between its stored slices).
void eval_source(const SourceSpec& src, const Grid& g, double t, std::span<double> out) {
    const long n = g.total_nodes();
    if (!src.f && !src.u_factor) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    std::vector<double> x(static_cast<std::size_t>(g.dim()));
    double tf = std::clamp(t / g.dt(), 0.0, static_cast<double>(g.nt()));
    int k0 = std::min(static_cast<int>(tf), g.nt() - 1);
    double wt = tf - k0;
    for (long node = 0; node < n; ++node) {
        g.node_coords(node, x);
        double v = src.f ? src.f(t, x) : 1.0;
        if (src.u_factor)
            v *= (1.0 - wt) * src.u_factor->at(k0, node) + wt * src.u_factor->at(k0 + 1, node);
        out[static_cast<std::size_t>(node)] = v;
    }
}

enum class Direction { Backward, Forward };

FieldSeries march(const GeneratorSpec& gen, const SourceSpec& src, const SpatialFunc& data,
                  std::shared_ptr<const Grid> grid, const std::string& label, SolveOptions opts,
                  Direction dir) {
    Stepper st(gen, grid);
    const Grid& g = *grid;
    const long n = g.total_nodes();
    const double dt = g.dt();
    FieldSeries u(grid, label);

    // Anchor slice.
    {
        std::vector<double> x(static_cast<std::size_t>(g.dim()));
        int k_anchor = dir == Direction::Backward ? g.nt() : 0;
        auto s = u.slice(k_anchor);
        for (long node = 0; node < n; ++node) {
            g.node_coords(node, x);
            s[static_cast<std::size_t>(node)] = data(x);
        }
    }

    // For the backward problem du/dt + Au + f = 0 the theta step from slice
    // `from` (time t1) to `to` (time t0 < t1) solves
    //   (I - theta dt A(t0)) u0 = u1 + dt (1-theta)(A(t1) u1 + f(t1)) + dt theta f(t0).
    // The forward problem du/dt = Au + f marches with the same algebra under
    // the time change, stepping t0 -> t1 with the roles of the slices swapped.
    std::vector<double> rhs(static_cast<std::size_t>(n));
    std::vector<double> work(static_cast<std::size_t>(n));
    std::vector<double> srcbuf(static_cast<std::size_t>(n));

    auto theta_step = [&](std::span<const double> from, std::span<double> to, double t_from,
                          double t_to, double h, double theta, bool have_hi_rows) {
        if (theta < 1.0 && !have_hi_rows) st.build(t_from, st.rows_hi_);
        std::copy(from.begin(), from.end(), rhs.begin());
        if (theta < 1.0) {
            st.apply(st.rows_hi_, from, work);
            eval_source(src, g, t_from, srcbuf);
            for (long i = 0; i < n; ++i)
                rhs[static_cast<std::size_t>(i)] += h * (1.0 - theta) *
                    (work[static_cast<std::size_t>(i)] + srcbuf[static_cast<std::size_t>(i)]);
        }
        if (src.f || src.u_factor) {
            eval_source(src, g, t_to, srcbuf);
            for (long i = 0; i < n; ++i)
                rhs[static_cast<std::size_t>(i)] += h * theta * srcbuf[static_cast<std::size_t>(i)];
        }
        st.build(t_to, st.rows_lo_);
        st.implicit_solve(st.rows_lo_, h * theta, rhs, to);
        std::swap(st.rows_lo_, st.rows_hi_);  // target rows become source rows of the next step
    };

    int nsteps = g.nt();
    std::vector<double> half_slice(static_cast<std::size_t>(n));
    for (int s = 0; s < nsteps; ++s) {
        int k_from = dir == Direction::Backward ? g.nt() - s : s;
        int k_to = dir == Direction::Backward ? k_from - 1 : k_from + 1;
        double t_from = g.time(k_from);
        double t_to = g.time(k_to);
        bool first = s == 0;
        if (first && opts.rannacher_half_steps > 0) {
            // Implicit-Euler half-steps damp the oscillations Crank-Nicolson
            // rings with on kinked terminal data.
            int m = opts.rannacher_half_steps;
            double h = dt / m;
            std::vector<double> cur(u.slice(k_from).begin(), u.slice(k_from).end());
            for (int q = 1; q <= m; ++q) {
                double tq_prev = t_from + (t_to - t_from) * (q - 1) / m;
                double tq = t_from + (t_to - t_from) * q / m;
                theta_step(cur, half_slice, tq_prev, tq, h, 1.0, false);
                cur = half_slice;
            }
            std::copy(cur.begin(), cur.end(), u.slice(k_to).begin());
            // Rows for t_to are in rows_hi_ already (last solve target).
        } else {
            theta_step(u.slice(k_from), u.slice(k_to), t_from, t_to, dt, opts.theta, !first);
        }
    }

    u.check_finite();
    return u;
}

}  // namespace

FieldSeries solve_backward(const GeneratorSpec& gen, const SourceSpec& src,
                           const SpatialFunc& terminal, std::shared_ptr<const Grid> grid,
                           const std::string& label, SolveOptions opts) {
    return march(gen, src, terminal, std::move(grid), label, opts, Direction::Backward);
}

FieldSeries solve_backward(const DiffusionModel& m, const expr::Expression* c_potential,
                           const SourceSpec& src, const expr::Expression& terminal,
                           std::shared_ptr<const Grid> grid, const std::string& label,
                           SolveOptions opts) {
    GeneratorSpec gen = generator(m, c_potential ? to_func(*c_potential, m.dim()) : ScalarFunc{});
    return solve_backward(gen, src, to_spatial(terminal, m.dim()), std::move(grid), label, opts);
}

FieldSeries solve_forward(const GeneratorSpec& gen, const SourceSpec& src,
                          const SpatialFunc& initial, std::shared_ptr<const Grid> grid,
                          const std::string& label, SolveOptions opts) {
    return march(gen, src, initial, std::move(grid), label, opts, Direction::Forward);
}

FieldSeries solve_forward(const DiffusionModel& m, const expr::Expression* c_potential,
                          const SourceSpec& src, const expr::Expression& initial,
                          std::shared_ptr<const Grid> grid, const std::string& label,
                          SolveOptions opts) {
    GeneratorSpec gen = generator(m, c_potential ? to_func(*c_potential, m.dim()) : ScalarFunc{});
    return solve_forward(gen, src, to_spatial(initial, m.dim()), std::move(grid), label, opts);
}

}  // namespace endo::pde
