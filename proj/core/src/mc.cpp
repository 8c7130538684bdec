#include "endo/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <ostream>
#include <thread>

#include "endo/pde.hpp"
#include "endo/rng.hpp"

namespace endo::mc {

namespace {

// Relative singular-value cutoff for the hedge least-squares solve. The
// dispersion fields carry O(dx^2) differentiation noise in directions the
// market does not actually span; inverting against it explodes the
// holdings, so the hedge treats those directions as unreachable. The rank
// diagnostic keeps its own finer default.
constexpr double kDispersionRankTol = 1e-3;

int worker_count() {
    if (const char* env = std::getenv("ENDO_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Static path partition; each worker writes disjoint slots, so the result
/// is identical for any worker count.
template <typename Fn>
void parallel_paths(long npaths, Fn&& fn) {
    int nw = std::min<long>(worker_count(), npaths);
    if (nw <= 1) {
        fn(0L, npaths);
        return;
    }
    std::vector<std::thread> pool;
    long chunk = (npaths + nw - 1) / nw;
    for (int w = 0; w < nw; ++w) {
        long lo = w * chunk;
        long hi = std::min(npaths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

PathBundle::PathBundle(int d, int nt, long npaths, std::uint64_t seed)
    : d_(d), nt_(nt), npaths_(npaths), seed_(seed),
      data_x_(static_cast<std::size_t>(npaths) * (nt + 1) * d, 0.0),
      data_dw_(static_cast<std::size_t>(npaths) * (nt + 1) * d, 0.0) {}

std::vector<double>& ProcessPanel::add(const std::string& name) {
    auto& v = series_[name];
    v.assign(static_cast<std::size_t>(npaths_) * (nt_ + 1), 0.0);
    return v;
}

std::span<const double> ProcessPanel::series(const std::string& name) const {
    auto it = series_.find(name);
    if (it == series_.end()) throw InputError("panel: no series named '" + name + "'");
    return it->second;
}

std::vector<std::string> ProcessPanel::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : series_) out.push_back(k);
    return out;
}

double ProcessPanel::excluded_fraction() const {
    if (excluded.empty()) return 0.0;
    long n = 0;
    for (char c : excluded) n += c ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(excluded.size());
}

void ProcessPanel::write_csv(std::ostream& os) const {
    os << "path,step,name,value\n";
    os.precision(17);
    for (const auto& [name, vals] : series_) {
        for (long p = 0; p < npaths_; ++p)
            for (int k = 0; k <= nt_; ++k)
                os << p << ',' << k << ',' << name << ','
                   << vals[static_cast<std::size_t>(p) * (nt_ + 1) + static_cast<std::size_t>(k)]
                   << '\n';
    }
}

PathBundle simulate(const DiffusionModel& m, int nt, long npaths, std::uint64_t seed) {
    if (nt < 1 || npaths < 1) throw InputError("simulate: nt and npaths must be positive");
    const int d = m.dim();
    PathBundle bundle(d, nt, npaths, seed);
    const double dt = bundle.dt();
    const double sqdt = std::sqrt(dt);

    parallel_paths(npaths, [&](long lo, long hi) {
        std::vector<double> b(static_cast<std::size_t>(d));
        std::vector<double> sig(static_cast<std::size_t>(d * d));
        for (long p = lo; p < hi; ++p) {
            rng::NormalStream g(seed, static_cast<std::uint64_t>(p));
            auto x0 = bundle.x(p, 0);
            for (int i = 0; i < d; ++i) x0[static_cast<std::size_t>(i)] = m.x0()[static_cast<std::size_t>(i)];
            for (int k = 0; k < nt; ++k) {
                double t = bundle.time(k);
                auto xk = bundle.x(p, k);
                auto xn = bundle.x(p, k + 1);
                auto dw = bundle.dw(p, k);
                m.eval_b(t, xk, b);
                m.eval_sigma(t, xk, sig);
                for (int i = 0; i < d; ++i) dw[static_cast<std::size_t>(i)] = sqdt * g.normal();
                for (int i = 0; i < d; ++i) {
                    double acc = xk[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)] * dt;
                    for (int j = 0; j < d; ++j)
                        acc += sig[static_cast<std::size_t>(i * d + j)] * dw[static_cast<std::size_t>(j)];
                    xn[static_cast<std::size_t>(i)] = acc;
                }
            }
        }
    });
    return bundle;
}

namespace {

/// One pass over a path accumulating the left-endpoint integrals used by
/// eqs for xi, psi, Y and R: B_k = int_0^{t_k} beta, A_k^j = int alpha^j,
/// Fsum_k^j = int_0^{t_k} e^{A} f^j.
struct PathSweep {
    const PathBundle& paths;
    const SweepCoeffs& cs;

    template <typename Visit>
    void run(long path, Visit&& visit) const {
        const int J = static_cast<int>(cs.alpha.size());
        const int nt = paths.nt();
        const double dt = paths.dt();
        std::vector<double> A(static_cast<std::size_t>(J), 0.0);
        std::vector<double> Fsum(static_cast<std::size_t>(J), 0.0);
        double B = 0.0;
        for (int k = 0; k <= nt; ++k) {
            visit(k, B, A, Fsum);
            if (k == nt) break;
            auto x = paths.x(path, k);
            double t = paths.time(k);
            B += cs.beta(t, x) * dt;
            for (int j = 0; j < J; ++j) {
                double growth = std::exp(A[static_cast<std::size_t>(j)]);
                Fsum[static_cast<std::size_t>(j)] +=
                    growth * cs.f[static_cast<std::size_t>(j)](t, x) * dt;
                A[static_cast<std::size_t>(j)] += cs.alpha[static_cast<std::size_t>(j)](t, x) * dt;
            }
        }
    }
};

double eval_terminal(const expr::Expression& e, std::span<const double> x, int d) {
    double env[9];
    env[0] = 1.0;
    for (int i = 0; i < d; ++i) env[i + 1] = x[static_cast<std::size_t>(i)];
    return e.eval(std::span<const double>(env, static_cast<std::size_t>(d + 1)));
}

}  // namespace

SweepCoeffs SweepCoeffs::from(const PayoffSpec& p, const DensitySpec& dsp, int dim) {
    SweepCoeffs cs;
    for (const auto& a : p.alpha) cs.alpha.push_back(pde::to_func(a, dim));
    for (const auto& f : p.f) cs.f.push_back(pde::to_func(f, dim));
    cs.beta = pde::to_func(dsp.beta, dim);
    return cs;
}

ProcessPanel evaluate_xi_psi(const PathBundle& paths, const PayoffSpec& p, const DensitySpec& dsp) {
    const int J = p.J;
    const int nt = paths.nt();
    ProcessPanel panel(paths.npaths(), nt);
    auto& xi = panel.add("xi");
    std::vector<std::vector<double>*> psi;
    for (int j = 1; j <= J; ++j) psi.push_back(&panel.add("psi" + std::to_string(j)));

    SweepCoeffs cs = SweepCoeffs::from(p, dsp, paths.dim());
    PathSweep sweep{paths, cs};
    parallel_paths(paths.npaths(), [&](long lo, long hi) {
        for (long path = lo; path < hi; ++path) {
            sweep.run(path, [&](int k, double B, const std::vector<double>& A,
                                const std::vector<double>& Fsum) {
                if (k != nt) return;
                auto xT = paths.x(path, nt);
                double xi_v = eval_terminal(dsp.G, xT, paths.dim()) * std::exp(B);
                std::size_t slot = static_cast<std::size_t>(path) * (nt + 1) + static_cast<std::size_t>(nt);
                xi[slot] = xi_v;
                for (int j = 0; j < J; ++j) {
                    double psi_v = eval_terminal(p.F[static_cast<std::size_t>(j)], xT, paths.dim()) *
                                       std::exp(A[static_cast<std::size_t>(j)]) +
                                   Fsum[static_cast<std::size_t>(j)];
                    (*psi[static_cast<std::size_t>(j)])[slot] = psi_v;
                }
            });
            // Broadcast the terminal scalars across steps so slicing works.
            std::size_t base = static_cast<std::size_t>(path) * (nt + 1);
            for (int k = 0; k < nt; ++k) {
                xi[base + static_cast<std::size_t>(k)] = xi[base + static_cast<std::size_t>(nt)];
                for (int j = 0; j < J; ++j)
                    (*psi[static_cast<std::size_t>(j)])[base + static_cast<std::size_t>(k)] =
                        (*psi[static_cast<std::size_t>(j)])[base + static_cast<std::size_t>(nt)];
            }
        }
    });
    return panel;
}

ProcessPanel pathwise_yrs(const PathBundle& paths, const FieldSeries& u,
                          const std::vector<FieldSeries>& v, const PayoffSpec& p,
                          const DensitySpec& dsp, double max_escape_fraction,
                          const SweepCoeffs* coeffs) {
    const int J = p.J;
    if (static_cast<int>(v.size()) != J) throw InputError("pathwise_yrs: need one field per payoff");
    const int nt = paths.nt();
    ProcessPanel panel(paths.npaths(), nt);
    panel.excluded.assign(static_cast<std::size_t>(paths.npaths()), 0);

    auto& Y = panel.add("Y");
    auto& xi = panel.add("xi");
    std::vector<std::vector<double>*> R, S, psi;
    for (int j = 1; j <= J; ++j) {
        R.push_back(&panel.add("R" + std::to_string(j)));
        S.push_back(&panel.add("S" + std::to_string(j)));
        psi.push_back(&panel.add("psi" + std::to_string(j)));
    }

    SweepCoeffs own;
    if (!coeffs) {
        own = SweepCoeffs::from(p, dsp, paths.dim());
        coeffs = &own;
    }
    PathSweep sweep{paths, *coeffs};
    parallel_paths(paths.npaths(), [&](long lo, long hi) {
        for (long path = lo; path < hi; ++path) {
            // Hull check first; escaped paths carry zeros and are excluded.
            bool inside = true;
            for (int k = 0; k <= nt && inside; ++k)
                if (!u.in_hull(paths.time(k), paths.x(path, k))) inside = false;
            if (!inside) {
                panel.excluded[static_cast<std::size_t>(path)] = 1;
                continue;
            }
            std::size_t base = static_cast<std::size_t>(path) * (nt + 1);
            sweep.run(path, [&](int k, double B, const std::vector<double>& A,
                                const std::vector<double>& Fsum) {
                double t = paths.time(k);
                auto x = paths.x(path, k);
                double uval = u.interpolate(t, x);
                double Yk = std::exp(B) * uval;
                Y[base + static_cast<std::size_t>(k)] = Yk;
                for (int j = 0; j < J; ++j) {
                    double vval = v[static_cast<std::size_t>(j)].interpolate(t, x);
                    double Rk = std::exp(A[static_cast<std::size_t>(j)] + B) * vval +
                                Yk * Fsum[static_cast<std::size_t>(j)];
                    (*R[static_cast<std::size_t>(j)])[base + static_cast<std::size_t>(k)] = Rk;
                    (*S[static_cast<std::size_t>(j)])[base + static_cast<std::size_t>(k)] =
                        Yk != 0.0 ? Rk / Yk : 0.0;
                }
                if (k == nt) {
                    auto xT = paths.x(path, nt);
                    xi[base + static_cast<std::size_t>(nt)] =
                        eval_terminal(dsp.G, xT, paths.dim()) * std::exp(B);
                    for (int j = 0; j < J; ++j) {
                        (*psi[static_cast<std::size_t>(j)])[base + static_cast<std::size_t>(nt)] =
                            eval_terminal(p.F[static_cast<std::size_t>(j)], xT, paths.dim()) *
                                std::exp(A[static_cast<std::size_t>(j)]) +
                            Fsum[static_cast<std::size_t>(j)];
                    }
                }
            });
        }
    });

    double esc = panel.excluded_fraction();
    if (esc > max_escape_fraction)
        throw NumericError("pathwise_yrs: " + std::to_string(esc * 100.0) +
                           "% of paths escaped the grid; enlarge the truncated domain");
    return panel;
}

MartingaleReport martingale_test(const ProcessPanel& panel, const std::string& name,
                                 const std::vector<double>& slice_times) {
    if (slice_times.size() < 2) throw InputError("martingale_test: need at least two slice times");
    auto vals = panel.series(name);
    const int nt = panel.nt();
    MartingaleReport rep;

    for (double t : slice_times) {
        int k = std::clamp(static_cast<int>(std::lround(t * nt)), 0, nt);
        double sum = 0.0, sum2 = 0.0;
        long n = 0;
        for (long p = 0; p < panel.npaths(); ++p) {
            if (!panel.excluded.empty() && panel.excluded[static_cast<std::size_t>(p)]) continue;
            double v = vals[static_cast<std::size_t>(p) * (nt + 1) + static_cast<std::size_t>(k)];
            sum += v;
            sum2 += v * v;
            ++n;
        }
        double mean = n > 0 ? sum / n : 0.0;
        double var = n > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1)) : 0.0;
        rep.slices.push_back({panel.time(k), mean, std::sqrt(var / std::max<long>(n, 1))});
    }

    double mean0 = rep.slices.front().mean;
    for (std::size_t i = 1; i < rep.slices.size(); ++i) {
        double diff = std::fabs(rep.slices[i].mean - mean0);
        double se = rep.slices[i].std_error;
        double z = se > 0.0 ? diff / se : (diff > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
        rep.worst_z = std::max(rep.worst_z, z);
        if (z > 4.0) rep.drift_detected = true;
    }
    return rep;
}

void append_girsanov(ProcessPanel& panel, const PathBundle& paths,
                     const std::vector<ScalarFunc>& gamma, const std::string& name) {
    const int d = paths.dim();
    if (static_cast<int>(gamma.size()) != d)
        throw InputError("girsanov_weights: need d gamma components");
    const int nt = paths.nt();
    const double dt = paths.dt();
    auto& Z = panel.add(name);

    parallel_paths(paths.npaths(), [&](long lo, long hi) {
        std::vector<double> gv(static_cast<std::size_t>(d));
        for (long p = lo; p < hi; ++p) {
            std::size_t base = static_cast<std::size_t>(p) * (nt + 1);
            double logz = 0.0;
            Z[base] = 1.0;
            for (int k = 0; k < nt; ++k) {
                double t = paths.time(k);
                auto x = paths.x(p, k);
                auto dw = paths.dw(p, k);
                double g2 = 0.0;
                for (int i = 0; i < d; ++i) {
                    gv[static_cast<std::size_t>(i)] = gamma[static_cast<std::size_t>(i)](t, x);
                    g2 += gv[static_cast<std::size_t>(i)] * gv[static_cast<std::size_t>(i)];
                    logz += gv[static_cast<std::size_t>(i)] * dw[static_cast<std::size_t>(i)];
                }
                logz -= 0.5 * g2 * dt;
                Z[base + static_cast<std::size_t>(k) + 1] = std::exp(logz);
            }
        }
    });
}

ProcessPanel girsanov_weights(const PathBundle& paths, const std::vector<expr::Expression>& gamma) {
    ProcessPanel panel(paths.npaths(), paths.nt());
    std::vector<ScalarFunc> fns;
    for (const auto& g : gamma) fns.push_back(pde::to_func(g, paths.dim()));
    append_girsanov(panel, paths, fns);
    return panel;
}

FeynmanKacReport feynman_kac_check(const DiffusionModel& m, const PayoffSpec& p,
                                   const DensitySpec& dsp, const FieldSeries& u,
                                   const std::vector<FieldSeries>& v, const PathBundle& paths) {
    auto panel = evaluate_xi_psi(paths, p, dsp);
    const int nt = paths.nt();
    const long n = paths.npaths();
    FeynmanKacReport rep;
    rep.u00 = u.interpolate(0.0, m.x0());

    auto stats = [&](std::span<const double> vals, double ref, double& mean_out, double& se_out) {
        double sum = 0.0, sum2 = 0.0;
        for (long path = 0; path < n; ++path) {
            double x = vals[static_cast<std::size_t>(path) * (nt + 1) + static_cast<std::size_t>(nt)];
            sum += x;
            sum2 += x * x;
        }
        mean_out = sum / n;
        double var = n > 1 ? std::max(0.0, (sum2 - n * mean_out * mean_out) / (n - 1)) : 0.0;
        se_out = std::sqrt(var / n);
        return se_out > 0.0 ? (mean_out - ref) / se_out : 0.0;
    };

    rep.z_xi = stats(panel.series("xi"), rep.u00, rep.mc_xi_mean, rep.mc_xi_se);
    rep.worst_z = std::fabs(rep.z_xi);

    auto xi = panel.series("xi");
    for (int j = 0; j < p.J; ++j) {
        double v00 = v[static_cast<std::size_t>(j)].interpolate(0.0, m.x0());
        auto psi = panel.series("psi" + std::to_string(j + 1));
        std::vector<double> prod(static_cast<std::size_t>(n) * (nt + 1), 0.0);
        for (long path = 0; path < n; ++path) {
            std::size_t slot = static_cast<std::size_t>(path) * (nt + 1) + static_cast<std::size_t>(nt);
            prod[slot] = xi[slot] * psi[slot];
        }
        double mean, se;
        double z = stats(prod, v00, mean, se);
        rep.v00.push_back(v00);
        rep.mc_xipsi_mean.push_back(mean);
        rep.mc_xipsi_se.push_back(se);
        rep.z_xipsi.push_back(z);
        rep.worst_z = std::max(rep.worst_z, std::fabs(z));
    }
    return rep;
}

HedgeReport replication_backtest(const PathBundle& paths, const FieldSeries& u,
                                 const std::vector<FieldSeries>& v, const PayoffSpec& p,
                                 const DensitySpec& dsp, int claim_index, const ClaimSpec* claim,
                                 const FieldSeries* claim_field, const DiffusionModel& m,
                                 double t_end) {
    const int J = p.J;
    const int d = paths.dim();
    const int nt = paths.nt();
    const double dt = paths.dt();
    const int k_end = std::clamp(static_cast<int>(std::lround(t_end * nt)), 1, nt);

    if (claim_index < 0 && (claim == nullptr || claim_field == nullptr))
        throw InputError("replication_backtest: custom claims need a spec and a solved field");

    auto panel = pathwise_yrs(paths, u, v, p, dsp);
    completeness::PathDispersion disp(u, v, m, &p);

    // Claim dispersion comes through the same volatility-loading formula
    // with the claim's own field. For a traded asset it is row j of the
    // asset dispersion.
    std::vector<FieldSeries> claim_fields;
    std::unique_ptr<completeness::PathDispersion> claim_disp;
    if (claim_index < 0) {
        claim_fields.push_back(*claim_field);
        claim_disp = std::make_unique<completeness::PathDispersion>(u, claim_fields, m, nullptr);
    }

    HedgeReport rep;
    // Initial claim value S_c(0) = v_c(0,x0)/u(0,x0).
    double u00 = u.interpolate(0.0, m.x0());
    double vc00 = claim_index >= 0
                      ? v[static_cast<std::size_t>(claim_index)].interpolate(0.0, m.x0())
                      : claim_field->interpolate(0.0, m.x0());
    rep.initial_value = vc00 / u00;

    double env[9];
    double sum2 = 0.0, sumabs = 0.0;
    long used = 0, degenerate = 0;

    std::vector<double> A(static_cast<std::size_t>(J), 0.0);
    std::vector<double> crow(static_cast<std::size_t>(d), 0.0);
    for (long path = 0; path < paths.npaths(); ++path) {
        if (!panel.excluded.empty() && panel.excluded[static_cast<std::size_t>(path)]) continue;
        std::size_t base = static_cast<std::size_t>(path) * (nt + 1);

        double V = rep.initial_value;
        std::fill(A.begin(), A.end(), 0.0);
        double Ac = 0.0;  // int alpha_c for the custom claim
        double B = 0.0;   // int beta (claim S_c needs Y)
        for (int k = 0; k < k_end; ++k) {
            double t = paths.time(k);
            auto x = paths.x(path, k);

            linalg::Matrix D = disp.price_dispersion(t, x, A);
            std::vector<double> H(static_cast<std::size_t>(J), 0.0);
            if (claim_index >= 0) {
                for (int j = 0; j < J; ++j) H[static_cast<std::size_t>(j)] = j == claim_index ? 1.0 : 0.0;
            } else {
                double ac_arr[1] = {Ac};
                linalg::Matrix C = claim_disp->price_dispersion(t, x, std::span<const double>(ac_arr, 1));
                for (int i = 0; i < d; ++i) crow[static_cast<std::size_t>(i)] = C(0, i);
                auto sv = linalg::singular_values(D);
                if (sv.empty() || sv.front() == 0.0 || sv.back() / sv.front() < kDispersionRankTol)
                    ++degenerate;
                // Truncating at the rank threshold projects out directions
                // the market cannot span instead of amplifying grid noise.
                H = linalg::lstsq_minnorm(linalg::transpose(D), crow, kDispersionRankTol);
            }

            for (int j = 0; j < J; ++j) {
                auto S = panel.series("S" + std::to_string(j + 1));
                V += H[static_cast<std::size_t>(j)] *
                     (S[base + static_cast<std::size_t>(k) + 1] - S[base + static_cast<std::size_t>(k)]);
            }

            // Advance the alpha/beta integrals (left-endpoint).
            env[0] = t;
            for (int i = 0; i < d; ++i) env[i + 1] = x[static_cast<std::size_t>(i)];
            std::span<const double> e(env, static_cast<std::size_t>(d + 1));
            for (int j = 0; j < J; ++j) A[static_cast<std::size_t>(j)] += p.alpha[static_cast<std::size_t>(j)].eval(e) * dt;
            if (claim_index < 0) Ac += claim->alpha.eval(e) * dt;
            B += dsp.beta.eval(e) * dt;
        }

        // Claim price at t_end along this path.
        double target;
        if (claim_index >= 0) {
            auto S = panel.series("S" + std::to_string(claim_index + 1));
            target = S[base + static_cast<std::size_t>(k_end)];
        } else {
            double t = paths.time(k_end);
            auto x = paths.x(path, k_end);
            double uval = u.interpolate(t, x);
            double Yk = std::exp(B) * uval;
            // Running int e^{A_c} f_c along the path.
            double Fc = 0.0, Ac2 = 0.0;
            for (int k = 0; k < k_end; ++k) {
                env[0] = paths.time(k);
                auto xk = paths.x(path, k);
                for (int i = 0; i < d; ++i) env[i + 1] = xk[static_cast<std::size_t>(i)];
                std::span<const double> e(env, static_cast<std::size_t>(d + 1));
                Fc += std::exp(Ac2) * claim->f.eval(e) * dt;
                Ac2 += claim->alpha.eval(e) * dt;
            }
            double Rc = std::exp(Ac2 + B) * claim_field->interpolate(t, x) + Yk * Fc;
            target = Rc / Yk;
        }

        double err = V - target;
        sum2 += err * err;
        sumabs += std::fabs(err);
        ++used;
    }

    rep.rms_error = used > 0 ? std::sqrt(sum2 / used) : 0.0;
    rep.mean_abs_error = used > 0 ? sumabs / used : 0.0;
    rep.degenerate_steps = degenerate;
    rep.paths_used = used;
    rep.escaped_fraction = panel.excluded_fraction();
    return rep;
}

}  // namespace endo::mc
