#include "endo/model.hpp"

#include <algorithm>
#include <cmath>

#include "endo/linalg.hpp"

namespace endo {

namespace {
std::vector<std::string> model_vars(int d) {
    std::vector<std::string> v;
    v.reserve(static_cast<std::size_t>(d) + 1);
    v.emplace_back("t");
    for (int i = 1; i <= d; ++i) v.push_back("x" + std::to_string(i));
    return v;
}
}  // namespace

DiffusionModel::DiffusionModel(int d, std::vector<double> x0,
                               std::vector<expr::Expression> b,
                               std::vector<expr::Expression> sigma,
                               bool asserted_t_analytic)
    : d_(d), x0_(std::move(x0)), b_(std::move(b)), sigma_(std::move(sigma)),
      t_analytic_(asserted_t_analytic), vars_(model_vars(d)) {
    if (d_ < 1) throw InputError("DiffusionModel: dimension must be positive");
    if (static_cast<int>(x0_.size()) != d_) throw InputError("DiffusionModel: x0 size mismatch");
    if (static_cast<int>(b_.size()) != d_) throw InputError("DiffusionModel: need d drift expressions");
    if (static_cast<int>(sigma_.size()) != d_ * d_)
        throw InputError("DiffusionModel: need d*d volatility expressions");
}

DiffusionModel DiffusionModel::from_sources(int d, std::vector<double> x0,
                                            const std::vector<std::string>& b,
                                            const std::vector<std::string>& sigma,
                                            bool asserted_t_analytic) {
    auto vars = model_vars(d);
    std::vector<expr::Expression> be, se;
    be.reserve(b.size());
    se.reserve(sigma.size());
    for (const auto& s : b) be.push_back(expr::parse(s, vars));
    for (const auto& s : sigma) se.push_back(expr::parse(s, vars));
    return DiffusionModel(d, std::move(x0), std::move(be), std::move(se), asserted_t_analytic);
}

void DiffusionModel::eval_b(double t, std::span<const double> x, std::span<double> out) const {
    double buf[9];
    buf[0] = t;
    for (int i = 0; i < d_; ++i) buf[i + 1] = x[static_cast<std::size_t>(i)];
    std::span<const double> env(buf, static_cast<std::size_t>(d_ + 1));
    for (int i = 0; i < d_; ++i) out[static_cast<std::size_t>(i)] = b_[static_cast<std::size_t>(i)].eval(env);
}

void DiffusionModel::eval_sigma(double t, std::span<const double> x, std::span<double> out) const {
    double buf[9];
    buf[0] = t;
    for (int i = 0; i < d_; ++i) buf[i + 1] = x[static_cast<std::size_t>(i)];
    std::span<const double> env(buf, static_cast<std::size_t>(d_ + 1));
    for (int k = 0; k < d_ * d_; ++k)
        out[static_cast<std::size_t>(k)] = sigma_[static_cast<std::size_t>(k)].eval(env);
}

void DiffusionModel::eval_a(double t, std::span<const double> x, std::span<double> out) const {
    double s[64];
    eval_sigma(t, x, std::span<double>(s, static_cast<std::size_t>(d_ * d_)));
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d_; ++k) acc += s[i * d_ + k] * s[j * d_ + k];
            out[static_cast<std::size_t>(i * d_ + j)] = acc;
        }
}

PayoffSpec make_payoff(int d, const std::vector<std::string>& F,
                       const std::vector<std::string>& alpha,
                       const std::vector<std::string>& f) {
    if (F.size() != alpha.size() || F.size() != f.size())
        throw InputError("payoff: F, alpha, f must have equal length");
    if (static_cast<int>(F.size()) < d)
        throw InputError("payoff: need J >= d dividend streams");
    auto vars = model_vars(d);
    PayoffSpec p;
    p.J = static_cast<int>(F.size());
    for (const auto& s : F) p.F.push_back(expr::parse(s, vars));
    for (const auto& s : alpha) p.alpha.push_back(expr::parse(s, vars));
    for (const auto& s : f) p.f.push_back(expr::parse(s, vars));
    return p;
}

DensitySpec make_density(int d, const std::string& G, const std::string& beta) {
    auto vars = model_vars(d);
    return DensitySpec{expr::parse(G, vars), expr::parse(beta, vars)};
}

namespace {

// Deterministic sample points: a dense grid for d <= 2, a low-discrepancy
// style lattice for higher dimensions.
std::vector<std::vector<double>> sample_points(const TruncatedDomain& dom, int n_per_axis) {
    const int d = dom.dim();
    std::vector<std::vector<double>> pts;
    if (d <= 2) {
        int n0 = n_per_axis, n1 = d == 2 ? n_per_axis : 1;
        pts.reserve(static_cast<std::size_t>(n0) * n1);
        for (int i = 0; i < n0; ++i)
            for (int j = 0; j < n1; ++j) {
                std::vector<double> x(static_cast<std::size_t>(d));
                x[0] = dom.lo[0] + (dom.hi[0] - dom.lo[0]) * i / (n0 - 1);
                if (d == 2) x[1] = dom.lo[1] + (dom.hi[1] - dom.lo[1]) * j / (n1 - 1);
                pts.push_back(std::move(x));
            }
    } else {
        // Kronecker lattice with golden-ratio style increments.
        int n = n_per_axis * n_per_axis;
        pts.reserve(static_cast<std::size_t>(n));
        std::vector<double> alpha(static_cast<std::size_t>(d));
        double g = 1.32471795724474602596;  // plastic number
        double a = 1.0;
        for (int k = 0; k < d; ++k) { a /= g; alpha[static_cast<std::size_t>(k)] = a; }
        for (int i = 0; i < n; ++i) {
            std::vector<double> x(static_cast<std::size_t>(d));
            for (int k = 0; k < d; ++k) {
                double f = std::fmod(0.5 + alpha[static_cast<std::size_t>(k)] * (i + 1), 1.0);
                x[static_cast<std::size_t>(k)] =
                    dom.lo[static_cast<std::size_t>(k)] +
                    (dom.hi[static_cast<std::size_t>(k)] - dom.lo[static_cast<std::size_t>(k)]) * f;
            }
            pts.push_back(std::move(x));
        }
    }
    return pts;
}

double frobenius(std::span<const double> m) {
    double s = 0.0;
    for (double v : m) s += v * v;
    return std::sqrt(s);
}

}  // namespace

ValidationReport validate(const DiffusionModel& m, const TruncatedDomain& dom,
                          int n_samples, double min_singular_value) {
    if (n_samples < 1) throw InputError("validate: n_samples must be >= 1");
    if (dom.dim() != m.dim()) throw InputError("validate: domain dimension mismatch");

    const int d = m.dim();
    const int nt = 33;
    ValidationReport rep;
    rep.asserted_t_analytic = m.asserted_t_analytic();
    rep.min_eig_a = std::numeric_limits<double>::infinity();
    double min_sv = std::numeric_limits<double>::infinity();

    auto pts = sample_points(dom, std::max(2, n_samples));
    std::vector<double> b(static_cast<std::size_t>(d)), sig(static_cast<std::size_t>(d * d));
    std::vector<double> prev_sig;
    for (int kt = 0; kt <= nt; ++kt) {
        double t = dom.terminal_time * kt / nt;
        prev_sig.clear();
        for (const auto& x : pts) {
            m.eval_b(t, x, b);
            m.eval_sigma(t, x, sig);
            double nb = frobenius(b), ns = frobenius(sig);
            if (!std::isfinite(nb) || !std::isfinite(ns)) {
                rep.bounded_ok = false;
                continue;
            }
            rep.sup_b = std::max(rep.sup_b, nb);
            rep.sup_sigma = std::max(rep.sup_sigma, ns);

            linalg::Matrix S(d, d);
            for (int i = 0; i < d * d; ++i) S.a[static_cast<std::size_t>(i)] = sig[static_cast<std::size_t>(i)];
            double sv = linalg::smallest_singular_value(S);
            min_sv = std::min(min_sv, sv);
            rep.min_eig_a = std::min(rep.min_eig_a, sv * sv);

            // Modulus-of-continuity estimate from consecutive sample points.
            if (!prev_sig.empty()) {
                double diff = 0.0;
                for (int i = 0; i < d * d; ++i) {
                    double e = sig[static_cast<std::size_t>(i)] - prev_sig[static_cast<std::size_t>(i)];
                    diff += e * e;
                }
                rep.modulus_of_continuity = std::max(rep.modulus_of_continuity, std::sqrt(diff));
            }
            prev_sig.assign(sig.begin(), sig.end());
        }
    }

    if (!(min_sv > min_singular_value)) {
        rep.invertibility_ok = false;
        rep.warnings.push_back("sigma is numerically singular on the sampled domain");
    }
    rep.sup_sigma_inv = min_sv > 0.0 ? 1.0 / min_sv : std::numeric_limits<double>::infinity();
    if (rep.min_eig_a <= 0.0) {
        rep.invertibility_ok = false;
        rep.warnings.push_back("sigma sigma^T loses ellipticity on the sampled domain");
    }
    if (!rep.bounded_ok) rep.warnings.push_back("non-finite coefficient value on the sampled domain");
    return rep;
}

TruncatedDomain infer_domain(const DiffusionModel& m, double k_sigmas,
                             std::vector<std::string>* warnings) {
    if (k_sigmas <= 0.0) throw InputError("infer_domain: k_sigmas must be positive");
    const int d = m.dim();
    const double T = 1.0;

    // Provisional box: x0 +- max(1, k).
    TruncatedDomain prov;
    prov.lo.resize(static_cast<std::size_t>(d));
    prov.hi.resize(static_cast<std::size_t>(d));
    double half = std::max(1.0, k_sigmas);
    for (int i = 0; i < d; ++i) {
        prov.lo[static_cast<std::size_t>(i)] = m.x0()[static_cast<std::size_t>(i)] - half;
        prov.hi[static_cast<std::size_t>(i)] = m.x0()[static_cast<std::size_t>(i)] + half;
    }

    // Per-axis sups of |b_i| and sqrt(a_ii), on the full box and on the
    // inner half-box to detect growth toward the boundary.
    std::vector<double> sup_b(static_cast<std::size_t>(d), 0.0);
    std::vector<double> sup_s(static_cast<std::size_t>(d), 0.0);
    std::vector<double> sup_b_half(static_cast<std::size_t>(d), 0.0);
    std::vector<double> sup_s_half(static_cast<std::size_t>(d), 0.0);

    auto pts = sample_points(prov, 33);
    const int nt = 17;
    std::vector<double> b(static_cast<std::size_t>(d)), a(static_cast<std::size_t>(d * d));
    for (int kt = 0; kt <= nt; ++kt) {
        double t = T * kt / nt;
        for (const auto& x : pts) {
            m.eval_b(t, x, b);
            m.eval_a(t, x, a);
            bool inner = true;
            for (int i = 0; i < d; ++i)
                if (std::fabs(x[static_cast<std::size_t>(i)] - m.x0()[static_cast<std::size_t>(i)]) >
                    0.5 * half)
                    inner = false;
            for (int i = 0; i < d; ++i) {
                double bi = std::fabs(b[static_cast<std::size_t>(i)]);
                double si = std::sqrt(std::max(0.0, a[static_cast<std::size_t>(i * d + i)]));
                if (!std::isfinite(bi) || !std::isfinite(si))
                    throw NumericError("infer_domain: unbounded sampled coefficients");
                sup_b[static_cast<std::size_t>(i)] = std::max(sup_b[static_cast<std::size_t>(i)], bi);
                sup_s[static_cast<std::size_t>(i)] = std::max(sup_s[static_cast<std::size_t>(i)], si);
                if (inner) {
                    sup_b_half[static_cast<std::size_t>(i)] =
                        std::max(sup_b_half[static_cast<std::size_t>(i)], bi);
                    sup_s_half[static_cast<std::size_t>(i)] =
                        std::max(sup_s_half[static_cast<std::size_t>(i)], si);
                }
            }
        }
    }

    TruncatedDomain dom;
    dom.lo.resize(static_cast<std::size_t>(d));
    dom.hi.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        if (warnings &&
            (sup_b[static_cast<std::size_t>(i)] > 1.25 * sup_b_half[static_cast<std::size_t>(i)] + 1e-12 ||
             sup_s[static_cast<std::size_t>(i)] > 1.25 * sup_s_half[static_cast<std::size_t>(i)] + 1e-12))
            warnings->push_back("coefficient grows toward the provisional boundary on axis " +
                                std::to_string(i + 1) + "; bounds taken from the sampled sup");
        double radius = sup_b[static_cast<std::size_t>(i)] * T +
                        k_sigmas * sup_s[static_cast<std::size_t>(i)] * std::sqrt(T);
        radius = std::max(radius, 1e-8);
        dom.lo[static_cast<std::size_t>(i)] = m.x0()[static_cast<std::size_t>(i)] - radius;
        dom.hi[static_cast<std::size_t>(i)] = m.x0()[static_cast<std::size_t>(i)] + radius;
    }
    return dom;
}

}  // namespace endo
