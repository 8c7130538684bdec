#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "endo/expr.hpp"
#include "endo/grid.hpp"

namespace endo {

/// Scalar coefficient of (t, x); the evaluation buffer is [t, x1, .., xd].
using ScalarFunc = std::function<double(double t, std::span<const double> x)>;

/// Diffusion dX = b(t,X) dt + sigma(t,X) dW on the unit horizon.
/// Coefficient expressions are parsed against the variables {t, x1, .., xd}.
class DiffusionModel {
public:
    DiffusionModel(int d, std::vector<double> x0,
                   std::vector<expr::Expression> b,
                   std::vector<expr::Expression> sigma,  // row-major d x d
                   bool asserted_t_analytic = true);

    /// Parses coefficient source strings against {t, x1..xd}.
    static DiffusionModel from_sources(int d, std::vector<double> x0,
                                       const std::vector<std::string>& b,
                                       const std::vector<std::string>& sigma,
                                       bool asserted_t_analytic = true);

    int dim() const { return d_; }
    const std::vector<double>& x0() const { return x0_; }
    bool asserted_t_analytic() const { return t_analytic_; }
    const std::vector<std::string>& coeff_vars() const { return vars_; }

    const expr::Expression& b(int i) const { return b_[static_cast<std::size_t>(i)]; }
    const expr::Expression& sigma(int i, int j) const {
        return sigma_[static_cast<std::size_t>(i * d_ + j)];
    }

    /// Evaluates b into `out` (size d); buffer layout [t, x...] is built here.
    void eval_b(double t, std::span<const double> x, std::span<double> out) const;
    /// Evaluates sigma row-major into `out` (size d*d).
    void eval_sigma(double t, std::span<const double> x, std::span<double> out) const;
    /// Covariation a = sigma sigma^T, row-major.
    void eval_a(double t, std::span<const double> x, std::span<double> out) const;

private:
    int d_;
    std::vector<double> x0_;
    std::vector<expr::Expression> b_, sigma_;
    bool t_analytic_;
    std::vector<std::string> vars_;
};

/// Dividend structure: psi^j = F^j(X_1) e^{int alpha^j} + int e^{int alpha^j} f^j dt.
struct PayoffSpec {
    int J = 0;
    std::vector<expr::Expression> F;      // of x only
    std::vector<expr::Expression> alpha;  // of (t,x)
    std::vector<expr::Expression> f;      // of (t,x)
};

/// State-price inputs: xi = G(X_1) e^{int beta}.
struct DensitySpec {
    expr::Expression G;     // of x, positive
    expr::Expression beta;  // of (t,x)
};

PayoffSpec make_payoff(int d, const std::vector<std::string>& F,
                       const std::vector<std::string>& alpha,
                       const std::vector<std::string>& f);
DensitySpec make_density(int d, const std::string& G, const std::string& beta);

struct ValidationReport {
    double sup_b = 0.0;
    double sup_sigma = 0.0;
    double sup_sigma_inv = 0.0;   // 1 / min singular value of sigma
    double min_eig_a = 0.0;       // smallest eigenvalue of sigma sigma^T seen
    double modulus_of_continuity = 0.0;  // max |sigma(t,x)-sigma(t,y)| over adjacent samples
    bool invertibility_ok = true;
    bool bounded_ok = true;
    bool asserted_t_analytic = true;
    std::vector<std::string> warnings;

    bool pass() const { return invertibility_ok && bounded_ok; }
};

/// Spot-checks A1-A2 style conditions by dense sampling: boundedness of b
/// and sigma, invertibility of sigma (smallest singular value above
/// `min_singular_value`), and ellipticity of a = sigma sigma^T.
ValidationReport validate(const DiffusionModel& m, const TruncatedDomain& dom,
                          int n_samples = 64, double min_singular_value = 1e-8);

/// Truncation box x0 +- (sup|b| T + k sup(sqrt(a_ii)) sqrt(T)) with the sups
/// sampled on a provisional box; always contains x0. Coefficients that keep
/// growing toward the provisional boundary are flagged in `warnings`.
TruncatedDomain infer_domain(const DiffusionModel& m, double k_sigmas,
                             std::vector<std::string>* warnings = nullptr);

}  // namespace endo
