#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "endo/completeness.hpp"
#include "endo/grid.hpp"
#include "endo/model.hpp"

namespace endo::mc {

/// Euler-Maruyama ensemble: X[path][step][component] plus the driving
/// Brownian increments, on the uniform step grid t_k = k/nt.
class PathBundle {
public:
    PathBundle(int d, int nt, long npaths, std::uint64_t seed);

    int dim() const { return d_; }
    int nt() const { return nt_; }
    long npaths() const { return npaths_; }
    std::uint64_t seed() const { return seed_; }
    double dt() const { return 1.0 / nt_; }
    double time(int k) const { return static_cast<double>(k) / nt_; }

    std::span<double> x(long path, int step) {
        return {data_x_.data() + offset(path, step), static_cast<std::size_t>(d_)};
    }
    std::span<const double> x(long path, int step) const {
        return {data_x_.data() + offset(path, step), static_cast<std::size_t>(d_)};
    }
    std::span<double> dw(long path, int step) {
        return {data_dw_.data() + offset(path, step), static_cast<std::size_t>(d_)};
    }
    std::span<const double> dw(long path, int step) const {
        return {data_dw_.data() + offset(path, step), static_cast<std::size_t>(d_)};
    }

private:
    std::size_t offset(long path, int step) const {
        return (static_cast<std::size_t>(path) * static_cast<std::size_t>(nt_ + 1) +
                static_cast<std::size_t>(step)) * static_cast<std::size_t>(d_);
    }
    int d_, nt_;
    long npaths_;
    std::uint64_t seed_;
    std::vector<double> data_x_, data_dw_;  // dw has nt used steps; slot nt unused
};

/// Named per-path, per-step scalar processes (Y, R^j, S^j, Z, ...).
class ProcessPanel {
public:
    ProcessPanel(long npaths, int nt) : npaths_(npaths), nt_(nt) {}

    long npaths() const { return npaths_; }
    int nt() const { return nt_; }
    double time(int k) const { return static_cast<double>(k) / nt_; }

    std::vector<double>& add(const std::string& name);
    bool has(const std::string& name) const { return series_.count(name) > 0; }
    std::span<const double> series(const std::string& name) const;
    double at(const std::string& name, long path, int step) const {
        return series(name)[static_cast<std::size_t>(path) * (nt_ + 1) + static_cast<std::size_t>(step)];
    }
    std::vector<std::string> names() const;

    /// Paths excluded from statistics (left the PDE hull, etc.).
    std::vector<char> excluded;
    double excluded_fraction() const;

    void write_csv(std::ostream& os) const;

private:
    long npaths_;
    int nt_;
    std::map<std::string, std::vector<double>> series_;
};

/// Euler-Maruyama simulation of dX = b dt + sigma dW; bitwise reproducible
/// for a fixed seed, independent of worker count.
PathBundle simulate(const DiffusionModel& m, int nt, long npaths, std::uint64_t seed);

/// xi = G(X_1) e^{int beta dt},
/// psi^j = F^j(X_1) e^{int alpha^j} + int e^{int_0^t alpha^j} f^j(t,X_t) dt;
/// all time integrals are left-endpoint sums on the path grid.
ProcessPanel evaluate_xi_psi(const PathBundle& paths, const PayoffSpec& p, const DensitySpec& dsp);

/// Time-coefficient callables driving the pathwise integrals. The economy
/// pipelines override these (their effective alpha subtracts the rate, which
/// may itself be kernel-derived rather than an expression).
struct SweepCoeffs {
    std::vector<ScalarFunc> alpha, f;
    ScalarFunc beta;
    static SweepCoeffs from(const PayoffSpec& p, const DensitySpec& dsp, int dim);
};

/// Y_t = e^{int beta} u(t,X_t),
/// R^j_t = e^{int (alpha^j+beta)} v^j(t,X_t) + Y_t int_0^t e^{int alpha^j} f^j dt,
/// S^j = R^j / Y. Paths that leave the grid hull are excluded and reported;
/// more than `max_escape_fraction` escaping aborts.
ProcessPanel pathwise_yrs(const PathBundle& paths, const FieldSeries& u,
                          const std::vector<FieldSeries>& v, const PayoffSpec& p,
                          const DensitySpec& dsp, double max_escape_fraction = 0.01,
                          const SweepCoeffs* coeffs = nullptr);

struct MartingaleReport {
    struct Slice {
        double t;
        double mean;
        double std_error;
    };
    std::vector<Slice> slices;
    bool drift_detected = false;
    double worst_z = 0.0;
};

/// Sample means with standard errors at the requested times; flags drift when
/// |mean(t) - mean(0)| exceeds 4 standard errors.
MartingaleReport martingale_test(const ProcessPanel& panel, const std::string& name,
                                 const std::vector<double>& slice_times);

/// Z_t = exp(int gamma dW - 1/2 int |gamma|^2 dt) accumulated in log space.
ProcessPanel girsanov_weights(const PathBundle& paths, const std::vector<expr::Expression>& gamma);
void append_girsanov(ProcessPanel& panel, const PathBundle& paths,
                     const std::vector<ScalarFunc>& gamma, const std::string& name = "Z");

struct FeynmanKacReport {
    double u00 = 0.0;            // PDE value at (0, x0)
    double mc_xi_mean = 0.0, mc_xi_se = 0.0;
    double z_xi = 0.0;
    std::vector<double> v00;
    std::vector<double> mc_xipsi_mean, mc_xipsi_se, z_xipsi;
    double worst_z = 0.0;
};

/// u(0,x0) vs E[xi] and v^j(0,x0) vs E[xi psi^j] with z-scores.
FeynmanKacReport feynman_kac_check(const DiffusionModel& m, const PayoffSpec& p,
                                   const DensitySpec& dsp, const FieldSeries& u,
                                   const std::vector<FieldSeries>& v, const PathBundle& paths);

struct ClaimSpec {
    /// The claim is priced through the same Cauchy problem as the traded
    /// assets: terminal F_c, rate alpha_c, running f_c.
    expr::Expression F;
    expr::Expression alpha;
    expr::Expression f;
};

struct HedgeReport {
    double initial_value = 0.0;
    double rms_error = 0.0;        // RMS of V_end - claim price at t_end
    double mean_abs_error = 0.0;
    long degenerate_steps = 0;     // steps where the asset dispersion lost rank
    long paths_used = 0;
    double escaped_fraction = 0.0;
};

/// Discrete self-financing hedge of a claim with the traded assets S^j.
/// Holdings solve dispersion^T H = claim dispersion per step (least squares,
/// minimum norm). For claim_index >= 0 the claim is asset j itself and the
/// holdings reduce to the unit vector (the null test); otherwise `claim`
/// prices a custom payoff through the v-pipeline.
HedgeReport replication_backtest(const PathBundle& paths, const FieldSeries& u,
                                 const std::vector<FieldSeries>& v, const PayoffSpec& p,
                                 const DensitySpec& dsp, int claim_index,
                                 const ClaimSpec* claim, const FieldSeries* claim_field,
                                 const DiffusionModel& m, double t_end = 1.0);

}  // namespace endo::mc
