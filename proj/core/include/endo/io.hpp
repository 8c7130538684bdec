#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "endo/equilibrium.hpp"
#include "endo/model.hpp"

namespace endo::io {

inline constexpr const char* kToolVersion = "0.1.0";

/// Flat mirror of the JSON model document. Expression fields stay as source
/// strings until `build_*` parses them against the model variables.
struct ModelFile {
    int d = 0;
    std::vector<double> x0;
    std::vector<std::string> b;
    std::vector<std::string> sigma;  // row-major d x d
    bool asserted_t_analytic = true;

    std::vector<std::string> payoff_F, payoff_alpha, payoff_f;

    std::optional<std::string> density_G, density_beta;
    std::vector<std::string> gamma;

    // economy (optional)
    std::string economy_type;  // "", "terminal", "intermediate"
    double econ_crra_a = 1.0;
    std::string econ_nu = "0";
    std::string econ_H = "0";       // terminal economies
    std::string econ_rate = "0";    // terminal economies
    std::string econ_g = "0";       // intermediate economies

    bool grid_auto = true;
    double grid_k_sigmas = 5.0;
    std::vector<double> grid_lo, grid_hi;
    std::vector<int> grid_nx;
    int grid_nt = 128;

    int mc_nt = 256;
    long mc_npaths = 10000;
    std::uint64_t mc_seed = 1;

    bool has_claim = false;
    std::string claim_F = "0", claim_alpha = "0", claim_f = "0";
};

ModelFile load_model_file(const std::string& path);
void save_model_file(const ModelFile& mf, const std::string& path);

DiffusionModel build_model(const ModelFile& mf);
std::optional<PayoffSpec> build_payoff(const ModelFile& mf);
std::optional<DensitySpec> build_density(const ModelFile& mf);
std::optional<mc::ClaimSpec> build_claim(const ModelFile& mf);
/// Domain from the file's bounds or infer_domain(k_sigmas) when auto; nx
/// defaults per axis when absent.
TruncatedDomain build_domain(const ModelFile& mf, const DiffusionModel& m,
                             std::vector<std::string>* warnings = nullptr);
std::vector<int> grid_nx_or_default(const ModelFile& mf);

/// FNV-1a of the file bytes, hex-encoded; stamped into every report.
std::string content_hash(const std::string& path);

/// Writes via a temp file in the same directory followed by rename.
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace endo::io
