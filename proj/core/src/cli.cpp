#include "endo/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "endo/completeness.hpp"
#include "endo/equilibrium.hpp"
#include "endo/fixtures.hpp"
#include "endo/io.hpp"
#include "endo/mc.hpp"
#include "endo/pde.hpp"

namespace endo::cli {

using nlohmann::ordered_json;

namespace {

struct CommonOpts {
    std::string file;
    std::string out_dir;
    std::string format = "json";
    double threshold = 1e-6;
    int claim = 0;  // 0 = custom claim from the file; j >= 1 = traded asset j
    long npaths = -1;
    int nt = -1;
    int nx = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

ordered_json report_header(const std::string& path, const std::string& command) {
    ordered_json j;
    j["tool_version"] = io::kToolVersion;
    j["command"] = command;
    j["input"] = std::filesystem::path(path).filename().string();
    j["input_hash"] = io::content_hash(path);
    return j;
}

void emit(const ordered_json& j, const CommonOpts& opt, std::ostream& out) {
    if (opt.format == "csv") {
        // Flat key,value dump for spreadsheet-side consumption.
        out << "key,value\n";
        std::function<void(const std::string&, const ordered_json&)> walk =
            [&](const std::string& prefix, const ordered_json& node) {
                if (node.is_object()) {
                    for (auto it = node.begin(); it != node.end(); ++it)
                        walk(prefix.empty() ? it.key() : prefix + "." + it.key(), it.value());
                } else if (node.is_array()) {
                    int i = 0;
                    for (const auto& v : node) walk(prefix + "[" + std::to_string(i++) + "]", v);
                } else {
                    out << prefix << ',' << node.dump() << '\n';
                }
            };
        walk("", j);
    } else {
        out << j.dump(2) << '\n';
    }
}

void apply_overrides(io::ModelFile& mf, const CommonOpts& opt) {
    if (opt.npaths > 0) mf.mc_npaths = opt.npaths;
    if (opt.nt > 0) {
        mf.mc_nt = opt.nt;
        mf.grid_nt = opt.nt;
    }
    if (opt.nx > 0) mf.grid_nx.assign(static_cast<std::size_t>(mf.d), opt.nx);
    if (opt.seed_set) mf.mc_seed = opt.seed;
}

struct Pipeline {
    DiffusionModel model;
    PayoffSpec payoffs;
    DensitySpec density;
    std::shared_ptr<const Grid> grid;
    FieldSeries u;
    std::vector<FieldSeries> v;
};

/// Shared solve path: validation, grid, u and the J price fields.
Pipeline solve_fields(const io::ModelFile& mf, std::vector<std::string>* warnings) {
    auto model = io::build_model(mf);
    auto payoff = io::build_payoff(mf);
    auto density = io::build_density(mf);
    if (!density) throw InputError("this command needs a density section (G, beta)");
    if (!payoff) throw InputError("this command needs a payoff section (F, alpha, f)");

    TruncatedDomain dom = io::build_domain(mf, model, warnings);
    auto rep = validate(model, dom);
    if (!rep.pass()) throw NumericError("model validation failed on the sampled domain");

    auto grid = std::make_shared<Grid>(dom, io::grid_nx_or_default(mf), mf.grid_nt);
    FieldSeries u = pde::solve_backward(model, &density->beta, {}, density->G, grid, "u");
    std::vector<FieldSeries> v;
    for (int j = 0; j < payoff->J; ++j) {
        expr::Expression pot = expr::Expression::bin(
            expr::BinOp::Add, payoff->alpha[static_cast<std::size_t>(j)], density->beta);
        expr::Expression term = expr::Expression::bin(
            expr::BinOp::Mul, payoff->F[static_cast<std::size_t>(j)], density->G);
        pde::SourceSpec src{pde::to_func(payoff->f[static_cast<std::size_t>(j)], model.dim()), &u};
        v.push_back(pde::solve_backward(model, &pot, src, term, grid, "v" + std::to_string(j + 1)));
    }
    return Pipeline{std::move(model), std::move(*payoff), std::move(*density), std::move(grid),
                    std::move(u), std::move(v)};
}

int cmd_validate(const CommonOpts& opt, std::ostream& out) {
    io::ModelFile mf = io::load_model_file(opt.file);
    auto model = io::build_model(mf);
    std::vector<std::string> warnings;
    TruncatedDomain dom = io::build_domain(mf, model, &warnings);
    auto rep = validate(model, dom);

    ordered_json j = report_header(opt.file, "validate");
    j["pass"] = rep.pass();
    j["sup_b"] = rep.sup_b;
    j["sup_sigma"] = rep.sup_sigma;
    j["sup_sigma_inv"] = rep.sup_sigma_inv;
    j["min_eig_a"] = rep.min_eig_a;
    j["modulus_of_continuity"] = rep.modulus_of_continuity;
    j["asserted_t_analytic"] = rep.asserted_t_analytic;
    for (const auto& w : rep.warnings) warnings.push_back(w);
    j["warnings"] = warnings;
    emit(j, opt, out);
    return rep.pass() ? kExitOk : kExitDiagnostic;
}

int cmd_solve(const CommonOpts& opt, std::ostream& out) {
    io::ModelFile mf = io::load_model_file(opt.file);
    apply_overrides(mf, opt);
    // u alone is solvable without a payoff section.
    auto model = io::build_model(mf);
    auto density = io::build_density(mf);
    if (!density) throw InputError("solve needs a density section (G, beta)");
    std::vector<std::string> warnings;
    TruncatedDomain dom = io::build_domain(mf, model, &warnings);
    auto vrep = validate(model, dom);
    if (!vrep.pass()) throw NumericError("model validation failed on the sampled domain");
    auto grid = std::make_shared<Grid>(dom, io::grid_nx_or_default(mf), mf.grid_nt);

    FieldSeries u = pde::solve_backward(model, &density->beta, {}, density->G, grid, "u");
    std::vector<FieldSeries> v;
    auto payoff = io::build_payoff(mf);
    if (payoff) {
        for (int j = 0; j < payoff->J; ++j) {
            expr::Expression pot = expr::Expression::bin(
                expr::BinOp::Add, payoff->alpha[static_cast<std::size_t>(j)], density->beta);
            expr::Expression term = expr::Expression::bin(
                expr::BinOp::Mul, payoff->F[static_cast<std::size_t>(j)], density->G);
            pde::SourceSpec src{pde::to_func(payoff->f[static_cast<std::size_t>(j)], model.dim()), &u};
            v.push_back(pde::solve_backward(model, &pot, src, term, grid,
                                            "v" + std::to_string(j + 1)));
        }
    }

    ordered_json j = report_header(opt.file, "solve");
    j["u00"] = u.interpolate(0.0, model.x0());
    ordered_json v00 = ordered_json::array();
    for (const auto& vj : v) v00.push_back(vj.interpolate(0.0, model.x0()));
    j["v00"] = v00;
    j["warnings"] = warnings;

    if (!opt.out_dir.empty()) {
        std::filesystem::create_directories(opt.out_dir);
        auto write_field = [&](const FieldSeries& f) {
            std::ostringstream ss;
            f.write_csv(ss);
            io::atomic_write((std::filesystem::path(opt.out_dir) / (f.label() + ".csv")).string(),
                             ss.str());
        };
        write_field(u);
        for (const auto& vj : v) write_field(vj);
        j["out_dir"] = opt.out_dir;
    }
    emit(j, opt, out);
    return kExitOk;
}

int cmd_check(const CommonOpts& opt, std::ostream& out) {
    io::ModelFile mf = io::load_model_file(opt.file);
    apply_overrides(mf, opt);
    std::vector<std::string> warnings;
    Pipeline pipe = solve_fields(mf, &warnings);

    auto w = completeness::compute_w(pipe.u, pipe.v);
    auto rep = completeness::rank_diagnostic(w, pipe.model, opt.threshold);

    ordered_json j = report_header(opt.file, "check");
    j["threshold_rel"] = rep.threshold_rel;
    j["aggregate_degenerate_fraction"] = rep.aggregate_degenerate_fraction;
    ordered_json slices = ordered_json::array();
    for (const auto& s : rep.slices) {
        ordered_json js;
        js["t"] = s.t;
        js["degenerate_fraction"] = s.degenerate_fraction;
        js["min_sv_quantiles"] = {s.min_sv_q05, s.min_sv_q50, s.min_sv_q95};
        slices.push_back(js);
    }
    j["slices"] = slices;
    j["warnings"] = warnings;
    bool complete = rep.aggregate_degenerate_fraction <= 0.05;
    j["complete"] = complete;
    emit(j, opt, out);
    return complete ? kExitOk : kExitDiagnostic;
}

int cmd_hedge(const CommonOpts& opt, std::ostream& out) {
    io::ModelFile mf = io::load_model_file(opt.file);
    apply_overrides(mf, opt);
    std::vector<std::string> warnings;
    Pipeline pipe = solve_fields(mf, &warnings);

    int claim_index = opt.claim - 1;  // -1 selects the file's claim section
    std::optional<mc::ClaimSpec> claim = io::build_claim(mf);
    std::optional<FieldSeries> claim_field;
    double t_end = 1.0;
    if (claim_index < 0) {
        if (!claim) throw InputError("hedge --claim 0 needs a claim section in the model file");
        expr::Expression pot = expr::Expression::bin(expr::BinOp::Add, claim->alpha,
                                                     pipe.density.beta);
        expr::Expression term = expr::Expression::bin(expr::BinOp::Mul, claim->F,
                                                      pipe.density.G);
        pde::SourceSpec src{pde::to_func(claim->f, pipe.model.dim()), &pipe.u};
        claim_field = pde::solve_backward(pipe.model, &pot, src, term, pipe.grid, "vc");
    } else if (claim_index >= pipe.payoffs.J) {
        throw InputError("hedge: claim index exceeds the number of traded assets");
    }

    ordered_json j = report_header(opt.file, "hedge");
    j["claim"] = opt.claim;
    ordered_json runs = ordered_json::array();
    double prev_rms = -1.0;
    bool decayed = true;
    for (int level = 0; level < 2; ++level) {
        int nt = mf.mc_nt << level;
        auto paths = mc::simulate(pipe.model, nt, mf.mc_npaths, mf.mc_seed + level);
        auto rep = mc::replication_backtest(paths, pipe.u, pipe.v, pipe.payoffs, pipe.density,
                                            claim_index, claim ? &*claim : nullptr,
                                            claim_field ? &*claim_field : nullptr, pipe.model,
                                            t_end);
        ordered_json jr;
        jr["nt"] = nt;
        jr["rms_error"] = rep.rms_error;
        jr["initial_value"] = rep.initial_value;
        jr["degenerate_steps"] = rep.degenerate_steps;
        jr["paths_used"] = rep.paths_used;
        jr["escaped_fraction"] = rep.escaped_fraction;
        runs.push_back(jr);
        if (prev_rms >= 0.0 && rep.rms_error > 0.9 * prev_rms) decayed = false;
        prev_rms = rep.rms_error;
    }
    j["runs"] = runs;
    j["rms_decays_under_refinement"] = decayed;
    j["warnings"] = warnings;
    emit(j, opt, out);
    return kExitOk;
}

int cmd_equilibrium(const CommonOpts& opt, std::ostream& out) {
    io::ModelFile mf = io::load_model_file(opt.file);
    apply_overrides(mf, opt);
    if (mf.economy_type.empty())
        throw InputError("equilibrium needs an economy section");
    auto model = io::build_model(mf);
    auto payoff = io::build_payoff(mf);
    if (!payoff) throw InputError("equilibrium needs a payoff section");
    std::vector<std::string> warnings;
    TruncatedDomain dom = io::build_domain(mf, model, &warnings);
    auto vrep = validate(model, dom);
    if (!vrep.pass()) throw NumericError("model validation failed on the sampled domain");
    auto grid = std::make_shared<Grid>(dom, io::grid_nx_or_default(mf), mf.grid_nt);

    std::vector<std::string> uvars = {"t"};
    for (int i = 1; i <= mf.d; ++i) uvars.push_back("x" + std::to_string(i));

    ordered_json j = report_header(opt.file, "equilibrium");
    bool pass = true;
    if (mf.economy_type == "terminal") {
        eq::TerminalEconomy ec{utility::crra(mf.econ_nu, mf.econ_crra_a),
                               expr::parse(mf.econ_H, uvars),
                               expr::parse(mf.econ_rate, uvars), *payoff};
        auto res = eq::terminal_prices(ec, model, grid, mf.mc_nt, mf.mc_npaths, mf.mc_seed);
        j["economy"] = "terminal";
        j["v0"] = res.v0;
        j["p1_theta_rms"] = res.p1_theta_rms;
        j["feynman_kac_worst_z"] = res.fk.worst_z;
        pass = res.p1_theta_rms < 1e-2 && std::isfinite(res.v0) && res.v0 > 0.0;
    } else {
        eq::IntermediateEconomy ec{utility::crra(mf.econ_nu, mf.econ_crra_a),
                                   expr::parse(mf.econ_g, uvars), *payoff};
        auto res = eq::intermediate_prices(ec, model, grid, mf.mc_nt, mf.mc_npaths, mf.mc_seed);
        j["economy"] = "intermediate";
        j["v0"] = res.v0;
        j["p1_theta_rms"] = res.p1_theta_rms;
        j["decomposition_rms"] = res.decomposition_rms;
        j["z_martingale_ok"] = res.z_martingale_ok;
        pass = res.p1_theta_rms < 1e-2 && res.decomposition_rms < 2e-2 && res.z_martingale_ok &&
               std::isfinite(res.v0) && res.v0 > 0.0;
    }
    j["pass"] = pass;
    j["warnings"] = warnings;
    emit(j, opt, out);
    return pass ? kExitOk : kExitDiagnostic;
}

int cmd_mc(const CommonOpts& opt, std::ostream& out) {
    io::ModelFile mf = io::load_model_file(opt.file);
    apply_overrides(mf, opt);
    std::vector<std::string> warnings;
    Pipeline pipe = solve_fields(mf, &warnings);

    auto paths = mc::simulate(pipe.model, mf.mc_nt, mf.mc_npaths, mf.mc_seed);
    auto panel = mc::pathwise_yrs(paths, pipe.u, pipe.v, pipe.payoffs, pipe.density);

    std::vector<double> slice_times = {0.0, 0.25, 0.5, 0.75, 1.0};
    ordered_json j = report_header(opt.file, "mc");
    j["seed"] = mf.mc_seed;
    j["npaths"] = mf.mc_npaths;
    j["nt"] = mf.mc_nt;
    j["escaped_fraction"] = panel.excluded_fraction();

    bool drift = false;
    ordered_json tests = ordered_json::array();
    std::vector<std::string> to_test = {"Y"};
    for (int jdx = 1; jdx <= pipe.payoffs.J; ++jdx) to_test.push_back("R" + std::to_string(jdx));
    if (!mf.gamma.empty()) {
        std::vector<expr::Expression> gam;
        std::vector<std::string> vars = {"t"};
        for (int i = 1; i <= mf.d; ++i) vars.push_back("x" + std::to_string(i));
        for (const auto& s : mf.gamma) gam.push_back(expr::parse(s, vars));
        std::vector<ScalarFunc> fns;
        for (const auto& g : gam) fns.push_back(pde::to_func(g, mf.d));
        mc::append_girsanov(panel, paths, fns);
        to_test.push_back("Z");
    }
    for (const auto& name : to_test) {
        auto rep = mc::martingale_test(panel, name, slice_times);
        ordered_json jt;
        jt["series"] = name;
        jt["drift_detected"] = rep.drift_detected;
        jt["worst_z"] = rep.worst_z;
        ordered_json means = ordered_json::array();
        for (const auto& s : rep.slices) {
            means.push_back({{"t", s.t}, {"mean", s.mean}, {"std_error", s.std_error}});
        }
        jt["slices"] = means;
        tests.push_back(jt);
        drift = drift || rep.drift_detected;
    }
    j["martingale_tests"] = tests;

    // Feynman-Kac cross-check rides along for free.
    auto fk = mc::feynman_kac_check(pipe.model, pipe.payoffs, pipe.density, pipe.u, pipe.v, paths);
    j["feynman_kac"] = {{"u00", fk.u00},
                        {"mc_xi_mean", fk.mc_xi_mean},
                        {"z_xi", fk.z_xi},
                        {"worst_z", fk.worst_z}};

    if (!opt.out_dir.empty()) {
        std::filesystem::create_directories(opt.out_dir);
        std::ostringstream ss;
        panel.write_csv(ss);
        io::atomic_write((std::filesystem::path(opt.out_dir) / "panel.csv").string(), ss.str());
        j["out_dir"] = opt.out_dir;
    }
    j["warnings"] = warnings;
    emit(j, opt, out);
    return drift ? kExitDiagnostic : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"endogenous-completeness toolkit"};
    app.require_subcommand(1);

    CommonOpts opt;
    auto add_common = [&](CLI::App* sub, bool needs_threshold = false, bool needs_claim = false) {
        sub->add_option("file", opt.file, "JSON model file")->required();
        sub->add_option("--out", opt.out_dir, "output directory for CSV dumps");
        sub->add_option("--format", opt.format, "report format: json|csv")
            ->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--npaths", opt.npaths, "override Monte Carlo path count");
        sub->add_option("--nt", opt.nt, "override time-step count");
        sub->add_option("--nx", opt.nx, "override nodes per axis");
        auto* s = sub->add_option("--seed", opt.seed, "override the random seed");
        s->each([&](const std::string&) { opt.seed_set = true; });
        if (needs_threshold)
            sub->add_option("--threshold", opt.threshold, "degeneracy threshold (relative)");
        if (needs_claim)
            sub->add_option("--claim", opt.claim,
                            "claim to hedge: asset index (1-based) or 0 for the file's claim");
    };

    auto* c_validate = app.add_subcommand("validate", "sample the standing assumptions");
    add_common(c_validate);
    auto* c_solve = app.add_subcommand("solve", "solve the Cauchy problems, export fields");
    add_common(c_solve);
    auto* c_check = app.add_subcommand("check", "rank diagnostic of the dispersion field");
    add_common(c_check, /*threshold=*/true);
    auto* c_hedge = app.add_subcommand("hedge", "discrete replication backtest");
    add_common(c_hedge, false, /*claim=*/true);
    auto* c_eq = app.add_subcommand("equilibrium", "terminal or intermediate economy pipeline");
    add_common(c_eq);
    auto* c_mc = app.add_subcommand("mc", "simulate and run the martingale tests");
    add_common(c_mc);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return e.get_exit_code() == 0 ? kExitOk : kExitInput;
    }

    try {
        if (c_validate->parsed()) return cmd_validate(opt, out);
        if (c_solve->parsed()) return cmd_solve(opt, out);
        if (c_check->parsed()) return cmd_check(opt, out);
        if (c_hedge->parsed()) return cmd_hedge(opt, out);
        if (c_eq->parsed()) return cmd_equilibrium(opt, out);
        if (c_mc->parsed()) return cmd_mc(opt, out);
    } catch (const expr::ParseError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitInput;
}

int run_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace endo::cli
