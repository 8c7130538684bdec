#include "endo/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace endo::io {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename T>
T get_or(const json& j, const char* key, T def) {
    if (!j.contains(key)) return def;
    return j.at(key).get<T>();
}

}  // namespace

ModelFile load_model_file(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed JSON: ") + e.what());
    }

    ModelFile mf;
    try {
        const auto& jm = j.at("model");
        mf.d = jm.at("d").get<int>();
        mf.x0 = jm.at("x0").get<std::vector<double>>();
        mf.b = jm.at("b").get<std::vector<std::string>>();
        for (const auto& row : jm.at("sigma"))
            for (const auto& entry : row) mf.sigma.push_back(entry.get<std::string>());

        if (j.contains("payoff")) {
            const auto& jp = j.at("payoff");
            mf.payoff_F = jp.at("F").get<std::vector<std::string>>();
            mf.payoff_alpha = jp.at("alpha").get<std::vector<std::string>>();
            mf.payoff_f = jp.at("f").get<std::vector<std::string>>();
        }
        if (j.contains("density")) {
            mf.density_G = j.at("density").at("G").get<std::string>();
            mf.density_beta = j.at("density").at("beta").get<std::string>();
        }
        if (j.contains("gamma")) mf.gamma = j.at("gamma").get<std::vector<std::string>>();

        if (j.contains("economy")) {
            const auto& je = j.at("economy");
            mf.economy_type = je.at("type").get<std::string>();
            if (mf.economy_type != "terminal" && mf.economy_type != "intermediate")
                throw InputError("economy.type must be 'terminal' or 'intermediate'");
            mf.econ_crra_a = get_or(je, "crra_a", 1.0);
            mf.econ_nu = get_or<std::string>(je, "nu", "0");
            mf.econ_H = get_or<std::string>(je, "H", "0");
            mf.econ_rate = get_or<std::string>(je, "rate", "0");
            mf.econ_g = get_or<std::string>(je, "g", "0");
        }

        if (j.contains("grid")) {
            const auto& jg = j.at("grid");
            if (jg.contains("bounds") && jg.at("bounds").is_string()) {
                mf.grid_auto = true;
            } else if (jg.contains("bounds")) {
                mf.grid_auto = false;
                for (const auto& axis : jg.at("bounds")) {
                    mf.grid_lo.push_back(axis.at(0).get<double>());
                    mf.grid_hi.push_back(axis.at(1).get<double>());
                }
            }
            mf.grid_k_sigmas = get_or(jg, "k_sigmas", 5.0);
            if (jg.contains("nx")) {
                if (jg.at("nx").is_array()) mf.grid_nx = jg.at("nx").get<std::vector<int>>();
                else mf.grid_nx.assign(static_cast<std::size_t>(mf.d), jg.at("nx").get<int>());
            }
            mf.grid_nt = get_or(jg, "nt", 128);
        }
        if (j.contains("mc")) {
            const auto& jmc = j.at("mc");
            mf.mc_nt = get_or(jmc, "nt", 256);
            mf.mc_npaths = get_or<long>(jmc, "npaths", 10000);
            mf.mc_seed = get_or<std::uint64_t>(jmc, "seed", 1);
        }
        if (j.contains("flags"))
            mf.asserted_t_analytic = get_or(j.at("flags"), "asserted_t_analytic", true);
        if (j.contains("claim")) {
            mf.has_claim = true;
            const auto& jc = j.at("claim");
            mf.claim_F = jc.at("F").get<std::string>();
            mf.claim_alpha = get_or<std::string>(jc, "alpha", "0");
            mf.claim_f = get_or<std::string>(jc, "f", "0");
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("model file schema violation: ") + e.what());
    }
    return mf;
}

void save_model_file(const ModelFile& mf, const std::string& path) {
    json j;
    j["model"]["d"] = mf.d;
    j["model"]["x0"] = mf.x0;
    j["model"]["b"] = mf.b;
    json sig = json::array();
    for (int i = 0; i < mf.d; ++i) {
        json row = json::array();
        for (int k = 0; k < mf.d; ++k)
            row.push_back(mf.sigma[static_cast<std::size_t>(i * mf.d + k)]);
        sig.push_back(row);
    }
    j["model"]["sigma"] = sig;
    if (!mf.payoff_F.empty()) {
        j["payoff"]["F"] = mf.payoff_F;
        j["payoff"]["alpha"] = mf.payoff_alpha;
        j["payoff"]["f"] = mf.payoff_f;
    }
    if (mf.density_G) {
        j["density"]["G"] = *mf.density_G;
        j["density"]["beta"] = *mf.density_beta;
    }
    if (!mf.gamma.empty()) j["gamma"] = mf.gamma;
    if (!mf.economy_type.empty()) {
        j["economy"]["type"] = mf.economy_type;
        j["economy"]["crra_a"] = mf.econ_crra_a;
        j["economy"]["nu"] = mf.econ_nu;
        if (mf.economy_type == "terminal") {
            j["economy"]["H"] = mf.econ_H;
            j["economy"]["rate"] = mf.econ_rate;
        } else {
            j["economy"]["g"] = mf.econ_g;
        }
    }
    if (mf.grid_auto) {
        j["grid"]["bounds"] = "auto";
        j["grid"]["k_sigmas"] = mf.grid_k_sigmas;
    } else {
        json bounds = json::array();
        for (std::size_t i = 0; i < mf.grid_lo.size(); ++i)
            bounds.push_back(json::array({mf.grid_lo[i], mf.grid_hi[i]}));
        j["grid"]["bounds"] = bounds;
    }
    if (!mf.grid_nx.empty()) j["grid"]["nx"] = mf.grid_nx;
    j["grid"]["nt"] = mf.grid_nt;
    j["mc"]["nt"] = mf.mc_nt;
    j["mc"]["npaths"] = mf.mc_npaths;
    j["mc"]["seed"] = mf.mc_seed;
    j["flags"]["asserted_t_analytic"] = mf.asserted_t_analytic;
    if (mf.has_claim) {
        j["claim"]["F"] = mf.claim_F;
        j["claim"]["alpha"] = mf.claim_alpha;
        j["claim"]["f"] = mf.claim_f;
    }
    atomic_write(path, j.dump(2) + "\n");
}

DiffusionModel build_model(const ModelFile& mf) {
    if (mf.d < 1) throw InputError("model.d must be positive");
    if (static_cast<int>(mf.b.size()) != mf.d) throw InputError("model.b must list d expressions");
    if (static_cast<int>(mf.sigma.size()) != mf.d * mf.d)
        throw InputError("model.sigma must be a d x d matrix of expressions");
    return DiffusionModel::from_sources(mf.d, mf.x0, mf.b, mf.sigma, mf.asserted_t_analytic);
}

std::optional<PayoffSpec> build_payoff(const ModelFile& mf) {
    if (mf.payoff_F.empty()) return std::nullopt;
    return make_payoff(mf.d, mf.payoff_F, mf.payoff_alpha, mf.payoff_f);
}

std::optional<DensitySpec> build_density(const ModelFile& mf) {
    if (!mf.density_G) return std::nullopt;
    return make_density(mf.d, *mf.density_G, *mf.density_beta);
}

std::optional<mc::ClaimSpec> build_claim(const ModelFile& mf) {
    if (!mf.has_claim) return std::nullopt;
    std::vector<std::string> vars = {"t"};
    for (int i = 1; i <= mf.d; ++i) vars.push_back("x" + std::to_string(i));
    return mc::ClaimSpec{expr::parse(mf.claim_F, vars), expr::parse(mf.claim_alpha, vars),
                         expr::parse(mf.claim_f, vars)};
}

TruncatedDomain build_domain(const ModelFile& mf, const DiffusionModel& m,
                             std::vector<std::string>* warnings) {
    if (mf.grid_auto) return infer_domain(m, mf.grid_k_sigmas, warnings);
    if (static_cast<int>(mf.grid_lo.size()) != mf.d)
        throw InputError("grid.bounds must list one [lo, hi] pair per axis");
    TruncatedDomain dom{mf.grid_lo, mf.grid_hi};
    for (int i = 0; i < mf.d; ++i) {
        if (!(dom.lo[static_cast<std::size_t>(i)] < m.x0()[static_cast<std::size_t>(i)] &&
              m.x0()[static_cast<std::size_t>(i)] < dom.hi[static_cast<std::size_t>(i)]))
            throw InputError("grid bounds must contain the start point");
    }
    return dom;
}

std::vector<int> grid_nx_or_default(const ModelFile& mf) {
    if (!mf.grid_nx.empty()) {
        if (static_cast<int>(mf.grid_nx.size()) != mf.d)
            throw InputError("grid.nx must list one count per axis");
        return mf.grid_nx;
    }
    return std::vector<int>(static_cast<std::size_t>(mf.d), mf.d == 1 ? 401 : 129);
}

std::string content_hash(const std::string& path) {
    std::string data = read_file(path);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void atomic_write(const std::string& path, const std::string& contents) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write file: " + tmp);
        out << contents;
        if (!out.good()) throw InputError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw InputError("atomic rename failed for: " + path);
}

}  // namespace endo::io
