// ucut: cutoff selection, simulation, verification suites and bootstrap.
//
// Exit codes: 0 success, 1 bad input or failed check, 2 no feasible cutoff.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ucut/cutoff.hpp"
#include "ucut/io.hpp"
#include "ucut/mixture.hpp"
#include "ucut/simulate.hpp"
#include "ucut/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kInfeasible = 2;

struct CutFlags {
    std::optional<std::int64_t> m;
    double mu = 0.5;
    double d_l = 0.1;
    double d_r = 0.01;
    std::optional<double> c_l_max;
    std::optional<double> c_r_min;
    double gamma = 0.001;
};

void add_cut_flags(CLI::App* cmd, CutFlags& f) {
    cmd->add_option("--m", f.m, "Subsampling rounds (overrides the '# m=' header)");
    cmd->add_option("--mu", f.mu, "Interior point of the flat region")->capture_default_str();
    cmd->add_option("--dl", f.d_l, "Left density gap")->capture_default_str();
    cmd->add_option("--dr", f.d_r, "Right density gap")->capture_default_str();
    cmd->add_option("--clmax", f.c_l_max, "Largest left cutoff searched (default mu - 0.05)");
    cmd->add_option("--crmin", f.c_r_min, "Smallest right cutoff searched (default mu + 0.05)");
    cmd->add_option("--gamma", f.gamma, "Grid step")->capture_default_str();
}

ucut::UcutConfig config_from(const CutFlags& f) {
    auto config = ucut::default_config(f.mu, f.d_l, f.d_r, f.gamma);
    if (f.c_l_max) config.c_l_max = *f.c_l_max;
    if (f.c_r_min) config.c_r_min = *f.c_r_min;
    config.validate();
    return config;
}

ucut::ObservationSet load(const std::string& path, std::optional<std::int64_t> m) {
    auto read = ucut::read_observations_file(path, m);
    if (read.warning) std::cerr << "warning: " << *read.warning << '\n';
    return std::move(read.obs);
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ucut::Error("cannot write " + path.string());
    out << contents;
    if (!out) throw ucut::Error("failed writing " + path.string());
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("UCUT_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ucut::Error(std::string("UCUT_SEED is not an unsigned integer: '") + env + "'");
    }
    return 0;
}

int cmd_cut(const std::string& input, const CutFlags& flags, const std::string& out_path,
            const std::optional<std::string>& discoveries_path, unsigned threads) {
    const auto config = config_from(flags);
    const auto obs = load(input, flags.m);
    const auto result = ucut::ucut(obs, config, threads);
    write_file(out_path, ucut::to_json(result, config));

    const fs::path disc = discoveries_path ? fs::path(*discoveries_path)
                                           : fs::path(out_path).parent_path() / "discoveries.csv";
    std::ostringstream os;
    os << "id,cfr\n";
    if (result.feasible) {
        const auto ratios = obs.ratios();
        for (std::size_t i = 0; i < obs.size(); ++i) {
            if (ratios[i] > result.c_r_star) os << obs.id(i) << ',' << ucut::format_double(ratios[i]) << '\n';
        }
    }
    write_file(disc, os.str());
    if (!result.feasible) {
        std::cerr << "no feasible cutoff pair\n";
        return kInfeasible;
    }
    return kOk;
}

struct SimFlags {
    std::string model = "linear";
    ucut::ValleyParams p;
    std::size_t n = 10000;
    std::int64_t m = 1000;
    double tau0 = 0.5;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_simulate(const SimFlags& f) {
    if (f.n == 0) throw ucut::Error("--n must be positive");
    if (f.m < 1 || f.m > ucut::kMaxMixtureM) throw ucut::Error("--m must lie in [1, 100000]");
    if (!(f.tau0 >= 0.0 && f.tau0 <= 1.0)) throw ucut::Error("--tau0 must lie in [0, 1]");
    const auto model = ucut::parse_model(f.model);
    const auto spec = ucut::valley_for(model, f.p);
    const auto seed = resolve_seed(f.seed);
    const auto obs = ucut::sample_binomial_mixture(spec, f.n, f.m, {seed, 0}, f.tau0);

    std::vector<std::string> comments;
    std::ostringstream c;
    c << "simulate model=" << f.model << " n=" << f.n << " tau0=" << ucut::format_double(f.tau0)
      << " seed=" << seed;
    comments.push_back(c.str());
    std::ostringstream v;
    v << "valley c_l=" << ucut::format_double(f.p.c_l) << " c_r=" << ucut::format_double(f.p.c_r)
      << " delta_m=" << ucut::format_double(f.p.delta_m)
      << " delta_l=" << ucut::format_double(f.p.delta_l)
      << " delta_r=" << ucut::format_double(f.p.delta_r);
    if (model == ucut::ValleyModel::linear) {
        v << " s_l=" << ucut::format_double(f.p.s_l) << " s_r=" << ucut::format_double(f.p.s_r);
    }
    comments.push_back(v.str());
    const auto shape = *spec.valley();
    comments.push_back("normalized gap_l=" + ucut::format_double(shape.gap_l) +
                       " gap_r=" + ucut::format_double(shape.gap_r));

    std::ostringstream os;
    ucut::write_observations(os, obs, comments);
    write_file(f.out, os.str());
    return kOk;
}

int cmd_verify(const std::string& suite, const std::optional<std::string>& config_path,
               const std::string& out_dir, unsigned threads) {
    nlohmann::json config = nlohmann::json::object();
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw ucut::Error("cannot open " + *config_path);
        try {
            config = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ucut::Error("bad config JSON: " + std::string(e.what()));
        }
    }
    const auto output = ucut::run_suite(suite, config, threads);
    fs::create_directories(out_dir);
    for (const auto& [name, contents] : output.files) write_file(fs::path(out_dir) / name, contents);
    if (output.violation) {
        std::cerr << "bound violation flagged\n";
        return kFail;
    }
    return kOk;
}

int cmd_bootstrap(const std::string& input, const CutFlags& flags, double frac, std::size_t B,
                  const std::optional<std::uint64_t>& seed, const std::string& out_path,
                  unsigned threads) {
    const auto config = config_from(flags);
    const auto obs = load(input, flags.m);
    ucut::BootstrapSummary summary;
    try {
        summary = ucut::bootstrap_cutoff(obs, config, frac, B, {resolve_seed(seed), 0}, threads);
    } catch (const ucut::InfeasibleError& e) {
        std::cerr << e.what() << '\n';
        return kInfeasible;
    }
    nlohmann::ordered_json j;
    j["mean"] = summary.mean;
    j["sd"] = summary.sd;
    j["n_feasible"] = summary.n_feasible;
    auto reps = nlohmann::ordered_json::array();
    for (const auto& r : summary.replicates) reps.push_back(r ? nlohmann::ordered_json(*r) : nullptr);
    j["replicates"] = reps;
    write_file(out_path, ucut::dump_json(j));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"U-shape cutoff selection for binomial mixtures"};
    app.require_subcommand(1);
    unsigned threads = 1;
    app.add_option("--threads", threads, "Worker threads (results do not depend on it)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    std::string input;
    std::string out;
    CutFlags cut_flags;
    std::optional<std::string> discoveries;
    auto* cut = app.add_subcommand("cut", "Select cutoffs on a CFR table");
    cut->add_option("input", input, "Observation CSV")->required();
    add_cut_flags(cut, cut_flags);
    cut->add_option("--out", out, "Result JSON")->required();
    cut->add_option("--discoveries", discoveries, "Discovery list (default: discoveries.csv next to --out)");

    SimFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Draw a valley dataset");
    simulate->add_option("--model", sim.model, "linear, beta or unimodal")->capture_default_str();
    simulate->add_option("--cl", sim.p.c_l, "Left cutoff")->capture_default_str();
    simulate->add_option("--cr", sim.p.c_r, "Right cutoff")->capture_default_str();
    simulate->add_option("--delta-m", sim.p.delta_m, "Flat height")->capture_default_str();
    simulate->add_option("--delta-l", sim.p.delta_l, "Left gap")->capture_default_str();
    simulate->add_option("--delta-r", sim.p.delta_r, "Right gap")->capture_default_str();
    simulate->add_option("--sl", sim.p.s_l, "Left slope (linear model)")->capture_default_str();
    simulate->add_option("--sr", sim.p.s_r, "Right slope (linear model)")->capture_default_str();
    simulate->add_option("--n", sim.n, "Number of objects")->capture_default_str();
    simulate->add_option("--m", sim.m, "Subsampling rounds")->capture_default_str();
    simulate->add_option("--tau0", sim.tau0, "Null fraction of the flat region")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Seed (falls back to UCUT_SEED, then 0)");
    simulate->add_option("--out", sim.out, "Output CSV")->required();

    std::string suite;
    std::optional<std::string> config_path;
    std::string out_dir;
    auto* verify = app.add_subcommand("verify", "Run a verification suite");
    verify->add_option("--suite", suite, "rates, bounds, histogram or sensitivity")->required();
    verify->add_option("--config", config_path, "JSON settings for the suite");
    verify->add_option("--out", out_dir, "Output directory")->required();

    std::string boot_input;
    std::string boot_out;
    CutFlags boot_flags;
    double frac = 0.7;
    std::size_t B = 100;
    std::optional<std::uint64_t> boot_seed;
    auto* boot = app.add_subcommand("bootstrap", "Subsample and re-run the cutoff search");
    boot->add_option("input", boot_input, "Observation CSV")->required();
    add_cut_flags(boot, boot_flags);
    boot->add_option("--frac", frac, "Subsample fraction")->capture_default_str();
    boot->add_option("--B", B, "Replicates")->capture_default_str();
    boot->add_option("--seed", boot_seed, "Seed (falls back to UCUT_SEED, then 0)");
    boot->add_option("--out", boot_out, "Summary JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kFail;
    }

    try {
        if (*cut) return cmd_cut(input, cut_flags, out, discoveries, threads);
        if (*simulate) return cmd_simulate(sim);
        if (*verify) return cmd_verify(suite, config_path, out_dir, threads);
        if (*boot) return cmd_bootstrap(boot_input, boot_flags, frac, B, boot_seed, boot_out, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFail;
    }
    return kFail;
}
