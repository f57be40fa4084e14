#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "ostro/config.hpp"
#include "ostro/registry.hpp"
#include "ostro/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) {
        std::stringstream inner(token);
        double v;
        while (inner >> v) out.push_back(v);
        if (!inner.eof()) throw UsageError("cannot parse number list: " + text);
    }
    return out;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
    std::map<std::string, double> params;
    for (const std::string& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw UsageError("--param expects key=value, got: " + item);
        const std::string key = item.substr(0, eq);
        try {
            size_t pos = 0;
            const double value = std::stod(item.substr(eq + 1), &pos);
            if (pos != item.size() - eq - 1) throw std::invalid_argument(item);
            params[key] = value;
        } catch (const std::exception&) {
            throw UsageError("--param value for '" + key + "' is not a number");
        }
    }
    return params;
}

ostro::CanonicalState state_from_numbers(const std::vector<double>& values, int dim_k) {
    if (static_cast<int>(values.size()) != 4 * dim_k) {
        std::ostringstream os;
        os << "state needs " << 4 * dim_k << " values (4 blocks of K=" << dim_k
           << "), got " << values.size();
        throw UsageError(os.str());
    }
    ostro::Vec x(4 * dim_k);
    for (size_t i = 0; i < values.size(); ++i) x[i] = values[i];
    return ostro::unflatten(x);
}

nlohmann::json matrix_to_json(const ostro::Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (long r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json vec_to_json(const ostro::Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

// -------------------------------------------------------------------------
// derive
// -------------------------------------------------------------------------

int cmd_derive(const ostro::RunConfig& cfg, const std::string& state_text,
               const std::string& jet_text, const std::string& format, int max_level) {
    const ostro::BuiltModel model = ostro::build_model(cfg.model, cfg.params);
    const int k = model.dim_k;

    ostro::CanonicalState state = ostro::CanonicalState::Zero(k);
    if (!state_text.empty() && !jet_text.empty())
        throw UsageError("give either --state or --jet, not both");
    if (!state_text.empty()) state = state_from_numbers(parse_numbers(state_text), k);
    if (!jet_text.empty()) {
        if (!model.spec) throw UsageError("model '" + cfg.model + "' has no jet coordinates");
        const std::vector<double> values = parse_numbers(jet_text);
        if (static_cast<int>(values.size()) != 4 * k)
            throw UsageError("jet needs 4K values (qbar, qbar', qbar'', qbar''')");
        ostro::Jet jet;
        jet.qbar = ostro::Vec::Map(values.data(), k);
        jet.qbar_dot = ostro::Vec::Map(values.data() + k, k);
        jet.qbar_ddot = ostro::Vec::Map(values.data() + 2 * k, k);
        jet.qbar_dddot = ostro::Vec::Map(values.data() + 3 * k, k);
        state = ostro::canonical_from_jet(*model.spec, jet);
    }

    const double H = model.system.energy(state);
    ostro::Vec primaries;
    ostro::ConstraintChain chain;
    if (model.spec) {
        primaries = ostro::primary_constraints(*model.spec, state);
        chain = ostro::build_constraint_chain(*model.spec, max_level,
                                              ostro::default_probe_states(k, 32, cfg.seed + 1));
    } else {
        primaries = model.constraints.evaluate(state);
        chain = model.constraints;
    }
    const ostro::Vec chain_values = chain.evaluate(state);

    if (format == "json") {
        nlohmann::json j;
        j["model"] = cfg.model;
        j["P1"] = vec_to_json(state.P1);
        j["P2"] = vec_to_json(state.P2);
        j["H"] = H;
        j["constraints"] = vec_to_json(primaries);
        nlohmann::json jc;
        jc["level"] = chain.closure.level;
        jc["closed"] = chain.closure.closed;
        jc["coefficients"] = chain.closure.closed ? matrix_to_json(chain.closure.coefficients)
                                                  : nlohmann::json::array();
        jc["values"] = vec_to_json(chain_values);
        j["chain"] = std::move(jc);
        std::cout << j.dump(1) << '\n';
    } else if (format == "text") {
        std::cout << "model: " << cfg.model << '\n';
        auto print_vec = [](const char* label, const ostro::Vec& v) {
            std::cout << label << ":";
            for (long i = 0; i < v.size(); ++i) std::cout << ' ' << fmt17(v[i]);
            std::cout << '\n';
        };
        print_vec("P1", state.P1);
        print_vec("P2", state.P2);
        std::cout << "H: " << fmt17(H) << '\n';
        print_vec("constraints", primaries);
        std::cout << "chain: closed=" << (chain.closure.closed ? "true" : "false")
                  << " level=" << chain.closure.level << '\n';
        print_vec("chain values", chain_values);
        if (chain.closure.closed) {
            for (long r = 0; r < chain.closure.coefficients.rows(); ++r) {
                std::cout << "closure coefficients[" << r << "]:";
                for (long c = 0; c < chain.closure.coefficients.cols(); ++c)
                    std::cout << ' ' << fmt17(chain.closure.coefficients(r, c));
                std::cout << '\n';
            }
        }
    } else {
        throw UsageError("derive format must be text or json");
    }
    return kExitOk;
}

// -------------------------------------------------------------------------
// integrate
// -------------------------------------------------------------------------

std::vector<ostro::CanonicalState> read_batch_file(const std::string& path, int dim_k) {
    std::ifstream in(path);
    if (!in) throw ostro::Error("cannot open batch file: " + path);
    std::vector<ostro::CanonicalState> states;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        states.push_back(state_from_numbers(parse_numbers(line), dim_k));
    }
    if (states.empty()) throw UsageError("batch file has no states: " + path);
    return states;
}

std::string indexed_path(const std::string& path, size_t index) {
    const std::filesystem::path p(path);
    std::filesystem::path out = p.parent_path();
    out /= p.stem().string() + "_" + std::to_string(index) + p.extension().string();
    return out.string();
}

int cmd_integrate(const ostro::RunConfig& cfg, const std::string& state_text,
                  const std::string& batch_path) {
    if (cfg.dt <= 0.0) throw UsageError("dt must be positive");
    if (cfg.steps < 1) throw UsageError("steps must be at least 1");
    if (cfg.projection_every < 1) throw UsageError("projection-every must be at least 1");
    if (cfg.mode != "free" && cfg.mode != "projected")
        throw UsageError("mode must be free or projected");
    if (cfg.format != "csv" && cfg.format != "json")
        throw UsageError("format must be csv or json");

    const ostro::BuiltModel model = ostro::build_model(cfg.model, cfg.params);

    std::vector<ostro::CanonicalState> initials;
    if (!state_text.empty() && !batch_path.empty())
        throw UsageError("give either --state or --batch, not both");
    if (!state_text.empty()) {
        initials.push_back(state_from_numbers(parse_numbers(state_text), model.dim_k));
    } else if (!batch_path.empty()) {
        initials = read_batch_file(batch_path, model.dim_k);
    } else {
        // Seeded random initial state, entries uniform in [-1, 1].
        std::mt19937 rng(cfg.seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        ostro::Vec x(4 * model.dim_k);
        for (long i = 0; i < x.size(); ++i) x[i] = dist(rng);
        initials.push_back(ostro::unflatten(x));
    }

    ostro::IntegrateOptions opts;
    opts.dt = cfg.dt;
    opts.steps = cfg.steps;
    opts.mode = (cfg.mode == "projected") ? ostro::RunMode::projected : ostro::RunMode::free;
    opts.chain = &model.constraints;
    opts.projection_every = cfg.projection_every;

    const std::string output = cfg.output.empty() ? ("trajectory." + cfg.format) : cfg.output;
    const bool batch = initials.size() > 1;

    std::vector<ostro::Trajectory> trajectories;
    if (batch)
        trajectories = ostro::integrate_batch(model.system, initials, opts);
    else
        trajectories.push_back(ostro::integrate(model.system, initials.front(), opts));

    bool any_diverged = false;
    for (size_t i = 0; i < trajectories.size(); ++i) {
        const std::string path = batch ? indexed_path(output, i) : output;
        ostro::write_trajectory_file(trajectories[i], path, cfg.format);
        const ostro::DriftReport report = ostro::drift_report(trajectories[i]);
        any_diverged = any_diverged || report.diverged;
        std::cout << path << ": steps=" << trajectories[i].size() - 1
                  << " max_H_drift=" << fmt17(report.max_H_drift)
                  << " max_constraint_norm=" << fmt17(report.max_constraint_norm)
                  << " diverged=" << (report.diverged ? "true" : "false") << '\n';
    }
    return any_diverged ? kExitDiverged : kExitOk;
}

// -------------------------------------------------------------------------
// verify
// -------------------------------------------------------------------------

int cmd_verify(const ostro::RunConfig& cfg, bool inject_dv_error) {
    ostro::VerifyOptions options;
    options.corrupt_dv = inject_dv_error;
    const std::vector<ostro::CheckResult> checks =
        ostro::run_verification(cfg.model, cfg.params, options);
    bool all_pass = true;
    for (const auto& check : checks) {
        all_pass = all_pass && check.pass;
        std::cout << (check.pass ? "ok   " : "FAIL ") << check.name << " (" << check.detail
                  << ")\n";
    }
    std::cout << (all_pass ? "all checks passed" : "verification failed") << '\n';
    return all_pass ? kExitOk : kExitVerifyFail;
}

int cmd_list_models() {
    for (const ostro::ModelInfo& info : ostro::list_models()) {
        std::cout << info.name << ": " << info.summary << "\n  defaults:";
        for (const auto& [key, value] : info.defaults)
            std::cout << ' ' << key << '=' << fmt17(value);
        std::cout << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"constrained fourth-order Hamiltonian dynamics"};
    app.require_subcommand(1);

    std::string config_path, state_text, jet_text, batch_path;
    std::vector<std::string> param_items;
    std::string model_flag, mode_flag, output_flag, format_flag;
    double dt_flag = 0.0;
    long steps_flag = 0;
    int every_flag = 0, max_level = 6;
    unsigned seed_flag = 0;
    bool inject_dv_error = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--model", model_flag, "model name (see list-models)");
        cmd->add_option("--param", param_items, "model parameter key=value (repeatable)");
        cmd->add_option("--config", config_path, "key-value config file");
    };

    CLI::App* derive = app.add_subcommand("derive", "canonical data at a point");
    add_common(derive);
    derive->add_option("--state", state_text, "canonical state, 4K comma-separated values");
    derive->add_option("--jet", jet_text, "jet (qbar, qbar', qbar'', qbar'''), 4K values");
    derive->add_option("--format", format_flag, "text|json (default text)");
    derive->add_option("--max-level", max_level, "constraint chain level cap");
    derive->add_option("--seed", seed_flag, "seed for chain probe states");

    CLI::App* integrate = app.add_subcommand("integrate", "fixed-step trajectory run");
    add_common(integrate);
    integrate->add_option("--dt", dt_flag, "time step");
    integrate->add_option("--steps", steps_flag, "number of steps");
    integrate->add_option("--mode", mode_flag, "free|projected");
    integrate->add_option("--projection-every", every_flag, "project every n steps");
    integrate->add_option("--output", output_flag, "trajectory file path");
    integrate->add_option("--format", format_flag, "csv|json");
    integrate->add_option("--seed", seed_flag, "seed for the random initial state");
    integrate->add_option("--state", state_text, "initial canonical state, 4K values");
    integrate->add_option("--batch", batch_path, "file with one initial state per line");

    CLI::App* verify = app.add_subcommand("verify", "run the model invariant suite");
    add_common(verify);
    verify->add_flag("--inject-dv-error", inject_dv_error)->group("");

    CLI::App* list = app.add_subcommand("list-models", "available models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        ostro::RunConfig cfg;
        if (!config_path.empty())
            ostro::apply_config(cfg, ostro::read_key_value_file(config_path));
        if (!model_flag.empty()) cfg.model = model_flag;
        for (const auto& [key, value] : parse_params(param_items)) cfg.params[key] = value;

        if (derive->parsed()) {
            if (derive->count("--seed")) cfg.seed = seed_flag;
            const std::string format = format_flag.empty() ? "text" : format_flag;
            return cmd_derive(cfg, state_text, jet_text, format, max_level);
        }
        if (integrate->parsed()) {
            if (integrate->count("--dt")) cfg.dt = dt_flag;
            if (integrate->count("--steps")) cfg.steps = steps_flag;
            if (integrate->count("--mode")) cfg.mode = mode_flag;
            if (integrate->count("--projection-every")) cfg.projection_every = every_flag;
            if (integrate->count("--output")) cfg.output = output_flag;
            if (integrate->count("--format")) cfg.format = format_flag;
            if (integrate->count("--seed")) cfg.seed = seed_flag;
            return cmd_integrate(cfg, state_text, batch_path);
        }
        if (verify->parsed()) return cmd_verify(cfg, inject_dv_error);
        if (list->parsed()) return cmd_list_models();
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ostro::Error& e) {
        const std::string what = e.what();
        std::cerr << "error: " << what << '\n';
        if (what.rfind("unknown model", 0) == 0 || what.rfind("unknown parameter", 0) == 0 ||
            what.rfind("config:", 0) == 0)
            return kExitUsage;
        if (what.find("output file") != std::string::npos ||
            what.find("batch file") != std::string::npos ||
            what.find("config file") != std::string::npos)
            return kExitIo;
        return kExitVerifyFail;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitVerifyFail;
    }
}
