// Command-line surface: train / eval / sweep / metrics / gradcheck / oracle.
// Exit codes: 0 success, 1 assertion or acceptance failure, 2 config error.

#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "navmorph/checkpoint.hpp"
#include "navmorph/config.hpp"
#include "navmorph/harness.hpp"
#include "navmorph/io.hpp"

namespace nm = navmorph;

namespace {

struct CliState {
    std::string config_file;
    std::map<std::string, std::string> overrides; // flag values, applied over the file
};

// Registers --config plus one string flag per accepted config key, so flag
// precedence over the file can be resolved after parsing.
void add_config_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--config", state.config_file, "key=value config file (# comments)");
    for (const auto& doc : nm::config_key_docs()) {
        const std::string flag = "--" + doc.key;
        cmd->add_option_function<std::string>(
               flag, [&state, key = doc.key](const std::string& v) { state.overrides[key] = v; }, doc.doc)
            ->expected(1);
    }
}

nm::RunConfig resolve_config(const CliState& state) {
    nm::RunConfig cfg;
    if (!state.config_file.empty()) {
        nm::load_config_file(cfg, state.config_file);
    }
    if (const char* env_seed = std::getenv("NAVMORPH_SEED")) {
        nm::apply_config_value(cfg, "seed", env_seed);
    }
    for (const auto& [key, value] : state.overrides) {
        nm::apply_config_value(cfg, key, value);
    }
    return cfg;
}

std::vector<nm::ManifestEntry> episodes_for(const nm::RunConfig& cfg, nm::Split split) {
    if (!cfg.manifest.empty() && std::filesystem::exists(cfg.manifest)) {
        auto [entries, file_split] = nm::manifest_from_json(nm::read_file(cfg.manifest));
        if (file_split != split) {
            throw nm::ConfigError("manifest split '" + nm::split_name(file_split) +
                                  "' does not match requested split '" + nm::split_name(split) + "'");
        }
        return entries;
    }
    auto entries = nm::build_split(split, static_cast<std::size_t>(cfg.train.eval_episodes));
    if (!cfg.manifest.empty()) {
        nm::atomic_write(cfg.manifest, nm::manifest_to_json(entries, split));
    }
    return entries;
}

nm::EvalOptions eval_options(const nm::RunConfig& cfg) {
    nm::EvalOptions opts;
    opts.self_evolve = cfg.self_evolve;
    opts.seed = cfg.train.seed;
    opts.t_p = cfg.train.t_p;
    opts.proximity_weight = cfg.train.proximity_weight;
    opts.candidate_sigma = cfg.train.candidate_sigma;
    opts.candidate_count = cfg.train.candidate_count;
    return opts;
}

int cmd_train(const nm::RunConfig& cfg) {
    nm::DirLock lock(cfg.output_dir);
    const auto artifacts = nm::train(cfg.train);
    const std::filesystem::path out(cfg.output_dir);
    const auto ckpt = cfg.checkpoint.empty() ? (out / "checkpoint.json").string() : cfg.checkpoint;
    const auto cem = cfg.cem.empty() ? (out / "cem.json").string() : cfg.cem;
    nm::save_checkpoint(artifacts.model->params(), ckpt);
    artifacts.bank->save(cem);
    nm::atomic_write(out / "train_log.jsonl", nm::train_log_to_jsonl(artifacts.log));
    std::cout << "trained " << cfg.train.episodes << " episodes; checkpoint " << ckpt
              << "; memory " << cem << "\n";
    return 0;
}

int cmd_eval(const nm::RunConfig& cfg) {
    if (cfg.checkpoint.empty() || cfg.cem.empty()) {
        throw nm::ConfigError("eval requires --checkpoint and --cem");
    }
    nm::DirLock lock(cfg.output_dir);
    nm::Rng init_rng(0);
    nm::WorldModel model(cfg.train.model, init_rng);
    nm::load_checkpoint(model.params(), cfg.checkpoint);
    nm::MemoryBank bank = nm::MemoryBank::load(cfg.cem, static_cast<std::size_t>(cfg.train.k));

    const nm::Split split = nm::split_from_name(cfg.split);
    const auto episodes = episodes_for(cfg, split);
    const auto outcome = nm::evaluate_online(model, bank, episodes, split, eval_options(cfg));

    const std::filesystem::path out(cfg.output_dir);
    nm::atomic_write(out / "trajectory.jsonl", nm::trajectory_to_jsonl(outcome.trajectory));
    nm::atomic_write(out / "metrics.csv", nm::metrics_to_csv(outcome.episode_ids, outcome.per_episode));
    if (cfg.self_evolve) {
        bank.save(out / "cem_evolved.json");
    }
    const auto& m = outcome.summary;
    std::cout << "split " << cfg.split << " episodes " << episodes.size()
              << " SR " << m.sr << " SPL " << m.spl << " OSR " << m.osr
              << " NDTW " << m.ndtw << " SDTW " << m.sdtw << " NE " << m.ne << " TL " << m.tl << "\n";
    return 0;
}

int cmd_sweep(const nm::RunConfig& cfg, const std::string& sizes_csv) {
    nm::DirLock lock(cfg.output_dir);
    std::vector<int> sizes;
    std::stringstream ss(sizes_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            sizes.push_back(std::stoi(item));
        }
    }
    const auto rows = nm::sweep_memory_size(sizes, cfg.train);
    const auto csv = nm::sweep_to_csv(rows);
    nm::atomic_write(std::filesystem::path(cfg.output_dir) / "sweep.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_metrics(const nm::RunConfig& cfg, const std::string& log_path) {
    const auto records = nm::trajectory_from_jsonl(nm::read_file(log_path));
    if (records.empty()) {
        throw nm::ConfigError("trajectory log is empty: " + log_path);
    }
    // Episode ids are "<split>-<index>"; regenerate the split geometry to
    // recover references and goals.
    std::map<std::string, std::vector<nm::TrajectoryRecord>> grouped;
    std::size_t max_index = 0;
    nm::Split split = nm::Split::val_unseen;
    for (const auto& r : records) {
        grouped[r.episode_id].push_back(r);
        const auto dash = r.episode_id.rfind('-');
        if (dash == std::string::npos) {
            throw nm::ConfigError("unrecognized episode id '" + r.episode_id + "'");
        }
        split = nm::split_from_name(r.episode_id.substr(0, dash));
        max_index = std::max(max_index, static_cast<std::size_t>(std::stoul(r.episode_id.substr(dash + 1))));
    }
    const auto entries = nm::build_split(split, max_index + 1);

    std::vector<std::string> ids;
    std::vector<nm::MetricReport> reports;
    for (const auto& [id, recs] : grouped) {
        const std::size_t index = std::stoul(id.substr(id.rfind('-') + 1));
        const nm::EpisodeSpec spec = nm::episode_from_entry(entries.at(index), nm::split_shift(split));
        nm::Trajectory traj;
        traj.positions.push_back(spec.start);
        for (const auto& r : recs) {
            traj.positions.push_back(r.position);
        }
        traj.reference = nm::reference_path(spec);
        traj.goal = spec.goal;
        traj.shortest_path_length = std::max(nm::path_length(traj.reference), 1e-6);
        traj.success_threshold = spec.success_radius;
        ids.push_back(id);
        reports.push_back(nm::evaluate(traj));
    }
    std::cout << nm::metrics_to_csv(ids, reports);
    return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
    const auto report = nm::full_model_gradcheck(seed);
    std::cout << "gradcheck: " << report.checked << " parameters, max relative error "
              << report.max_rel_error << " (worst " << report.worst_param << ")\n";
    return report.max_rel_error < 1e-4 ? 0 : 1;
}

int cmd_oracle(std::uint64_t seed, int cases, int fit_steps) {
    int violations = 0;
    double worst_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cases; ++i) {
        const auto r = nm::elbo_oracle_check(seed + static_cast<std::uint64_t>(i));
        if (r.elbo > r.exact_loglik + 1e-6) {
            ++violations;
        }
        worst_gap = std::min(worst_gap, r.gap);
    }
    const auto tight = nm::elbo_oracle_tight(seed);
    const auto fit = nm::elbo_fit(seed, fit_steps);
    std::cout << "oracle: " << cases << " instances, " << violations
              << " bound violations, smallest gap " << worst_gap << "\n";
    std::cout << "oracle: tight-case gap " << tight.gap << "\n";
    std::cout << "oracle: fit gap " << fit.initial_gap << " -> " << fit.final_gap << "\n";
    const bool ok = violations == 0 && std::abs(tight.gap) < 1e-6 && fit.final_gap < fit.initial_gap;
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-evolving latent world model on a synthetic navigation benchmark"};
    app.require_subcommand(1);

    CliState train_state, eval_state, sweep_state, metrics_state;
    std::string sweep_sizes = "16,64,256";
    std::string metrics_log;
    std::uint64_t tool_seed = 7;
    int oracle_cases = 100;
    int oracle_fit_steps = 500;

    auto* train_cmd = app.add_subcommand("train", "train a world model and memory bank");
    add_config_options(train_cmd, train_state);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model online");
    add_config_options(eval_cmd, eval_state);

    auto* sweep_cmd = app.add_subcommand("sweep", "train/evaluate across memory sizes");
    add_config_options(sweep_cmd, sweep_state);
    sweep_cmd->add_option("--sizes", sweep_sizes, "comma-separated bank sizes");

    auto* metrics_cmd = app.add_subcommand("metrics", "recompute metrics from a trajectory log");
    add_config_options(metrics_cmd, metrics_state);
    metrics_cmd->add_option("--log", metrics_log, "trajectory JSONL produced by eval")->required();

    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    gradcheck_cmd->add_option("--seed", tool_seed, "suite seed");

    auto* oracle_cmd = app.add_subcommand("oracle", "variational bound vs exact filter likelihood");
    oracle_cmd->add_option("--seed", tool_seed, "instance seed");
    oracle_cmd->add_option("--cases", oracle_cases, "number of random instances");
    oracle_cmd->add_option("--fit-steps", oracle_fit_steps, "gradient steps for the fitting check");

    try {
        app.parse(argc, argv);
        if (train_cmd->parsed()) {
            return cmd_train(resolve_config(train_state));
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(resolve_config(eval_state));
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(resolve_config(sweep_state), sweep_sizes);
        }
        if (metrics_cmd->parsed()) {
            return cmd_metrics(resolve_config(metrics_state), metrics_log);
        }
        if (gradcheck_cmd->parsed()) {
            return cmd_gradcheck(tool_seed);
        }
        if (oracle_cmd->parsed()) {
            return cmd_oracle(tool_seed, oracle_cases, oracle_fit_steps);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const nm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
