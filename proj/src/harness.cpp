#include "navmorph/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "navmorph/checkpoint.hpp"
#include "navmorph/io.hpp"
#include "navmorph/optimizer.hpp"

namespace navmorph {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

// Memory-enhanced deterministic state with the blend term held constant on
// the tape: gradients reach h only through the (1 - alpha) term. The
// initial all-zero state passes through untouched.
Tensor enhance_state(MemoryBank& bank, const Tensor& h_raw, bool evolve, FrozenReplay* replay = nullptr) {
    if (vec_norm(h_raw.value()) == 0.0) {
        return h_raw;
    }
    const double alpha = bank.config().alpha;
    std::vector<double> blended;
    if (replay && !replay->recording) {
        blended = replay->blends.at(replay->blend_cursor++);
    } else {
        if (evolve) {
            auto outcome = bank.enhance_and_evolve(h_raw.value());
            blended = std::move(outcome.blended);
        } else {
            const auto retrieval = bank.retrieve_topk(h_raw.value());
            blended = bank.blend(retrieval);
        }
        if (replay) {
            replay->blends.push_back(blended);
        }
    }
    for (auto& b : blended) {
        b *= alpha;
    }
    return add(scale(h_raw, 1.0 - alpha), Tensor::constant(std::move(blended)));
}

StateEnhancer make_rollout_enhancer(MemoryBank& bank, FrozenReplay* replay = nullptr) {
    return [&bank, replay](const Tensor& h) { return enhance_state(bank, h, /*evolve=*/false, replay); };
}

Point clip_step(const Point& delta, double max_len) {
    const double len = std::hypot(delta[0], delta[1]);
    if (len <= max_len || len == 0.0) {
        return delta;
    }
    const double f = max_len / len;
    return {delta[0] * f, delta[1] * f};
}

std::string episode_id(Split split, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", index);
    return split_name(split) + "-" + buf;
}

} // namespace

EpisodeTrace roll_training_episode(const WorldModel& model, MemoryBank& bank,
                                   EpisodeRuntime& env, Rng& rng, int t_p, double mix,
                                   FrozenReplay* replay) {
    EpisodeTrace trace;
    auto& in = trace.loss_inputs;
    in.horizon = t_p;

    LatentState state = model.initial_state(rng, SampleMode::sample);
    Tensor a_prev_emb = model.embed_action(Tensor::constant({0.0, 0.0}));
    std::vector<double> obs = env.observe();
    trace.visited.push_back(env.position());
    in.positions.push_back(Tensor::constant({env.position()[0], env.position()[1]}));

    const auto rollout_enhancer = make_rollout_enhancer(bank, replay);

    while (!env.done()) {
        Tensor x_t = model.encode_observation(Tensor::constant(obs));
        Tensor h_raw = (in.recon.empty()) ? state.h : model.recurrent_step(state);
        Tensor h_enh = enhance_state(bank, h_raw, /*evolve=*/true, replay);
        auto filtered = model.filter_step(state, a_prev_emb, x_t, h_enh, rng, SampleMode::sample);
        // Step 1 matches the prior of the initial stochastic state.
        GaussianParams prior_t = in.recon.empty()
                                     ? GaussianParams::standard_normal(model.config().d_s)
                                     : filtered.prior;
        state = filtered.state;

        Tensor x_hat = model.decode_visual(state.h, state.s);
        Tensor a_hat = model.decode_action(state.h, state.s);

        RolloutConfig rc{t_p, SampleMode::sample};
        const auto rollout = model.imagine_rollout(state, rc, rollout_enhancer, rng);

        const Point pos_before = env.position();
        const Point teacher = env.teacher_action();
        Point executed;
        if (rng.uniform() < mix) {
            executed = teacher;
        } else {
            executed = clip_step({a_hat[0], a_hat[1]}, env.spec().max_step_len);
        }

        in.obs_embeddings.push_back(x_t);
        in.recon.push_back(x_hat);
        in.policy_actions.push_back(a_hat);
        in.teacher_actions.push_back(Tensor::constant({teacher[0], teacher[1]}));
        in.posteriors.push_back(filtered.posterior);
        in.priors.push_back(prior_t);

        std::vector<Tensor> emb_row;
        std::vector<Tensor> pos_row;
        std::vector<Tensor> act_row;
        Tensor pos_cursor = Tensor::constant({pos_before[0], pos_before[1]});
        for (const auto& step : rollout) {
            emb_row.push_back(step.x_hat);
            act_row.push_back(step.action_raw);
            pos_cursor = add(pos_cursor, step.action_raw);
            pos_row.push_back(pos_cursor);
        }
        in.emb_grid.push_back(std::move(emb_row));
        in.pos_grid.push_back(std::move(pos_row));
        trace.action_grid.push_back(std::move(act_row));

        const auto result = env.step(executed);
        trace.actions.push_back(executed);
        trace.teacher.push_back(teacher);
        trace.visited.push_back(result.position);
        in.positions.push_back(Tensor::constant({result.position[0], result.position[1]}));
        obs = result.observation;
        a_prev_emb = model.embed_action(Tensor::constant({executed[0], executed[1]}));
    }
    trace.reached_goal = env.reached_goal();

    // Observed window T = L - T_p; the tail steps become prediction
    // targets. The rollout recorded at the last window step becomes the
    // prediction-phase output; the grids are trimmed to the window.
    const std::size_t L = in.recon.size();
    const std::size_t T = (L > static_cast<std::size_t>(t_p)) ? L - static_cast<std::size_t>(t_p)
                                                              : L;
    in.recon.resize(T);
    in.policy_actions.resize(T);
    in.posteriors.resize(T);
    in.priors.resize(T);
    in.final_pred_x = in.emb_grid[T - 1];
    in.final_pred_actions = trace.action_grid[T - 1];
    in.emb_grid.resize(T);
    in.pos_grid.resize(T);
    return trace;
}

TrainArtifacts train(const TrainConfig& cfg) {
    if (cfg.episodes < 0 || cfg.t_p < 0) {
        throw ConfigError("train: episodes and t_p must be nonnegative");
    }
    Rng root(cfg.seed);
    Rng init_rng = root.fork(0x1417);
    auto model = std::make_shared<WorldModel>(cfg.model, init_rng);

    CemConfig cem_cfg;
    cem_cfg.n_m = static_cast<std::size_t>(cfg.n_m);
    cem_cfg.d_v = cfg.model.d_h;
    cem_cfg.k = static_cast<std::size_t>(std::min<int>(cfg.k, cfg.n_m));
    cem_cfg.alpha = cfg.alpha;
    cem_cfg.beta = cfg.beta;
    Rng cem_rng = root.fork(0xCE11);
    auto bank = std::make_shared<MemoryBank>(MemoryBank::init_random(cem_cfg, cem_rng));

    AdamOptimizer optimizer(cfg.lr);
    LossConfig loss_cfg;
    loss_cfg.gamma = cfg.gamma;
    loss_cfg.ndtw_scale = cfg.ndtw_scale;
    loss_cfg.l2_weight = cfg.l2_weight;
    loss_cfg.literal_horizon_norm = cfg.literal_horizon_norm;

    const auto manifest = build_split(Split::train_seen, static_cast<std::size_t>(cfg.episodes));

    TrainArtifacts artifacts;
    artifacts.model = model;
    artifacts.bank = bank;

    for (int e = 0; e < cfg.episodes; ++e) {
        const double frac = (cfg.episodes > 1) ? static_cast<double>(e) / (cfg.episodes - 1) : 0.0;
        const double mix = cfg.dagger_mix + (cfg.dagger_mix_final - cfg.dagger_mix) * frac;
        // Cosine decay to a tenth of the base rate steadies the end state
        // of short batch-size-1 runs.
        optimizer.set_learning_rate(cfg.lr * (0.55 + 0.45 * std::cos(3.14159265358979323846 * frac)));

        EpisodeSpec spec = episode_from_entry(manifest[static_cast<std::size_t>(e)], Shift::seen);
        spec.n_rays = cfg.model.d_obs - 4;
        Rng ep_rng = root.fork(0xE0000 + static_cast<std::uint64_t>(e));
        EpisodeRuntime env(spec, ep_rng.next_u64());

        Tape tape;
        LossReport report;
        {
            TapeScope scope(tape);
            EpisodeTrace trace = roll_training_episode(*model, *bank, env, ep_rng, cfg.t_p, mix);
            report = world_loss(trace.loss_inputs, loss_cfg);
            tape.backward(report.total_tensor);
        }
        optimizer.step(model->params());

        TrainStepLog log;
        log.episode = e;
        log.step = static_cast<int>(optimizer.step_count());
        log.l_re = report.l_re;
        log.l_ac = report.l_ac;
        log.l_kl = report.l_kl;
        log.l_il = report.l_il;
        log.total = report.total;
        artifacts.log.push_back(log);

        if (cfg.eval_every > 0 && (e + 1) % cfg.eval_every == 0) {
            MemoryBank probe = *bank;
            EvalOptions opts;
            opts.self_evolve = false;
            opts.seed = cfg.seed;
            opts.t_p = cfg.t_p;
            opts.proximity_weight = cfg.proximity_weight;
            opts.candidate_sigma = cfg.candidate_sigma;
            opts.candidate_count = cfg.candidate_count;
            const auto probe_eval = evaluate_online(*model, probe,
                                                    build_split(Split::val_seen, 10), Split::val_seen, opts);
            std::fprintf(stderr, "[train] episode %d: val_seen SR %.2f\n", e + 1, probe_eval.summary.sr);
        }
    }
    return artifacts;
}

std::string train_log_to_jsonl(const std::vector<TrainStepLog>& log) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& l : log) {
        out << "{\"episode\":" << l.episode << ",\"step\":" << l.step
            << ",\"l_re\":" << l.l_re << ",\"l_ac\":" << l.l_ac
            << ",\"l_kl\":" << l.l_kl << ",\"l_il\":" << l.l_il
            << ",\"total\":" << l.total << "}\n";
    }
    return out.str();
}

Point select_action(const std::vector<Point>& candidates, const Point& policy_mean,
                    const std::vector<Point>& imagined_path, const Point& position,
                    double proximity_weight) {
    if (candidates.empty()) {
        throw std::invalid_argument("select_action: empty candidate set");
    }
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Point& c = candidates[i];
        const double dx = c[0] - policy_mean[0];
        const double dy = c[1] - policy_mean[1];
        double score = -(dx * dx + dy * dy);
        if (!imagined_path.empty()) {
            const Point landed{position[0] + c[0], position[1] + c[1]};
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& p : imagined_path) {
                const double ex = landed[0] - p[0];
                const double ey = landed[1] - p[1];
                nearest = std::min(nearest, ex * ex + ey * ey);
            }
            score -= proximity_weight * nearest;
        }
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return candidates[best];
}

EvalOutcome evaluate_online(const WorldModel& model, MemoryBank& bank,
                            const std::vector<ManifestEntry>& episodes, Split split,
                            const EvalOptions& opts) {
    if (episodes.empty()) {
        throw ConfigError("evaluate_online: empty episode list");
    }
    NoGradScope no_grad;
    Rng root(opts.seed);
    bank.reset_counters();
    EvalOutcome outcome;

    for (std::size_t idx = 0; idx < episodes.size(); ++idx) {
        EpisodeSpec spec = episode_from_entry(episodes[idx], split_shift(split));
        spec.n_rays = model.config().d_obs - 4;
        // Streams keyed by episode identity, not list position, so frozen
        // metrics are invariant under episode reordering.
        Rng ep_rng = root.fork(episodes[idx].scene_seed);
        EpisodeRuntime env(spec, ep_rng.next_u64());
        const std::string id = episode_id(split, idx);

        LatentState state = model.initial_state(ep_rng, SampleMode::mean);
        Tensor a_prev_emb = model.embed_action(Tensor::constant({0.0, 0.0}));
        std::vector<double> obs = env.observe();
        std::vector<Point> visited{env.position()};
        bool first_step = true;
        int step_index = 0;
        const auto rollout_enhancer = make_rollout_enhancer(bank);
        // Plan produced by the previous step's rollout; candidates at the
        // current step are re-weighted toward it.
        std::vector<Point> planned_path;

        while (!env.done()) {
            Tensor x_t = model.encode_observation(Tensor::constant(obs));
            Tensor h_raw = first_step ? state.h : model.recurrent_step(state);
            first_step = false;
            Tensor h_enh = enhance_state(bank, h_raw, opts.self_evolve);
            auto filtered = model.filter_step(state, a_prev_emb, x_t, h_enh, ep_rng, SampleMode::mean);
            state = filtered.state;

            Tensor a_hat = model.decode_action(state.h, state.s);
            const Point policy_mean = clip_step({a_hat[0], a_hat[1]}, spec.max_step_len);

            std::vector<Point> candidates{policy_mean};
            for (int c = 1; c < opts.candidate_count; ++c) {
                candidates.push_back(clip_step({policy_mean[0] + opts.candidate_sigma * ep_rng.normal(),
                                                policy_mean[1] + opts.candidate_sigma * ep_rng.normal()},
                                               spec.max_step_len));
            }
            const Point chosen = select_action(candidates, policy_mean, planned_path, env.position(),
                                               opts.proximity_weight);

            // Foresight plan for the next decision.
            RolloutConfig rc{opts.t_p, SampleMode::mean};
            const auto rollout = model.imagine_rollout(state, rc, rollout_enhancer, ep_rng);
            planned_path.clear();
            Point cursor = env.position();
            for (const auto& rs : rollout) {
                cursor = {cursor[0] + rs.action_raw[0], cursor[1] + rs.action_raw[1]};
                planned_path.push_back(cursor);
            }

            const auto result = env.step(chosen);
            TrajectoryRecord rec;
            rec.episode_id = id;
            rec.scene_seed = spec.scene.scene_seed;
            rec.step = step_index++;
            rec.position = result.position;
            rec.action = chosen;
            rec.done = result.done;
            outcome.trajectory.push_back(rec);
            visited.push_back(result.position);
            obs = result.observation;
            a_prev_emb = model.embed_action(Tensor::constant({chosen[0], chosen[1]}));
        }

        Trajectory traj;
        traj.positions = visited;
        traj.reference = reference_path(spec);
        traj.goal = spec.goal;
        traj.shortest_path_length = std::max(path_length(traj.reference), 1e-6);
        traj.success_threshold = spec.success_radius;
        outcome.per_episode.push_back(evaluate(traj));
        outcome.episode_ids.push_back(id);
    }
    outcome.summary = aggregate(outcome.per_episode);
    return outcome;
}

EvalOutcome evaluate_random_baseline(const std::vector<ManifestEntry>& episodes, Split split,
                                     std::uint64_t seed) {
    if (episodes.empty()) {
        throw ConfigError("evaluate_random_baseline: empty episode list");
    }
    Rng root(seed);
    EvalOutcome outcome;
    for (std::size_t idx = 0; idx < episodes.size(); ++idx) {
        EpisodeSpec spec = episode_from_entry(episodes[idx], split_shift(split));
        Rng ep_rng = root.fork(episodes[idx].scene_seed);
        EpisodeRuntime env(spec, ep_rng.next_u64());
        std::vector<Point> visited{env.position()};
        int step_index = 0;
        while (!env.done()) {
            const double angle = ep_rng.uniform_range(0.0, kTwoPi);
            const double radius = spec.max_step_len * std::sqrt(ep_rng.uniform());
            const Point delta{radius * std::cos(angle), radius * std::sin(angle)};
            const auto result = env.step(delta);
            TrajectoryRecord rec;
            rec.episode_id = episode_id(split, idx);
            rec.scene_seed = spec.scene.scene_seed;
            rec.step = step_index++;
            rec.position = result.position;
            rec.action = delta;
            rec.done = result.done;
            outcome.trajectory.push_back(rec);
            visited.push_back(result.position);
        }
        Trajectory traj;
        traj.positions = visited;
        traj.reference = reference_path(spec);
        traj.goal = spec.goal;
        traj.shortest_path_length = std::max(path_length(traj.reference), 1e-6);
        traj.success_threshold = spec.success_radius;
        outcome.per_episode.push_back(evaluate(traj));
        outcome.episode_ids.push_back(episode_id(split, idx));
    }
    outcome.summary = aggregate(outcome.per_episode);
    return outcome;
}

GradCheckReport full_model_gradcheck(std::uint64_t seed) {
    // Reduced widths keep the 2N+1 loss evaluations fast; the objective is
    // the complete assembly (filtering, memory enhancement, rollouts,
    // warping regularizers, divergence, imitation).
    ModelConfig mc;
    mc.d_obs = 8;
    mc.d_x = 6;
    mc.d_h = 8;
    mc.d_s = 4;
    mc.d_a = 4;
    mc.hidden = 8;

    Rng root(seed);
    Rng init_rng = root.fork(0x1417);
    WorldModel model(mc, init_rng);

    CemConfig cem_cfg;
    cem_cfg.n_m = 12;
    cem_cfg.d_v = mc.d_h;
    cem_cfg.k = 4;
    Rng cem_rng = root.fork(0xCE11);
    const MemoryBank bank_init = MemoryBank::init_random(cem_cfg, cem_rng);

    const auto manifest = build_split(Split::train_seen, 1);
    EpisodeSpec spec = episode_from_entry(manifest[0], Shift::seen);
    spec.n_rays = mc.d_obs - 4;
    spec.max_steps = 5; // observed window of 3 with the default horizon

    const std::uint64_t ep_seed = root.fork(0xE0000).next_u64();
    FrozenReplay replay;

    auto loss_fn = [&]() -> Tensor {
        if (!replay.recording) {
            replay.blend_cursor = 0;
        }
        MemoryBank bank = bank_init;
        EpisodeRuntime env(spec, ep_seed);
        Rng ep_rng = root.fork(0x5EED);
        // Full teacher forcing pins the visited states, so perturbations
        // move only the network outputs.
        EpisodeTrace trace = roll_training_episode(model, bank, env, ep_rng, 2, /*mix=*/1.0, &replay);
        LossConfig cfg;
        if (replay.recording) {
            replay.emb_scale = embedding_sequence_scale(trace.loss_inputs.obs_embeddings);
        }
        cfg.emb_scale = replay.emb_scale;
        LossReport report = world_loss(trace.loss_inputs, cfg);
        if (replay.recording) {
            replay.rewind();
        }
        return report.total_tensor;
    };
    return finite_difference_check(model.params(), loss_fn, 1e-5);
}

// ---- linear-Gaussian oracle -------------------------------------------------

LinearGaussianInstance sample_lg_instance(Rng& rng, int horizon) {
    LinearGaussianInstance inst;
    inst.a = rng.uniform_range(-0.9, 0.9);
    inst.c = rng.uniform_range(0.5, 2.0);
    inst.q_var = rng.uniform_range(0.05, 1.0);
    inst.r_var = rng.uniform_range(0.05, 1.0);
    inst.prior_var = rng.uniform_range(0.5, 2.0);
    double s = std::sqrt(inst.prior_var) * rng.normal();
    for (int t = 0; t < horizon; ++t) {
        if (t > 0) {
            s = inst.a * s + std::sqrt(inst.q_var) * rng.normal();
        }
        inst.xs.push_back(inst.c * s + std::sqrt(inst.r_var) * rng.normal());
    }
    return inst;
}

double kalman_log_likelihood(const LinearGaussianInstance& inst) {
    double pred_mean = 0.0;
    double pred_var = inst.prior_var;
    double loglik = 0.0;
    for (std::size_t t = 0; t < inst.xs.size(); ++t) {
        const double innov_var = inst.c * inst.c * pred_var + inst.r_var;
        const double innov = inst.xs[t] - inst.c * pred_mean;
        loglik += -0.5 * std::log(kTwoPi * innov_var) - 0.5 * innov * innov / innov_var;
        const double gain = pred_var * inst.c / innov_var;
        const double mean = pred_mean + gain * innov;
        const double var = (1.0 - gain * inst.c) * pred_var;
        pred_mean = inst.a * mean;
        pred_var = inst.a * inst.a * var + inst.q_var;
    }
    return loglik;
}

namespace {

// Mean-field evidence bound for the instance, built from tensor ops so it
// can be both certified and fitted. sigma_t = softplus(raw_t) + floor.
Tensor lg_elbo(const LinearGaussianInstance& inst, const std::vector<Tensor>& mu,
               const std::vector<Tensor>& sigma) {
    const std::size_t T = inst.xs.size();
    Tensor elbo = Tensor::scalar(0.0);
    for (std::size_t t = 0; t < T; ++t) {
        // E_q[log N(x; c s, r)] = -log(2 pi r)/2 - ((x - c mu)^2 + c^2 sig^2) / (2r)
        Tensor err = add_scalar(scale(mu[t], -inst.c), inst.xs[t]);
        Tensor quad = add(square(err), scale(square(sigma[t]), inst.c * inst.c));
        Tensor recon = add_scalar(scale(sum(quad), -0.5 / inst.r_var),
                                  -0.5 * std::log(kTwoPi * inst.r_var));
        elbo = add(elbo, recon);

        Tensor kl;
        if (t == 0) {
            GaussianParams prior{Tensor::scalar(0.0), Tensor::scalar(std::sqrt(inst.prior_var))};
            kl = kl_diag_gaussian({mu[t], sigma[t]}, prior);
        } else {
            GaussianParams prior{scale(mu[t - 1], inst.a), Tensor::scalar(std::sqrt(inst.q_var))};
            kl = kl_diag_gaussian({mu[t], sigma[t]}, prior);
            // Exact expectation over q(s_{t-1}) adds the propagated variance.
            kl = add(kl, scale(sum(square(sigma[t - 1])), inst.a * inst.a / (2.0 * inst.q_var)));
        }
        elbo = sub(elbo, kl);
    }
    return elbo;
}

} // namespace

ElboReport elbo_oracle_check(std::uint64_t seed) {
    Rng rng(seed);
    const auto inst = sample_lg_instance(rng, 8);
    std::vector<Tensor> mu, sigma;
    for (std::size_t t = 0; t < inst.xs.size(); ++t) {
        mu.push_back(Tensor::scalar(rng.uniform_range(-2.0, 2.0)));
        sigma.push_back(Tensor::scalar(rng.uniform_range(0.1, 2.0)));
    }
    ElboReport report;
    report.elbo = lg_elbo(inst, mu, sigma).item();
    report.exact_loglik = kalman_log_likelihood(inst);
    report.gap = report.exact_loglik - report.elbo;
    return report;
}

ElboReport elbo_oracle_tight(std::uint64_t seed) {
    Rng rng(seed);
    LinearGaussianInstance inst;
    inst.a = 0.0; // factorized true posterior: the bound can be exact
    inst.c = rng.uniform_range(0.5, 2.0);
    inst.q_var = rng.uniform_range(0.05, 1.0);
    inst.r_var = rng.uniform_range(0.05, 1.0);
    inst.prior_var = rng.uniform_range(0.5, 2.0);
    inst.xs.push_back(rng.normal());

    const double precision = 1.0 / inst.prior_var + inst.c * inst.c / inst.r_var;
    const double post_var = 1.0 / precision;
    const double post_mean = post_var * inst.c * inst.xs[0] / inst.r_var;
    std::vector<Tensor> mu{Tensor::scalar(post_mean)};
    std::vector<Tensor> sigma{Tensor::scalar(std::sqrt(post_var))};

    ElboReport report;
    report.elbo = lg_elbo(inst, mu, sigma).item();
    report.exact_loglik = kalman_log_likelihood(inst);
    report.gap = report.exact_loglik - report.elbo;
    return report;
}

ElboFitReport elbo_fit(std::uint64_t seed, int steps) {
    Rng rng(seed);
    const auto inst = sample_lg_instance(rng, 8);
    const double loglik = kalman_log_likelihood(inst);

    ParamSet params;
    std::vector<Tensor> mu, raw_sigma;
    for (std::size_t t = 0; t < inst.xs.size(); ++t) {
        mu.push_back(params.add("mu" + std::to_string(t), {rng.uniform_range(-2.0, 2.0)}, {1}));
        raw_sigma.push_back(params.add("sig" + std::to_string(t), {rng.uniform_range(-1.0, 1.0)}, {1}));
    }
    auto bound = [&]() {
        std::vector<Tensor> sigma;
        sigma.reserve(raw_sigma.size());
        for (const auto& r : raw_sigma) {
            sigma.push_back(softplus_floor(r, 1e-4));
        }
        return lg_elbo(inst, mu, sigma);
    };

    ElboFitReport report;
    report.initial_gap = loglik - bound().item();
    AdamOptimizer optimizer(0.05);
    for (int i = 0; i < steps; ++i) {
        Tape tape;
        TapeScope scope(tape);
        Tensor objective = scale(bound(), -1.0); // maximize the bound
        tape.backward(objective);
        optimizer.step(params);
    }
    report.final_gap = loglik - bound().item();
    return report;
}

std::vector<SweepRow> sweep_memory_size(const std::vector<int>& sizes, const TrainConfig& base) {
    if (sizes.empty()) {
        throw ConfigError("sweep_memory_size: no sizes given");
    }
    std::vector<int> unique_sizes;
    for (int s : sizes) {
        if (std::find(unique_sizes.begin(), unique_sizes.end(), s) == unique_sizes.end()) {
            unique_sizes.push_back(s);
        }
    }
    std::vector<SweepRow> rows;
    const auto eval_split = build_split(Split::val_unseen, static_cast<std::size_t>(base.eval_episodes));
    for (int size : unique_sizes) {
        TrainConfig cfg = base;
        cfg.n_m = size;
        const auto artifacts = train(cfg);
        EvalOptions opts;
        opts.self_evolve = true;
        opts.seed = cfg.seed;
        opts.t_p = cfg.t_p;
        opts.proximity_weight = cfg.proximity_weight;
        opts.candidate_sigma = cfg.candidate_sigma;
        opts.candidate_count = cfg.candidate_count;
        const auto eval = evaluate_online(*artifacts.model, *artifacts.bank, eval_split,
                                          Split::val_unseen, opts);
        rows.push_back(SweepRow{size, eval.summary});
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out.precision(17);
    out << "n_m,sr,spl,osr,ndtw,sdtw\n";
    for (const auto& r : rows) {
        out << r.n_m << ',' << r.metrics.sr << ',' << r.metrics.spl << ',' << r.metrics.osr << ','
            << r.metrics.ndtw << ',' << r.metrics.sdtw << '\n';
    }
    return out.str();
}

TimingReport timing_report(const WorldModel& model, const MemoryBank& snapshot,
                           const std::vector<ManifestEntry>& episodes, Split split,
                           const EvalOptions& base_opts) {
    using clock = std::chrono::steady_clock;
    TimingReport report;

    MemoryBank frozen = snapshot;
    EvalOptions frozen_opts = base_opts;
    frozen_opts.self_evolve = false;
    const auto t0 = clock::now();
    evaluate_online(model, frozen, episodes, split, frozen_opts);
    const auto t1 = clock::now();
    report.frozen_evolve_calls = frozen.evolve_calls();

    MemoryBank evolving = snapshot;
    EvalOptions evolving_opts = base_opts;
    evolving_opts.self_evolve = true;
    const auto t2 = clock::now();
    evaluate_online(model, evolving, episodes, split, evolving_opts);
    const auto t3 = clock::now();
    report.evolving_evolve_applied = evolving.evolve_applied();

    const double n = static_cast<double>(episodes.size());
    report.frozen_s_per_episode = std::chrono::duration<double>(t1 - t0).count() / n;
    report.evolving_s_per_episode = std::chrono::duration<double>(t3 - t2).count() / n;
    report.overhead_ratio = report.evolving_s_per_episode / report.frozen_s_per_episode;
    return report;
}

} // namespace navmorph
