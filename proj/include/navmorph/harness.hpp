#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "navmorph/cem.hpp"
#include "navmorph/gradcheck.hpp"
#include "navmorph/losses.hpp"
#include "navmorph/metrics.hpp"
#include "navmorph/rssm.hpp"
#include "navmorph/synthenv.hpp"
#include "navmorph/trajectory_log.hpp"

namespace navmorph {

struct TrainConfig {
    int episodes = 300;
    int t_p = 2;                   // prediction horizon
    double gamma = 1e-3;           // KL weight
    double alpha = 0.7;            // memory enhancement factor
    double beta = 0.7;             // memory update factor
    int k = 16;                    // retrieval fan-in, clamped to n_m
    int n_m = 256;                 // desk-scale bank size; 1000 at paper scale
    std::uint64_t seed = 1;
    int eval_every = 0;            // 0 disables mid-training evaluation
    double dagger_mix = 0.7;       // teacher-execution probability at episode 0
    double dagger_mix_final = 0.3; // linear decay target
    double lr = 3e-4;
    double l2_weight = 1.0;
    double ndtw_scale = 0.5;
    bool literal_horizon_norm = false;
    double proximity_weight = 0.5;
    double candidate_sigma = 0.05;
    int candidate_count = 9;       // policy mean plus 8 perturbations
    int eval_episodes = 50;
    ModelConfig model;
};

struct TrainStepLog {
    int episode = 0;
    int step = 0; // optimizer step count
    double l_re = 0.0, l_ac = 0.0, l_kl = 0.0, l_il = 0.0, total = 0.0;
};

struct TrainArtifacts {
    std::shared_ptr<WorldModel> model;
    std::shared_ptr<MemoryBank> bank;
    std::vector<TrainStepLog> log;
};

TrainArtifacts train(const TrainConfig& cfg);

std::string train_log_to_jsonl(const std::vector<TrainStepLog>& log);

// Quantities the objective treats as constants (memory blends, the
// embedding warping scale), captured on one pass and replayed on
// finite-difference re-evaluations.
struct FrozenReplay {
    bool recording = true;
    std::vector<std::vector<double>> blends;
    std::size_t blend_cursor = 0;
    double emb_scale = 0.0;

    void rewind() {
        recording = false;
        blend_cursor = 0;
    }
};

// Everything recorded while rolling one episode under the model: the
// differentiable loss buffers plus the executed/teacher trajectories.
struct EpisodeTrace {
    EpisodeLossInputs loss_inputs;
    std::vector<Point> visited;                   // p_0 .. p_L
    std::vector<Point> actions;                   // executed deltas
    std::vector<Point> teacher;                   // teacher deltas per step
    std::vector<std::vector<Tensor>> action_grid; // rollout actions per step
    bool reached_goal = false;
};

// Rolls one training episode with DAgger mixing (teacher executed with
// probability mix) and a foresight rollout at every step. The bank evolves
// along the filtering path; rollouts only read it.
EpisodeTrace roll_training_episode(const WorldModel& model, MemoryBank& bank,
                                   EpisodeRuntime& env, Rng& rng, int t_p, double mix,
                                   FrozenReplay* replay = nullptr);

struct EvalOptions {
    bool self_evolve = true;
    std::uint64_t seed = 1;
    int t_p = 2;
    double proximity_weight = 0.5;
    double candidate_sigma = 0.05;
    int candidate_count = 9;
};

struct EvalOutcome {
    std::vector<std::string> episode_ids;
    std::vector<MetricReport> per_episode;
    MetricReport summary;
    std::vector<TrajectoryRecord> trajectory;
};

// Processes episodes strictly in order; the bank evolves across episode
// boundaries iff opts.self_evolve.
EvalOutcome evaluate_online(const WorldModel& model, MemoryBank& bank,
                            const std::vector<ManifestEntry>& episodes, Split split,
                            const EvalOptions& opts);

// Uniform random actions; the floor any trained policy must clear.
EvalOutcome evaluate_random_baseline(const std::vector<ManifestEntry>& episodes, Split split,
                                     std::uint64_t seed);

// Candidate re-weighting: penalize distance to the policy mean and to the
// nearest imagined path point; ties go to the lowest candidate index.
Point select_action(const std::vector<Point>& candidates, const Point& policy_mean,
                    const std::vector<Point>& imagined_path, const Point& position,
                    double proximity_weight);

// Central finite differences against analytic gradients for the complete
// objective on a short episode of a reduced-width model. Quantities the
// objective treats as constants (memory blends, the embedding warping
// scale) are recorded on the analytic pass and replayed during the
// numeric perturbations.
GradCheckReport full_model_gradcheck(std::uint64_t seed);

// ---- variational-bound certification against a linear-Gaussian oracle ----

struct LinearGaussianInstance {
    double a = 0.9;        // transition coefficient
    double c = 1.0;        // emission coefficient
    double q_var = 0.1;    // transition noise variance
    double r_var = 0.1;    // emission noise variance
    double prior_var = 1.0;
    std::vector<double> xs;
};

LinearGaussianInstance sample_lg_instance(Rng& rng, int horizon);
double kalman_log_likelihood(const LinearGaussianInstance& inst);

struct ElboReport {
    double elbo = 0.0;
    double exact_loglik = 0.0;
    double gap = 0.0;
};

// Random instance, random mean-field variational parameters: the bound must
// sit at or below the exact likelihood.
ElboReport elbo_oracle_check(std::uint64_t seed);

// One-step instance with the variational family containing the true
// posterior; the bound is tight.
ElboReport elbo_oracle_tight(std::uint64_t seed);

struct ElboFitReport {
    double initial_gap = 0.0;
    double final_gap = 0.0;
};

// Fits the variational parameters by gradient ascent on the bound.
ElboFitReport elbo_fit(std::uint64_t seed, int steps);

// ---- ablation harnesses ---------------------------------------------------

struct SweepRow {
    int n_m = 0;
    MetricReport metrics;
};

std::vector<SweepRow> sweep_memory_size(const std::vector<int>& sizes, const TrainConfig& base);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

struct TimingReport {
    double frozen_s_per_episode = 0.0;
    double evolving_s_per_episode = 0.0;
    double overhead_ratio = 0.0;
    std::uint64_t frozen_evolve_calls = 0;
    std::uint64_t evolving_evolve_applied = 0;
};

TimingReport timing_report(const WorldModel& model, const MemoryBank& snapshot,
                           const std::vector<ManifestEntry>& episodes, Split split,
                           const EvalOptions& base_opts);

} // namespace navmorph
