#pragma once

#include <array>
#include <utility>
#include <vector>

#include "navmorph/gaussian.hpp"
#include "navmorph/tensor.hpp"

namespace navmorph {

struct LossConfig {
    double gamma = 1e-3;      // KL weight
    double ndtw_scale = 0.5;  // distance scale d_th for position sequences
    double l2_weight = 1.0;   // weight of the squared action error
    bool literal_horizon_norm = false; // divide the warping sum by T_p only (the un-normalized form)
    double emb_scale = 0.0;   // embedding warping scale; 0 derives it from the references
};

struct StepLoss {
    double recon = 0.0;
    double action = 0.0;
    double kl = 0.0;
};

struct LossReport {
    double l_re = 0.0;
    double l_ac = 0.0;
    double l_kl = 0.0;
    double l_il = 0.0;
    double total = 0.0;
    std::vector<StepLoss> per_step;
    Tensor total_tensor; // differentiable; total == total_tensor value
};

// Closed-form KL(q || p) for diagonal Gaussians; differentiable w.r.t. both.
Tensor kl_diag_gaussian(const GaussianParams& q, const GaussianParams& p);

struct DtwResult {
    std::vector<double> table; // n x m cumulative costs, row-major
    double cost = 0.0;
    // Optimal alignment, (ref index, pred index) pairs from (0,0) to
    // (n-1, m-1). Backtrace ties prefer diagonal, then the ref axis, then
    // the pred axis.
    std::vector<std::pair<std::size_t, std::size_t>> path;
};

// Standard O(n*m) dynamic program over pairwise Euclidean distances.
DtwResult dtw_table(const std::vector<std::vector<double>>& ref,
                    const std::vector<std::vector<double>>& pred);

// exp(-cost / (|ref| * scale)) in (0, 1]. The alignment is recomputed from
// values and then frozen: gradients flow through the pairwise distances on
// the optimal path only.
Tensor ndtw(const std::vector<Tensor>& ref, const std::vector<Tensor>& pred, double scale);

double ndtw_value(const std::vector<std::vector<double>>& ref,
                  const std::vector<std::vector<double>>& pred, double scale);

// Predictions indexed [t][j]: entry (t, j) is the element predicted for
// step t+1+j from the state at step t+1 (0-based t). Rows may be shorter
// than the horizon when ground truth runs out.
using PredictionGrid = std::vector<std::vector<Tensor>>;

// Warping regularizer over prediction prefixes: each predicted prefix is
// the ground-truth prefix through t spliced with the predictions for
// t+1..t+j. Returns 1 - (normalized) sum of prefix NDTW scores; the
// normalizer is the number of evaluated (t, j) terms (== T * T_p when no
// truncation occurs), or T_p alone in literal mode.
Tensor ndtw_regularizer(const std::vector<Tensor>& refs, const PredictionGrid& preds,
                        int horizon, double scale, bool literal_horizon_norm = false);

// l2_weight * mean squared action error plus the warping regularizer over
// position sequences.
Tensor action_loss(const std::vector<Tensor>& teacher_actions,
                   const std::vector<Tensor>& predicted_actions,
                   const std::vector<Tensor>& teacher_positions,
                   const PredictionGrid& predicted_positions,
                   int horizon, const LossConfig& cfg);

// Mean squared embedding error plus the warping regularizer over embedding
// sequences. The embedding scale is the mean consecutive-reference
// distance of this episode.
Tensor reconstruction_loss(const std::vector<Tensor>& true_x,
                           const std::vector<Tensor>& pred_x,
                           const PredictionGrid& predicted_x,
                           int horizon, const LossConfig& cfg);

// Mean distance between consecutive reference elements (>= 1e-6); the
// per-episode estimate used as the embedding warping scale. Treated as a
// constant during differentiation.
double embedding_sequence_scale(const std::vector<Tensor>& refs);

// Teacher-action likelihood under a unit-variance policy output:
// sum_t 0.5 * ||a_hat_t - a*_t||^2.
Tensor imitation_loss(const std::vector<Tensor>& teacher_targets,
                      const std::vector<Tensor>& policy_outputs);

// Everything the assembled objective needs from one episode. Observed
// window t = 1..T; step indices are 0-based in the buffers. Targets
// (obs_embeddings, teacher_actions, positions) run through the full
// executed length L >= T; prediction-phase targets are taken from
// T..min(T+T_p, L)-1.
struct EpisodeLossInputs {
    std::vector<Tensor> obs_embeddings;  // x_t targets, length L (constants)
    std::vector<Tensor> recon;           // decoded x_hat_t, length T
    std::vector<Tensor> policy_actions;  // policy outputs, length T
    std::vector<Tensor> teacher_actions; // a*_t targets, length L (constants)
    std::vector<GaussianParams> posteriors; // length T
    std::vector<GaussianParams> priors;     // length T
    std::vector<Tensor> positions;       // visited positions p_t, length L (constants)
    std::vector<Tensor> final_pred_x;    // rollout decodes from step T, length <= T_p
    std::vector<Tensor> final_pred_actions;
    PredictionGrid emb_grid;             // length T rows
    PredictionGrid pos_grid;             // length T rows
    int horizon = 2;                     // T_p
};

LossReport world_loss(const EpisodeLossInputs& in, const LossConfig& cfg);

} // namespace navmorph
