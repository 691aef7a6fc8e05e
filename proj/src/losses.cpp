#include "navmorph/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace navmorph {

namespace {

void check_sigma_positive(const GaussianParams& g, const char* who) {
    for (double s : g.sigma.value()) {
        if (!(s > 0.0)) {
            throw std::domain_error(std::string(who) + ": sigma must be strictly positive");
        }
    }
}

std::vector<std::vector<double>> values_of(const std::vector<Tensor>& seq) {
    std::vector<std::vector<double>> out;
    out.reserve(seq.size());
    for (const auto& t : seq) {
        out.push_back(t.value());
    }
    return out;
}

double pair_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Tensor mean_squared_error(const std::vector<Tensor>& truth, const std::vector<Tensor>& pred,
                          const char* who) {
    if (truth.size() != pred.size()) {
        throw std::invalid_argument(std::string(who) + ": sequence length mismatch");
    }
    if (truth.empty()) {
        return Tensor::scalar(0.0);
    }
    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        acc = add(acc, sum_squares(sub(pred[i], truth[i])));
    }
    return scale(acc, 1.0 / static_cast<double>(truth.size()));
}

} // namespace

double embedding_sequence_scale(const std::vector<Tensor>& refs) {
    if (refs.size() < 2) {
        return 1.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < refs.size(); ++i) {
        total += pair_distance(refs[i].value(), refs[i + 1].value());
    }
    return std::max(total / static_cast<double>(refs.size() - 1), 1e-6);
}

Tensor kl_diag_gaussian(const GaussianParams& q, const GaussianParams& p) {
    if (q.dim() != p.dim()) {
        throw std::invalid_argument("kl_diag_gaussian: dimension mismatch");
    }
    check_sigma_positive(q, "kl_diag_gaussian(q)");
    check_sigma_positive(p, "kl_diag_gaussian(p)");
    // sum_i log(sp/sq) + (sq^2 + (mq - mp)^2) / (2 sp^2) - 1/2
    Tensor log_ratio = sub(log(p.sigma), log(q.sigma));
    Tensor num = add(square(q.sigma), square(sub(q.mu, p.mu)));
    Tensor quad = div(num, scale(square(p.sigma), 2.0));
    return sum(add_scalar(add(log_ratio, quad), -0.5));
}

DtwResult dtw_table(const std::vector<std::vector<double>>& ref,
                    const std::vector<std::vector<double>>& pred) {
    const std::size_t n = ref.size();
    const std::size_t m = pred.size();
    if (n == 0 || m == 0) {
        throw std::invalid_argument("dtw_table: sequences must be nonempty");
    }
    DtwResult result;
    result.table.assign(n * m, 0.0);
    auto cell = [&](std::size_t i, std::size_t j) -> double& { return result.table[i * m + j]; };

    cell(0, 0) = pair_distance(ref[0], pred[0]);
    for (std::size_t i = 1; i < n; ++i) {
        cell(i, 0) = cell(i - 1, 0) + pair_distance(ref[i], pred[0]);
    }
    for (std::size_t j = 1; j < m; ++j) {
        cell(0, j) = cell(0, j - 1) + pair_distance(ref[0], pred[j]);
    }
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 1; j < m; ++j) {
            const double best = std::min({cell(i - 1, j - 1), cell(i - 1, j), cell(i, j - 1)});
            cell(i, j) = pair_distance(ref[i], pred[j]) + best;
        }
    }
    result.cost = cell(n - 1, m - 1);

    // Backtrace; ties prefer diagonal, then stepping in ref, then in pred.
    std::size_t i = n - 1, j = m - 1;
    result.path.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = cell(i - 1, j - 1);
            const double up = cell(i - 1, j);
            const double left = cell(i, j - 1);
            if (diag <= up && diag <= left) {
                --i;
                --j;
            } else if (up <= left) {
                --i;
            } else {
                --j;
            }
        }
        result.path.emplace_back(i, j);
    }
    std::reverse(result.path.begin(), result.path.end());
    return result;
}

Tensor ndtw(const std::vector<Tensor>& ref, const std::vector<Tensor>& pred, double scale_len) {
    if (!(scale_len > 0.0)) {
        throw std::invalid_argument("ndtw: scale must be positive");
    }
    DtwResult alignment = dtw_table(values_of(ref), values_of(pred));
    Tensor cost = Tensor::scalar(0.0);
    for (const auto& [i, j] : alignment.path) {
        cost = add(cost, euclid_norm(sub(ref[i], pred[j])));
    }
    const double denom = static_cast<double>(ref.size()) * scale_len;
    return exp(scale(cost, -1.0 / denom));
}

double ndtw_value(const std::vector<std::vector<double>>& ref,
                  const std::vector<std::vector<double>>& pred, double scale_len) {
    if (!(scale_len > 0.0)) {
        throw std::invalid_argument("ndtw_value: scale must be positive");
    }
    const DtwResult alignment = dtw_table(ref, pred);
    return std::exp(-alignment.cost / (static_cast<double>(ref.size()) * scale_len));
}

Tensor ndtw_regularizer(const std::vector<Tensor>& refs, const PredictionGrid& preds,
                        int horizon, double scale_len, bool literal_horizon_norm) {
    if (horizon < 0) {
        throw std::invalid_argument("ndtw_regularizer: horizon must be nonnegative");
    }
    const std::size_t steps = preds.size();
    if (steps > refs.size()) {
        throw std::invalid_argument("ndtw_regularizer: more prediction rows than references");
    }
    Tensor total = Tensor::scalar(0.0);
    std::size_t terms = 0;
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t available = refs.size() - (t + 1);
        const std::size_t row_len = std::min({preds[t].size(), static_cast<std::size_t>(horizon), available});
        for (std::size_t j = 1; j <= row_len; ++j) {
            std::vector<Tensor> ref_prefix(refs.begin(), refs.begin() + static_cast<std::ptrdiff_t>(t + 1 + j));
            std::vector<Tensor> pred_prefix(refs.begin(), refs.begin() + static_cast<std::ptrdiff_t>(t + 1));
            pred_prefix.insert(pred_prefix.end(), preds[t].begin(), preds[t].begin() + static_cast<std::ptrdiff_t>(j));
            total = add(total, ndtw(ref_prefix, pred_prefix, scale_len));
            ++terms;
        }
    }
    if (terms == 0) {
        return Tensor::scalar(0.0);
    }
    const double denom = literal_horizon_norm ? static_cast<double>(horizon)
                                              : static_cast<double>(terms);
    return add_scalar(scale(total, -1.0 / denom), 1.0);
}

Tensor action_loss(const std::vector<Tensor>& teacher_actions,
                   const std::vector<Tensor>& predicted_actions,
                   const std::vector<Tensor>& teacher_positions,
                   const PredictionGrid& predicted_positions,
                   int horizon, const LossConfig& cfg) {
    Tensor l2 = scale(mean_squared_error(teacher_actions, predicted_actions, "action_loss"), cfg.l2_weight);
    if (predicted_positions.empty()) {
        return l2;
    }
    Tensor reg = ndtw_regularizer(teacher_positions, predicted_positions, horizon, cfg.ndtw_scale,
                                  cfg.literal_horizon_norm);
    return add(l2, reg);
}

Tensor reconstruction_loss(const std::vector<Tensor>& true_x,
                           const std::vector<Tensor>& pred_x,
                           const PredictionGrid& predicted_x,
                           int horizon, const LossConfig& cfg) {
    Tensor mse = mean_squared_error(true_x, pred_x, "reconstruction_loss");
    if (predicted_x.empty()) {
        return mse;
    }
    const double scale_len = (cfg.emb_scale > 0.0) ? cfg.emb_scale : embedding_sequence_scale(true_x);
    Tensor reg = ndtw_regularizer(true_x, predicted_x, horizon, scale_len, cfg.literal_horizon_norm);
    return add(mse, reg);
}

Tensor imitation_loss(const std::vector<Tensor>& teacher_targets,
                      const std::vector<Tensor>& policy_outputs) {
    if (teacher_targets.size() != policy_outputs.size()) {
        throw std::invalid_argument("imitation_loss: sequence length mismatch");
    }
    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t i = 0; i < teacher_targets.size(); ++i) {
        acc = add(acc, scale(sum_squares(sub(policy_outputs[i], teacher_targets[i])), 0.5));
    }
    return acc;
}

LossReport world_loss(const EpisodeLossInputs& in, const LossConfig& cfg) {
    const std::size_t T = in.recon.size();
    if (T == 0) {
        throw std::invalid_argument("world_loss: empty observed window");
    }
    if (in.policy_actions.size() != T || in.posteriors.size() != T || in.priors.size() != T) {
        throw std::invalid_argument("world_loss: observed-phase buffers are misaligned");
    }
    const std::size_t L = in.obs_embeddings.size();
    if (L < T || in.teacher_actions.size() != L || in.positions.size() != L + 1) {
        throw std::invalid_argument("world_loss: target buffers are misaligned");
    }
    if (in.emb_grid.size() > T || in.pos_grid.size() > T) {
        throw std::invalid_argument("world_loss: prediction grids exceed the observed window");
    }

    // Prediction-phase targets for the rollout taken at the last window
    // step (row T-1): decoded embeddings line up with observations T..,
    // while the emitted actions line up with teacher actions from T-1 (the
    // first emission re-estimates the window's final action).
    const std::size_t px = std::min(in.final_pred_x.size(), L - T);
    const std::size_t pa = std::min(in.final_pred_actions.size(), L - (T - 1));
    std::vector<Tensor> obs_window(in.obs_embeddings.begin(), in.obs_embeddings.begin() + static_cast<std::ptrdiff_t>(T));
    std::vector<Tensor> fut_x(in.obs_embeddings.begin() + static_cast<std::ptrdiff_t>(T),
                              in.obs_embeddings.begin() + static_cast<std::ptrdiff_t>(T + px));
    std::vector<Tensor> fut_x_hat(in.final_pred_x.begin(), in.final_pred_x.begin() + static_cast<std::ptrdiff_t>(px));
    std::vector<Tensor> teach_window(in.teacher_actions.begin(), in.teacher_actions.begin() + static_cast<std::ptrdiff_t>(T));
    std::vector<Tensor> fut_a(in.teacher_actions.begin() + static_cast<std::ptrdiff_t>(T - 1),
                              in.teacher_actions.begin() + static_cast<std::ptrdiff_t>(T - 1 + pa));
    std::vector<Tensor> fut_a_hat(in.final_pred_actions.begin(),
                                  in.final_pred_actions.begin() + static_cast<std::ptrdiff_t>(pa));

    Tensor l_re = reconstruction_loss(obs_window, in.recon, in.emb_grid, in.horizon, cfg);
    if (px > 0) {
        l_re = add(l_re, mean_squared_error(fut_x, fut_x_hat, "world_loss(pred recon)"));
    }

    Tensor l_ac = action_loss(teach_window, in.policy_actions, in.positions, in.pos_grid, in.horizon, cfg);
    if (pa > 0) {
        l_ac = add(l_ac, scale(mean_squared_error(fut_a, fut_a_hat, "world_loss(pred action)"), cfg.l2_weight));
    }

    LossReport report;
    report.per_step.resize(T);
    Tensor l_kl = Tensor::scalar(0.0);
    for (std::size_t t = 0; t < T; ++t) {
        Tensor kl_t = kl_diag_gaussian(in.posteriors[t], in.priors[t]);
        report.per_step[t].kl = kl_t.item();
        report.per_step[t].recon = sum_squares(sub(in.recon[t], in.obs_embeddings[t])).item();
        report.per_step[t].action = sum_squares(sub(in.policy_actions[t], in.teacher_actions[t])).item();
        l_kl = add(l_kl, kl_t);
    }

    Tensor l_il = imitation_loss(teach_window, in.policy_actions);
    Tensor total = add(add(l_re, l_ac), add(scale(l_kl, cfg.gamma), l_il));

    report.l_re = l_re.item();
    report.l_ac = l_ac.item();
    report.l_kl = l_kl.item();
    report.l_il = l_il.item();
    report.total = total.item();
    report.total_tensor = total;
    return report;
}

} // namespace navmorph
