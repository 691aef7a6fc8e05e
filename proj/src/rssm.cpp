#include "navmorph/rssm.hpp"

#include <stdexcept>

namespace navmorph {

WorldModel::WorldModel(const ModelConfig& cfg, Rng& init_rng)
    : cfg_(cfg),
      encoder_(params_, "enc", {cfg.d_obs, cfg.hidden, cfg.d_x}, init_rng),
      recurrent_(params_, "gru", cfg.d_h, cfg.d_s, init_rng),
      posterior_head_(params_, "post", {cfg.d_h + cfg.d_a + cfg.d_x, cfg.hidden, 2 * cfg.d_s}, init_rng),
      prior_head_(params_, "prior", {cfg.d_h + cfg.d_a, cfg.hidden, 2 * cfg.d_s}, init_rng),
      visual_decoder_(params_, "dec_x", {cfg.d_h + cfg.d_s, cfg.hidden, cfg.d_x}, init_rng),
      action_decoder_(params_, "policy", {cfg.d_h + cfg.d_s, cfg.hidden, 2}, init_rng),
      action_embed_(params_, "a_embed", 2, cfg.d_a, init_rng) {}

Tensor WorldModel::encode_observation(const Tensor& obs_feature) const {
    if (obs_feature.size() != cfg_.d_obs) {
        throw std::invalid_argument("encode_observation: expected d_obs = " + std::to_string(cfg_.d_obs));
    }
    return encoder_.forward(scale(obs_feature, cfg_.obs_scale));
}

LatentState WorldModel::initial_state(Rng& rng, SampleMode mode) const {
    LatentState st;
    st.h = Tensor::zeros(cfg_.d_h);
    if (mode == SampleMode::sample) {
        st.s = Tensor::constant(rng.normal_vec(cfg_.d_s));
    } else {
        st.s = Tensor::zeros(cfg_.d_s);
    }
    return st;
}

Tensor WorldModel::recurrent_step(const LatentState& prev) const {
    return recurrent_.forward(prev.h, prev.s);
}

GaussianParams WorldModel::gaussian_head(const Mlp& head, const Tensor& input) const {
    Tensor out = head.forward(input);
    GaussianParams g;
    g.mu = slice(out, 0, cfg_.d_s);
    g.sigma = softplus_floor(slice(out, cfg_.d_s, cfg_.d_s), cfg_.sigma_floor);
    return g;
}

GaussianParams WorldModel::posterior(const Tensor& h, const Tensor& a_prev_emb, const Tensor& x) const {
    return gaussian_head(posterior_head_, concat({h, a_prev_emb, x}));
}

GaussianParams WorldModel::prior(const Tensor& h, const Tensor& a_prev_emb) const {
    return gaussian_head(prior_head_, concat({h, a_prev_emb}));
}

Tensor WorldModel::decode_visual(const Tensor& h, const Tensor& s) const {
    return visual_decoder_.forward(concat({h, s}));
}

Tensor WorldModel::decode_action(const Tensor& h, const Tensor& s) const {
    return action_decoder_.forward(concat({h, s}));
}

Tensor WorldModel::embed_action(const Tensor& delta) const {
    if (delta.size() != 2) {
        throw std::invalid_argument("embed_action: delta must be 2-D");
    }
    return action_embed_.forward(delta);
}

WorldModel::FilterResult WorldModel::filter_step(const LatentState& prev, const Tensor& a_prev_emb,
                                                 const Tensor& obs_emb, const Tensor& enhanced_h,
                                                 Rng& rng, SampleMode mode) const {
    if (prev.h.size() != cfg_.d_h || enhanced_h.size() != cfg_.d_h) {
        throw std::invalid_argument("filter_step: deterministic state dimension mismatch");
    }
    FilterResult result;
    result.posterior = posterior(enhanced_h, a_prev_emb, obs_emb);
    result.prior = prior(enhanced_h, a_prev_emb);
    result.state.h = enhanced_h;
    if (mode == SampleMode::sample) {
        result.state.s = sample_gaussian(result.posterior.mu, result.posterior.sigma, rng);
    } else {
        result.state.s = result.posterior.mu;
    }
    return result;
}

std::vector<RolloutStep> WorldModel::imagine_rollout(const LatentState& start, const RolloutConfig& cfg,
                                                     const StateEnhancer& enhance, Rng& rng) const {
    if (cfg.horizon < 0) {
        throw std::invalid_argument("imagine_rollout: horizon must be nonnegative");
    }
    std::vector<RolloutStep> steps;
    steps.reserve(static_cast<std::size_t>(cfg.horizon));
    Tensor h = start.h;
    Tensor s = start.s;
    for (int j = 0; j < cfg.horizon; ++j) {
        Tensor action = decode_action(h, s);
        Tensor h_next = recurrent_.forward(h, s);
        if (enhance) {
            h_next = enhance(h_next);
        }
        GaussianParams p = prior(h_next, embed_action(action));
        Tensor s_next = (cfg.mode == SampleMode::sample) ? sample_gaussian(p.mu, p.sigma, rng) : p.mu;
        RolloutStep step;
        step.h = h_next;
        step.s = s_next;
        step.action_raw = action;
        step.x_hat = decode_visual(h_next, s_next);
        steps.push_back(step);
        h = h_next;
        s = s_next;
    }
    return steps;
}

} // namespace navmorph
