#pragma once

#include <functional>
#include <vector>

#include "navmorph/gaussian.hpp"
#include "navmorph/layers.hpp"

namespace navmorph {

struct LatentState {
    Tensor h; // deterministic history
    Tensor s; // stochastic state
};

enum class SampleMode { sample, mean };

struct RolloutConfig {
    int horizon = 2; // T_p
    SampleMode mode = SampleMode::sample;
};

struct RolloutStep {
    Tensor h;          // enhanced deterministic state
    Tensor s;          // predicted stochastic state
    Tensor action_raw; // delta-position prediction leading into this state
    Tensor x_hat;      // decoded visual embedding
};

struct ModelConfig {
    std::size_t d_obs = 20;
    std::size_t d_x = 32;
    std::size_t d_h = 64;
    std::size_t d_s = 16;
    std::size_t d_a = 16;
    std::size_t hidden = 64;
    double sigma_floor = 0.1;
    double obs_scale = 0.1; // maps arena-scale inputs into the tanh-friendly range
};

// Maps a raw deterministic state to its memory-enhanced version; identity
// when no memory is attached.
using StateEnhancer = std::function<Tensor(const Tensor&)>;

// Latent state-space model: observation encoder, shared recurrent core,
// posterior/prior Gaussian heads, visual and action decoders, and the
// open-loop foresight rollout.
class WorldModel {
public:
    WorldModel(const ModelConfig& cfg, Rng& init_rng);

    const ModelConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    Tensor encode_observation(const Tensor& obs_feature) const;

    // h = 0 always; s is a standard-normal draw when sampling, zero in mean
    // mode.
    LatentState initial_state(Rng& rng, SampleMode mode) const;

    Tensor recurrent_step(const LatentState& prev) const;

    GaussianParams posterior(const Tensor& h, const Tensor& a_prev_emb, const Tensor& x) const;
    GaussianParams prior(const Tensor& h, const Tensor& a_prev_emb) const;

    Tensor decode_visual(const Tensor& h, const Tensor& s) const;
    Tensor decode_action(const Tensor& h, const Tensor& s) const;
    Tensor embed_action(const Tensor& delta) const;

    struct FilterResult {
        LatentState state;
        GaussianParams posterior;
        GaussianParams prior;
    };

    // One filtering update. enhanced_h is the memory-enhanced h_t for this
    // step; a_prev_emb embeds the executed previous action. The stochastic
    // state is drawn from the posterior (mean in eval mode).
    FilterResult filter_step(const LatentState& prev, const Tensor& a_prev_emb, const Tensor& obs_emb,
                             const Tensor& enhanced_h, Rng& rng, SampleMode mode) const;

    // Open-loop imagination for cfg.horizon steps: action from the policy,
    // recurrent advance, memory enhancement, prior draw, visual decode.
    std::vector<RolloutStep> imagine_rollout(const LatentState& start, const RolloutConfig& cfg,
                                             const StateEnhancer& enhance, Rng& rng) const;

private:
    GaussianParams gaussian_head(const Mlp& head, const Tensor& input) const;

    ModelConfig cfg_;
    ParamSet params_;
    Mlp encoder_;
    GruCell recurrent_;
    Mlp posterior_head_;
    Mlp prior_head_;
    Mlp visual_decoder_;
    Mlp action_decoder_;
    AffineLayer action_embed_;
};

} // namespace navmorph
