#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "navmorph/gradcheck.hpp"
#include "navmorph/losses.hpp"
#include "navmorph/rssm.hpp"

using namespace navmorph;

namespace {

ModelConfig tiny_config() {
    ModelConfig mc;
    mc.d_obs = 8;
    mc.d_x = 6;
    mc.d_h = 8;
    mc.d_s = 4;
    mc.d_a = 4;
    mc.hidden = 8;
    return mc;
}

WorldModel tiny_model(std::uint64_t seed = 2) {
    Rng rng(seed);
    return WorldModel(tiny_config(), rng);
}

Tensor random_obs(Rng& rng) { return Tensor::constant(rng.normal_vec(8)); }

} // namespace

TEST_CASE("encoder is deterministic with the configured output width") {
    WorldModel model = tiny_model();
    Rng rng(3);
    Tensor obs = random_obs(rng);
    Tensor a = model.encode_observation(obs);
    Tensor b = model.encode_observation(obs);
    CHECK(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
    }
    CHECK_THROWS_AS(model.encode_observation(Tensor::constant({1.0})), std::invalid_argument);
}

TEST_CASE("encoder gradients pass finite differences") {
    WorldModel model = tiny_model();
    Rng rng(4);
    Tensor obs = random_obs(rng);
    auto loss = [&]() { return sum(model.encode_observation(obs)); };
    CHECK(finite_difference_check(model.params(), loss).max_rel_error < 1e-4);
}

TEST_CASE("initial state: zero history, mode-dependent stochastic part") {
    WorldModel model = tiny_model();
    Rng rng(5);
    const auto st = model.initial_state(rng, SampleMode::sample);
    for (std::size_t i = 0; i < st.h.size(); ++i) {
        CHECK(st.h[i] == 0.0);
    }
    Rng rng_eval(5);
    const auto ev = model.initial_state(rng_eval, SampleMode::mean);
    for (std::size_t i = 0; i < ev.s.size(); ++i) {
        CHECK(ev.s[i] == 0.0);
    }
    Rng r1(9), r2(9);
    const auto s1 = model.initial_state(r1, SampleMode::sample);
    const auto s2 = model.initial_state(r2, SampleMode::sample);
    for (std::size_t i = 0; i < s1.s.size(); ++i) {
        CHECK(s1.s[i] == s2.s[i]);
    }
}

TEST_CASE("recurrent step shape, determinism, gradients") {
    WorldModel model = tiny_model();
    Rng rng(6);
    LatentState st{Tensor::constant(rng.normal_vec(8)), Tensor::constant(rng.normal_vec(4))};
    Tensor h1 = model.recurrent_step(st);
    Tensor h2 = model.recurrent_step(st);
    CHECK(h1.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(h1[i] == h2[i]);
    }
    auto loss = [&]() { return sum(model.recurrent_step(st)); };
    CHECK(finite_difference_check(model.params(), loss).max_rel_error < 1e-4);
}

TEST_CASE("posterior sigma stays above the floor on 1000 random inputs") {
    WorldModel model = tiny_model();
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        Tensor h = Tensor::constant(rng.normal_vec(8, 0.0, 3.0));
        Tensor a = Tensor::constant(rng.normal_vec(4, 0.0, 3.0));
        Tensor x = Tensor::constant(rng.normal_vec(6, 0.0, 3.0));
        const auto g = model.posterior(h, a, x);
        for (std::size_t d = 0; d < g.sigma.size(); ++d) {
            CHECK(g.sigma[d] >= 0.1);
        }
    }
}

TEST_CASE("zeroed output head gives zero mean and floor+ln2 sigma") {
    WorldModel model = tiny_model();
    std::fill(model.params().at("post.l1.w").tensor.mutable_value().begin(),
              model.params().at("post.l1.w").tensor.mutable_value().end(), 0.0);
    std::fill(model.params().at("post.l1.b").tensor.mutable_value().begin(),
              model.params().at("post.l1.b").tensor.mutable_value().end(), 0.0);
    Rng rng(8);
    const auto g = model.posterior(Tensor::constant(rng.normal_vec(8)),
                                   Tensor::constant(rng.normal_vec(4)),
                                   Tensor::constant(rng.normal_vec(6)));
    for (std::size_t d = 0; d < g.mu.size(); ++d) {
        CHECK(g.mu[d] == 0.0);
        CHECK(g.sigma[d] == doctest::Approx(0.1 + std::log(2.0)));
    }
    CHECK(std::abs(kl_diag_gaussian(g, g).item()) < 1e-12);
}

TEST_CASE("prior head: positive sigma, determinism, gradients") {
    WorldModel model = tiny_model();
    Rng rng(9);
    Tensor h = Tensor::constant(rng.normal_vec(8));
    Tensor a = Tensor::constant(rng.normal_vec(4));
    const auto g1 = model.prior(h, a);
    const auto g2 = model.prior(h, a);
    for (std::size_t d = 0; d < g1.sigma.size(); ++d) {
        CHECK(g1.sigma[d] > 0.0);
        CHECK(g1.mu[d] == g2.mu[d]);
        CHECK(g1.sigma[d] == g2.sigma[d]);
    }
    auto loss = [&]() {
        const auto g = model.prior(h, a);
        return add(sum(g.mu), sum(g.sigma));
    };
    CHECK(finite_difference_check(model.params(), loss).max_rel_error < 1e-4);
}

TEST_CASE("decoders: shapes, determinism, gradients") {
    WorldModel model = tiny_model();
    Rng rng(10);
    Tensor h = Tensor::constant(rng.normal_vec(8));
    Tensor s = Tensor::constant(rng.normal_vec(4));
    Tensor x1 = model.decode_visual(h, s);
    Tensor x2 = model.decode_visual(h, s);
    Tensor a1 = model.decode_action(h, s);
    CHECK(x1.size() == 6);
    CHECK(a1.size() == 2);
    for (std::size_t i = 0; i < x1.size(); ++i) {
        CHECK(x1[i] == x2[i]);
    }
    auto loss = [&]() { return add(sum(model.decode_visual(h, s)), sum(model.decode_action(h, s))); };
    CHECK(finite_difference_check(model.params(), loss).max_rel_error < 1e-4);
}

TEST_CASE("filter step uses the posterior mean in mean mode") {
    WorldModel model = tiny_model();
    Rng rng(11);
    LatentState prev{Tensor::constant(rng.normal_vec(8)), Tensor::constant(rng.normal_vec(4))};
    Tensor a_emb = model.embed_action(Tensor::constant({0.1, -0.1}));
    Tensor x = Tensor::constant(rng.normal_vec(6));
    Tensor h_enh = model.recurrent_step(prev);
    Rng noise(12);
    const auto r = model.filter_step(prev, a_emb, x, h_enh, noise, SampleMode::mean);
    for (std::size_t i = 0; i < r.state.s.size(); ++i) {
        CHECK(r.state.s[i] == r.posterior.mu[i]);
    }
    CHECK(r.posterior.mu.size() == r.prior.mu.size());
    CHECK(r.state.h.size() == 8);
}

TEST_CASE("three filtering steps reproduce the committed golden trace") {
    WorldModel model = tiny_model(2024);
    Rng obs_rng(31);
    Rng noise(32);
    LatentState st = model.initial_state(noise, SampleMode::sample);
    Tensor a_emb = model.embed_action(Tensor::constant({0.0, 0.0}));
    std::vector<double> flat;
    for (int t = 0; t < 3; ++t) {
        Tensor x = random_obs(obs_rng);
        Tensor x_emb = model.encode_observation(x);
        Tensor h = (t == 0) ? st.h : model.recurrent_step(st);
        const auto r = model.filter_step(st, a_emb, x_emb, h, noise, SampleMode::sample);
        st = r.state;
        flat.insert(flat.end(), st.s.value().begin(), st.s.value().end());
        a_emb = model.embed_action(Tensor::constant({0.05 * (t + 1), -0.05}));
    }

    const auto golden_path = std::filesystem::path(NAVMORPH_TEST_DATA) / "filter_golden.json";
    REQUIRE(std::filesystem::exists(golden_path));
    std::ifstream in(golden_path);
    nlohmann::json doc;
    in >> doc;
    const auto want = doc.at("trace").get<std::vector<double>>();
    REQUIRE(want.size() == flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        CHECK(flat[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("rollout contract") {
    WorldModel model = tiny_model();
    Rng rng(13);
    LatentState start{Tensor::constant(rng.normal_vec(8)), Tensor::constant(rng.normal_vec(4))};

    SUBCASE("zero horizon yields an empty sequence") {
        Rng noise(1);
        CHECK(model.imagine_rollout(start, {0, SampleMode::sample}, nullptr, noise).empty());
    }
    SUBCASE("negative horizon is rejected") {
        Rng noise(1);
        CHECK_THROWS_AS(model.imagine_rollout(start, {-1, SampleMode::sample}, nullptr, noise),
                        std::invalid_argument);
    }
    SUBCASE("horizon two emits exactly two actions and embeddings") {
        Rng noise(1);
        const auto steps = model.imagine_rollout(start, {2, SampleMode::sample}, nullptr, noise);
        REQUIRE(steps.size() == 2);
        for (const auto& s : steps) {
            CHECK(s.action_raw.size() == 2);
            CHECK(s.x_hat.size() == 6);
            CHECK(s.h.size() == 8);
            CHECK(s.s.size() == 4);
        }
    }
    SUBCASE("mean-mode rollouts are deterministic") {
        Rng n1(1), n2(2);
        const auto a = model.imagine_rollout(start, {3, SampleMode::mean}, nullptr, n1);
        const auto b = model.imagine_rollout(start, {3, SampleMode::mean}, nullptr, n2);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t d = 0; d < a[i].s.size(); ++d) {
                CHECK(a[i].s[d] == b[i].s[d]);
            }
            CHECK(a[i].action_raw[0] == b[i].action_raw[0]);
        }
    }
    SUBCASE("an enhancer is applied to every imagined history state") {
        Rng noise(1);
        int calls = 0;
        StateEnhancer enhancer = [&calls](const Tensor& h) {
            ++calls;
            return scale(h, 0.5);
        };
        model.imagine_rollout(start, {2, SampleMode::mean}, enhancer, noise);
        CHECK(calls == 2);
    }
}

TEST_CASE("full-model filtering pass matches finite differences") {
    WorldModel model = tiny_model(3);
    Rng data_rng(14);
    Tensor obs = random_obs(data_rng);
    Tensor target = Tensor::constant(data_rng.normal_vec(6));
    auto loss = [&]() {
        Rng noise(15);
        LatentState st = model.initial_state(noise, SampleMode::sample);
        Tensor a_emb = model.embed_action(Tensor::constant({0.1, 0.2}));
        Tensor x = model.encode_observation(obs);
        Tensor h = model.recurrent_step(st);
        const auto r = model.filter_step(st, a_emb, x, h, noise, SampleMode::sample);
        Tensor x_hat = model.decode_visual(r.state.h, r.state.s);
        Tensor a_hat = model.decode_action(r.state.h, r.state.s);
        Tensor kl = kl_diag_gaussian(r.posterior, r.prior);
        return add(add(sum_squares(sub(x_hat, target)), sum_squares(a_hat)), kl);
    };
    CHECK(finite_difference_check(model.params(), loss).max_rel_error < 1e-4);
}
