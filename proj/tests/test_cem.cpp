#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "navmorph/cem.hpp"
#include "navmorph/io.hpp"
#include "navmorph/tensor.hpp"

#include "oracles.hpp"

using namespace navmorph;

namespace {

MemoryBank small_bank(std::size_t n_m, std::size_t d_v, std::size_t k, double alpha, double beta,
                      std::uint64_t seed) {
    CemConfig cfg;
    cfg.n_m = n_m;
    cfg.d_v = d_v;
    cfg.k = k;
    cfg.alpha = alpha;
    cfg.beta = beta;
    Rng rng(seed);
    return MemoryBank::init_random(cfg, rng);
}

} // namespace

TEST_CASE("random init is reproducible and respects the paper-scale capacity") {
    MemoryBank a = small_bank(1000, 8, 16, 0.7, 0.7, 5);
    MemoryBank b = small_bank(1000, 8, 16, 0.7, 0.7, 5);
    CHECK(a.entry_count() == 1000);
    CHECK(a.raw() == b.raw());
}

TEST_CASE("random init yields no zero-norm entries across seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        MemoryBank bank = small_bank(16, 6, 4, 0.7, 0.7, seed);
        for (std::size_t m = 0; m < bank.entry_count(); ++m) {
            double norm = 0.0;
            for (std::size_t i = 0; i < bank.dim(); ++i) {
                norm += bank.entry(m)[i] * bank.entry(m)[i];
            }
            CHECK(norm > 0.0);
        }
    }
}

TEST_CASE("K must not exceed capacity") {
    CemConfig cfg;
    cfg.n_m = 4;
    cfg.d_v = 2;
    cfg.k = 5;
    Rng rng(1);
    CHECK_THROWS_AS(MemoryBank::init_random(cfg, rng), ConfigError);
}

TEST_CASE("an entry equal to the query is retrieved with similarity 1") {
    MemoryBank bank = small_bank(8, 4, 2, 0.7, 0.7, 3);
    std::vector<double> q(bank.entry(5), bank.entry(5) + 4);
    const auto r = bank.retrieve_topk(q);
    CHECK(r.indices[0] == 5);
    CHECK(r.raw_sims[0] == doctest::Approx(1.0));
}

TEST_CASE("K=1 weight is exactly one") {
    MemoryBank bank = small_bank(8, 4, 1, 0.7, 0.7, 4);
    const auto r = bank.retrieve_topk({1.0, 0.0, 0.0, 0.0});
    CHECK(r.weights.size() == 1);
    CHECK(r.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("zero-norm query is a domain error") {
    MemoryBank bank = small_bank(8, 4, 2, 0.7, 0.7, 4);
    CHECK_THROWS_AS(bank.retrieve_topk({0.0, 0.0, 0.0, 0.0}), std::domain_error);
}

TEST_CASE("retrieval matches the exhaustive scan on 1000 random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n_m = static_cast<std::size_t>(rng.uniform_int(2, 24));
        const std::size_t d_v = static_cast<std::size_t>(rng.uniform_int(2, 6));
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(n_m)));
        MemoryBank bank = small_bank(n_m, d_v, k, 0.7, 0.7, rng.next_u64());
        std::vector<double> q = rng.normal_vec(d_v);
        const auto got = bank.retrieve_topk(q);
        const auto want = oracles::brute_force_topk(bank, q);
        REQUIRE(got.indices == want.indices);
        for (std::size_t i = 0; i < k; ++i) {
            CHECK(got.weights[i] == want.weights[i]);
            CHECK(got.raw_sims[i] == want.raw_sims[i]);
        }
    }
}

TEST_CASE("enhance blend identities") {
    SUBCASE("alpha 0 returns the query untouched") {
        MemoryBank bank = small_bank(8, 3, 2, 0.0, 0.7, 9);
        std::vector<double> h{1.0, 2.0, 3.0};
        const auto r = bank.retrieve_topk(h);
        CHECK(bank.enhance(h, r) == h);
    }
    SUBCASE("alpha 1 with K=1 returns the retrieved entry") {
        MemoryBank bank = small_bank(8, 3, 1, 1.0, 0.7, 9);
        std::vector<double> h{1.0, 2.0, 3.0};
        const auto r = bank.retrieve_topk(h);
        const auto out = bank.enhance(h, r);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(out[i] == doctest::Approx(bank.entry(r.indices[0])[i]));
        }
    }
    SUBCASE("alpha 0.5 midpoint") {
        CemConfig cfg;
        cfg.n_m = 1;
        cfg.d_v = 2;
        cfg.k = 1;
        cfg.alpha = 0.5;
        cfg.beta = 0.7;
        MemoryBank bank(cfg, {0.0, 1.0});
        std::vector<double> h{1.0, 0.0};
        const auto r = bank.retrieve_topk(h);
        const auto out = bank.enhance(h, r);
        CHECK(out[0] == doctest::Approx(0.5));
        CHECK(out[1] == doctest::Approx(0.5));
    }
}

TEST_CASE("blend stays inside the coordinate bounds of query and entries") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const double alpha = rng.uniform();
        MemoryBank bank = small_bank(12, 4, 3, alpha, 0.7, rng.next_u64());
        std::vector<double> h = rng.normal_vec(4);
        const auto r = bank.retrieve_topk(h);
        const auto out = bank.enhance(h, r);
        for (std::size_t d = 0; d < 4; ++d) {
            double lo = h[d], hi = h[d];
            for (auto idx : r.indices) {
                lo = std::min(lo, bank.entry(idx)[d]);
                hi = std::max(hi, bank.entry(idx)[d]);
            }
            CHECK(out[d] >= lo - 1e-12);
            CHECK(out[d] <= hi + 1e-12);
        }
    }
}

TEST_CASE("evolve blends the retrieved entries toward the state") {
    SUBCASE("beta 0 is a no-op") {
        MemoryBank bank = small_bank(8, 3, 2, 0.7, 0.0, 10);
        const auto before = bank.raw();
        std::vector<double> h{1.0, -1.0, 0.5};
        bank.evolve(bank.retrieve_topk(h), h);
        CHECK(bank.raw() == before);
    }
    SUBCASE("an entry equal to the state is a fixed point") {
        MemoryBank bank = small_bank(8, 3, 1, 0.7, 0.7, 11);
        std::vector<double> h(bank.entry(2), bank.entry(2) + 3);
        const auto before = bank.raw();
        const auto r = bank.retrieve_topk(h);
        REQUIRE(r.indices[0] == 2);
        bank.evolve(r, h);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(bank.entry(2)[i] == doctest::Approx(before[2 * 3 + i]));
        }
    }
    SUBCASE("zero base with the default factor") {
        CemConfig cfg;
        cfg.n_m = 2;
        cfg.d_v = 2;
        cfg.k = 1;
        cfg.alpha = 0.7;
        cfg.beta = 0.7;
        MemoryBank bank(cfg, {0.0, 0.0, 5.0, 5.0});
        RetrievalResult r;
        r.indices = {0};
        r.weights = {1.0};
        r.raw_sims = {0.0};
        bank.evolve(r, {1.0, 1.0});
        CHECK(bank.entry(0)[0] == doctest::Approx(0.7));
        CHECK(bank.entry(0)[1] == doctest::Approx(0.7));
    }
}

TEST_CASE("evolve touches exactly the retrieved entries") {
    MemoryBank bank = small_bank(32, 4, 5, 0.7, 0.7, 12);
    const auto before = bank.raw();
    std::vector<double> h{0.5, -0.5, 1.0, 2.0};
    const auto r = bank.retrieve_topk(h);
    bank.evolve(r, h);
    CHECK(bank.entry_count() == 32);
    for (std::size_t m = 0; m < 32; ++m) {
        const bool retrieved = std::find(r.indices.begin(), r.indices.end(), m) != r.indices.end();
        bool changed = false;
        for (std::size_t i = 0; i < 4; ++i) {
            if (bank.entry(m)[i] != before[m * 4 + i]) {
                changed = true;
            }
        }
        CHECK(changed == retrieved);
    }
}

TEST_CASE("frozen bank refuses evolution with a warning flag") {
    MemoryBank bank = small_bank(8, 3, 2, 0.7, 0.7, 13);
    bank.set_frozen(true);
    const auto before = bank.raw();
    std::vector<double> h{1.0, 2.0, 3.0};
    CHECK_FALSE(bank.evolve(bank.retrieve_topk(h), h));
    CHECK(bank.raw() == before);

    const auto outcome = bank.enhance_and_evolve(h);
    CHECK_FALSE(outcome.evolved);
    CHECK(bank.raw() == before);
    CHECK(outcome.enhanced.size() == 3);
}

TEST_CASE("alpha and beta both zero make enhance_and_evolve a no-op") {
    MemoryBank bank = small_bank(8, 3, 2, 0.0, 0.0, 14);
    const auto before = bank.raw();
    std::vector<double> h{0.2, 0.4, -0.8};
    const auto outcome = bank.enhance_and_evolve(h);
    CHECK(outcome.enhanced == h);
    CHECK(bank.raw() == before);
}

TEST_CASE("repeated evolution contracts entries toward the state") {
    MemoryBank bank = small_bank(6, 3, 2, 0.7, 0.7, 15);
    std::vector<double> h{1.0, 1.0, 1.0};
    auto gap = [&](std::size_t idx) {
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            const double d = bank.entry(idx)[i] - h[i];
            s += d * d;
        }
        return std::sqrt(s);
    };
    const auto r1 = bank.retrieve_topk(h);
    std::vector<double> before_gaps;
    for (auto idx : r1.indices) {
        before_gaps.push_back(gap(idx));
    }
    bank.enhance_and_evolve(h);
    for (std::size_t i = 0; i < r1.indices.size(); ++i) {
        CHECK(gap(r1.indices[i]) <= before_gaps[i] * (1.0 - 0.7) + 1e-12);
    }
    const auto r2 = bank.retrieve_topk(h);
    std::vector<double> mid_gaps;
    for (auto idx : r2.indices) {
        mid_gaps.push_back(gap(idx));
    }
    bank.enhance_and_evolve(h);
    for (std::size_t i = 0; i < r2.indices.size(); ++i) {
        CHECK(gap(r2.indices[i]) <= mid_gaps[i] + 1e-12);
    }
}

TEST_CASE("capacity is invariant under arbitrary operation sequences") {
    Rng rng(77);
    MemoryBank bank = small_bank(10, 3, 3, 0.6, 0.4, 16);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> h = rng.normal_vec(3);
        switch (rng.uniform_int(0, 2)) {
            case 0: bank.retrieve_topk(h); break;
            case 1: bank.enhance_and_evolve(h); break;
            default: {
                const auto r = bank.retrieve_topk(h);
                bank.enhance(h, r);
                bank.evolve(r, h);
            }
        }
        CHECK(bank.entry_count() == 10);
        CHECK(bank.raw().size() == 30);
    }
}

TEST_CASE("memory operations never record onto an active tape") {
    Tape tape;
    TapeScope scope(tape);
    MemoryBank bank = small_bank(8, 3, 2, 0.7, 0.7, 18);
    std::vector<double> h{1.0, 0.5, -0.5};
    const auto r = bank.retrieve_topk(h);
    bank.enhance(h, r);
    bank.evolve(r, h);
    bank.enhance_and_evolve(h);
    CHECK(tape.size() == 0);
}

TEST_CASE("snapshot round-trip and rejection of malformed files") {
    namespace fs = std::filesystem;
    MemoryBank bank = small_bank(5, 4, 2, 0.7, 0.7, 19);
    bank.enhance_and_evolve({1.0, 2.0, 3.0, 4.0});
    const fs::path path = fs::temp_directory_path() / "navmorph_cem_test.json";
    bank.save(path);
    MemoryBank loaded = MemoryBank::load(path, 2);
    CHECK(loaded.raw() == bank.raw());
    CHECK(loaded.config().alpha == bank.config().alpha);
    CHECK(loaded.config().beta == bank.config().beta);

    const std::string text = read_file(path);
    atomic_write(path, text.substr(0, text.size() / 2));
    CHECK_THROWS(MemoryBank::load(path, 2));
    fs::remove(path);
}

TEST_CASE("snapshot byte layout matches the committed fixture") {
    CemConfig cfg;
    cfg.n_m = 2;
    cfg.d_v = 3;
    cfg.k = 1;
    cfg.alpha = 0.7;
    cfg.beta = 0.7;
    MemoryBank bank(cfg, {1.0, -0.5, 0.25, 2.0, 0.125, -8.0});
    const auto path = std::filesystem::temp_directory_path() / "navmorph_cem_fixture_check.json";
    bank.save(path);
    const std::string got = read_file(path);
    const std::string want = read_file(std::filesystem::path(NAVMORPH_TEST_DATA) / "cem_fixture.json");
    CHECK(got == want);

    MemoryBank loaded = MemoryBank::load(std::filesystem::path(NAVMORPH_TEST_DATA) / "cem_fixture.json", 1);
    CHECK(loaded.raw() == bank.raw());
    std::filesystem::remove(path);
}
