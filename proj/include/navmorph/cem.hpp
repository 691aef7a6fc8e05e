#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "navmorph/rng.hpp"

namespace navmorph {

struct CemConfig {
    std::size_t n_m = 256;  // bank capacity (fixed for the bank's lifetime)
    std::size_t d_v = 64;   // entry dimension
    std::size_t k = 16;     // retrieval fan-in, clamped to n_m
    double alpha = 0.7;     // enhancement blend factor
    double beta = 0.7;      // forward-update factor
};

struct RetrievalResult {
    std::vector<std::size_t> indices; // sorted by descending similarity, ties by ascending index
    std::vector<double> weights;      // nonnegative, sum to 1
    std::vector<double> raw_sims;     // cosine similarities, same order as indices
};

// Fixed-capacity bank of scene-contextual vectors. Retrieval is top-K by
// cosine similarity; enhancement blends the query toward the retrieved
// entries; evolution rewrites the retrieved entries in place by convex
// blending. None of these operations touch the autodiff tape.
class MemoryBank {
public:
    MemoryBank(CemConfig cfg, std::vector<double> entries);

    // Entries drawn i.i.d. N(0, 1/d_v).
    static MemoryBank init_random(const CemConfig& cfg, Rng& rng);

    const CemConfig& config() const { return cfg_; }
    std::size_t entry_count() const { return cfg_.n_m; }
    std::size_t dim() const { return cfg_.d_v; }
    const std::vector<double>& raw() const { return entries_; }
    const double* entry(std::size_t i) const { return entries_.data() + i * cfg_.d_v; }

    bool frozen() const { return frozen_; }
    void set_frozen(bool f) { frozen_ = f; }
    std::uint64_t evolve_calls() const { return evolve_calls_; }
    std::uint64_t evolve_applied() const { return evolve_applied_; }
    void reset_counters() { evolve_calls_ = evolve_applied_ = 0; }

    // Top-K entries by cosine similarity against the query. Zero-norm
    // entries score -1; a zero-norm query is a domain error.
    RetrievalResult retrieve_topk(const std::vector<double>& query) const;

    // Weighted sum of the retrieved entries (the memory half of the blend).
    std::vector<double> blend(const RetrievalResult& retrieval) const;

    // h_tilde = (1 - alpha) h + alpha * blend; pure, no mutation.
    std::vector<double> enhance(const std::vector<double>& h, const RetrievalResult& retrieval) const;

    // v_k <- (1 - beta) v_k + beta h for the retrieved entries only, using
    // the pre-enhancement h. Returns false (and changes nothing) when
    // frozen.
    bool evolve(const RetrievalResult& retrieval, const std::vector<double>& h);

    struct EnhanceOutcome {
        std::vector<double> enhanced;
        std::vector<double> blended;  // alpha-weighted memory term before combining
        RetrievalResult retrieval;
        bool evolved = false;
    };

    // One retrieval shared by both steps: blend first, then update the
    // retrieved entries with the pre-enhancement state.
    EnhanceOutcome enhance_and_evolve(const std::vector<double>& h);

    void save(const std::filesystem::path& path) const;
    static MemoryBank load(const std::filesystem::path& path, std::size_t k);

private:
    CemConfig cfg_;
    std::vector<double> entries_; // n_m x d_v, row-major
    bool frozen_ = false;
    std::uint64_t evolve_calls_ = 0;
    std::uint64_t evolve_applied_ = 0;
};

} // namespace navmorph
