#include "navmorph/cem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "navmorph/io.hpp"

namespace navmorph {

using nlohmann::json;

namespace {

double vec_norm(const double* v, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += v[i] * v[i];
    }
    return std::sqrt(s);
}

} // namespace

MemoryBank::MemoryBank(CemConfig cfg, std::vector<double> entries)
    : cfg_(cfg), entries_(std::move(entries)) {
    if (cfg_.n_m == 0 || cfg_.d_v == 0) {
        throw ConfigError("MemoryBank: n_m and d_v must be positive");
    }
    if (cfg_.k == 0 || cfg_.k > cfg_.n_m) {
        throw ConfigError("MemoryBank: require 1 <= K <= N_m (K=" + std::to_string(cfg_.k) +
                          ", N_m=" + std::to_string(cfg_.n_m) + ")");
    }
    if (entries_.size() != cfg_.n_m * cfg_.d_v) {
        throw ConfigError("MemoryBank: entry buffer size does not match n_m * d_v");
    }
    if (!(cfg_.alpha >= 0.0 && cfg_.alpha <= 1.0 && cfg_.beta >= 0.0 && cfg_.beta <= 1.0)) {
        throw ConfigError("MemoryBank: alpha and beta must lie in [0, 1]");
    }
}

MemoryBank MemoryBank::init_random(const CemConfig& cfg, Rng& rng) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.d_v));
    std::vector<double> entries = rng.normal_vec(cfg.n_m * cfg.d_v, 0.0, stddev);
    return MemoryBank(cfg, std::move(entries));
}

RetrievalResult MemoryBank::retrieve_topk(const std::vector<double>& query) const {
    if (query.size() != cfg_.d_v) {
        throw std::invalid_argument("retrieve_topk: query dimension mismatch");
    }
    const double qn = vec_norm(query.data(), cfg_.d_v);
    if (qn == 0.0) {
        throw std::domain_error("retrieve_topk: zero-norm query");
    }

    std::vector<double> sims(cfg_.n_m);
    for (std::size_t m = 0; m < cfg_.n_m; ++m) {
        const double* v = entry(m);
        const double vn = vec_norm(v, cfg_.d_v);
        if (vn == 0.0) {
            sims[m] = -1.0;
            continue;
        }
        double dot = 0.0;
        for (std::size_t i = 0; i < cfg_.d_v; ++i) {
            dot += query[i] * v[i];
        }
        sims[m] = dot / (qn * vn);
    }

    std::vector<std::size_t> order(cfg_.n_m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sims[a] != sims[b]) {
            return sims[a] > sims[b];
        }
        return a < b;
    });

    RetrievalResult result;
    result.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg_.k));
    result.raw_sims.resize(cfg_.k);
    for (std::size_t i = 0; i < cfg_.k; ++i) {
        result.raw_sims[i] = sims[result.indices[i]];
    }

    // Normalized similarity weights: shift so the smallest retrieved score
    // is nonnegative, then divide by the sum; degenerate sums fall back to
    // uniform.
    const double min_sim = *std::min_element(result.raw_sims.begin(), result.raw_sims.end());
    const double shift = std::min(0.0, min_sim);
    double total = 0.0;
    result.weights.resize(cfg_.k);
    for (std::size_t i = 0; i < cfg_.k; ++i) {
        result.weights[i] = result.raw_sims[i] - shift;
        total += result.weights[i];
    }
    if (total < 1e-12) {
        const double u = 1.0 / static_cast<double>(cfg_.k);
        std::fill(result.weights.begin(), result.weights.end(), u);
    } else {
        for (auto& w : result.weights) {
            w /= total;
        }
    }
    return result;
}

std::vector<double> MemoryBank::blend(const RetrievalResult& retrieval) const {
    std::vector<double> out(cfg_.d_v, 0.0);
    for (std::size_t i = 0; i < retrieval.indices.size(); ++i) {
        const double w = retrieval.weights[i];
        const double* v = entry(retrieval.indices[i]);
        for (std::size_t d = 0; d < cfg_.d_v; ++d) {
            out[d] += w * v[d];
        }
    }
    return out;
}

std::vector<double> MemoryBank::enhance(const std::vector<double>& h, const RetrievalResult& retrieval) const {
    if (h.size() != cfg_.d_v) {
        throw std::invalid_argument("enhance: dimension mismatch");
    }
    std::vector<double> blended = blend(retrieval);
    std::vector<double> out(cfg_.d_v);
    for (std::size_t d = 0; d < cfg_.d_v; ++d) {
        out[d] = (1.0 - cfg_.alpha) * h[d] + cfg_.alpha * blended[d];
    }
    return out;
}

bool MemoryBank::evolve(const RetrievalResult& retrieval, const std::vector<double>& h) {
    ++evolve_calls_;
    if (frozen_) {
        return false;
    }
    if (h.size() != cfg_.d_v) {
        throw std::invalid_argument("evolve: dimension mismatch");
    }
    for (std::size_t idx : retrieval.indices) {
        double* v = entries_.data() + idx * cfg_.d_v;
        for (std::size_t d = 0; d < cfg_.d_v; ++d) {
            v[d] = (1.0 - cfg_.beta) * v[d] + cfg_.beta * h[d];
        }
    }
    ++evolve_applied_;
    return true;
}

MemoryBank::EnhanceOutcome MemoryBank::enhance_and_evolve(const std::vector<double>& h) {
    EnhanceOutcome outcome;
    outcome.retrieval = retrieve_topk(h);
    outcome.blended = blend(outcome.retrieval);
    outcome.enhanced.resize(cfg_.d_v);
    for (std::size_t d = 0; d < cfg_.d_v; ++d) {
        outcome.enhanced[d] = (1.0 - cfg_.alpha) * h[d] + cfg_.alpha * outcome.blended[d];
    }
    outcome.evolved = evolve(outcome.retrieval, h); // pre-enhancement state
    return outcome;
}

void MemoryBank::save(const std::filesystem::path& path) const {
    json doc;
    doc["format"] = "cem-v1";
    doc["n_m"] = cfg_.n_m;
    doc["d_v"] = cfg_.d_v;
    doc["alpha"] = cfg_.alpha;
    doc["beta"] = cfg_.beta;
    json rows = json::array();
    for (std::size_t m = 0; m < cfg_.n_m; ++m) {
        rows.push_back(std::vector<double>(entry(m), entry(m) + cfg_.d_v));
    }
    doc["entries"] = std::move(rows);
    atomic_write(path, doc.dump());
}

MemoryBank MemoryBank::load(const std::filesystem::path& path, std::size_t k) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("memory snapshot " + path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "cem-v1") {
        throw std::runtime_error("memory snapshot " + path.string() + ": unknown format");
    }
    CemConfig cfg;
    cfg.n_m = doc.at("n_m").get<std::size_t>();
    cfg.d_v = doc.at("d_v").get<std::size_t>();
    cfg.alpha = doc.at("alpha").get<double>();
    cfg.beta = doc.at("beta").get<double>();
    cfg.k = std::min(k, cfg.n_m);
    const auto& rows = doc.at("entries");
    if (rows.size() != cfg.n_m) {
        throw std::runtime_error("memory snapshot " + path.string() + ": entry count mismatch");
    }
    std::vector<double> entries;
    entries.reserve(cfg.n_m * cfg.d_v);
    for (const auto& row : rows) {
        auto vec = row.get<std::vector<double>>();
        if (vec.size() != cfg.d_v) {
            throw std::runtime_error("memory snapshot " + path.string() + ": entry dimension mismatch");
        }
        entries.insert(entries.end(), vec.begin(), vec.end());
    }
    return MemoryBank(cfg, std::move(entries));
}

} // namespace navmorph
