#pragma once

// Repetition penalty over sparse occurrence counts, and temperature / top-k /
// top-p sampling.

#include <tokstream/errors.hpp>
#include <tokstream/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

namespace tokstream {

using Logits = std::vector<double>;

/// Occurrence counts of previously generated ids; absent ids count zero.
class SparseCounts {
public:
    void add(std::uint32_t id, std::uint32_t times = 1) {
        if (times > 0) counts_[id] += times;
    }
    std::uint32_t count(std::uint32_t id) const {
        auto it = counts_.find(id);
        return it == counts_.end() ? 0 : it->second;
    }
    std::size_t size() const { return counts_.size(); }
    auto begin() const { return counts_.begin(); }
    auto end() const { return counts_.end(); }

private:
    std::unordered_map<std::uint32_t, std::uint32_t> counts_;
};

/// Seen ids: positive logits are divided by `penalty`, the rest multiplied.
/// Touches only the ids present in `counts`.
inline Logits apply_penalties(Logits logits, const SparseCounts& counts, double penalty) {
    detail::require(penalty >= 1.0, "repetition penalty must be >= 1");
    if (penalty == 1.0) return logits;
    for (const auto& [id, n] : counts) {
        if (id >= logits.size()) continue;
        double& l = logits[id];
        l = l > 0.0 ? l / penalty : l * penalty;
    }
    return logits;
}

struct SamplerConfig {
    double temperature = 1.0; // 0 selects argmax
    std::size_t top_k = 50;
    double top_p = 1.0;
    double repetition_penalty = 1.0;

    void validate() const {
        if (!(temperature >= 0.0) || !std::isfinite(temperature))
            throw ConfigError("temperature must be finite and >= 0");
        if (top_k < 1) throw ConfigError("top_k must be >= 1");
        if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
        if (!(repetition_penalty >= 1.0)) throw ConfigError("repetition_penalty must be >= 1");
    }
};

struct WeightedToken {
    std::uint32_t id;
    double probability;
};

/// Lowest id among the maximal logits.
inline std::uint32_t argmax(std::span<const double> logits) {
    detail::require(!logits.empty(), "argmax of empty logits");
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return static_cast<std::uint32_t>(best);
}

/// The renormalized distribution `sample` draws from, ordered by descending
/// probability (ties by ascending id). Order: temperature, top-k, top-p.
inline std::vector<WeightedToken> filtered_distribution(std::span<const double> logits,
                                                        const SamplerConfig& cfg) {
    cfg.validate();
    detail::require(!logits.empty(), "empty logits");
    detail::require(cfg.temperature > 0.0, "filtered_distribution needs temperature > 0");

    std::vector<std::uint32_t> order(logits.size());
    std::iota(order.begin(), order.end(), 0u);
    const auto k = std::min(order.size(), cfg.top_k);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](auto a, auto b) {
                          return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
                      });
    order.resize(k);

    const double top = logits[order.front()] / cfg.temperature;
    std::vector<WeightedToken> dist;
    dist.reserve(order.size());
    double total = 0.0;
    for (auto id : order) {
        const double w = std::exp(logits[id] / cfg.temperature - top);
        dist.push_back({id, w});
        total += w;
    }
    // Smallest prefix whose cumulative mass reaches top_p, crossing token included.
    double cumulative = 0.0;
    std::size_t keep = dist.size();
    for (std::size_t i = 0; i < dist.size(); ++i) {
        cumulative += dist[i].probability / total;
        if (cumulative >= cfg.top_p) {
            keep = i + 1;
            break;
        }
    }
    dist.resize(keep);
    double kept = 0.0;
    for (const auto& t : dist) kept += t.probability;
    for (auto& t : dist) t.probability /= kept;
    return dist;
}

/// Draw one id. Penalties are expected to have been applied already.
inline std::uint32_t sample(std::span<const double> logits, const SamplerConfig& cfg, Rng& rng) {
    cfg.validate();
    if (cfg.temperature == 0.0) return argmax(logits);
    const auto dist = filtered_distribution(logits, cfg);
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (const auto& t : dist) {
        cumulative += t.probability;
        if (u < cumulative) return t.id;
    }
    return dist.back().id;
}

} // namespace tokstream
