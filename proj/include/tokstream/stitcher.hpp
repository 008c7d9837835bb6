#pragma once

// Streaming emission: buffer generated tokens, decode them with trailing
// context, and only cut the output where the audio is quiet.

#include <tokstream/decoder.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace tokstream {

struct StitcherConfig {
    std::size_t chunk_tokens = 100;   // 2 s per decode attempt
    std::size_t radius_samples = 120; // 2.5 ms at 48 kHz
    double epsilon = 1e-3;
    std::size_t context_tokens = 8;
    bool include_prompt_context = false;
    std::size_t max_deferrals = 3;

    void validate() const {
        if (chunk_tokens < 1) throw ConfigError("chunk_tokens must be >= 1");
        if (radius_samples < 1) throw ConfigError("radius_samples must be >= 1");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in (0, 1)");
        if (max_deferrals < 1) throw ConfigError("max_deferrals must be >= 1");
    }
};

struct StreamState {
    TokenSequence retained;
    std::uint64_t emitted_token_count = 0;
    std::uint64_t emitted_sample_count = 0;
    std::size_t deferral_count = 0;
    TokenSequence prompt_tokens;
    TokenSequence history; // tail of emitted tokens, at most context_tokens long
    std::uint64_t fed_token_count = 0;
};

struct Emission {
    Waveform audio;
    std::size_t token_count = 0;
    bool forced = false;
    /// Sample offset of the cut inside the decoded segment (== audio.size()).
    std::size_t cut_sample = 0;
};

/// Largest absolute sample in [center - radius, center + radius).
inline float window_peak(std::span<const float> w, std::size_t center, std::size_t radius) {
    float peak = 0.0f;
    for (std::size_t n = center - radius; n < center + radius; ++n) peak = std::max(peak, std::abs(w[n]));
    return peak;
}

/// Last candidate t whose window [t - radius, t + radius) lies inside w and
/// has max |x| < epsilon. Candidates without a full window are skipped.
inline std::optional<std::size_t> find_last_nonvoicing(std::span<const float> w, std::size_t radius,
                                                       double epsilon,
                                                       std::span<const std::size_t> candidates) {
    std::optional<std::size_t> best;
    for (std::size_t t : candidates) {
        if (t < radius || t + radius > w.size()) continue;
        if (best && t <= *best) continue;
        if (window_peak(w, t, radius) < epsilon) best = t;
    }
    return best;
}

/// Decoder context for the next segment: the prompt before anything has been
/// emitted (when enabled), otherwise the last `context_tokens` emitted tokens.
inline TokenSequence select_context(const StreamState& state, const StitcherConfig& cfg) {
    if (cfg.include_prompt_context && state.emitted_token_count == 0) return state.prompt_tokens;
    const auto n = std::min(cfg.context_tokens, state.history.size());
    return TokenSequence(state.history.end() - static_cast<std::ptrdiff_t>(n), state.history.end());
}

namespace detail {

inline void commit_emission(StreamState& s, std::span<const TokenId> pending, std::size_t count,
                            std::size_t spt, const StitcherConfig& cfg) {
    s.history.insert(s.history.end(), pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(count));
    if (s.history.size() > cfg.context_tokens)
        s.history.erase(s.history.begin(),
                        s.history.end() - static_cast<std::ptrdiff_t>(cfg.context_tokens));
    s.retained.assign(pending.begin() + static_cast<std::ptrdiff_t>(count), pending.end());
    s.emitted_token_count += count;
    s.emitted_sample_count += count * spt;
    s.deferral_count = 0;
}

} // namespace detail

/// One decode attempt over retained || new_tokens. Returns the emitted audio
/// (possibly empty). On exception `state` is unchanged.
inline Emission process_chunk(StreamState& state, std::span<const TokenId> new_tokens,
                              const StitcherConfig& cfg, const Decoder& decoder) {
    detail::require(!new_tokens.empty(), "process_chunk: no new tokens");
    cfg.validate();
    const std::size_t spt = samples_per_token(decoder.config());

    TokenSequence pending = state.retained;
    pending.insert(pending.end(), new_tokens.begin(), new_tokens.end());
    const Waveform segment = decoder.decode_with_context(select_context(state, cfg), pending);

    // Interior token boundaries whose whole window fits inside the segment.
    std::vector<std::size_t> candidates;
    for (std::size_t j = 1; j < pending.size(); ++j) {
        const std::size_t t = j * spt;
        if (t >= cfg.radius_samples && t + cfg.radius_samples <= segment.size()) candidates.push_back(t);
    }

    StreamState next = state;
    next.fed_token_count += new_tokens.size();
    Emission out;
    out.audio.sample_rate = segment.sample_rate;

    std::optional<std::size_t> cut =
        find_last_nonvoicing(segment.samples, cfg.radius_samples, cfg.epsilon, candidates);
    if (!cut) {
        next.deferral_count += 1;
        if (next.deferral_count < cfg.max_deferrals) {
            next.retained = std::move(pending);
            state = std::move(next);
            return out;
        }
        // Forced emission: quietest boundary, latest on ties; everything if no boundary fits.
        out.forced = true;
        float best = std::numeric_limits<float>::infinity();
        std::size_t at = segment.size();
        for (std::size_t t : candidates) {
            const float peak = window_peak(segment.samples, t, cfg.radius_samples);
            if (peak <= best) {
                best = peak;
                at = t;
            }
        }
        cut = at;
    }

    const std::size_t count = *cut / spt;
    out.token_count = count;
    out.cut_sample = *cut;
    out.audio.samples.assign(segment.samples.begin(),
                             segment.samples.begin() + static_cast<std::ptrdiff_t>(*cut));
    detail::commit_emission(next, pending, count, spt, cfg);
    state = std::move(next);
    return out;
}

/// End of stream: decode and emit everything still retained.
inline Waveform flush(StreamState& state, const StitcherConfig& cfg, const Decoder& decoder) {
    Waveform out;
    out.sample_rate = decoder.config().sample_rate;
    if (state.retained.empty()) return out;
    const std::size_t spt = samples_per_token(decoder.config());
    out = decoder.decode_with_context(select_context(state, cfg), state.retained);
    StreamState next = state;
    const TokenSequence pending = std::move(next.retained);
    detail::commit_emission(next, pending, pending.size(), spt, cfg);
    state = std::move(next);
    return out;
}

/// Owns one session's stitching state.
class StreamStitcher {
public:
    StreamStitcher(const Decoder& decoder, StitcherConfig cfg, TokenSequence prompt = {})
        : decoder_(&decoder), cfg_(cfg) {
        cfg_.validate();
        state_.prompt_tokens = std::move(prompt);
    }

    Emission process_chunk(std::span<const TokenId> tokens) {
        return tokstream::process_chunk(state_, tokens, cfg_, *decoder_);
    }
    Waveform flush() { return tokstream::flush(state_, cfg_, *decoder_); }

    const StreamState& state() const { return state_; }
    const StitcherConfig& config() const { return cfg_; }

private:
    const Decoder* decoder_;
    StitcherConfig cfg_;
    StreamState state_;
};

} // namespace tokstream
