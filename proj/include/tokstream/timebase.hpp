#pragma once

// Token/sample timebase, waveform container and RMS loudness math.

#include <tokstream/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tokstream {

/// Index into the single 65536-entry codec codebook.
using TokenId = std::uint16_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr std::uint32_t kTokensPerSecond = 50;
inline constexpr std::uint32_t kCodebookSize = 65536;
/// 40 s cap on a single utterance.
inline constexpr std::size_t kMaxUtteranceTokens = 2000;

inline double duration_seconds(std::span<const TokenId> tokens) {
    return static_cast<double>(tokens.size()) / kTokensPerSecond;
}

struct DecoderConfig {
    std::uint32_t sample_rate = 48000;
    std::uint32_t hop_length = 160;
    std::vector<std::uint32_t> strides{3, 2};

    static DecoderConfig preset_16k() { return {16000, 320, {1}}; }
    static DecoderConfig preset_24k() { return {24000, 480, {1}}; }
    static DecoderConfig preset_48k() { return {48000, 160, {3, 2}}; }

    /// Preset for one of the three supported sample rates.
    static DecoderConfig for_rate(std::uint32_t rate) {
        switch (rate) {
        case 16000: return preset_16k();
        case 24000: return preset_24k();
        case 48000: return preset_48k();
        default: throw ConfigError("no decoder preset for sample rate " + std::to_string(rate));
        }
    }

    std::uint64_t upsampling() const {
        return std::accumulate(strides.begin(), strides.end(), std::uint64_t{1},
                               std::multiplies<>{});
    }

    friend bool operator==(const DecoderConfig&, const DecoderConfig&) = default;
};

/// Samples produced per token; throws ConfigError unless
/// hop_length * prod(strides) == sample_rate / 50 exactly.
inline std::size_t samples_per_token(const DecoderConfig& config) {
    if (config.sample_rate == 0 || config.sample_rate % kTokensPerSecond != 0)
        throw ConfigError("sample rate must be a positive multiple of 50");
    if (config.hop_length == 0 || config.strides.empty() ||
        std::ranges::any_of(config.strides, [](auto s) { return s == 0; }))
        throw ConfigError("hop length and strides must be positive");
    const std::uint64_t per_token = config.sample_rate / kTokensPerSecond;
    if (std::uint64_t{config.hop_length} * config.upsampling() != per_token)
        throw ConfigError("hop_length x strides (" +
                          std::to_string(config.hop_length * config.upsampling()) +
                          ") != sample_rate/50 (" + std::to_string(per_token) + ")");
    return static_cast<std::size_t>(per_token);
}

/// Half-open sample span covering tokens [start_token, end_token).
inline std::pair<std::size_t, std::size_t>
token_span_to_sample_span(std::size_t start_token, std::size_t end_token,
                          const DecoderConfig& config) {
    detail::require(start_token <= end_token, "token span is reversed");
    const auto spt = samples_per_token(config);
    return {start_token * spt, end_token * spt};
}

struct Waveform {
    std::vector<float> samples;
    std::uint32_t sample_rate = 48000;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }

    static Waveform constant(float value, std::size_t count, std::uint32_t rate = 48000) {
        return {std::vector<float>(count, value), rate};
    }

    void append(const Waveform& other) {
        samples.insert(samples.end(), other.samples.begin(), other.samples.end());
    }

    friend bool operator==(const Waveform&, const Waveform&) = default;
};

inline constexpr double kLoudnessEpsilon = 1e-5;
/// RMS loss weight; 1.0 works for both the 24 kHz and 48 kHz decoders.
inline constexpr double kDefaultRmsLossWeight = 1.0;

/// Loudness in dB: 20*log10(sqrt(mean(x^2)) + 1e-5). Never below -100 dB.
inline double rms_db(std::span<const float> samples) {
    detail::require(!samples.empty(), "rms_db of an empty waveform");
    double sum_sq = 0.0;
    for (float x : samples) sum_sq += static_cast<double>(x) * x;
    const double rms = std::sqrt(sum_sq / static_cast<double>(samples.size()));
    return 20.0 * std::log10(rms + kLoudnessEpsilon);
}

inline double rms_db(const Waveform& w) { return rms_db(w.samples); }

/// Squared dB difference between reference and generated loudness.
inline double rms_loss(const Waveform& reference, const Waveform& generated) {
    const double d = rms_db(reference) - rms_db(generated);
    return d * d;
}

/// Batched form: mean of per-utterance squared loudness differences.
inline double rms_loss(std::span<const Waveform> reference, std::span<const Waveform> generated) {
    detail::require(!reference.empty() && reference.size() == generated.size(),
                    "rms_loss batches must be non-empty and equally sized");
    double total = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) total += rms_loss(reference[i], generated[i]);
    return total / static_cast<double>(reference.size());
}

/// Largest loudness jump between adjacent chunks, in dB.
inline double chunk_volume_drift(std::span<const Waveform> chunks) {
    detail::require(chunks.size() >= 2, "chunk_volume_drift needs at least two chunks");
    double worst = 0.0;
    double prev = rms_db(chunks.front());
    for (std::size_t i = 1; i < chunks.size(); ++i) {
        detail::require(chunks[i].sample_rate == chunks[0].sample_rate,
                        "chunks must share a sample rate");
        const double cur = rms_db(chunks[i]);
        worst = std::max(worst, std::abs(cur - prev));
        prev = cur;
    }
    return worst;
}

// PCM16 conversion happens only at file/wire boundaries.
inline std::int16_t to_pcm16(float x) {
    const double scaled = std::round(static_cast<double>(x) * 32767.0); // half away from zero
    return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

inline float from_pcm16(std::int16_t v) { return static_cast<float>(v) / 32767.0f; }

inline std::vector<std::int16_t> to_pcm16(std::span<const float> samples) {
    std::vector<std::int16_t> out(samples.size());
    std::ranges::transform(samples, out.begin(), [](float x) { return to_pcm16(x); });
    return out;
}

} // namespace tokstream
