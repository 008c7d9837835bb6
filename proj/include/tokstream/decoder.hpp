#pragma once

#include <tokstream/timebase.hpp>

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace tokstream {

/// Token-to-waveform decoder. Implementations must be deterministic and
/// produce exactly samples_per_token(config()) samples per input token.
class Decoder {
public:
    virtual ~Decoder() = default;

    virtual const DecoderConfig& config() const = 0;

    virtual Waveform decode(std::span<const TokenId> tokens) const = 0;

    /// Decode context||body and drop the samples belonging to the context.
    virtual Waveform decode_with_context(std::span<const TokenId> context,
                                        std::span<const TokenId> body) const {
        detail::require(!body.empty(), "decode_with_context: empty body");
        if (context.empty()) return decode(body);
        TokenSequence joined;
        joined.reserve(context.size() + body.size());
        joined.insert(joined.end(), context.begin(), context.end());
        joined.insert(joined.end(), body.begin(), body.end());
        Waveform full = decode(joined);
        const auto skip = context.size() * samples_per_token(config());
        full.samples.erase(full.samples.begin(),
                           full.samples.begin() + static_cast<std::ptrdiff_t>(skip));
        return full;
    }
};

struct MockDecoderParams {
    std::size_t context_window_tokens = 4;
    double base_frequency = 110.0;
    double frequency_step = 20.0;
};

/// Context-sensitive stand-in for the neural decoder.
///
/// Token i renders a sine at base + (id mod 64) * step Hz whose amplitude is
/// the mean of (id mod 256) / 255 over the tokens [max(0, i-C+1), i] of the
/// decoder input. Phase restarts at every token boundary, so a token with zero
/// effective amplitude renders as exact zeros.
class MockDecoder final : public Decoder {
public:
    explicit MockDecoder(DecoderConfig config = DecoderConfig::preset_48k(),
                         MockDecoderParams params = {})
        : config_(std::move(config)), params_(params), spt_(samples_per_token(config_)) {
        if (params_.context_window_tokens < 1)
            throw ConfigError("mock decoder context window must be >= 1");
        // One period table per frequency bin; sample n of a token is amplitude * table[n].
        tables_.resize(64 * spt_);
        for (std::size_t bin = 0; bin < 64; ++bin) {
            const double f = params_.base_frequency + static_cast<double>(bin) * params_.frequency_step;
            const double w = 2.0 * std::numbers::pi * f / config_.sample_rate;
            for (std::size_t n = 0; n < spt_; ++n)
                tables_[bin * spt_ + n] = std::sin(w * static_cast<double>(n));
        }
    }

    const DecoderConfig& config() const override { return config_; }
    const MockDecoderParams& params() const { return params_; }

    static double token_amplitude(TokenId id) { return static_cast<double>(id % 256) / 255.0; }
    double token_frequency(TokenId id) const {
        return params_.base_frequency + static_cast<double>(id % 64) * params_.frequency_step;
    }

    /// Moving-average amplitude of token i given the whole decoder input.
    double effective_amplitude(std::span<const TokenId> tokens, std::size_t i) const {
        const std::size_t c = params_.context_window_tokens;
        const std::size_t first = i + 1 >= c ? i + 1 - c : 0;
        double sum = 0.0;
        for (std::size_t j = first; j <= i; ++j) sum += token_amplitude(tokens[j]);
        return sum / static_cast<double>(i - first + 1);
    }

    Waveform decode(std::span<const TokenId> tokens) const override {
        detail::require(!tokens.empty(), "decode: empty token sequence");
        Waveform out;
        out.sample_rate = config_.sample_rate;
        out.samples.resize(tokens.size() * spt_);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const double amp = effective_amplitude(tokens, i);
            const double* table = &tables_[(tokens[i] % 64) * spt_];
            float* dst = &out.samples[i * spt_];
            for (std::size_t n = 0; n < spt_; ++n) dst[n] = static_cast<float>(amp * table[n]);
        }
        return out;
    }

private:
    DecoderConfig config_;
    MockDecoderParams params_;
    std::size_t spt_;
    std::vector<double> tables_;
};

} // namespace tokstream
