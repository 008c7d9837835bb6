#pragma once

// Text -> tokens -> stitched audio, shared by offline synthesis and the
// streaming server so both produce identical emissions.

#include <tokstream/config.hpp>
#include <tokstream/decoder.hpp>
#include <tokstream/markup.hpp>
#include <tokstream/rewards.hpp>
#include <tokstream/speechlm.hpp>
#include <tokstream/stitcher.hpp>

#include <algorithm>
#include <functional>
#include <string_view>
#include <variant>
#include <vector>

namespace tokstream {

/// Voicing plan for a transcript: each word is a voiced run (3 tokens per
/// character, clamped to [2, 30]) followed by a silent gap long enough to
/// leave whole tokens at zero amplitude under the mock decoder; a non-verbal
/// tag is a 10-token voiced burst. Capped at the 40 s utterance limit.
inline std::vector<bool> plan_voicing(std::string_view text, const SessionConfig& cfg) {
    const auto doc = markup::parse(text).document;
    const std::size_t gap = cfg.mock.context_window_tokens + 2;
    std::vector<bool> plan;
    const auto run = [&](std::size_t voiced) {
        plan.insert(plan.end(), voiced, true);
        plan.insert(plan.end(), gap, false);
    };
    for (const auto& item : doc.items) {
        if (const auto* s = std::get_if<std::string>(&item)) {
            for (const auto& word : rewards::split_words(*s))
                run(std::clamp<std::size_t>(3 * rewards::utf8_codepoints(word).size(), 2, 30));
        } else if (!std::get<markup::Tag>(item).is_style()) {
            run(10);
        }
    }
    if (plan.size() > kMaxUtteranceTokens) plan.resize(kMaxUtteranceTokens);
    return plan;
}

inline GeneratorOptions generator_options(std::string_view text, const SessionConfig& cfg) {
    GeneratorOptions o;
    o.seed = cfg.seed;
    o.voiced = plan_voicing(text, cfg);
    o.n_tokens = o.voiced.size();
    if (cfg.silence) o.voiced.assign(o.n_tokens, false);
    o.pace = cfg.pace();
    o.batch_tokens = cfg.batch_tokens;
    o.sampler = cfg.sampler;
    return o;
}

/// Deterministic mock voice prompt of `cfg.prompt_tokens` tokens.
inline TokenSequence mock_prompt(const SessionConfig& cfg) {
    return mock_generate(Rng::mix(cfg.seed ^ 0x70726f6d7074ULL), cfg.prompt_tokens);
}

/// Feeds tokens to a stitcher in exact `chunk_tokens` slices, independent of
/// how the tokens arrive.
class SessionPipeline {
public:
    using Sink = std::function<void(const Waveform&)>;

    explicit SessionPipeline(const SessionConfig& cfg)
        : decoder_(cfg.decoder, cfg.mock), stitcher_(decoder_, cfg.stitcher, mock_prompt(cfg)) {}
    SessionPipeline(const SessionPipeline&) = delete;
    SessionPipeline& operator=(const SessionPipeline&) = delete;

    void feed(std::span<const TokenId> tokens, const Sink& sink) {
        buffer_.insert(buffer_.end(), tokens.begin(), tokens.end());
        const std::size_t chunk = stitcher_.config().chunk_tokens;
        std::size_t used = 0;
        while (buffer_.size() - used >= chunk) {
            emit(std::span(buffer_).subspan(used, chunk), sink);
            used += chunk;
        }
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(used));
    }

    void finish(const Sink& sink) {
        if (!buffer_.empty()) emit(buffer_, sink);
        buffer_.clear();
        if (auto tail = stitcher_.flush(); !tail.empty()) sink(tail);
    }

    const StreamStitcher& stitcher() const { return stitcher_; }
    const MockDecoder& decoder() const { return decoder_; }

private:
    void emit(std::span<const TokenId> tokens, const Sink& sink) {
        auto e = stitcher_.process_chunk(tokens);
        if (!e.audio.empty()) sink(e.audio);
    }

    MockDecoder decoder_;
    StreamStitcher stitcher_;
    TokenSequence buffer_;
};

struct OfflineResult {
    TokenSequence tokens;
    std::vector<Waveform> chunks;

    Waveform joined(std::uint32_t rate) const {
        Waveform w{{}, rate};
        for (const auto& c : chunks) w.append(c);
        return w;
    }
};

/// Same emissions as a streaming session, without pacing or sockets.
inline OfflineResult synthesize_offline(std::string_view text, const SessionConfig& cfg) {
    cfg.validate();
    auto opts = generator_options(text, cfg);
    opts.pace = std::chrono::duration<double>(0.0);
    OfflineResult out;
    out.tokens = MockGenerator(opts).drain();
    SessionPipeline pipeline(cfg);
    const auto sink = [&](const Waveform& w) { out.chunks.push_back(w); };
    pipeline.feed(out.tokens, sink);
    pipeline.finish(sink);
    return out;
}

} // namespace tokstream
