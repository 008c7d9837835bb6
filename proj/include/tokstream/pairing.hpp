#pragma once

// Neutral/stylized pairing for style-tag training data.

#include <tokstream/markup.hpp>
#include <tokstream/rng.hpp>
#include <tokstream/timebase.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace tokstream::markup {

struct Utterance {
    std::string text;
    Waveform audio;
};

struct PairedExample {
    std::string transcript;
    Waveform audio;
    double silence_seconds = 0.0;
    std::size_t silence_samples = 0;
};

inline constexpr double kMinPairSilence = 0.5;
inline constexpr double kMaxPairSilence = 1.5;

/// neutral + " [tag] " + styled, audio joined by a U[0.5, 1.5] s zero gap.
inline PairedExample build_pair(const Utterance& neutral, const Utterance& styled, Tag tag, Rng& rng) {
    tokstream::detail::require(tag.is_style(), "pair delimiter must be a style tag");
    tokstream::detail::require(neutral.audio.sample_rate == styled.audio.sample_rate,
                               "paired utterances must share a sample rate");
    const auto rate = neutral.audio.sample_rate;
    PairedExample ex;
    ex.silence_seconds = rng.uniform(kMinPairSilence, kMaxPairSilence);
    ex.silence_samples = static_cast<std::size_t>(std::llround(ex.silence_seconds * rate));
    ex.transcript = neutral.text + " " + tag.bracketed() + " " + styled.text;
    ex.audio.sample_rate = rate;
    ex.audio.samples.reserve(neutral.audio.size() + ex.silence_samples + styled.audio.size());
    ex.audio.append(neutral.audio);
    ex.audio.samples.resize(ex.audio.size() + ex.silence_samples, 0.0f);
    ex.audio.append(styled.audio);
    return ex;
}

struct StyledUtterance {
    Utterance utterance;
    Tag style;
};

struct NonVerbalClip {
    Tag tag;
    Waveform audio;
};

struct CorpusRatios {
    double nonverbal = 0.20; // share of examples containing a non-verbal tag
    double unpaired = 0.30;  // share of examples that are plain neutral utterances
};

enum class ExampleKind { Paired, UnpairedNeutral };

struct CorpusExample {
    ExampleKind kind;
    std::string transcript;
    Waveform audio;
    bool has_nonverbal = false;
};

struct CorpusPools {
    std::vector<Utterance> neutrals;
    std::vector<StyledUtterance> styleds;
    std::vector<NonVerbalClip> nonverbals;
};

/// Walk the neutral pool once. Each neutral either stays unpaired or is paired
/// with k ~ U{1..5} distinct styled utterances (k capped by the pool). The
/// per-neutral unpaired probability is chosen so that the expected share of
/// unpaired examples equals `ratios.unpaired`. Independently, each example
/// receives a non-verbal clip (tag prepended to the transcript, clip prepended
/// to the audio) with probability `ratios.nonverbal`.
inline std::vector<CorpusExample> build_corpus(const CorpusPools& pools, Rng& rng,
                                               const CorpusRatios& ratios = {}) {
    using tokstream::detail::require;
    require(!pools.neutrals.empty() && !pools.styleds.empty(), "corpus pools must be non-empty");
    require(ratios.nonverbal >= 0.0 && ratios.nonverbal <= 1.0 && ratios.unpaired >= 0.0 &&
                ratios.unpaired < 1.0,
            "corpus ratios out of range");
    require(ratios.nonverbal == 0.0 || !pools.nonverbals.empty(),
            "non-verbal ratio needs a non-verbal clip pool");
    for (const auto& clip : pools.nonverbals) require(!clip.tag.is_style(), "non-verbal pool holds a style tag");

    const double max_k = static_cast<double>(std::min<std::size_t>(5, pools.styleds.size()));
    double mean_pairs = 0.0;
    for (int k = 1; k <= 5; ++k) mean_pairs += std::min(static_cast<double>(k), max_k) / 5.0;
    const double r = ratios.unpaired;
    const double p_unpaired = r * mean_pairs / (1.0 - r + r * mean_pairs);

    std::vector<std::size_t> styled_index(pools.styleds.size());
    std::iota(styled_index.begin(), styled_index.end(), std::size_t{0});

    std::vector<CorpusExample> corpus;
    auto add = [&](CorpusExample ex) {
        if (ratios.nonverbal > 0.0 && rng.uniform() < ratios.nonverbal) {
            const auto& clip = pools.nonverbals[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(pools.nonverbals.size()) - 1))];
            ex.transcript = clip.tag.bracketed() + " " + ex.transcript;
            Waveform joined{clip.audio.samples, ex.audio.sample_rate};
            joined.append(ex.audio);
            ex.audio = std::move(joined);
            ex.has_nonverbal = true;
        }
        corpus.push_back(std::move(ex));
    };

    for (const auto& neutral : pools.neutrals) {
        if (rng.uniform() < p_unpaired) {
            add({ExampleKind::UnpairedNeutral, neutral.text, neutral.audio});
            continue;
        }
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(rng.uniform_int(1, 5)),
                                             pools.styleds.size());
        // Partial Fisher-Yates: first k entries become a uniform k-subset.
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(styled_index.size()) - 1));
            std::swap(styled_index[i], styled_index[j]);
            const auto& styled = pools.styleds[styled_index[i]];
            auto pair = build_pair(neutral, styled.utterance, styled.style, rng);
            add({ExampleKind::Paired, std::move(pair.transcript), std::move(pair.audio)});
        }
    }
    return corpus;
}

} // namespace tokstream::markup
