#pragma once

// Reward stack for group-relative alignment: error rates, normalized reward
// components, conditional linear combination and mean-centered advantages.

#include <tokstream/errors.hpp>
#include <tokstream/markup.hpp>
#include <tokstream/timebase.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace tokstream::rewards {

/// Levenshtein distance with unit substitution/insertion/deletion costs.
template <typename T>
std::size_t edit_distance(std::span<const T> ref, std::span<const T> hyp) {
    std::vector<std::size_t> row(hyp.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 1; i <= ref.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= hyp.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({up + 1, row[j - 1] + 1, diag + (ref[i - 1] == hyp[j - 1] ? 0u : 1u)});
            diag = up;
        }
    }
    return row[hyp.size()];
}

/// Edit distance over reference length; may exceed 1.
template <typename T>
double error_rate(std::span<const T> ref, std::span<const T> hyp) {
    tokstream::detail::require(!ref.empty(), "error rate needs a non-empty reference");
    return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

inline std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    for (std::string w; in >> w;) words.push_back(std::move(w));
    return words;
}

inline double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
    return error_rate(reference, hypothesis);
}

inline double wer(std::string_view reference, std::string_view hypothesis) {
    const auto r = split_words(reference);
    const auto h = split_words(hypothesis);
    return wer(std::span<const std::string>(r), std::span<const std::string>(h));
}

struct TextNormalization {
    bool lowercase = true;
    bool strip_punctuation = true;
    bool collapse_whitespace = true;
};

/// Decode UTF-8 to code points; invalid bytes map to U+FFFD.
inline std::vector<char32_t> utf8_codepoints(std::string_view s) {
    std::vector<char32_t> out;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
        if (len == 0 || i + static_cast<std::size_t>(len) > s.size()) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        char32_t cp = len == 1 ? c : c & (0x7F >> len);
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
            if ((cc >> 6) != 0x2) ok = false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        out.push_back(ok ? cp : 0xFFFD);
        i += ok ? static_cast<std::size_t>(len) : 1;
    }
    return out;
}

/// Character sequence used for CER. Whitespace counts as characters.
inline std::vector<char32_t> normalize_chars(std::string_view text, const TextNormalization& norm = {}) {
    std::vector<char32_t> out;
    for (char32_t c : utf8_codepoints(text)) {
        const bool ascii = c < 0x80;
        if (norm.strip_punctuation && ascii && std::ispunct(static_cast<int>(c))) continue;
        if (ascii && std::isspace(static_cast<int>(c))) {
            if (norm.collapse_whitespace && (out.empty() || out.back() == U' ')) continue;
            out.push_back(U' ');
            continue;
        }
        if (norm.lowercase && ascii) c = static_cast<char32_t>(std::tolower(static_cast<int>(c)));
        out.push_back(c);
    }
    if (norm.collapse_whitespace && !out.empty() && out.back() == U' ') out.pop_back();
    return out;
}

inline double cer(std::string_view reference, std::string_view hypothesis, const TextNormalization& norm = {}) {
    const auto r = normalize_chars(reference, norm);
    const auto h = normalize_chars(hypothesis, norm);
    return error_rate(std::span<const char32_t>(r), std::span<const char32_t>(h));
}

inline constexpr double kWerSensitivity = 2.5;

/// exp(-k * rate), in (0, 1].
inline double reward_wer(double rate, double k = kWerSensitivity) {
    tokstream::detail::require(rate >= 0.0, "error rate must be >= 0");
    return std::exp(-k * rate);
}

/// (cos + 1) / 2.
inline double reward_similarity(double cos) {
    tokstream::detail::require(cos >= -1.0 && cos <= 1.0, "cosine similarity must be in [-1, 1]");
    return (cos + 1.0) / 2.0;
}

/// (score - 1) / 4 for a DNSMOS score in [1, 5].
inline double reward_dnsmos(double score) {
    tokstream::detail::require(score >= 1.0 && score <= 5.0, "DNSMOS score must be in [1, 5]");
    return (score - 1.0) / 4.0;
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    tokstream::detail::require(!a.empty() && a.size() == b.size(), "vectors must be equal, non-zero length");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    tokstream::detail::require(na > 0.0 && nb > 0.0, "cosine similarity of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

struct RewardWeights {
    std::map<std::string, double> weights{{"wer", 1.0}, {"sim", 1.0}, {"dnsmos", 1.0}};
};

struct RewardBreakdown {
    std::map<std::string, double> components;
    std::set<std::string> active;
};

/// Sum of w_i * R_i over active components only.
inline double composite_reward(const RewardBreakdown& b, const RewardWeights& w) {
    double total = 0.0;
    for (const auto& name : b.active) {
        const auto c = b.components.find(name);
        if (c == b.components.end()) throw ConfigError("active reward component '" + name + "' has no value");
        const auto wi = w.weights.find(name);
        if (wi == w.weights.end()) throw ConfigError("active reward component '" + name + "' has no weight");
        tokstream::detail::require(c->second >= 0.0 && c->second <= 1.0,
                                   "reward component '" + name + "' outside [0, 1]");
        total += wi->second * c->second;
    }
    return total;
}

inline constexpr std::size_t kDefaultGroupSize = 8;

/// r_i - mean(r), without standard-deviation scaling.
inline std::vector<double> grpo_advantages(std::span<const double> rewards) {
    tokstream::detail::require(rewards.size() >= 2, "a group needs at least two completions");
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
    std::vector<double> adv(rewards.size());
    std::ranges::transform(rewards, adv.begin(), [mean](double r) { return r - mean; });
    return adv;
}

// Scorer interfaces for the evaluation pipeline (decode -> transcribe ->
// embed -> MOS). Real ASR / speaker-verification / DNSMOS models plug in here.

class Transcriber {
public:
    virtual ~Transcriber() = default;
    virtual std::string transcribe(const Waveform& audio) const = 0;
};

class SpeakerEmbedder {
public:
    virtual ~SpeakerEmbedder() = default;
    virtual std::vector<double> embed(const Waveform& audio) const = 0;
};

class QualityScorer {
public:
    virtual ~QualityScorer() = default;
    virtual double dnsmos(const Waveform& audio) const = 0;
};

/// Returns a fixed transcript.
class FixedTranscriber final : public Transcriber {
public:
    explicit FixedTranscriber(std::string text) : text_(std::move(text)) {}
    std::string transcribe(const Waveform&) const override { return text_; }

private:
    std::string text_;
};

/// Per-band RMS over `bands` equal slices of the clip, plus a bias term.
class BandEnergyEmbedder final : public SpeakerEmbedder {
public:
    explicit BandEnergyEmbedder(std::size_t bands = 8) : bands_(bands) {}
    std::vector<double> embed(const Waveform& audio) const override {
        std::vector<double> e(bands_ + 1, 0.0);
        e[bands_] = 1.0;
        if (audio.empty()) return e;
        for (std::size_t b = 0; b < bands_; ++b) {
            const std::size_t lo = audio.size() * b / bands_;
            const std::size_t hi = std::max(lo + 1, audio.size() * (b + 1) / bands_);
            double sum = 0.0;
            for (std::size_t n = lo; n < hi && n < audio.size(); ++n) sum += double(audio.samples[n]) * audio.samples[n];
            e[b] = std::sqrt(sum / static_cast<double>(hi - lo));
        }
        return e;
    }

private:
    std::size_t bands_;
};

/// Maps loudness linearly from [-60, 0] dB onto [1, 5].
class LoudnessQualityScorer final : public QualityScorer {
public:
    double dnsmos(const Waveform& audio) const override {
        const double db = audio.empty() ? -100.0 : rms_db(audio);
        return std::clamp(1.0 + 4.0 * (db + 60.0) / 60.0, 1.0, 5.0);
    }
};

struct Scorers {
    const Transcriber* asr = nullptr;
    const SpeakerEmbedder* embedder = nullptr;
    const QualityScorer* quality = nullptr;
    bool use_cer = false;
    double wer_k = kWerSensitivity;
};

struct Completion {
    Waveform audio;
};

/// Base components for one completion. Conditional components (style,
/// emotion, nonverbal) have no scorer here; the active set still records
/// which ones the prompt switches on.
inline RewardBreakdown score_completion(const std::string& prompt, const Waveform& reference_audio,
                                        const std::string& reference_text, const Waveform& completion,
                                        const Scorers& s) {
    tokstream::detail::require(s.asr && s.embedder && s.quality, "scorers must be set");
    const auto doc = markup::parse(prompt).document;
    RewardBreakdown b;
    const auto hyp = s.asr->transcribe(completion);
    const double rate = s.use_cer ? cer(reference_text, hyp) : wer(reference_text, hyp);
    b.components["wer"] = reward_wer(rate, s.wer_k);
    const auto e_ref = s.embedder->embed(reference_audio);
    const auto e_out = s.embedder->embed(completion);
    b.components["sim"] = reward_similarity(cosine_similarity(e_ref, e_out));
    b.components["dnsmos"] = reward_dnsmos(s.quality->dnsmos(completion));
    for (const auto& name : markup::active_reward_tags(doc))
        if (b.components.contains(name)) b.active.insert(name);
    return b;
}

struct GroupScore {
    std::vector<RewardBreakdown> breakdowns;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

/// Score every completion concurrently; results are joined in input order.
inline GroupScore score_group(const std::string& prompt, const Waveform& reference_audio,
                              const std::string& reference_text, std::span<const Waveform> completions,
                              const Scorers& s, const RewardWeights& w = {}) {
    std::vector<std::future<RewardBreakdown>> jobs;
    jobs.reserve(completions.size());
    for (const auto& c : completions)
        jobs.push_back(std::async(std::launch::async, [&, ptr = &c] {
            return score_completion(prompt, reference_audio, reference_text, *ptr, s);
        }));
    GroupScore g;
    for (auto& j : jobs) {
        g.breakdowns.push_back(j.get());
        g.rewards.push_back(composite_reward(g.breakdowns.back(), w));
    }
    g.advantages = grpo_advantages(g.rewards);
    return g;
}

} // namespace tokstream::rewards
