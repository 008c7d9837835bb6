#pragma once

// Fine-tuning data filters: DNSMOS low tail, per-language speaking-rate
// tails, then transcript heuristics.

#include <tokstream/errors.hpp>
#include <tokstream/rewards.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace tokstream::filtering {

struct SampleMeta {
    std::string id;
    double dnsmos = 0.0;
    double duration = 0.0; // seconds
    std::string text;
    std::string language;

    /// Code points of the transcript per second.
    double cps() const {
        return static_cast<double>(rewards::utf8_codepoints(text).size()) / duration;
    }
};

inline std::size_t tail_count(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
}

namespace detail {

template <typename Key>
std::vector<std::size_t> order_by(const std::vector<SampleMeta>& s, Key key) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::ranges::sort(idx, [&](std::size_t a, std::size_t b) {
        const double ka = key(s[a]), kb = key(s[b]);
        return ka < kb || (ka == kb && s[a].id < s[b].id);
    });
    return idx;
}

inline std::vector<SampleMeta> keep_unmarked(const std::vector<SampleMeta>& s, const std::vector<bool>& drop) {
    std::vector<SampleMeta> kept;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!drop[i]) kept.push_back(s[i]);
    return kept;
}

} // namespace detail

/// Drops the floor(fraction * N) lowest-DNSMOS samples; ties go to the lower id.
/// Kept samples keep their input order.
inline std::vector<SampleMeta> filter_dnsmos(const std::vector<SampleMeta>& samples, double fraction = 0.20) {
    tokstream::detail::require(fraction >= 0.0 && fraction < 1.0, "DNSMOS fraction must be in [0, 1)");
    const auto order = detail::order_by(samples, [](const SampleMeta& m) { return m.dnsmos; });
    std::vector<bool> drop(samples.size(), false);
    for (std::size_t i = 0; i < tail_count(fraction, samples.size()); ++i) drop[order[i]] = true;
    return detail::keep_unmarked(samples, drop);
}

/// Per language: drops the floor(low * N_lang) slowest and floor(high * N_lang)
/// fastest samples by characters per second. Both tails are cut from one
/// ascending (cps, id) order.
inline std::vector<SampleMeta> filter_cps(const std::vector<SampleMeta>& samples, double low = 0.05,
                                          double high = 0.05) {
    tokstream::detail::require(low >= 0.0 && high >= 0.0 && low + high < 1.0, "CPS tails must sum below 1");
    for (const auto& s : samples) tokstream::detail::require(s.duration > 0.0, "sample " + s.id + " has no duration");
    std::map<std::string, std::vector<std::size_t>> by_language;
    for (std::size_t i = 0; i < samples.size(); ++i) by_language[samples[i].language].push_back(i);

    std::vector<bool> drop(samples.size(), false);
    for (auto& [lang, members] : by_language) {
        std::ranges::sort(members, [&](std::size_t a, std::size_t b) {
            const double ca = samples[a].cps(), cb = samples[b].cps();
            return ca < cb || (ca == cb && samples[a].id < samples[b].id);
        });
        const auto n = members.size();
        const auto slow = tail_count(low, n), fast = tail_count(high, n);
        for (std::size_t i = 0; i < slow; ++i) drop[members[i]] = true;
        for (std::size_t i = 0; i < fast; ++i) drop[members[n - 1 - i]] = true;
    }
    return detail::keep_unmarked(samples, drop);
}

enum class TextVerdict { Keep, Empty, PunctuationOnly, NoLetters };

inline std::string_view to_string(TextVerdict v) {
    switch (v) {
    case TextVerdict::Keep: return "keep";
    case TextVerdict::Empty: return "empty";
    case TextVerdict::PunctuationOnly: return "punctuation-only";
    case TextVerdict::NoLetters: return "no-letters";
    }
    return "?";
}

namespace detail {

// Non-ASCII code points count as letters except common punctuation and symbol blocks.
inline bool is_symbol_block(char32_t c) {
    return (c >= 0x2000 && c <= 0x2BFF) || (c >= 0x3000 && c <= 0x303F) || (c >= 0xFE30 && c <= 0xFE4F) ||
           (c >= 0xFF00 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) || (c >= 0x1F000 && c <= 0x1FAFF) ||
           c == 0x00A0 || (c >= 0x00A1 && c <= 0x00BF) || c == 0xFFFD;
}

} // namespace detail

inline TextVerdict text_heuristics(std::string_view text) {
    bool any_visible = false, any_letter = false, any_other = false;
    for (char32_t c : rewards::utf8_codepoints(text)) {
        if (c < 0x80) {
            const int a = static_cast<int>(c);
            if (std::isspace(a)) continue;
            any_visible = true;
            if (std::isalpha(a)) any_letter = true;
            else if (!std::ispunct(a)) any_other = true;
        } else if (c == 0x00A0 || c == 0x3000) {
            continue;
        } else {
            any_visible = true;
            if (detail::is_symbol_block(c)) continue;
            any_letter = true;
        }
    }
    if (!any_visible) return TextVerdict::Empty;
    if (any_letter) return TextVerdict::Keep;
    return any_other ? TextVerdict::NoLetters : TextVerdict::PunctuationOnly;
}

struct PipelineOptions {
    double dnsmos_fraction = 0.20;
    double cps_low = 0.05;
    double cps_high = 0.05;
};

struct PipelineReport {
    std::size_t input = 0;
    std::size_t removed_dnsmos = 0;
    std::size_t removed_cps = 0;
    std::size_t removed_text = 0;
    std::map<std::string, std::size_t> text_reasons;
    std::size_t kept = 0;
};

/// DNSMOS tail, then CPS tails on the survivors, then transcript heuristics.
inline std::pair<std::vector<SampleMeta>, PipelineReport> run_pipeline(const std::vector<SampleMeta>& samples,
                                                                        const PipelineOptions& opts = {}) {
    PipelineReport report;
    report.input = samples.size();
    auto stage1 = filter_dnsmos(samples, opts.dnsmos_fraction);
    report.removed_dnsmos = samples.size() - stage1.size();
    auto stage2 = filter_cps(stage1, opts.cps_low, opts.cps_high);
    report.removed_cps = stage1.size() - stage2.size();
    std::vector<SampleMeta> kept;
    for (auto& s : stage2) {
        const auto verdict = text_heuristics(s.text);
        if (verdict == TextVerdict::Keep) {
            kept.push_back(std::move(s));
        } else {
            ++report.removed_text;
            ++report.text_reasons[std::string(to_string(verdict))];
        }
    }
    report.kept = kept.size();
    return {std::move(kept), report};
}

} // namespace tokstream::filtering
