#pragma once

// Audio markup: bracketed inline tags for speaking styles and non-verbal
// vocalizations, e.g. "[whispering] keep it down [sigh] fine".

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tokstream::markup {

enum class TagCategory { Style, NonVerbal };

struct TagInfo {
    std::string_view name;
    TagCategory category;
};

inline constexpr std::array<TagInfo, 15> kTags{{
    {"angry", TagCategory::Style},
    {"disgusted", TagCategory::Style},
    {"fearful", TagCategory::Style},
    {"happy", TagCategory::Style},
    {"laughing", TagCategory::Style},
    {"sad", TagCategory::Style},
    {"surprised", TagCategory::Style},
    {"whispering", TagCategory::Style},
    {"breathe", TagCategory::NonVerbal},
    {"clear_throat", TagCategory::NonVerbal},
    {"cough", TagCategory::NonVerbal},
    {"cry", TagCategory::NonVerbal},
    {"laugh", TagCategory::NonVerbal},
    {"sigh", TagCategory::NonVerbal},
    {"yawn", TagCategory::NonVerbal},
}};

/// One of the 15 known tags, stored by index into kTags.
class Tag {
public:
    static std::optional<Tag> lookup(std::string_view name) {
        for (std::size_t i = 0; i < kTags.size(); ++i)
            if (kTags[i].name == name) return Tag(i);
        return std::nullopt;
    }

    std::string_view name() const { return kTags[index_].name; }
    TagCategory category() const { return kTags[index_].category; }
    bool is_style() const { return category() == TagCategory::Style; }
    std::string bracketed() const { return "[" + std::string(name()) + "]"; }

    friend bool operator==(Tag, Tag) = default;

private:
    explicit Tag(std::size_t index) : index_(index) {}
    std::size_t index_;
};

inline std::string_view to_string(TagCategory c) {
    return c == TagCategory::Style ? "style" : "nonverbal";
}

using Item = std::variant<std::string, Tag>;

struct Diagnostic {
    std::size_t offset; // byte offset of the '[' in the input
    std::string message;
};

struct Document {
    std::vector<Item> items;
    friend bool operator==(const Document&, const Document&) = default;
};

struct ParseResult {
    Document document;
    std::vector<Diagnostic> diagnostics;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

inline void push_text(Document& doc, std::string_view text) {
    text = trim(text);
    if (text.empty()) return;
    if (!doc.items.empty()) {
        if (auto* prev = std::get_if<std::string>(&doc.items.back())) {
            *prev += ' ';
            *prev += text;
            return;
        }
    }
    doc.items.emplace_back(std::string(text));
}

} // namespace detail

/// Total parse. Known tags become Tag items; unknown bracketed strings stay
/// in the surrounding text run and produce a diagnostic. Text runs are
/// trimmed and whitespace-only runs dropped.
inline ParseResult parse(std::string_view text) {
    ParseResult out;
    std::size_t run_start = 0;
    std::size_t pos = 0;
    while ((pos = text.find('[', pos)) != std::string_view::npos) {
        const auto close = text.find(']', pos + 1);
        if (close == std::string_view::npos) break;
        const auto inner = text.substr(pos + 1, close - pos - 1);
        if (inner.find('[') != std::string_view::npos) {
            pos = pos + 1 + inner.find('[');
            continue;
        }
        if (auto tag = Tag::lookup(inner)) {
            detail::push_text(out.document, text.substr(run_start, pos - run_start));
            out.document.items.emplace_back(*tag);
            run_start = close + 1;
        } else {
            out.diagnostics.push_back({pos, "unknown markup tag [" + std::string(inner) + "] kept as text"});
        }
        pos = close + 1;
    }
    detail::push_text(out.document, text.substr(run_start));
    return out;
}

/// Items joined by single spaces.
inline std::string serialize(const Document& doc) {
    std::string out;
    for (const auto& item : doc.items) {
        if (!out.empty()) out += ' ';
        if (const auto* s = std::get_if<std::string>(&item))
            out += *s;
        else
            out += std::get<Tag>(item).bracketed();
    }
    return out;
}

/// Text with every tag removed, runs joined by single spaces.
inline std::string plain_text(const Document& doc) {
    std::string out;
    for (const auto& item : doc.items)
        if (const auto* s = std::get_if<std::string>(&item)) {
            if (!out.empty()) out += ' ';
            out += *s;
        }
    return out;
}

inline bool has_category(const Document& doc, TagCategory c) {
    return std::ranges::any_of(doc.items, [c](const Item& item) {
        const auto* t = std::get_if<Tag>(&item);
        return t && t->category() == c;
    });
}

/// Reward components switched on by the tags in a prompt.
struct ActivationTable {
    std::set<std::string> base{"wer", "sim", "dnsmos"};
    std::set<std::string> on_style{"style", "emotion"};
    std::set<std::string> on_nonverbal{"nonverbal"};
};

inline std::set<std::string> active_reward_tags(const Document& doc, const ActivationTable& table = {}) {
    std::set<std::string> active = table.base;
    if (has_category(doc, TagCategory::Style)) active.insert(table.on_style.begin(), table.on_style.end());
    if (has_category(doc, TagCategory::NonVerbal))
        active.insert(table.on_nonverbal.begin(), table.on_nonverbal.end());
    return active;
}

} // namespace tokstream::markup
