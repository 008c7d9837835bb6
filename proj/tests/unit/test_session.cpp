#include <catch_amalgamated.hpp>

#include <tokstream/session.hpp>

using namespace tokstream;

namespace {
SessionConfig config(std::initializer_list<std::pair<const std::string, std::string>> kv) {
    SessionConfig c;
    c.apply(KeyValues(kv));
    return c;
}
} // namespace

TEST_CASE("voicing plan") {
    const SessionConfig c;
    const auto plan = plan_voicing("hi [laugh] there [happy]", c);
    const std::size_t gap = c.mock.context_window_tokens + 2;
    // "hi" -> 6 voiced, laugh -> 10 voiced, "there" -> 15 voiced, each followed by a gap; style tag adds nothing.
    CHECK(plan.size() == 6 + 10 + 15 + 3 * gap);
    CHECK(std::count(plan.begin(), plan.end(), true) == 31);
    CHECK(plan_voicing("", c).empty());
    std::string longtext;
    for (int i = 0; i < 500; ++i) longtext += "word ";
    CHECK(plan_voicing(longtext, c).size() == kMaxUtteranceTokens);
}

TEST_CASE("offline synthesis is deterministic and conserves samples") {
    const auto c = config({{"seed", "3"}});
    const auto a = synthesize_offline("hello streaming world", c);
    const auto b = synthesize_offline("hello streaming world", c);
    CHECK(a.tokens == b.tokens);
    REQUIRE(a.chunks.size() == b.chunks.size());
    for (std::size_t i = 0; i < a.chunks.size(); ++i) CHECK(a.chunks[i] == b.chunks[i]);
    CHECK(a.joined(48000).size() == a.tokens.size() * 960);
    CHECK(synthesize_offline("hello streaming world", config({{"seed", "4"}})).tokens != a.tokens);
}

TEST_CASE("offline output equals one-shot decode with enough context") {
    const auto c = config({{"seed", "5"}, {"context_tokens", "4"}, {"chunk_tokens", "30"}});
    std::string text;
    for (int i = 0; i < 40; ++i) text += "token" + std::to_string(i) + " ";
    const auto r = synthesize_offline(text, c);
    const MockDecoder d(c.decoder, c.mock);
    CHECK(r.joined(48000).samples == d.decode(r.tokens).samples);
}

TEST_CASE("batch arrival does not change emissions") {
    const auto c = config({{"seed", "6"}, {"chunk_tokens", "40"}});
    const auto ref = synthesize_offline("the quick brown fox jumps over the lazy dog", c);
    for (std::size_t step : {1u, 7u, 40u, 1000u}) {
        SessionPipeline p(c);
        std::vector<Waveform> got;
        const auto sink = [&](const Waveform& w) { got.push_back(w); };
        for (std::size_t i = 0; i < ref.tokens.size(); i += step)
            p.feed(std::span(ref.tokens).subspan(i, std::min(step, ref.tokens.size() - i)), sink);
        p.finish(sink);
        CHECK(got == ref.chunks);
    }
}

TEST_CASE("silence mode renders zeros") {
    const auto r = synthesize_offline("some words here", config({{"mode", "silence"}}));
    CHECK(std::ranges::all_of(r.tokens, [](TokenId t) { return t == 0; }));
    for (float x : r.joined(48000).samples) REQUIRE(x == 0.0f);
}
