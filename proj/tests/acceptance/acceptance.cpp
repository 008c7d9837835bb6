// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <tokstream/tokstream.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

using namespace tokstream;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail << "first failure: " << what << "; ";
        pass = pass && ok;
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------- 1
Outcome stitcher_correctness() {
    Outcome o;
    const auto t0 = Clock::now();
    const MockDecoder decoder; // C = 4
    const StitcherConfig cfg;  // dt = 120, eps = 1e-3, dT = 8, chunk 100, K = 3
    const std::size_t spt = samples_per_token(decoder.config());
    std::size_t junctions = 0, forced = 0;
    Rng rng(20240601);
    for (int stream = 0; stream < 200; ++stream) {
        const auto target = static_cast<std::size_t>(rng.uniform_int(100, 2000));
        TokenSequence tokens;
        bool voiced = rng.uniform() < 0.5;
        while (tokens.size() < target) {
            if (voiced) {
                const auto n = rng.uniform_int(1, 60);
                for (std::int64_t i = 0; i < n; ++i) {
                    TokenId id;
                    do id = static_cast<TokenId>(rng.uniform_int(0, 65535));
                    while (id % 256 < 32);
                    tokens.push_back(id);
                }
            } else {
                tokens.insert(tokens.end(), static_cast<std::size_t>(rng.uniform_int(5, 20)), 0);
            }
            voiced = !voiced;
        }
        tokens.resize(target);

        StreamStitcher st(decoder, cfg);
        std::vector<float> out;
        std::vector<std::size_t> cuts;
        for (std::size_t i = 0; i < tokens.size(); i += cfg.chunk_tokens) {
            const auto n = std::min(cfg.chunk_tokens, tokens.size() - i);
            const auto e = st.process_chunk(std::span(tokens).subspan(i, n));
            forced += e.forced;
            if (!e.audio.empty()) {
                out.insert(out.end(), e.audio.samples.begin(), e.audio.samples.end());
                cuts.push_back(out.size());
            }
            o.require(st.state().emitted_token_count + st.state().retained.size() == i + n, "token conservation");
            o.require(st.state().emitted_sample_count == out.size(), "sample accounting");
        }
        const auto tail = st.flush();
        out.insert(out.end(), tail.samples.begin(), tail.samples.end());
        o.require(st.state().emitted_token_count == tokens.size(), "conservation after flush");

        // Re-check every junction on the concatenated output.
        for (std::size_t c : cuts) {
            if (c == out.size()) continue; // stream end, no junction
            ++junctions;
            o.require(c % spt == 0, "cut on a token boundary");
            o.require(c >= cfg.radius_samples && c + cfg.radius_samples <= out.size(), "window inside output");
            float peak = 0.0f;
            for (std::size_t n = c - cfg.radius_samples; n < c + cfg.radius_samples; ++n)
                peak = std::max(peak, std::abs(out[n]));
            o.require(peak < cfg.epsilon, "junction window below epsilon");
        }
        o.require(out == decoder.decode(tokens).samples, "bit-identical to one-shot decode");
    }
    const double secs = seconds_since(t0);
    o.require(forced == 0, "no forced emissions on streams with silent runs");
    o.require(secs < 30.0, "runtime < 30 s");
    o.detail << "200 streams, " << junctions << " junctions re-checked, " << forced << " forced, " << secs << " s";
    return o;
}

// ---------------------------------------------------------------- 2
// Independent energy oracle: per-token amplitudes from the documented
// moving-average rule, per-token sine power from the documented frequency map.
double oracle_chunk_db(const TokenSequence& context, const TokenSequence& body, std::size_t c) {
    TokenSequence all = context;
    all.insert(all.end(), body.begin(), body.end());
    double energy = 0.0;
    for (std::size_t i = context.size(); i < all.size(); ++i) {
        const std::size_t lo = i + 1 >= c ? i + 1 - c : 0;
        double a = 0.0;
        for (std::size_t j = lo; j <= i; ++j) a += (all[j] % 256) / 255.0;
        a /= static_cast<double>(i - lo + 1);
        const double f = 110.0 + (all[i] % 64) * 20.0;
        for (int n = 0; n < 960; ++n) {
            const double x = static_cast<float>(a * std::sin(2.0 * std::numbers::pi * f * n / 48000.0));
            energy += x * x;
        }
    }
    return 20.0 * std::log10(std::sqrt(energy / (960.0 * static_cast<double>(body.size()))) + 1e-5);
}

Outcome volume_stabilization() {
    Outcome o;
    const std::size_t c = 4;
    const MockDecoder decoder(DecoderConfig::preset_48k(), {c, 110.0, 20.0});
    // Period-C pattern: every full window holds exactly one 255, so the
    // stabilized amplitude is a constant 0.25.
    const TokenSequence period{255, 0, 0, 0};
    TokenSequence stream;
    for (int i = 0; i < 250; ++i) stream.insert(stream.end(), period.begin(), period.end()); // 20 s

    for (std::size_t i = c - 1; i < stream.size(); ++i)
        o.require(decoder.effective_amplitude(stream, i) == 0.25, "stabilized amplitude constant");

    auto run = [&](std::size_t delta_t, double& oracle_drift) {
        StitcherConfig cfg;
        cfg.context_tokens = delta_t;
        cfg.include_prompt_context = true;
        StreamState state;
        state.prompt_tokens = period;
        std::vector<Waveform> chunks;
        std::vector<double> oracle_db;
        for (std::size_t i = 0; i < stream.size(); i += 100) {
            const TokenSequence body(stream.begin() + static_cast<std::ptrdiff_t>(i),
                                     stream.begin() + static_cast<std::ptrdiff_t>(i + 100));
            const auto ctx = select_context(state, cfg);
            chunks.push_back(decoder.decode_with_context(ctx, body));
            oracle_db.push_back(oracle_chunk_db(ctx, body, c));
            detail::commit_emission(state, body, body.size(), 960, cfg);
        }
        oracle_drift = 0.0;
        for (std::size_t i = 1; i < oracle_db.size(); ++i)
            oracle_drift = std::max(oracle_drift, std::abs(oracle_db[i] - oracle_db[i - 1]));
        return chunk_volume_drift(chunks);
    };
    double oracle_c = 0.0, oracle_0 = 0.0;
    const double with_context = run(c, oracle_c);
    const double without = run(0, oracle_0);
    o.require(std::abs(with_context - oracle_c) < 1e-6, "drift with context matches oracle");
    o.require(std::abs(without - oracle_0) < 1e-6, "drift without context matches oracle");
    o.require(with_context <= 0.1, "drift <= 0.1 dB with dT = C");
    o.require(without > 0.5, "drift > 0.5 dB with dT = 0");
    o.detail << "drift dT=C: " << with_context << " dB, dT=0: " << without << " dB (oracle " << oracle_0 << ")";
    return o;
}

// ---------------------------------------------------------------- 3
Outcome reward_analytics() {
    using namespace rewards;
    Outcome o;
    o.require(std::abs(reward_wer(0.25, 2.5) - 0.535261) <= 1e-6, "reward_wer(0.25, 2.5)");
    for (double cos : {-1.0, -0.5, 0.0, 0.5, 1.0})
        o.require(reward_similarity(cos) == (cos + 1.0) / 2.0, "reward_similarity closed form");
    for (double s : {1.0, 2.0, 3.0, 4.0, 5.0}) o.require(reward_dnsmos(s) == (s - 1.0) / 4.0, "reward_dnsmos closed form");

    Rng rng(31);
    double worst_sum = 0.0, worst_shift = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        RewardBreakdown b;
        b.components = {{"wer", rng.uniform()}, {"sim", rng.uniform()}, {"dnsmos", rng.uniform()}};
        b.active = {"wer", "sim", "dnsmos"};
        const double hand = b.components["wer"] + b.components["sim"] + b.components["dnsmos"];
        o.require(std::abs(composite_reward(b, {}) - hand) <= 1e-9, "composite equals hand sum");

        std::vector<double> group(static_cast<std::size_t>(rng.uniform_int(2, 16)));
        for (auto& r : group) r = rng.uniform(0.0, 3.0);
        const auto adv = grpo_advantages(group);
        double sum = 0.0;
        for (double a : adv) sum += a;
        worst_sum = std::max(worst_sum, std::abs(sum));
        o.require(std::abs(sum) <= 1e-12, "advantages sum to zero");
        const double shift = rng.uniform(-5.0, 5.0);
        auto shifted = group;
        for (auto& r : shifted) r += shift;
        const auto adv2 = grpo_advantages(shifted);
        for (std::size_t i = 0; i < adv.size(); ++i) worst_shift = std::max(worst_shift, std::abs(adv[i] - adv2[i]));
    }
    o.require(worst_shift <= 1e-12, "advantages shift-invariant");
    o.detail << "max |sum adv| " << worst_sum << ", max shift delta " << worst_shift;
    return o;
}

// ---------------------------------------------------------------- 4
std::size_t brute_alignment(const std::vector<std::string>& r, std::size_t i, const std::vector<std::string>& h,
                            std::size_t j) {
    if (i == r.size()) return h.size() - j;
    if (j == h.size()) return r.size() - i;
    return std::min({brute_alignment(r, i + 1, h, j + 1) + (r[i] == h[j] ? 0 : 1),
                     brute_alignment(r, i + 1, h, j) + 1, brute_alignment(r, i, h, j + 1) + 1});
}

Outcome wer_oracle() {
    Outcome o;
    const auto t0 = Clock::now();
    const std::vector<std::string> alphabet{"x", "y", "z"};
    Rng rng(4);
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::string> r(static_cast<std::size_t>(rng.uniform_int(1, 6)));
        std::vector<std::string> h(static_cast<std::size_t>(rng.uniform_int(0, 6)));
        for (auto& w : r) w = alphabet[static_cast<std::size_t>(rng.uniform_int(0, 2))];
        for (auto& w : h) w = alphabet[static_cast<std::size_t>(rng.uniform_int(0, 2))];
        const auto brute = brute_alignment(r, 0, h, 0);
        const auto dp = rewards::edit_distance(std::span<const std::string>(r), std::span<const std::string>(h));
        const double rate = rewards::wer(r, h);
        if (dp != brute || rate != static_cast<double>(brute) / static_cast<double>(r.size())) ++mismatches;
    }
    const double secs = seconds_since(t0);
    o.require(mismatches == 0, "DP equals brute force");
    o.require(secs < 10.0, "runtime < 10 s");
    o.detail << "500 cases, " << mismatches << " mismatches, " << secs << " s";
    return o;
}

// ---------------------------------------------------------------- 5
Outcome codec_arithmetic() {
    Outcome o;
    const std::map<std::uint32_t, std::size_t> expected{{16000, 320}, {24000, 480}, {48000, 960}};
    for (const auto& [rate, spt] : expected) {
        const auto cfg = DecoderConfig::for_rate(rate);
        o.require(cfg.hop_length * cfg.upsampling() == rate / 50, "hop x strides = rate / 50");
        o.require(samples_per_token(cfg) == spt, "samples per token");
        const MockDecoder decoder(cfg);
        for (std::size_t n = 1; n <= 50; ++n)
            o.require(decoder.decode(TokenSequence(n, 9)).size() == n * spt, "decode length law");
        Rng rng(rate);
        for (int i = 0; i < 1000; ++i) {
            const auto a = static_cast<std::size_t>(rng.uniform_int(0, 1 << 20));
            const auto b = a + static_cast<std::size_t>(rng.uniform_int(0, 1 << 20));
            const auto [s, e] = token_span_to_sample_span(a, b, cfg);
            o.require(s == a * spt && e == b * spt && (e - s) / spt == b - a, "span arithmetic");
        }
    }
    o.detail << "16k/24k/48k -> 320/480/960 samples per token";
    return o;
}

// ---------------------------------------------------------------- 6
Outcome store_checks() {
    using namespace store;
    Outcome o;
    Rng rng(66);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Utterance> utts;
        const auto n = rng.uniform_int(0, 10);
        for (std::int64_t i = 0; i < n; ++i) {
            Utterance u{"r" + std::to_string(trial) + "_" + std::to_string(i), {}, 48000};
            u.tokens = {0, 65535};
            const auto len = rng.uniform_int(0, 300);
            for (std::int64_t t = 0; t < len; ++t) u.tokens.push_back(static_cast<TokenId>(rng.uniform_int(0, 65535)));
            u.tokens.push_back(65535);
            u.sample_rate = std::array<std::uint32_t, 3>{16000, 24000, 48000}[static_cast<std::size_t>(i % 3)];
            utts.push_back(std::move(u));
        }
        const auto bytes = pack(utts);
        const StoreReader r(bytes);
        o.require(r.entries().size() == utts.size(), "record count");
        for (const auto& u : utts) o.require(r.unpack(u.id) == u.tokens, "round trip");
        o.require(pack(utts) == bytes, "deterministic layout");
    }

    std::vector<Utterance> hour;
    for (int i = 0; i < 90; ++i) {
        Utterance u{"hour_" + std::to_string(i), mock_generate(static_cast<std::uint64_t>(i), kMaxUtteranceTokens), 48000};
        hour.push_back(std::move(u));
    }
    const auto bytes = pack(hour);
    const StoreReader reader(bytes);
    const auto s = stats(reader);
    o.require(s.token_bytes == 360000, "payload 360000 bytes");
    o.require(s.raw_pcm_bytes == 345600000ull, "raw PCM 345600000 bytes");
    o.require(s.total_ratio >= 500.0, "total ratio >= 500");

    // Single-byte corruption anywhere in the file.
    std::size_t detected = 0, tried = 0;
    for (std::size_t pos = 0; pos < bytes.size(); pos += 97) {
        auto bad = bytes;
        bad[pos] ^= 0x5A;
        ++tried;
        try {
            const StoreReader rr(std::move(bad));
            for (const auto& u : hour) rr.unpack(u.id);
        } catch (const StoreError&) {
            ++detected;
        }
    }
    o.require(detected == tried, "corruption detected");
    o.detail << "payload " << s.token_bytes << " B, raw " << s.raw_pcm_bytes << " B, total ratio " << s.total_ratio
             << ":1, corruption " << detected << "/" << tried;
    return o;
}

// ---------------------------------------------------------------- 7
Outcome filtering_checks() {
    using namespace filtering;
    Outcome o;
    Rng rng(77);
    const std::vector<std::string> langs{"en", "zh", "ja"};
    const std::vector<std::string> texts{"hello world", "speech data", "数据", "...", "", "12 34", "okay"};
    std::vector<SampleMeta> samples;
    for (int i = 0; i < 1000; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "u%04d", i);
        samples.push_back({id, std::round(rng.uniform(1.0, 5.0) * 20.0) / 20.0, rng.uniform(1.0, 15.0),
                           texts[static_cast<std::size_t>(rng.uniform_int(0, 6))],
                           langs[static_cast<std::size_t>(rng.uniform_int(0, 2))]});
    }
    const auto [kept, report] = run_pipeline(samples);

    // Sort-based oracle applied in the documented order.
    auto sorted_ids = [](std::vector<SampleMeta> v, auto key) {
        std::sort(v.begin(), v.end(), [&](const auto& a, const auto& b) {
            return std::pair(key(a), a.id) < std::pair(key(b), b.id);
        });
        std::vector<std::string> ids;
        for (const auto& m : v) ids.push_back(m.id);
        return ids;
    };
    const auto by_dnsmos = sorted_ids(samples, [](const SampleMeta& m) { return m.dnsmos; });
    const std::set<std::string> dropped1(by_dnsmos.begin(), by_dnsmos.begin() + 200);
    std::vector<SampleMeta> stage1;
    for (const auto& m : samples)
        if (!dropped1.contains(m.id)) stage1.push_back(m);
    std::set<std::string> dropped2;
    std::size_t expected_cps = 0;
    for (const auto& lang : langs) {
        std::vector<SampleMeta> group;
        for (const auto& m : stage1)
            if (m.language == lang) group.push_back(m);
        const auto t = group.size() / 20;
        expected_cps += 2 * t;
        const auto order = sorted_ids(group, [](const SampleMeta& m) { return m.cps(); });
        for (std::size_t i = 0; i < t; ++i) {
            dropped2.insert(order[i]);
            dropped2.insert(order[order.size() - 1 - i]);
        }
    }
    std::vector<std::string> expect;
    std::size_t expected_text = 0;
    for (const auto& m : stage1) {
        if (dropped2.contains(m.id)) continue;
        if (text_heuristics(m.text) == TextVerdict::Keep) expect.push_back(m.id);
        else ++expected_text;
    }
    std::vector<std::string> got;
    for (const auto& m : kept) got.push_back(m.id);

    o.require(report.removed_dnsmos == 200, "DNSMOS removes floor(0.2 N)");
    o.require(report.removed_cps == expected_cps, "CPS removes 2 floor(0.05 N_lang)");
    o.require(report.removed_text == expected_text, "text removals");
    o.require(got == expect, "kept set matches oracle");

    // Order sensitivity: CPS before DNSMOS yields a different outcome here.
    const auto swapped = filter_dnsmos(filter_cps(samples));
    std::vector<std::string> swapped_ids;
    for (const auto& m : swapped)
        if (text_heuristics(m.text) == TextVerdict::Keep) swapped_ids.push_back(m.id);
    o.require(swapped_ids != got, "stage order is observable");
    o.detail << "removed dnsmos " << report.removed_dnsmos << ", cps " << report.removed_cps << ", text "
             << report.removed_text << ", kept " << report.kept;
    return o;
}

// ---------------------------------------------------------------- 8
Outcome markup_checks() {
    using namespace markup;
    Outcome o;
    const std::set<std::string> style{"angry", "disgusted", "fearful", "happy", "laughing", "sad", "surprised", "whispering"};
    const std::set<std::string> nonverbal{"breathe", "clear_throat", "cough", "cry", "laugh", "sigh", "yawn"};
    std::size_t tags = 0;
    for (const auto& name : style) {
        const auto doc = parse("[" + name + "] text").document;
        const auto* t = std::get_if<Tag>(&doc.items.at(0));
        o.require(t && t->category() == TagCategory::Style, "style tag " + name);
        ++tags;
    }
    for (const auto& name : nonverbal) {
        const auto doc = parse("text [" + name + "]").document;
        const auto* t = std::get_if<Tag>(&doc.items.at(1));
        o.require(t && t->category() == TagCategory::NonVerbal, "non-verbal tag " + name);
        ++tags;
    }
    o.require(tags == 15 && kTags.size() == 15, "15 tags");

    Rng rng(88);
    const std::vector<std::string> words{"hi", "there", "[unknown]", "x]y", "a[b", "ünï", "42", "[Sad]"};
    for (int trial = 0; trial < 1000; ++trial) {
        Document doc;
        bool text_last = false;
        const auto n = rng.uniform_int(0, 10);
        for (std::int64_t i = 0; i < n; ++i) {
            if (!text_last && rng.uniform() < 0.5) {
                std::string run = words[static_cast<std::size_t>(rng.uniform_int(0, 7))];
                for (auto k = rng.uniform_int(0, 3); k > 0; --k) run += " " + words[static_cast<std::size_t>(rng.uniform_int(0, 7))];
                doc.items.emplace_back(run);
                text_last = true;
            } else {
                doc.items.emplace_back(*Tag::lookup(kTags[static_cast<std::size_t>(rng.uniform_int(0, 14))].name));
                text_last = false;
            }
        }
        o.require(parse(serialize(doc)).document == doc, "serialize/parse identity");
    }

    for (int trial = 0; trial < 500; ++trial) {
        const auto rate = std::array<std::uint32_t, 3>{16000, 24000, 48000}[static_cast<std::size_t>(trial % 3)];
        const Utterance a{"neutral", Waveform::constant(0.2f, static_cast<std::size_t>(rng.uniform_int(1, 50000)), rate)};
        const Utterance b{"styled", Waveform::constant(0.4f, static_cast<std::size_t>(rng.uniform_int(1, 50000)), rate)};
        const auto p = build_pair(a, b, *Tag::lookup("whispering"), rng);
        o.require(p.audio.size() == a.audio.size() + p.silence_samples + b.audio.size(), "pair sample conservation");
        o.require(p.silence_samples >= rate / 2 && p.silence_samples <= rate * 3 / 2, "silence in [0.5, 1.5] s");
    }

    CorpusPools pools;
    for (int i = 0; i < 7000; ++i) pools.neutrals.push_back({"n" + std::to_string(i), Waveform::constant(0.1f, 16, 16000)});
    for (const char* s : {"happy", "sad", "angry", "whispering"})
        for (int i = 0; i < 5; ++i)
            pools.styleds.push_back({{std::string(s) + std::to_string(i), Waveform::constant(0.3f, 16, 16000)}, *Tag::lookup(s)});
    for (const char* s : {"laugh", "breathe", "cough"}) pools.nonverbals.push_back({*Tag::lookup(s), Waveform::constant(0.5f, 8, 16000)});
    auto corpus = build_corpus(pools, rng);
    corpus.resize(std::min<std::size_t>(corpus.size(), 10000));
    const double n = static_cast<double>(corpus.size());
    double nv = 0, unpaired = 0;
    for (const auto& ex : corpus) {
        nv += ex.has_nonverbal;
        unpaired += ex.kind == ExampleKind::UnpairedNeutral;
    }
    o.require(corpus.size() == 10000, "10k-sample corpus");
    o.require(std::abs(nv / n - 0.20) <= 0.05, "non-verbal share within 5 pp");
    o.require(std::abs(unpaired / n - 0.30) <= 0.05, "unpaired share within 5 pp");
    o.detail << "15 tags, 1000 round trips, corpus non-verbal " << 100.0 * nv / n << "%, unpaired " << 100.0 * unpaired / n
             << "%";
    return o;
}

// ---------------------------------------------------------------- 9
Outcome sampler_checks() {
    Outcome o;
    SamplerConfig greedy;
    greedy.temperature = 0.0;
    Rng rng(99);
    o.require(sample(Logits{0.1, 3.0, 0.2}, greedy, rng) == 1, "argmax");
    o.require(sample(Logits{2.0, 5.0, 5.0, 5.0}, greedy, rng) == 1, "ties to the lowest id");

    const Logits l{0.5, -0.3, 1.7, 0.0, 1.2, -1.0, 0.8, 0.1};
    SamplerConfig plain;
    plain.top_k = l.size();
    plain.top_p = 1.0;
    double z = 0.0;
    for (double x : l) z += std::exp(x);
    const int draws = 100000;
    std::vector<int> counts(l.size(), 0);
    for (int i = 0; i < draws; ++i) ++counts[sample(l, plain, rng)];
    double chi2 = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        const double e = draws * std::exp(l[i]) / z;
        chi2 += (counts[i] - e) * (counts[i] - e) / e;
    }
    const double p_value =
        boost::math::cdf(boost::math::complement(boost::math::chi_squared(static_cast<double>(l.size() - 1)), chi2));
    o.require(p_value > 0.01, "chi-square p > 0.01");

    // Nucleus enumeration oracle on 3-token distributions.
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> p{rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0)};
        const double s = p[0] + p[1] + p[2];
        for (auto& x : p) x /= s;
        SamplerConfig c = plain;
        c.top_k = 3;
        c.top_p = rng.uniform(0.01, 1.0);
        // Every subset ordered by probability; the support is the smallest
        // prefix of the sorted ids whose mass reaches top_p.
        std::vector<std::uint32_t> ids{0, 1, 2};
        std::sort(ids.begin(), ids.end(), [&](auto a, auto b) { return p[a] > p[b] || (p[a] == p[b] && a < b); });
        std::set<std::uint32_t> expect;
        double mass = 0.0;
        for (auto id : ids) {
            expect.insert(id);
            mass += p[id];
            if (mass >= c.top_p) break;
        }
        const Logits logits{std::log(p[0]), std::log(p[1]), std::log(p[2])};
        std::set<std::uint32_t> got;
        for (const auto& t : filtered_distribution(logits, c)) got.insert(t.id);
        o.require(got == expect, "nucleus support");
    }

    SparseCounts seen;
    for (std::uint32_t i = 0; i < 8; i += 2) seen.add(i, 3);
    o.require(apply_penalties(l, seen, 1.0) == l, "penalty 1 is identity");
    o.detail << "chi2 " << chi2 << " (p = " << p_value << "), 2000 nucleus cases";
    return o;
}

// ---------------------------------------------------------------- 10
Outcome embedding_checks() {
    Outcome o;
    Rng rng(1010);
    Eigen::MatrixXd src(64, 5);
    for (Eigen::Index i = 0; i < src.rows(); ++i) {
        src(i, 0) = 1.0 + rng.normal();
        src(i, 1) = -2.0 + 0.5 * rng.normal();
        src(i, 2) = 0.75; // zero variance
        src(i, 3) = src(i, 0) + 0.1 * rng.normal();
        src(i, 4) = 3.0 * rng.normal();
    }
    const auto out = extend_embeddings(src, 10000, rng);
    const Eigen::MatrixXd fresh = out.bottomRows(10000);
    for (Eigen::Index i = 0; i < fresh.rows(); ++i) o.require(fresh(i, 2) == 0.75, "zero-variance column exact");
    o.require(out.topRows(64) == src, "source rows unchanged");
    const Eigen::RowVectorXd mu = src.colwise().mean();
    const Eigen::RowVectorXd got = fresh.colwise().mean();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < 5; ++j) {
        const double sigma = std::sqrt((src.col(j).array() - mu(j)).square().sum() / (src.rows() - 1));
        const double bound = 3.0 * sigma / std::sqrt(10000.0);
        o.require(std::abs(got(j) - mu(j)) <= bound, "mean within 3 sigma / sqrt(n)");
        if (bound > 0) worst = std::max(worst, std::abs(got(j) - mu(j)) / bound);
    }
    o.detail << "worst mean deviation " << worst << " of the 3-sigma bound";
    return o;
}

// ---------------------------------------------------------------- 11
Outcome server_checks(Clock::time_point suite_start) {
    Outcome o;
    Server server("127.0.0.1", 0);
    server.start();
    const auto port = server.port();
    const std::string text = "streamed speech [breathe] with pauses between the words";

    auto pcm_of = [](const StreamResult& r) {
        std::vector<std::int16_t> pcm;
        for (const auto& f : r.frames) pcm.insert(pcm.end(), f.samples.begin(), f.samples.end());
        return pcm;
    };
    for (const std::string cfg : {"seed=1\n", "seed=2\nchunk_tokens=37\n", "seed=3\nsample_rate=16000\n"}) {
        const auto r = request_stream("127.0.0.1", port, {text, cfg});
        SessionConfig sc;
        sc.apply(parse_key_values(cfg));
        std::vector<std::int16_t> offline;
        for (const auto& ch : synthesize_offline(text, sc).chunks) {
            const auto p = to_pcm16(ch.samples);
            offline.insert(offline.end(), p.begin(), p.end());
        }
        o.require(r.ended && pcm_of(r) == offline, "stream equals offline output");
        for (std::size_t i = 0; i < r.frames.size(); ++i) o.require(r.frames[i].chunk_index == i, "gapless indices");
    }

    const std::string ca = "seed=21\npace_ms=1\n", cb = "seed=22\npace_ms=1\n";
    const auto serial_a = request_stream("127.0.0.1", port, {text, ca});
    const auto serial_b = request_stream("127.0.0.1", port, {text, cb});
    auto fa = std::async(std::launch::async, [&] { return request_stream("127.0.0.1", port, {text, ca}); });
    auto fb = std::async(std::launch::async, [&] { return request_stream("127.0.0.1", port, {text, cb}); });
    o.require(fa.get().frames == serial_a.frames && fb.get().frames == serial_b.frames, "concurrent equals serial");

    // First chunk of exactly 100 tokens: the 101st token supplies the cut window.
    BenchOptions bo;
    bo.port = port;
    bo.requests = 10;
    bo.text = "the quick brown fox jumps over the lazy dog";
    bo.config = {{"mode", "silence"}, {"pace_ms", "0"}, {"batch_tokens", "1"}, {"chunk_tokens", "101"}};
    const auto overhead = bench(bo);
    bo.config["pace_ms"] = "5";
    const auto paced = bench(bo);
    const double expected = 0.5 + overhead.p50;
    o.require(overhead.p90 < 0.05, "pace-0 first chunk < 50 ms");
    o.require(std::abs(paced.p50 - expected) <= 0.05, "paced first chunk within 10% of 500 ms + overhead");
    server.stop();

    const double suite = seconds_since(suite_start);
    o.require(suite < 120.0, "suite runtime < 2 min");
    o.detail << "overhead p50 " << 1e3 * overhead.p50 << " ms, paced p50 " << 1e3 * paced.p50 << " ms / p90 "
             << 1e3 * paced.p90 << " ms (expected " << 1e3 * expected << " +/- 50 ms), suite " << suite << " s";
    return o;
}

} // namespace

int main() {
    const auto start = Clock::now();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"stitcher correctness", stitcher_correctness},
        {"volume stabilization", volume_stabilization},
        {"reward analytics", reward_analytics},
        {"WER oracle equivalence", wer_oracle},
        {"codec arithmetic", codec_arithmetic},
        {"store", store_checks},
        {"filtering", filtering_checks},
        {"markup", markup_checks},
        {"sampler", sampler_checks},
        {"embedding extension", embedding_checks},
        {"server end-to-end", [start] { return server_checks(start); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        failures += !o.pass;
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
    return failures == 0 ? 0 : 1;
}
