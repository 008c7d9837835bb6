#pragma once

// key=value configuration: one `key = value` per line, '#' starts a comment,
// surrounding whitespace ignored. Later assignments override earlier ones.
//
// Session keys (defaults in parentheses):
//   sample_rate (48000)             16000 | 24000 | 48000
//   chunk_tokens (100)              stitcher decode attempt size
//   radius_samples (120)            non-voicing window radius
//   epsilon (0.001)                 non-voicing amplitude threshold
//   context_tokens (8)              decoder context for volume stabilization
//   include_prompt_context (false)  decode the first segment after the prompt
//   prompt_tokens (0)               length of the mock voice prompt
//   max_deferrals (3)               forced emission after this many deferrals
//   temperature (1.0) top_k (50) top_p (1.0) repetition_penalty (1.0)
//   pace_ms (0)                     simulated generation time per token
//   batch_tokens (10)               tokens per scheduling step
//   first_chunk_seconds (2.0)       accumulated audio that ends the first-chunk latency
//   seed (0)
//   mode (speech)                   speech | silence
//   decoder_context (4) base_frequency (110) frequency_step (20)
//   queue_depth (4)                 in-flight batches between generation and emission

#include <tokstream/decoder.hpp>
#include <tokstream/errors.hpp>
#include <tokstream/sampler.hpp>
#include <tokstream/stitcher.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace tokstream {

inline constexpr const char* kConfigEnvVar = "TOKSTREAM_CONFIG";

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::istringstream in{std::string(text)};
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

inline std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

struct SessionConfig {
    DecoderConfig decoder = DecoderConfig::preset_48k();
    MockDecoderParams mock{};
    StitcherConfig stitcher{};
    SamplerConfig sampler{};
    std::size_t prompt_tokens = 0;
    double pace_ms = 0.0;
    std::size_t batch_tokens = 10;
    double first_chunk_seconds = 2.0;
    std::uint64_t seed = 0;
    bool silence = false;
    std::size_t queue_depth = 4;

    std::chrono::duration<double> pace() const { return std::chrono::duration<double>(pace_ms / 1000.0); }

    void validate() const {
        samples_per_token(decoder);
        stitcher.validate();
        sampler.validate();
        if (mock.context_window_tokens < 1) throw ConfigError("decoder_context must be >= 1");
        if (pace_ms < 0.0) throw ConfigError("pace_ms must be >= 0");
        if (batch_tokens < 1) throw ConfigError("batch_tokens must be >= 1");
        if (!(first_chunk_seconds > 0.0)) throw ConfigError("first_chunk_seconds must be > 0");
        if (queue_depth < 1) throw ConfigError("queue_depth must be >= 1");
    }

    /// Apply overrides from `kv`; unknown keys are an error.
    void apply(const KeyValues& kv) {
        for (const auto& [key, value] : kv) set(key, value);
        validate();
    }

private:
    template <typename T>
    static T number(const std::string& key, const std::string& v) {
        T out{};
        const auto* end = v.data() + v.size();
        auto [ptr, ec] = std::from_chars(v.data(), end, out);
        if (ec != std::errc{} || ptr != end) throw ConfigError("bad value for " + key + ": '" + v + "'");
        return out;
    }
    static bool boolean(const std::string& key, const std::string& v) {
        if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
        if (v == "0" || v == "false" || v == "no" || v == "off") return false;
        throw ConfigError("bad boolean for " + key + ": '" + v + "'");
    }

    void set(const std::string& k, const std::string& v) {
        if (k == "sample_rate") decoder = DecoderConfig::for_rate(number<std::uint32_t>(k, v));
        else if (k == "chunk_tokens") stitcher.chunk_tokens = number<std::size_t>(k, v);
        else if (k == "radius_samples") stitcher.radius_samples = number<std::size_t>(k, v);
        else if (k == "epsilon") stitcher.epsilon = number<double>(k, v);
        else if (k == "context_tokens") stitcher.context_tokens = number<std::size_t>(k, v);
        else if (k == "include_prompt_context") stitcher.include_prompt_context = boolean(k, v);
        else if (k == "max_deferrals") stitcher.max_deferrals = number<std::size_t>(k, v);
        else if (k == "prompt_tokens") prompt_tokens = number<std::size_t>(k, v);
        else if (k == "temperature") sampler.temperature = number<double>(k, v);
        else if (k == "top_k") sampler.top_k = number<std::size_t>(k, v);
        else if (k == "top_p") sampler.top_p = number<double>(k, v);
        else if (k == "repetition_penalty") sampler.repetition_penalty = number<double>(k, v);
        else if (k == "pace_ms") pace_ms = number<double>(k, v);
        else if (k == "batch_tokens") batch_tokens = number<std::size_t>(k, v);
        else if (k == "first_chunk_seconds") first_chunk_seconds = number<double>(k, v);
        else if (k == "seed") seed = number<std::uint64_t>(k, v);
        else if (k == "mode") {
            if (v != "speech" && v != "silence") throw ConfigError("mode must be speech or silence");
            silence = v == "silence";
        } else if (k == "decoder_context") mock.context_window_tokens = number<std::size_t>(k, v);
        else if (k == "base_frequency") mock.base_frequency = number<double>(k, v);
        else if (k == "frequency_step") mock.frequency_step = number<double>(k, v);
        else if (k == "queue_depth") queue_depth = number<std::size_t>(k, v);
        else throw ConfigError("unknown config key '" + k + "'");
    }
};

/// Defaults, then the file named by $TOKSTREAM_CONFIG (if set), then `path`
/// (if non-empty).
inline KeyValues load_layered_config(const std::string& path) {
    KeyValues kv;
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) kv = load_key_values(env);
    if (!path.empty())
        for (auto& [k, v] : load_key_values(path)) kv[k] = v;
    return kv;
}

} // namespace tokstream
