// tokstream command-line front end.

#include <tokstream/tokstream.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace tokstream;
using json = nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> sets; // key=value overrides
};

KeyValues layered(const Common& c) {
    auto kv = load_layered_config(c.config_path);
    for (const auto& s : c.sets)
        for (auto& [k, v] : parse_key_values(s)) kv[k] = v;
    return kv;
}

SessionConfig session_config(const KeyValues& kv) {
    SessionConfig cfg;
    cfg.apply(kv);
    return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "key=value config file (layered over $TOKSTREAM_CONFIG)");
    cmd->add_option("--set", c.sets, "config override key=value (repeatable)");
}

std::vector<json> read_jsonl(std::istream& in) {
    std::vector<json> out;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw ArgumentError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<json> read_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot read " + path);
    return read_jsonl(in);
}

/// Writes to `path`, or stdout when path is empty or "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw ArgumentError("cannot write " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

TokenSequence read_token_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot read token file " + path);
    TokenSequence tokens;
    for (long long v; in >> v;) {
        if (v < 0 || v >= kCodebookSize) throw ArgumentError(path + ": token " + std::to_string(v) + " out of range");
        tokens.push_back(static_cast<TokenId>(v));
    }
    if (!in.eof()) throw ArgumentError(path + ": expected whitespace-separated integers");
    return tokens;
}

json report_json(const LatencyReport& r) {
    json lat = json::array();
    for (double s : r.latencies) lat.push_back(s * 1e3);
    return {{"requests", r.latencies.size()},
            {"latencies_ms", lat},
            {"p50_ms", r.p50 * 1e3},
            {"p90_ms", r.p90 * 1e3},
            {"tokens_per_second", r.tokens_per_second}};
}

json stats_json(const store::CompressionReport& r) {
    return {{"records", r.records},
            {"tokens", r.tokens},
            {"token_bytes", r.token_bytes},
            {"overhead_bytes", r.overhead_bytes},
            {"file_bytes", r.file_bytes},
            {"duration_seconds", r.duration_seconds},
            {"raw_pcm_bytes", r.raw_pcm_bytes},
            {"payload_ratio", r.payload_ratio},
            {"total_ratio", r.total_ratio}};
}

json document_json(const markup::ParseResult& p) {
    json items = json::array();
    for (const auto& item : p.document.items) {
        if (const auto* s = std::get_if<std::string>(&item)) {
            items.push_back({{"text", *s}});
        } else {
            const auto& t = std::get<markup::Tag>(item);
            items.push_back({{"tag", std::string(t.name())}, {"category", std::string(markup::to_string(t.category()))}});
        }
    }
    json diags = json::array();
    for (const auto& d : p.diagnostics) diags.push_back({{"offset", d.offset}, {"message", d.message}});
    return {{"items", items},
            {"plain_text", markup::plain_text(p.document)},
            {"active_rewards", markup::active_reward_tags(p.document)},
            {"diagnostics", diags}};
}

// ---------------------------------------------------------------- commands

int cmd_serve(const Common& c, const std::string& host, std::uint16_t port) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Server server(host, port, layered(c));
    server.start();
    std::cout << "listening on " << host << ":" << server.port() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    return 0;
}

int cmd_bench(const Common& c, BenchOptions opts, bool json_out) {
    opts.config = layered(c);
    session_config(opts.config);
    std::optional<Server> local;
    if (opts.port == 0) {
        local.emplace("127.0.0.1", 0);
        local->start();
        opts.host = "127.0.0.1";
        opts.port = local->port();
    }
    const auto r = bench(opts);
    if (json_out) {
        std::cout << report_json(r).dump(2) << "\n";
    } else {
        std::cout << "requests " << r.latencies.size() << "\n"
                  << "first-chunk p50 " << r.p50 * 1e3 << " ms\n"
                  << "first-chunk p90 " << r.p90 * 1e3 << " ms\n"
                  << "throughput " << r.tokens_per_second << " tokens/s\n";
    }
    return 0;
}

int cmd_synthesize(const Common& c, const std::string& text, const std::string& out) {
    const auto cfg = session_config(layered(c));
    const auto result = synthesize_offline(text, cfg);
    const auto audio = result.joined(cfg.decoder.sample_rate);
    wav::write_file(out, audio);
    std::cerr << result.tokens.size() << " tokens, " << audio.seconds() << " s -> " << out << "\n";
    return 0;
}

int cmd_store_pack(const std::string& manifest, const std::string& out) {
    const auto base = std::filesystem::path(manifest).parent_path();
    std::vector<store::Utterance> utts;
    for (const auto& rec : read_jsonl_file(manifest)) {
        std::filesystem::path tokens = rec.at("tokens").get<std::string>();
        if (tokens.is_relative()) tokens = base / tokens;
        utts.push_back({rec.at("id").get<std::string>(), read_token_file(tokens.string()),
                        rec.value("sample_rate", 48000u)});
    }
    const auto bytes = store::pack(utts);
    std::ofstream f(out, std::ios::binary);
    if (!f) throw ArgumentError("cannot write " + out);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    std::cerr << utts.size() << " records, " << bytes.size() << " bytes -> " << out << "\n";
    return 0;
}

int cmd_store_unpack(const std::string& path, const std::string& id, const std::string& out) {
    const auto reader = store::StoreReader::open(path);
    const auto tokens = reader.unpack(id);
    Output o(out);
    for (std::size_t i = 0; i < tokens.size(); ++i) o.stream() << (i ? " " : "") << tokens[i];
    o.stream() << "\n";
    return 0;
}

int cmd_store_stats(const std::string& path, std::uint32_t rate, std::uint32_t depth) {
    const auto reader = store::StoreReader::open(path);
    std::cout << stats_json(store::stats(reader, rate, depth)).dump(2) << "\n";
    return 0;
}

int cmd_store_generate(const std::string& out, double hours, std::uint64_t seed) {
    detail::require(hours > 0.0, "--hours must be > 0");
    auto remaining = static_cast<std::size_t>(std::llround(hours * 3600.0 * kTokensPerSecond));
    std::vector<store::Utterance> utts;
    for (std::size_t i = 0; remaining > 0; ++i) {
        const auto n = std::min(remaining, kMaxUtteranceTokens);
        utts.push_back({"synthetic_" + std::to_string(i), mock_generate(seed + i, n), 48000});
        remaining -= n;
    }
    const auto bytes = store::pack(utts);
    std::ofstream f(out, std::ios::binary);
    if (!f) throw ArgumentError("cannot write " + out);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    std::cerr << utts.size() << " records, " << bytes.size() << " bytes -> " << out << "\n";
    return 0;
}

int cmd_filter(const std::string& in, const std::string& out, const filtering::PipelineOptions& opts) {
    std::vector<filtering::SampleMeta> samples;
    std::map<std::string, json> originals;
    for (const auto& rec : read_jsonl_file(in)) {
        filtering::SampleMeta m{rec.at("id").get<std::string>(), rec.at("dnsmos").get<double>(),
                                rec.at("duration").get<double>(), rec.at("text").get<std::string>(),
                                rec.value("language", std::string("und"))};
        if (!originals.emplace(m.id, rec).second) throw ArgumentError("duplicate id " + m.id);
        samples.push_back(std::move(m));
    }
    const auto [kept, report] = filtering::run_pipeline(samples, opts);
    Output o(out);
    for (const auto& m : kept) o.stream() << originals.at(m.id).dump() << "\n";
    const json rep{{"input", report.input},
                   {"removed_dnsmos", report.removed_dnsmos},
                   {"removed_cps", report.removed_cps},
                   {"removed_text", report.removed_text},
                   {"text_reasons", report.text_reasons},
                   {"kept", report.kept}};
    std::cerr << rep.dump() << "\n";
    return 0;
}

// Record: {"prompt", "reference_text", "reference_audio": wav,
//          "completions": [{"audio": wav, "transcript": text}, ...]}
int cmd_rewards(const std::string& in, const std::string& out, bool use_cer, double wer_k) {
    using namespace rewards;
    const auto base = std::filesystem::path(in).parent_path();
    const auto load = [&](const json& p) {
        std::filesystem::path path = p.get<std::string>();
        return wav::read_file((path.is_relative() ? base / path : path).string());
    };
    const BandEnergyEmbedder embedder;
    const LoudnessQualityScorer quality;
    Output o(out);
    for (auto rec : read_jsonl_file(in)) {
        const auto prompt = rec.value("prompt", std::string());
        const auto reference_text = rec.at("reference_text").get<std::string>();
        const auto reference_audio = load(rec.at("reference_audio"));
        std::vector<double> rewards;
        json breakdowns = json::array();
        for (const auto& c : rec.at("completions")) {
            const FixedTranscriber asr(c.at("transcript").get<std::string>());
            const Scorers s{&asr, &embedder, &quality, use_cer, wer_k};
            const auto b = score_completion(prompt, reference_audio, reference_text, load(c.at("audio")), s);
            rewards.push_back(composite_reward(b, {}));
            breakdowns.push_back({{"components", b.components}, {"active", b.active}, {"reward", rewards.back()}});
        }
        rec["breakdowns"] = breakdowns;
        rec["rewards"] = rewards;
        rec["advantages"] = grpo_advantages(rewards);
        o.stream() << rec.dump() << "\n";
    }
    return 0;
}

int cmd_markup_parse() {
    for (std::string line; std::getline(std::cin, line);) std::cout << document_json(markup::parse(line)).dump() << "\n";
    return 0;
}

// Record: {"neutral_text", "neutral_audio", "styled_text", "styled_audio", "tag"}
int cmd_markup_pair(const std::string& manifest, const std::string& out_dir, std::uint64_t seed) {
    const auto base = std::filesystem::path(manifest).parent_path();
    const auto resolve = [&](const json& p) {
        std::filesystem::path path = p.get<std::string>();
        return (path.is_relative() ? base / path : path).string();
    };
    std::filesystem::create_directories(out_dir);
    Rng rng(seed);
    std::ofstream index(std::filesystem::path(out_dir) / "pairs.jsonl");
    if (!index) throw ArgumentError("cannot write into " + out_dir);
    std::size_t n = 0;
    for (const auto& rec : read_jsonl_file(manifest)) {
        const auto tag_name = rec.at("tag").get<std::string>();
        const auto tag = markup::Tag::lookup(tag_name);
        if (!tag || !tag->is_style()) throw ArgumentError("'" + tag_name + "' is not a style tag");
        const markup::Utterance neutral{rec.at("neutral_text").get<std::string>(), wav::read_file(resolve(rec.at("neutral_audio")))};
        const markup::Utterance styled{rec.at("styled_text").get<std::string>(), wav::read_file(resolve(rec.at("styled_audio")))};
        const auto pair = markup::build_pair(neutral, styled, *tag, rng);
        const auto name = "pair_" + std::to_string(n++) + ".wav";
        wav::write_file((std::filesystem::path(out_dir) / name).string(), pair.audio);
        index << json{{"transcript", pair.transcript}, {"audio", name}, {"silence_seconds", pair.silence_seconds},
                      {"silence_samples", pair.silence_samples}}
                     .dump()
              << "\n";
    }
    std::cerr << n << " pairs -> " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming speech-token synthesis engine and data tools"};
    app.require_subcommand(1);
    Common common;
    int status = 0;

    auto* serve = app.add_subcommand("serve", "run the streaming TCP server");
    add_common(serve, common);
    std::string host = "127.0.0.1";
    std::uint16_t port = 7878;
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "bind port (0 picks a free port)");
    serve->callback([&] { status = cmd_serve(common, host, port); });

    auto* bench_cmd = app.add_subcommand("bench", "first-chunk latency benchmark");
    add_common(bench_cmd, common);
    BenchOptions bopts;
    bopts.port = 0;
    bool bench_json = false;
    bench_cmd->add_option("--n", bopts.requests, "number of requests")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--concurrency", bopts.concurrency, "parallel clients")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--host", bopts.host, "server address");
    bench_cmd->add_option("--port", bopts.port, "server port (omit to benchmark an in-process server)");
    bench_cmd->add_option("--text", bopts.text, "request text");
    bench_cmd->add_flag("--json", bench_json, "print the report as JSON");
    bench_cmd->callback([&] { status = cmd_bench(common, bopts, bench_json); });

    auto* synth = app.add_subcommand("synthesize", "offline text -> WAV through the mock pipeline");
    add_common(synth, common);
    std::string text, wav_out;
    synth->add_option("--text", text, "input text (markup allowed)")->required();
    synth->add_option("--out", wav_out, "output WAV path")->required();
    synth->callback([&] { status = cmd_synthesize(common, text, wav_out); });

    auto* store_cmd = app.add_subcommand("store", "packed token store");
    store_cmd->require_subcommand(1);
    std::string manifest, store_path, store_out, id;
    std::uint32_t rate = 48000, depth = 16;
    double hours = 1.0;
    std::uint64_t seed = 0;
    auto* pack = store_cmd->add_subcommand("pack", "pack a JSONL manifest {id, tokens, sample_rate}");
    pack->add_option("--manifest", manifest)->required();
    pack->add_option("--out", store_out)->required();
    pack->callback([&] { status = cmd_store_pack(manifest, store_out); });
    auto* unpack = store_cmd->add_subcommand("unpack", "print one record's tokens");
    unpack->add_option("--store", store_path)->required();
    unpack->add_option("--id", id)->required();
    unpack->add_option("--out", store_out, "output file (default stdout)");
    unpack->callback([&] { status = cmd_store_unpack(store_path, id, store_out); });
    auto* st = store_cmd->add_subcommand("stats", "compression report");
    st->add_option("--store", store_path)->required();
    st->add_option("--rate", rate, "PCM baseline sample rate");
    st->add_option("--depth", depth, "PCM baseline bit depth");
    st->callback([&] { status = cmd_store_stats(store_path, rate, depth); });
    auto* gen = store_cmd->add_subcommand("generate", "write a synthetic store of mock tokens");
    gen->add_option("--out", store_out)->required();
    gen->add_option("--hours", hours, "audio duration");
    gen->add_option("--seed", seed);
    gen->callback([&] { status = cmd_store_generate(store_out, hours, seed); });

    auto* filter = app.add_subcommand("filter", "SFT data filtering");
    filter->require_subcommand(1);
    std::string filter_in, filter_out;
    filtering::PipelineOptions fopts;
    auto* run = filter->add_subcommand("run", "JSONL {id, dnsmos, duration, text, language} -> kept records");
    run->add_option("--in", filter_in)->required();
    run->add_option("--out", filter_out, "output file (default stdout)");
    run->add_option("--dnsmos-fraction", fopts.dnsmos_fraction);
    run->add_option("--cps-low", fopts.cps_low);
    run->add_option("--cps-high", fopts.cps_high);
    run->callback([&] { status = cmd_filter(filter_in, filter_out, fopts); });

    auto* rw = app.add_subcommand("rewards", "reward scoring");
    rw->require_subcommand(1);
    std::string rw_in, rw_out;
    bool use_cer = false;
    double wer_k = rewards::kWerSensitivity;
    auto* score = rw->add_subcommand("score", "score completion groups from JSONL");
    score->add_option("--in", rw_in)->required();
    score->add_option("--out", rw_out, "output file (default stdout)");
    score->add_flag("--cer", use_cer, "character error rate instead of word error rate");
    score->add_option("--wer-k", wer_k, "error-rate sensitivity");
    score->callback([&] { status = cmd_rewards(rw_in, rw_out, use_cer, wer_k); });

    auto* mk = app.add_subcommand("markup", "markup tags");
    mk->require_subcommand(1);
    mk->add_subcommand("parse", "parse stdin lines into JSONL")->callback([&] { status = cmd_markup_parse(); });
    std::string pair_manifest, pair_dir;
    std::uint64_t pair_seed = 0;
    auto* pair = mk->add_subcommand("pair", "build paired examples from a JSONL manifest");
    pair->add_option("--manifest", pair_manifest)->required();
    pair->add_option("--out-dir", pair_dir)->required();
    pair->add_option("--seed", pair_seed);
    pair->callback([&] { status = cmd_markup_pair(pair_manifest, pair_dir, pair_seed); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return status;
}
