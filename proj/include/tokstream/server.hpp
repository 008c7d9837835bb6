#pragma once

// Streaming TCP server and the first-chunk latency benchmark client.

#include <tokstream/bounded_queue.hpp>
#include <tokstream/protocol.hpp>
#include <tokstream/session.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <list>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace tokstream {

/// Run one session on a connected socket: read the request, generate in
/// batched steps on a producer thread, stitch and write frames here. The
/// producer blocks once `queue_depth` batches are in flight, so a slow reader
/// stalls generation instead of growing memory.
inline void serve_session(const protocol::Socket& sock, const KeyValues& defaults) {
    using protocol::Frame;
    using protocol::FrameType;

    SessionConfig cfg;
    protocol::Request req;
    try {
        req = protocol::read_request(sock);
        cfg.apply(defaults);
        cfg.apply(parse_key_values(req.config));
    } catch (const std::exception&) {
        try {
            protocol::write_frame(sock, Frame{FrameType::Error, 0, 0, {}});
        } catch (const ProtocolError&) {
        }
        return;
    }

    const std::uint32_t rate = cfg.decoder.sample_rate;
    std::uint32_t index = 0;
    MockGenerator generator(generator_options(req.text, cfg));
    BoundedQueue<TokenSequence> queue(cfg.queue_depth);
    std::jthread producer([&] {
        while (auto batch = generator.next_batch())
            if (!queue.push(std::move(*batch))) break;
        queue.close();
    });

    try {
        SessionPipeline pipeline(cfg);
        const auto sink = [&](const Waveform& w) {
            protocol::write_frame(sock, Frame{FrameType::Audio, index++, rate, to_pcm16(w.samples)});
        };
        while (auto batch = queue.pop()) pipeline.feed(*batch, sink);
        pipeline.finish(sink);
        protocol::write_frame(sock, Frame{FrameType::End, index, rate, {}});
    } catch (const ProtocolError&) {
        queue.close(); // client went away
    } catch (const std::exception&) {
        queue.close();
        try {
            protocol::write_frame(sock, Frame{FrameType::Error, index, rate, {}});
        } catch (const ProtocolError&) {
        }
    }
}

class Server {
public:
    Server(std::string host, std::uint16_t port, KeyValues defaults = {})
        : host_(std::move(host)), port_(port), defaults_(std::move(defaults)) {
        SessionConfig probe;
        probe.apply(defaults_);
    }
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;
    ~Server() { stop(); }

    void start() {
        listener_ = protocol::Socket::listen(host_, port_);
        port_ = listener_.local_port();
        running_ = true;
        acceptor_ = std::thread([this] { accept_loop(); });
    }

    std::uint16_t port() const { return port_; }

    /// Block until stop() is called from elsewhere.
    void wait() {
        if (acceptor_.joinable()) acceptor_.join();
    }

    void stop() {
        if (!running_.exchange(false)) return;
        listener_.shutdown();
        if (acceptor_.joinable()) acceptor_.join();
        std::lock_guard lock(mu_);
        for (auto& s : sessions_) s->sock.shutdown();
        for (auto& s : sessions_)
            if (s->thread.joinable()) s->thread.join();
        sessions_.clear();
        listener_.close();
    }

private:
    struct Slot {
        protocol::Socket sock;
        std::atomic<bool> done{false};
        std::thread thread;
    };

    void accept_loop() {
        while (running_) {
            auto conn = listener_.accept();
            if (!conn) {
                if (!running_) break;
                continue;
            }
            std::lock_guard lock(mu_);
            reap();
            auto slot = std::make_unique<Slot>();
            slot->sock = std::move(*conn);
            Slot* raw = slot.get();
            raw->thread = std::thread([this, raw] {
                serve_session(raw->sock, defaults_);
                raw->sock.shutdown();
                raw->done = true;
            });
            sessions_.push_back(std::move(slot));
        }
    }

    void reap() {
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if ((*it)->done) {
                (*it)->thread.join();
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
    }

    std::string host_;
    std::uint16_t port_;
    KeyValues defaults_;
    protocol::Socket listener_;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::list<std::unique_ptr<Slot>> sessions_;
};

struct StreamResult {
    std::vector<protocol::Frame> frames;
    double first_chunk_seconds = 0.0; // request write -> target audio accumulated
    double total_seconds = 0.0;
    std::size_t total_samples = 0;
    bool ended = false;
    bool error = false;
};

/// Send one request and read frames until the end (or error) frame.
inline StreamResult request_stream(const std::string& host, std::uint16_t port, const protocol::Request& req,
                                   double target_seconds = 2.0) {
    using clock = std::chrono::steady_clock;
    auto sock = protocol::Socket::connect(host, port);
    StreamResult out;
    const auto t0 = clock::now();
    protocol::write_request(sock, req);
    bool reached = false;
    while (auto f = protocol::read_frame(sock)) {
        const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
        if (f->type == protocol::FrameType::Audio) {
            out.total_samples += f->samples.size();
            if (!reached && static_cast<double>(out.total_samples) >= target_seconds * f->sample_rate) {
                reached = true;
                out.first_chunk_seconds = elapsed;
            }
        } else {
            out.ended = f->type == protocol::FrameType::End;
            out.error = f->type == protocol::FrameType::Error;
            // Streams shorter than the target count their completion time.
            if (!reached) out.first_chunk_seconds = elapsed;
            out.total_seconds = elapsed;
            out.frames.push_back(std::move(*f));
            break;
        }
        out.frames.push_back(std::move(*f));
    }
    if (!out.ended && !out.error) throw ProtocolError("stream closed without an end frame");
    return out;
}

/// Nearest-rank percentile, p in (0, 100].
inline double percentile(std::vector<double> values, double p) {
    detail::require(!values.empty() && p > 0.0 && p <= 100.0, "percentile of empty set or bad rank");
    std::ranges::sort(values);
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

struct LatencyReport {
    std::vector<double> latencies; // first-chunk latency per request, seconds
    double p50 = 0.0;
    double p90 = 0.0;
    double tokens_per_second = 0.0;
};

struct BenchOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    std::size_t requests = 10;
    std::size_t concurrency = 1;
    std::string text = "the quick brown fox jumps over the lazy dog";
    KeyValues config;
};

inline LatencyReport bench(const BenchOptions& opts) {
    detail::require(opts.requests >= 1, "bench needs at least one request");
    SessionConfig session;
    session.apply(opts.config);
    const double target = session.first_chunk_seconds;
    const std::size_t workers = std::clamp<std::size_t>(opts.concurrency, 1, opts.requests);
    std::vector<double> latencies(opts.requests);
    std::vector<std::size_t> samples(opts.requests);
    std::vector<std::uint32_t> rates(opts.requests, 0);
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr failure;

    const auto t0 = std::chrono::steady_clock::now();
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < opts.requests;) {
                    try {
                        const protocol::Request req{opts.text, format_key_values(opts.config)};
                        auto r = request_stream(opts.host, opts.port, req, target);
                        if (r.error) throw ProtocolError("server returned an error frame");
                        latencies[i] = r.first_chunk_seconds;
                        samples[i] = r.total_samples;
                        if (!r.frames.empty()) rates[i] = r.frames.back().sample_rate;
                    } catch (...) {
                        std::lock_guard lock(err_mu);
                        if (!failure) failure = std::current_exception();
                        next = opts.requests;
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    LatencyReport rep;
    rep.latencies = latencies;
    rep.p50 = percentile(latencies, 50);
    rep.p90 = percentile(latencies, 90);
    double tokens = 0.0;
    for (std::size_t i = 0; i < opts.requests; ++i)
        if (rates[i] > 0) tokens += static_cast<double>(samples[i]) * kTokensPerSecond / rates[i];
    rep.tokens_per_second = wall > 0.0 ? tokens / wall : 0.0;
    return rep;
}

} // namespace tokstream
