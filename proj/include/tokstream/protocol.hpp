#pragma once

// Framed streaming protocol over TCP.
//
// Request (client -> server):
//   text_len:u32 | UTF-8 text | config_len:u32 | key=value config text
// Frame (server -> client), 13-byte header + payload:
//   type:u8 (0=audio, 1=end, 2=error) | chunk_index:u32 | sample_rate:u32 |
//   sample_count:u32 | sample_count x PCM16 (audio frames only)
// All integers little-endian. Audio chunk indices start at 0 and are gapless;
// the end frame carries the next index and is always last.

#include <tokstream/errors.hpp>
#include <tokstream/timebase.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tokstream::protocol {

enum class FrameType : std::uint8_t { Audio = 0, End = 1, Error = 2 };

inline constexpr std::size_t kFrameHeaderSize = 13;
inline constexpr std::uint32_t kMaxRequestBlock = 1u << 20;
inline constexpr std::uint32_t kMaxFrameSamples = 1u << 24;

struct Frame {
    FrameType type = FrameType::Audio;
    std::uint32_t chunk_index = 0;
    std::uint32_t sample_rate = 0;
    std::vector<std::int16_t> samples;

    friend bool operator==(const Frame&, const Frame&) = default;
};

struct Request {
    std::string text;
    std::string config;
};

namespace detail {
inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}
} // namespace detail

inline std::vector<std::uint8_t> encode_frame(const Frame& f) {
    std::vector<std::uint8_t> b;
    b.reserve(kFrameHeaderSize + 2 * f.samples.size());
    b.push_back(static_cast<std::uint8_t>(f.type));
    detail::put_u32(b, f.chunk_index);
    detail::put_u32(b, f.sample_rate);
    detail::put_u32(b, static_cast<std::uint32_t>(f.samples.size()));
    for (auto s : f.samples) {
        const auto u = static_cast<std::uint16_t>(s);
        b.push_back(static_cast<std::uint8_t>(u));
        b.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    return b;
}

struct FrameHeader {
    FrameType type;
    std::uint32_t chunk_index;
    std::uint32_t sample_rate;
    std::uint32_t sample_count;
};

inline FrameHeader decode_frame_header(std::span<const std::uint8_t, kFrameHeaderSize> h) {
    if (h[0] > 2) throw ProtocolError("unknown frame type " + std::to_string(h[0]));
    FrameHeader fh{static_cast<FrameType>(h[0]), detail::get_u32(&h[1]), detail::get_u32(&h[5]),
                   detail::get_u32(&h[9])};
    if (fh.type != FrameType::Audio && fh.sample_count != 0) throw ProtocolError("control frame with payload");
    if (fh.sample_count > kMaxFrameSamples) throw ProtocolError("frame too large");
    return fh;
}

inline std::vector<std::uint8_t> encode_request(const Request& r) {
    std::vector<std::uint8_t> b;
    detail::put_u32(b, static_cast<std::uint32_t>(r.text.size()));
    b.insert(b.end(), r.text.begin(), r.text.end());
    detail::put_u32(b, static_cast<std::uint32_t>(r.config.size()));
    b.insert(b.end(), r.config.begin(), r.config.end());
    return b;
}

/// Owned socket file descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close() {
        if (fd_ >= 0) ::close(std::exchange(fd_, -1));
    }
    void shutdown() const {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    }

    void write_all(std::span<const std::uint8_t> bytes) const {
        while (!bytes.empty()) {
            const auto n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError(std::string("send: ") + std::strerror(errno));
            }
            bytes = bytes.subspan(static_cast<std::size_t>(n));
        }
    }

    /// False on clean EOF before the first byte; throws on EOF mid-buffer.
    bool read_exact(std::span<std::uint8_t> out) const {
        std::size_t got = 0;
        while (got < out.size()) {
            const auto n = ::recv(fd_, out.data() + got, out.size() - got, 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError(std::string("recv: ") + std::strerror(errno));
            }
            if (n == 0) {
                if (got == 0) return false;
                throw ProtocolError("connection closed mid-message");
            }
            got += static_cast<std::size_t>(n);
        }
        return true;
    }

    static Socket connect(const std::string& host, std::uint16_t port) {
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
            throw ProtocolError("cannot resolve " + host);
        Socket s(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
        const int rc = s.valid() ? ::connect(s.fd(), res->ai_addr, res->ai_addrlen) : -1;
        ::freeaddrinfo(res);
        if (rc != 0) throw ProtocolError("cannot connect to " + host + ":" + std::to_string(port));
        s.set_nodelay();
        return s;
    }

    static Socket listen(const std::string& host, std::uint16_t port, int backlog = 64) {
        Socket s(::socket(AF_INET, SOCK_STREAM, 0));
        if (!s.valid()) throw ProtocolError("socket() failed");
        int one = 1;
        ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw ProtocolError("bad bind address " + host);
        if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(s.fd(), backlog) != 0)
            throw ProtocolError("cannot bind " + host + ":" + std::to_string(port));
        return s;
    }

    std::uint16_t local_port() const {
        sockaddr_in addr{};
        socklen_t len = sizeof addr;
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        return ntohs(addr.sin_port);
    }

    std::optional<Socket> accept() const {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd < 0) return std::nullopt;
        Socket s(fd);
        s.set_nodelay();
        return s;
    }

private:
    void set_nodelay() const {
        int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    int fd_ = -1;
};

inline void write_frame(const Socket& s, const Frame& f) { s.write_all(encode_frame(f)); }

/// Next frame, or nullopt on clean EOF.
inline std::optional<Frame> read_frame(const Socket& s) {
    std::array<std::uint8_t, kFrameHeaderSize> header{};
    if (!s.read_exact(header)) return std::nullopt;
    const auto h = decode_frame_header(header);
    Frame f{h.type, h.chunk_index, h.sample_rate, std::vector<std::int16_t>(h.sample_count)};
    std::vector<std::uint8_t> payload(2 * std::size_t{h.sample_count});
    if (!payload.empty() && !s.read_exact(payload)) throw ProtocolError("connection closed mid-frame");
    for (std::size_t i = 0; i < f.samples.size(); ++i)
        f.samples[i] = static_cast<std::int16_t>(payload[2 * i] | (payload[2 * i + 1] << 8));
    return f;
}

inline void write_request(const Socket& s, const Request& r) { s.write_all(encode_request(r)); }

inline Request read_request(const Socket& s) {
    const auto block = [&s](const char* what) {
        std::array<std::uint8_t, 4> len{};
        if (!s.read_exact(len)) throw ProtocolError(std::string("missing ") + what + " length");
        const auto n = detail::get_u32(len.data());
        if (n > kMaxRequestBlock) throw ProtocolError(std::string(what) + " block too large");
        std::string out(n, '\0');
        if (n > 0 && !s.read_exact(std::span(reinterpret_cast<std::uint8_t*>(out.data()), n)))
            throw ProtocolError(std::string("missing ") + what + " block");
        return out;
    };
    Request r;
    r.text = block("text");
    r.config = block("config");
    return r;
}

} // namespace tokstream::protocol
