#pragma once

// RIFF/WAVE PCM16 mono I/O.

#include <tokstream/errors.hpp>
#include <tokstream/timebase.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace tokstream::wav {

namespace detail {
inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}
inline std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }
} // namespace detail

inline std::vector<std::uint8_t> encode(const Waveform& w) {
    const auto pcm = to_pcm16(w.samples);
    const auto data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
    std::vector<std::uint8_t> b;
    b.reserve(44 + data_bytes);
    b.insert(b.end(), {'R', 'I', 'F', 'F'});
    detail::put_u32(b, 36 + data_bytes);
    b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    detail::put_u32(b, 16);
    detail::put_u16(b, 1); // PCM
    detail::put_u16(b, 1); // mono
    detail::put_u32(b, w.sample_rate);
    detail::put_u32(b, w.sample_rate * 2);
    detail::put_u16(b, 2);
    detail::put_u16(b, 16);
    b.insert(b.end(), {'d', 'a', 't', 'a'});
    detail::put_u32(b, data_bytes);
    for (auto s : pcm) detail::put_u16(b, static_cast<std::uint16_t>(s));
    return b;
}

inline Waveform decode(const std::vector<std::uint8_t>& b) {
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
        throw ArgumentError("not a RIFF/WAVE file");
    Waveform w;
    bool have_fmt = false;
    for (std::size_t pos = 12; pos + 8 <= b.size();) {
        const auto size = detail::get_u32(&b[pos + 4]);
        const std::uint8_t* body = &b[pos + 8];
        if (pos + 8 + size > b.size()) throw ArgumentError("truncated WAV chunk");
        if (std::memcmp(&b[pos], "fmt ", 4) == 0) {
            if (size < 16 || detail::get_u16(body) != 1 || detail::get_u16(body + 2) != 1 ||
                detail::get_u16(body + 14) != 16)
                throw ArgumentError("only PCM16 mono WAV is supported");
            w.sample_rate = detail::get_u32(body + 4);
            have_fmt = true;
        } else if (std::memcmp(&b[pos], "data", 4) == 0) {
            if (!have_fmt) throw ArgumentError("WAV data before fmt chunk");
            w.samples.resize(size / 2);
            for (std::size_t i = 0; i < w.samples.size(); ++i)
                w.samples[i] = from_pcm16(static_cast<std::int16_t>(detail::get_u16(body + 2 * i)));
            return w;
        }
        pos += 8 + size + (size & 1);
    }
    throw ArgumentError("WAV file has no data chunk");
}

inline void write_file(const std::string& path, const Waveform& w) {
    const auto bytes = encode(w);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Waveform read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

} // namespace tokstream::wav
