#pragma once

// Indexed packed-token store.
//
// Layout, little-endian throughout:
//
//   header   "STK1" | version:u8 (=1)
//   records  token payloads, uint16 per token, back to back
//   index    per record: id_len:u16 | id bytes | offset:u64 | tokens:u32 |
//            rate_code:u8 (0=16k, 1=24k, 2=48k) | crc32:u32 (IEEE, over payload)
//   footer   index_offset:u64 | record_count:u32 | index_crc32:u32   (16 bytes)

#include <tokstream/errors.hpp>
#include <tokstream/timebase.hpp>

#include <boost/crc.hpp>

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace tokstream::store {

inline constexpr std::array<char, 4> kMagic{'S', 'T', 'K', '1'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::size_t kFooterSize = 16;

inline std::uint8_t rate_code(std::uint32_t rate) {
    switch (rate) {
    case 16000: return 0;
    case 24000: return 1;
    case 48000: return 2;
    default: throw ArgumentError("unsupported store sample rate " + std::to_string(rate));
    }
}

inline std::uint32_t rate_from_code(std::uint8_t code) {
    switch (code) {
    case 0: return 16000;
    case 1: return 24000;
    case 2: return 48000;
    default: throw StoreError("bad sample-rate code " + std::to_string(code));
    }
}

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

struct Utterance {
    std::string id;
    TokenSequence tokens;
    std::uint32_t sample_rate = 48000;
};

struct IndexEntry {
    std::string id;
    std::uint64_t offset = 0;
    std::uint32_t token_count = 0;
    std::uint32_t sample_rate = 48000;
    std::uint32_t crc = 0;
};

namespace detail {

class Writer {
public:
    std::vector<std::uint8_t> bytes;
    template <typename T>
    void put(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i)
            bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    }
    void put(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> data, std::size_t pos) : data_(data), pos_(pos) {}
    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    std::string get_string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw StoreError("truncated store");
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_;
};

} // namespace detail

/// Serialize utterances in input order. Byte-deterministic.
inline std::vector<std::uint8_t> pack(std::span<const Utterance> utterances) {
    std::set<std::string_view> seen;
    for (const auto& u : utterances) {
        tokstream::detail::require(seen.insert(u.id).second, "duplicate store id '" + u.id + "'");
        tokstream::detail::require(u.id.size() <= 0xFFFF, "store id too long");
        tokstream::detail::require(u.tokens.size() <= 0xFFFFFFFFull, "record too long");
        rate_code(u.sample_rate);
    }
    detail::Writer w;
    w.put(std::string_view(kMagic.data(), kMagic.size()));
    w.put(kVersion);
    std::vector<IndexEntry> index;
    for (const auto& u : utterances) {
        IndexEntry e{u.id, w.bytes.size(), static_cast<std::uint32_t>(u.tokens.size()), u.sample_rate, 0};
        for (TokenId t : u.tokens) w.put(t);
        e.crc = crc32(std::span(w.bytes).subspan(e.offset));
        index.push_back(std::move(e));
    }
    const std::uint64_t index_offset = w.bytes.size();
    for (const auto& e : index) {
        w.put(static_cast<std::uint16_t>(e.id.size()));
        w.put(std::string_view(e.id));
        w.put(e.offset);
        w.put(e.token_count);
        w.put(rate_code(e.sample_rate));
        w.put(e.crc);
    }
    const auto index_crc = crc32(std::span(w.bytes).subspan(index_offset));
    w.put(index_offset);
    w.put(static_cast<std::uint32_t>(index.size()));
    w.put(index_crc);
    return std::move(w.bytes);
}

/// Read-only view over a packed store. Const member functions are safe to
/// call from any number of threads.
class StoreReader {
public:
    explicit StoreReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) { parse_index(); }

    static StoreReader open(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw StoreError("cannot open store " + path);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return StoreReader(std::move(bytes));
    }

    const std::vector<IndexEntry>& entries() const { return entries_; }
    std::size_t file_size() const { return bytes_.size(); }
    std::uint64_t index_offset() const { return index_offset_; }

    const IndexEntry* find(std::string_view id) const {
        auto it = by_id_.find(std::string(id));
        return it == by_id_.end() ? nullptr : &entries_[it->second];
    }

    /// Tokens of `id`; throws StoreError on checksum mismatch or unknown id.
    TokenSequence unpack(std::string_view id) const {
        const auto* e = find(id);
        if (!e) throw StoreError("no record '" + std::string(id) + "'");
        const auto payload = std::span(bytes_).subspan(e->offset, std::size_t{e->token_count} * 2);
        if (crc32(payload) != e->crc) throw StoreError("checksum mismatch in record '" + e->id + "'");
        TokenSequence tokens(e->token_count);
        for (std::size_t i = 0; i < tokens.size(); ++i)
            tokens[i] = static_cast<TokenId>(payload[2 * i] | (payload[2 * i + 1] << 8));
        return tokens;
    }

private:
    void parse_index() {
        if (bytes_.size() < kHeaderSize + kFooterSize) throw StoreError("store too small");
        if (std::memcmp(bytes_.data(), kMagic.data(), kMagic.size()) != 0) throw StoreError("bad store magic");
        if (bytes_[4] != kVersion) throw StoreError("unsupported store version");
        detail::Reader footer(bytes_, bytes_.size() - kFooterSize);
        index_offset_ = footer.get<std::uint64_t>();
        const auto count = footer.get<std::uint32_t>();
        const auto index_crc = footer.get<std::uint32_t>();
        const auto index_end = bytes_.size() - kFooterSize;
        if (index_offset_ < kHeaderSize || index_offset_ > index_end) throw StoreError("index offset out of range");
        if (crc32(std::span(bytes_).subspan(index_offset_, index_end - index_offset_)) != index_crc)
            throw StoreError("index checksum mismatch");

        detail::Reader r{std::span(bytes_).first(index_end), index_offset_};
        for (std::uint32_t i = 0; i < count; ++i) {
            IndexEntry e;
            e.id = r.get_string(r.get<std::uint16_t>());
            e.offset = r.get<std::uint64_t>();
            e.token_count = r.get<std::uint32_t>();
            e.sample_rate = rate_from_code(r.get<std::uint8_t>());
            e.crc = r.get<std::uint32_t>();
            if (e.offset < kHeaderSize || e.offset + std::uint64_t{e.token_count} * 2 > index_offset_)
                throw StoreError("record '" + e.id + "' lies outside the payload area");
            if (!by_id_.emplace(e.id, entries_.size()).second) throw StoreError("duplicate id in index");
            entries_.push_back(std::move(e));
        }
        if (r.pos() != index_end) throw StoreError("trailing bytes in index");
    }

    std::vector<std::uint8_t> bytes_;
    std::uint64_t index_offset_ = 0;
    std::vector<IndexEntry> entries_;
    std::map<std::string, std::size_t> by_id_;
};

struct CompressionReport {
    std::size_t records = 0;
    std::uint64_t tokens = 0;
    std::uint64_t token_bytes = 0;
    std::uint64_t overhead_bytes = 0; // header + index + footer
    std::uint64_t file_bytes = 0;
    double duration_seconds = 0.0;
    std::uint64_t raw_pcm_bytes = 0;
    double payload_ratio = 0.0; // raw PCM / token payload
    double total_ratio = 0.0;   // raw PCM / whole file
};

/// Compare the store against raw PCM at `baseline_rate` and `bit_depth`.
inline CompressionReport stats(const StoreReader& store, std::uint32_t baseline_rate = 48000,
                               std::uint32_t bit_depth = 16) {
    tokstream::detail::require(baseline_rate > 0 && bit_depth > 0 && bit_depth % 8 == 0, "bad PCM baseline");
    CompressionReport r;
    r.records = store.entries().size();
    for (const auto& e : store.entries()) r.tokens += e.token_count;
    r.token_bytes = r.tokens * 2;
    r.file_bytes = store.file_size();
    r.overhead_bytes = r.file_bytes - r.token_bytes;
    // Exact integer form of tokens / 50 * rate * depth / 8.
    r.raw_pcm_bytes = r.tokens * baseline_rate / kTokensPerSecond * (bit_depth / 8);
    r.duration_seconds = static_cast<double>(r.tokens) / kTokensPerSecond;
    if (r.token_bytes > 0) r.payload_ratio = static_cast<double>(r.raw_pcm_bytes) / static_cast<double>(r.token_bytes);
    r.total_ratio = static_cast<double>(r.raw_pcm_bytes) / static_cast<double>(r.file_bytes);
    return r;
}

} // namespace tokstream::store
