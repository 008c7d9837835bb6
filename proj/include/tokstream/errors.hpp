#pragma once

#include <stdexcept>
#include <string>

namespace tokstream {

// Caller passed a value outside an operation's domain.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A configuration (decoder preset, reward weights, session keys) is inconsistent.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Token store is malformed or failed a checksum.
class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Wire protocol violation or socket failure.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
    if (!ok) throw ArgumentError(what);
}
} // namespace detail

} // namespace tokstream
