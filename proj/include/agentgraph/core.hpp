#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace agentgraph {

inline constexpr int kGraphSchemaVersion = 1;
inline constexpr int kTranscriptSchemaVersion = 1;

/// Agent index, dense 0..N-1 within a graph.
using AgentId = int;

// Exit codes, mirrored by the CLI: 0 ok, 2 config, 3 backend, 4 data.

class Error : public std::runtime_error {
public:
    Error(std::string msg, int exit_code)
        : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::string msg) : Error(std::move(msg), 2) {}
};

/// A required internal invariant was violated (unknown edge, bad state).
class InvariantError : public Error {
public:
    explicit InvariantError(std::string msg) : Error(std::move(msg), 2) {}
};

class BackendError : public Error {
public:
    explicit BackendError(std::string msg) : Error(std::move(msg), 3) {}
};

/// Network / timeout after retries. Training checkpoints and aborts on this.
class BackendUnavailableError : public BackendError {
public:
    explicit BackendUnavailableError(std::string msg) : BackendError(std::move(msg)) {}
};

/// Backend answered, but not in the expected shape.
class ProtocolError : public BackendError {
public:
    explicit ProtocolError(std::string msg) : BackendError(std::move(msg)) {}
};

class DataError : public Error {
public:
    explicit DataError(std::string msg) : Error(std::move(msg), 4) {}
};

/// Stable 64-bit FNV-1a. Used for script matching and config hashes; not
/// a cryptographic hash.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace agentgraph
