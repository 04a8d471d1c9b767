#pragma once

#include <stdexcept>
#include <string>

namespace mpdo {

// Bad experiment configuration (unknown keys, unparseable values, missing
// required fields). The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested computation exceeds a resource cap (dense dimension cap,
// purifying-dimension cap). Exit code 3.
struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

// A measured quantity violated a certified bound, or an internal structural
// invariant broke (fingerprint mismatch, misaligned projection region).
// Exit code 4.
struct InvariantError : std::runtime_error {
  explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mpdo
