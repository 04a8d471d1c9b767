#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mpdo/errors.hpp"

namespace mpdo {

// Flat key-value experiment configuration. Keys use dotted sections
// ("state.beta", "compress.d_p"); values are kept verbatim as written, so a
// parse -> serialize -> parse cycle is lossless. Unknown keys are rejected by
// validate() against the registry of documented keys.
struct Config {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values[key] = value; }

  // Typed accessors; the default is returned when the key is absent. A value
  // that fails to parse as the requested type throws ConfigError.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;
};

// Text form: one "key = value" per line, '#' starts a comment, blank lines
// ignored. Duplicate keys are rejected.
Config parse_config(const std::string& text);
Config parse_config_file(const std::string& path);

// Canonical serialization: keys sorted lexicographically, "key = value\n".
std::string serialize_config(const Config& config);

// FNV-1a over the canonical serialization, excluding the output-plumbing keys
// ("out", "format", "threads") so the hash identifies the experiment itself.
// The hex form is stamped on every emitted data row so outputs are
// self-describing.
std::uint64_t config_hash(const Config& config);
std::string config_hash_hex(const Config& config);

// Every key the tool understands, with a one-line description. validate()
// checks against this registry; the README documents the same set.
const std::map<std::string, std::string>& known_config_keys();

// Rejects unknown keys and checks the task name. Does not validate value
// ranges; those are checked where the values are used.
void validate_config(const Config& config);

}  // namespace mpdo
