#include "mpdo/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mpdo {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(trim(cur));
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': '" + raw + "' is not a number");
  return out;
}

long long parse_integer(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': '" + raw + "' is not an integer");
  return out;
}

}  // namespace

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : parse_double(key, it->second);
}

int Config::get_int(const std::string& key, int fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const long long v = parse_integer(key, it->second);
  if (v < -2147483648LL || v > 2147483647LL)
    throw ConfigError("config key '" + key + "': value out of int range");
  return static_cast<int>(v);
}

std::uint64_t Config::get_uint64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const std::string s = trim(it->second);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': '" + it->second +
                      "' is not an unsigned integer");
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  const std::string s = trim(it->second);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "': '" + it->second + "' is not a boolean");
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<int> out;
  for (const std::string& part : split_list(it->second)) {
    const long long v = parse_integer(key, part);
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<double> out;
  for (const std::string& part : split_list(it->second)) out.push_back(parse_double(key, part));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

Config parse_config(const std::string& text) {
  Config config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (config.has(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                        "'");
    config.set(key, value);
  }
  return config;
}

Config parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const Config& config) {
  std::string out;
  for (const auto& [key, value] : config.values) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

std::uint64_t config_hash(const Config& config) {
  // Output plumbing does not change what is computed, so it stays out of the
  // hash: rows from the same experiment match wherever they were written.
  Config semantic = config;
  semantic.values.erase("out");
  semantic.values.erase("format");
  semantic.values.erase("threads");
  const std::string canon = serialize_config(semantic);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const Config& config) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  return buf;
}

const std::map<std::string, std::string>& known_config_keys() {
  static const std::map<std::string, std::string> keys = {
      {"task", "one of scan, truncate, compress, eop, asymptotics, bench"},
      {"seed", "global seed folded into every seeded computation (default 0)"},
      {"out", "output directory for csv/json/svg/mpdo files (default 'out')"},
      {"format", "csv, json, or both (default csv)"},
      {"threads", "worker threads for independent grid rows (default 1)"},
      {"state.sites", "chain length N >= 2 (default 4)"},
      {"state.local_dim", "site dimension d >= 2 (default 2)"},
      {"state.kind",
       "gibbs, product, dephased-ghz, pure-random, rank-random, maximally-mixed (default gibbs)"},
      {"state.model", "hamiltonian for gibbs states: tfim, xxz, random_nn (default tfim)"},
      {"state.beta", "inverse temperature for gibbs states (default 1.0)"},
      {"state.J", "tfim coupling J (default 1.0)"},
      {"state.g", "tfim transverse field g (default 1.0)"},
      {"state.Jxy", "xxz planar coupling (default 1.0)"},
      {"state.Jz", "xxz axial coupling (default 1.0)"},
      {"state.h", "xxz field (default 0.0)"},
      {"state.strength", "random_nn coupling scale (default 1.0)"},
      {"state.seed", "seed for random_nn couplings and random test states (default 0)"},
      {"state.rank", "target rank for rank_random states (default 2)"},
      {"scan.alpha", "comma list of Renyi orders (default 0.5)"},
      {"scan.method",
       "canonical-purification, optimized-purification, or mutual-information "
       "(default canonical-purification)"},
      {"truncate.alpha", "Renyi order used for the eta bound column (default 0.5)"},
      {"truncate.d_p", "comma list of kept purification ranks (default 1,2,4,8)"},
      {"compress.d_p", "comma list of kept purification ranks (default 1,2,4,8)"},
      {"compress.strategy", "merge schedule: tree or sequential (default tree)"},
      {"compress.mode", "basis mode: auerbach or hs (default auerbach)"},
      {"compress.alpha", "Renyi order recorded per cut (default 0.5)"},
      {"compress.dual_tolerance", "dual extension tolerance (default 1e-3)"},
      {"compress.max_iters", "basis construction iteration budget (default 200)"},
      {"compress.save_mpdo", "write mpdo_dp<k>.txt files when true (default false)"},
      {"eop.alpha", "Renyi order of the estimate (default 0.5)"},
      {"eop.restarts", "seeded descent restarts (default 8)"},
      {"eop.max_iters", "descent iteration budget per restart (default 300)"},
      {"eop.anc_cap", "cap on the purifying dimension (default 64)"},
      {"asymptotics.n", "comma list of chain lengths (default 16,256,4096,65536,1048576)"},
      {"asymptotics.c", "area-law constant c > 0 (default 1.0)"},
      {"asymptotics.lambda", "error-splitting exponent in (0,1) (default 0.5)"},
      {"asymptotics.kappa", "bond growth exponent, > 2c/(1-lambda) (default 5.0)"},
      {"bench.d_p", "kept purification rank to time (default 2)"},
      {"bench.repeats", "timed repetitions (default 3)"},
  };
  return keys;
}

void validate_config(const Config& config) {
  const auto& known = known_config_keys();
  for (const auto& [key, value] : config.values)
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  const std::string task = config.get_string("task", "");
  static const std::vector<std::string> tasks = {"scan",  "truncate",    "compress",
                                                 "eop",   "asymptotics", "bench"};
  if (std::find(tasks.begin(), tasks.end(), task) == tasks.end())
    throw ConfigError("config: task must be one of scan, truncate, compress, eop, "
                      "asymptotics, bench (got '" +
                      task + "')");
}

}  // namespace mpdo
