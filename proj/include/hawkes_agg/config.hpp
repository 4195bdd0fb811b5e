#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "model.hpp"

namespace hawkes_agg {

// Plain-text run configuration: one `key = value` per line, '#' comments.
// Stored sorted so the canonical form (and its hash) is order-independent.
using Config = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

// Splits on `sep` and trims each piece; empty pieces are kept so a trailing
// separator is visible to the caller as an error.
inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// `key = value` with a non-empty key; returns false for anything else.
inline bool parse_kv(std::string_view line, std::string& key, std::string& value) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) return false;
  key = trim(line.substr(0, eq));
  value = trim(line.substr(eq + 1));
  return !key.empty();
}

}  // namespace detail

// Round-trip exact decimal rendering of a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view text, const std::string& what) {
  const std::string s = detail::trim(text);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument(what + ": not a number: '" + s + "'");
  return v;
}

inline std::int64_t parse_int(std::string_view text, const std::string& what) {
  const std::string s = detail::trim(text);
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument(what + ": not an integer: '" + s + "'");
  return v;
}

inline Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = detail::trim(line);
    if (body.empty() || body[0] == '#') continue;
    std::string key, value;
    if (!detail::parse_kv(body, key, value))
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + body + "'");
    cfg[key] = value;
  }
  return cfg;
}

inline Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// Later sources win.
inline Config merged(Config base, const Config& overrides) {
  for (const auto& [k, v] : overrides) base[k] = v;
  return base;
}

inline bool has_key(const Config& cfg, const std::string& key) {
  return cfg.find(key) != cfg.end();
}

inline std::string get_string(const Config& cfg, const std::string& key,
                              const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

inline std::string require_string(const Config& cfg, const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end())
    throw std::invalid_argument("config: missing required key '" + key + "'");
  return it->second;
}

inline double get_double(const Config& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_double(it->second, "config key '" + key + "'");
}

inline std::int64_t get_int(const Config& cfg, const std::string& key,
                            std::int64_t fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_int(it->second, "config key '" + key + "'");
}

inline std::uint64_t get_seed(const Config& cfg, const std::string& key,
                              std::uint64_t fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  const std::string s = detail::trim(it->second);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("config key '" + key + "': not a seed: '" + s + "'");
  return v;
}

inline bool get_bool(const Config& cfg, const std::string& key, bool fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  const std::string v = detail::trim(it->second);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: '" + v + "'");
}

inline std::vector<std::string> get_list(const Config& cfg, const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end() || detail::trim(it->second).empty()) return {};
  auto parts = detail::split(it->second, ',');
  for (const auto& p : parts)
    if (p.empty())
      throw std::invalid_argument("config key '" + key + "': empty list entry");
  return parts;
}

inline std::vector<double> get_double_list(const Config& cfg, const std::string& key) {
  std::vector<double> out;
  for (const auto& p : get_list(cfg, key))
    out.push_back(parse_double(p, "config key '" + key + "'"));
  return out;
}

// Parameters from the keys nu, alpha, beta (comma lists; matrices row-major).
// Shapes are enforced here; positivity and stationarity are the caller's
// business, matching the library-wide validation split.
inline ModelParams params_from_config(const Config& cfg) {
  ModelParams p;
  p.nu = get_double_list(cfg, "nu");
  const std::size_t dim = p.nu.size();
  if (dim == 0)
    throw std::invalid_argument("config: key 'nu' must list at least one rate");
  const auto a = get_double_list(cfg, "alpha");
  const auto b = get_double_list(cfg, "beta");
  if (a.size() != dim * dim || b.size() != dim * dim)
    throw std::invalid_argument("config: 'alpha' and 'beta' must list " +
                                std::to_string(dim * dim) +
                                " entries (row-major) for " + std::to_string(dim) +
                                " processes");
  p.alpha = Matrix(dim, dim);
  p.alpha.data() = a;
  p.beta = Matrix(dim, dim);
  p.beta.data() = b;
  return p;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

inline void params_into_config(const ModelParams& p, Config& cfg) {
  cfg["nu"] = join_doubles(p.nu);
  cfg["alpha"] = join_doubles(p.alpha.data());
  cfg["beta"] = join_doubles(p.beta.data());
}

// Canonical text form: sorted `key = value` lines. The output location does
// not affect what a run computes, so `out` is excluded and the hash is stable
// across working directories.
inline std::string canonical_config(const Config& cfg) {
  std::string text;
  for (const auto& [k, v] : cfg) {
    if (k == "out") continue;
    text += k;
    text += " = ";
    text += v;
    text += "\n";
  }
  return text;
}

// FNV-1a over the canonical text, as a fixed-width hex tag for file headers.
inline std::string config_hash(const Config& cfg) {
  const std::string text = canonical_config(cfg);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hawkes_agg
