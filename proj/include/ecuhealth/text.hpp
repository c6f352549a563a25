#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ecuhealth/error.hpp"

namespace ecuhealth::text {

/// Shortest decimal form that parses back to the same double.
inline std::string shortest(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

/// Decimal form with 17 significant digits (lossless for binary64).
inline std::string digits17(double x) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

/// Parses a full decimal token; accepts "nan"/"inf" spellings so that
/// non-finite readings survive loading and are caught by validation.
inline std::optional<double> parse_real(std::string_view token) {
  token = trim(token);
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

inline std::optional<std::int64_t> parse_int(std::string_view token) {
  token = trim(token);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Space-separated 17-digit encoding used for parameter arrays.
inline std::string encode_reals(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(' ');
    out += digits17(values[i]);
  }
  return out;
}

inline std::vector<double> decode_reals(std::string_view s) {
  std::vector<double> out;
  s = trim(s);
  if (s.empty()) return out;
  for (auto tok : split(s, ' ')) {
    if (tok.empty()) continue;
    auto v = parse_real(tok);
    if (!v) throw Error(Errc::parse_error, "bad real '" + std::string(tok) + "'");
    out.push_back(*v);
  }
  return out;
}

/// Space-separated integer encoding used for tree node arrays.
inline std::string encode_ints(std::span<const std::int64_t> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(values[i]);
  }
  return out;
}

inline std::vector<std::int64_t> decode_ints(std::string_view s) {
  std::vector<std::int64_t> out;
  s = trim(s);
  if (s.empty()) return out;
  for (auto tok : split(s, ' ')) {
    if (tok.empty()) continue;
    auto v = parse_int(tok);
    if (!v) throw Error(Errc::parse_error, "bad integer '" + std::string(tok) + "'");
    out.push_back(*v);
  }
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace ecuhealth::text
