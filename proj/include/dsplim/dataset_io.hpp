// Reader and writer for the "dsplim/1" dataset format:
//
//   # comments anywhere; blank lines ignored
//   channels <N>
//   scales <t_1> <u_1>        (N lines, one per channel)
//   n_1 y_1 z_1 ... n_N y_N z_N   (one dataset per line)

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dsplim/ds_limits.hpp"
#include "dsplim/errors.hpp"

namespace dsplim::io {

inline constexpr std::string_view kFormat = "dsplim/1";

namespace detail {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

inline std::vector<Token> tokenize(std::string_view line) {
  if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

inline std::uint64_t parse_count(const Token& tok, std::size_t line) {
  if (!tok.text.empty() && tok.text.front() == '-') {
    throw ParseError(line, tok.column, "negative count '" + std::string(tok.text) + "'");
  }
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
  if (ec != std::errc() || p != tok.text.data() + tok.text.size()) {
    throw ParseError(line, tok.column, "expected a nonnegative integer, got '" + std::string(tok.text) + "'");
  }
  return v;
}

inline double parse_scale(const Token& tok, std::size_t line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
  if (ec != std::errc() || p != tok.text.data() + tok.text.size()) {
    throw ParseError(line, tok.column, "expected a number, got '" + std::string(tok.text) + "'");
  }
  if (!(v > 0.0) || !std::isfinite(v)) throw ParseError(line, tok.column, "scale must be positive and finite");
  return v;
}

}  // namespace detail

/// Parses every dataset in the stream; labels are left empty.
inline std::vector<ds::Dataset> parse_dataset_file(std::istream& in) {
  std::vector<ds::Dataset> out;
  std::vector<std::pair<double, double>> scales;
  std::size_t channels = 0;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    if (!have_header) {
      if (toks[0].text != "channels") throw ParseError(lineno, toks[0].column, "expected 'channels <N>'");
      if (toks.size() != 2) throw ParseError(lineno, toks[0].column, "expected 'channels <N>'");
      const auto n = detail::parse_count(toks[1], lineno);
      if (n == 0) throw ParseError(lineno, toks[1].column, "channel count must be positive");
      channels = static_cast<std::size_t>(n);
      have_header = true;
      continue;
    }
    if (scales.size() < channels) {
      if (toks[0].text != "scales" || toks.size() != 3) {
        throw ParseError(lineno, toks[0].column, "expected 'scales <t> <u>' for channel " + std::to_string(scales.size() + 1));
      }
      scales.emplace_back(detail::parse_scale(toks[1], lineno), detail::parse_scale(toks[2], lineno));
      continue;
    }
    if (toks.size() != 3 * channels) {
      throw ParseError(lineno, toks[0].column,
                       "dataset row has " + std::to_string(toks.size()) + " fields, expected " +
                           std::to_string(3 * channels));
    }
    ds::Dataset d;
    d.channels.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      auto& ch = d.channels[c];
      ch.n = detail::parse_count(toks[3 * c], lineno);
      ch.y = detail::parse_count(toks[3 * c + 1], lineno);
      ch.z = detail::parse_count(toks[3 * c + 2], lineno);
      ch.t = scales[c].first;
      ch.u = scales[c].second;
    }
    out.push_back(std::move(d));
  }
  if (!have_header) throw ParseError(lineno + 1, 1, "missing 'channels <N>' header");
  if (scales.size() < channels) throw ParseError(lineno + 1, 1, "missing 'scales' lines");
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes datasets that share one channel layout and set of scales.
inline void write_dataset_file(std::ostream& out, const std::vector<ds::Dataset>& data) {
  if (data.empty()) throw DomainError("write_dataset_file: nothing to write");
  const auto& first = data.front().channels;
  for (const auto& d : data) {
    d.validate();
    if (d.channels.size() != first.size()) throw DomainError("write_dataset_file: channel counts differ");
    for (std::size_t c = 0; c < first.size(); ++c) {
      if (d.channels[c].t != first[c].t || d.channels[c].u != first[c].u) {
        throw DomainError("write_dataset_file: scales differ between datasets");
      }
    }
  }
  out << "# " << kFormat << '\n' << "channels " << first.size() << '\n';
  for (const auto& ch : first) out << "scales " << format_double(ch.t) << ' ' << format_double(ch.u) << '\n';
  for (const auto& d : data) {
    for (std::size_t c = 0; c < d.channels.size(); ++c) {
      const auto& ch = d.channels[c];
      out << (c ? " " : "") << ch.n << ' ' << ch.y << ' ' << ch.z;
    }
    out << '\n';
  }
}

}  // namespace dsplim::io
