#pragma once

// Dataset readers (dense CSV and sparse "label idx:val" text) and the
// fixed-precision number formatting used by every writer.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "scaleinv/core.hpp"
#include "scaleinv/error.hpp"

namespace scaleinv {

/// Shortest-safe decimal with 17 significant digits (round-trips doubles).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_finite(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return ss.str();
}

inline std::vector<std::string_view> lines(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::string_view> out = split(text, '\n');
  if (!out.empty() && trim(out.back()).empty()) out.pop_back();
  return out;
}

}  // namespace detail

/// Dense CSV with header "y,x1,...,xd". Blank lines are skipped.
inline std::vector<Example> parse_csv(std::string_view text, const std::string& source = "<csv>") {
  const auto rows = detail::lines(text);
  if (rows.empty()) throw ParseError(source, 1, "missing header 'y,x1,...,xd'");
  const auto header = detail::split(detail::trim(rows[0]), ',');
  if (header.size() < 2 || detail::trim(header[0]) != "y") {
    throw ParseError(source, 1, "missing header 'y,x1,...,xd'");
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (detail::trim(header[i]) != "x" + std::to_string(i)) {
      throw ParseError(source, 1, "header column " + std::to_string(i + 1) + " should be 'x" + std::to_string(i) + "'");
    }
  }
  const std::size_t d = header.size() - 1;
  std::vector<Example> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::string_view row = detail::trim(rows[r]);
    if (row.empty()) continue;
    const auto cells = detail::split(row, ',');
    if (cells.size() != d + 1) {
      throw ParseError(source, r + 1, "expected " + std::to_string(d + 1) + " fields, got " + std::to_string(cells.size()));
    }
    Example ex;
    ex.x.resize(static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_finite(cells[c], v)) {
        throw ParseError(source, r + 1, "non-numeric or non-finite value '" + std::string(detail::trim(cells[c])) + "'");
      }
      if (c == 0) ex.y = v;
      else ex.x(static_cast<Eigen::Index>(c - 1)) = v;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<Example> load_csv(const std::string& path) { return parse_csv(detail::read_file(path), path); }

/// Sparse lines "label idx:val idx:val ..." with 1-based, strictly
/// increasing indices. d is the largest index in the file.
inline std::vector<Example> parse_sparse(std::string_view text, const std::string& source = "<sparse>") {
  struct Row {
    double y;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::size_t d = 0;
  const auto all = detail::lines(text);
  for (std::size_t r = 0; r < all.size(); ++r) {
    const std::string_view line = detail::trim(all[r]);
    if (line.empty()) continue;
    std::vector<std::string_view> tokens;
    for (std::string_view tok : detail::split(line, ' ')) {
      for (std::string_view sub : detail::split(tok, '\t')) {
        if (!sub.empty()) tokens.push_back(sub);
      }
    }
    Row row{};
    if (!detail::parse_finite(tokens[0], row.y)) {
      throw ParseError(source, r + 1, "bad label '" + std::string(tokens[0]) + "'");
    }
    std::size_t last = 0;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const std::string_view tok = tokens[k];
      const std::size_t colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError(source, r + 1, "expected idx:val, got '" + std::string(tok) + "'");
      std::size_t idx = 0;
      const auto idx_str = tok.substr(0, colon);
      const auto [p, ec] = std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), idx);
      if (ec != std::errc() || p != idx_str.data() + idx_str.size()) {
        throw ParseError(source, r + 1, "bad index '" + std::string(idx_str) + "'");
      }
      if (idx < 1) throw ParseError(source, r + 1, "index must be >= 1");
      if (idx <= last) throw ParseError(source, r + 1, "indices must be strictly increasing");
      double v = 0.0;
      if (!detail::parse_finite(tok.substr(colon + 1), v)) {
        throw ParseError(source, r + 1, "non-numeric or non-finite value in '" + std::string(tok) + "'");
      }
      row.entries.emplace_back(idx, v);
      last = idx;
    }
    d = std::max(d, last);
    rows.push_back(std::move(row));
  }
  std::vector<Example> out;
  out.reserve(rows.size());
  for (const Row& row : rows) {
    Example ex;
    ex.y = row.y;
    ex.x = Vector::Zero(static_cast<Eigen::Index>(d));
    for (const auto& [idx, v] : row.entries) ex.x(static_cast<Eigen::Index>(idx - 1)) = v;
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<Example> load_sparse(const std::string& path) {
  return parse_sparse(detail::read_file(path), path);
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("error while writing '" + path + "'");
}

}  // namespace scaleinv
