// Copyright 2026 The riskstrat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "riskstrat/error.hpp"

namespace riskstrat::text {

/// Shortest round-trip decimal form; "NA" for NaN, "inf"/"-inf" otherwise.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Quotes a field when it contains a separator, quote or line break.
inline std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Splits one CSV record, honoring double-quoted fields.
inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

/// Binary-mode writer so output is LF-only on every platform.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view header)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
    out_ << header << '\n';
  }

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((put(fields, first)), ...);
    out_ << '\n';
  }

  void raw_line(std::string_view line) { out_ << line << '\n'; }

  ~CsvWriter() = default;

 private:
  void put(const std::string& s, bool& first) { sep(first); out_ << s; }
  void put(std::string_view s, bool& first) { sep(first); out_ << s; }
  void put(const char* s, bool& first) { sep(first); out_ << s; }
  void put(double v, bool& first) { sep(first); out_ << format_double(v); }
  template <class Int>
    requires std::is_integral_v<Int>
  void put(Int v, bool& first) {
    sep(first);
    if constexpr (std::is_same_v<Int, bool>) out_ << (v ? 1 : 0);
    else out_ << v;
  }
  void sep(bool& first) {
    if (!first) out_ << ',';
    first = false;
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

/// Whole-file line reader that tolerates a trailing newline.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace riskstrat::text
