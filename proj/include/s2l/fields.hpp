// Copyright 2026 The s2l Authors.
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

#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "s2l/error.hpp"
#include "s2l/tabular.hpp"

namespace s2l::detail {

using Fields = std::vector<std::pair<std::string, std::string>>;

// Splits `key=value; key=value; ...`. A key listed in `tail_keys` takes the
// rest of the line verbatim, so regexes and phrases may contain ';'.
inline Fields parse_fields(std::string_view line, std::size_t line_no,
                           std::initializer_list<std::string_view> tail_keys) {
  Fields fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t eq = line.find('=', i);
    if (eq == std::string_view::npos) {
      throw RuleSyntax(line_no, "expected key=value in \"" + std::string(line) + "\"");
    }
    std::string key = trim(line.substr(i, eq - i));
    if (key.empty() || key.find_first_of("; ") != std::string::npos) {
      throw RuleSyntax(line_no, "bad key \"" + key + "\"");
    }
    bool tail = false;
    for (auto k : tail_keys) tail = tail || k == key;
    std::string value;
    if (tail) {
      value = trim(line.substr(eq + 1));
      i = line.size();
    } else {
      std::size_t semi = line.find(';', eq + 1);
      std::size_t end = semi == std::string_view::npos ? line.size() : semi;
      value = trim(line.substr(eq + 1, end - eq - 1));
      if (value.find('=') != std::string::npos) {
        throw RuleSyntax(line_no, "missing ';' separator before \"" + value + "\"");
      }
      i = semi == std::string_view::npos ? line.size() : semi + 1;
    }
    for (const auto &f : fields) {
      if (f.first == key) throw RuleSyntax(line_no, "repeated key \"" + key + "\"");
    }
    fields.emplace_back(std::move(key), std::move(value));
  }
  return fields;
}

inline const std::string *field(const Fields &fields, std::string_view key) {
  for (const auto &f : fields) {
    if (f.first == key) return &f.second;
  }
  return nullptr;
}

// Non-empty, non-comment lines with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> content_lines(std::istream &in) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(no, line);
  }
  return out;
}

inline std::ifstream open_input(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

inline std::string read_file(const std::string &path) {
  std::ifstream in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace s2l::detail
