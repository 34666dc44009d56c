// Copyright 2026 The sf2lab Authors.
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

#ifndef SF2_IO_HPP
#define SF2_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "sf2/data.hpp"
#include "sf2/error.hpp"

namespace sf2 {

// Line formats (UTF-8, '#' comment lines and blank lines ignored, LF or CRLF):
//   utterances  utt_id<TAB>speaker_id<TAB>v1 v2 ... vd
//   embeddings  utt_id<TAB>v1 v2 ... vd
//   trials      enroll_id test_id {0|1}
//   scores      enroll_id test_id score
// Reals are written in the shortest form that parses back exactly.

struct NamedVector {
  std::string id;
  std::vector<double> values;

  friend bool operator==(const NamedVector&, const NamedVector&) = default;
};

struct ScoreLine {
  std::string enroll;
  std::string test;
  double score = 0.0;

  friend bool operator==(const ScoreLine&, const ScoreLine&) = default;
};

using EmbeddingMap = std::unordered_map<std::string, std::vector<double>>;

/// Shortest text that parses back to the same double.
inline std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

struct Line {
  std::string_view text;
  std::size_t number;  // 1-based
  std::size_t offset;  // byte offset of the line start
};

[[noreturn]] inline void parse_error(const Line& line, const std::string& what) {
  fail(ErrorKind::ParseError, "line " + std::to_string(line.number) + " (byte offset " +
                                  std::to_string(line.offset) + "): " + what);
}

template <typename Fn>
void for_each_record(std::string_view content, Fn fn) {
  std::size_t pos = 0;
  std::size_t number = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view text = content.substr(pos, end - pos);
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    ++number;
    const Line line{text, number, pos};
    pos = end + 1;
    const auto first = text.find_first_not_of(" \t");
    if (first == std::string_view::npos || text[first] == '#') continue;
    fn(line);
  }
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i == s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto t = s.find('\t', start);
    out.push_back(s.substr(start, t == std::string_view::npos ? s.npos : t - start));
    if (t == std::string_view::npos) break;
    start = t + 1;
  }
  return out;
}

inline double parse_real(const Line& line, std::string_view tok) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    parse_error(line, "bad number '" + std::string(tok) + "'");
  return v;
}

inline std::vector<double> parse_values(const Line& line, std::string_view field) {
  std::vector<double> values;
  for (auto tok : split_ws(field)) values.push_back(parse_real(line, tok));
  if (values.empty()) parse_error(line, "empty vector field");
  return values;
}

inline void write_values(std::ostream& out, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    out << format_real(values[i]);
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename Writer>
void write_file(const std::string& path, Writer writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  writer(out);
  if (!out) fail(ErrorKind::Io, "failed writing " + path);
}

}  // namespace detail

inline void write_utterances(std::ostream& out, std::span<const Utterance> utts) {
  for (const auto& u : utts) {
    out << u.utt_id << '\t' << u.speaker_id << '\t';
    detail::write_values(out, u.features);
    out << '\n';
  }
}

inline std::vector<Utterance> parse_utterances(std::string_view content) {
  std::vector<Utterance> utts;
  detail::for_each_record(content, [&](const detail::Line& line) {
    const auto fields = detail::split_tabs(line.text);
    if (fields.size() != 3)
      detail::parse_error(line, "expected 3 tab-separated fields, found " +
                                    std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty()) detail::parse_error(line, "empty id");
    Utterance u{std::string(fields[0]), std::string(fields[1]),
                detail::parse_values(line, fields[2])};
    if (!utts.empty() && u.features.size() != utts.front().features.size())
      detail::parse_error(line, "feature width differs from earlier lines");
    utts.push_back(std::move(u));
  });
  return utts;
}

inline void write_embeddings(std::ostream& out, std::span<const NamedVector> rows) {
  for (const auto& r : rows) {
    out << r.id << '\t';
    detail::write_values(out, r.values);
    out << '\n';
  }
}

inline std::vector<NamedVector> parse_embeddings(std::string_view content) {
  std::vector<NamedVector> rows;
  detail::for_each_record(content, [&](const detail::Line& line) {
    const auto fields = detail::split_tabs(line.text);
    if (fields.size() != 2)
      detail::parse_error(line, "expected 2 tab-separated fields, found " +
                                    std::to_string(fields.size()));
    if (fields[0].empty()) detail::parse_error(line, "empty id");
    rows.push_back({std::string(fields[0]), detail::parse_values(line, fields[1])});
  });
  return rows;
}

inline void write_trials(std::ostream& out, const TrialSet& trials) {
  for (const auto& t : trials) out << t.enroll << ' ' << t.test << ' ' << (t.is_target ? 1 : 0) << '\n';
}

inline TrialSet parse_trials(std::string_view content) {
  TrialSet trials;
  detail::for_each_record(content, [&](const detail::Line& line) {
    const auto f = detail::split_ws(line.text);
    if (f.size() != 3)
      detail::parse_error(line, "expected 3 fields, found " + std::to_string(f.size()));
    if (f[2] != "0" && f[2] != "1") detail::parse_error(line, "label must be 0 or 1");
    if (f[0] == f[1]) detail::parse_error(line, "trial pairs an utterance with itself");
    trials.push_back({std::string(f[0]), std::string(f[1]), f[2] == "1"});
  });
  return trials;
}

inline void write_scores(std::ostream& out, std::span<const ScoreLine> scores) {
  for (const auto& s : scores) out << s.enroll << ' ' << s.test << ' ' << format_real(s.score) << '\n';
}

inline std::vector<ScoreLine> parse_scores(std::string_view content) {
  std::vector<ScoreLine> scores;
  detail::for_each_record(content, [&](const detail::Line& line) {
    const auto f = detail::split_ws(line.text);
    if (f.size() != 3)
      detail::parse_error(line, "expected 3 fields, found " + std::to_string(f.size()));
    scores.push_back({std::string(f[0]), std::string(f[1]), detail::parse_real(line, f[2])});
  });
  return scores;
}

inline std::vector<Utterance> read_utterances(const std::string& path) {
  return parse_utterances(detail::read_file(path));
}
inline void write_utterances(const std::string& path, std::span<const Utterance> utts) {
  detail::write_file(path, [&](std::ostream& o) { write_utterances(o, utts); });
}
inline std::vector<NamedVector> read_embeddings(const std::string& path) {
  return parse_embeddings(detail::read_file(path));
}
inline void write_embeddings(const std::string& path, std::span<const NamedVector> rows) {
  detail::write_file(path, [&](std::ostream& o) { write_embeddings(o, rows); });
}
inline TrialSet read_trials(const std::string& path) { return parse_trials(detail::read_file(path)); }
inline void write_trials(const std::string& path, const TrialSet& trials) {
  detail::write_file(path, [&](std::ostream& o) { write_trials(o, trials); });
}
inline std::vector<ScoreLine> read_scores(const std::string& path) {
  return parse_scores(detail::read_file(path));
}
inline void write_scores(const std::string& path, std::span<const ScoreLine> scores) {
  detail::write_file(path, [&](std::ostream& o) { write_scores(o, scores); });
}

inline EmbeddingMap to_map(std::span<const NamedVector> rows) {
  EmbeddingMap map;
  for (const auto& r : rows)
    if (!map.emplace(r.id, r.values).second)
      fail(ErrorKind::InvalidConfig, "duplicate embedding id " + r.id);
  return map;
}

}  // namespace sf2

#endif  // SF2_IO_HPP
