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

#ifndef SF2_EVAL_HPP
#define SF2_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sf2/core.hpp"
#include "sf2/data.hpp"
#include "sf2/error.hpp"
#include "sf2/io.hpp"

namespace sf2 {

struct ScoredTrials {
  std::vector<double> scores;
  std::vector<bool> is_target;

  std::size_t size() const { return scores.size(); }
  void validate() const {
    if (scores.size() != is_target.size())
      fail(ErrorKind::InvariantViolation, "scores and labels differ in length");
    require_finite(std::span<const double>(scores), "trial scores");
  }
};

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  double normalizer() const { return std::min(c_miss * p_target, c_fa * (1.0 - p_target)); }
  void validate() const {
    if (!(p_target > 0.0 && p_target < 1.0))
      fail(ErrorKind::InvalidConfig, "p_target must lie in (0, 1)");
    if (!(c_miss > 0.0 && c_fa > 0.0)) fail(ErrorKind::InvalidConfig, "DCF costs must be > 0");
  }
};

struct OperatingPoint {
  double value = 0.0;
  double threshold = 0.0;
};

/// Cosine score for every trial.
inline ScoredTrials score_trials(const EmbeddingMap& embeddings, const TrialSet& trials) {
  ScoredTrials st;
  st.scores.reserve(trials.size());
  st.is_target.reserve(trials.size());
  auto lookup = [&](const std::string& id) -> const std::vector<double>& {
    const auto it = embeddings.find(id);
    if (it == embeddings.end()) fail(ErrorKind::MissingId, "no embedding for '" + id + "'");
    return it->second;
  };
  for (const auto& t : trials) {
    st.scores.push_back(cosine(lookup(t.enroll), lookup(t.test)));
    st.is_target.push_back(t.is_target);
  }
  return st;
}

/// Pairs each trial with its score line by (enroll, test) id; every trial
/// must be scored exactly once.
inline ScoredTrials join_scores(std::span<const ScoreLine> scores, const TrialSet& trials) {
  std::map<std::pair<std::string, std::string>, double> by_pair;
  for (const auto& s : scores)
    if (!by_pair.emplace(std::pair{s.enroll, s.test}, s.score).second)
      fail(ErrorKind::InvalidConfig, "duplicate score for " + s.enroll + " " + s.test);
  ScoredTrials st;
  for (const auto& t : trials) {
    const auto it = by_pair.find({t.enroll, t.test});
    if (it == by_pair.end()) fail(ErrorKind::MissingId, "no score for trial " + t.enroll + " " + t.test);
    st.scores.push_back(it->second);
    st.is_target.push_back(t.is_target);
  }
  return st;
}

namespace detail {

// Error counts at every distinct-score threshold (accept iff score >= theta),
// ascending. misses[i] = targets below thresholds[i], false_alarms[i] =
// non-targets at or above it.
struct Sweep {
  std::vector<double> thresholds;
  std::vector<std::size_t> misses;
  std::vector<std::size_t> false_alarms;
  std::size_t targets = 0;
  std::size_t nontargets = 0;
};

inline Sweep sweep(const ScoredTrials& st) {
  st.validate();
  Sweep sw;
  std::vector<std::size_t> order(st.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return st.scores[a] < st.scores[b]; });
  for (bool t : st.is_target) (t ? sw.targets : sw.nontargets)++;
  if (sw.targets == 0 || sw.nontargets == 0)
    fail(ErrorKind::DegenerateLabels, "need at least one target and one non-target trial");
  std::size_t miss = 0;
  std::size_t rejected_nontargets = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double v = st.scores[order[i]];
    sw.thresholds.push_back(v);
    sw.misses.push_back(miss);
    sw.false_alarms.push_back(sw.nontargets - rejected_nontargets);
    for (; i < order.size() && st.scores[order[i]] == v; ++i)
      (st.is_target[order[i]] ? miss : rejected_nontargets)++;
  }
  return sw;
}

}  // namespace detail

/// Equal error rate: where the false-acceptance and false-rejection curves
/// cross, linearly interpolated between the bracketing sweep points.
inline OperatingPoint eer(const ScoredTrials& st) {
  const auto sw = detail::sweep(st);
  const double nt = double(sw.targets);
  const double nn = double(sw.nontargets);
  const std::size_t points = sw.thresholds.size();
  auto far = [&](std::size_t i) { return i < points ? double(sw.false_alarms[i]) / nn : 0.0; };
  auto frr = [&](std::size_t i) { return i < points ? double(sw.misses[i]) / nt : 1.0; };

  // index `points` is the reject-everything point
  std::size_t i = 0;
  while (far(i) - frr(i) > 0.0) ++i;
  const double d1 = far(i) - frr(i);
  if (d1 == 0.0) return {far(i), sw.thresholds[i]};
  const double d0 = far(i - 1) - frr(i - 1);
  const double alpha = d0 / (d0 - d1);
  const double value = far(i - 1) + alpha * (far(i) - far(i - 1));
  const double lo = sw.thresholds[i - 1];
  const double threshold = i < points ? lo + alpha * (sw.thresholds[i] - lo) : lo;
  return {value, threshold};
}

/// Normalized minimum detection cost over every distinct-score threshold plus
/// accept-all (-inf) and reject-all (+inf); ties go to the lowest threshold.
inline OperatingPoint min_dcf(const ScoredTrials& st, const DcfParams& p) {
  p.validate();
  const auto sw = detail::sweep(st);
  const double nt = double(sw.targets);
  const double nn = double(sw.nontargets);
  auto cost = [&](std::size_t miss, std::size_t fa) {
    return p.c_miss * p.p_target * (double(miss) / nt) +
           p.c_fa * (1.0 - p.p_target) * (double(fa) / nn);
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  OperatingPoint best{cost(0, sw.nontargets), -inf};
  for (std::size_t i = 0; i < sw.thresholds.size(); ++i) {
    const double c = cost(sw.misses[i], sw.false_alarms[i]);
    if (c < best.value) best = {c, sw.thresholds[i]};
  }
  const double reject_all = cost(sw.targets, 0);
  if (reject_all < best.value) best = {reject_all, inf};
  best.value /= p.normalizer();
  return best;
}

/// Mean and population standard deviation of the top-N cohort scores.
struct CohortStats {
  double mean = 0.0;
  double stddev = 0.0;
};

inline CohortStats cohort_stats(std::vector<double> scores, std::size_t top_n) {
  if (top_n < 2 || top_n > scores.size())
    fail(ErrorKind::InvalidConfig, "asnorm: need 2 <= topN <= cohort size");
  std::partial_sort(scores.begin(), scores.begin() + std::ptrdiff_t(top_n), scores.end(),
                    std::greater<>());
  double mean = 0.0;
  for (std::size_t i = 0; i < top_n; ++i) mean += scores[i];
  mean /= double(top_n);
  double var = 0.0;
  for (std::size_t i = 0; i < top_n; ++i) var += (scores[i] - mean) * (scores[i] - mean);
  const double sd = std::sqrt(var / double(top_n));
  if (sd < 1e-12) fail(ErrorKind::ZeroVariance, "asnorm: cohort scores have zero variance");
  return {mean, sd};
}

inline double asnorm_score(double raw, const CohortStats& enroll, const CohortStats& test) {
  return 0.5 * ((raw - enroll.mean) / enroll.stddev + (raw - test.mean) / test.stddev);
}

/// Adaptive symmetric score normalization against the top-N most similar
/// cohort members of each side.
inline ScoredTrials asnorm(const ScoredTrials& raw, const TrialSet& trials,
                           const EmbeddingMap& embeddings, const Matrix<double>& cohort,
                           std::size_t top_n) {
  raw.validate();
  if (raw.size() != trials.size())
    fail(ErrorKind::InvariantViolation, "asnorm: scores and trials differ in length");
  if (top_n < 2 || top_n > cohort.rows())
    fail(ErrorKind::InvalidConfig, "asnorm: need 2 <= topN <= cohort size");
  std::unordered_map<std::string, CohortStats> cache;
  auto stats = [&](const std::string& id) -> const CohortStats& {
    if (auto it = cache.find(id); it != cache.end()) return it->second;
    const auto e = embeddings.find(id);
    if (e == embeddings.end()) fail(ErrorKind::MissingId, "no embedding for '" + id + "'");
    std::vector<double> s(cohort.rows());
    for (std::size_t r = 0; r < cohort.rows(); ++r)
      s[r] = cosine(std::span<const double>(e->second), cohort.row(r));
    return cache.emplace(id, cohort_stats(std::move(s), top_n)).first->second;
  };
  ScoredTrials out{std::vector<double>(raw.size()), raw.is_target};
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.scores[i] = asnorm_score(raw.scores[i], stats(trials[i].enroll), stats(trials[i].test));
  return out;
}

struct DcfValue {
  double p_target = 0.01;
  double min_dcf = 0.0;

  friend bool operator==(const DcfValue&, const DcfValue&) = default;
};

struct TrialMetrics {
  std::string trial_set;
  bool normalized = false;
  double eer = 0.0;
  std::vector<DcfValue> dcf;

  friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

inline TrialMetrics compute_metrics(const std::string& name, const ScoredTrials& st,
                                    const std::vector<double>& p_targets, bool normalized) {
  TrialMetrics m{name, normalized, eer(st).value, {}};
  for (double p : p_targets) m.dcf.push_back({p, min_dcf(st, DcfParams{p}).value});
  return m;
}

struct ReportRow {
  std::string system;
  std::vector<TrialMetrics> metrics;
};

struct Report {
  std::string text;
  std::string csv;
};

inline std::vector<std::string> metric_headers(const std::vector<TrialMetrics>& metrics) {
  std::vector<std::string> header;
  for (const auto& m : metrics) {
    const std::string set = m.trial_set + (m.normalized ? "[asnorm]" : "");
    header.push_back(set + " EER(%)");
    for (const auto& d : m.dcf) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " DCF(%g)", d.p_target);
      header.push_back(set + buf);
    }
  }
  return header;
}

/// EER(%) then minDCF per prior, per trial set. Rows must share the layout
/// of `reference`.
inline std::vector<std::string> metric_cells(const std::vector<TrialMetrics>& metrics,
                                             const std::vector<TrialMetrics>& reference) {
  if (metrics.size() != reference.size())
    fail(ErrorKind::InvalidConfig, "report: rows have different trial sets");
  std::vector<std::string> cells;
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    const auto& m = metrics[k];
    const auto& ref = reference[k];
    if (m.trial_set != ref.trial_set || m.normalized != ref.normalized ||
        m.dcf.size() != ref.dcf.size())
      fail(ErrorKind::InvalidConfig, "report: rows have different trial sets");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", 100.0 * m.eer);
    cells.emplace_back(buf);
    for (std::size_t d = 0; d < m.dcf.size(); ++d) {
      if (m.dcf[d].p_target != ref.dcf[d].p_target)
        fail(ErrorKind::InvalidConfig, "report: rows use different DCF priors");
      std::snprintf(buf, sizeof buf, "%.4f", m.dcf[d].min_dcf);
      cells.emplace_back(buf);
    }
  }
  return cells;
}

/// Aligned plain text and CSV renderings of the same cell grid; the first
/// row is the header.
inline Report render_table(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& line : cells) {
    if (line.size() > width.size()) width.resize(line.size(), 0);
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }

  std::ostringstream text, csv;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c == 0) {
        text << line[c] << std::string(width[c] - line[c].size(), ' ');
      } else {
        text << "  " << std::string(width[c] - line[c].size(), ' ') << line[c];
      }
      csv << (c ? "," : "") << line[c];
    }
    text << '\n';
    csv << '\n';
  }
  return {text.str(), csv.str()};
}

/// Comparison table: one row per system.
inline Report report(const std::vector<ReportRow>& rows) {
  std::vector<std::string> header{"System"};
  if (!rows.empty()) {
    const auto h = metric_headers(rows.front().metrics);
    header.insert(header.end(), h.begin(), h.end());
  }
  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : rows) {
    std::vector<std::string> line{r.system};
    const auto c = metric_cells(r.metrics, rows.front().metrics);
    line.insert(line.end(), c.begin(), c.end());
    cells.push_back(std::move(line));
  }
  return render_table(cells);
}

}  // namespace sf2

#endif  // SF2_EVAL_HPP
