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

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sf2/eval.hpp"

namespace sf2 {
namespace {

ScoredTrials make(std::vector<double> targets, std::vector<double> nontargets) {
  ScoredTrials st;
  for (double s : targets) {
    st.scores.push_back(s);
    st.is_target.push_back(true);
  }
  for (double s : nontargets) {
    st.scores.push_back(s);
    st.is_target.push_back(false);
  }
  return st;
}

TEST(ScoreTrials, IdentityAntipodalAndDotProducts) {
  EmbeddingMap map{{"a", {0.6, 0.8}}, {"b", {-0.6, -0.8}}, {"c", {1.0, 0.0}}};
  const TrialSet trials{{"a", "a2", true}};
  const TrialSet ok{{"a", "b", false}, {"a", "c", true}, {"c", "c", true}};
  const auto st = score_trials(map, ok);
  EXPECT_NEAR(st.scores[0], -1.0, 1e-15);
  EXPECT_NEAR(st.scores[1], 0.6, 1e-15);
  EXPECT_NEAR(st.scores[2], 1.0, 1e-15);
  EXPECT_EQ(st.is_target, (std::vector<bool>{false, true, true}));
  try {
    score_trials(map, trials);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingId);
  }
}

TEST(Eer, PerfectSeparationIsZero) {
  EXPECT_EQ(eer(make({0.9, 0.8, 0.7}, {0.1, 0.2})).value, 0.0);
}

TEST(Eer, FourTrialHandCase) {
  const auto st = make({0.9, 0.2}, {0.8, 0.1});
  const auto b = oracle::eer_bracket(st);
  EXPECT_EQ(b.lo, 0.5);
  EXPECT_EQ(b.hi, 0.5);
  EXPECT_EQ(eer(st).value, 0.5);
}

TEST(Eer, InterpolatesBetweenSweepPoints) {
  // FAR - FRR changes sign between thresholds 0.3 and 0.4.
  const auto st = make({0.4, 0.5, 0.6}, {0.1, 0.2, 0.3, 0.45});
  const auto op = eer(st);
  const auto b = oracle::eer_bracket(st);
  EXPECT_GE(op.value, b.lo);
  EXPECT_LE(op.value, b.hi);
  EXPECT_GT(op.threshold, 0.3);
  EXPECT_LE(op.threshold, 0.45);
}

TEST(Eer, ChanceLevelWithRandomLabels) {
  Rng rng(1);
  ScoredTrials st;
  for (int i = 0; i < 10000; ++i) {
    st.scores.push_back(rng.normal());
    st.is_target.push_back(rng.below(2) == 1);
  }
  EXPECT_NEAR(eer(st).value, 0.5, 0.03);
}

TEST(Eer, DegenerateLabels) {
  for (const auto& st : {make({0.1, 0.2}, {}), make({}, {0.3})}) {
    try {
      eer(st);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DegenerateLabels);
    }
  }
}

TEST(Eer, MatchesOracleBracketOnRandomSets) {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    const auto st = oracle::random_scores(rng, 200);
    const auto b = oracle::eer_bracket(st);
    const double v = eer(st).value;
    ASSERT_GE(v, b.lo - 1e-12) << i;
    ASSERT_LE(v, b.hi + 1e-12) << i;
  }
}

TEST(MinDcf, PerfectSeparationAndAllTied) {
  EXPECT_EQ(min_dcf(make({0.9, 0.8}, {0.1}), DcfParams{0.01}).value, 0.0);
  EXPECT_EQ(min_dcf(make({0.5, 0.5}, {0.5, 0.5, 0.5}), DcfParams{0.01}).value, 1.0);
  EXPECT_EQ(min_dcf(make({0.5}, {0.5}), DcfParams{0.3}).value, 1.0);
}

TEST(MinDcf, HandCase) {
  // p=0.5: best threshold 0.8 misses one of two targets and accepts no
  // non-target: cost 0.5 * 0.5 = 0.25, normalized by 0.5.
  const auto op = min_dcf(make({0.9, 0.2}, {0.1, 0.7}), DcfParams{0.5});
  EXPECT_DOUBLE_EQ(op.value, 0.5);
  EXPECT_EQ(op.threshold, 0.2);
}

TEST(MinDcf, MatchesOracleExactlyOnRandomSets) {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto st = oracle::random_scores(rng, 64);
    for (double p : {0.01, 0.05, 0.5}) {
      const DcfParams params{p};
      ASSERT_EQ(min_dcf(st, params).value, oracle::min_dcf(st, params)) << i;
    }
  }
}

TEST(MinDcf, BoundedByOne) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto st = oracle::random_scores(rng, 50);
    const double v = min_dcf(st, DcfParams{rng.uniform(0.001, 0.999)}).value;
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(MinDcf, InvalidPriorIsRejected) {
  EXPECT_THROW(min_dcf(make({1}, {0}), DcfParams{0.0}), Error);
  EXPECT_THROW(min_dcf(make({1}, {0}), DcfParams{1.0}), Error);
}

TEST(Metrics, InvariantUnderMonotoneTransformsAndPermutation) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto st = oracle::random_scores(rng, 100);
    auto affine = st, squashed = st, shuffled = st;
    for (auto& s : affine.scores) s = 2 * s + 1;
    for (auto& s : squashed.scores) s = std::tanh(s / 4);
    std::vector<std::size_t> perm(st.size());
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    rng.shuffle(perm);
    for (std::size_t k = 0; k < perm.size(); ++k) {
      shuffled.scores[k] = st.scores[perm[k]];
      shuffled.is_target[k] = st.is_target[perm[k]];
    }
    const double e = eer(st).value;
    ASSERT_NEAR(eer(affine).value, e, 1e-12);
    ASSERT_NEAR(eer(squashed).value, e, 1e-12);
    ASSERT_EQ(eer(shuffled).value, e);
    const DcfParams p{0.05};
    ASSERT_EQ(min_dcf(affine, p).value, min_dcf(st, p).value);
    ASSERT_EQ(min_dcf(squashed, p).value, min_dcf(st, p).value);
    ASSERT_EQ(min_dcf(shuffled, p).value, min_dcf(st, p).value);
  }
}

// ---- score normalization ----

TEST(Asnorm, HandCase) {
  const CohortStats e = cohort_stats({0.4, 0.2, -0.5}, 2);
  const CohortStats t = cohort_stats({0.1, -0.9, 0.5}, 2);
  EXPECT_NEAR(e.mean, 0.3, 1e-15);
  EXPECT_NEAR(e.stddev, 0.1, 1e-15);
  EXPECT_NEAR(t.mean, 0.3, 1e-15);
  EXPECT_NEAR(t.stddev, 0.2, 1e-15);
  EXPECT_NEAR(asnorm_score(0.5, e, t), 1.5, 1e-12);
}

TEST(Asnorm, CenteredCaseIsZero) {
  const CohortStats c = cohort_stats({1.5, -0.5}, 2);
  EXPECT_DOUBLE_EQ(c.stddev, 1.0);
  EXPECT_DOUBLE_EQ(asnorm_score(0.5, c, c), 0.0);
}

TEST(Asnorm, ZeroVarianceAndBadTopN) {
  try {
    cohort_stats({0.3, 0.3, 0.1}, 2);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::ZeroVariance);
  }
  EXPECT_THROW(cohort_stats({0.3, 0.2}, 1), Error);
  EXPECT_THROW(cohort_stats({0.3, 0.2}, 3), Error);
}

TEST(Asnorm, ShiftInvariance) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> se(10), st(10);
    for (auto& v : se) v = rng.normal();
    for (auto& v : st) v = rng.normal();
    const double raw = rng.normal();
    const double delta = rng.uniform(-3, 3);
    auto se2 = se, st2 = st;
    for (auto& v : se2) v += delta;
    for (auto& v : st2) v += delta;
    ASSERT_NEAR(asnorm_score(raw, cohort_stats(se, 4), cohort_stats(st, 4)),
                asnorm_score(raw + delta, cohort_stats(se2, 4), cohort_stats(st2, 4)), 1e-9);
  }
}

TEST(Asnorm, FullCohortEqualsSymmetricNorm) {
  Rng rng(7);
  Matrix<double> cohort(6, 3);
  for (std::size_t r = 0; r < 6; ++r) {
    for (auto& v : cohort.row(r)) v = rng.normal();
    normalize_in_place(cohort.row(r));
  }
  EmbeddingMap map{{"e", {1.0, 0.0, 0.0}}, {"t", {0.0, 0.6, 0.8}}};
  const TrialSet trials{{"e", "t", false}, {"t", "e", true}};
  const auto raw = score_trials(map, trials);
  const auto norm = asnorm(raw, trials, map, cohort, 6);
  auto full = [&](const std::string& id) {
    double m = 0, m2 = 0;
    for (std::size_t r = 0; r < 6; ++r) {
      const double s = cosine<double>(map.at(id), cohort.row(r));
      m += s / 6;
      m2 += s * s / 6;
    }
    return CohortStats{m, std::sqrt(m2 - m * m)};
  };
  const double expected = asnorm_score(raw.scores[0], full("e"), full("t"));
  EXPECT_NEAR(norm.scores[0], expected, 1e-12);
  EXPECT_NEAR(norm.scores[1], expected, 1e-12);
  EXPECT_EQ(norm.is_target, raw.is_target);
}

// ---- reports ----

TrialMetrics metrics(const std::string& set, double e) {
  return {set, false, e, {{0.01, 0.25}, {0.05, 0.125}}};
}

TEST(Report, SingleRowHasHeaderAndOneLine) {
  const auto r = report({{"softmax", {metrics("unseen", 0.1234)}}});
  EXPECT_EQ(std::count(r.text.begin(), r.text.end(), '\n'), 2);
  EXPECT_EQ(r.csv,
            "System,unseen EER(%),unseen DCF(0.01),unseen DCF(0.05)\n"
            "softmax,12.340,0.2500,0.1250\n");
}

TEST(Report, WideTableIsAlignedAndDeterministic) {
  std::vector<ReportRow> rows;
  for (int s = 0; s < 10; ++s) {
    std::vector<TrialMetrics> m;
    for (int t = 0; t < 5; ++t) m.push_back(metrics("set" + std::to_string(t), 0.01 * (s + t)));
    rows.push_back({"system-with-a-long-name-" + std::to_string(s), m});
  }
  const auto a = report(rows);
  const auto b = report(rows);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.csv, b.csv);
  std::size_t width = std::string::npos;
  std::size_t start = 0;
  int lines = 0;
  while (start < a.text.size()) {
    const auto end = a.text.find('\n', start);
    const std::size_t len = end - start;
    if (width == std::string::npos) width = len;
    EXPECT_EQ(len, width);
    start = end + 1;
    ++lines;
  }
  EXPECT_EQ(lines, 11);
  EXPECT_NE(a.text.find("system-with-a-long-name-9"), std::string::npos);
}

TEST(Report, MismatchedColumnsAreRejected) {
  EXPECT_THROW(report({{"a", {metrics("x", 0.1)}}, {"b", {metrics("y", 0.1)}}}), Error);
}

TEST(JoinScores, MatchesTrialsByIdPair) {
  const auto scores = read_scores(std::string(SF2_FIXTURE_DIR) + "/scores.txt");
  const auto trials = read_trials(std::string(SF2_FIXTURE_DIR) + "/trials_lf.txt");
  const auto st = join_scores(scores, trials);
  EXPECT_EQ(st.scores, (std::vector<double>{0.75, -0.1, 0.2}));
  EXPECT_EQ(st.is_target, (std::vector<bool>{true, false, false}));
  const auto separated = compute_metrics("fixture", st, {0.01}, false);
  EXPECT_EQ(separated.eer, 0.0);
  EXPECT_EQ(separated.dcf[0].min_dcf, 0.0);
}

TEST(JoinScores, MissingAndDuplicateScoresAreRejected) {
  const TrialSet trials{{"a", "b", true}, {"a", "c", false}};
  try {
    join_scores(std::vector<ScoreLine>{{"a", "b", 0.5}}, trials);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingId);
  }
  EXPECT_THROW(join_scores(std::vector<ScoreLine>{{"a", "b", 0.5}, {"a", "b", 0.4}, {"a", "c", 0}},
                           trials),
               Error);
}

}  // namespace
}  // namespace sf2
