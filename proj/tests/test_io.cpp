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
#include <filesystem>
#include <sstream>
#include <string>

#include "sf2/config.hpp"
#include "sf2/data.hpp"
#include "sf2/io.hpp"

namespace sf2 {
namespace {

const std::string kFixtures = SF2_FIXTURE_DIR;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("sf2_io_" + name)).string();
}

std::string expect_parse_error(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    return e.what();
  }
  ADD_FAILURE() << "expected ParseError";
  return {};
}

TEST(Utterances, RoundTripThroughText) {
  UniverseConfig cfg;
  cfg.k_train = 6;
  cfg.k_unseen = 3;
  cfg.d_feat = 5;
  cfg.utts_per_speaker = 3;
  const auto u = gen_universe(cfg, 1);
  std::ostringstream a;
  write_utterances(a, u.train);
  const auto once = parse_utterances(a.str());
  ASSERT_EQ(once.size(), u.train.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_EQ(once[i].utt_id, u.train[i].utt_id);
    EXPECT_EQ(once[i].speaker_id, u.train[i].speaker_id);
    for (std::size_t k = 0; k < 5; ++k)
      EXPECT_NEAR(once[i].features[k], u.train[i].features[k], 1e-8);
  }
  // Written values are the representation: a second pass is exact.
  std::ostringstream b;
  write_utterances(b, once);
  EXPECT_EQ(b.str(), a.str());
  EXPECT_EQ(parse_utterances(b.str()), once);
}

TEST(Utterances, LfAndCrlfFixturesAgree) {
  const auto lf = read_utterances(kFixtures + "/utterances_lf.txt");
  const auto crlf = read_utterances(kFixtures + "/utterances_crlf.txt");
  ASSERT_EQ(lf.size(), 3u);
  EXPECT_EQ(lf, crlf);
  EXPECT_EQ(lf[0].features, (std::vector<double>{0.5, -0.25, 1e-3}));
  EXPECT_EQ(lf[2].speaker_id, "spkB");
}

TEST(Utterances, WrongFieldCountNamesTheLine) {
  const std::string msg =
      expect_parse_error([] { parse_utterances("a\tspk\t1 2\nb\t1 2\n"); });
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("byte offset 10"), std::string::npos) << msg;
}

TEST(Utterances, BadNumberAndWidthMismatch) {
  expect_parse_error([] { parse_utterances("a\tspk\t1 x2\n"); });
  expect_parse_error([] { parse_utterances("a\tspk\t1 nan\n"); });
  expect_parse_error([] { parse_utterances("a\tspk\t1 2\nb\tspk\t1 2 3\n"); });
}

TEST(Embeddings, RoundTripAndFixture) {
  const auto rows = read_embeddings(kFixtures + "/embeddings.txt");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].values, (std::vector<double>{0.6, 0.8}));
  const auto path = temp_path("emb.txt");
  write_embeddings(path, rows);
  EXPECT_EQ(read_embeddings(path), rows);
  std::filesystem::remove(path);
  expect_parse_error([] { parse_embeddings("a\tb\t1 2\n"); });
}

TEST(Embeddings, DuplicateIdsAreRejectedByTheMap) {
  const std::vector<NamedVector> rows{{"a", {1.0}}, {"a", {2.0}}};
  EXPECT_THROW(to_map(rows), Error);
}

TEST(Trials, LfAndCrlfFixturesAgree) {
  const auto lf = read_trials(kFixtures + "/trials_lf.txt");
  const auto crlf = read_trials(kFixtures + "/trials_crlf.txt");
  ASSERT_EQ(lf.size(), 3u);
  EXPECT_EQ(lf, crlf);
  EXPECT_TRUE(lf[0].is_target);
  EXPECT_FALSE(lf[2].is_target);
}

TEST(Trials, RoundTripAndErrors) {
  const TrialSet t{{"a", "b", true}, {"c", "d", false}};
  std::ostringstream os;
  write_trials(os, t);
  EXPECT_EQ(parse_trials(os.str()), t);
  const std::string msg = expect_parse_error([] { read_trials(kFixtures + "/trials_bad.txt"); });
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  expect_parse_error([] { parse_trials("a b yes\n"); });
  expect_parse_error([] { parse_trials("a a 1\n"); });
}

TEST(Scores, RoundTripAndFixture) {
  const auto s = read_scores(kFixtures + "/scores.txt");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1].score, -0.1);
  std::ostringstream os;
  write_scores(os, s);
  EXPECT_EQ(parse_scores(os.str()), s);
  expect_parse_error([] { parse_scores("a b\n"); });
}

TEST(Files, MissingFileIsAnIoError) {
  try {
    read_trials("/nonexistent/trials.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(FormatReal, ShortestExactText) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_real(-2.5e-7), "-2.5e-07");
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    ASSERT_EQ(std::stod(format_real(v)), v);
  }
}

// ---- configuration files ----

TEST(Config, RenderParseRoundTrip) {
  TrainConfig c;
  c.universe.kappa = 0.1 + 0.2;  // not a short decimal
  c.hidden = {7, 5};
  c.lr_start = 1.0 / 3.0;
  c.seed = 12345678901234ULL;
  c.eval.p_targets = {0.01, 0.001};
  c.eval.asnorm = true;
  const std::string text = render_config(c);
  const TrainConfig back = parse_config(text);
  EXPECT_EQ(render_config(back), text);
  EXPECT_EQ(back.universe.kappa, c.universe.kappa);
  EXPECT_EQ(back.lr_start, c.lr_start);
  EXPECT_EQ(back.hidden, c.hidden);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, EveryPresetRoundTrips) {
  for (auto name : kLossPresets) {
    TrainConfig c;
    apply_config(c, {{"loss.name", std::string(name)}});
    const auto back = parse_config(render_config(c));
    EXPECT_EQ(render_config(back), render_config(c)) << name;
    EXPECT_EQ(back.loss.kind, c.loss.kind) << name;
  }
}

TEST(Config, LinearEncoderRoundTrips) {
  TrainConfig c;
  c.hidden.clear();
  EXPECT_TRUE(parse_config(render_config(c)).hidden.empty());
}

TEST(Config, ExplicitKeysOverrideThePreset) {
  const auto c = parse_config("[loss]\nm = 0.3\nname = sphereface2\n[train]\nseed = 9\n");
  EXPECT_EQ(c.loss.sphereface2.m, 0.3);
  EXPECT_EQ(c.seed, 9u);
}

TEST(Config, ErrorsAreCategorised) {
  auto kind_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Usage;
  };
  EXPECT_EQ(kind_of("[train]\nbogus = 1\n"), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of("[train]\nepochs = -3\n"), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of("[train]\nlr_start = 1e-6\nlr_end = 1e-3\n"), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of("[loss]\nlambda = 2\n"), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of("epochs = 3\n"), ErrorKind::ParseError);
  EXPECT_EQ(kind_of("[train\n"), ErrorKind::ParseError);
  EXPECT_EQ(kind_of("[train]\nepochs 3\n"), ErrorKind::ParseError);
  EXPECT_EQ(kind_of("[train]\nepochs = 3\nepochs = 4\n"), ErrorKind::ParseError);
}

}  // namespace
}  // namespace sf2
