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

#include "sf2/train.hpp"

namespace sf2 {
namespace {

TrainConfig toy_config(const std::string& loss = "sphereface2") {
  TrainConfig c;
  apply_config(c, {{"loss.name", loss}});
  c.universe.k_train = 50;
  c.universe.k_unseen = 10;
  c.universe.d_feat = 16;
  c.universe.utts_per_speaker = 10;
  c.hidden = {16};
  c.embed_dim = 8;
  c.epochs = 20;
  c.eval.n_target = 200;
  c.eval.n_nontarget = 200;
  c.seed = 3;
  return c;
}

TrainConfig tiny_config(const std::string& loss = "sphereface2") {
  TrainConfig c = toy_config(loss);
  c.universe.k_train = 12;
  c.universe.k_unseen = 6;
  c.universe.d_feat = 8;
  c.universe.utts_per_speaker = 6;
  c.hidden = {8};
  c.embed_dim = 4;
  c.epochs = 3;
  c.batch_size = 16;
  c.proto_speakers = 4;
  c.eval.n_target = 40;
  c.eval.n_nontarget = 40;
  return c;
}

TEST(LrSchedule, EndpointsAndHandValue) {
  EXPECT_EQ(lr_at(0, 5, 0.1, 1e-5), 0.1);
  EXPECT_NEAR(lr_at(4, 5, 0.1, 1e-5), 1e-5, 1e-18);
  EXPECT_NEAR(lr_at(2, 5, 0.1, 1e-5), 1e-3, 1e-15);
  EXPECT_EQ(lr_at(0, 1, 0.1, 1e-5), 0.1);
}

TEST(LrSchedule, MonotoneAndLogLinear) {
  for (std::size_t total : {2, 7, 150}) {
    for (std::size_t e = 0; e + 1 < total; ++e) {
      const double a = lr_at(e, total, 0.1, 1e-5);
      const double b = lr_at(e + 1, total, 0.1, 1e-5);
      ASSERT_LE(b, a);
      if (e + 2 < total) {
        const double c = lr_at(e + 2, total, 0.1, 1e-5);
        ASSERT_NEAR(std::log(b) - std::log(a), std::log(c) - std::log(b), 1e-12);
      }
    }
  }
}

TEST(LrSchedule, InvalidArguments) {
  EXPECT_THROW(lr_at(5, 5, 0.1, 1e-5), Error);
  EXPECT_THROW(lr_at(0, 5, 1e-5, 0.1), Error);
  EXPECT_THROW(lr_at(0, 5, 0.1, 0.0), Error);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  TrainConfig c = tiny_config();
  c.epochs = 1;
  c.lr_start = 0.0;
  c.lr_end = 0.0;
  const auto init = Model<double>::init(c.layer_sizes(), c.universe.k_train, c.loss,
                                        Rng(c.seed).split("init"));
  const auto r = train(c);
  EXPECT_EQ(r.epoch_loss.size(), 1u);
  EXPECT_EQ(r.checkpoint.model.params(), init.params());
}

TEST(Train, ToyRunReducesTheLoss) {
  const auto r = train(toy_config());
  ASSERT_EQ(r.epoch_loss.size(), 20u);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
  double tail = 0;
  for (std::size_t e = 15; e < 20; ++e) tail += r.epoch_loss[e] / 5;
  EXPECT_LT(tail, r.epoch_loss.front());
}

TEST(Train, EveryLossTrainsAndEvaluates) {
  for (auto name : kLossPresets) {
    const auto r = train(tiny_config(std::string(name)));
    EXPECT_EQ(r.system, name);
    EXPECT_EQ(r.epoch_loss.size(), 3u);
    ASSERT_EQ(r.metrics.size(), 1u);
    EXPECT_GE(r.eer(), 0.0);
    EXPECT_LE(r.eer(), 1.0);
  }
}

TEST(Train, DeterministicRunRecords) {
  const auto a = train(tiny_config());
  const auto b = train(tiny_config());
  EXPECT_EQ(render_run_record(a), render_run_record(b));
  EXPECT_TRUE(a.checkpoint == b.checkpoint);
  auto other = tiny_config();
  other.seed = 4;
  EXPECT_NE(render_run_record(train(other)), render_run_record(a));
}

TEST(Train, ResumeFromCheckpointIsBitIdentical) {
  auto c = tiny_config("aamsoftmax");
  c.epochs = 4;
  Trainer straight(c);
  Trainer first(c);
  straight.run_epoch();
  first.run_epoch();
  first.run_epoch();
  const auto bytes = encode_checkpoint(first.checkpoint());
  Trainer resumed = Trainer::resume(decode_checkpoint(bytes));
  EXPECT_EQ(resumed.epoch(), 2u);
  while (!straight.done()) straight.run_epoch();
  while (!resumed.done()) resumed.run_epoch();
  EXPECT_TRUE(straight.checkpoint() == resumed.checkpoint());
}

TEST(Train, TamperedCheckpointConfigIsRejected) {
  auto ck = Trainer(tiny_config()).checkpoint();
  ck.config_text += "# edited\n";
  EXPECT_THROW(Trainer::resume(ck), Error);
}

TEST(Train, LabelNoiseIsCountedAndChangesTraining) {
  auto c = tiny_config();
  c.label_noise = 0.25;
  const auto r = train(c);
  EXPECT_EQ(r.corrupted_labels, 18u);  // 0.25 * 72
  EXPECT_NE(r.checkpoint.model.params(), train(tiny_config()).checkpoint.model.params());
}

TEST(Train, ExplodingRunIsReportedAsDiverged) {
  auto c = tiny_config();
  c.loss.sphereface2.s = 1e5;
  c.lr_start = 10;
  c.lr_end = 10;
  try {
    train(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Diverged);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(RunRecord, TextRoundTrip) {
  auto c = tiny_config();
  c.eval.asnorm = true;
  c.eval.asnorm_top_n = 3;
  const auto r = train(c);
  ASSERT_EQ(r.metrics.size(), 2u);
  const std::string text = render_run_record(r);
  const auto back = parse_run_record(text);
  EXPECT_EQ(render_run_record(back), text);
  EXPECT_EQ(back.config_text, r.config_text);
  EXPECT_EQ(back.epoch_loss, r.epoch_loss);
  EXPECT_EQ(back.epoch_lr, r.epoch_lr);
  EXPECT_EQ(back.metrics, r.metrics);
  EXPECT_THROW(parse_run_record("stage train\nbogus 1\n"), Error);
  EXPECT_THROW(parse_run_record(""), Error);
}

TEST(Lmft, NoOpConfigurationReproducesMetrics) {
  const auto base = train(tiny_config());
  LmftConfig lc;
  lc.margin = base.checkpoint.model.kind() == LossKind::SphereFace2 ? 0.2 : 0.0;
  lc.lr = 0.0;
  const auto ft = lmft(base.checkpoint, lc);
  EXPECT_EQ(ft.metrics, base.metrics);
  EXPECT_EQ(ft.stage, "lmft");
  EXPECT_EQ(ft.epoch_loss.size(), 5u);
}

TEST(Lmft, DefaultSettingsComplete) {
  const auto base = train(tiny_config("aamsoftmax"));
  const auto ft = lmft(base.checkpoint, LmftConfig{});
  EXPECT_EQ(ft.system, "aamsoftmax+lmft");
  EXPECT_EQ(ft.checkpoint.epoch, base.checkpoint.epoch + 5);
  EXPECT_EQ(parse_config(ft.config_text).loss.margin.m2, 0.35);
}

TEST(Lmft, LossWithoutMarginIsInvalid) {
  for (const char* name : {"softmax", "prototypical", "angproto"}) {
    const auto base = train(tiny_config(name));
    try {
      lmft(base.checkpoint, LmftConfig{});
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
    }
  }
}

TEST(Lmft, MarginBelowBaseIsInvalid) {
  const auto base = train(tiny_config());
  LmftConfig lc;
  lc.margin = 0.1;
  EXPECT_THROW(lmft(base.checkpoint, lc), Error);
}

TEST(Ablation, SingleCellMatchesDirectTraining) {
  const auto c = tiny_config();
  const auto rows = run_ablation({{0.7, 3, 32, 0.2}}, c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].diverged);
  EXPECT_EQ(rows[0].metrics, train(c).metrics);
  const auto table = ablation_table(rows);
  EXPECT_EQ(std::count(table.csv.begin(), table.csv.end(), '\n'), 2);
}

TEST(Ablation, DivergentCellIsRecordedAndTheSweepContinues) {
  auto c = tiny_config();
  c.lr_start = 10;
  c.lr_end = 10;
  const auto rows = run_ablation({{0.7, 3, 1e5, 0.2}, {0.7, 3, 0.5, 0.2}}, c, 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].diverged);
  EXPECT_FALSE(rows[1].diverged);
  const auto table = ablation_table(rows);
  EXPECT_NE(table.text.find("diverged"), std::string::npos);
}

TEST(Ablation, DefaultGridHasTenRowsAndParsesFromText) {
  const auto grid = default_ablation_grid();
  ASSERT_EQ(grid.size(), 10u);
  const auto parsed = parse_ablation_grid("# lambda t s m\n0.7 3 32 0.2\n0.8 3 32 0.2\n");
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[1].lambda, 0.8);
  EXPECT_THROW(parse_ablation_grid("0.7 3 32\n"), Error);
  EXPECT_THROW(parse_ablation_grid("# nothing\n"), Error);
}

TEST(Ablation, JobCountDoesNotChangeResults) {
  const auto grid = std::vector<AblationCell>{{0.7, 3, 32, 0.2}, {0.8, 2, 16, 0.1}, {0.6, 1, 8, 0.3}};
  const auto one = ablation_table(run_ablation(grid, tiny_config(), 1));
  const auto three = ablation_table(run_ablation(grid, tiny_config(), 3));
  EXPECT_EQ(one.text, three.text);
  EXPECT_EQ(one.csv, three.csv);
}

TEST(NoiseStudy, CleanProportionHasZeroDegradation) {
  const auto study = run_noise_study({0.5}, {"aamsoftmax", "sphereface2"}, {1, 2}, tiny_config(), 2);
  EXPECT_EQ(study.cells.size(), 8u);
  for (const auto& c : study.cells) {
    if (c.proportion == 0.0) {
      EXPECT_EQ(c.degradation, 0.0);
    }
  }
  ASSERT_EQ(study.summary.size(), 4u);
  EXPECT_EQ(study.summary[0].proportion, 0.0);
  EXPECT_EQ(study.summary[0].mean_degradation, 0.0);
  const auto again = run_noise_study({0.5}, {"aamsoftmax", "sphereface2"}, {1, 2}, tiny_config(), 1);
  EXPECT_EQ(noise_study_table(study).text, noise_study_table(again).text);
}

TEST(NoiseStudy, RelativeDegradation) {
  EXPECT_EQ(relative_degradation(0.2, 0.2), 0.0);
  EXPECT_DOUBLE_EQ(relative_degradation(0.3, 0.2), 0.5);
  EXPECT_TRUE(std::isinf(relative_degradation(0.1, 0.0)));
}

TEST(NoiseStudy, InvalidArguments) {
  EXPECT_THROW(run_noise_study({1.5}, {"aamsoftmax"}, {1}, tiny_config()), Error);
  EXPECT_THROW(run_noise_study({0.3}, {}, {1}, tiny_config()), Error);
}

TEST(ShippedConfigs, DefaultsAndGridMatchTheLibrary) {
  const std::string dir = SF2_CONFIG_DIR;
  EXPECT_EQ(render_config(read_config(dir + "/default.cfg")), render_config(TrainConfig{}));
  const auto grid = parse_ablation_grid(detail::read_file(dir + "/ablation.cfg"));
  const auto expected = default_ablation_grid();
  ASSERT_EQ(grid.size(), expected.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(grid[i].lambda, expected[i].lambda);
    EXPECT_EQ(grid[i].t, expected[i].t);
    EXPECT_EQ(grid[i].s, expected[i].s);
    EXPECT_EQ(grid[i].m, expected[i].m);
  }
}

}  // namespace
}  // namespace sf2
