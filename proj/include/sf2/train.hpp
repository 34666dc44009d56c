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

#ifndef SF2_TRAIN_HPP
#define SF2_TRAIN_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sf2/checkpoint.hpp"
#include "sf2/config.hpp"
#include "sf2/data.hpp"
#include "sf2/error.hpp"
#include "sf2/eval.hpp"
#include "sf2/io.hpp"
#include "sf2/model.hpp"
#include "sf2/rng.hpp"

namespace sf2 {

/// Exponential interpolation from lr_start (epoch 0) to lr_end (epoch E-1).
inline double lr_at(std::size_t epoch, std::size_t total, double lr_start, double lr_end) {
  if (total < 1 || epoch >= total)
    fail(ErrorKind::InvalidConfig, "lr_at: need 0 <= epoch < total epochs");
  if (lr_start == lr_end && lr_start >= 0.0) return lr_start;
  if (!(lr_end > 0.0 && lr_start >= lr_end))
    fail(ErrorKind::InvalidConfig, "lr_at: need lr_start >= lr_end > 0");
  if (total == 1) return lr_start;
  return lr_start * std::pow(lr_end / lr_start, double(epoch) / double(total - 1));
}

// Any parameter beyond this magnitude counts as a diverged run.
inline constexpr double kExplodedParam = 1e6;

struct RunRecord {
  std::string stage = "train";
  std::string system;
  std::uint64_t seed = 0;
  std::string config_text;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_lr;
  std::size_t corrupted_labels = 0;
  std::vector<TrialMetrics> metrics;
  Checkpoint checkpoint;  // carried alongside, serialized separately

  double eer(std::string_view trial_set = "unseen", bool normalized = false) const {
    for (const auto& m : metrics)
      if (m.trial_set == trial_set && m.normalized == normalized) return m.eer;
    fail(ErrorKind::MissingId, "run record has no metrics for " + std::string(trial_set));
  }
};

inline std::string render_run_record(const RunRecord& r) {
  std::ostringstream os;
  os << "# sf2lab run record v1\n"
     << "stage " << r.stage << "\n"
     << "system " << r.system << "\n"
     << "seed " << r.seed << "\n"
     << "corrupted_labels " << r.corrupted_labels << "\n"
     << "config_hash " << fnv1a(r.config_text) << "\n"
     << "config_begin\n"
     << r.config_text << "config_end\n";
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e)
    os << "epoch " << e << " lr " << format_real(r.epoch_lr[e]) << " loss "
       << format_real(r.epoch_loss[e]) << "\n";
  for (const auto& m : r.metrics) {
    os << "metric " << m.trial_set << " normalized " << (m.normalized ? 1 : 0) << " eer "
       << format_real(m.eer);
    for (const auto& d : m.dcf) os << " dcf " << format_real(d.p_target) << " " << format_real(d.min_dcf);
    os << "\n";
  }
  return os.str();
}

/// Inverse of render_run_record (the checkpoint is not part of the text).
inline RunRecord parse_run_record(std::string_view text) {
  RunRecord r;
  bool in_config = false;
  bool saw_header = false;
  detail::for_each_record(text, [&](const detail::Line& line) {
    if (in_config) {
      if (line.text == "config_end") {
        in_config = false;
      } else {
        r.config_text.append(line.text);
        r.config_text.push_back('\n');
      }
      return;
    }
    const auto f = detail::split_ws(line.text);
    auto need = [&](std::size_t n) {
      if (f.size() != n) detail::parse_error(line, "malformed '" + std::string(f[0]) + "' line");
    };
    auto u64 = [&](std::string_view v) {
      std::uint64_t out = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size()) detail::parse_error(line, "bad integer");
      return out;
    };
    saw_header = true;
    if (f[0] == "stage") {
      need(2);
      r.stage = f[1];
    } else if (f[0] == "system") {
      need(2);
      r.system = f[1];
    } else if (f[0] == "seed") {
      need(2);
      r.seed = u64(f[1]);
    } else if (f[0] == "corrupted_labels") {
      need(2);
      r.corrupted_labels = u64(f[1]);
    } else if (f[0] == "config_hash") {
      need(2);
    } else if (f[0] == "config_begin") {
      in_config = true;
    } else if (f[0] == "epoch") {
      need(6);
      r.epoch_lr.push_back(detail::parse_real(line, f[3]));
      r.epoch_loss.push_back(detail::parse_real(line, f[5]));
    } else if (f[0] == "metric") {
      if (f.size() < 6 || (f.size() - 6) % 3 != 0 || f[2] != "normalized" || f[4] != "eer")
        detail::parse_error(line, "malformed metric line");
      TrialMetrics m{std::string(f[1]), f[3] == "1", detail::parse_real(line, f[5]), {}};
      for (std::size_t k = 6; k < f.size(); k += 3) {
        if (f[k] != "dcf") detail::parse_error(line, "malformed metric line");
        m.dcf.push_back({detail::parse_real(line, f[k + 1]), detail::parse_real(line, f[k + 2])});
      }
      r.metrics.push_back(std::move(m));
    } else {
      detail::parse_error(line, "unknown record '" + std::string(f[0]) + "'");
    }
  });
  if (!saw_header) fail(ErrorKind::ParseError, "empty run record");
  if (in_config) fail(ErrorKind::ParseError, "run record: config block not terminated");
  return r;
}

inline Matrix<double> embed_utterances(const Model<double>& model, std::span<const Utterance> utts) {
  std::vector<std::size_t> idx(utts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return model.embed(gather_features(utts, idx));
}

/// Scores the held-out speakers' trials (and, when enabled, their A-snorm
/// counterparts against a cohort of per-speaker training-centroid embeddings).
inline std::vector<TrialMetrics> evaluate(const Model<double>& model, const TrainConfig& cfg,
                                          const SpeakerUniverse& universe) {
  const Matrix<double> emb = embed_utterances(model, universe.unseen);
  EmbeddingMap map;
  for (std::size_t i = 0; i < universe.unseen.size(); ++i) {
    const auto row = emb.row(i);
    map.emplace(universe.unseen[i].utt_id, std::vector<double>(row.begin(), row.end()));
  }
  const TrialSet trials = make_trials(universe.unseen, cfg.eval.n_target, cfg.eval.n_nontarget,
                                      Rng(cfg.seed).split("trials"));
  const ScoredTrials raw = score_trials(map, trials);
  std::vector<TrialMetrics> out{compute_metrics("unseen", raw, cfg.eval.p_targets, false)};
  if (cfg.eval.asnorm) {
    const Matrix<double> train_emb = embed_utterances(model, universe.train);
    const LabelMap lm = label_utterances(universe.train);
    Matrix<double> cohort(lm.speakers.size(), train_emb.cols());
    for (std::size_t i = 0; i < lm.labels.size(); ++i) {
      auto row = cohort.row(lm.labels[i]);
      const auto e = train_emb.row(i);
      for (std::size_t a = 0; a < row.size(); ++a) row[a] += e[a];
    }
    for (std::size_t r = 0; r < cohort.rows(); ++r) normalize_in_place(cohort.row(r));
    const std::size_t top_n =
        cfg.eval.asnorm_top_n ? cfg.eval.asnorm_top_n
                              : std::max<std::size_t>(2, (cohort.rows() + 5) / 10);
    out.push_back(compute_metrics("unseen", asnorm(raw, trials, map, cohort, top_n),
                                  cfg.eval.p_targets, true));
  }
  return out;
}

namespace detail {

// One pass over `batches`; returns the sample-weighted mean loss.
inline double run_batches(Model<double>& model, Grads<double>& velocity, const LossSpec& spec,
                          std::span<const Utterance> utts, std::span<const std::size_t> labels,
                          const std::vector<std::vector<std::size_t>>& batches,
                          std::size_t proto_utts, double lr, double momentum,
                          double weight_decay, std::size_t epoch) {
  double total = 0.0;
  std::size_t count = 0;
  std::vector<std::size_t> batch_labels;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto& idx = batches[b];
    const Matrix<double> x = gather_features(utts, idx);
    batch_labels.clear();
    for (auto i : idx) batch_labels.push_back(labels[i]);
    Grads<double> grads = model.zero_grads();
    try {
      const double value = model.forward_backward(spec, x, batch_labels, proto_utts, &grads);
      total += value * double(idx.size());
      count += idx.size();
      apply_gradients(model.params(), grads, velocity, lr, momentum, weight_decay);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFinite) throw;
      fail(ErrorKind::Diverged, "epoch " + std::to_string(epoch) + " step " + std::to_string(b) +
                                    ": " + e.what());
    }
    for (const auto& p : model.params())
      for (double v : p.value.flat())
        if (std::abs(v) > kExplodedParam)
          fail(ErrorKind::Diverged, "epoch " + std::to_string(epoch) + " step " +
                                        std::to_string(b) + ": parameter " + p.name +
                                        " exploded");
  }
  if (count == 0) fail(ErrorKind::Infeasible, "sampler produced no batches");
  return total / double(count);
}

inline std::vector<std::vector<std::size_t>> epoch_batches(const TrainConfig& cfg,
                                                           std::span<const std::size_t> labels,
                                                           const Rng& stream, std::size_t epoch) {
  if (cfg.loss.is_proto())
    return ProtoSampler(labels, cfg.proto_speakers, cfg.proto_utts, stream).epoch(epoch);
  return ClassificationSampler(labels.size(), cfg.batch_size, stream).epoch(epoch);
}

}  // namespace detail

/// Training run state. Everything except the model and momentum buffers is
/// regenerated from (config, seed), so a checkpoint is enough to resume.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
    setup();
    model_ = Model<double>::init(cfg_.layer_sizes(), cfg_.universe.k_train, cfg_.loss,
                                 Rng(cfg_.seed).split("init"));
  }

  static Trainer resume(const Checkpoint& ck) {
    Trainer t(parse_config(ck.config_text), ck);
    return t;
  }

  const TrainConfig& config() const { return cfg_; }
  const Model<double>& model() const { return model_; }
  const SpeakerUniverse& universe() const { return universe_; }
  std::size_t epoch() const { return epoch_; }
  bool done() const { return epoch_ >= cfg_.epochs; }
  const std::vector<double>& epoch_loss() const { return loss_; }
  std::size_t corrupted_labels() const { return corrupted_; }

  void run_epoch() {
    if (done()) return;
    const double lr = lr_at(epoch_, cfg_.epochs, cfg_.lr_start, cfg_.lr_end);
    const auto batches =
        detail::epoch_batches(cfg_, labels_, Rng(cfg_.seed).split("sampler"), epoch_);
    const double mean =
        detail::run_batches(model_, velocity_, cfg_.loss, universe_.train, labels_, batches,
                            cfg_.proto_utts, lr, cfg_.momentum, cfg_.weight_decay, epoch_);
    loss_.push_back(mean);
    lr_.push_back(lr);
    ++epoch_;
  }

  Checkpoint checkpoint() const {
    Checkpoint ck;
    ck.config_text = render_config(cfg_);
    ck.config_hash = fnv1a(ck.config_text);
    ck.epoch = epoch_;
    ck.rng = Rng(cfg_.seed);
    ck.model = model_;
    ck.velocity = velocity_;
    return ck;
  }

  /// Runs the remaining epochs and evaluates on the held-out speakers.
  RunRecord finish() {
    while (!done()) run_epoch();
    RunRecord r;
    r.stage = "train";
    r.system = cfg_.loss_name;
    r.seed = cfg_.seed;
    r.config_text = render_config(cfg_);
    r.epoch_loss = loss_;
    r.epoch_lr = lr_;
    r.corrupted_labels = corrupted_;
    r.metrics = evaluate(model_, cfg_, universe_);
    r.checkpoint = checkpoint();
    return r;
  }

 private:
  Trainer(TrainConfig cfg, const Checkpoint& ck) : cfg_(std::move(cfg)) {
    if (ck.config_hash != fnv1a(ck.config_text))
      fail(ErrorKind::InvalidConfig, "checkpoint config hash does not match its config");
    setup();
    model_ = ck.model;
    velocity_ = ck.velocity;
    epoch_ = ck.epoch;
  }

  void setup() {
    cfg_.validate();
    universe_ = gen_universe(cfg_.universe, cfg_.seed);
    const LabelMap lm = label_utterances(universe_.train);
    const auto noisy = inject_label_noise(lm.labels, cfg_.label_noise, lm.speakers.size(),
                                          Rng(cfg_.seed).split("label-noise"));
    labels_ = noisy.labels;
    corrupted_ = static_cast<std::size_t>(std::count(noisy.corrupted.begin(), noisy.corrupted.end(), true));
  }

  TrainConfig cfg_;
  SpeakerUniverse universe_;
  std::vector<std::size_t> labels_;
  std::size_t corrupted_ = 0;
  Model<double> model_;
  Grads<double> velocity_;
  std::size_t epoch_ = 0;
  std::vector<double> loss_;
  std::vector<double> lr_;
};

inline RunRecord train(const TrainConfig& cfg) { return Trainer(cfg).finish(); }

/// Large-margin fine-tuning: continue a margin-loss checkpoint with the
/// margin raised, a constant small learning rate and cleaner (lower-noise)
/// training utterances. Evaluation uses the original held-out utterances.
inline RunRecord lmft(const Checkpoint& ck, const LmftConfig& lc) {
  lc.validate();
  const TrainConfig base = parse_config(ck.config_text);
  const auto base_margin = base.loss.margin_value();
  if (!base_margin)
    fail(ErrorKind::InvalidConfig, "lmft: loss '" + base.loss_name + "' has no margin parameter");
  if (lc.margin < *base_margin)
    fail(ErrorKind::InvalidConfig, "lmft: margin override must not be below the base margin");

  TrainConfig ft = base;
  ft.loss.set_margin(lc.margin);
  ft.universe.noise_scale *= lc.noise_factor;
  ft.lmft = lc;

  const SpeakerUniverse clean = gen_universe(ft.universe, ft.seed);
  const LabelMap lm = label_utterances(clean.train);
  const auto labels = inject_label_noise(lm.labels, ft.label_noise, lm.speakers.size(),
                                         Rng(ft.seed).split("label-noise"))
                          .labels;
  Model<double> model = ck.model;
  Grads<double> velocity;
  const Rng stream = Rng(ft.seed).split("lmft-sampler");

  RunRecord r;
  r.stage = "lmft";
  r.system = base.loss_name + "+lmft";
  r.seed = ft.seed;
  r.config_text = render_config(ft);
  for (std::size_t e = 0; e < lc.epochs; ++e) {
    const auto batches = detail::epoch_batches(ft, labels, stream, e);
    r.epoch_loss.push_back(detail::run_batches(model, velocity, ft.loss, clean.train, labels,
                                               batches, ft.proto_utts, lc.lr, ft.momentum,
                                               ft.weight_decay, e));
    r.epoch_lr.push_back(lc.lr);
  }
  r.metrics = evaluate(model, base, gen_universe(base.universe, base.seed));
  r.checkpoint.config_text = r.config_text;
  r.checkpoint.config_hash = fnv1a(r.config_text);
  r.checkpoint.epoch = ck.epoch + lc.epochs;
  r.checkpoint.rng = Rng(ft.seed);
  r.checkpoint.model = std::move(model);
  r.checkpoint.velocity = std::move(velocity);
  return r;
}

/// Runs fn(0..n-1) on up to `jobs` threads. Results must be written by index.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct AblationCell {
  double lambda = 0.7;
  double t = 3.0;
  double s = 32.0;
  double m = 0.2;
};

/// The default (lambda, t, s, m) sweep: one block per swept parameter around
/// lambda = 0.7, t = 3, s = 32, m = 0.2.
inline std::vector<AblationCell> default_ablation_grid() {
  return {{0.7, 3, 32, 0.2}, {0.8, 3, 32, 0.2},                     // lambda
          {0.7, 2, 32, 0.2}, {0.7, 3, 32, 0.2}, {0.7, 4, 32, 0.2},  // t
          {0.7, 3, 24, 0.2}, {0.7, 3, 32, 0.2}, {0.7, 3, 40, 0.2},  // s
          {0.7, 3, 32, 0.1}, {0.7, 3, 32, 0.3}};                    // m
}

/// Grid file: one "lambda t s m" row per line, '#' comments allowed.
inline std::vector<AblationCell> parse_ablation_grid(std::string_view text) {
  std::vector<AblationCell> cells;
  detail::for_each_record(text, [&](const detail::Line& line) {
    const auto f = detail::split_ws(line.text);
    if (f.size() != 4) detail::parse_error(line, "expected 'lambda t s m'");
    cells.push_back({detail::parse_real(line, f[0]), detail::parse_real(line, f[1]),
                     detail::parse_real(line, f[2]), detail::parse_real(line, f[3])});
  });
  if (cells.empty()) fail(ErrorKind::InvalidConfig, "ablation grid is empty");
  return cells;
}

struct AblationRow {
  AblationCell cell;
  bool diverged = false;
  std::string error;
  std::vector<TrialMetrics> metrics;
};

/// One seeded run per cell, all on identical data. Cells that fail to train
/// are reported rather than aborting the sweep.
inline std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& grid,
                                             const TrainConfig& base, std::size_t jobs = 1) {
  if (grid.empty()) fail(ErrorKind::InvalidConfig, "ablation grid is empty");
  if (base.loss.kind != LossKind::SphereFace2)
    fail(ErrorKind::InvalidConfig, "ablation sweeps a SphereFace2 loss");
  std::vector<AblationRow> rows(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    rows[i].cell = grid[i];
    TrainConfig cfg = base;
    cfg.loss.sphereface2.lambda = grid[i].lambda;
    cfg.loss.sphereface2.t = grid[i].t;
    cfg.loss.sphereface2.s = grid[i].s;
    cfg.loss.sphereface2.m = grid[i].m;
    try {
      rows[i].metrics = train(cfg).metrics;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Diverged && e.kind() != ErrorKind::InvalidConfig) throw;
      rows[i].diverged = true;
      rows[i].error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  });
  return rows;
}

inline Report ablation_table(const std::vector<AblationRow>& rows) {
  const std::vector<TrialMetrics>* reference = nullptr;
  for (const auto& r : rows)
    if (!r.diverged) {
      reference = &r.metrics;
      break;
    }
  std::vector<std::string> header{"lambda", "t", "s", "m", "status"};
  if (reference) {
    const auto h = metric_headers(*reference);
    header.insert(header.end(), h.begin(), h.end());
  }
  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : rows) {
    std::vector<std::string> line{format_real(r.cell.lambda), format_real(r.cell.t),
                                  format_real(r.cell.s), format_real(r.cell.m),
                                  r.diverged ? "diverged" : "ok"};
    if (reference) {
      if (r.diverged) {
        line.resize(header.size(), "-");
      } else {
        const auto c = metric_cells(r.metrics, *reference);
        line.insert(line.end(), c.begin(), c.end());
      }
    }
    cells.push_back(std::move(line));
  }
  return render_table(cells);
}

struct NoiseCell {
  std::string loss;
  double proportion = 0.0;
  std::uint64_t seed = 0;
  bool diverged = false;
  double eer = 0.0;
  double degradation = 0.0;  // (eer - eer at 0% noise) / eer at 0% noise
};

struct NoiseSummary {
  std::string loss;
  double proportion = 0.0;
  double mean_eer = 0.0;
  double mean_degradation = 0.0;
  std::size_t runs = 0;
};

struct NoiseStudy {
  std::vector<NoiseCell> cells;
  std::vector<NoiseSummary> summary;
};

inline double relative_degradation(double eer, double clean_eer) {
  if (eer == clean_eer) return 0.0;
  if (clean_eer == 0.0) return std::numeric_limits<double>::infinity();
  return (eer - clean_eer) / clean_eer;
}

/// Trains every (loss, proportion, seed) on labels with that fraction
/// reassigned and scores clean held-out trials without score normalization.
/// Degradation is relative to the same loss and seed at 0% noise, which is
/// always run.
inline NoiseStudy run_noise_study(std::vector<double> proportions,
                                  const std::vector<std::string>& losses,
                                  const std::vector<std::uint64_t>& seeds, const TrainConfig& base,
                                  std::size_t jobs = 1) {
  if (losses.empty() || seeds.empty())
    fail(ErrorKind::InvalidConfig, "noise study needs at least one loss and one seed");
  for (double p : proportions)
    if (!(p >= 0.0 && p <= 1.0))
      fail(ErrorKind::InvalidConfig, "noise proportions must lie in [0, 1]");
  if (std::find(proportions.begin(), proportions.end(), 0.0) == proportions.end())
    proportions.insert(proportions.begin(), 0.0);

  std::vector<NoiseCell> cells;
  for (const auto& loss : losses)
    for (double p : proportions)
      for (auto seed : seeds) cells.push_back({loss, p, seed});
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.loss = loss_preset(cells[i].loss);
    cfg.loss_name = cells[i].loss;
    cfg.label_noise = cells[i].proportion;
    cfg.seed = cells[i].seed;
    cfg.eval.asnorm = false;
    try {
      cells[i].eer = train(cfg).eer();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Diverged) throw;
      cells[i].diverged = true;
      cells[i].eer = std::numeric_limits<double>::quiet_NaN();
    }
  });

  NoiseStudy study;
  for (auto& c : cells) {
    for (const auto& ref : cells)
      if (ref.loss == c.loss && ref.seed == c.seed && ref.proportion == 0.0)
        c.degradation = (c.diverged || ref.diverged) ? std::numeric_limits<double>::quiet_NaN()
                                                     : relative_degradation(c.eer, ref.eer);
  }
  for (const auto& loss : losses)
    for (double p : proportions) {
      NoiseSummary s{loss, p};
      for (const auto& c : cells)
        if (c.loss == loss && c.proportion == p) {
          s.mean_eer += c.eer;
          s.mean_degradation += c.degradation;
          ++s.runs;
        }
      s.mean_eer /= double(s.runs);
      s.mean_degradation /= double(s.runs);
      study.summary.push_back(s);
    }
  study.cells = std::move(cells);
  return study;
}

inline Report noise_study_table(const NoiseStudy& study) {
  std::vector<std::vector<std::string>> cells{
      {"loss", "noise(%)", "runs", "mean EER(%)", "mean rel. degradation(%)"}};
  char buf[64];
  for (const auto& s : study.summary) {
    std::vector<std::string> line{s.loss};
    std::snprintf(buf, sizeof buf, "%g", 100.0 * s.proportion);
    line.emplace_back(buf);
    line.push_back(std::to_string(s.runs));
    std::snprintf(buf, sizeof buf, "%.3f", 100.0 * s.mean_eer);
    line.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * s.mean_degradation);
    line.emplace_back(buf);
    cells.push_back(std::move(line));
  }
  return render_table(cells);
}

}  // namespace sf2

#endif  // SF2_TRAIN_HPP
