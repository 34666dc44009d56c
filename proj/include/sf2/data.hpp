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

#ifndef SF2_DATA_HPP
#define SF2_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sf2/core.hpp"
#include "sf2/error.hpp"
#include "sf2/rng.hpp"

namespace sf2 {

struct UniverseConfig {
  std::size_t k_train = 200;
  std::size_t k_unseen = 50;
  std::size_t d_feat = 32;
  std::size_t utts_per_speaker = 30;
  double kappa = 30.0;
  // Multiplies the within-speaker noise; below 1 gives cleaner utterances of
  // the same speakers (the fine-tuning stage's stand-in for longer segments).
  double noise_scale = 1.0;

  void validate() const {
    if (k_train < 2) fail(ErrorKind::InvalidConfig, "universe: k_train must be >= 2");
    if (d_feat < 4) fail(ErrorKind::InvalidConfig, "universe: d_feat must be >= 4");
    if (!(kappa > 0.0)) fail(ErrorKind::InvalidConfig, "universe: kappa must be > 0");
    if (utts_per_speaker < 1)
      fail(ErrorKind::InvalidConfig, "universe: utts_per_speaker must be >= 1");
    if (!(noise_scale >= 0.0)) fail(ErrorKind::InvalidConfig, "universe: noise_scale must be >= 0");
  }
};

struct Utterance {
  std::string utt_id;
  std::string speaker_id;
  std::vector<double> features;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// Training and unseen speakers share nothing but the generator.
struct SpeakerUniverse {
  std::vector<std::string> train_speakers;
  std::vector<std::string> unseen_speakers;
  Matrix<double> prototypes;  // train speakers first, then unseen
  std::vector<Utterance> train;
  std::vector<Utterance> unseen;

  friend bool operator==(const SpeakerUniverse&, const SpeakerUniverse&) = default;
};

inline std::string speaker_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
  return buf;
}

/// Prototypes are uniform on the unit sphere; each utterance is
/// normalize(prototype + noise), noise ~ N(0, 1/kappa) per coordinate.
inline SpeakerUniverse gen_universe(const UniverseConfig& cfg, const Rng& rng) {
  cfg.validate();
  const std::size_t total = cfg.k_train + cfg.k_unseen;
  const double sigma = cfg.noise_scale / std::sqrt(cfg.kappa);
  SpeakerUniverse u;
  u.prototypes = Matrix<double>(total, cfg.d_feat);
  const Rng proto_rng = rng.split("prototypes");
  const Rng utt_rng = rng.split("utterances");
  for (std::size_t s = 0; s < total; ++s) {
    const bool train = s < cfg.k_train;
    const std::string spk =
        train ? speaker_name("tr", s) : speaker_name("un", s - cfg.k_train);
    (train ? u.train_speakers : u.unseen_speakers).push_back(spk);

    Rng pr = proto_rng.split(s);
    auto proto = u.prototypes.row(s);
    do {
      for (auto& v : proto) v = pr.normal();
    } while (norm2(std::span<const double>(proto)) <= kZeroNorm);
    normalize_in_place(proto);

    Rng ur = utt_rng.split(s);
    for (std::size_t k = 0; k < cfg.utts_per_speaker; ++k) {
      Utterance utt;
      utt.utt_id = spk + "-" + speaker_name("u", k);
      utt.speaker_id = spk;
      utt.features.resize(cfg.d_feat);
      for (std::size_t i = 0; i < cfg.d_feat; ++i)
        utt.features[i] = proto[i] + sigma * ur.normal();
      normalize_in_place(std::span<double>(utt.features));
      (train ? u.train : u.unseen).push_back(std::move(utt));
    }
  }
  return u;
}

inline SpeakerUniverse gen_universe(const UniverseConfig& cfg, std::uint64_t seed) {
  return gen_universe(cfg, Rng(seed).split("universe"));
}

/// Dense labels for a set of utterances, speakers numbered by first appearance.
struct LabelMap {
  std::vector<std::string> speakers;
  std::vector<std::size_t> labels;
};

inline LabelMap label_utterances(std::span<const Utterance> utts) {
  LabelMap lm;
  std::unordered_map<std::string, std::size_t> index;
  lm.labels.reserve(utts.size());
  for (const auto& u : utts) {
    auto [it, inserted] = index.try_emplace(u.speaker_id, lm.speakers.size());
    if (inserted) lm.speakers.push_back(u.speaker_id);
    lm.labels.push_back(it->second);
  }
  return lm;
}

struct NoisyLabels {
  std::vector<std::size_t> labels;
  std::vector<bool> corrupted;
};

/// Reassigns exactly round(p * n) labels, chosen without replacement, each to
/// a uniformly drawn different class.
inline NoisyLabels inject_label_noise(std::span<const std::size_t> labels, double proportion,
                                      std::size_t classes, Rng rng) {
  if (!(proportion >= 0.0 && proportion <= 1.0))
    fail(ErrorKind::InvalidConfig, "label noise proportion must lie in [0, 1]");
  NoisyLabels out{std::vector<std::size_t>(labels.begin(), labels.end()),
                  std::vector<bool>(labels.size(), false)};
  const auto count = static_cast<std::size_t>(std::llround(proportion * double(labels.size())));
  if (count == 0) return out;
  if (classes < 2) fail(ErrorKind::InvalidConfig, "label noise needs at least two classes");
  for (auto l : labels)
    if (l >= classes) fail(ErrorKind::InvalidConfig, "label out of range for label noise");
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // partial Fisher-Yates: the first `count` slots are the selection
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = order[i];
    const auto shift = 1 + static_cast<std::size_t>(rng.below(classes - 1));
    out.labels[idx] = (labels[idx] + shift) % classes;
    out.corrupted[idx] = true;
  }
  return out;
}

struct Trial {
  std::string enroll;
  std::string test;
  bool is_target = false;

  friend bool operator==(const Trial&, const Trial&) = default;
};

using TrialSet = std::vector<Trial>;

namespace detail {

// Draws n unordered index pairs accepted by `valid`, distinct while the pool
// of `available` valid pairs lasts and with replacement afterwards.
template <typename Valid, typename Enumerate>
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n,
                                                              std::size_t available,
                                                              std::size_t items, Valid valid,
                                                              Enumerate enumerate, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(n);
  const std::size_t distinct = std::min(n, available);
  if (distinct * 2 > available) {
    auto all = enumerate();
    for (std::size_t i = 0; i < distinct; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(all.size() - i));
      std::swap(all[i], all[j]);
      out.push_back(all[i]);
    }
  } else {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    while (out.size() < distinct) {
      auto a = static_cast<std::size_t>(rng.below(items));
      auto b = static_cast<std::size_t>(rng.below(items));
      if (a == b || !valid(a, b)) continue;
      if (a > b) std::swap(a, b);
      if (seen.insert({a, b}).second) out.emplace_back(a, b);
    }
  }
  while (out.size() < n) {
    auto a = static_cast<std::size_t>(rng.below(items));
    auto b = static_cast<std::size_t>(rng.below(items));
    if (a == b || !valid(a, b)) continue;
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  return out;
}

}  // namespace detail

/// Target trials pair distinct utterances of one speaker, non-target trials
/// pair utterances of two different speakers.
inline TrialSet make_trials(std::span<const Utterance> utts, std::size_t n_target,
                            std::size_t n_nontarget, Rng rng) {
  if (n_target < 1 || n_nontarget < 1)
    fail(ErrorKind::InvalidConfig, "make_trials: n_target and n_nontarget must be >= 1");
  const LabelMap lm = label_utterances(utts);
  std::vector<std::size_t> per_speaker(lm.speakers.size(), 0);
  for (auto l : lm.labels) ++per_speaker[l];
  std::size_t target_pairs = 0;
  for (auto c : per_speaker) target_pairs += c * (c - (c > 0 ? 1 : 0)) / 2;
  const std::size_t n = utts.size();
  const std::size_t all_pairs = n * (n - (n > 0 ? 1 : 0)) / 2;
  const std::size_t nontarget_pairs = all_pairs - target_pairs;
  if (target_pairs == 0) fail(ErrorKind::Infeasible, "make_trials: no speaker has two utterances");
  if (nontarget_pairs == 0) fail(ErrorKind::Infeasible, "make_trials: need two distinct speakers");

  const auto& lab = lm.labels;
  auto same = [&](std::size_t a, std::size_t b) { return lab[a] == lab[b]; };
  auto differ = [&](std::size_t a, std::size_t b) { return lab[a] != lab[b]; };
  auto enumerate = [&](bool want_same) {
    return [&, want_same] {
      std::vector<std::pair<std::size_t, std::size_t>> all;
      all.reserve(want_same ? target_pairs : nontarget_pairs);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
          if ((lab[a] == lab[b]) == want_same) all.emplace_back(a, b);
      return all;
    };
  };
  Rng target_rng = rng.split("target");
  Rng nontarget_rng = rng.split("nontarget");
  const auto tp =
      detail::sample_pairs(n_target, target_pairs, n, same, enumerate(true), target_rng);
  const auto np =
      detail::sample_pairs(n_nontarget, nontarget_pairs, n, differ, enumerate(false), nontarget_rng);

  TrialSet trials;
  trials.reserve(tp.size() + np.size());
  for (auto [a, b] : tp) trials.push_back({utts[a].utt_id, utts[b].utt_id, true});
  for (auto [a, b] : np) trials.push_back({utts[a].utt_id, utts[b].utt_id, false});
  Rng order_rng = rng.split("order");
  order_rng.shuffle(trials);
  return trials;
}

/// One epoch is a seeded permutation of all items cut into batches; the last
/// batch may be short unless drop_last is set.
class ClassificationSampler {
 public:
  ClassificationSampler(std::size_t items, std::size_t batch_size, Rng rng, bool drop_last = false)
      : items_(items), batch_size_(batch_size), rng_(rng), drop_last_(drop_last) {
    if (batch_size_ == 0) fail(ErrorKind::InvalidConfig, "batch size must be >= 1");
    if (items_ == 0) fail(ErrorKind::Infeasible, "sampler has no items");
  }

  std::vector<std::vector<std::size_t>> epoch(std::size_t e) const {
    std::vector<std::size_t> order(items_);
    for (std::size_t i = 0; i < items_; ++i) order[i] = i;
    Rng r = rng_.split(e);
    r.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < items_; start += batch_size_) {
      const std::size_t end = std::min(items_, start + batch_size_);
      if (drop_last_ && end - start < batch_size_) break;
      batches.emplace_back(order.begin() + std::ptrdiff_t(start), order.begin() + std::ptrdiff_t(end));
    }
    return batches;
  }

 private:
  std::size_t items_;
  std::size_t batch_size_;
  Rng rng_;
  bool drop_last_;
};

/// Batches of N distinct speakers x M distinct utterances, speaker-major.
/// Each epoch shuffles every speaker's utterances, cuts them into groups of M,
/// and packs round r of groups from N different speakers into one batch.
class ProtoSampler {
 public:
  ProtoSampler(std::span<const std::size_t> labels, std::size_t speakers_per_batch,
               std::size_t utts_per_speaker, Rng rng)
      : n_(speakers_per_batch), m_(utts_per_speaker), rng_(rng) {
    if (n_ < 2 || m_ < 2)
      fail(ErrorKind::InvalidConfig, "prototypical sampler needs N >= 2 and M >= 2");
    std::map<std::size_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
    for (auto& [label, items] : by_label)
      if (items.size() >= m_) groups_.push_back(std::move(items));
    if (groups_.size() < n_)
      fail(ErrorKind::Infeasible, "prototypical sampler: only " + std::to_string(groups_.size()) +
                                      " speakers have >= " + std::to_string(m_) + " utterances");
  }

  std::vector<std::vector<std::size_t>> epoch(std::size_t e) const {
    Rng r = rng_.split(e);
    std::vector<std::vector<std::size_t>> shuffled = groups_;
    std::size_t rounds = 0;
    for (auto& g : shuffled) {
      r.shuffle(g);
      rounds = std::max(rounds, g.size() / m_);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t round = 0; round < rounds; ++round) {
      std::vector<std::size_t> live;
      for (std::size_t s = 0; s < shuffled.size(); ++s)
        if (shuffled[s].size() / m_ > round) live.push_back(s);
      r.shuffle(live);
      for (std::size_t start = 0; start + n_ <= live.size(); start += n_) {
        std::vector<std::size_t> batch;
        batch.reserve(n_ * m_);
        for (std::size_t k = 0; k < n_; ++k) {
          const auto& g = shuffled[live[start + k]];
          batch.insert(batch.end(), g.begin() + std::ptrdiff_t(round * m_),
                       g.begin() + std::ptrdiff_t((round + 1) * m_));
        }
        batches.push_back(std::move(batch));
      }
    }
    return batches;
  }

 private:
  std::size_t n_;
  std::size_t m_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> groups_;
};

/// Feature rows for a batch of utterance indices.
inline Matrix<double> gather_features(std::span<const Utterance> utts,
                                      std::span<const std::size_t> idx) {
  if (idx.empty()) return {};
  const std::size_t d = utts[idx[0]].features.size();
  Matrix<double> x(idx.size(), d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& f = utts[idx[r]].features;
    if (f.size() != d) fail(ErrorKind::InvalidConfig, "utterances differ in feature width");
    std::copy(f.begin(), f.end(), x.row(r).begin());
  }
  return x;
}

}  // namespace sf2

#endif  // SF2_DATA_HPP
