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

#ifndef SF2_CONFIG_HPP
#define SF2_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "sf2/data.hpp"
#include "sf2/error.hpp"
#include "sf2/io.hpp"
#include "sf2/model.hpp"
#include "sf2/rng.hpp"

namespace sf2 {

struct EvalConfig {
  std::size_t n_target = 3000;
  std::size_t n_nontarget = 3000;
  std::vector<double> p_targets{0.01, 0.05};
  bool asnorm = false;
  std::size_t asnorm_top_n = 0;  // 0: 10% of the cohort
};

struct LmftConfig {
  double margin = 0.35;
  double lr = 1e-4;
  std::size_t epochs = 5;
  double noise_factor = 0.5;  // within-speaker noise multiplier while fine-tuning

  void validate() const {
    if (!(lr >= 0.0)) fail(ErrorKind::InvalidConfig, "lmft: lr must be >= 0");
    if (epochs < 1) fail(ErrorKind::InvalidConfig, "lmft: epochs must be >= 1");
    if (!(noise_factor > 0.0 && noise_factor <= 1.0))
      fail(ErrorKind::InvalidConfig, "lmft: noise_factor must lie in (0, 1]");
    if (!(margin >= 0.0 && margin < 1.0))
      fail(ErrorKind::InvalidConfig, "lmft: margin must lie in [0, 1)");
  }
};

struct TrainConfig {
  UniverseConfig universe;
  std::vector<std::size_t> hidden{32};
  std::size_t embed_dim = 16;

  std::string loss_name = "sphereface2";
  LossSpec loss = loss_preset("sphereface2");

  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  std::size_t proto_speakers = 32;
  std::size_t proto_utts = 2;
  double lr_start = 0.03;
  double lr_end = 1e-4;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double label_noise = 0.0;
  std::uint64_t seed = 0;

  EvalConfig eval;
  LmftConfig lmft;

  std::vector<std::size_t> layer_sizes() const {
    std::vector<std::size_t> sizes{universe.d_feat};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(embed_dim);
    return sizes;
  }

  void validate() const {
    universe.validate();
    loss.validate();
    lmft.validate();
    if (embed_dim < 1) fail(ErrorKind::InvalidConfig, "model: embed_dim must be >= 1");
    if (epochs < 1) fail(ErrorKind::InvalidConfig, "train: epochs must be >= 1");
    if (batch_size < 1) fail(ErrorKind::InvalidConfig, "train: batch_size must be >= 1");
    if (!(lr_end > 0.0 && lr_start >= lr_end) && !(lr_start == 0.0 && lr_end == 0.0))
      fail(ErrorKind::InvalidConfig, "train: need lr_start >= lr_end > 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
      fail(ErrorKind::InvalidConfig, "train: momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) fail(ErrorKind::InvalidConfig, "train: weight_decay must be >= 0");
    if (!(label_noise >= 0.0 && label_noise <= 1.0))
      fail(ErrorKind::InvalidConfig, "train: label_noise must lie in [0, 1]");
    if (eval.n_target < 1 || eval.n_nontarget < 1)
      fail(ErrorKind::InvalidConfig, "eval: trial counts must be >= 1");
    for (double p : eval.p_targets)
      if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::InvalidConfig, "eval: p_target must lie in (0, 1)");
  }
};


namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    fail(ErrorKind::InvalidConfig, "bad value '" + std::string(v) + "' for " + std::string(key));
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::InvalidConfig, "bad boolean '" + std::string(v) + "' for " + std::string(key));
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view v) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(parse_number<T>(key, trim(v.substr(start, comma == v.npos ? v.npos : comma - start))));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    if constexpr (std::is_floating_point_v<T>)
      os << format_real(v[i]);
    else
      os << v[i];
  }
  return os.str();
}

}  // namespace detail

/// Flat "section.key" -> raw value view of a sectioned key = value file.
inline std::map<std::string, std::string> parse_ini(std::string_view text) {
  std::map<std::string, std::string> out;
  std::string section;
  detail::for_each_record(text, [&](const detail::Line& line) {
    const auto s = detail::trim(line.text);
    if (s.front() == '[') {
      if (s.back() != ']') detail::parse_error(line, "unterminated section header");
      section = std::string(detail::trim(s.substr(1, s.size() - 2)));
      if (section.empty()) detail::parse_error(line, "empty section name");
      return;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) detail::parse_error(line, "expected key = value");
    if (section.empty()) detail::parse_error(line, "key outside of any [section]");
    const std::string key = section + "." + std::string(detail::trim(s.substr(0, eq)));
    if (!out.emplace(key, std::string(detail::trim(s.substr(eq + 1)))).second)
      detail::parse_error(line, "duplicate key " + key);
  });
  return out;
}

/// Every recognised key with its default and meaning; used for --help output.
struct ConfigKey {
  const char* key;
  const char* help;
};

inline constexpr ConfigKey kConfigKeys[] = {
    {"universe.k_train", "training speakers (200)"},
    {"universe.k_unseen", "held-out evaluation speakers (50)"},
    {"universe.d_feat", "feature dimension (32)"},
    {"universe.utts_per_speaker", "utterances per speaker (30)"},
    {"universe.kappa", "within-speaker concentration, noise variance 1/kappa (30)"},
    {"universe.noise_scale", "extra multiplier on within-speaker noise (1)"},
    {"model.hidden", "comma-separated hidden layer widths (32)"},
    {"model.embed_dim", "embedding dimension (16)"},
    {"loss.name", "loss preset: softmax asoftmax amsoftmax aamsoftmax sphereface2 "
                  "sphereface2-a sphereface2-m prototypical angproto (sphereface2)"},
    {"loss.lambda", "SphereFace2 positive/negative balance (0.7)"},
    {"loss.t", "SphereFace2 similarity-adjustment exponent (3)"},
    {"loss.s", "scale for SphereFace2 and margin softmax (32)"},
    {"loss.m", "SphereFace2 margin (0.2)"},
    {"loss.bias_init", "SphereFace2 initial bias (0)"},
    {"loss.margin_type", "SphereFace2 margin placement C, A or M (C)"},
    {"loss.m1", "margin softmax angular multiplier (preset)"},
    {"loss.m2", "margin softmax additive angle (preset)"},
    {"loss.m3", "margin softmax additive cosine (preset)"},
    {"loss.proto_w_init", "angular prototypical initial scale (10)"},
    {"loss.proto_b_init", "angular prototypical initial bias (-5)"},
    {"train.epochs", "training epochs (20)"},
    {"train.batch_size", "classification batch size (64)"},
    {"train.proto_speakers", "prototypical batch speakers N (32)"},
    {"train.proto_utts", "prototypical utterances per speaker M (2)"},
    {"train.lr_start", "initial learning rate (0.03)"},
    {"train.lr_end", "final learning rate, exponential decay (1e-4)"},
    {"train.momentum", "SGD momentum (0.9)"},
    {"train.weight_decay", "SGD weight decay (1e-4)"},
    {"train.label_noise", "fraction of training labels reassigned (0)"},
    {"train.seed", "root random seed (0; --seed overrides)"},
    {"eval.n_target", "target trials (3000)"},
    {"eval.n_nontarget", "non-target trials (3000)"},
    {"eval.p_targets", "comma-separated DCF priors (0.01,0.05)"},
    {"eval.asnorm", "also report adaptive-normalized scores (false)"},
    {"eval.asnorm_top_n", "cohort top-N, 0 for 10% of the cohort (0)"},
    {"lmft.margin", "fine-tuning margin (0.35)"},
    {"lmft.lr", "fine-tuning learning rate (1e-4)"},
    {"lmft.epochs", "fine-tuning epochs (5)"},
    {"lmft.noise_factor", "within-speaker noise multiplier while fine-tuning (0.5)"},
};

inline void apply_config(TrainConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    bool known = false;
    for (const auto& k : kConfigKeys) known = known || key == k.key;
    if (!known) fail(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
  }
  // the preset goes first so explicit loss keys override it
  if (auto it = kv.find("loss.name"); it != kv.end()) {
    cfg.loss = loss_preset(it->second);
    cfg.loss_name = it->second;
  }
  using detail::parse_number;
  for (const auto& [key, v] : kv) {
    auto sz = [&] { return parse_number<std::size_t>(key, v); };
    auto real = [&] { return parse_number<double>(key, v); };
    if (key == "universe.k_train") cfg.universe.k_train = sz();
    else if (key == "universe.k_unseen") cfg.universe.k_unseen = sz();
    else if (key == "universe.d_feat") cfg.universe.d_feat = sz();
    else if (key == "universe.utts_per_speaker") cfg.universe.utts_per_speaker = sz();
    else if (key == "universe.kappa") cfg.universe.kappa = real();
    else if (key == "universe.noise_scale") cfg.universe.noise_scale = real();
    else if (key == "model.hidden") cfg.hidden = detail::parse_list<std::size_t>(key, v);
    else if (key == "model.embed_dim") cfg.embed_dim = sz();
    else if (key == "loss.lambda") cfg.loss.sphereface2.lambda = real();
    else if (key == "loss.t") cfg.loss.sphereface2.t = real();
    else if (key == "loss.s") cfg.loss.sphereface2.s = cfg.loss.margin.s = real();
    else if (key == "loss.m") cfg.loss.sphereface2.m = real();
    else if (key == "loss.bias_init") cfg.loss.sphereface2.bias_init = real();
    else if (key == "loss.margin_type") cfg.loss.sphereface2.margin_type = parse_margin_type(v);
    else if (key == "loss.m1") cfg.loss.margin.m1 = real();
    else if (key == "loss.m2") cfg.loss.margin.m2 = real();
    else if (key == "loss.m3") cfg.loss.margin.m3 = real();
    else if (key == "loss.proto_w_init") cfg.loss.proto_w_init = real();
    else if (key == "loss.proto_b_init") cfg.loss.proto_b_init = real();
    else if (key == "train.epochs") cfg.epochs = sz();
    else if (key == "train.batch_size") cfg.batch_size = sz();
    else if (key == "train.proto_speakers") cfg.proto_speakers = sz();
    else if (key == "train.proto_utts") cfg.proto_utts = sz();
    else if (key == "train.lr_start") cfg.lr_start = real();
    else if (key == "train.lr_end") cfg.lr_end = real();
    else if (key == "train.momentum") cfg.momentum = real();
    else if (key == "train.weight_decay") cfg.weight_decay = real();
    else if (key == "train.label_noise") cfg.label_noise = real();
    else if (key == "train.seed") cfg.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "eval.n_target") cfg.eval.n_target = sz();
    else if (key == "eval.n_nontarget") cfg.eval.n_nontarget = sz();
    else if (key == "eval.p_targets") cfg.eval.p_targets = detail::parse_list<double>(key, v);
    else if (key == "eval.asnorm") cfg.eval.asnorm = detail::parse_bool(key, v);
    else if (key == "eval.asnorm_top_n") cfg.eval.asnorm_top_n = sz();
    else if (key == "lmft.margin") cfg.lmft.margin = real();
    else if (key == "lmft.lr") cfg.lmft.lr = real();
    else if (key == "lmft.epochs") cfg.lmft.epochs = sz();
    else if (key == "lmft.noise_factor") cfg.lmft.noise_factor = real();
  }
  cfg.validate();
}

inline TrainConfig parse_config(std::string_view text) {
  TrainConfig cfg;
  apply_config(cfg, parse_ini(text));
  return cfg;
}

inline TrainConfig read_config(const std::string& path) {
  return parse_config(detail::read_file(path));
}

/// Canonical text for a configuration: every key, fixed order, exact reals.
/// parse_config(render_config(c)) reproduces c.
inline std::string render_config(const TrainConfig& c) {
  std::ostringstream os;
  using detail::join;
  const auto r = format_real;
  os << "[universe]\n"
     << "k_train = " << c.universe.k_train << "\n"
     << "k_unseen = " << c.universe.k_unseen << "\n"
     << "d_feat = " << c.universe.d_feat << "\n"
     << "utts_per_speaker = " << c.universe.utts_per_speaker << "\n"
     << "kappa = " << r(c.universe.kappa) << "\n"
     << "noise_scale = " << r(c.universe.noise_scale) << "\n"
     << "[model]\n"
     << "hidden = " << join(c.hidden) << "\n"
     << "embed_dim = " << c.embed_dim << "\n"
     << "[loss]\n"
     << "name = " << c.loss_name << "\n"
     << "lambda = " << r(c.loss.sphereface2.lambda) << "\n"
     << "t = " << r(c.loss.sphereface2.t) << "\n"
     << "s = " << r(c.loss.kind == LossKind::MarginSoftmax ? c.loss.margin.s : c.loss.sphereface2.s)
     << "\n"
     << "m = " << r(c.loss.sphereface2.m) << "\n"
     << "bias_init = " << r(c.loss.sphereface2.bias_init) << "\n"
     << "margin_type = " << to_string(c.loss.sphereface2.margin_type) << "\n"
     << "m1 = " << r(c.loss.margin.m1) << "\n"
     << "m2 = " << r(c.loss.margin.m2) << "\n"
     << "m3 = " << r(c.loss.margin.m3) << "\n"
     << "proto_w_init = " << r(c.loss.proto_w_init) << "\n"
     << "proto_b_init = " << r(c.loss.proto_b_init) << "\n"
     << "[train]\n"
     << "epochs = " << c.epochs << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "proto_speakers = " << c.proto_speakers << "\n"
     << "proto_utts = " << c.proto_utts << "\n"
     << "lr_start = " << r(c.lr_start) << "\n"
     << "lr_end = " << r(c.lr_end) << "\n"
     << "momentum = " << r(c.momentum) << "\n"
     << "weight_decay = " << r(c.weight_decay) << "\n"
     << "label_noise = " << r(c.label_noise) << "\n"
     << "seed = " << c.seed << "\n"
     << "[eval]\n"
     << "n_target = " << c.eval.n_target << "\n"
     << "n_nontarget = " << c.eval.n_nontarget << "\n"
     << "p_targets = " << join(c.eval.p_targets) << "\n"
     << "asnorm = " << (c.eval.asnorm ? "true" : "false") << "\n"
     << "asnorm_top_n = " << c.eval.asnorm_top_n << "\n"
     << "[lmft]\n"
     << "margin = " << r(c.lmft.margin) << "\n"
     << "lr = " << r(c.lmft.lr) << "\n"
     << "epochs = " << c.lmft.epochs << "\n"
     << "noise_factor = " << r(c.lmft.noise_factor) << "\n";
  return os.str();
}

inline std::uint64_t config_hash(const TrainConfig& c) { return fnv1a(render_config(c)); }

}  // namespace sf2

#endif  // SF2_CONFIG_HPP
