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

#ifndef SF2_MODEL_HPP
#define SF2_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sf2/core.hpp"
#include "sf2/error.hpp"
#include "sf2/losses.hpp"
#include "sf2/rng.hpp"

namespace sf2 {

enum class LossKind { Softmax, MarginSoftmax, SphereFace2, Prototypical, AngularPrototypical };

/// Loss selection plus every hyperparameter the chosen loss reads.
struct LossSpec {
  LossKind kind = LossKind::SphereFace2;
  SphereFace2Params sphereface2;
  MarginSoftmaxParams margin;
  double proto_w_init = 10.0;
  double proto_b_init = -5.0;

  bool is_proto() const {
    return kind == LossKind::Prototypical || kind == LossKind::AngularPrototypical;
  }
  bool uses_unit_head() const {
    return kind == LossKind::MarginSoftmax || kind == LossKind::SphereFace2;
  }
  /// Additive margin that large-margin fine-tuning can raise, if any.
  std::optional<double> margin_value() const {
    if (kind == LossKind::SphereFace2) return sphereface2.m;
    if (kind == LossKind::MarginSoftmax && margin.m1 == 1.0) {
      if (margin.m2 > 0.0) return margin.m2;
      if (margin.m3 > 0.0) return margin.m3;
    }
    return std::nullopt;
  }
  void set_margin(double m) {
    if (kind == LossKind::SphereFace2) {
      sphereface2.m = m;
    } else if (kind == LossKind::MarginSoftmax && margin.m2 > 0.0) {
      margin.m2 = m;
    } else if (kind == LossKind::MarginSoftmax && margin.m3 > 0.0) {
      margin.m3 = m;
    } else {
      fail(ErrorKind::InvalidConfig, "loss has no margin parameter to override");
    }
  }
  void validate() const {
    if (kind == LossKind::SphereFace2) sphereface2.validate();
    if (kind == LossKind::MarginSoftmax) margin.validate();
    if (kind == LossKind::AngularPrototypical && !(proto_w_init > 0.0))
      fail(ErrorKind::InvalidConfig, "angular prototypical: initial w must be > 0");
  }
};

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::Softmax: return "softmax";
    case LossKind::MarginSoftmax: return "margin-softmax";
    case LossKind::SphereFace2: return "sphereface2";
    case LossKind::Prototypical: return "prototypical";
    case LossKind::AngularPrototypical: return "angproto";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view s) {
  for (auto k : {LossKind::Softmax, LossKind::MarginSoftmax, LossKind::SphereFace2,
                 LossKind::Prototypical, LossKind::AngularPrototypical})
    if (to_string(k) == s) return k;
  fail(ErrorKind::InvalidConfig, "unknown loss kind '" + std::string(s) + "'");
}

inline constexpr std::string_view kLossPresets[] = {
    "softmax",     "asoftmax",      "amsoftmax",     "aamsoftmax", "sphereface2",
    "sphereface2-a", "sphereface2-m", "prototypical", "angproto"};

/// Named configurations used in the loss comparison. Margin-softmax variants
/// use s = 32 with margin 0.2 (m1 = 4 for A-softmax); SphereFace2 uses
/// lambda = 0.7, t = 3, s = 32, m = 0.2.
inline LossSpec loss_preset(std::string_view name) {
  LossSpec spec;
  if (name == "softmax") {
    spec.kind = LossKind::Softmax;
  } else if (name == "asoftmax") {
    spec.kind = LossKind::MarginSoftmax;
    spec.margin = {4.0, 0.0, 0.0, 32.0};
  } else if (name == "amsoftmax") {
    spec.kind = LossKind::MarginSoftmax;
    spec.margin = {1.0, 0.0, 0.2, 32.0};
  } else if (name == "aamsoftmax") {
    spec.kind = LossKind::MarginSoftmax;
    spec.margin = {1.0, 0.2, 0.0, 32.0};
  } else if (name == "sphereface2") {
    spec.kind = LossKind::SphereFace2;
  } else if (name == "sphereface2-a") {
    spec.kind = LossKind::SphereFace2;
    spec.sphereface2.margin_type = MarginType::A;
  } else if (name == "sphereface2-m") {
    spec.kind = LossKind::SphereFace2;
    spec.sphereface2.margin_type = MarginType::M;
  } else if (name == "prototypical") {
    spec.kind = LossKind::Prototypical;
  } else if (name == "angproto") {
    spec.kind = LossKind::AngularPrototypical;
  } else {
    fail(ErrorKind::InvalidConfig, "unknown loss '" + std::string(name) + "'");
  }
  return spec;
}

template <Real T>
struct Param {
  std::string name;
  Matrix<T> value;
  bool unit_rows = false;  // rows projected back onto the sphere after each step
  bool positive = false;   // clamped to >= 1e-6 after each step

  friend bool operator==(const Param&, const Param&) = default;
};

template <Real T>
using Grads = std::vector<Matrix<T>>;

template <Real T>
struct EncoderCache {
  std::vector<Matrix<T>> activations;  // input to each layer; activations[0] is the features
  Matrix<T> pre_norm;                  // final linear output before normalization
  std::vector<T> norms;
  Matrix<T> output;                    // unit rows
};

inline constexpr double kHeadNormTolerance = 1e-4;

/// Cosine matrix between unit embeddings and unit classifier rows.
template <Real T>
Matrix<T> head_cosines(const Matrix<T>& embeddings, const Matrix<T>& weights) {
  if (embeddings.cols() != weights.cols())
    fail(ErrorKind::InvariantViolation, "head_cosines: embedding and weight widths differ");
  auto check_rows = [](const Matrix<T>& m, const char* what) {
    for (std::size_t r = 0; r < m.rows(); ++r)
      if (std::abs(norm2(m.row(r)) - T(1)) > T(kHeadNormTolerance))
        fail(ErrorKind::InvariantViolation,
             std::string("head_cosines: ") + what + " row " + std::to_string(r) +
                 " is not unit-norm");
  };
  check_rows(embeddings, "embedding");
  check_rows(weights, "classifier");
  Matrix<T> out(embeddings.rows(), weights.rows());
  for (std::size_t i = 0; i < embeddings.rows(); ++i)
    for (std::size_t j = 0; j < weights.rows(); ++j)
      out(i, j) = std::clamp(dot(embeddings.row(i), weights.row(j)), T(-1), T(1));
  return out;
}

/// Tanh MLP encoder with L2-normalized output, followed by a loss-specific
/// head. All parameters live in one flat list so the optimizer and the
/// checkpoint writer can treat them uniformly.
template <Real T>
class Model {
 public:
  Model() = default;

  /// `layer_sizes` runs from the feature width to the embedding width; two
  /// entries means a single linear layer.
  static Model init(const std::vector<std::size_t>& layer_sizes, std::size_t classes,
                    const LossSpec& spec, Rng rng) {
    if (layer_sizes.size() < 2)
      fail(ErrorKind::InvalidConfig, "encoder needs at least input and embedding sizes");
    for (auto s : layer_sizes)
      if (s == 0) fail(ErrorKind::InvalidConfig, "encoder layer sizes must be positive");
    if (!spec.is_proto() && classes < 1)
      fail(ErrorKind::InvalidConfig, "classification head needs at least one class");
    spec.validate();

    std::vector<Param<T>> params;
    Rng enc_rng = rng.split("encoder");
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      const std::size_t in = layer_sizes[l];
      const std::size_t out = layer_sizes[l + 1];
      const double bound = std::sqrt(6.0 / double(in + out));
      Matrix<T> w(out, in);
      for (auto& v : w.flat()) v = T(enc_rng.uniform(-bound, bound));
      params.push_back({"enc." + std::to_string(l) + ".W", std::move(w)});
      params.push_back({"enc." + std::to_string(l) + ".b", Matrix<T>(1, out)});
    }

    const std::size_t d = layer_sizes.back();
    Rng head_rng = rng.split("head");
    auto unit_rows = [&](std::size_t rows) {
      Matrix<T> w(rows, d);
      for (std::size_t r = 0; r < rows; ++r) {
        for (auto& v : w.row(r)) v = T(head_rng.normal());
        normalize_in_place(w.row(r));
      }
      return w;
    };
    switch (spec.kind) {
      case LossKind::Softmax:
        params.push_back({"head.W", unit_rows(classes)});
        params.push_back({"head.b", Matrix<T>(1, classes)});
        break;
      case LossKind::MarginSoftmax:
        params.push_back({"head.W", unit_rows(classes), true});
        break;
      case LossKind::SphereFace2:
        params.push_back({"head.W", unit_rows(classes), true});
        params.push_back({"head.bias", Matrix<T>(1, 1, T(spec.sphereface2.bias_init))});
        break;
      case LossKind::AngularPrototypical:
        params.push_back({"head.w", Matrix<T>(1, 1, T(spec.proto_w_init)), false, true});
        params.push_back({"head.b", Matrix<T>(1, 1, T(spec.proto_b_init))});
        break;
      case LossKind::Prototypical:
        break;
    }
    return from_params(spec.kind, std::move(params));
  }

  /// Rebuilds a model from a parameter list (e.g. one read from a checkpoint).
  static Model from_params(LossKind kind, std::vector<Param<T>> params) {
    Model m;
    m.kind_ = kind;
    m.params_ = std::move(params);
    while (m.find("enc." + std::to_string(m.layers_) + ".W")) ++m.layers_;
    if (m.layers_ == 0) fail(ErrorKind::InvalidConfig, "model has no encoder layers");
    if (m.params_.size() < 2 * m.layers_)
      fail(ErrorKind::InvalidConfig, "model parameter list is truncated");
    for (std::size_t l = 0; l < m.layers_; ++l) {
      const auto& w = m.params_[2 * l];
      const auto& b = m.params_[2 * l + 1];
      const std::string prefix = "enc." + std::to_string(l);
      if (w.name != prefix + ".W" || b.name != prefix + ".b")
        fail(ErrorKind::InvalidConfig, "encoder parameters out of order at layer " + std::to_string(l));
      if (b.value.rows() != 1 || b.value.cols() != w.value.rows())
        fail(ErrorKind::InvalidConfig, "encoder layer " + std::to_string(l) + " has bad bias");
      if (l > 0 && w.value.cols() != m.params_[2 * l - 2].value.rows())
        fail(ErrorKind::InvalidConfig, "encoder layer " + std::to_string(l) + " width mismatch");
    }
    auto need = [&](const char* name) {
      const auto idx = m.index_of(name);
      if (!idx) fail(ErrorKind::InvalidConfig, std::string("model is missing ") + name);
      return *idx;
    };
    switch (kind) {
      case LossKind::Softmax:
        m.head_w_ = need("head.W");
        m.head_b_ = need("head.b");
        break;
      case LossKind::MarginSoftmax:
        m.head_w_ = need("head.W");
        break;
      case LossKind::SphereFace2:
        m.head_w_ = need("head.W");
        m.head_b_ = need("head.bias");
        break;
      case LossKind::AngularPrototypical:
        m.head_scale_ = need("head.w");
        m.head_b_ = need("head.b");
        break;
      case LossKind::Prototypical:
        break;
    }
    if (m.head_w_ && m.params_[*m.head_w_].value.cols() != m.embed_dim())
      fail(ErrorKind::InvalidConfig, "head width does not match embedding width");
    return m;
  }

  LossKind kind() const { return kind_; }
  std::vector<Param<T>>& params() { return params_; }
  const std::vector<Param<T>>& params() const { return params_; }
  std::size_t layers() const { return layers_; }
  std::size_t feature_dim() const { return weight(0).cols(); }
  std::size_t embed_dim() const { return weight(layers_ - 1).rows(); }
  std::size_t classes() const { return head_w_ ? params_[*head_w_].value.rows() : 0; }

  const Matrix<T>& head_weights() const { return params_.at(head_w_.value()).value; }
  T head_bias_scalar() const { return params_.at(head_b_.value()).value(0, 0); }
  const Matrix<T>& head_bias_vector() const { return params_.at(head_b_.value()).value; }
  T head_scale() const { return params_.at(head_scale_.value()).value(0, 0); }

  Grads<T> zero_grads() const {
    Grads<T> g;
    g.reserve(params_.size());
    for (const auto& p : params_) g.emplace_back(p.value.rows(), p.value.cols());
    return g;
  }

  EncoderCache<T> encode(const Matrix<T>& features) const {
    if (features.cols() != feature_dim())
      fail(ErrorKind::InvalidConfig, "encoder expects " + std::to_string(feature_dim()) +
                                         " features, got " + std::to_string(features.cols()));
    require_finite(features.flat(), "encoder input");
    EncoderCache<T> cache;
    cache.activations.push_back(features);
    for (std::size_t l = 0; l < layers_; ++l) {
      const Matrix<T>& w = weight(l);
      const Matrix<T>& b = bias(l);
      const Matrix<T>& a = cache.activations.back();
      Matrix<T> z(a.rows(), w.rows());
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t o = 0; o < w.rows(); ++o) z(i, o) = dot(w.row(o), a.row(i)) + b(0, o);
      if (l + 1 < layers_) {
        for (auto& v : z.flat()) v = std::tanh(v);
        cache.activations.push_back(std::move(z));
      } else {
        cache.pre_norm = std::move(z);
      }
    }
    cache.output = cache.pre_norm;
    cache.norms.resize(cache.output.rows());
    for (std::size_t i = 0; i < cache.output.rows(); ++i)
      cache.norms[i] = normalize_in_place(cache.output.row(i));
    return cache;
  }

  Matrix<T> embed(const Matrix<T>& features) const { return encode(features).output; }

  /// Accumulates encoder parameter gradients given dL/d(unit output).
  void encode_backward(const EncoderCache<T>& cache, const Matrix<T>& dout, Grads<T>& grads) const {
    const std::size_t n = dout.rows();
    Matrix<T> delta(n, dout.cols());
    // Jacobian of v / |v| is (I - y y^T) / |v|
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = cache.output.row(i);
      const T proj = dot(y, dout.row(i));
      for (std::size_t a = 0; a < y.size(); ++a)
        delta(i, a) = (dout(i, a) - y[a] * proj) / cache.norms[i];
    }
    for (std::size_t l = layers_; l-- > 0;) {
      const Matrix<T>& w = weight(l);
      const Matrix<T>& a = cache.activations[l];
      Matrix<T>& gw = grads[2 * l];
      Matrix<T>& gb = grads[2 * l + 1];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < w.rows(); ++o) {
          const T d = delta(i, o);
          if (d == T(0)) continue;
          auto gw_row = gw.row(o);
          const auto a_row = a.row(i);
          for (std::size_t k = 0; k < w.cols(); ++k) gw_row[k] += d * a_row[k];
          gb(0, o) += d;
        }
      if (l == 0) break;
      Matrix<T> prev(n, w.cols());
      for (std::size_t i = 0; i < n; ++i) {
        auto p = prev.row(i);
        for (std::size_t o = 0; o < w.rows(); ++o) {
          const T d = delta(i, o);
          const auto w_row = w.row(o);
          for (std::size_t k = 0; k < w.cols(); ++k) p[k] += d * w_row[k];
        }
        const auto h = a.row(i);  // tanh output of layer l-1
        for (std::size_t k = 0; k < p.size(); ++k) p[k] *= T(1) - h[k] * h[k];
      }
      delta = std::move(prev);
    }
  }

  /// Mean batch loss. For prototypical losses the rows are speaker-major with
  /// `proto_utts` utterances per speaker and `labels` is ignored. Gradients
  /// are accumulated into `grads` when it is non-null.
  T forward_backward(const LossSpec& spec, const Matrix<T>& features,
                     std::span<const std::size_t> labels, std::size_t proto_utts,
                     Grads<T>* grads) const {
    if (spec.kind != kind_) fail(ErrorKind::InvalidConfig, "loss does not match model head");
    const auto cache = encode(features);
    const Matrix<T>& emb = cache.output;
    const std::size_t n = emb.rows();
    const std::size_t d = emb.cols();
    Matrix<T> demb(n, d);
    T value = T(0);

    if (spec.is_proto()) {
      if (proto_utts == 0 || n % proto_utts != 0)
        fail(ErrorKind::DegenerateBatch, "prototypical batch rows not divisible by M");
      ProtoBatch<T> batch(n / proto_utts, proto_utts, d);
      batch.data = emb.storage();
      LossOutput<T> out;
      if (spec.kind == LossKind::Prototypical) {
        out = prototypical_loss(batch);
      } else {
        out = angular_prototypical_loss(batch, head_scale(), head_bias_scalar());
        if (grads) {
          (*grads)[*head_scale_](0, 0) += out.grad_scale;
          (*grads)[*head_b_](0, 0) += out.grad_bias;
        }
      }
      value = out.value;
      demb = Matrix<T>(n, d, std::move(out.grad));
    } else {
      if (labels.size() != n) fail(ErrorKind::InvalidConfig, "labels and batch differ in size");
      const T inv_n = T(1) / T(n);
      const Matrix<T>& w = head_weights();
      const std::size_t k = w.rows();
      Matrix<T> dlogit(n, k);  // d(mean loss)/d(cosine or logit)
      if (spec.kind == LossKind::Softmax) {
        const Matrix<T>& b = head_bias_vector();
        std::vector<T> logits(k);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < k; ++j) logits[j] = dot(w.row(j), emb.row(i)) + b(0, j);
          const auto out = plain_softmax_loss<T>(logits, labels[i]);
          value += out.value * inv_n;
          for (std::size_t j = 0; j < k; ++j) dlogit(i, j) = out.grad[j] * inv_n;
        }
        if (grads) {
          auto& gb = (*grads)[*head_b_];
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) gb(0, j) += dlogit(i, j);
        }
      } else {
        const Matrix<T> cos = head_cosines(emb, w);
        T gbias = T(0);
        for (std::size_t i = 0; i < n; ++i) {
          const auto out = spec.kind == LossKind::SphereFace2
                               ? sphereface2_loss(cos.row(i), labels[i], spec.sphereface2,
                                                  head_bias_scalar())
                               : margin_softmax_loss(cos.row(i), labels[i], spec.margin);
          value += out.value * inv_n;
          gbias += out.grad_bias * inv_n;
          for (std::size_t j = 0; j < k; ++j) dlogit(i, j) = out.grad[j] * inv_n;
        }
        if (grads && spec.kind == LossKind::SphereFace2) (*grads)[*head_b_](0, 0) += gbias;
      }
      // Both head types are linear in the embedding: dL/demb = dlogit W,
      // dL/dW = dlogit^T emb.
      for (std::size_t i = 0; i < n; ++i) {
        auto de = demb.row(i);
        for (std::size_t j = 0; j < k; ++j) {
          const T g = dlogit(i, j);
          if (g == T(0)) continue;
          const auto w_row = w.row(j);
          for (std::size_t a = 0; a < d; ++a) de[a] += g * w_row[a];
        }
      }
      if (grads) {
        auto& gw = (*grads)[*head_w_];
        for (std::size_t i = 0; i < n; ++i) {
          const auto e = emb.row(i);
          for (std::size_t j = 0; j < k; ++j) {
            const T g = dlogit(i, j);
            if (g == T(0)) continue;
            auto gw_row = gw.row(j);
            for (std::size_t a = 0; a < d; ++a) gw_row[a] += g * e[a];
          }
        }
      }
    }
    if (!std::isfinite(value)) fail(ErrorKind::NonFinite, "batch loss is non-finite");
    if (grads) encode_backward(cache, demb, *grads);
    return value;
  }

 private:
  const Param<T>* find(const std::string& name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }
  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return i;
    return std::nullopt;
  }
  // Encoder parameters always occupy the first 2 * layers_ slots.
  const Matrix<T>& weight(std::size_t l) const { return params_[2 * l].value; }
  const Matrix<T>& bias(std::size_t l) const { return params_[2 * l + 1].value; }

  LossKind kind_ = LossKind::SphereFace2;
  std::vector<Param<T>> params_;
  std::size_t layers_ = 0;
  std::optional<std::size_t> head_w_;
  std::optional<std::size_t> head_b_;
  std::optional<std::size_t> head_scale_;
};

inline constexpr double kMinProtoScale = 1e-6;

/// Classical SGD with momentum and L2 weight decay:
///   v <- momentum * v + grad + weight_decay * param,  param <- param - lr * v.
/// Sphere-constrained rows are projected back to unit norm afterwards.
template <Real T>
void apply_gradients(std::vector<Param<T>>& params, const Grads<T>& grads, Grads<T>& velocity,
                     T lr, T momentum, T weight_decay) {
  if (grads.size() != params.size())
    fail(ErrorKind::InvariantViolation, "gradient list does not match parameters");
  if (velocity.empty())
    for (const auto& p : params) velocity.emplace_back(p.value.rows(), p.value.cols());
  if (velocity.size() != params.size())
    fail(ErrorKind::InvariantViolation, "momentum buffers do not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (grads[i].size() != p.value.size() || velocity[i].size() != p.value.size())
      fail(ErrorKind::InvariantViolation, "shape mismatch for parameter " + p.name);
    auto pv = p.value.flat();
    const auto g = grads[i].flat();
    auto v = velocity[i].flat();
    for (std::size_t k = 0; k < pv.size(); ++k) {
      v[k] = momentum * v[k] + g[k] + weight_decay * pv[k];
      pv[k] -= lr * v[k];
    }
    if (!all_finite(std::span<const T>(pv)))
      fail(ErrorKind::NonFinite, "parameter " + p.name + " became non-finite");
    if (lr == T(0)) continue;  // keep parameters bit-identical
    if (p.unit_rows)
      for (std::size_t r = 0; r < p.value.rows(); ++r) normalize_in_place(p.value.row(r));
    if (p.positive)
      for (auto& x : pv) x = std::max(x, T(kMinProtoScale));
  }
}

}  // namespace sf2

#endif  // SF2_MODEL_HPP
