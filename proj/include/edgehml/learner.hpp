#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "edgehml/core.hpp"
#include "edgehml/rng.hpp"

namespace edgehml {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// D -> H (tanh) -> C softmax classifier. The same type holds gradients.
template <typename Scalar>
struct Mlp {
  MatrixX<Scalar> w1;  // H x D
  VectorX<Scalar> b1;  // H
  MatrixX<Scalar> w2;  // C x H
  VectorX<Scalar> b2;  // C

  Eigen::Index input_dim() const { return w1.cols(); }
  Eigen::Index hidden_dim() const { return w1.rows(); }
  Eigen::Index num_classes() const { return w2.rows(); }
  Eigen::Index num_params() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  bool same_shape(const Mlp& o) const {
    return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() && b1.size() == o.b1.size() &&
           w2.rows() == o.w2.rows() && w2.cols() == o.w2.cols() && b2.size() == o.b2.size();
  }
  bool all_finite() const { return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite(); }

  static Mlp zeros(Eigen::Index d, Eigen::Index h, Eigen::Index c) {
    return {MatrixX<Scalar>::Zero(h, d), VectorX<Scalar>::Zero(h), MatrixX<Scalar>::Zero(c, h),
            VectorX<Scalar>::Zero(c)};
  }
  static Mlp zeros_like(const Mlp& m) { return zeros(m.input_dim(), m.hidden_dim(), m.num_classes()); }

  Mlp& operator+=(const Mlp& o) {
    w1 += o.w1;
    b1 += o.b1;
    w2 += o.w2;
    b2 += o.b2;
    return *this;
  }

  // Flat view in checkpoint order: w1 (row-major), b1, w2 (row-major), b2.
  std::vector<Scalar> flatten() const;
  static Mlp unflatten(std::span<const Scalar> flat, Eigen::Index d, Eigen::Index h, Eigen::Index c);

  bool operator==(const Mlp& o) const {
    return same_shape(o) && w1 == o.w1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
  }
};

// Gaussian weights scaled by 1/sqrt(fan_in), zero biases.
template <typename Scalar>
Mlp<Scalar> make_mlp(Eigen::Index d, Eigen::Index h, Eigen::Index c, Rng& rng) {
  auto m = Mlp<Scalar>::zeros(d, h, c);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = static_cast<Scalar>(s1 * n01(rng));
  for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2.data()[i] = static_cast<Scalar>(s2 * n01(rng));
  return m;
}

// ---------------------------------------------------------------------------
// Forward

template <typename Scalar>
struct Activations {
  MatrixX<Scalar> hidden;  // H x B
  MatrixX<Scalar> logits;  // C x B
  MatrixX<Scalar> probs;   // C x B
};

template <typename Scalar>
MatrixX<Scalar> stack_features(std::span<const FeatureVector* const> xs, Eigen::Index dim) {
  MatrixX<Scalar> x(dim, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (xs[j]->size() != dim) throw ShapeError("feature dimension mismatch");
    x.col(static_cast<Eigen::Index>(j)) = xs[j]->template cast<Scalar>();
  }
  return x;
}

template <typename Scalar>
Activations<Scalar> forward_batch(const Mlp<Scalar>& m, const MatrixX<Scalar>& x) {
  if (x.rows() != m.input_dim()) throw ShapeError("input has wrong feature dimension");
  Activations<Scalar> a;
  a.hidden = ((m.w1 * x).colwise() + m.b1).array().tanh().matrix();
  a.logits = (m.w2 * a.hidden).colwise() + m.b2;
  a.probs.resize(a.logits.rows(), a.logits.cols());
  for (Eigen::Index j = 0; j < a.logits.cols(); ++j) {
    const auto shifted = (a.logits.col(j).array() - a.logits.col(j).maxCoeff()).exp();
    a.probs.col(j) = (shifted / shifted.sum()).matrix();
  }
  return a;
}

template <typename Scalar>
VectorX<Scalar> forward(const Mlp<Scalar>& m, const FeatureVector& x) {
  if (x.size() != m.input_dim()) throw ShapeError("input has wrong feature dimension");
  if (!x.allFinite()) throw ShapeError("input has non-finite entries");
  return forward_batch(m, MatrixX<Scalar>(x.template cast<Scalar>())).probs.col(0);
}

// ---------------------------------------------------------------------------
// Losses. Every batch loss is a mean over its samples.

template <typename Scalar>
struct LossGrad {
  Scalar loss = 0;
  Mlp<Scalar> grad;
};

template <typename Scalar>
struct LossBreakdown {
  Scalar l_s = 0;
  Scalar l_m = 0;
  Scalar l_u = 0;
  Scalar gamma = 0;
  Scalar total = 0;
};

namespace detail {

template <typename Scalar>
Scalar log_softmax_at(const MatrixX<Scalar>& logits, Eigen::Index j, Eigen::Index cls) {
  const Scalar mx = logits.col(j).maxCoeff();
  return logits(cls, j) - mx - std::log((logits.col(j).array() - mx).exp().sum());
}

// Mean cross-entropy of `targets` (held constant) over the columns of x;
// coef * d(mean CE)/dθ is added to grad. Returns the mean CE.
template <typename Scalar>
Scalar accumulate_ce(const Mlp<Scalar>& m, const MatrixX<Scalar>& x, const Activations<Scalar>& a,
                     std::span<const ClassId> targets, Scalar coef, Mlp<Scalar>& grad) {
  const Eigen::Index b = x.cols();
  if (b == 0) return 0;
  Scalar loss = 0;
  MatrixX<Scalar> dlogits = a.probs;
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto t = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(j)]);
    if (t >= m.num_classes()) throw ShapeError("target class outside model output");
    loss -= log_softmax_at(a.logits, j, t);
    dlogits(t, j) -= Scalar(1);
  }
  const Scalar scale = coef / static_cast<Scalar>(b);
  dlogits *= scale;
  grad.w2.noalias() += dlogits * a.hidden.transpose();
  grad.b2 += dlogits.rowwise().sum();
  const MatrixX<Scalar> dpre =
      ((m.w2.transpose() * dlogits).array() * (Scalar(1) - a.hidden.array().square())).matrix();
  grad.w1.noalias() += dpre * x.transpose();
  grad.b1 += dpre.rowwise().sum();
  return loss / static_cast<Scalar>(b);
}

template <typename Scalar>
ClassId argmax_lowest(const Eigen::Ref<const VectorX<Scalar>>& p) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return static_cast<ClassId>(best);
}

template <typename Item, typename Proj>
std::vector<const FeatureVector*> feature_ptrs(std::span<const Item> items, Proj proj) {
  std::vector<const FeatureVector*> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(&proj(it));
  return out;
}

}  // namespace detail

template <typename Scalar>
Scalar cross_entropy(const VectorX<Scalar>& probs, ClassId target) {
  return -std::log(probs[static_cast<Eigen::Index>(target)]);
}

// L_s: mean CE on new labeled samples.
template <typename Scalar>
LossGrad<Scalar> supervised_loss(const Mlp<Scalar>& m, std::span<const LabeledSample> batch) {
  if (batch.empty()) throw EmptyBatch("supervised_loss: empty batch");
  LossGrad<Scalar> out{0, Mlp<Scalar>::zeros_like(m)};
  const auto ptrs = detail::feature_ptrs(batch, [](const LabeledSample& s) -> const FeatureVector& {
    return s.sample.features;
  });
  const auto x = stack_features<Scalar>(ptrs, m.input_dim());
  std::vector<ClassId> y;
  for (const auto& s : batch) y.push_back(s.label);
  out.loss = detail::accumulate_ce(m, x, forward_batch(m, x), std::span<const ClassId>(y), Scalar(1), out.grad);
  return out;
}

// L_m: alpha * meanCE(replayed labeled) + beta * meanCE(replayed unlabeled
// against stored pseudo-labels, or the live argmax when `relabel` is set).
template <typename Scalar>
LossGrad<Scalar> memory_loss(const Mlp<Scalar>& m, std::span<const LabeledSample> lab,
                             std::span<const PseudoLabeledSample> unlab, Scalar alpha, Scalar beta,
                             bool relabel = false) {
  LossGrad<Scalar> out{0, Mlp<Scalar>::zeros_like(m)};
  if (!lab.empty()) {
    const auto ptrs = detail::feature_ptrs(lab, [](const LabeledSample& s) -> const FeatureVector& {
      return s.sample.features;
    });
    const auto x = stack_features<Scalar>(ptrs, m.input_dim());
    std::vector<ClassId> y;
    for (const auto& s : lab) y.push_back(s.label);
    out.loss += alpha * detail::accumulate_ce(m, x, forward_batch(m, x), std::span<const ClassId>(y), alpha, out.grad);
  }
  if (!unlab.empty()) {
    const auto ptrs = detail::feature_ptrs(unlab, [](const PseudoLabeledSample& s) -> const FeatureVector& {
      return s.sample.features;
    });
    const auto x = stack_features<Scalar>(ptrs, m.input_dim());
    const auto a = forward_batch(m, x);
    std::vector<ClassId> y;
    for (std::size_t j = 0; j < unlab.size(); ++j)
      y.push_back(relabel ? detail::argmax_lowest<Scalar>(a.probs.col(static_cast<Eigen::Index>(j)))
                          : unlab[j].pseudo_label);
    out.loss += beta * detail::accumulate_ce(m, x, a, std::span<const ClassId>(y), beta, out.grad);
  }
  return out;
}

template <typename Scalar>
struct UnsupervisedLoss {
  Scalar loss = 0;
  Mlp<Scalar> grad;
  std::size_t confident_count = 0;
  MatrixX<Scalar> probs;  // C x B, from the same forward pass
};

// L_u: CE against the model's own argmax, masked to samples whose top
// probability reaches tau. Targets are constants; mean over confident samples.
template <typename Scalar>
UnsupervisedLoss<Scalar> unsupervised_loss(const Mlp<Scalar>& m, std::span<const Sample> batch, Scalar tau) {
  UnsupervisedLoss<Scalar> out{0, Mlp<Scalar>::zeros_like(m), 0, {}};
  if (batch.empty()) return out;
  const auto ptrs = detail::feature_ptrs(batch, [](const Sample& s) -> const FeatureVector& { return s.features; });
  const auto x = stack_features<Scalar>(ptrs, m.input_dim());
  const auto a = forward_batch(m, x);
  out.probs = a.probs;

  std::vector<Eigen::Index> keep;
  std::vector<ClassId> targets;
  for (Eigen::Index j = 0; j < a.probs.cols(); ++j) {
    if (a.probs.col(j).maxCoeff() >= tau) {
      keep.push_back(j);
      targets.push_back(detail::argmax_lowest<Scalar>(a.probs.col(j)));
    }
  }
  out.confident_count = keep.size();
  if (keep.empty()) return out;

  Activations<Scalar> sub;
  MatrixX<Scalar> xs(x.rows(), static_cast<Eigen::Index>(keep.size()));
  sub.hidden.resize(a.hidden.rows(), xs.cols());
  sub.logits.resize(a.logits.rows(), xs.cols());
  sub.probs.resize(a.probs.rows(), xs.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto j = keep[k];
    const auto kk = static_cast<Eigen::Index>(k);
    xs.col(kk) = x.col(j);
    sub.hidden.col(kk) = a.hidden.col(j);
    sub.logits.col(kk) = a.logits.col(j);
    sub.probs.col(kk) = a.probs.col(j);
  }
  out.loss = detail::accumulate_ce(m, xs, sub, std::span<const ClassId>(targets), Scalar(1), out.grad);
  return out;
}

template <typename Scalar>
struct TotalLoss {
  LossBreakdown<Scalar> parts;
  Mlp<Scalar> grad;
  std::size_t unsup_forwards = 0;  // samples forwarded for L_u (0 when skipped)
  std::size_t confident_count = 0;
  MatrixX<Scalar> unlab_probs;  // probabilities of unlab_batch when L_u ran
};

// L = L_s + L_m + gamma * L_u. The unsupervised forward pass runs only inside
// the schedule window; by default the window is "gamma > 0".
template <typename Scalar>
TotalLoss<Scalar> total_loss(const Mlp<Scalar>& m, std::span<const LabeledSample> new_batch,
                             std::span<const LabeledSample> replay_lab,
                             std::span<const PseudoLabeledSample> replay_unlab, std::span<const Sample> unlab_batch,
                             Scalar gamma, const Hyperparams& h, std::optional<bool> in_window = std::nullopt) {
  if (new_batch.empty()) throw EmptyBatch("total_loss: empty new-labeled batch");
  TotalLoss<Scalar> out;
  auto sup = supervised_loss(m, new_batch);
  auto mem = memory_loss(m, replay_lab, replay_unlab, static_cast<Scalar>(h.alpha), static_cast<Scalar>(h.beta),
                         h.relabel_replay);
  out.grad = std::move(sup.grad);
  out.grad += mem.grad;
  out.parts.l_s = sup.loss;
  out.parts.l_m = mem.loss;
  out.parts.gamma = gamma;

  const bool run_unsup = in_window.value_or(gamma > Scalar(0));
  if (run_unsup && !unlab_batch.empty()) {
    auto uns = unsupervised_loss(m, unlab_batch, static_cast<Scalar>(h.tau));
    out.parts.l_u = uns.loss;
    out.unsup_forwards = unlab_batch.size();
    out.confident_count = uns.confident_count;
    out.unlab_probs = std::move(uns.probs);
    uns.grad.w1 *= gamma;
    uns.grad.b1 *= gamma;
    uns.grad.w2 *= gamma;
    uns.grad.b2 *= gamma;
    out.grad += uns.grad;
  }
  out.parts.total = out.parts.l_s + out.parts.l_m + gamma * out.parts.l_u;
  return out;
}

// θ <- θ - lr * grad. Throws (leaving m untouched) on shape mismatch or
// non-finite input.
template <typename Scalar>
void sgd_step(Mlp<Scalar>& m, const Mlp<Scalar>& grad, Scalar lr) {
  if (!m.same_shape(grad)) throw ShapeError("sgd_step: gradient shape mismatch");
  if (!grad.all_finite()) throw NonFiniteGradient("sgd_step: non-finite gradient");
  Mlp<Scalar> next = m;
  next.w1 -= lr * grad.w1;
  next.b1 -= lr * grad.b1;
  next.w2 -= lr * grad.w2;
  next.b2 -= lr * grad.b2;
  if (!next.all_finite()) throw NonFiniteGradient("sgd_step: update produced non-finite parameters");
  m = std::move(next);
}

// ---------------------------------------------------------------------------
// Checkpoint: "EHMLMODL" | version u16 | reserved u16 | D u32 | H u32 | C u32 |
// parameters as little-endian f32 in flatten() order.

inline constexpr std::uint16_t kModelVersion = 1;

template <typename Scalar>
void save_checkpoint(const Mlp<Scalar>& m, const std::filesystem::path& path);
template <typename Scalar>
Mlp<Scalar> load_checkpoint(const std::filesystem::path& path);

template <typename Scalar>
std::vector<Scalar> Mlp<Scalar>::flatten() const {
  std::vector<Scalar> out;
  out.reserve(static_cast<std::size_t>(num_params()));
  for (Eigen::Index r = 0; r < w1.rows(); ++r)
    for (Eigen::Index c = 0; c < w1.cols(); ++c) out.push_back(w1(r, c));
  for (Eigen::Index i = 0; i < b1.size(); ++i) out.push_back(b1[i]);
  for (Eigen::Index r = 0; r < w2.rows(); ++r)
    for (Eigen::Index c = 0; c < w2.cols(); ++c) out.push_back(w2(r, c));
  for (Eigen::Index i = 0; i < b2.size(); ++i) out.push_back(b2[i]);
  return out;
}

template <typename Scalar>
Mlp<Scalar> Mlp<Scalar>::unflatten(std::span<const Scalar> flat, Eigen::Index d, Eigen::Index h, Eigen::Index c) {
  auto m = zeros(d, h, c);
  if (static_cast<Eigen::Index>(flat.size()) != m.num_params()) throw ShapeError("unflatten: wrong parameter count");
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index col = 0; col < d; ++col) m.w1(r, col) = flat[k++];
  for (Eigen::Index i = 0; i < h; ++i) m.b1[i] = flat[k++];
  for (Eigen::Index r = 0; r < c; ++r)
    for (Eigen::Index col = 0; col < h; ++col) m.w2(r, col) = flat[k++];
  for (Eigen::Index i = 0; i < c; ++i) m.b2[i] = flat[k++];
  return m;
}

using Model = Mlp<double>;

}  // namespace edgehml
