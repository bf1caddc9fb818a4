#include "lastrank/evaluator.hpp"

#include <cmath>
#include <string>

#include "lastrank/error.hpp"
#include "lastrank/metrics.hpp"

namespace lastrank {

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, double scale, Rng& rng) {
  const double limit = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w({fan_in, fan_out});
  for (double& v : w.data()) v = uniform(rng, -limit, limit);
  return w;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Forward {
  Tensor user_in;   // [1, Du]
  Tensor user_enc;  // [1, H]
  Tensor item_enc;  // [L, H]
  Tensor input;     // [L, 3H+1]
  Tensor hidden;    // [L, H]
  Tensor logits;    // [L, 1]
};

Forward run_forward(std::span<const double> user, const Tensor& items, const ParamView& phi) {
  namespace ep = evaluator_param;
  const ModelDims dims = evaluator_dims(phi.base());
  require(user.size() == dims.user_dim, "evaluator: user feature length mismatch");
  require(items.rank() == 2 && items.cols() == dims.item_dim,
          "evaluator: item rows must have " + std::to_string(dims.item_dim) + " features");
  require(items.rows() >= 1, "evaluator: list must contain at least one item");
  const std::size_t len = items.rows();
  const std::size_t h = dims.hidden;

  Forward f;
  f.user_in = Tensor({1, user.size()}, std::vector<double>(user.begin(), user.end()));
  f.user_enc = tanh_forward(affine_forward(f.user_in, phi.at(ep::kUserWeight), phi.at(ep::kUserBias)));
  f.item_enc = tanh_forward(affine_forward(items, phi.at(ep::kItemWeight), phi.at(ep::kItemBias)));

  std::vector<double> mean(h, 0.0);
  for (std::size_t j = 0; j < len; ++j) {
    const auto r = f.item_enc.row(j);
    for (std::size_t k = 0; k < h; ++k) mean[k] += r[k];
  }
  for (double& v : mean) v /= static_cast<double>(len);

  f.input = Tensor({len, 3 * h + 1});
  for (std::size_t j = 0; j < len; ++j) {
    auto x = f.input.row(j);
    const auto ue = f.user_enc.row(0);
    const auto ie = f.item_enc.row(j);
    std::copy(ue.begin(), ue.end(), x.begin());
    std::copy(ie.begin(), ie.end(), x.begin() + static_cast<std::ptrdiff_t>(h));
    std::copy(mean.begin(), mean.end(), x.begin() + static_cast<std::ptrdiff_t>(2 * h));
    x[3 * h] = static_cast<double>(j) / static_cast<double>(len);
  }
  f.hidden = tanh_forward(affine_forward(f.input, phi.at(ep::kHiddenWeight), phi.at(ep::kHiddenBias)));
  f.logits = affine_forward(f.hidden, phi.at(ep::kOutWeight), phi.at(ep::kOutBias));
  return f;
}

void add_into(Tensor& dst, const Tensor& src, double weight = 1.0) {
  auto d = dst.data();
  const auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += weight * s[i];
}

}  // namespace

ParamSet init_evaluator_params(const ModelDims& dims, std::uint64_t seed, double scale) {
  namespace ep = evaluator_param;
  Rng rng(seed);
  const std::size_t h = dims.hidden;
  ParamSet p;
  p.add(ep::kUserWeight, glorot(dims.user_dim, h, scale, rng));
  p.add(ep::kUserBias, Tensor({h}));
  p.add(ep::kItemWeight, glorot(dims.item_dim, h, scale, rng));
  p.add(ep::kItemBias, Tensor({h}));
  p.add(ep::kHiddenWeight, glorot(3 * h + 1, h, scale, rng));
  p.add(ep::kHiddenBias, Tensor({h}));
  p.add(ep::kOutWeight, glorot(h, 1, scale, rng));
  p.add(ep::kOutBias, Tensor({1}));
  return p;
}

ModelDims evaluator_dims(const ParamSet& params) {
  ModelDims d;
  d.user_dim = params.at(evaluator_param::kUserWeight).rows();
  d.item_dim = params.at(evaluator_param::kItemWeight).rows();
  d.hidden = params.at(evaluator_param::kUserWeight).cols();
  return d;
}

std::vector<double> predict_click_probs(std::span<const double> user, const Tensor& items,
                                        const ParamView& phi) {
  const Forward f = run_forward(user, items, phi);
  std::vector<double> probs(items.rows());
  for (std::size_t j = 0; j < probs.size(); ++j) probs[j] = sigmoid(f.logits[j]);
  return probs;
}

double evaluator_at_n(std::span<const double> user, const Tensor& items, const ParamView& phi,
                      std::size_t n) {
  require(n >= 1 && n <= items.rows(), "evaluator_at_n: n=" + std::to_string(n) +
                                           " outside list length " +
                                           std::to_string(items.rows()));
  const auto probs = predict_click_probs(user, items, phi);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += probs[j];
  return s / static_cast<double>(n);
}

double bce_sum(std::span<const double> user, const Tensor& items, std::span<const int> clicks,
               const ParamView& phi) {
  require(clicks.size() == items.rows(), "bce: clicks not aligned with items");
  const Forward f = run_forward(user, items, phi);
  double loss = 0.0;
  for (std::size_t j = 0; j < clicks.size(); ++j) {
    require(clicks[j] == 0 || clicks[j] == 1, "bce: click labels must be 0 or 1");
    loss += softplus(f.logits[j]) - clicks[j] * f.logits[j];
  }
  return loss;
}

double accumulate_bce_grad(std::span<const double> user, const Tensor& items,
                           std::span<const int> clicks, const ParamView& phi, double weight,
                           ParamSet& grads) {
  namespace ep = evaluator_param;
  require(clicks.size() == items.rows(), "bce: clicks not aligned with items");
  require(grads.same_structure(phi.base()), "gradient buffer does not match evaluator params");
  const Forward f = run_forward(user, items, phi);
  const std::size_t len = items.rows();
  const std::size_t h = evaluator_dims(phi.base()).hidden;

  double loss = 0.0;
  Tensor d_logits({len, 1});
  for (std::size_t j = 0; j < len; ++j) {
    require(clicks[j] == 0 || clicks[j] == 1, "bce: click labels must be 0 or 1");
    const double z = f.logits[j];
    loss += softplus(z) - clicks[j] * z;
    d_logits[j] = weight * (sigmoid(z) - clicks[j]);
  }

  const AffineGrads og = affine_backward(d_logits, f.hidden, phi.at(ep::kOutWeight));
  add_into(grads.at(ep::kOutWeight), og.weight);
  add_into(grads.at(ep::kOutBias), og.bias);
  const AffineGrads hg =
      affine_backward(tanh_backward(og.input, f.hidden), f.input, phi.at(ep::kHiddenWeight));
  add_into(grads.at(ep::kHiddenWeight), hg.weight);
  add_into(grads.at(ep::kHiddenBias), hg.bias);

  Tensor d_user_enc({1, h});
  Tensor d_item_enc({len, h});
  std::vector<double> d_mean(h, 0.0);
  for (std::size_t j = 0; j < len; ++j) {
    const auto dx = hg.input.row(j);
    auto du = d_user_enc.row(0);
    auto di = d_item_enc.row(j);
    for (std::size_t k = 0; k < h; ++k) {
      du[k] += dx[k];
      di[k] += dx[h + k];
      d_mean[k] += dx[2 * h + k];
    }
  }
  for (std::size_t j = 0; j < len; ++j) {
    auto di = d_item_enc.row(j);
    for (std::size_t k = 0; k < h; ++k) di[k] += d_mean[k] / static_cast<double>(len);
  }
  const AffineGrads ug =
      affine_backward(tanh_backward(d_user_enc, f.user_enc), f.user_in, phi.at(ep::kUserWeight));
  const AffineGrads ig =
      affine_backward(tanh_backward(d_item_enc, f.item_enc), items, phi.at(ep::kItemWeight));
  add_into(grads.at(ep::kUserWeight), ug.weight);
  add_into(grads.at(ep::kUserBias), ug.bias);
  add_into(grads.at(ep::kItemWeight), ig.weight);
  add_into(grads.at(ep::kItemBias), ig.bias);
  return loss;
}

EvaluatorSession::EvaluatorSession(std::span<const double> user, const Tensor& candidates,
                                   const ParamSet& phi) {
  namespace ep = evaluator_param;
  const ModelDims dims = evaluator_dims(phi);
  require(user.size() == dims.user_dim, "evaluator: user feature length mismatch");
  require(candidates.rank() == 2 && candidates.cols() == dims.item_dim,
          "evaluator: candidate rows must have " + std::to_string(dims.item_dim) + " features");
  hidden_ = dims.hidden;
  candidate_count_ = candidates.rows();
  const std::size_t h = hidden_;
  const Tensor& hw = phi.at(ep::kHiddenWeight);

  const Tensor user_in({1, user.size()}, std::vector<double>(user.begin(), user.end()));
  const Tensor user_enc =
      tanh_forward(affine_forward(user_in, phi.at(ep::kUserWeight), phi.at(ep::kUserBias)));
  const Tensor item_enc =
      tanh_forward(affine_forward(candidates, phi.at(ep::kItemWeight), phi.at(ep::kItemBias)));
  const Tensor up = affine_forward(user_enc, hw.row_slice(0, h), phi.at(ep::kHiddenBias));
  user_proj_.assign(up.data().begin(), up.data().end());
  const Tensor zero({h});
  cand_proj_ = affine_forward(item_enc, hw.row_slice(h, 2 * h), zero);
  ctx_proj_ = affine_forward(item_enc, hw.row_slice(2 * h, 3 * h), zero);
  const auto pos = hw.row(3 * h);
  position_row_.assign(pos.begin(), pos.end());
  const auto ow = phi.at(ep::kOutWeight).data();
  out_weight_.assign(ow.begin(), ow.end());
  out_bias_ = phi.at(ep::kOutBias)[0];
}

std::vector<double> EvaluatorSession::click_probs(std::span<const std::size_t> order) const {
  require(!order.empty(), "evaluator: list must contain at least one item");
  const std::size_t h = hidden_;
  const std::size_t len = order.size();
  std::vector<double> ctx(h, 0.0);
  for (std::size_t idx : order) {
    require(idx < candidate_count_, "evaluator: candidate index out of range");
    const auto r = ctx_proj_.row(idx);
    for (std::size_t k = 0; k < h; ++k) ctx[k] += r[k];
  }
  for (double& v : ctx) v /= static_cast<double>(len);
  std::vector<double> probs(len);
  for (std::size_t j = 0; j < len; ++j) {
    const double position = static_cast<double>(j) / static_cast<double>(len);
    const auto cp = cand_proj_.row(order[j]);
    double logit = out_bias_;
    for (std::size_t k = 0; k < h; ++k) {
      logit += out_weight_[k] * std::tanh(user_proj_[k] + cp[k] + ctx[k] + position_row_[k] * position);
    }
    probs[j] = sigmoid(logit);
  }
  return probs;
}

double EvaluatorSession::at_n(std::span<const std::size_t> order, std::size_t n) const {
  require(n >= 1 && n <= order.size(), "evaluator_at_n: n outside list length");
  const auto probs = click_probs(order);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += probs[j];
  return s / static_cast<double>(n);
}

ListScore learned_list_score(std::span<const double> user, const Tensor& candidates,
                             const ParamSet& phi, std::size_t n) {
  auto session = std::make_shared<const EvaluatorSession>(user, candidates, phi);
  return [session, n](std::span<const std::size_t> order) {
    return session->at_n(order, std::min(n, order.size()));
  };
}

namespace {

std::vector<int> labels_in_order(std::span<const int> candidate_labels,
                                 std::span<const std::size_t> order) {
  std::vector<int> out;
  out.reserve(order.size());
  for (std::size_t idx : order) {
    require(idx < candidate_labels.size(),
            "metric_evaluate: no label for candidate " + std::to_string(idx));
    out.push_back(candidate_labels[idx]);
  }
  return out;
}

}  // namespace

double metric_evaluate(std::span<const int> candidate_labels, std::span<const std::size_t> order,
                       std::size_t k) {
  const auto labels = labels_in_order(candidate_labels, order);
  return ndcg_at_k(labels, k, candidate_labels);
}

double map_evaluate(std::span<const int> candidate_labels, std::span<const std::size_t> order,
                    std::size_t k) {
  const auto labels = labels_in_order(candidate_labels, order);
  return map_at_k(labels, k, candidate_labels);
}

ListScore metric_list_score(std::vector<int> candidate_labels, std::size_t k) {
  return [labels = std::move(candidate_labels), k](std::span<const std::size_t> order) {
    return metric_evaluate(labels, order, k);
  };
}

}  // namespace lastrank
