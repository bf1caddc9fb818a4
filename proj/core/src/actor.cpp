#include "lastrank/actor.hpp"

#include <cmath>
#include <string>

#include "lastrank/error.hpp"

namespace lastrank {

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, double scale, Rng& rng) {
  const double limit = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w({fan_in, fan_out});
  for (double& v : w.data()) v = uniform(rng, -limit, limit);
  return w;
}

struct Weights {
  const Tensor& user_w;
  const Tensor& user_b;
  const Tensor& item_w;
  const Tensor& item_b;
  const Tensor& hidden_w;
  const Tensor& hidden_b;
  const Tensor& out_w;
  const Tensor& out_b;

  explicit Weights(const ParamView& p)
      : user_w(p.at(actor_param::kUserWeight)),
        user_b(p.at(actor_param::kUserBias)),
        item_w(p.at(actor_param::kItemWeight)),
        item_b(p.at(actor_param::kItemBias)),
        hidden_w(p.at(actor_param::kHiddenWeight)),
        hidden_b(p.at(actor_param::kHiddenBias)),
        out_w(p.at(actor_param::kOutWeight)),
        out_b(p.at(actor_param::kOutBias)) {}

  std::size_t hidden() const { return hidden_b.size(); }
};

// Per-request encodings and the request-constant parts of the scorer's
// first layer. The hidden weight is split by row blocks:
// [0,H) user, [H,2H) candidate, [2H,3H) context, 3H step feature.
struct Encoded {
  Tensor user_in;     // [1, Du]
  Tensor user_enc;    // [1, H]
  Tensor item_enc;    // [M, H]
  std::vector<double> user_proj;  // enc(u) W_u + b
  Tensor cand_proj;   // [M, H]  enc(c_j) W_c
  Tensor ctx_proj;    // [M, H]  enc(c_j) W_ctx
  Tensor user_block, cand_block, ctx_block;
};

Encoded encode(const Request& req, const Weights& w) {
  const std::size_t h = w.hidden();
  require(w.hidden_w.rows() == 3 * h + 1 && w.hidden_w.cols() == h,
          "actor scorer hidden weight must be [3H+1, H]");
  Encoded e;
  e.user_in = Tensor({1, req.user.size()}, req.user);
  e.user_enc = tanh_forward(affine_forward(e.user_in, w.user_w, w.user_b));
  e.item_enc = tanh_forward(affine_forward(req.candidates, w.item_w, w.item_b));
  e.user_block = w.hidden_w.row_slice(0, h);
  e.cand_block = w.hidden_w.row_slice(h, 2 * h);
  e.ctx_block = w.hidden_w.row_slice(2 * h, 3 * h);
  const Tensor user_proj = affine_forward(e.user_enc, e.user_block, w.hidden_b);
  e.user_proj.assign(user_proj.data().begin(), user_proj.data().end());
  const Tensor zero({h});
  e.cand_proj = affine_forward(e.item_enc, e.cand_block, zero);
  e.ctx_proj = affine_forward(e.item_enc, e.ctx_block, zero);
  return e;
}

// Scorer state at one decoding step.
struct Step {
  std::vector<bool> available;
  std::vector<double> ctx_mean;  // mean of ctx_proj over selected rows
  double step_feature = 0.0;
  Tensor hidden;                 // [M, H]; rows of unavailable items are unused
  std::vector<double> scores;
  std::vector<double> probs;
};

void score_step(const Encoded& e, const Weights& w, Step& s) {
  const std::size_t m = e.cand_proj.rows();
  const std::size_t h = w.hidden();
  const auto step_row = w.hidden_w.row(3 * h);
  s.hidden = Tensor({m, h});
  s.scores.assign(m, 0.0);
  const auto ow = w.out_w.data();
  for (std::size_t j = 0; j < m; ++j) {
    if (!s.available[j]) continue;
    auto hj = s.hidden.row(j);
    const auto cp = e.cand_proj.row(j);
    double score = w.out_b[0];
    for (std::size_t k = 0; k < h; ++k) {
      const double pre =
          e.user_proj[k] + cp[k] + s.ctx_mean[k] + step_row[k] * s.step_feature;
      hj[k] = std::tanh(pre);
      score += hj[k] * ow[k];
    }
    s.scores[j] = score;
  }
  s.probs = masked_softmax(s.scores, s.available);
}

// Runs the sequential decoder; `choose(step, t)` returns the index picked at
// step t. When keep_steps is set, every step's state is retained for the
// backward pass.
template <class Chooser>
GeneratedList decode(const Request& req, const Encoded& e, const Weights& w, Chooser&& choose,
                     std::vector<Step>* keep_steps) {
  const std::size_t m = req.candidate_count();
  const std::size_t n = req.list_len;
  const std::size_t h = w.hidden();
  GeneratedList out;
  out.order.reserve(n);
  out.step_probs.reserve(n);
  std::vector<bool> available(m, true);
  std::vector<double> ctx_sum(h, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    Step s;
    s.available = available;
    s.ctx_mean.assign(h, 0.0);
    if (t > 0) {
      for (std::size_t k = 0; k < h; ++k) s.ctx_mean[k] = ctx_sum[k] / static_cast<double>(t);
    }
    s.step_feature = static_cast<double>(t) / static_cast<double>(n);
    score_step(e, w, s);
    const std::size_t pick = choose(s, t);
    out.order.push_back(pick);
    out.step_probs.push_back(s.probs[pick]);
    out.log_prob += std::log(s.probs[pick]);
    available[pick] = false;
    const auto cp = e.ctx_proj.row(pick);
    for (std::size_t k = 0; k < h; ++k) ctx_sum[k] += cp[k];
    if (keep_steps) keep_steps->push_back(std::move(s));
  }
  return out;
}

void check_order(const Request& req, std::span<const std::size_t> order) {
  const std::size_t m = req.candidate_count();
  require(order.size() == req.list_len, "order length " + std::to_string(order.size()) +
                                            " differs from list length " +
                                            std::to_string(req.list_len));
  std::vector<bool> seen(m, false);
  for (std::size_t idx : order) {
    require(idx < m, "order index " + std::to_string(idx) + " out of range");
    require(!seen[idx], "order repeats index " + std::to_string(idx));
    seen[idx] = true;
  }
}

std::size_t argmax_lowest(const std::vector<double>& probs, const std::vector<bool>& available) {
  std::size_t best = probs.size();
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (!available[j]) continue;
    if (best == probs.size() || probs[j] > probs[best]) best = j;
  }
  return best;
}

}  // namespace

void Request::validate(const ModelDims& dims) const {
  require(user.size() == dims.user_dim, "user feature length " + std::to_string(user.size()) +
                                            " != " + std::to_string(dims.user_dim));
  require(candidates.rank() == 2 && candidates.cols() == dims.item_dim,
          "candidate rows must have " + std::to_string(dims.item_dim) + " features");
  const std::size_t m = candidate_count();
  require(list_len >= 1, "list length must be at least 1");
  require(list_len <= m, "list length " + std::to_string(list_len) + " exceeds candidate count " +
                             std::to_string(m));
  for (double v : user) require(std::isfinite(v), "non-finite user feature");
  for (double v : candidates.data()) require(std::isfinite(v), "non-finite candidate feature");
}

ParamSet init_actor_params(const ModelDims& dims, std::uint64_t seed, double scale) {
  Rng rng(seed);
  const std::size_t h = dims.hidden;
  ParamSet p;
  p.add(actor_param::kUserWeight, glorot(dims.user_dim, h, scale, rng));
  p.add(actor_param::kUserBias, Tensor({h}));
  p.add(actor_param::kItemWeight, glorot(dims.item_dim, h, scale, rng));
  p.add(actor_param::kItemBias, Tensor({h}));
  p.add(actor_param::kHiddenWeight, glorot(3 * h + 1, h, scale, rng));
  p.add(actor_param::kHiddenBias, Tensor({h}));
  p.add(actor_param::kOutWeight, glorot(h, 1, scale, rng));
  p.add(actor_param::kOutBias, Tensor({1}));
  return p;
}

ModelDims actor_dims(const ParamSet& params) {
  ModelDims d;
  d.user_dim = params.at(actor_param::kUserWeight).rows();
  d.item_dim = params.at(actor_param::kItemWeight).rows();
  d.hidden = params.at(actor_param::kUserWeight).cols();
  return d;
}

AdaptableMask default_actor_mask() {
  return AdaptableMask({actor_param::kHiddenWeight, actor_param::kHiddenBias,
                        actor_param::kOutWeight, actor_param::kOutBias});
}

GeneratedList generate(const Request& request, const ParamView& params, Decoding mode, Rng* rng) {
  const Weights w(params);
  request.validate(actor_dims(params.base()));
  require(mode == Decoding::greedy || rng != nullptr, "sampling decode needs an rng");
  const Encoded e = encode(request, w);
  if (mode == Decoding::greedy) {
    return decode(
        request, e, w, [](const Step& s, std::size_t) { return argmax_lowest(s.probs, s.available); },
        nullptr);
  }
  return decode(
      request, e, w, [rng](const Step& s, std::size_t) { return sample_index(s.probs, *rng); },
      nullptr);
}

GeneratedList list_log_prob(const Request& request, const ParamView& params,
                            std::span<const std::size_t> order) {
  const Weights w(params);
  request.validate(actor_dims(params.base()));
  check_order(request, order);
  const Encoded e = encode(request, w);
  return decode(
      request, e, w, [order](const Step&, std::size_t t) { return order[t]; }, nullptr);
}

double path_entropy(const Request& request, const ParamView& params,
                    std::span<const std::size_t> order) {
  const Weights w(params);
  request.validate(actor_dims(params.base()));
  check_order(request, order);
  const Encoded e = encode(request, w);
  std::vector<Step> steps;
  decode(
      request, e, w, [order](const Step&, std::size_t t) { return order[t]; }, &steps);
  double total = 0.0;
  for (const Step& s : steps) {
    for (std::size_t j = 0; j < s.probs.size(); ++j) {
      if (s.available[j] && s.probs[j] > 0.0) total -= s.probs[j] * std::log(s.probs[j]);
    }
  }
  return total;
}

double accumulate_actor_grad(const Request& request, const ParamView& params,
                             std::span<const std::size_t> order, double logp_weight,
                             double entropy_weight, ParamSet& grads) {
  const Weights w(params);
  const ModelDims dims = actor_dims(params.base());
  request.validate(dims);
  check_order(request, order);
  require(grads.same_structure(params.base()), "gradient buffer does not match actor params");

  const Encoded e = encode(request, w);
  std::vector<Step> steps;
  const GeneratedList forced = decode(
      request, e, w, [order](const Step&, std::size_t t) { return order[t]; }, &steps);

  const std::size_t m = request.candidate_count();
  const std::size_t h = dims.hidden;
  const auto ow = w.out_w.data();

  std::vector<double> d_user_proj(h, 0.0);
  Tensor d_cand_proj({m, h});
  Tensor d_ctx_proj({m, h});
  std::vector<double> d_step_row(h, 0.0);
  Tensor& g_out_w = grads.at(actor_param::kOutWeight);
  Tensor& g_out_b = grads.at(actor_param::kOutBias);
  std::vector<double> d_pre(h);

  for (std::size_t t = 0; t < steps.size(); ++t) {
    const Step& s = steps[t];
    double entropy = 0.0;
    if (entropy_weight != 0.0) {
      for (std::size_t j = 0; j < m; ++j) {
        if (s.available[j] && s.probs[j] > 0.0) entropy -= s.probs[j] * std::log(s.probs[j]);
      }
    }
    std::vector<double> d_ctx_mean(h, 0.0);
    bool ctx_used = false;
    for (std::size_t j = 0; j < m; ++j) {
      if (!s.available[j]) continue;
      const double p = s.probs[j];
      // d log softmax_chosen / d score_j = [j == chosen] - p_j
      double d_score = logp_weight * ((j == order[t] ? 1.0 : 0.0) - p);
      // d H / d score_j = -p_j (log p_j + H)
      if (entropy_weight != 0.0 && p > 0.0) {
        d_score += entropy_weight * (-p * (std::log(p) + entropy));
      }
      if (d_score == 0.0) continue;
      const auto hj = s.hidden.row(j);
      for (std::size_t k = 0; k < h; ++k) {
        g_out_w[k] += d_score * hj[k];
        d_pre[k] = d_score * ow[k] * (1.0 - hj[k] * hj[k]);
      }
      g_out_b[0] += d_score;
      auto dcp = d_cand_proj.row(j);
      for (std::size_t k = 0; k < h; ++k) {
        d_user_proj[k] += d_pre[k];
        dcp[k] += d_pre[k];
        d_step_row[k] += s.step_feature * d_pre[k];
        d_ctx_mean[k] += d_pre[k];
      }
      ctx_used = true;
    }
    // The context mean at step t averages ctx_proj of the first t picks.
    if (t > 0 && ctx_used) {
      const double inv = 1.0 / static_cast<double>(t);
      for (std::size_t r = 0; r < t; ++r) {
        auto dxp = d_ctx_proj.row(order[r]);
        for (std::size_t k = 0; k < h; ++k) dxp[k] += d_ctx_mean[k] * inv;
      }
    }
  }

  // Scorer first layer.
  Tensor& g_hidden_w = grads.at(actor_param::kHiddenWeight);
  Tensor& g_hidden_b = grads.at(actor_param::kHiddenBias);
  for (std::size_t k = 0; k < h; ++k) g_hidden_b[k] += d_user_proj[k];

  Tensor d_user_proj_t({1, h}, d_user_proj);
  const AffineGrads ug = affine_backward(d_user_proj_t, e.user_enc, e.user_block);
  const AffineGrads cg = affine_backward(d_cand_proj, e.item_enc, e.cand_block);
  const AffineGrads xg = affine_backward(d_ctx_proj, e.item_enc, e.ctx_block);
  {
    auto gw = g_hidden_w.data();
    const auto add_block = [&](const Tensor& block_grad, std::size_t row0) {
      const auto src = block_grad.data();
      for (std::size_t i = 0; i < src.size(); ++i) gw[row0 * h + i] += src[i];
    };
    add_block(ug.weight, 0);
    add_block(cg.weight, h);
    add_block(xg.weight, 2 * h);
    auto last_row = g_hidden_w.row(3 * h);
    for (std::size_t k = 0; k < h; ++k) last_row[k] += d_step_row[k];
  }

  // Encoders.
  Tensor d_item_enc = cg.input;
  {
    auto a = d_item_enc.data();
    const auto b = xg.input.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  }
  const AffineGrads ue =
      affine_backward(tanh_backward(ug.input, e.user_enc), e.user_in, w.user_w);
  const AffineGrads ie =
      affine_backward(tanh_backward(d_item_enc, e.item_enc), request.candidates, w.item_w);
  const auto add_into = [](Tensor& dst, const Tensor& src) {
    auto d = dst.data();
    const auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  };
  add_into(grads.at(actor_param::kUserWeight), ue.weight);
  add_into(grads.at(actor_param::kUserBias), ue.bias);
  add_into(grads.at(actor_param::kItemWeight), ie.weight);
  add_into(grads.at(actor_param::kItemBias), ie.bias);
  return forced.log_prob;
}

std::vector<double> grad_log_prob(const Request& request, const ParamView& params,
                                  std::span<const std::size_t> order, const AdaptableMask& mask) {
  mask.validate(params.base());
  ParamSet grads = params.base().zeros_like();
  accumulate_actor_grad(request, params, order, 1.0, 0.0, grads);
  return mask.gather(grads);
}

}  // namespace lastrank
