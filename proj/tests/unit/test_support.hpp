#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lastrank/actor.hpp"
#include "lastrank/param_set.hpp"

namespace lastrank::oracle {

inline Request random_request(std::size_t m, std::size_t n, const ModelDims& dims,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Request r;
  r.user.resize(dims.user_dim);
  for (double& v : r.user) v = d(rng);
  r.candidates = Tensor({m, dims.item_dim});
  for (double& v : r.candidates.data()) v = d(rng);
  r.list_len = n;
  return r;
}

// All ordered n-of-m index sequences in lexicographic order.
inline std::vector<std::vector<std::size_t>> all_arrangements(std::size_t m, std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::vector<bool> used(m, false);
  std::function<void()> rec = [&] {
    if (cur.size() == n) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (used[i]) continue;
      used[i] = true;
      cur.push_back(i);
      rec();
      cur.pop_back();
      used[i] = false;
    }
  };
  rec();
  return out;
}

// Symmetric relative error with a floor on the denominator.
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Five-point central difference of f with respect to flat coordinate
// `index` of the masked coordinates of params.
inline double central_difference(const ParamSet& params, const AdaptableMask& mask,
                                 std::size_t index, double h,
                                 const std::function<double(const ParamView&)>& f) {
  std::vector<double> e(mask.masked_len(params), 0.0);
  e[index] = 1.0;
  const auto at = [&](double s) { return f(axpy_overlay(params, mask, e, s)); };
  return (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
}

}  // namespace lastrank::oracle
