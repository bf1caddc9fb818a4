#include "lastrank/param_set.hpp"

#include <algorithm>
#include <cmath>

#include "lastrank/error.hpp"

namespace lastrank {

void ParamSet::add(std::string name, Tensor value) {
  require(!contains(name), "duplicate parameter name: " + name);
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
}

bool ParamSet::contains(std::string_view name) const noexcept {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t ParamSet::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ContractViolation("unknown parameter: " + std::string(name));
  return static_cast<std::size_t>(it - names_.begin());
}

const Tensor& ParamSet::at(std::string_view name) const { return tensors_[index_of(name)]; }
Tensor& ParamSet::at(std::string_view name) { return tensors_[index_of(name)]; }

std::size_t ParamSet::flat_len() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(flat_len());
  for (const auto& t : tensors_) flat.insert(flat.end(), t.data().begin(), t.data().end());
  return flat;
}

ParamSet ParamSet::unflatten(std::span<const double> flat) const {
  require(flat.size() == flat_len(), "unflatten: expected " + std::to_string(flat_len()) +
                                         " values, got " + std::to_string(flat.size()));
  ParamSet out;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const std::size_t n = tensors_[i].size();
    out.add(names_[i],
            Tensor(tensors_[i].shape(), std::vector<double>(flat.begin() + offset,
                                                            flat.begin() + offset + n)));
    offset += n;
  }
  return out;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], Tensor(tensors_[i].shape()));
  return out;
}

bool ParamSet::same_structure(const ParamSet& other) const noexcept {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (!tensors_[i].same_shape(other.tensors_[i])) return false;
  }
  return true;
}

bool ParamSet::identical(const ParamSet& other) const noexcept {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (!tensors_[i].identical(other.tensors_[i])) return false;
  }
  return true;
}

AdaptableMask AdaptableMask::all(const ParamSet& params) {
  return AdaptableMask(std::set<std::string>(params.names().begin(), params.names().end()));
}

bool AdaptableMask::contains(std::string_view name) const {
  return names_.find(std::string(name)) != names_.end();
}

void AdaptableMask::validate(const ParamSet& params) const {
  for (const auto& name : names_) {
    require(params.contains(name), "adaptable mask names unknown parameter: " + name);
  }
}

std::size_t AdaptableMask::masked_len(const ParamSet& params) const {
  validate(params);
  std::size_t n = 0;
  for (std::size_t i = 0; i < params.entry_count(); ++i) {
    if (contains(params.names()[i])) n += params.tensor(i).size();
  }
  return n;
}

std::vector<double> AdaptableMask::gather(const ParamSet& params) const {
  validate(params);
  std::vector<double> out;
  for (std::size_t i = 0; i < params.entry_count(); ++i) {
    if (!contains(params.names()[i])) continue;
    const auto d = params.tensor(i).data();
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

const Tensor& ParamView::at(std::string_view name) const {
  const std::size_t idx = base_->index_of(name);
  for (const auto& [i, t] : overrides_) {
    if (i == idx) return t;
  }
  return base_->tensor(idx);
}

ParamSet ParamView::materialize() const {
  ParamSet out;
  for (const auto& name : base_->names()) out.add(name, at(name));
  return out;
}

ParamView axpy_overlay(const ParamSet& base, const AdaptableMask& mask,
                       std::span<const double> delta, double scale) {
  const std::size_t expected = mask.masked_len(base);
  require(delta.size() == expected, "axpy_overlay: delta has " + std::to_string(delta.size()) +
                                        " values, mask covers " + std::to_string(expected));
  ParamView view(base);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < base.entry_count(); ++i) {
    if (!mask.contains(base.names()[i])) continue;
    Tensor shifted = base.tensor(i);
    auto d = shifted.data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += scale * delta[offset + k];
    offset += d.size();
    view.overrides_.emplace_back(i, std::move(shifted));
  }
  return view;
}

double vector_norm(std::span<const double> v, NormKind kind) {
  switch (kind) {
    case NormKind::l2:
      return l2_norm(v);
    case NormKind::l1: {
      double s = 0.0;
      for (double x : v) s += std::abs(x);
      return s;
    }
    case NormKind::linf: {
      double m = 0.0;
      for (double x : v) m = std::max(m, std::abs(x));
      return m;
    }
  }
  return 0.0;
}

}  // namespace lastrank
