#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lastrank/tensor.hpp"

namespace lastrank {

// Named tensors in insertion order. flatten() walks entries in that order,
// so unflatten(flatten()) reproduces every value bit for bit.
class ParamSet {
 public:
  void add(std::string name, Tensor value);

  bool contains(std::string_view name) const noexcept;
  std::size_t index_of(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::size_t entry_count() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const Tensor& tensor(std::size_t i) const { return tensors_.at(i); }
  Tensor& tensor(std::size_t i) { return tensors_.at(i); }

  std::size_t flat_len() const noexcept;
  std::vector<double> flatten() const;
  // Same names and shapes as *this, values taken from flat.
  ParamSet unflatten(std::span<const double> flat) const;
  ParamSet zeros_like() const;

  bool same_structure(const ParamSet& other) const noexcept;
  bool identical(const ParamSet& other) const noexcept;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

// The subset of ParamSet entries that serving-time modification may touch.
// Masked coordinates are ordered by the ParamSet's entry order.
class AdaptableMask {
 public:
  AdaptableMask() = default;
  explicit AdaptableMask(std::set<std::string> names) : names_(std::move(names)) {}

  static AdaptableMask all(const ParamSet& params);

  const std::set<std::string>& names() const noexcept { return names_; }
  bool contains(std::string_view name) const;

  // Throws ContractViolation if a name is not an entry of params.
  void validate(const ParamSet& params) const;
  std::size_t masked_len(const ParamSet& params) const;
  std::vector<double> gather(const ParamSet& params) const;

 private:
  std::set<std::string> names_;
};

// Read-only view of a ParamSet with some entries replaced. The view refers
// to its base, which must outlive it; the base is never written.
class ParamView {
 public:
  ParamView(const ParamSet& base) : base_(&base) {}  // NOLINT: implicit by intent

  const Tensor& at(std::string_view name) const;
  const ParamSet& base() const noexcept { return *base_; }
  bool has_overrides() const noexcept { return !overrides_.empty(); }

  // Copy of the effective values.
  ParamSet materialize() const;

 private:
  friend ParamView axpy_overlay(const ParamSet&, const AdaptableMask&, std::span<const double>,
                                double);
  const ParamSet* base_;
  std::vector<std::pair<std::size_t, Tensor>> overrides_;
};

// base with the masked coordinates shifted by scale * delta.
ParamView axpy_overlay(const ParamSet& base, const AdaptableMask& mask,
                       std::span<const double> delta, double scale);

enum class NormKind { l2, l1, linf };

double vector_norm(std::span<const double> v, NormKind kind);

}  // namespace lastrank
