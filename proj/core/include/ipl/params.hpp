#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "ipl/grad_check.hpp"
#include "ipl/graph.hpp"

namespace ipl::nn {

/// 64-bit FNV-1a digest rendered as 16 hex digits.
std::string digest(std::string_view text);

/// Named parameter tensors plus the description of the model that produced
/// them. `spec_hash` is always digest(spec).
class ParamSet {
public:
  ParamSet() : spec_hash_(digest("")) {}
  explicit ParamSet(std::string spec) : spec_(std::move(spec)), spec_hash_(digest(spec_)) {}

  const std::string& spec() const noexcept { return spec_; }
  const std::string& spec_hash() const noexcept { return spec_hash_; }
  void set_spec(std::string spec);

  /// Adds a new parameter; throws on a duplicate name.
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);

  std::size_t size() const noexcept { return tensors_.size(); }
  bool empty() const noexcept { return tensors_.empty(); }
  std::size_t parameter_count() const;

  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }

  /// Copies every tensor of `other` under `prefix + name`.
  void merge(const std::string& prefix, const ParamSet& other);
  /// Tensors whose names start with `prefix`, with the prefix stripped.
  ParamSet extract(const std::string& prefix) const;

  /// All values concatenated in name order.
  Tensor flatten() const;
  /// Inverse of flatten().
  void unflatten(const Tensor& flat);

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    return a.spec_ == b.spec_ && a.tensors_ == b.tensors_;
  }

private:
  std::string spec_;
  std::string spec_hash_;
  std::map<std::string, Tensor> tensors_;
};

/// Gradient per parameter name.
using GradMap = std::map<std::string, Tensor>;

/// Parameters registered on a graph, either as differentiable leaves or as
/// frozen constants.
class BoundParams {
public:
  BoundParams() = default;

  Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }
  void set(const std::string& name, Var v) { vars_[name] = v; }

  /// View with `prefix` stripped from matching names.
  BoundParams sub(const std::string& prefix) const;

  /// Gradients of the trainable entries, keyed by name.
  GradMap gradients(const ad::Gradients& grads) const;

  auto begin() const { return vars_.begin(); }
  auto end() const { return vars_.end(); }

private:
  std::map<std::string, Var> vars_;
};

BoundParams bind(ad::Graph& graph, const ParamSet& params, bool trainable = true);

/// Finite-difference check of d(loss)/d(params) across every parameter
/// coordinate. `loss` is rebuilt on a fresh graph per probe.
using ParamLossFn = std::function<Var(ad::Graph&, const BoundParams&)>;
ad::GradCheckReport check_param_gradients(const ParamSet& params, const ParamLossFn& loss, double step, double tol);

}  // namespace ipl::nn
