#include "ipl/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ipl::nn {

std::string digest(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ParamSet::set_spec(std::string spec) {
  spec_ = std::move(spec);
  spec_hash_ = digest(spec_);
}

void ParamSet::add(const std::string& name, Tensor value) {
  if (!tensors_.emplace(name, std::move(value)).second) {
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  }
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.size();
  return n;
}

void ParamSet::merge(const std::string& prefix, const ParamSet& other) {
  for (const auto& [name, t] : other) add(prefix + name, t);
}

ParamSet ParamSet::extract(const std::string& prefix) const {
  ParamSet out;
  for (const auto& [name, t] : tensors_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.add(name.substr(prefix.size()), t);
  }
  return out;
}

Tensor ParamSet::flatten() const {
  std::vector<double> values;
  values.reserve(parameter_count());
  for (const auto& [name, t] : tensors_) values.insert(values.end(), t.values().begin(), t.values().end());
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

void ParamSet::unflatten(const Tensor& flat) {
  if (flat.size() != parameter_count()) throw ShapeError("unflatten: size mismatch");
  std::size_t offset = 0;
  for (auto& [name, t] : tensors_) {
    std::copy_n(flat.values().begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.values().begin());
    offset += t.size();
  }
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("no bound parameter named '" + name + "'");
  return it->second;
}

BoundParams BoundParams::sub(const std::string& prefix) const {
  BoundParams out;
  for (const auto& [name, v] : vars_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.vars_.emplace(name.substr(prefix.size()), v);
  }
  return out;
}

GradMap BoundParams::gradients(const ad::Gradients& grads) const {
  GradMap out;
  for (const auto& [name, v] : vars_) {
    if (v.graph->kind(v) == ad::OpKind::Leaf) out.emplace(name, grads[v]);
  }
  return out;
}

BoundParams bind(ad::Graph& graph, const ParamSet& params, bool trainable) {
  BoundParams out;
  for (const auto& [name, t] : params) out.set(name, trainable ? graph.leaf(t) : graph.constant(t));
  return out;
}

ad::GradCheckReport check_param_gradients(const ParamSet& params, const ParamLossFn& loss, double step, double tol) {
  if (!(step > 0.0)) throw std::invalid_argument("check_param_gradients: step must be positive");

  Tensor analytic;
  {
    ad::Graph g;
    const BoundParams bound = bind(g, params, true);
    const Var out = loss(g, bound);
    const GradMap grads = bound.gradients(g.backward(out));
    ParamSet as_set;
    for (const auto& [name, t] : grads) as_set.add(name, t);
    analytic = as_set.flatten();
  }

  auto evaluate = [&](const ParamSet& p) {
    ad::Graph g;
    const double v = loss(g, bind(g, p, false)).value().item();
    if (!std::isfinite(v)) throw DomainError("check_param_gradients: loss is not finite at a probe point");
    return v;
  };

  ParamSet probe = params;
  Tensor flat = params.flatten();
  ad::GradCheckReport report;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double orig = flat[i];
    flat[i] = orig + step;
    probe.unflatten(flat);
    const double up = evaluate(probe);
    flat[i] = orig - step;
    probe.unflatten(flat);
    const double down = evaluate(probe);
    flat[i] = orig;

    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (i == 0 || rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
      report.analytic_at_worst = analytic[i];
      report.numeric_at_worst = numeric;
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

}  // namespace ipl::nn
