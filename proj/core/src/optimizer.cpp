#include "bleubound/optimizer.hpp"

#include <cmath>
#include <string>

#include "bleubound/errors.hpp"
#include "detail/kernels.hpp"

namespace bleubound {
namespace {

BLEUBOUND_VECTOR_CLONES
void adam_update(double* params, const double* grad, double* m, double* v, std::size_t n,
                 const AdamParams& p, double lr, double c1, double c2) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g;
    v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g * g;
    params[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + p.epsilon);
  }
}

}  // namespace

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::Sgd;
  throw InvalidConfig("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

std::string_view to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

void Sgd::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw ShapeMismatch("sgd: parameter/gradient size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
}

Adam::Adam(std::size_t size, double learning_rate, AdamParams params)
    : lr_(learning_rate), p_(params), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ShapeMismatch("adam: parameter/gradient size mismatch");
  }
  ++t_;
  beta1_pow_ *= p_.beta1;
  beta2_pow_ *= p_.beta2;
  const double c1 = 1.0 / (1.0 - beta1_pow_);
  const double c2 = 1.0 / (1.0 - beta2_pow_);
  adam_update(params.data(), grad.data(), m_.data(), v_.data(), params.size(), p_, lr_, c1, c2);
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t size,
                                          double learning_rate, const AdamParams& adam) {
  if (!(learning_rate > 0.0)) throw InvalidConfig("learning rate must be positive");
  if (kind == OptimizerKind::Sgd) return std::make_unique<Sgd>(learning_rate);
  return std::make_unique<Adam>(size, learning_rate, adam);
}

}  // namespace bleubound
