#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace bleubound {

enum class OptimizerKind { Adam, Sgd };

// Throws InvalidConfig on an unknown name ("adam" or "sgd").
OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind kind) noexcept;

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First-order minimizer over a flat parameter vector.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // params -= update(grad). grad is the gradient of the loss being minimized.
  virtual void step(std::span<double> params, std::span<const double> grad) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double learning_rate) : lr_(learning_rate) {}
  void step(std::span<double> params, std::span<const double> grad) override;

 private:
  double lr_;
};

class Adam final : public Optimizer {
 public:
  Adam(std::size_t size, double learning_rate, AdamParams params = {});
  void step(std::span<double> params, std::span<const double> grad) override;
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  double lr_;
  AdamParams p_;
  std::size_t t_ = 0;
  double beta1_pow_ = 1.0;
  double beta2_pow_ = 1.0;
  std::vector<double> m_;
  std::vector<double> v_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t size,
                                          double learning_rate, const AdamParams& adam = {});

}  // namespace bleubound
