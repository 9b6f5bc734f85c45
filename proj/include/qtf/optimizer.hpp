#pragma once

#include <cstdint>

#include "qtf/types.hpp"

namespace qtf {

struct TrainConfig {
    enum class Optimizer { Adam, Sgd };

    double learning_rate = 0.01;
    int epochs = 200;
    Optimizer optimizer = Optimizer::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    uint64_t seed = 0;

    void validate() const;
};

/// First-order update engine holding Adam moment state. One instance per
/// parameter vector being optimized; step() applies one update in place.
class GradientOptimizer {
  public:
    GradientOptimizer(const TrainConfig& config, int param_count);

    void step(VectorXd& params, const VectorXd& grad);
    void reset();

  private:
    TrainConfig config_;
    VectorXd m_;
    VectorXd v_;
    long t_ = 0;
};

} // namespace qtf
