#include "qtf/optimizer.hpp"

#include <cmath>

#include "qtf/errors.hpp"

namespace qtf {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ParameterError("learning rate must be > 0");
    if (epochs < 0) throw ParameterError("epochs must be >= 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ParameterError("Adam betas must lie in [0, 1)");
    }
    if (epsilon <= 0.0) throw ParameterError("Adam epsilon must be > 0");
}

GradientOptimizer::GradientOptimizer(const TrainConfig& config, int param_count)
    : config_(config),
      m_(VectorXd::Zero(param_count)),
      v_(VectorXd::Zero(param_count)) {
    config_.validate();
    if (param_count < 1) throw ParameterError("optimizer needs >= 1 parameter");
}

void GradientOptimizer::step(VectorXd& params, const VectorXd& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw DimensionError("optimizer parameter/gradient size mismatch");
    }
    if (config_.optimizer == TrainConfig::Optimizer::Sgd) {
        params -= config_.learning_rate * grad;
        return;
    }
    ++t_;
    m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
    v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseProduct(grad).eval();
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const VectorXd m_hat = m_ / bc1;
    const VectorXd v_hat = v_ / bc2;
    params -= config_.learning_rate *
              (m_hat.array() / (v_hat.array().sqrt() + config_.epsilon)).matrix();
}

void GradientOptimizer::reset() {
    m_.setZero();
    v_.setZero();
    t_ = 0;
}

} // namespace qtf
