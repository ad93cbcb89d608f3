#include "adma/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace adma {

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
    if (!(cfg_.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (cfg_.momentum < 0.0 || cfg_.momentum >= 1.0) {
        throw std::invalid_argument("momentum must lie in [0, 1)");
    }
    if (cfg_.kind == OptimKind::adam) {
        if (cfg_.beta1 <= 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 <= 0.0 || cfg_.beta2 >= 1.0) {
            throw std::invalid_argument("adam betas must lie in (0, 1)");
        }
        if (!(cfg_.eps_hat > 0.0)) throw std::invalid_argument("adam eps must be positive");
    }
    if (cfg_.weight_decay < 0.0) throw std::invalid_argument("weight decay must be >= 0");
}

void Optimizer::apply_update(const std::vector<ParamRef>& params) {
    if (velocity_.empty() && moment1_.empty()) {
        for (const ParamRef& p : params) {
            if (cfg_.kind == OptimKind::sgd) {
                velocity_.emplace_back(p.value->shape());
            } else {
                moment1_.emplace_back(p.value->shape());
                moment2_.emplace_back(p.value->shape());
            }
        }
    }
    const std::size_t expected =
        cfg_.kind == OptimKind::sgd ? velocity_.size() : moment1_.size();
    if (params.size() != expected) {
        throw std::invalid_argument("optimizer was initialized for " + std::to_string(expected) +
                                    " parameters, got " + std::to_string(params.size()));
    }

    ++step_count_;
    const auto t = static_cast<double>(step_count_);
    const double bc1 = cfg_.kind == OptimKind::adam ? 1.0 - std::pow(cfg_.beta1, t) : 1.0;
    const double bc2 = cfg_.kind == OptimKind::adam ? 1.0 - std::pow(cfg_.beta2, t) : 1.0;

    for (std::size_t i = 0; i < params.size(); ++i) {
        const ParamRef& p = params[i];
        Tensor& value = *p.value;
        const Tensor& grad = *p.grad;
        if (!value.same_shape(grad)) {
            throw std::invalid_argument("parameter '" + p.name + "' value shape " +
                                        shape_str(value.shape()) + " does not match grad shape " +
                                        shape_str(grad.shape()));
        }
        Tensor& buf1 = cfg_.kind == OptimKind::sgd ? velocity_[i] : moment1_[i];
        if (!buf1.same_shape(value)) {
            throw std::invalid_argument("optimizer buffer shape mismatch for parameter '" +
                                        p.name + "'");
        }

        const std::size_t n = value.size();
        for (std::size_t j = 0; j < n; ++j) {
            double g = grad[j];
            if (p.decay_eligible && cfg_.weight_decay != 0.0) {
                g += cfg_.weight_decay * value[j];
            }
            if (!std::isfinite(g)) {
                throw std::runtime_error("non-finite gradient in parameter '" + p.name +
                                         "' at element " + std::to_string(j));
            }
            if (cfg_.kind == OptimKind::sgd) {
                double& v = velocity_[i][j];
                v = cfg_.momentum * v + g;
                const double d = cfg_.nesterov ? g + cfg_.momentum * v : v;
                value[j] -= cfg_.lr * d;
            } else {
                double& m = moment1_[i][j];
                double& v = moment2_[i][j];
                m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
                v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
                const double mh = m / bc1;
                const double vh = v / bc2;
                value[j] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps_hat);
            }
        }
    }
}

double lr_at(const LrSchedule& schedule, int epoch) {
    if (epoch < 0) throw std::invalid_argument("epoch must be >= 0");
    if (schedule.kind == LrSchedule::Kind::constant) return schedule.base_lr;
    if (schedule.every_n_epochs <= 0) {
        throw std::invalid_argument("step_decay interval must be positive");
    }
    const int steps = epoch / schedule.every_n_epochs;
    return schedule.base_lr * std::pow(schedule.factor, steps);
}

}  // namespace adma
