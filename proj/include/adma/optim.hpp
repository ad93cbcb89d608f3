#pragma once

#include <cstdint>
#include <vector>

#include "adma/param.hpp"
#include "adma/tensor.hpp"

namespace adma {

enum class OptimKind { sgd, adam };

/// Update-rule hyperparameters. Adam defaults are the universal ones;
/// weight decay is classic gradient-coupled L2 applied to weights only.
struct OptimizerConfig {
    OptimKind kind = OptimKind::sgd;
    double lr = 1e-3;
    double momentum = 0.0;  // sgd only, in [0, 1)
    bool nesterov = false;
    double beta1 = 0.9;   // adam
    double beta2 = 0.999;  // adam
    double eps_hat = 1e-8;  // adam
    double weight_decay = 0.0;
};

/// Per-parameter moment/velocity buffers plus the hyperparameters.
/// Buffers are allocated on the first apply_update and must keep their
/// shapes afterwards; step_count increments by exactly 1 per call.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg);

    const OptimizerConfig& config() const { return cfg_; }
    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }
    std::uint64_t step_count() const { return step_count_; }

    /// One in-place update over the parameter list. Weight decay adds
    /// decay * param to the gradient of decay-eligible tensors first.
    /// Throws if any effective gradient is non-finite, naming the parameter.
    void apply_update(const std::vector<ParamRef>& params);

private:
    OptimizerConfig cfg_;
    std::uint64_t step_count_ = 0;
    std::vector<Tensor> velocity_;  // sgd
    std::vector<Tensor> moment1_;   // adam
    std::vector<Tensor> moment2_;   // adam
};

/// Learning-rate schedule: constant, or stepwise decay every n epochs.
struct LrSchedule {
    enum class Kind { constant, step_decay };
    Kind kind = Kind::constant;
    double base_lr = 1e-3;
    double factor = 0.5;      // step_decay
    int every_n_epochs = 10;  // step_decay
};

/// Effective learning rate at a zero-based epoch.
double lr_at(const LrSchedule& schedule, int epoch);

}  // namespace adma
