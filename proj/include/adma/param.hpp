#pragma once

#include <string>

#include "adma/tensor.hpp"

namespace adma {

/// Named view of one trainable tensor and its gradient accumulator.
/// decay_eligible marks weights; biases are exempt from L2 decay.
struct ParamRef {
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
    bool decay_eligible = true;
    std::string name;
};

}  // namespace adma
