#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "adma/param.hpp"
#include "adma/rng.hpp"
#include "adma/tensor.hpp"

namespace adma {

enum class Activation { relu, elu, leaky_relu };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);

/// Per-call context threaded through layer forward passes.
struct ForwardCtx {
    bool train = false;
    Rng* rng = nullptr;  // consumed by dropout in train mode
};

class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& input, ForwardCtx& ctx) = 0;
    /// Consumes d(loss)/d(output), accumulates parameter grads, returns
    /// d(loss)/d(input). Requires a preceding train-mode forward.
    virtual Tensor backward(const Tensor& grad_out) = 0;

    virtual void collect_params(std::vector<ParamRef>&, const std::string&) {}
    virtual void zero_grads() {}
    virtual std::string kind() const = 0;
    /// Constructor arguments as JSON, enough to rebuild the layer.
    virtual nlohmann::json spec() const = 0;

    static std::unique_ptr<Layer> from_spec(const nlohmann::json& spec);
};

class Dense : public Layer {
public:
    Dense(std::size_t in, std::size_t out);
    void init_he(Rng& rng);

    Tensor forward(const Tensor& input, ForwardCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out, const std::string& prefix) override;
    void zero_grads() override;
    std::string kind() const override { return "dense"; }
    nlohmann::json spec() const override;

    Tensor weight;  // (in, out)
    Tensor bias;    // (out)
    Tensor weight_grad;
    Tensor bias_grad;

private:
    std::size_t in_, out_;
    Tensor input_;  // cached train-mode batch
};

class Conv2d : public Layer {
public:
    /// Valid padding, square kernel, NHWC tensors.
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t stride);
    void init_he(Rng& rng);

    Tensor forward(const Tensor& input, ForwardCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out, const std::string& prefix) override;
    void zero_grads() override;
    std::string kind() const override { return "conv2d"; }
    nlohmann::json spec() const override;

    Tensor weight;  // (k, k, in_ch, out_ch)
    Tensor bias;    // (out_ch)
    Tensor weight_grad;
    Tensor bias_grad;

private:
    void im2col(const double* img, std::size_t h, std::size_t w, double* col) const;

    std::size_t in_ch_, out_ch_, k_, stride_;
    Tensor input_;
};

class MaxPool : public Layer {
public:
    explicit MaxPool(std::size_t k);

    Tensor forward(const Tensor& input, ForwardCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "maxpool"; }
    nlohmann::json spec() const override;

private:
    std::size_t k_;
    std::vector<std::size_t> argmax_;  // flat input index per output cell
    std::vector<std::size_t> in_shape_;
};

class Flatten : public Layer {
public:
    Tensor forward(const Tensor& input, ForwardCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "flatten"; }
    nlohmann::json spec() const override;

private:
    std::vector<std::size_t> in_shape_;
};

class Dropout : public Layer {
public:
    explicit Dropout(double rate);  // rate in [0, 1)

    Tensor forward(const Tensor& input, ForwardCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "dropout"; }
    nlohmann::json spec() const override;

    double rate() const { return rate_; }
    /// Reuse the last sampled mask on subsequent train forwards; lets a
    /// finite-difference check evaluate a fixed realization.
    void freeze_mask(bool on) { freeze_ = on; }

private:
    double rate_;
    bool freeze_ = false;
    Tensor mask_;  // inverted scaling: 1/keep or 0
};

class ActivationLayer : public Layer {
public:
    explicit ActivationLayer(Activation tag, double alpha = 1.0);

    Tensor forward(const Tensor& input, ForwardCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "activation"; }
    nlohmann::json spec() const override;

private:
    Activation tag_;
    double alpha_;
    Tensor input_;
};

/// Row-wise softmax with max subtraction. Backward applies the full
/// Jacobian-vector product so every loss plugs into the same head.
class Softmax : public Layer {
public:
    Tensor forward(const Tensor& input, ForwardCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "softmax"; }
    nlohmann::json spec() const override;

private:
    Tensor output_;
};

/// Ordered stack of layers with a train/eval mode and an owned RNG used
/// for initialization and dropout. Single-writer during training.
class Model {
public:
    Model() : rng_(0) {}
    explicit Model(std::uint64_t seed) : rng_(seed) {}

    void add(std::unique_ptr<Layer> layer);
    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

    void train_mode(bool on) { training_ = on; }
    bool training() const { return training_; }
    Rng& rng() { return rng_; }

    /// Runs the stack; caches intermediates for backward when training.
    Tensor forward(const Tensor& batch);
    /// Backpropagates d(loss)/d(predictions); requires a train-mode forward.
    void backward(const Tensor& grad_wrt_output);

    std::vector<ParamRef> parameters();
    std::size_t parameter_count();
    void zero_grads();

private:
    std::vector<std::unique_ptr<Layer>> layers_;
    bool training_ = false;
    bool backward_ready_ = false;
    Rng rng_;
};

/// Dense stack with He init: flatten, then per hidden width
/// dense -> activation (-> dropout), then dense -> softmax.
/// An empty hidden list yields plain logistic regression.
Model build_mlp(std::size_t in_dim, const std::vector<std::size_t>& hidden, std::size_t classes,
                Activation act, double dropout, std::uint64_t seed);

struct ConvNetSpec {
    std::size_t height = 28;
    std::size_t width = 28;
    std::size_t channels = 1;
    std::size_t base_channels = 8;
    std::size_t classes = 10;
    double dropout = 0.0;  // applied after flatten when > 0
};

/// Three blocks of conv3x3 -> ELU -> maxpool2 with channel widths
/// (c, 2c, 4c), then flatten -> dense -> softmax. Valid padding; inputs
/// whose spatial extent cannot survive the stack raise an underflow error.
Model build_convnet(const ConvNetSpec& spec, std::uint64_t seed);

/// Single-file checkpoint: magic + version header, JSON layer manifest,
/// then raw little-endian float64 parameter blocks. Exact layout in
/// docs/checkpoint_format.md.
void save_checkpoint(Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace adma
