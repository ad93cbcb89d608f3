#include "adma/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace adma {

using nlohmann::json;

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "elu") return Activation::elu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::elu: return "elu";
        case Activation::leaky_relu: return "leaky_relu";
    }
    return "?";
}

// ---------------------------------------------------------------- dense

Dense::Dense(std::size_t in, std::size_t out)
    : weight({in, out}), bias({out}), weight_grad({in, out}), bias_grad({out}),
      in_(in), out_(out) {
    if (in == 0 || out == 0) throw std::invalid_argument("dense dims must be >= 1");
}

void Dense::init_he(Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_));
    for (std::size_t i = 0; i < weight.size(); ++i) weight[i] = stddev * rng.gaussian();
    bias.fill(0.0);
}

Tensor Dense::forward(const Tensor& input, ForwardCtx& ctx) {
    if (input.rank() != 2 || input.dim(1) != in_) {
        throw std::invalid_argument("dense(" + std::to_string(in_) + "," + std::to_string(out_) +
                                    ") cannot take input " + shape_str(input.shape()));
    }
    if (ctx.train) input_ = input;
    Tensor out = matmul(input, weight);
    const std::size_t rows = out.dim(0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < out_; ++c) out(r, c) += bias[c];
    return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const Tensor dw = matmul(transpose(input_), grad_out);
    for (std::size_t i = 0; i < weight_grad.size(); ++i) weight_grad[i] += dw[i];
    const std::size_t rows = grad_out.dim(0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < out_; ++c) bias_grad[c] += grad_out(r, c);
    return matmul(grad_out, transpose(weight));
}

void Dense::collect_params(std::vector<ParamRef>& out, const std::string& prefix) {
    out.push_back({&weight, &weight_grad, true, prefix + ".weight"});
    out.push_back({&bias, &bias_grad, false, prefix + ".bias"});
}

void Dense::zero_grads() {
    weight_grad.fill(0.0);
    bias_grad.fill(0.0);
}

json Dense::spec() const { return {{"kind", "dense"}, {"in", in_}, {"out", out_}}; }

// ---------------------------------------------------------------- conv2d

Conv2d::Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t stride)
    : weight({k, k, in_ch, out_ch}), bias({out_ch}),
      weight_grad({k, k, in_ch, out_ch}), bias_grad({out_ch}),
      in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride) {
    if (in_ch == 0 || out_ch == 0 || k == 0 || stride == 0) {
        throw std::invalid_argument("conv2d dims must be >= 1");
    }
}

void Conv2d::init_he(Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(k_ * k_ * in_ch_));
    for (std::size_t i = 0; i < weight.size(); ++i) weight[i] = stddev * rng.gaussian();
    bias.fill(0.0);
}

void Conv2d::im2col(const double* img, std::size_t h, std::size_t w, double* col) const {
    const std::size_t oh = (h - k_) / stride_ + 1;
    const std::size_t ow = (w - k_) / stride_ + 1;
    const std::size_t row_len = k_ * k_ * in_ch_;
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            double* row = col + (oy * ow + ox) * row_len;
            for (std::size_t ky = 0; ky < k_; ++ky) {
                for (std::size_t kx = 0; kx < k_; ++kx) {
                    const double* src =
                        img + ((oy * stride_ + ky) * w + (ox * stride_ + kx)) * in_ch_;
                    std::memcpy(row + (ky * k_ + kx) * in_ch_, src, in_ch_ * sizeof(double));
                }
            }
        }
    }
}

Tensor Conv2d::forward(const Tensor& input, ForwardCtx& ctx) {
    if (input.rank() != 4 || input.dim(3) != in_ch_) {
        throw std::invalid_argument("conv2d expects (batch, h, w, " + std::to_string(in_ch_) +
                                    ") input, got " + shape_str(input.shape()));
    }
    const std::size_t b = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h < k_ || w < k_) {
        throw std::invalid_argument("conv2d kernel " + std::to_string(k_) +
                                    " does not fit input " + shape_str(input.shape()));
    }
    if (ctx.train) input_ = input;
    const std::size_t oh = (h - k_) / stride_ + 1;
    const std::size_t ow = (w - k_) / stride_ + 1;
    const std::size_t row_len = k_ * k_ * in_ch_;

    const Tensor w2 = weight.reshaped({row_len, out_ch_});
    Tensor out({b, oh, ow, out_ch_});
    Tensor col({oh * ow, row_len});
    for (std::size_t i = 0; i < b; ++i) {
        im2col(input.data() + i * h * w * in_ch_, h, w, col.data());
        Tensor prod = matmul(col, w2);  // (oh*ow, out_ch)
        double* dst = out.data() + i * oh * ow * out_ch_;
        for (std::size_t r = 0; r < oh * ow; ++r)
            for (std::size_t c = 0; c < out_ch_; ++c) dst[r * out_ch_ + c] = prod(r, c) + bias[c];
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const std::size_t b = input_.dim(0), h = input_.dim(1), w = input_.dim(2);
    const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
    const std::size_t row_len = k_ * k_ * in_ch_;

    const Tensor w2t = transpose(weight.reshaped({row_len, out_ch_}));  // (out_ch, row_len)
    Tensor grad_in(input_.shape());
    Tensor col({oh * ow, row_len});
    for (std::size_t i = 0; i < b; ++i) {
        im2col(input_.data() + i * h * w * in_ch_, h, w, col.data());
        const Tensor g({oh * ow, out_ch_},
                       std::vector<double>(grad_out.data() + i * oh * ow * out_ch_,
                                           grad_out.data() + (i + 1) * oh * ow * out_ch_));
        const Tensor dw = matmul(transpose(col), g);  // (row_len, out_ch)
        for (std::size_t j = 0; j < weight_grad.size(); ++j) weight_grad[j] += dw[j];
        for (std::size_t r = 0; r < oh * ow; ++r)
            for (std::size_t c = 0; c < out_ch_; ++c) bias_grad[c] += g(r, c);

        const Tensor dcol = matmul(g, w2t);  // (oh*ow, row_len)
        double* dimg = grad_in.data() + i * h * w * in_ch_;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double* row = dcol.data() + (oy * ow + ox) * row_len;
                for (std::size_t ky = 0; ky < k_; ++ky) {
                    for (std::size_t kx = 0; kx < k_; ++kx) {
                        double* dst =
                            dimg + ((oy * stride_ + ky) * w + (ox * stride_ + kx)) * in_ch_;
                        const double* src = row + (ky * k_ + kx) * in_ch_;
                        for (std::size_t ci = 0; ci < in_ch_; ++ci) dst[ci] += src[ci];
                    }
                }
            }
        }
    }
    return grad_in;
}

void Conv2d::collect_params(std::vector<ParamRef>& out, const std::string& prefix) {
    out.push_back({&weight, &weight_grad, true, prefix + ".weight"});
    out.push_back({&bias, &bias_grad, false, prefix + ".bias"});
}

void Conv2d::zero_grads() {
    weight_grad.fill(0.0);
    bias_grad.fill(0.0);
}

json Conv2d::spec() const {
    return {{"kind", "conv2d"}, {"in_ch", in_ch_}, {"out_ch", out_ch_},
            {"k", k_}, {"stride", stride_}};
}

// ---------------------------------------------------------------- maxpool

MaxPool::MaxPool(std::size_t k) : k_(k) {
    if (k == 0) throw std::invalid_argument("maxpool size must be >= 1");
}

Tensor MaxPool::forward(const Tensor& input, ForwardCtx& ctx) {
    if (input.rank() != 4) {
        throw std::invalid_argument("maxpool expects a rank-4 input, got " +
                                    shape_str(input.shape()));
    }
    const std::size_t b = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
    const std::size_t oh = h / k_, ow = w / k_;  // trailing rows/cols are dropped
    if (oh == 0 || ow == 0) {
        throw std::invalid_argument("maxpool window " + std::to_string(k_) +
                                    " underflows input " + shape_str(input.shape()));
    }
    if (ctx.train) {
        in_shape_ = input.shape();
        argmax_.assign(b * oh * ow * c, 0);
    }
    Tensor out({b, oh, ow, c});
    for (std::size_t i = 0; i < b; ++i) {
        const double* img = input.data() + i * h * w * c;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    double best = img[(oy * k_ * w + ox * k_) * c + ch];
                    std::size_t best_idx = (oy * k_ * w + ox * k_) * c + ch;
                    for (std::size_t ky = 0; ky < k_; ++ky) {
                        for (std::size_t kx = 0; kx < k_; ++kx) {
                            const std::size_t idx =
                                ((oy * k_ + ky) * w + (ox * k_ + kx)) * c + ch;
                            if (img[idx] > best) {  // ties keep the first cell
                                best = img[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const std::size_t out_idx = ((i * oh + oy) * ow + ox) * c + ch;
                    out[out_idx] = best;
                    if (ctx.train) argmax_[out_idx] = i * h * w * c + best_idx;
                }
            }
        }
    }
    return out;
}

Tensor MaxPool::backward(const Tensor& grad_out) {
    Tensor grad_in(in_shape_);
    for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[argmax_[i]] += grad_out[i];
    return grad_in;
}

json MaxPool::spec() const { return {{"kind", "maxpool"}, {"k", k_}}; }

// ---------------------------------------------------------------- flatten

Tensor Flatten::forward(const Tensor& input, ForwardCtx& ctx) {
    if (input.rank() < 2) {
        throw std::invalid_argument("flatten expects rank >= 2, got " + shape_str(input.shape()));
    }
    if (ctx.train) in_shape_ = input.shape();
    std::size_t rest = 1;
    for (std::size_t i = 1; i < input.rank(); ++i) rest *= input.dim(i);
    return input.reshaped({input.dim(0), rest});
}

Tensor Flatten::backward(const Tensor& grad_out) { return grad_out.reshaped(in_shape_); }

json Flatten::spec() const { return {{"kind", "flatten"}}; }

// ---------------------------------------------------------------- dropout

Dropout::Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must lie in [0, 1)");
}

Tensor Dropout::forward(const Tensor& input, ForwardCtx& ctx) {
    if (!ctx.train || rate_ == 0.0) return input;  // identity in eval mode
    if (!freeze_ || !mask_.same_shape(input)) {
        if (ctx.rng == nullptr) throw std::runtime_error("dropout needs an RNG in train mode");
        mask_ = Tensor(input.shape());
        const double keep = 1.0 - rate_;
        // inverted scaling keeps the train-time expectation at the input value
        for (std::size_t i = 0; i < mask_.size(); ++i) {
            mask_[i] = ctx.rng->uniform() >= rate_ ? 1.0 / keep : 0.0;
        }
    }
    return mul(input, mask_);
}

Tensor Dropout::backward(const Tensor& grad_out) {
    if (rate_ == 0.0) return grad_out;
    return mul(grad_out, mask_);
}

json Dropout::spec() const { return {{"kind", "dropout"}, {"rate", rate_}}; }

// ---------------------------------------------------------------- activation

ActivationLayer::ActivationLayer(Activation tag, double alpha) : tag_(tag), alpha_(alpha) {}

Tensor ActivationLayer::forward(const Tensor& input, ForwardCtx& ctx) {
    if (ctx.train) input_ = input;
    switch (tag_) {
        case Activation::relu: return map_unary(input, UnaryOp::Relu());
        case Activation::elu: return map_unary(input, UnaryOp::Elu(alpha_));
        case Activation::leaky_relu: return map_unary(input, UnaryOp::LeakyRelu(alpha_));
    }
    return input;
}

Tensor ActivationLayer::backward(const Tensor& grad_out) {
    Tensor grad_in(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        const double x = input_[i];
        double d = 1.0;
        switch (tag_) {
            case Activation::relu: d = x > 0.0 ? 1.0 : 0.0; break;
            case Activation::elu: d = x > 0.0 ? 1.0 : alpha_ * std::exp(x); break;
            case Activation::leaky_relu: d = x > 0.0 ? 1.0 : alpha_; break;
        }
        grad_in[i] = grad_out[i] * d;
    }
    return grad_in;
}

json ActivationLayer::spec() const {
    return {{"kind", "activation"}, {"tag", activation_name(tag_)}, {"alpha", alpha_}};
}

// ---------------------------------------------------------------- softmax

Tensor Softmax::forward(const Tensor& input, ForwardCtx& ctx) {
    if (input.rank() != 2) {
        throw std::invalid_argument("softmax expects rank-2 logits, got " +
                                    shape_str(input.shape()));
    }
    const std::size_t rows = input.dim(0), cols = input.dim(1);
    Tensor out(input.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* z = input.data() + r * cols;
        double* p = out.data() + r * cols;
        double m = z[0];
        for (std::size_t c = 1; c < cols; ++c) m = std::max(m, z[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            p[c] = std::exp(z[c] - m);
            sum += p[c];
        }
        for (std::size_t c = 0; c < cols; ++c) p[c] /= sum;
    }
    if (ctx.train) output_ = out;
    return out;
}

Tensor Softmax::backward(const Tensor& grad_out) {
    // full Jacobian product: dz_i = p_i * (g_i - sum_j g_j p_j)
    const std::size_t rows = grad_out.dim(0), cols = grad_out.dim(1);
    Tensor grad_in(grad_out.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* g = grad_out.data() + r * cols;
        const double* p = output_.data() + r * cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += g[c] * p[c];
        double* o = grad_in.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) o[c] = p[c] * (g[c] - dot);
    }
    return grad_in;
}

json Softmax::spec() const { return {{"kind", "softmax"}}; }

// ---------------------------------------------------------------- factory

std::unique_ptr<Layer> Layer::from_spec(const json& spec) {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "dense") {
        return std::make_unique<Dense>(spec.at("in").get<std::size_t>(),
                                       spec.at("out").get<std::size_t>());
    }
    if (kind == "conv2d") {
        return std::make_unique<Conv2d>(
            spec.at("in_ch").get<std::size_t>(), spec.at("out_ch").get<std::size_t>(),
            spec.at("k").get<std::size_t>(), spec.at("stride").get<std::size_t>());
    }
    if (kind == "maxpool") return std::make_unique<MaxPool>(spec.at("k").get<std::size_t>());
    if (kind == "flatten") return std::make_unique<Flatten>();
    if (kind == "dropout") return std::make_unique<Dropout>(spec.at("rate").get<double>());
    if (kind == "activation") {
        return std::make_unique<ActivationLayer>(
            activation_from_name(spec.at("tag").get<std::string>()),
            spec.at("alpha").get<double>());
    }
    if (kind == "softmax") return std::make_unique<Softmax>();
    throw std::invalid_argument("unknown layer kind '" + kind + "' in checkpoint manifest");
}

// ---------------------------------------------------------------- model

void Model::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

Tensor Model::forward(const Tensor& batch) {
    ForwardCtx ctx{training_, &rng_};
    Tensor x = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        try {
            x = layers_[i]->forward(x, ctx);
        } catch (const std::exception& e) {
            throw std::runtime_error("forward failed at layer " + std::to_string(i) + " (" +
                                     layers_[i]->kind() + "): " + e.what());
        }
    }
    backward_ready_ = training_;
    return x;
}

void Model::backward(const Tensor& grad_wrt_output) {
    if (!backward_ready_) {
        throw std::runtime_error("backward called without a preceding train-mode forward");
    }
    backward_ready_ = false;
    Tensor g = grad_wrt_output;
    for (std::size_t i = layers_.size(); i > 0; --i) g = layers_[i - 1]->backward(g);
}

std::vector<ParamRef> Model::parameters() {
    std::vector<ParamRef> params;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i]->collect_params(params, "L" + std::to_string(i) + "." + layers_[i]->kind());
    }
    return params;
}

std::size_t Model::parameter_count() {
    std::size_t n = 0;
    for (const ParamRef& p : parameters()) n += p.value->size();
    return n;
}

void Model::zero_grads() {
    for (auto& l : layers_) l->zero_grads();
}

// ---------------------------------------------------------------- builders

Model build_mlp(std::size_t in_dim, const std::vector<std::size_t>& hidden, std::size_t classes,
                Activation act, double dropout, std::uint64_t seed) {
    if (in_dim == 0 || classes == 0) throw std::invalid_argument("mlp dims must be >= 1");
    for (std::size_t h : hidden)
        if (h == 0) throw std::invalid_argument("mlp hidden widths must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must lie in [0, 1)");

    Model m(seed);
    m.add(std::make_unique<Flatten>());
    std::size_t prev = in_dim;
    for (std::size_t h : hidden) {
        auto d = std::make_unique<Dense>(prev, h);
        d->init_he(m.rng());
        m.add(std::move(d));
        m.add(std::make_unique<ActivationLayer>(act, act == Activation::leaky_relu ? 0.01 : 1.0));
        if (dropout > 0.0) m.add(std::make_unique<Dropout>(dropout));
        prev = h;
    }
    auto head = std::make_unique<Dense>(prev, classes);
    head->init_he(m.rng());
    m.add(std::move(head));
    m.add(std::make_unique<Softmax>());
    return m;
}

Model build_convnet(const ConvNetSpec& spec, std::uint64_t seed) {
    if (spec.height < 12 || spec.width < 12) {
        throw std::invalid_argument("convnet needs spatial dims >= 12, got " +
                                    std::to_string(spec.height) + "x" + std::to_string(spec.width));
    }
    if (spec.channels == 0 || spec.base_channels == 0 || spec.classes == 0) {
        throw std::invalid_argument("convnet dims must be >= 1");
    }

    Model m(seed);
    std::size_t h = spec.height, w = spec.width, ch = spec.channels;
    for (int block = 0; block < 3; ++block) {
        const std::size_t out_ch = spec.base_channels << block;  // c, 2c, 4c
        if (h < 3 || w < 3) {
            throw std::runtime_error("convnet spatial underflow at block " +
                                     std::to_string(block + 1) + ": " + std::to_string(h) + "x" +
                                     std::to_string(w) + " cannot take a 3x3 conv");
        }
        auto conv = std::make_unique<Conv2d>(ch, out_ch, 3, 1);
        conv->init_he(m.rng());
        m.add(std::move(conv));
        h -= 2;
        w -= 2;
        m.add(std::make_unique<ActivationLayer>(Activation::elu, 1.0));
        if (h < 2 || w < 2) {
            throw std::runtime_error("convnet spatial underflow at block " +
                                     std::to_string(block + 1) + " pool: " + std::to_string(h) +
                                     "x" + std::to_string(w));
        }
        m.add(std::make_unique<MaxPool>(2));
        h /= 2;
        w /= 2;
        ch = out_ch;
    }
    m.add(std::make_unique<Flatten>());
    if (spec.dropout > 0.0) m.add(std::make_unique<Dropout>(spec.dropout));
    auto head = std::make_unique<Dense>(h * w * ch, spec.classes);
    head->init_he(m.rng());
    m.add(std::move(head));
    m.add(std::make_unique<Softmax>());
    return m;
}

// ---------------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[8] = {'A', 'D', 'M', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32_le(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 4);
}

std::uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_le(std::ostream& os, double d) {
    const auto u = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
    os.write(b, 8);
}

double get_f64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

}  // namespace

void save_checkpoint(Model& model, const std::string& path) {
    json manifest;
    manifest["layers"] = json::array();
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        manifest["layers"].push_back(model.layer(i).spec());
    }
    manifest["params"] = json::array();
    const auto params = model.parameters();
    for (const ParamRef& p : params) {
        manifest["params"].push_back({{"name", p.name}, {"shape", p.value->shape()}});
    }
    const std::string text = manifest.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint file for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    put_u32_le(os, kVersion);
    put_u32_le(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const ParamRef& p : params) {
        for (std::size_t i = 0; i < p.value->size(); ++i) put_f64_le(os, (*p.value)[i]);
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint file: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("bad checkpoint magic in " + path);
    }
    const std::uint32_t version = get_u32_le(is);
    if (version != kVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t manifest_len = get_u32_le(is);
    std::string text(manifest_len, '\0');
    is.read(text.data(), manifest_len);
    if (!is) throw std::runtime_error("truncated checkpoint manifest in " + path);
    const json manifest = json::parse(text);

    Model model;
    for (const json& spec : manifest.at("layers")) model.add(Layer::from_spec(spec));
    auto params = model.parameters();
    const json& entries = manifest.at("params");
    if (entries.size() != params.size()) {
        throw std::runtime_error("checkpoint manifest lists " + std::to_string(entries.size()) +
                                 " parameters, model has " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto shape = entries[i].at("shape").get<std::vector<std::size_t>>();
        if (shape != params[i].value->shape()) {
            throw std::runtime_error("checkpoint shape mismatch for parameter '" +
                                     params[i].name + "'");
        }
        for (std::size_t j = 0; j < params[i].value->size(); ++j) {
            (*params[i].value)[j] = get_f64_le(is);
        }
    }
    if (!is) throw std::runtime_error("truncated checkpoint parameter data in " + path);
    return model;
}

}  // namespace adma
