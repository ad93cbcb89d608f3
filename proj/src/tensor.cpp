#include "adma/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace adma {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (shape_product(shape_) != data_.size()) {
        throw std::invalid_argument("tensor shape " + shape_str(shape_) + " does not match " +
                                    std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for shape " +
                                    shape_str(shape_));
    }
    return shape_[axis];
}

double& Tensor::operator()(std::size_t r, std::size_t c) {
    return data_[r * shape_[1] + c];
}

double Tensor::operator()(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_product(new_shape) != data_.size()) {
        throw std::invalid_argument("cannot reshape " + shape_str(shape_) + " to " +
                                    shape_str(new_shape));
    }
    return Tensor(std::move(new_shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw std::invalid_argument("matmul expects rank-2 tensors, got " + shape_str(a.shape()) +
                                    " and " + shape_str(b.shape()));
    }
    if (a.dim(1) != b.dim(0)) {
        throw std::invalid_argument("matmul shape mismatch: " + shape_str(a.shape()) + " x " +
                                    shape_str(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    // i-k-j order keeps the inner loop contiguous over b and out
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = pa[i * k + kk];
            if (av == 0.0) continue;
            const double* brow = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& m) {
    if (m.rank() != 2) {
        throw std::invalid_argument("transpose expects a rank-2 tensor, got " +
                                    shape_str(m.shape()));
    }
    const std::size_t r = m.dim(0), c = m.dim(1);
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(j, i) = m(i, j);
    return out;
}

Tensor map_unary(const Tensor& t, UnaryOp op) {
    Tensor out(t.shape());
    const double* in = t.data();
    double* o = out.data();
    const std::size_t n = t.size();
    auto domain_fail = [&](std::size_t i, const char* what) {
        throw std::domain_error(std::string(what) + " at index " + std::to_string(i) +
                                " (value " + std::to_string(in[i]) + ")");
    };
    switch (op.kind) {
        case UnaryOp::Kind::exp:
            for (std::size_t i = 0; i < n; ++i) o[i] = std::exp(in[i]);
            break;
        case UnaryOp::Kind::ln:
            for (std::size_t i = 0; i < n; ++i) {
                if (!(in[i] > 0.0)) domain_fail(i, "ln of non-positive value");
                o[i] = std::log(in[i]);
            }
            break;
        case UnaryOp::Kind::pow: {
            const bool integral = op.param == std::floor(op.param);
            for (std::size_t i = 0; i < n; ++i) {
                if (!integral && in[i] < 0.0) domain_fail(i, "pow of negative value");
                o[i] = std::pow(in[i], op.param);
            }
            break;
        }
        case UnaryOp::Kind::neg:
            for (std::size_t i = 0; i < n; ++i) o[i] = -in[i];
            break;
        case UnaryOp::Kind::relu:
            for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
            break;
        case UnaryOp::Kind::elu:
            for (std::size_t i = 0; i < n; ++i)
                o[i] = in[i] > 0.0 ? in[i] : op.param * (std::exp(in[i]) - 1.0);
            break;
        case UnaryOp::Kind::leaky_relu:
            for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > 0.0 ? in[i] : op.param * in[i];
            break;
    }
    return out;
}

Tensor reduce(const Tensor& t, ReduceOp op, std::size_t axis) {
    if (axis >= t.rank()) {
        throw std::invalid_argument("reduce axis " + std::to_string(axis) +
                                    " out of range for shape " + shape_str(t.shape()));
    }
    const auto& shape = t.shape();
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    const std::size_t extent = shape[axis];
    if (extent == 0 && op != ReduceOp::sum) {
        throw std::invalid_argument("cannot reduce an empty axis of " + shape_str(t.shape()));
    }

    std::vector<std::size_t> out_shape;
    for (std::size_t i = 0; i < shape.size(); ++i)
        if (i != axis) out_shape.push_back(shape[i]);
    Tensor out(std::move(out_shape));

    const double* in = t.data();
    double* o = out.data();
    for (std::size_t a = 0; a < outer; ++a) {
        for (std::size_t b = 0; b < inner; ++b) {
            const double* base = in + (a * extent) * inner + b;
            double acc = 0.0;
            std::size_t best = 0;
            switch (op) {
                case ReduceOp::sum:
                case ReduceOp::mean:
                    acc = 0.0;
                    for (std::size_t k = 0; k < extent; ++k) acc += base[k * inner];
                    if (op == ReduceOp::mean) acc /= static_cast<double>(extent);
                    break;
                case ReduceOp::max:
                case ReduceOp::argmax:
                    acc = base[0];
                    for (std::size_t k = 1; k < extent; ++k) {
                        if (base[k * inner] > acc) {  // ties keep the lowest index
                            acc = base[k * inner];
                            best = k;
                        }
                    }
                    if (op == ReduceOp::argmax) acc = static_cast<double>(best);
                    break;
            }
            o[a * inner + b] = acc;
        }
    }
    return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(what) + " shape mismatch: " +
                                    shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

}  // namespace adma
