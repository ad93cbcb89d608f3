#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace adma {

/// Dense n-dimensional array of 64-bit floats, row-major, owning its storage.
/// Operations assume finite inputs and preserve finiteness as long as
/// intermediate products stay in range; none of them allocate aliases.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);
    static Tensor scalar(double v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // rank-2 accessors
    double& operator()(std::size_t r, std::size_t c);
    double operator()(std::size_t r, std::size_t c) const;

    /// Same data, new shape; element count must match.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    void fill(double v);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

/// Standard matrix product of two rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& m);

/// Scalar function tag for map_unary; param carries the exponent for pow
/// and alpha for elu / leaky_relu.
struct UnaryOp {
    enum class Kind { exp, ln, pow, neg, relu, elu, leaky_relu };
    Kind kind;
    double param = 0.0;

    static UnaryOp Exp() { return {Kind::exp}; }
    static UnaryOp Ln() { return {Kind::ln}; }
    static UnaryOp Pow(double c) { return {Kind::pow, c}; }
    static UnaryOp Neg() { return {Kind::neg}; }
    static UnaryOp Relu() { return {Kind::relu}; }
    static UnaryOp Elu(double alpha) { return {Kind::elu, alpha}; }
    static UnaryOp LeakyRelu(double alpha) { return {Kind::leaky_relu, alpha}; }
};

/// Elementwise application, shape preserved. Domain violations (ln of a
/// non-positive value, pow with fractional exponent on a negative value)
/// raise std::domain_error naming the offending index and value.
Tensor map_unary(const Tensor& t, UnaryOp op);

enum class ReduceOp { sum, mean, max, argmax };

/// Reduce along one axis; output drops that axis. argmax breaks ties by
/// lowest index and stores indices as doubles.
Tensor reduce(const Tensor& t, ReduceOp op, std::size_t axis);

// elementwise arithmetic, shapes must match exactly
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

}  // namespace adma
