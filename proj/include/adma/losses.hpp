#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adma/tensor.hpp"

namespace adma {

/// Euler's number at double precision; the bound of the Adma loss range.
inline constexpr double kEulerE = 2.718281828459045235360287471352662498;

/// Scaling factor of the Adma loss. Training behaves best for a in
/// (0, 0.5]; (0.5, 1] keeps the formula well defined but the curve turns
/// concave, so those values are analysis territory and get flagged.
struct AdmaParams {
    double a = 0.3;
    bool analysis_range() const { return a > 0.5; }
};

enum class LossKind { adma, cce, mse, squared_hinge };

const char* loss_kind_name(LossKind kind);

/// Per-sample Adma loss: sum_j y_j * (e - e^(p_j^a)). p is clamped to
/// [0, 1]; the value needs no epsilon floor because it is bounded.
double adma_value(std::span<const double> p, std::span<const double> y, double a);

/// Analytic gradient wrt p: -y_j * a * p_j^(a-1) * e^(p_j^a), exactly zero
/// where y_j == 0. p is clamped to [epsilon, 1] before exponentiation
/// because p^(a-1) diverges at 0 for a < 1.
void adma_grad_wrt_p(std::span<const double> p, std::span<const double> y, double a,
                     double epsilon, std::span<double> out);

/// One of the four loss functions under comparison. Carries the Adma
/// scaling factor and the probability clamp floor where relevant.
class Loss {
public:
    static constexpr double kDefaultEpsilon = 1e-7;

    static Loss adma(double a, double epsilon = kDefaultEpsilon);
    static Loss cce(double epsilon = kDefaultEpsilon);
    static Loss mse();
    static Loss squared_hinge();
    static Loss make(LossKind kind, double a = 0.3, double epsilon = kDefaultEpsilon);

    LossKind kind() const { return kind_; }
    double a() const { return a_; }
    double epsilon() const { return epsilon_; }
    std::string name() const;

    /// Per-sample loss; p and y are same-length vectors.
    double value(std::span<const double> p, std::span<const double> y) const;
    /// Per-sample analytic gradient wrt p, written into out.
    void grad(std::span<const double> p, std::span<const double> y,
              std::span<double> out) const;

    /// Batch reduction is the arithmetic mean over rows.
    double batch_value(const Tensor& pred, const Tensor& labels) const;
    /// d(mean batch loss)/d(pred): per-row gradient scaled by 1/rows.
    Tensor batch_grad(const Tensor& pred, const Tensor& labels) const;

private:
    Loss(LossKind kind, double a, double epsilon);

    LossKind kind_;
    double a_;
    double epsilon_;
};

/// Uniform evaluation grid over true-class probability.
struct CurveGrid {
    double p_min = 0.0;
    double p_max = 1.0;
    std::size_t n_points = 256;
};

/// One row of a curve sweep: the probability and every function's value there.
struct CurveSample {
    double p;
    std::vector<double> values;
};

struct CurveTable {
    std::vector<std::string> columns;  // loss names, same order as row values
    std::vector<CurveSample> rows;     // strictly increasing in p
};

/// Evaluate each loss at scalar true-class probability p over the grid
/// (each sample is treated as a one-class problem with y = 1).
CurveTable curve_sweep(const std::vector<Loss>& kinds, const CurveGrid& grid);

struct ConvexityReport {
    bool is_convex = false;
    std::optional<double> first_violation;  // smallest grid p where it fails
};

/// Estimate the second derivative of p -> e - e^(p^a) by central
/// differences over the grid (within [0.01, 1], at least 16 points).
/// Analytically the curve is convex on (0, 1] iff a <= 0.5.
ConvexityReport convexity_probe(double a, const CurveGrid& grid);

/// Gradient magnitude a * p^(a-1) * e^(p^a) per grid point. Monotone
/// non-increasing in p for a in (0, 0.5] (the same condition as
/// convexity); the amplification factor e^(p^a) always lies in [1, e].
std::vector<std::pair<double, double>> weighting_profile(double a, const CurveGrid& grid);

}  // namespace adma
