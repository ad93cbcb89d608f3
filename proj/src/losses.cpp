#include "adma/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adma {

namespace {

void check_pair(std::span<const double> p, std::span<const double> y) {
    if (p.size() != y.size()) {
        throw std::invalid_argument("loss input length mismatch: p has " +
                                    std::to_string(p.size()) + " elements, y has " +
                                    std::to_string(y.size()));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i]) || !std::isfinite(y[i])) {
            throw std::invalid_argument("non-finite loss input at index " + std::to_string(i));
        }
    }
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

const char* loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::adma: return "adma";
        case LossKind::cce: return "cce";
        case LossKind::mse: return "mse";
        case LossKind::squared_hinge: return "squared_hinge";
    }
    return "?";
}

double adma_value(std::span<const double> p, std::span<const double> y, double a) {
    check_pair(p, y);
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (y[i] == 0.0) continue;
        total += y[i] * (kEulerE - std::exp(std::pow(clamp01(p[i]), a)));
    }
    return total;
}

void adma_grad_wrt_p(std::span<const double> p, std::span<const double> y, double a,
                     double epsilon, std::span<double> out) {
    check_pair(p, y);
    if (out.size() != p.size()) {
        throw std::invalid_argument("gradient output length mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (y[i] == 0.0) {
            out[i] = 0.0;
            continue;
        }
        const double pc = std::clamp(p[i], epsilon, 1.0);
        out[i] = -y[i] * a * std::pow(pc, a - 1.0) * std::exp(std::pow(pc, a));
    }
}

Loss::Loss(LossKind kind, double a, double epsilon) : kind_(kind), a_(a), epsilon_(epsilon) {
    if (kind_ == LossKind::adma && !(a_ > 0.0)) {
        throw std::invalid_argument("adma scaling factor must be positive, got " +
                                    std::to_string(a_));
    }
    if (!(epsilon_ > 0.0) || epsilon_ >= 1.0) {
        throw std::invalid_argument("loss epsilon must lie in (0, 1)");
    }
}

Loss Loss::adma(double a, double epsilon) { return Loss(LossKind::adma, a, epsilon); }
Loss Loss::cce(double epsilon) { return Loss(LossKind::cce, 0.0, epsilon); }
Loss Loss::mse() { return Loss(LossKind::mse, 0.0, kDefaultEpsilon); }
Loss Loss::squared_hinge() { return Loss(LossKind::squared_hinge, 0.0, kDefaultEpsilon); }

Loss Loss::make(LossKind kind, double a, double epsilon) {
    return kind == LossKind::adma ? Loss(kind, a, epsilon) : Loss(kind, 0.0, epsilon);
}

std::string Loss::name() const {
    if (kind_ == LossKind::adma) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "adma_a%.4f", a_);
        return buf;
    }
    return loss_kind_name(kind_);
}

double Loss::value(std::span<const double> p, std::span<const double> y) const {
    check_pair(p, y);
    const std::size_t n = p.size();
    double total = 0.0;
    switch (kind_) {
        case LossKind::adma:
            return adma_value(p, y, a_);
        case LossKind::cce:
            for (std::size_t i = 0; i < n; ++i) {
                if (y[i] == 0.0) continue;
                total += -y[i] * std::log(std::clamp(p[i], epsilon_, 1.0));
            }
            return total;
        case LossKind::mse:
            for (std::size_t i = 0; i < n; ++i) {
                const double d = p[i] - y[i];
                total += d * d;
            }
            return total / static_cast<double>(n);
        case LossKind::squared_hinge:
            // classes remapped to +-1, softmax outputs recentred to [-1, 1]
            for (std::size_t i = 0; i < n; ++i) {
                const double ty = 2.0 * y[i] - 1.0;
                const double tp = 2.0 * p[i] - 1.0;
                const double margin = std::max(0.0, 1.0 - ty * tp);
                total += margin * margin;
            }
            return total / static_cast<double>(n);
    }
    return total;
}

void Loss::grad(std::span<const double> p, std::span<const double> y,
                std::span<double> out) const {
    check_pair(p, y);
    if (out.size() != p.size()) {
        throw std::invalid_argument("gradient output length mismatch");
    }
    const std::size_t n = p.size();
    switch (kind_) {
        case LossKind::adma:
            adma_grad_wrt_p(p, y, a_, epsilon_, out);
            return;
        case LossKind::cce:
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = y[i] == 0.0 ? 0.0 : -y[i] / std::clamp(p[i], epsilon_, 1.0);
            }
            return;
        case LossKind::mse: {
            const double s = 2.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) out[i] = s * (p[i] - y[i]);
            return;
        }
        case LossKind::squared_hinge: {
            const double s = 4.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double ty = 2.0 * y[i] - 1.0;
                const double tp = 2.0 * p[i] - 1.0;
                const double margin = std::max(0.0, 1.0 - ty * tp);
                out[i] = -s * ty * margin;
            }
            return;
        }
    }
}

double Loss::batch_value(const Tensor& pred, const Tensor& labels) const {
    if (pred.rank() != 2 || !pred.same_shape(labels)) {
        throw std::invalid_argument("batch loss expects matching rank-2 tensors, got " +
                                    shape_str(pred.shape()) + " and " + shape_str(labels.shape()));
    }
    const std::size_t rows = pred.dim(0), cols = pred.dim(1);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        total += value({pred.data() + r * cols, cols}, {labels.data() + r * cols, cols});
    }
    return total / static_cast<double>(rows);
}

Tensor Loss::batch_grad(const Tensor& pred, const Tensor& labels) const {
    if (pred.rank() != 2 || !pred.same_shape(labels)) {
        throw std::invalid_argument("batch gradient expects matching rank-2 tensors, got " +
                                    shape_str(pred.shape()) + " and " + shape_str(labels.shape()));
    }
    const std::size_t rows = pred.dim(0), cols = pred.dim(1);
    Tensor out(pred.shape());
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        grad({pred.data() + r * cols, cols}, {labels.data() + r * cols, cols},
             {out.data() + r * cols, cols});
        for (std::size_t c = 0; c < cols; ++c) out(r, c) *= inv;
    }
    return out;
}

namespace {

std::vector<double> grid_points(const CurveGrid& grid) {
    if (grid.n_points < 2 || !(grid.p_min < grid.p_max)) {
        throw std::invalid_argument("invalid curve grid: need p_min < p_max and >= 2 points");
    }
    std::vector<double> pts(grid.n_points);
    const double step = (grid.p_max - grid.p_min) / static_cast<double>(grid.n_points - 1);
    for (std::size_t i = 0; i < grid.n_points; ++i)
        pts[i] = grid.p_min + static_cast<double>(i) * step;
    pts.back() = grid.p_max;
    return pts;
}

}  // namespace

CurveTable curve_sweep(const std::vector<Loss>& kinds, const CurveGrid& grid) {
    if (kinds.empty()) throw std::invalid_argument("curve_sweep needs at least one loss");
    if (grid.p_min < 0.0 || grid.p_max > 1.0) {
        throw std::invalid_argument("curve grid must lie within [0, 1]");
    }
    CurveTable table;
    for (const Loss& l : kinds) table.columns.push_back(l.name());
    const double one = 1.0;
    for (double p : grid_points(grid)) {
        CurveSample row{p, {}};
        row.values.reserve(kinds.size());
        for (const Loss& l : kinds) row.values.push_back(l.value({&p, 1}, {&one, 1}));
        table.rows.push_back(std::move(row));
    }
    return table;
}

ConvexityReport convexity_probe(double a, const CurveGrid& grid) {
    if (!(a > 0.0)) throw std::invalid_argument("convexity probe needs a > 0");
    if (grid.n_points < 16) {
        throw std::invalid_argument("convexity grid too coarse: need at least 16 points");
    }
    if (grid.p_min < 0.01 - 1e-12 || grid.p_max > 1.0 + 1e-12) {
        throw std::invalid_argument("convexity grid must lie within [0.01, 1.0]");
    }
    const std::vector<double> pts = grid_points(grid);
    const double h = pts[1] - pts[0];
    auto f = [a](double p) { return kEulerE - std::exp(std::pow(p, a)); };

    std::vector<double> d2(pts.size() - 2);
    double scale = 1.0;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        d2[i - 1] = (f(pts[i + 1]) - 2.0 * f(pts[i]) + f(pts[i - 1])) / (h * h);
        scale = std::max(scale, std::abs(d2[i - 1]));
    }
    const double tolerance = 1e-9 * scale;

    ConvexityReport report;
    report.is_convex = true;
    for (std::size_t i = 0; i < d2.size(); ++i) {
        if (d2[i] < -tolerance) {
            report.is_convex = false;
            report.first_violation = pts[i + 1];
            break;
        }
    }
    return report;
}

std::vector<std::pair<double, double>> weighting_profile(double a, const CurveGrid& grid) {
    if (!(a > 0.0)) throw std::invalid_argument("weighting profile needs a > 0");
    if (grid.p_min < Loss::kDefaultEpsilon || grid.p_max > 1.0 + 1e-12) {
        throw std::invalid_argument("weighting grid must lie within [epsilon, 1]");
    }
    std::vector<std::pair<double, double>> profile;
    for (double p : grid_points(grid)) {
        profile.emplace_back(p, a * std::pow(p, a - 1.0) * std::exp(std::pow(p, a)));
    }
    return profile;
}

}  // namespace adma
