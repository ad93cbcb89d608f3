#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "adma/losses.hpp"
#include "adma/rng.hpp"

using namespace adma;

namespace {

using Vec = std::vector<double>;

double adma1(double p, double a) {
    const double y = 1.0;
    return adma_value(std::span<const double>(&p, 1), std::span<const double>(&y, 1), a);
}

double adma1_grad(double p, double a, double eps = Loss::kDefaultEpsilon) {
    const double y = 1.0;
    double g = 0.0;
    adma_grad_wrt_p(std::span<const double>(&p, 1), std::span<const double>(&y, 1), a, eps,
                    std::span<double>(&g, 1));
    return g;
}

// independent central-difference oracle over the loss value
double fd_grad(const Loss& loss, std::vector<double> p, const std::vector<double>& y,
               std::size_t j, double h = 1e-6) {
    p[j] += h;
    const double up = loss.value(p, y);
    p[j] -= 2.0 * h;
    const double down = loss.value(p, y);
    return (up - down) / (2.0 * h);
}

}  // namespace

TEST_CASE("loss value endpoints are exact") {
    for (const double a : {0.1, 0.26, 0.5}) {
        CHECK(adma1(1.0, a) == 0.0);
        CHECK(adma1(0.0, a) == doctest::Approx(kEulerE - 1.0).epsilon(1e-12));
    }
    CHECK(adma1(0.0, 0.26) == kEulerE - 1.0);  // exact in double, not just close
}

TEST_CASE("loss value matches high-precision oracle points") {
    CHECK(adma1(0.25, 0.5) == doctest::Approx(1.0695605577589171).epsilon(1e-15));
    const std::vector<double> p{0.2, 0.7, 0.1}, y{0.0, 1.0, 0.0};
    CHECK(adma_value(p, y, 0.26) == doctest::Approx(0.23039283740383892).epsilon(1e-15));
}

TEST_CASE("loss value stays in [0, e-1] over random draws") {
    Rng rng(2024);
    for (int i = 0; i < 10000; ++i) {
        const double p = rng.uniform();
        const double a = rng.uniform(1e-6, 0.5);
        const double v = adma1(p, a);
        CHECK(v >= 0.0);
        CHECK(v <= kEulerE - 1.0);
    }
}

TEST_CASE("loss value decreases monotonically in p") {
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        const double a = rng.uniform(0.05, 0.5);
        double p1 = rng.uniform(), p2 = rng.uniform();
        if (p1 > p2) std::swap(p1, p2);
        CHECK(adma1(p1, a) >= adma1(p2, a));
        if (p1 > 0.0 && p2 - p1 > 1e-9) CHECK(adma1(p1, a) > adma1(p2, a));
    }
}

TEST_CASE("analytic gradient matches the closed forms") {
    CHECK(adma1_grad(1.0, 0.5) == doctest::Approx(-1.3591409142295225).epsilon(1e-15));
    CHECK(adma1_grad(0.25, 0.5) == doctest::Approx(-1.6487212707001282).epsilon(1e-15));
    const std::vector<double> p{0.2, 0.7, 0.1}, y{0.0, 1.0, 0.0};
    std::vector<double> g(3);
    adma_grad_wrt_p(p, y, 0.26, Loss::kDefaultEpsilon, g);
    CHECK(g[0] == 0.0);  // zero-label components are exactly zero
    CHECK(g[2] == 0.0);
    CHECK(g[1] == doctest::Approx(-0.842232113648392).epsilon(1e-15));
}

TEST_CASE("gradient clamp bounds the magnitude near p = 0") {
    const double g = adma1_grad(0.0, 0.3);
    CHECK(std::isfinite(g));
    // clamp floor 1e-7 caps |g| around a * 10^(7*(1-a)) * e^(p^a)
    CHECK(std::abs(g) <= 0.3 * std::pow(10.0, 7.0 * 0.7) * kEulerE);
    CHECK(std::abs(g) > 1.0);
}

TEST_CASE("analytic gradients agree with central differences") {
    const std::vector<Loss> kinds = {Loss::adma(0.26), Loss::adma(0.4), Loss::cce(),
                                     Loss::mse(), Loss::squared_hinge()};
    Rng rng(17);
    for (const Loss& loss : kinds) {
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> p(4), y(4, 0.0);
            for (auto& v : p) v = rng.uniform(0.01, 0.99);
            y[rng.below(4)] = 1.0;
            std::vector<double> g(4);
            loss.grad(p, y, g);
            for (std::size_t j = 0; j < 4; ++j) {
                const double numeric = fd_grad(loss, p, y, j);
                const double denom = std::max({std::abs(numeric), std::abs(g[j]), 1e-12});
                if (std::abs(numeric) < 1e-9 && std::abs(g[j]) < 1e-9) continue;
                CHECK(std::abs(numeric - g[j]) / denom < 1e-6);
            }
        }
    }
}

TEST_CASE("baseline values at the pinned points") {
    const std::vector<double> one_hot{0.0, 1.0, 0.0};
    const Loss cce = Loss::cce();
    CHECK(cce.value(Vec{0.0, 1.0, 0.0}, one_hot) == 0.0);
    CHECK(cce.value(Vec{0.0, 0.36787944117144233, 0.0}, one_hot) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // the clamp keeps a zero probability finite
    CHECK(cce.value(Vec{1.0, 0.0, 0.0}, one_hot) ==
          doctest::Approx(-std::log(1e-7)).epsilon(1e-12));

    const Loss mse = Loss::mse();
    CHECK(mse.value(Vec{0.0, 1.0, 0.0}, one_hot) == 0.0);
    CHECK(mse.value(Vec{0.2, 0.7, 0.1}, one_hot) ==
          doctest::Approx(0.04666666666666667).epsilon(1e-15));

    const Loss sqh = Loss::squared_hinge();
    CHECK(sqh.value(Vec{0.0, 1.0, 0.0}, one_hot) == 0.0);
    CHECK(sqh.value(Vec{0.2, 0.7, 0.1}, one_hot) ==
          doctest::Approx(0.18666666666666668).epsilon(1e-15));
}

TEST_CASE("baseline gradients at the pinned points") {
    const std::vector<double> p{0.2, 0.7, 0.1}, y{0.0, 1.0, 0.0};
    std::vector<double> g(3);

    Loss::mse().grad(p, y, g);
    CHECK(g[0] == doctest::Approx(0.13333333333333333).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(g[2] == doctest::Approx(0.06666666666666667).epsilon(1e-15));

    Loss::squared_hinge().grad(p, y, g);
    CHECK(g[0] == doctest::Approx(0.5333333333333333).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(-0.8).epsilon(1e-15));
    CHECK(g[2] == doctest::Approx(0.26666666666666666).epsilon(1e-15));

    Loss::cce().grad(p, y, g);
    CHECK(g[0] == 0.0);  // zero-label masking holds for cce too
    CHECK(g[1] == doctest::Approx(-1.0 / 0.7).epsilon(1e-15));
    CHECK(g[2] == 0.0);
}

TEST_CASE("losses reject malformed inputs") {
    const std::vector<double> p{0.5, 0.5}, y3{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(Loss::adma(0.3).value(p, y3), std::invalid_argument);
    const std::vector<double> bad{0.5, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(Loss::adma(0.3).value(bad, p), std::invalid_argument);
    CHECK_THROWS_AS(Loss::adma(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Loss::adma(-0.2), std::invalid_argument);
}

TEST_CASE("batch reduction is the mean of per-sample losses") {
    const Loss loss = Loss::adma(0.3);
    const Tensor pred({2, 2}, {0.9, 0.1, 0.4, 0.6});
    const Tensor labels({2, 2}, {1.0, 0.0, 0.0, 1.0});
    const double expected = 0.5 * (loss.value(Vec{0.9, 0.1}, Vec{1.0, 0.0}) +
                                   loss.value(Vec{0.4, 0.6}, Vec{0.0, 1.0}));
    CHECK(loss.batch_value(pred, labels) == doctest::Approx(expected).epsilon(1e-15));

    const Tensor g = loss.batch_grad(pred, labels);
    std::vector<double> row(2);
    loss.grad(Vec{0.9, 0.1}, Vec{1.0, 0.0}, row);
    CHECK(g(0, 0) == doctest::Approx(row[0] / 2.0).epsilon(1e-15));
    CHECK(g(0, 1) == doctest::Approx(row[1] / 2.0).epsilon(1e-15));
}

TEST_CASE("loss names used in reports and file names") {
    CHECK(Loss::adma(0.26).name() == "adma_a0.2600");
    CHECK(Loss::cce().name() == "cce");
    CHECK(Loss::mse().name() == "mse");
    CHECK(Loss::squared_hinge().name() == "squared_hinge");
}

TEST_CASE("curve sweep hits the pinned three-point grid") {
    const CurveTable t = curve_sweep({Loss::adma(0.5)}, CurveGrid{0.0, 1.0, 3});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].p == 0.0);
    CHECK(t.rows[1].p == 0.5);
    CHECK(t.rows[2].p == 1.0);
    CHECK(t.rows[0].values[0] == doctest::Approx(kEulerE - 1.0).epsilon(1e-15));
    CHECK(t.rows[1].values[0] == doctest::Approx(0.6901668468115728).epsilon(1e-15));
    CHECK(t.rows[2].values[0] == 0.0);
}

TEST_CASE("curve sweep columns behave") {
    const CurveTable t =
        curve_sweep({Loss::adma(0.05), Loss::cce()}, CurveGrid{0.01, 1.0, 64});
    for (std::size_t r = 1; r < t.rows.size(); ++r) {
        CHECK(t.rows[r].p > t.rows[r - 1].p);                    // strictly increasing grid
        CHECK(t.rows[r].values[0] <= t.rows[r - 1].values[0]);    // adma monotone
    }
    CHECK(t.rows.back().values[1] == 0.0);  // cce at p=1
    CHECK_THROWS_AS(curve_sweep({}, CurveGrid{0.0, 1.0, 8}), std::invalid_argument);
    CHECK_THROWS_AS(curve_sweep({Loss::mse()}, CurveGrid{0.5, 0.5, 8}), std::invalid_argument);
    CHECK_THROWS_AS(curve_sweep({Loss::mse()}, CurveGrid{0.0, 1.0, 1}), std::invalid_argument);
}

TEST_CASE("convexity probe agrees with the analytic boundary") {
    const CurveGrid grid{0.01, 1.0, 1024};
    for (const double a : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        const ConvexityReport r = convexity_probe(a, grid);
        CHECK(r.is_convex);
        CHECK(!r.first_violation.has_value());
    }
    for (const double a : {0.6, 0.7, 0.9}) {
        const ConvexityReport r = convexity_probe(a, grid);
        CHECK(!r.is_convex);
        CHECK(r.first_violation.has_value());
    }
    // sign oracle (1-a) - a*p^a = 0 puts the a=0.7 onset near p=0.2987
    const ConvexityReport r7 = convexity_probe(0.7, grid);
    CHECK(*r7.first_violation == doctest::Approx(0.2987).epsilon(0.02));
}

TEST_CASE("convexity probe validates its inputs") {
    CHECK_THROWS_AS(convexity_probe(0.0, CurveGrid{0.01, 1.0, 64}), std::invalid_argument);
    CHECK_THROWS_AS(convexity_probe(0.3, CurveGrid{0.01, 1.0, 8}), std::invalid_argument);
    CHECK_THROWS_AS(convexity_probe(0.3, CurveGrid{0.0, 1.0, 64}), std::invalid_argument);
}

TEST_CASE("weighting profile shrinks toward confident predictions") {
    const auto profile = weighting_profile(0.3, CurveGrid{0.01, 1.0, 128});
    CHECK(profile.back().second / profile.front().second < 1.0);
    CHECK(profile.front().second == doctest::Approx(9.68748618890167).epsilon(1e-12));
    CHECK(profile.back().second == doctest::Approx(0.8154845485377136).epsilon(1e-12));
    for (std::size_t i = 1; i < profile.size(); ++i) {
        CHECK(profile[i].second <= profile[i - 1].second);  // monotone for a <= 0.5
    }
}

TEST_CASE("weighting profile loses monotonicity past a = 0.5") {
    const auto profile = weighting_profile(0.7, CurveGrid{0.01, 1.0, 256});
    bool increased = false;
    for (std::size_t i = 1; i < profile.size(); ++i) {
        increased = increased || profile[i].second > profile[i - 1].second;
    }
    CHECK(increased);
}

TEST_CASE("weighting profile matches finite differences of the value") {
    const auto profile = weighting_profile(0.26, CurveGrid{0.05, 0.95, 64});
    const Loss loss = Loss::adma(0.26);
    for (const auto& [p, mag] : profile) {
        const double numeric = -fd_grad(loss, {p}, {1.0}, 0);
        CHECK(std::abs(numeric - mag) / mag < 1e-6);
    }
}

TEST_CASE("amplification factor stays within [1, e]") {
    for (const double a : {0.05, 0.26, 0.5, 0.8, 1.0}) {
        for (int i = 0; i <= 1000; ++i) {
            const double p = static_cast<double>(i) / 1000.0;
            const double amp = std::exp(std::pow(p, a));
            CHECK(amp >= 1.0);
            CHECK(amp <= kEulerE);
        }
    }
}

TEST_CASE("analysis-range flagging starts above 0.5") {
    CHECK(!AdmaParams{0.5}.analysis_range());
    CHECK(AdmaParams{0.51}.analysis_range());
}
