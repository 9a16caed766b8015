#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tps/mathkit.hpp"
#include "tps/rng.hpp"

using tps::Rng;

namespace {

// Oracle digamma: recurrence with Kahan compensation up to x >= 1e4, then a
// five-term asymptotic tail. Structurally different from the library routine
// (different shift threshold, different series length, compensated sum).
double oracle_digamma(double x) {
    double sum = 0.0;
    double comp = 0.0;
    while (x < 1e4) {
        const double term = -1.0 / x;
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double tail = std::log(x) - 0.5 * inv;
    tail -= inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
    return sum + tail;
}

Eigen::VectorXd randn_vec(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("softmax of a constant vector is uniform") {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
    const Eigen::VectorXd p = tps::softmax(x);
    for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("softmax is invariant to additive shifts") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd x = randn_vec(rng, 5);
        const Eigen::VectorXd p = tps::softmax(x);
        const Eigen::VectorXd q = tps::softmax((x.array() + 1000.0).matrix());
        CHECK((p - q).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("softmax matches hand ratios") {
    Eigen::VectorXd x(3);
    x << std::log(1.0), std::log(2.0), std::log(3.0);
    const Eigen::VectorXd p = tps::softmax(x);
    CHECK(p[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
    CHECK(p[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-13));
    CHECK(p[2] == doctest::Approx(3.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("softmax output is a strict distribution and log-softmax matches lse") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXd x = randn_vec(rng, 8) * 10.0;
        const Eigen::VectorXd p = tps::softmax(x);
        CHECK(p.minCoeff() > 0.0);
        CHECK(std::abs(p.sum() - 1.0) < 1e-12);
        const double lse = tps::log_sum_exp(x);
        for (int i = 0; i < x.size(); ++i)
            CHECK(std::log(p[i]) == doctest::Approx(x[i] - lse).epsilon(1e-11));
    }
}

TEST_CASE("softmax rejects bad input") {
    Eigen::VectorXd empty(0);
    CHECK_THROWS_AS((void)tps::softmax(empty), std::invalid_argument);
    Eigen::VectorXd bad(2);
    bad << 0.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)tps::softmax(bad), std::invalid_argument);
}

TEST_CASE("log_sum_exp handles extreme magnitudes without overflow") {
    Eigen::VectorXd one(1);
    one << -3.5;
    CHECK(tps::log_sum_exp(one) == -3.5);

    Eigen::VectorXd two(2);
    two << 0.0, 0.0;
    CHECK(tps::log_sum_exp(two) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    two << 1000.0, 1000.0;
    CHECK(tps::log_sum_exp(two) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-14));

    two << -1000.0, -1000.0;
    CHECK(tps::log_sum_exp(two) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-14));

    Eigen::VectorXd empty(0);
    CHECK_THROWS_AS((void)tps::log_sum_exp(empty), std::invalid_argument);
}

TEST_CASE("digamma known values") {
    // Euler-Mascheroni to full double precision.
    CHECK(tps::digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-12));
    CHECK(std::abs(tps::digamma(1e6) - std::log(1e6)) < 1e-6);
}

TEST_CASE("digamma recurrence identity") {
    const double xs[] = {0.1, 0.5, 1.0, 2.0, 7.3, 55.0, 100.0};
    for (double x : xs) {
        CHECK(std::abs(tps::digamma(x + 1.0) - tps::digamma(x) - 1.0 / x) < 1e-10);
    }
}

TEST_CASE("digamma matches compensated oracle over the working range") {
    // Log-spaced sweep of [1e-3, 1e6].
    for (int i = 0; i <= 180; ++i) {
        const double x = std::pow(10.0, -3.0 + 9.0 * i / 180.0);
        const double got = tps::digamma(x);
        const double want = oracle_digamma(x);
        const double tol = 1e-10 * std::max(1.0, std::abs(want));
        CHECK(std::abs(got - want) < tol);
    }
}

TEST_CASE("digamma rejects the nonpositive half line") {
    CHECK_THROWS_AS((void)tps::digamma(0.0), std::domain_error);
    CHECK_THROWS_AS((void)tps::digamma(-2.5), std::domain_error);
}

TEST_CASE("maximize_concave solves a quadratic bowl in few iterations") {
    Eigen::VectorXd target(4);
    target << 1.0, -2.0, 0.5, 3.0;
    auto f = [&](const Eigen::VectorXd& x) { return -0.5 * (x - target).squaredNorm(); };
    auto g = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(target - x); };

    tps::MaximizerOptions opts;
    const auto res = tps::maximize_concave(f, g, Eigen::VectorXd::Zero(4), opts);
    CHECK(res.converged);
    // Unit step lands exactly on the optimum, so two iterations suffice.
    CHECK(res.iterations <= 2);
    CHECK((res.x - target).cwiseAbs().maxCoeff() < opts.grad_tol);
    CHECK(res.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("maximize_concave accepted values are monotone in the iteration budget") {
    Rng rng(3);
    Eigen::VectorXd x0 = randn_vec(rng, 6) * 4.0;
    Eigen::VectorXd a = randn_vec(rng, 6);
    // Smooth non-quadratic concave objective: -lse(x) + a.x.
    auto f = [&](const Eigen::VectorXd& x) { return -tps::log_sum_exp(x) + a.dot(x); };
    auto g = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(a - tps::softmax(x)); };

    double prev = -std::numeric_limits<double>::infinity();
    for (int budget : {1, 2, 4, 8, 32}) {
        tps::MaximizerOptions opts;
        opts.max_iters = budget;
        const auto res = tps::maximize_concave(f, g, x0, opts);
        CHECK(res.value >= prev - 1e-12);
        CHECK(res.value >= f(x0) - 1e-12);
        prev = res.value;
    }
}

TEST_CASE("maximize_concave converged flag reflects the gradient norm") {
    Eigen::VectorXd target = Eigen::VectorXd::Constant(3, 2.0);
    auto f = [&](const Eigen::VectorXd& x) { return -0.5 * (x - target).squaredNorm(); };
    auto g = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(target - x); };

    tps::MaximizerOptions opts;
    opts.max_iters = 200;
    const auto ok = tps::maximize_concave(f, g, Eigen::VectorXd::Zero(3), opts);
    CHECK(ok.converged);
    CHECK(g(ok.x).cwiseAbs().maxCoeff() < opts.grad_tol);

    opts.max_iters = 0;
    const auto stopped = tps::maximize_concave(f, g, Eigen::VectorXd::Zero(3), opts);
    CHECK_FALSE(stopped.converged);
    CHECK(stopped.iterations == 0);
}

TEST_CASE("maximize_concave rejects non-finite objective values") {
    auto f = [](const Eigen::VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
    auto g = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(Eigen::VectorXd::Zero(x.size())); };
    tps::MaximizerOptions opts;
    CHECK_THROWS_AS((void)tps::maximize_concave(f, g, Eigen::VectorXd::Zero(2), opts),
                    std::runtime_error);
}

TEST_CASE("rng streams are reproducible and seed-sensitive") {
    Rng a(42), b(42), c(43);
    bool all_equal = true;
    bool any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);

    Rng s0(tps::mix_seed(42, 0)), s1(tps::mix_seed(42, 1));
    CHECK(s0.next_u64() != s1.next_u64());
}

TEST_CASE("rng normal and gamma draws have the right first moments") {
    Rng rng(2024);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);

    for (double shape : {0.3, 1.0, 4.5}) {
        double gsum = 0.0;
        for (int i = 0; i < n; ++i) gsum += rng.gamma(shape);
        // Mean of Gamma(shape, 1) is shape; SE is sqrt(shape/n).
        CHECK(std::abs(gsum / n - shape) < 4.0 * std::sqrt(shape / n));
    }
}

TEST_CASE("rng uniform_int respects bounds and shuffle permutes") {
    Rng rng(5);
    std::vector<int> hits(10, 0);
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t v = rng.uniform_int(10);
        REQUIRE(v < 10);
        ++hits[static_cast<int>(v)];
    }
    for (int h : hits) CHECK(h > 0);

    std::vector<int> items(257);
    std::iota(items.begin(), items.end(), 0);
    std::vector<int> shuffled = items;
    rng.shuffle(shuffled);
    CHECK(shuffled != items);
    std::vector<int> sorted = shuffled;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == items);
}
