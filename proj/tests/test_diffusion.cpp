#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "steersum/simplex.hpp"

using namespace steersum;

namespace {

// Monte-Carlo moment oracle: per-coordinate mean/std of repeated diffusions.
struct Moments {
    std::vector<double> mean;
    std::vector<double> stddev;
};

Moments diffusion_moments(const SimplexSequence& s0, double alpha_bar, int reps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = s0.logits.data.size();
    std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
    const std::vector<bool> mask(s0.length(), true);
    for (int r = 0; r < reps; ++r) {
        const SimplexSequence out = forward_diffuse_alpha(s0, alpha_bar, rng, mask);
        for (std::size_t i = 0; i < n; ++i) {
            sum[i] += out.logits.data[i];
            sumsq[i] += out.logits.data[i] * out.logits.data[i];
        }
    }
    Moments m;
    m.mean.resize(n);
    m.stddev.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.mean[i] = sum[i] / reps;
        m.stddev[i] = std::sqrt(std::max(0.0, sumsq[i] / reps - m.mean[i] * m.mean[i]));
    }
    return m;
}

}  // namespace

TEST_CASE("forward diffusion at alpha_bar = 1 returns the input exactly") {
    const Vocabulary vocab = test::make_vocab(6);
    std::mt19937_64 data_rng(1), rng(2);
    const SimplexSequence s0 = logits_initialize(test::random_tokens(data_rng, vocab, 5), 5.0, vocab);
    const SimplexSequence out = forward_diffuse_alpha(s0, 1.0, rng, std::vector<bool>(5, true));
    for (std::size_t i = 0; i < s0.logits.data.size(); ++i) REQUIRE(out.logits.data[i] == s0.logits.data[i]);
}

TEST_CASE("forward diffusion at alpha_bar = 0 is pure N(0, k^2) noise") {
    const double k = 5.0;
    Matrix<double> m(1, 5, k);  // any content: signal term is zeroed
    const SimplexSequence s0(std::move(m), k, std::vector<Role>(1, Role::Summary));
    const auto mom = diffusion_moments(s0, 0.0, 100000, 42);
    for (std::size_t i = 0; i < mom.mean.size(); ++i) {
        CHECK(std::abs(mom.mean[i]) <= 0.02 * k);
        CHECK(std::abs(mom.stddev[i] - k) <= 0.02 * k);
    }
}

TEST_CASE("forward diffusion at alpha_bar = 0.5 has mean sqrt(0.5) * s0 and std k * sqrt(0.5)") {
    const double k = 5.0;
    Matrix<double> m(1, 4);
    m(0, 0) = k;
    m(0, 1) = -k;
    m(0, 2) = 2.0;
    m(0, 3) = 0.0;
    const SimplexSequence s0(std::move(m), k, std::vector<Role>(1, Role::Summary));
    const auto mom = diffusion_moments(s0, 0.5, 100000, 9);
    const double root_half = std::sqrt(0.5);
    for (std::size_t j = 0; j < 4; ++j) {
        const double target_mean = root_half * s0.logits(0, j);
        const double target_std = k * root_half;
        CHECK(std::abs(mom.mean[j] - target_mean) <= 0.02 * std::max(std::abs(target_mean), k));
        CHECK(std::abs(mom.stddev[j] - target_std) <= 0.02 * target_std);
    }
}

TEST_CASE("masked-false rows are copied unchanged") {
    const Vocabulary vocab = test::make_vocab(6);
    std::mt19937_64 data_rng(3), rng(4);
    const SimplexSequence s0 = logits_initialize(test::random_tokens(data_rng, vocab, 4), 5.0, vocab);
    const std::vector<bool> mask = {false, true, false, true};
    const SimplexSequence out = forward_diffuse_alpha(s0, 0.3, rng, mask);
    for (std::size_t i = 0; i < 4; ++i) {
        bool identical = true;
        for (std::size_t j = 0; j < s0.vocab_size(); ++j)
            if (out.logits(i, j) != s0.logits(i, j)) identical = false;
        CHECK(identical == !mask[i]);
    }
}

TEST_CASE("forward_diffuse validates the timestep against the schedule") {
    const Vocabulary vocab = test::make_vocab(4);
    const SimplexSequence s0 = logits_initialize({4}, 5.0, vocab);
    const NoiseSchedule sched = make_schedule(10);
    std::mt19937_64 rng(5);
    const std::vector<bool> mask(1, true);
    CHECK_THROWS_AS(forward_diffuse(s0, 0, sched, rng, mask), ScheduleError);
    CHECK_THROWS_AS(forward_diffuse(s0, 11, sched, rng, mask), ScheduleError);
    CHECK_NOTHROW([&] {
        std::mt19937_64 r(5);
        forward_diffuse(s0, 10, sched, r, mask);
    }());
}

TEST_CASE("forward diffusion is deterministic for a fixed seed") {
    const Vocabulary vocab = test::make_vocab(8);
    std::mt19937_64 data_rng(6);
    const SimplexSequence s0 = logits_initialize(test::random_tokens(data_rng, vocab, 6), 5.0, vocab);
    const std::vector<bool> mask(6, true);
    std::mt19937_64 r1(77), r2(77);
    const SimplexSequence a = forward_diffuse_alpha(s0, 0.4, r1, mask);
    const SimplexSequence b = forward_diffuse_alpha(s0, 0.4, r2, mask);
    REQUIRE(a.logits.data == b.logits.data);
}

TEST_CASE("mask length must match the sequence") {
    const Vocabulary vocab = test::make_vocab(4);
    const SimplexSequence s0 = logits_initialize({4, 4}, 5.0, vocab);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(forward_diffuse_alpha(s0, 0.5, rng, std::vector<bool>(3, true)), ShapeError);
}
