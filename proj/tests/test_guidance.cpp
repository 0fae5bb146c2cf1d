#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "steersum/guidance.hpp"

using namespace steersum;

namespace {

class NanGradClassifier : public StanceClassifier {
public:
    std::array<double, 3> predict_proba(const Matrix<double>&) const override { return {0.3, 0.4, 0.3}; }
    Matrix<double> grad_logprob(Stance, const SimplexSequence& s) const override {
        Matrix<double> g(s.length(), s.vocab_size(), 0.0);
        g(0, 0) = std::numeric_limits<double>::quiet_NaN();
        return g;
    }
    Stance classify(const std::vector<int>&) const override { return Stance::Center; }
};

ToyStanceClassifier smooth_classifier(std::uint64_t seed, int vocab_extra = 2, int dim = 6) {
    const Vocabulary vocab = test::make_vocab(vocab_extra);
    std::mt19937_64 rng(seed);
    ToyStanceClassifier clf(vocab, dim, rng);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& v : clf.head_weight().data) v = dist(rng);
    for (auto& v : clf.head_bias().data) v = 0.1 * dist(rng);
    return clf;
}

double logp(const StanceClassifier& clf, Stance y, const SimplexSequence& s) {
    return std::log(clf.predict_proba(row_normalize(s))[stance_index(y)]);
}

}  // namespace

TEST_CASE("control_step with lambda = 0 is the exact identity") {
    const ToyStanceClassifier clf = smooth_classifier(1);
    std::mt19937_64 rng(2);
    const SimplexSequence s = test::random_sequence(rng, 3, 6, 5.0, 2.0);
    const SimplexSequence out = control_step(s, Stance::Left, 0.0, clf);
    REQUIRE(out.logits.data == s.logits.data);
}

TEST_CASE("control_step output minus input equals lambda times the gradient") {
    const ToyStanceClassifier clf = smooth_classifier(3);
    std::mt19937_64 rng(4);
    const SimplexSequence s = test::random_sequence(rng, 2, 6, 5.0, 1.0);
    const Matrix<double> grad = clf.grad_logprob(Stance::Right, s);

    for (const double lambda : {0.5, 1.0, 7.0, 4000.0}) {
        const SimplexSequence out = control_step(s, Stance::Right, lambda, clf);
        for (std::size_t i = 0; i < s.logits.data.size(); ++i)
            REQUIRE(out.logits.data[i] == s.logits.data[i] + lambda * grad.data[i]);
    }
}

TEST_CASE("control_step matches a hand-derived closed form on a linear-softmax classifier") {
    // one position, |V| = 4, embedding dim 2, hand-set weights
    const Vocabulary vocab = test::make_vocab(0);
    std::mt19937_64 rng(5);
    ToyStanceClassifier clf(vocab, 2, rng);
    // E rows: e_v; W rows: w_c
    const double E[4][2] = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {-1.0, 0.5}};
    const double W[3][2] = {{0.8, -0.2}, {0.1, 0.3}, {-0.5, 0.7}};
    for (std::size_t v = 0; v < 4; ++v)
        for (std::size_t j = 0; j < 2; ++j) clf.embedding()(v, j) = E[v][j];
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t j = 0; j < 2; ++j) clf.head_weight()(c, j) = W[c][j];

    Matrix<double> m(1, 4);
    m(0, 0) = 0.4;
    m(0, 1) = -0.3;
    m(0, 2) = 0.1;
    m(0, 3) = 0.9;
    const SimplexSequence s(std::move(m), 5.0, {Role::Summary});
    const Stance y = Stance::Left;
    const double lambda = 2.5;

    // independent chain rule: p = softmax(s); x = sum_v p_v e_v;
    // z_c = w_c . x; q = softmax(z); dlogq_y/dz = 1_y - q;
    // dz/dx = W; dx/dp_v = e_v; dp/ds = softmax jacobian
    double p[4], mx = -1e30;
    for (int v = 0; v < 4; ++v) mx = std::max(mx, s.logits(0, v));
    double z0 = 0;
    for (int v = 0; v < 4; ++v) {
        p[v] = std::exp(s.logits(0, v) - mx);
        z0 += p[v];
    }
    for (auto& v : p) v /= z0;
    double x[2] = {0, 0};
    for (int v = 0; v < 4; ++v)
        for (int j = 0; j < 2; ++j) x[j] += p[v] * E[v][j];
    double z[3];
    for (int c = 0; c < 3; ++c) z[c] = W[c][0] * x[0] + W[c][1] * x[1];
    const double zm = std::max({z[0], z[1], z[2]});
    double q[3], qs = 0;
    for (int c = 0; c < 3; ++c) {
        q[c] = std::exp(z[c] - zm);
        qs += q[c];
    }
    for (auto& v : q) v /= qs;
    double dz[3];
    for (int c = 0; c < 3; ++c) dz[c] = (c == static_cast<int>(stance_index(y)) ? 1.0 : 0.0) - q[c];
    double dx[2] = {0, 0};
    for (int c = 0; c < 3; ++c)
        for (int j = 0; j < 2; ++j) dx[j] += W[c][j] * dz[c];
    double dp[4];
    for (int v = 0; v < 4; ++v) dp[v] = E[v][0] * dx[0] + E[v][1] * dx[1];
    double dot = 0;
    for (int v = 0; v < 4; ++v) dot += dp[v] * p[v];
    double ds[4];
    for (int v = 0; v < 4; ++v) ds[v] = p[v] * (dp[v] - dot);

    const SimplexSequence out = control_step(s, y, lambda, clf);
    for (int v = 0; v < 4; ++v)
        CHECK(out.logits(0, static_cast<std::size_t>(v)) ==
              Catch::Approx(s.logits(0, static_cast<std::size_t>(v)) + lambda * ds[v]).epsilon(1e-10));

    // cross-check the closed form against finite differences
    const double h = 1e-6;
    SimplexSequence probe = s;
    for (int v = 0; v < 4; ++v) {
        const double orig = probe.logits(0, static_cast<std::size_t>(v));
        probe.logits(0, static_cast<std::size_t>(v)) = orig + h;
        const double up = logp(clf, y, probe);
        probe.logits(0, static_cast<std::size_t>(v)) = orig - h;
        const double down = logp(clf, y, probe);
        probe.logits(0, static_cast<std::size_t>(v)) = orig;
        CHECK(ds[v] == Catch::Approx((up - down) / (2.0 * h)).margin(1e-6));
    }
}

TEST_CASE("a small control step does not decrease the target log-probability") {
    const ToyStanceClassifier clf = smooth_classifier(6);
    std::mt19937_64 rng(7);
    int ascents = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const SimplexSequence s = test::random_sequence(rng, 2, 6, 5.0, 1.0);
        const Stance y = static_cast<Stance>((trial % 3) - 1);
        const SimplexSequence out = control_step(s, y, 0.05, clf);
        if (logp(clf, y, out) >= logp(clf, y, s) - 1e-12) ++ascents;
    }
    CHECK(ascents == 100);
}

TEST_CASE("probability-gradient objective scales the log-prob gradient by p(y)") {
    const ToyStanceClassifier clf = smooth_classifier(8);
    std::mt19937_64 rng(9);
    const SimplexSequence s = test::random_sequence(rng, 1, 6, 5.0, 1.0);
    const double py = clf.predict_proba(row_normalize(s))[stance_index(Stance::Left)];

    const SimplexSequence log_out = control_step(s, Stance::Left, 1.0, clf, GuidanceObjective::LogProb);
    const SimplexSequence prob_out = control_step(s, Stance::Left, 1.0, clf, GuidanceObjective::Prob);
    for (std::size_t i = 0; i < s.logits.data.size(); ++i) {
        const double glog = log_out.logits.data[i] - s.logits.data[i];
        const double gprob = prob_out.logits.data[i] - s.logits.data[i];
        CHECK(gprob == Catch::Approx(py * glog).margin(1e-12));
    }
}

TEST_CASE("non-finite gradients raise a guidance numeric error") {
    const NanGradClassifier clf;
    std::mt19937_64 rng(10);
    const SimplexSequence s = test::random_sequence(rng, 2, 4, 5.0);
    CHECK_THROWS_AS(control_step(s, Stance::Center, 1.0, clf), GuidanceNumericError);
}

TEST_CASE("negative lambda is rejected") {
    const ToyStanceClassifier clf = smooth_classifier(11);
    std::mt19937_64 rng(12);
    const SimplexSequence s = test::random_sequence(rng, 1, 6, 5.0);
    CHECK_THROWS_AS(control_step(s, Stance::Left, -1.0, clf), ConfigError);
}
