#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "steersum/metrics.hpp"

using namespace steersum;

namespace {

StancePair pair_of(int doc, int sum) {
    return {stance_from_int(doc), stance_from_int(sum), ""};
}

}  // namespace

TEST_CASE("success rate counts exact label matches") {
    const std::vector<StancePair> pairs = {pair_of(-1, -1), pair_of(0, 1), pair_of(1, 1), pair_of(0, 0)};
    CHECK(success_rate(pairs) == 0.75);
    CHECK(success_rate({pair_of(1, 1), pair_of(0, 0)}) == 1.0);
    CHECK_THROWS_AS(success_rate({}), DataError);
}

TEST_CASE("stance distance is the mean absolute label difference") {
    CHECK(stance_distance({pair_of(-1, 1)}) == 2.0);
    CHECK(stance_distance({pair_of(0, 1), pair_of(0, -1)}) == 1.0);
    CHECK_THROWS_AS(stance_distance({}), DataError);
}

TEST_CASE("metrics match a brute-force recount on 1000 random pairs") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> lab(-1, 1);
    std::vector<StancePair> pairs;
    for (int i = 0; i < 1000; ++i) pairs.push_back(pair_of(lab(rng), lab(rng)));

    // independent oracle: integer counting
    long long hits = 0, dist_sum = 0;
    std::array<std::int64_t, 5> buckets{};
    for (const auto& p : pairs) {
        const int d = stance_value(p.doc_label), s = stance_value(p.sum_label);
        if (d == s) ++hits;
        dist_sum += std::abs(d - s);
        buckets[static_cast<std::size_t>((s - d) + 2)]++;
    }

    REQUIRE(success_rate(pairs) == static_cast<double>(hits) / 1000.0);
    REQUIRE(stance_distance(pairs) == static_cast<double>(dist_sum) / 1000.0);
    REQUIRE(drift_histogram(pairs) == buckets);

    std::int64_t total = 0;
    for (const auto b : drift_histogram(pairs)) total += b;
    REQUIRE(total == 1000);
}

TEST_CASE("drift histogram buckets by summary minus document shift") {
    const auto h1 = drift_histogram({pair_of(0, 1)});
    CHECK(h1[3] == 1);  // Lean Right
    const auto h2 = drift_histogram({pair_of(-1, 1)});
    CHECK(h2[4] == 1);  // Right
    const auto h3 = drift_histogram({pair_of(1, 1), pair_of(0, 0), pair_of(-1, -1)});
    CHECK(h3[2] == 3);  // No change
}

TEST_CASE("suc = 1 iff dist = 0 iff all drift mass in No change") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> lab(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<StancePair> pairs;
        for (int i = 0; i < 17; ++i) pairs.push_back(pair_of(lab(rng), lab(rng)));
        const double suc = success_rate(pairs);
        const double dist = stance_distance(pairs);
        const auto hist = drift_histogram(pairs);
        CHECK((suc == 1.0) == (dist == 0.0));
        CHECK((suc == 1.0) == (hist[2] == 17));
        CHECK(dist <= 2.0);
        CHECK(dist >= 1.0 - suc);
    }
}

TEST_CASE("inherent bias is right frequency minus left frequency over center docs") {
    const std::vector<StancePair> pairs = {pair_of(0, 1), pair_of(0, 1), pair_of(0, -1), pair_of(0, 0)};
    CHECK(inherent_bias(pairs) == 0.25);
    CHECK(inherent_bias({pair_of(0, 0), pair_of(0, 0)}) == 0.0);

    // antisymmetry under swapping +1 and -1 summaries
    std::vector<StancePair> swapped = pairs;
    for (auto& p : swapped) p.sum_label = stance_from_int(-stance_value(p.sum_label));
    CHECK(inherent_bias(swapped) == -inherent_bias(pairs));

    CHECK_THROWS_AS(inherent_bias({pair_of(1, 0)}), DataError);
    CHECK_THROWS_AS(inherent_bias({}), DataError);
}

TEST_CASE("rouge scores: identical, hand-enumerated, and disjoint cases") {
    // identical sequences
    const std::vector<int> same = {3, 4, 5, 6};
    const RougeScores ident = rouge_scores(same, same);
    CHECK(ident.r1 == 1.0);
    CHECK(ident.r2 == 1.0);
    CHECK(ident.rl == 1.0);

    // hand-enumerated: cand [a,b,c] vs ref [a,b,d]
    const RougeScores hand = rouge_scores({0, 1, 2}, {0, 1, 3});
    CHECK(hand.r1 == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(hand.r2 == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(hand.rl == Catch::Approx(2.0 / 3.0).epsilon(1e-12));

    // disjoint vocabularies
    const RougeScores disjoint = rouge_scores({0, 1}, {2, 3});
    CHECK(disjoint.r1 == 0.0);
    CHECK(disjoint.r2 == 0.0);
    CHECK(disjoint.rl == 0.0);

    CHECK_THROWS_AS(rouge_scores({1}, {}), DataError);
}

TEST_CASE("rouge F1 is symmetric under swapping candidate and reference") {
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<int> tok(0, 6);
    std::uniform_int_distribution<std::size_t> len(1, 12);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> a(len(rng)), b(len(rng));
        for (auto& t : a) t = tok(rng);
        for (auto& t : b) t = tok(rng);
        const RougeScores ab = rouge_scores(a, b);
        const RougeScores ba = rouge_scores(b, a);
        CHECK(ab.r1 == Catch::Approx(ba.r1).margin(1e-12));
        CHECK(ab.r2 == Catch::Approx(ba.r2).margin(1e-12));
        CHECK(ab.rl == Catch::Approx(ba.rl).margin(1e-12));
    }
}

TEST_CASE("abstractiveness: fragment density cases") {
    // verbatim span: density = |s|
    const std::vector<int> doc = {0, 1, 2, 3, 4, 5};
    const std::vector<int> span = {2, 3, 4};
    CHECK(abstractiveness(doc, span) == 3.0);

    // disjoint tokens: 0
    CHECK(abstractiveness(doc, {7, 8}) == 0.0);

    // doc [a,b,c,d], summary [a,b,x,c] -> fragments [a,b],[c] -> (4+1)/4
    CHECK(abstractiveness({0, 1, 2, 3}, {0, 1, 9, 2}) == 1.25);

    CHECK_THROWS_AS(abstractiveness(doc, {}), DataError);
}

TEST_CASE("abstractiveness is 0 iff no shared token; |s| iff one verbatim span") {
    std::mt19937_64 rng(66);
    std::uniform_int_distribution<int> tok(0, 9);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> doc(20);
        for (auto& t : doc) t = tok(rng);
        std::uniform_int_distribution<std::size_t> start(0, 14);
        const std::size_t s0 = start(rng);
        const std::vector<int> span(doc.begin() + s0, doc.begin() + s0 + 5);
        CHECK(abstractiveness(doc, span) == 5.0);

        const std::vector<int> foreign = {11, 12, 13};
        CHECK(abstractiveness(doc, foreign) == 0.0);
    }
}

TEST_CASE("build_report assembles all metrics and flags missing references") {
    const Vocabulary vocab = test::make_vocab(12);
    std::mt19937_64 rng(77);
    ToyStanceClassifier clf(vocab, 8, rng);
    std::normal_distribution<double> dist(0.0, 0.5);
    for (auto& v : clf.head_weight().data) v = dist(rng);

    const std::vector<std::vector<int>> docs = {{4, 5, 6}, {7, 8, 9}};
    const std::vector<std::vector<int>> sums = {{4, 5, 6}, {7, 8, 9}};

    SECTION("identical texts give suc 1, dist 0, rouge 1") {
        const EvalReport r = build_report(docs, sums, &sums, clf);
        CHECK(r.n == 2);
        CHECK(r.suc == 1.0);
        CHECK(r.dist == 0.0);
        REQUIRE(r.rouge.has_value());
        CHECK(r.rouge->r1 == 1.0);
        CHECK(r.rouge->r2 == 1.0);
        CHECK(r.rouge->rl == 1.0);
        std::int64_t total = 0;
        for (const auto b : r.drift) total += b;
        CHECK(total == r.n);
    }

    SECTION("omitted references leave the rouge block absent and flagged") {
        const EvalReport r = build_report(docs, sums, nullptr, clf);
        CHECK_FALSE(r.rouge.has_value());
        const auto j = r.to_json();
        CHECK(j.contains("rouge_skipped"));
        CHECK_FALSE(j.contains("rouge1"));
    }

    SECTION("length mismatch is a data error") {
        const std::vector<std::vector<int>> short_sums = {{4}};
        CHECK_THROWS_AS(build_report(docs, short_sums, nullptr, clf), DataError);
    }
}

TEST_CASE("drift histogram CSV has one line per bucket") {
    EvalReport r;
    r.drift = {1, 2, 3, 4, 5};
    std::ostringstream out;
    r.drift_csv(out);
    CHECK(out.str() ==
          "bucket,count\nLeft,1\nLean Left,2\nNo change,3\nLean Right,4\nRight,5\n");
}
