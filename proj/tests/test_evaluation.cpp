#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tps/corpus.hpp"
#include "tps/evaluation.hpp"
#include "tps/lda.hpp"
#include "tps/rng.hpp"

using tps::CooccurrenceIndex;
using tps::Corpus;
using tps::Document;
using tps::Rng;

namespace {

Document make_doc(std::vector<std::int32_t> ids, std::vector<std::int32_t> counts) {
    Document d;
    d.term_ids = std::move(ids);
    d.counts = std::move(counts);
    return d;
}

Corpus make_corpus(int vocab, std::vector<Document> docs) {
    Corpus c;
    c.vocab_size = vocab;
    c.docs = std::move(docs);
    return c;
}

Eigen::MatrixXd random_topics(Rng& rng, int K, int V) {
    Eigen::MatrixXd beta(K, V);
    for (int k = 0; k < K; ++k) {
        Eigen::VectorXd row(V);
        for (int v = 0; v < V; ++v) row[v] = rng.normal();
        beta.row(k) = tps::softmax(row).transpose();
    }
    return beta;
}

// Reference predictive scorer: replays the same deterministic split, runs its
// own synchronous mean-field loop per occurrence, and averages held-out token
// log probabilities under the mixed distribution.
double oracle_lpp(const Eigen::MatrixXd& beta, double alpha,
                  const std::vector<const Document*>& docs, double fraction,
                  std::uint64_t seed) {
    const Eigen::Index K = beta.rows();
    double total = 0.0;
    std::int64_t tokens = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto split = tps::split_heldout(*docs[d], fraction, tps::mix_seed(seed, d));
        if (!split) continue;

        // Per-occurrence mean-field on the observed half.
        std::vector<std::int32_t> occ;
        for (std::size_t i = 0; i < split->observed.term_ids.size(); ++i)
            for (std::int32_t c = 0; c < split->observed.counts[i]; ++c)
                occ.push_back(split->observed.term_ids[i]);
        Eigen::VectorXd gamma = Eigen::VectorXd::Constant(
            K, alpha + static_cast<double>(occ.size()) / static_cast<double>(K));
        for (int sweep = 0; sweep < 2000; ++sweep) {
            Eigen::VectorXd elog(K);
            for (Eigen::Index k = 0; k < K; ++k) elog[k] = tps::digamma(gamma[k]);
            Eigen::VectorXd gnew = Eigen::VectorXd::Constant(K, alpha);
            for (auto w : occ) {
                Eigen::VectorXd logw = elog + beta.col(w).array().log().matrix();
                const double m = logw.maxCoeff();
                Eigen::VectorXd p = (logw.array() - m).exp();
                gnew += p / p.sum();
            }
            const double delta = (gnew - gamma).cwiseAbs().sum() / static_cast<double>(K);
            gamma = gnew;
            if (delta < 1e-10) break;
        }
        const Eigen::VectorXd theta = gamma / gamma.sum();
        for (std::size_t i = 0; i < split->heldout.term_ids.size(); ++i) {
            const double p = theta.dot(beta.col(split->heldout.term_ids[i]));
            total += split->heldout.counts[i] * std::log(p);
            tokens += split->heldout.counts[i];
        }
    }
    return total / static_cast<double>(tokens);
}

}  // namespace

TEST_CASE("single-topic predictive probability is the per-token log likelihood") {
    // With K = 1, theta = 1 and each held-out token w contributes log beta_w.
    Eigen::MatrixXd beta(1, 3);
    beta << 0.2, 0.3, 0.5;
    Corpus c = make_corpus(3, {make_doc({0, 1}, {5, 5}), make_doc({1, 2}, {4, 4})});

    const double got = tps::log_predictive_probability(beta, 0.1, c, 0.4, 7);

    // Recover the same held-out tokens through the shared splitter.
    double want = 0.0;
    std::int64_t tokens = 0;
    for (std::size_t d = 0; d < c.docs.size(); ++d) {
        const auto split = tps::split_heldout(c.docs[d], 0.4, tps::mix_seed(7, d));
        REQUIRE(split.has_value());
        for (std::size_t i = 0; i < split->heldout.term_ids.size(); ++i) {
            want += split->heldout.counts[i] * std::log(beta(0, split->heldout.term_ids[i]));
            tokens += split->heldout.counts[i];
        }
    }
    CHECK(got == doctest::Approx(want / static_cast<double>(tokens)).epsilon(1e-12));
}

TEST_CASE("uniform topics score -log V per held-out token") {
    const int V = 8;
    Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(2, V, 1.0 / V);
    Corpus c = make_corpus(V, {make_doc({0, 3, 5}, {4, 2, 4})});
    const double got = tps::log_predictive_probability(beta, 0.5, c, 0.3, 11);
    CHECK(got == doctest::Approx(-std::log(static_cast<double>(V))).epsilon(1e-12));
}

TEST_CASE("predictive probability matches the brute-force oracle") {
    Rng rng(77);
    const int K = 2, V = 10;
    const Eigen::MatrixXd beta = random_topics(rng, K, V);

    std::vector<Document> docs;
    for (int d = 0; d < 5; ++d) {
        Document doc;
        for (int v = 0; v < V; ++v) {
            const auto cnt = static_cast<std::int32_t>(rng.uniform_int(4));
            if (cnt > 0) {
                doc.term_ids.push_back(v);
                doc.counts.push_back(cnt);
            }
        }
        if (doc.length() < 2) {
            doc.term_ids = {0, 1};
            doc.counts = {1, 1};
        }
        docs.push_back(std::move(doc));
    }
    std::vector<const Document*> ptrs;
    for (const auto& d : docs) ptrs.push_back(&d);

    const double got =
        tps::log_predictive_probability(beta, 0.2, ptrs, 0.3, 99, 2000, 1e-10);
    const double want = oracle_lpp(beta, 0.2, ptrs, 0.3, 99);
    CHECK(got == doctest::Approx(want).epsilon(1e-8));
    CHECK(got < 0.0);
}

TEST_CASE("predictive probability skips short documents and can run out of them") {
    Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(1, 2, 0.5);
    Corpus only_short = make_corpus(2, {make_doc({0}, {1}), make_doc({1}, {1})});
    CHECK_THROWS_AS(
        (void)tps::log_predictive_probability(beta, 0.1, only_short, 0.5, 0),
        std::invalid_argument);

    // A mix works: the short document is ignored.
    Corpus mixed = make_corpus(2, {make_doc({0}, {1}), make_doc({0, 1}, {3, 3})});
    CHECK_NOTHROW((void)tps::log_predictive_probability(beta, 0.1, mixed, 0.5, 0));
}

TEST_CASE("cooccurrence index counts document frequencies by sorted intersection") {
    Corpus c = make_corpus(4, {
        make_doc({0, 1}, {1, 2}),
        make_doc({0, 2}, {3, 1}),
        make_doc({1, 2, 3}, {1, 1, 1}),
        make_doc({0}, {5}),
    });
    CooccurrenceIndex idx(c);
    CHECK(idx.num_docs() == 4);
    CHECK(idx.doc_frequency(0) == 3);
    CHECK(idx.doc_frequency(1) == 2);
    CHECK(idx.doc_frequency(3) == 1);
    CHECK(idx.joint_frequency(0, 1) == 1);
    CHECK(idx.joint_frequency(0, 2) == 1);
    CHECK(idx.joint_frequency(1, 2) == 1);
    CHECK(idx.joint_frequency(0, 3) == 0);
    CHECK(idx.joint_frequency(2, 2) == 2);

    // Out-of-range words have zero frequency.
    CHECK(idx.doc_frequency(9) == 0);
    CHECK(idx.joint_frequency(0, 9) == 0);
}

TEST_CASE("cooccurrence index grows incrementally to the same counts") {
    Rng rng(31);
    Corpus c = make_corpus(6, {});
    for (int d = 0; d < 30; ++d) {
        Document doc;
        for (int v = 0; v < 6; ++v) {
            if (rng.uniform() < 0.4) {
                doc.term_ids.push_back(v);
                doc.counts.push_back(1 + static_cast<std::int32_t>(rng.uniform_int(3)));
            }
        }
        if (doc.term_ids.empty()) {
            doc.term_ids.push_back(0);
            doc.counts.push_back(1);
        }
        c.docs.push_back(std::move(doc));
    }

    CooccurrenceIndex fresh(c);
    CooccurrenceIndex grown;
    for (const auto& doc : c.docs) grown.add_document(doc);

    // Brute-force doc-set comparison.
    for (int a = 0; a < 6; ++a) {
        std::int64_t df = 0;
        for (const auto& doc : c.docs)
            df += std::count(doc.term_ids.begin(), doc.term_ids.end(), a) > 0 ? 1 : 0;
        CHECK(fresh.doc_frequency(a) == df);
        CHECK(grown.doc_frequency(a) == df);
        for (int b = 0; b < 6; ++b) {
            std::int64_t joint = 0;
            for (const auto& doc : c.docs) {
                const bool has_a = std::count(doc.term_ids.begin(), doc.term_ids.end(), a) > 0;
                const bool has_b = std::count(doc.term_ids.begin(), doc.term_ids.end(), b) > 0;
                if (has_a && has_b) ++joint;
            }
            CHECK(fresh.joint_frequency(a, b) == joint);
            CHECK(grown.joint_frequency(a, b) == joint);
        }
    }
}

TEST_CASE("coherence hits the documented extremes") {
    // Words 0 and 1 always travel together, in half of the docs; a perfectly
    // coherent pair scores 1. Words 2 and 3 are independent: P(2) = P(3) = 1/2,
    // joint = 1/4, so their npmi is 0.
    Corpus c = make_corpus(4, {
        make_doc({0, 1, 2, 3}, {1, 1, 1, 1}),
        make_doc({0, 1, 3}, {1, 1, 1}),
        make_doc({2}, {1}),
        make_doc({2, 3}, {1, 1}),
        // Filler docs so P(0) = P(1) = 1/4 with 8 docs total.
        make_doc({3}, {1}),
        make_doc({2}, {1}),
        make_doc({2, 3}, {1, 1}),
        make_doc({3}, {1}),
    });
    CooccurrenceIndex idx(c);

    // Topic 0's top two words are 0, 1; topic 1's are 2, 3.
    Eigen::MatrixXd beta(2, 4);
    beta << 0.4, 0.35, 0.15, 0.10,
            0.1, 0.15, 0.40, 0.35;

    // Perfect pair: p_ab = p_a = p_b = 1/4 -> npmi = 1 exactly.
    // Independent pair: P(2) = 5/8, P(3) = 6/8... fix expectations by direct count.
    const std::int64_t df2 = idx.doc_frequency(2);
    const std::int64_t df3 = idx.doc_frequency(3);
    const std::int64_t j23 = idx.joint_frequency(2, 3);
    const double p2 = static_cast<double>(df2) / 8.0;
    const double p3 = static_cast<double>(df3) / 8.0;
    const double p23 = static_cast<double>(j23) / 8.0;
    const double want_topic1 = std::log(p23 / (p2 * p3)) / -std::log(p23);

    const double got = tps::npmi(beta, 2, idx);
    CHECK(got == doctest::Approx((1.0 + want_topic1) / 2.0).epsilon(1e-9));
}

TEST_CASE("independent pair scores zero coherence") {
    // P(0) = 1/2, P(1) = 1/2, joint = 1/4: exactly independent, npmi = 0.
    Corpus indep = make_corpus(3, {
        make_doc({0, 1}, {1, 1}),
        make_doc({0, 2}, {1, 1}),
        make_doc({1, 2}, {1, 1}),
        make_doc({2}, {1}),
    });
    Eigen::MatrixXd beta(1, 3);
    beta << 0.5, 0.4, 0.1;
    const double got = tps::npmi(beta, 2, indep);
    CHECK(got == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("coherence corner cases: absent words, universal pairs, never co-occurring") {
    Corpus c = make_corpus(4, {
        make_doc({0, 1}, {1, 1}),
        make_doc({0, 1}, {2, 1}),
        make_doc({0, 2}, {1, 1}),
    });
    CooccurrenceIndex idx(c);

    // Word 3 never appears: any pair with it scores -1.
    Eigen::MatrixXd absent(1, 4);
    absent << 0.1, 0.0, 0.0, 0.9;  // top-2 = {3, 0}
    CHECK(tps::npmi(absent, 2, idx) == doctest::Approx(-1.0));

    // Words 0 and... word 0 appears everywhere; a pair present in every doc
    // carries no signal and scores 0. Pair (0, 0) is never formed; use a
    // two-word universal pair corpus.
    Corpus universal = make_corpus(2, {
        make_doc({0, 1}, {1, 1}),
        make_doc({0, 1}, {3, 2}),
    });
    Eigen::MatrixXd both(1, 2);
    both << 0.6, 0.4;
    CHECK(tps::npmi(both, 2, universal) == doctest::Approx(0.0));

    // Words 1 and 2 both occur but never together: smoothed negative score.
    Eigen::MatrixXd disjoint(1, 4);
    disjoint << 0.0, 0.5, 0.5, 0.0;  // top-2 = {1, 2}
    const double p1 = 2.0 / 3.0, p2 = 1.0 / 3.0, eps = 1e-12;
    const double want = std::log(eps / (p1 * p2)) / -std::log(eps);
    CHECK(tps::npmi(disjoint, 2, idx) == doctest::Approx(want).epsilon(1e-9));
    CHECK(tps::npmi(disjoint, 2, idx) < 0.0);

    CHECK_THROWS_AS((void)tps::npmi(both, 1, idx), std::invalid_argument);
    CooccurrenceIndex empty;
    CHECK_THROWS_AS((void)tps::npmi(both, 2, empty), std::invalid_argument);
}

TEST_CASE("coherence of a hand-checked two-topic table") {
    // Reference corpus with easily counted statistics.
    Corpus c = make_corpus(4, {
        make_doc({0, 1}, {1, 1}),      // 0,1
        make_doc({0, 1, 2}, {1, 1, 1}),// 0,1,2
        make_doc({2, 3}, {1, 1}),      // 2,3
        make_doc({0, 2}, {1, 1}),      // 0,2
        make_doc({1, 3}, {1, 1}),      // 1,3
    });
    // df: 0->3, 1->3, 2->3, 3->2; joint: (0,1)->2, (2,3)->1.
    Eigen::MatrixXd beta(2, 4);
    beta << 0.5, 0.3, 0.1, 0.1,
            0.1, 0.1, 0.5, 0.3;
    const double n = 5.0;
    auto hand = [&](double ja, double pa, double pb) {
        return std::log((ja / n) / (pa * pb)) / -std::log(ja / n);
    };
    const double topic0 = hand(2.0, 3.0 / n, 3.0 / n);
    const double topic1 = hand(1.0, 3.0 / n, 2.0 / n);
    const double got = tps::npmi(beta, 2, c);
    CHECK(got == doctest::Approx((topic0 + topic1) / 2.0).epsilon(1e-9));
}

TEST_CASE("accuracy is the match fraction") {
    CHECK(tps::accuracy({1, 0, 2, 1}, {1, 1, 2, 0}) == doctest::Approx(0.5));
    CHECK(tps::accuracy({0}, {0}) == 1.0);
    CHECK_THROWS_AS((void)tps::accuracy({}, {}), std::invalid_argument);
    CHECK_THROWS_AS((void)tps::accuracy({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("top words sort by probability with index tie-breaks") {
    Eigen::MatrixXd beta(2, 5);
    beta << 0.1, 0.4, 0.2, 0.2, 0.1,
            0.2, 0.2, 0.2, 0.2, 0.2;
    const auto tops = tps::top_word_ids(beta, 3);
    CHECK(tops[0] == std::vector<int>{1, 2, 3});  // 0.4, then tied 0.2s by index
    CHECK(tops[1] == std::vector<int>{0, 1, 2});  // all tied: lowest indices

    // Full-sort oracle comparison on random matrices.
    Rng rng(41);
    Eigen::MatrixXd rand_beta = random_topics(rng, 3, 20);
    const auto got = tps::top_word_ids(rand_beta, 7);
    for (int k = 0; k < 3; ++k) {
        std::vector<int> order(20);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (rand_beta(k, a) != rand_beta(k, b)) return rand_beta(k, a) > rand_beta(k, b);
            return a < b;
        });
        order.resize(7);
        CHECK(got[static_cast<std::size_t>(k)] == order);
    }

    CHECK_THROWS_AS((void)tps::top_word_ids(beta, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)tps::top_word_ids(beta, 6), std::invalid_argument);

    tps::Vocabulary vocab({"a", "b", "c", "d", "e"});
    const auto words = tps::top_words(beta, vocab, 2);
    CHECK(words[0] == std::vector<std::string>{"b", "c"});
}

TEST_CASE("forgetting trace on a constant-rate counter stream") {
    // xi_t = xi_0 + t * increment: divergence grows linearly, the mass ratio
    // decays like 1/t, and the fitted log-log slope is near -1.
    const int K = 2, V = 5;
    const Eigen::MatrixXd xi0 = Eigen::MatrixXd::Constant(K, V, 3.0);
    const Eigen::MatrixXd inc = Eigen::MatrixXd::Constant(K, V, 1.0);

    std::vector<Eigen::MatrixXd> states;
    for (int t = 0; t <= 200; ++t) states.push_back(xi0 + static_cast<double>(t) * inc);

    const auto trace = tps::forgetting_trace(states);
    REQUIRE(trace.divergence.size() == 201);
    const double m0 = xi0.sum();
    const double m = inc.sum();
    for (int t = 0; t <= 200; ++t) {
        CHECK(trace.divergence[static_cast<std::size_t>(t)] ==
              doctest::Approx(static_cast<double>(t) * m).epsilon(1e-12));
        CHECK(trace.ratio[static_cast<std::size_t>(t)] ==
              doctest::Approx(m0 / (m0 + static_cast<double>(t) * m)).epsilon(1e-12));
    }
    // Ratios are monotone nonincreasing.
    for (std::size_t t = 1; t < trace.ratio.size(); ++t)
        CHECK(trace.ratio[t] <= trace.ratio[t - 1] + 1e-15);

    REQUIRE(trace.slope_valid);
    // r_t = m0 / (m0 + t m) behaves as t^-1 for large t; over t in [10, 200]
    // the least-squares slope on the log-log scale sits just above -1.
    CHECK(trace.fitted_slope > -1.1);
    CHECK(trace.fitted_slope < -0.8);

    CHECK_THROWS_AS((void)tps::forgetting_trace({xi0}), std::invalid_argument);
    std::vector<Eigen::MatrixXd> mismatched{xi0, Eigen::MatrixXd::Ones(K, V + 1)};
    CHECK_THROWS_AS((void)tps::forgetting_trace(mismatched), std::invalid_argument);
}

TEST_CASE("trend statistic hits its extremes and center") {
    CHECK(tps::mann_kendall_statistic({1.0, 2.0, 3.0, 4.0}) == 1.0);
    CHECK(tps::mann_kendall_statistic({4.0, 3.0, 2.0, 1.0}) == -1.0);
    CHECK(tps::mann_kendall_statistic({2.0, 2.0, 2.0}) == 0.0);
    // One discordant pair out of three.
    CHECK(tps::mann_kendall_statistic({1.0, 3.0, 2.0}) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)tps::mann_kendall_statistic({1.0}), std::invalid_argument);
}
