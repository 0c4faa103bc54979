#include <doctest.h>

#include <json.hpp>

#include "relgnn/error.hpp"
#include "relgnn/eval.hpp"
#include "relgnn/tensor.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace relgnn;
using namespace testutil;

namespace {

std::vector<RankingCase> cases_with_ranks(std::initializer_list<std::size_t> ranks) {
    std::vector<RankingCase> out;
    for (auto r : ranks) out.push_back({{}, Side::tail, 100, r});
    return out;
}

}  // namespace

TEST_CASE("auc examples") {
    CHECK(roc_auc({{0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}}) == 1.0);
    CHECK(roc_auc({{0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}}) == 0.5);
    CHECK(roc_auc({{0.9, 0.8, 0.3, 0.1}, {1, 0, 1, 0}}) == 0.75);
    CHECK_THROWS_AS(roc_auc({{0.1, 0.2}, {1, 1}}), Error);
    CHECK_THROWS_AS(roc_auc({{0.1, 0.2}, {1}}), Error);
}

TEST_CASE("average precision examples") {
    CHECK(average_precision({{0.9, 0.8, 0.1}, {1, 1, 0}}) == 1.0);
    CHECK(average_precision({{0.9, 0.1}, {0, 1}}) == 0.5);
    // ranking 1 0 1 1 0 0: (1/1 + 2/3 + 3/4) / 3
    CHECK(average_precision({{0.9, 0.8, 0.7, 0.6, 0.5, 0.4}, {1, 0, 1, 1, 0, 0}}) ==
          doctest::Approx((1.0 + 2.0 / 3.0 + 0.75) / 3.0).epsilon(1e-15));
    // ties keep input order
    CHECK(average_precision({{0.5, 0.5}, {0, 1}}) == 0.5);
    CHECK_THROWS_AS(average_precision({{0.5, 0.5}, {0, 0}}), Error);
}

TEST_CASE("f1 examples") {
    CHECK(f1_at({{0.9, 0.6, 0.2}, {1, 1, 0}}) == 1.0);
    CHECK(f1_at({{0.4, 0.3, 0.2}, {1, 1, 0}}) == 0.0);
    // tp 2 (0.9, 0.5), fp 1 (0.7), fn 1 (0.3): 2*2 / (4 + 1 + 1)
    CHECK(f1_at({{0.9, 0.7, 0.5, 0.3, 0.1}, {1, 0, 1, 1, 0}}) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("ranking metric examples") {
    auto c = cases_with_ranks({1, 2, 4});
    CHECK(mrr(c) == doctest::Approx((1 + 0.5 + 0.25) / 3).epsilon(1e-15));
    CHECK(mrr(c) == doctest::Approx(0.5833).epsilon(1e-4));
    CHECK(hit_at_k(c, 1) == doctest::Approx(1.0 / 3));
    auto ones = cases_with_ranks({1, 1, 1});
    CHECK(mrr(ones) == 1.0);
    CHECK(hit_at_k(ones, 10) == 1.0);
}

TEST_CASE("metrics match naive references on random fixtures") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 4 + uniform_index(rng, 60);
        LabeledScores ls;
        for (std::size_t i = 0; i < n; ++i) {
            // coarse grid to force ties
            ls.scores.push_back(static_cast<double>(uniform_index(rng, 12)) / 11.0);
            ls.labels.push_back(static_cast<int>(uniform_index(rng, 2)));
        }
        ls.labels[0] = 1;
        ls.labels[1] = 0;
        CHECK(roc_auc(ls) == oracle::auc(ls));
        CHECK(average_precision(ls) == oracle::average_precision(ls));
        CHECK(f1_at(ls, 0.5) == oracle::f1(ls, 0.5));

        std::vector<RankingCase> cases;
        const std::size_t m = 1 + uniform_index(rng, 30);
        double rr = 0.0;
        std::size_t h1 = 0, h10 = 0, h30 = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t r = 1 + uniform_index(rng, 50);
            cases.push_back({{}, Side::head, 60, r});
            rr += 1.0 / r;
            h1 += r <= 1;
            h10 += r <= 10;
            h30 += r <= 30;
        }
        CHECK(mrr(cases) == rr / m);
        CHECK(hit_at_k(cases, 1) == static_cast<double>(h1) / m);
        CHECK(hit_at_k(cases, 10) == static_cast<double>(h10) / m);
        CHECK(hit_at_k(cases, 30) == static_cast<double>(h30) / m);
        CHECK(hit_at_k(cases, 1) <= hit_at_k(cases, 10));
        CHECK(hit_at_k(cases, 10) <= hit_at_k(cases, 30));
        CHECK(mrr(cases) > 0.0);
        CHECK(mrr(cases) <= 1.0);
    }
}

TEST_CASE("auc is invariant under monotone transforms") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        LabeledScores ls;
        for (int i = 0; i < 40; ++i) {
            ls.scores.push_back(uniform_unit(rng));
            ls.labels.push_back(i % 3 == 0);
        }
        LabeledScores t = ls;
        for (auto& s : t.scores) s = std::exp(3.0 * s) - 7.0;
        CHECK(std::abs(roc_auc(ls) - roc_auc(t)) <= 1e-12);
    }
}

TEST_CASE("filtered ranking examples") {
    std::vector<NodeRecord> nodes(4);
    for (auto& n : nodes) n.attributes = {1.0};
    HeteroGraph g(nodes, 1, {{0, 0, 1}, {2, 0, 1}});
    const std::vector<Triple> test{{0, 0, 1}};
    const auto known = g.edge_set();
    SUBCASE("positive above every candidate") {
        TripleScorer s = [](const Triple& t) { return t == Triple{0, 0, 1} ? 0.9 : 0.1; };
        auto cases = filtered_ranking(s, g, test, known);
        REQUIRE(cases.size() == 2);
        for (const auto& c : cases) CHECK(c.rank == 1);
        // head side drops (2,0,1) which is known: candidates 1 and 3
        CHECK(cases[0].side == Side::head);
        CHECK(cases[0].candidates == 2);
    }
    SUBCASE("a tie ranks pessimistically") {
        TripleScorer s = [](const Triple& t) { return t == Triple{0, 0, 1} || t == Triple{0, 0, 3} ? 0.7 : 0.1; };
        auto cases = filtered_ranking(s, g, test, known);
        CHECK(cases[0].rank == 1);
        CHECK(cases[1].rank == 2);
    }
    SUBCASE("known competitors never count") {
        TripleScorer s = [](const Triple& t) { return t == Triple{2, 0, 1} ? 1.0 : 0.5 - 0.1 * t.src; };
        auto cases = filtered_ranking(s, g, test, known);
        CHECK(cases[0].rank == 1);
    }
    SUBCASE("test triple must be known") {
        TripleScorer s = [](const Triple&) { return 0.5; };
        CHECK_THROWS_AS(filtered_ranking(s, g, std::vector<Triple>{{1, 0, 3}}, known), Error);
    }
    SUBCASE("empty candidate set") {
        std::vector<NodeRecord> two(2);
        for (auto& n : two) n.attributes = {1.0};
        HeteroGraph full(two, 1, {{0, 0, 1}, {1, 0, 1}, {0, 0, 0}, {1, 0, 0}});
        TripleScorer s = [](const Triple&) { return 0.5; };
        CHECK_THROWS_AS(filtered_ranking(s, full, std::vector<Triple>{{0, 0, 1}}, full.edge_set()), Error);
    }
}

TEST_CASE("filtered ranking matches exhaustive scoring") {
    Rng grng(23);
    auto g = random_graph(grng, 20, 2, 2, 60);
    const auto known = g.edge_set();
    TripleScorer s = [](const Triple& t) { return std::round(10 * sigmoid(std::sin(3.0 * t.src + 1.7 * t.dst + t.rel))) / 10; };
    std::vector<Triple> test(g.edges().begin(), g.edges().begin() + 15);
    auto cases = filtered_ranking(s, g, test, known);
    REQUIRE(cases.size() == 30);
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& p = test[i];
        for (int side = 0; side < 2; ++side) {
            std::size_t rank = 1, cands = 0;
            for (NodeId x = 0; x < g.num_nodes(); ++x) {
                Triple q = p;
                (side == 0 ? q.src : q.dst) = x;
                const NodeId orig = side == 0 ? p.src : p.dst;
                if (x == orig || g.node_type(x) != g.node_type(orig) || known.contains(q)) continue;
                ++cands;
                if (s(q) >= s(p)) ++rank;
            }
            const auto& c = cases[2 * i + side];
            CHECK(c.positive == p);
            CHECK(c.candidates == cands);
            CHECK(c.rank == rank);
        }
    }
}

TEST_CASE("metrics report json layout") {
    MetricsReport r;
    r.auc = 0.75;
    r.ap = 0.5;
    r.f1 = 0.25;
    r.mrr = 0.125;
    r.hit = {{1, 0.1}, {10, 0.5}, {30, 0.9}};
    r.n_cases = 6;
    const std::string text = r.to_json();
    CHECK(text == R"({"auc":0.75,"ap":0.5,"f1_at_0.5":0.25,"mrr":0.125,"hit":{"1":0.1,"10":0.5,"30":0.9},"n_cases":6})");
    auto j = nlohmann::json::parse(text);
    CHECK(j["hit"].size() == 3);
}

TEST_CASE("evaluate end to end on a scorer") {
    Rng grng(29);
    auto g = random_graph(grng, 24, 2, 2, 80);
    TripleScorer s = [&g](const Triple& t) { return g.has_edge(t) ? 0.8 : 0.3; };
    std::vector<Triple> test(g.edges().begin(), g.edges().begin() + 10);
    const std::size_t ks[] = {1, 10, 30};
    auto r = evaluate(s, g, test, g.edge_set(), ks, 4);
    CHECK(r.auc == 1.0);
    CHECK(r.mrr == 1.0);
    CHECK(r.n_cases == 20);
    CHECK(r.hit.size() == 3);
    auto again = evaluate(s, g, test, g.edge_set(), ks, 4);
    CHECK(again.to_json() == r.to_json());
    auto negs = classification_negatives(g, test, g.edge_set(), 4);
    CHECK(negs.size() == test.size());
    for (const auto& n : negs) CHECK_FALSE(g.has_edge(n));
}
