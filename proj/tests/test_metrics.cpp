#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "repoabm/metrics.hpp"

using namespace repoabm;

namespace {

NetworkSnapshot snapshot(std::size_t n, std::vector<Edge> edges) {
    std::sort(edges.begin(), edges.end());
    return {n, std::move(edges), 0, 1};
}

/// Minimal prefix error by direct counting over the degree order.
std::size_t naive_min_error(std::size_t n, const std::vector<Edge>& und) {
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    std::vector<std::size_t> deg(n, 0);
    for (const auto& [a, b] : und) {
        adj[a][b] = adj[b][a] = true;
        ++deg[a];
        ++deg[b];
    }
    std::vector<BankId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](BankId a, BankId b) { return deg[a] > deg[b]; });
    std::size_t best = SIZE_MAX;
    for (std::size_t k = 0; k <= n; ++k) {
        std::vector<bool> core(n, false);
        for (std::size_t i = 0; i < k; ++i) core[order[i]] = true;
        std::size_t err = 0;
        for (BankId a = 0; a < n; ++a)
            for (BankId b = a + 1; b < n; ++b) {
                if (core[a] && core[b] && !adj[a][b]) ++err;
                if (!core[a] && !core[b] && adj[a][b]) ++err;
            }
        best = std::min(best, err);
    }
    return best;
}

/// Exact p-value: share of all graphs with n nodes and m edges whose
/// minimal error is at most `observed`.
double exact_p_value(std::size_t n, std::size_t m, std::size_t observed) {
    std::vector<Edge> pairs;
    for (BankId a = 0; a < n; ++a)
        for (BankId b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
    std::vector<bool> pick(pairs.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(m), true);
    std::size_t total = 0, hits = 0;
    do {
        std::vector<Edge> g;
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (pick[i]) g.push_back(pairs[i]);
        ++total;
        if (naive_min_error(n, g) <= observed) ++hits;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("re-use rate") {
    SystemLedger s(3);
    CHECK(reuse_rate(s) == 0.0);
    s.bank(0).collateral_received = 10;
    s.bank(0).collateral_reused = 4;
    s.bank(1).collateral_received = 30;
    s.bank(1).collateral_reused = 6;
    CHECK(reuse_rate(s) == doctest::Approx(0.25));
}

TEST_CASE("average maturity is notional weighted") {
    SystemLedger s(2);
    apply_money_creation(s.bank(0), 1000, 0.09, 0.5);
    s.apply_central_bank_funding(1, 100);
    s.set_step(2);
    s.open_repo(0, 1, 10, {10, 0});
    s.set_step(6);
    s.open_repo(0, 1, 30, {30, 0});
    CHECK(average_repo_maturity(s, 10) == doctest::Approx((10 * 8 + 30 * 4) / 40.0));
    CHECK(average_repo_maturity(SystemLedger(2), 10) == 0.0);
    const auto edges = exposure_edges(s);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0] == Edge{0, 1});
}

TEST_CASE("network aggregation over a window") {
    const std::vector<EdgeInterval> h{{0, 1, 1, 2}, {1, 2, 3, 3}, {2, 0, 5, 9}, {0, 1, 6, 6}};
    auto net = build_network(h, 3, 0, 4);
    CHECK(net.edges == std::vector<Edge>{{0, 1}, {1, 2}});
    net = build_network(h, 3, 4, 6);
    CHECK(net.edges == std::vector<Edge>{{0, 1}, {2, 0}});
    net = build_network(h, 3, 2, 3);
    CHECK(net.edges == std::vector<Edge>{{1, 2}});
    CHECK(build_network(h, 3, 9, 12).edges.empty());
    CHECK_THROWS_AS(build_network(h, 3, 4, 4), std::invalid_argument);
}

TEST_CASE("density and jaccard") {
    const auto a = snapshot(4, {{0, 1}, {1, 2}, {2, 3}});
    CHECK(density(a) == doctest::Approx(3.0 / 12));
    const auto b = snapshot(4, {{0, 1}, {1, 2}, {3, 0}});
    CHECK(jaccard_index(a, b) == doctest::Approx(2.0 / 4));
    CHECK(jaccard_index(a, a) == 1.0);
    CHECK(jaccard_index(snapshot(4, {}), snapshot(4, {})) == 1.0);
    CHECK(jaccard_index(a, snapshot(4, {})) == 0.0);
}

TEST_CASE("degrees satisfy the handshake identity") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 10;
        std::vector<Edge> edges;
        for (BankId i = 0; i < n; ++i)
            for (BankId j = 0; j < n; ++j)
                if (i != j && rng.uniform() < 0.2) edges.emplace_back(i, j);
        const auto net = snapshot(n, edges);
        const auto p = degree_profile(net);
        const auto in = std::accumulate(p.in_degree.begin(), p.in_degree.end(), std::size_t{0});
        const auto out = std::accumulate(p.out_degree.begin(), p.out_degree.end(), std::size_t{0});
        CHECK(in == edges.size());
        CHECK(out == edges.size());
    }
    const auto p = degree_profile(snapshot(3, {{0, 1}, {0, 2}, {2, 1}}));
    CHECK(p.out_degree == std::vector<std::size_t>{2, 0, 1});
    CHECK(p.in_degree == std::vector<std::size_t>{0, 2, 1});
}

TEST_CASE("symmetrize merges reciprocal edges") {
    CHECK(symmetrize(std::vector<Edge>{{1, 0}, {0, 1}, {2, 1}, {3, 3}}) == std::vector<Edge>{{0, 1}, {1, 2}});
}

TEST_CASE("error profile ends") {
    Rng rng(4);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 12;
        std::vector<Edge> und;
        for (BankId a = 0; a < n; ++a)
            for (BankId b = a + 1; b < n; ++b)
                if (rng.uniform() < 0.3) und.emplace_back(a, b);
        const auto prof = lip_error_profile(n, und);
        REQUIRE(prof.size() == n + 1);
        CHECK(prof.front() == und.size());
        CHECK(prof.back() == n * (n - 1) / 2 - und.size());
        CHECK(*std::min_element(prof.begin(), prof.end()) == naive_min_error(n, und));
    }
}

TEST_CASE("complete graph is all core") {
    std::vector<Edge> k4;
    for (BankId a = 0; a < 4; ++a)
        for (BankId b = a + 1; b < 4; ++b) k4.emplace_back(a, b);
    Rng rng(5);
    const auto r = lip_core_periphery(snapshot(4, k4), 100, rng);
    CHECK(r.error_count == 0);
    // cores of size 3 and 4 both fit exactly; ties go to the smaller core
    CHECK(r.core == std::vector<BankId>{0, 1, 2});
    // every null graph with six edges on four nodes is K4 itself
    CHECK(r.p_value == 1.0);
}

TEST_CASE("star p-value agrees with exhaustive enumeration") {
    const auto star = snapshot(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    Rng rng(6);
    const std::size_t samples = 4000;
    const auto r = lip_core_periphery(star, samples, rng);
    CHECK(r.error_count == naive_min_error(5, symmetrize(star.edges)));
    const double exact = exact_p_value(5, 4, r.error_count);
    const double se = std::sqrt(exact * (1 - exact) / samples);
    CHECK(std::abs(r.p_value - exact) < 4 * se + 1.0 / samples);
}

TEST_CASE("a large star is significant") {
    std::vector<Edge> edges;
    for (BankId j = 1; j < 20; ++j) edges.emplace_back(0, j);
    Rng rng(7);
    const auto r = lip_core_periphery(snapshot(20, edges), 1000, rng);
    CHECK(r.core == std::vector<BankId>{0});
    CHECK(r.error_count == 0);
    CHECK(r.p_value <= 0.02);
}

TEST_CASE("random graphs are rarely significant") {
    Rng rng(8);
    int above = 0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 20;
        std::vector<Edge> edges;
        for (BankId a = 0; a < n; ++a)
            for (BankId b = a + 1; b < n; ++b)
                if (rng.uniform() < 0.15) edges.emplace_back(a, b);
        const auto r = lip_core_periphery(snapshot(n, edges), 200, rng);
        if (r.p_value > 0.05) ++above;
    }
    CHECK(above >= trials * 9 / 10);
}

TEST_CASE("stationary value and robust mean") {
    const std::vector<double> s{1, 2, 3, 4, 5};
    CHECK(stationary_value(s, 2) == doctest::Approx(4.5));
    CHECK(stationary_value(s, 5) == doctest::Approx(3));
    CHECK_THROWS_AS(stationary_value(s, 6), std::invalid_argument);
    CHECK_THROWS_AS(stationary_value(s, 0), std::invalid_argument);

    // mean 21.2, population sd 37.4: only 100 is outside one sd
    const std::vector<double> v{1, 2, 1, 2, 100};
    CHECK(robust_sweep_mean(v) == doctest::Approx(1.5));
    CHECK(robust_sweep_mean(std::vector<double>{3, 3}) == 3.0);
    CHECK_THROWS_AS(robust_sweep_mean(std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("tracker windows") {
    NetworkTrackerConfig tc;
    tc.n = 3;
    tc.windows = {1, 2};
    tc.lip_windows = {2};
    tc.lip_null_samples = 10;
    NetworkTracker tr(tc);
    const std::vector<std::vector<Edge>> steps{{{0, 1}}, {{1, 2}}, {}, {{0, 1}}};
    for (std::size_t s = 0; s < steps.size(); ++s) tr.observe(static_cast<Step>(s + 1), steps[s]);
    std::vector<NetworkRow> w1, w2;
    for (const auto& r : tr.rows()) (r.window_length == 1 ? w1 : w2).push_back(r);
    REQUIRE(w1.size() == 4);
    REQUIRE(w2.size() == 2);
    CHECK(w2[0].start == 0);
    CHECK(w2[0].end == 2);
    CHECK(w2[0].edge_count == 2);
    CHECK(w2[1].edge_count == 1);
    CHECK(w2[1].jaccard == doctest::Approx(0.5));
    CHECK(w2[0].core_periphery.has_value());
    CHECK_FALSE(w1[0].core_periphery.has_value());
    CHECK(w1[2].edge_count == 0);
    CHECK(w1[2].jaccard == 0.0);
    CHECK(w1[3].jaccard == 0.0);
    CHECK(tr.last_snapshot(2)->edges == std::vector<Edge>{{0, 1}});
    CHECK_THROWS_AS(tr.observe(6, {}), std::invalid_argument);
}

TEST_CASE("edge history replays the observed edge sets") {
    Rng rng(9);
    const std::size_t n = 6;
    std::vector<std::vector<Edge>> observed;
    EdgeHistory h;
    for (Step s = 1; s <= 60; ++s) {
        std::vector<Edge> e;
        for (BankId i = 0; i < n; ++i)
            for (BankId j = 0; j < n; ++j)
                if (i != j && rng.uniform() < 0.15) e.emplace_back(i, j);
        h.observe(s, e);
        observed.push_back(e);
    }
    const auto iv = h.intervals();
    std::size_t visits = 0;
    replay_edges(iv, 60, [&](Step s, std::span<const Edge> edges) {
        CHECK(std::vector<Edge>(edges.begin(), edges.end()) == observed[static_cast<std::size_t>(s - 1)]);
        ++visits;
    });
    CHECK(visits == 60);

    // windows rebuilt from intervals match the live union
    for (Step start = 0; start + 5 <= 60; start += 5) {
        std::set<Edge> u;
        for (Step s = start + 1; s <= start + 5; ++s)
            u.insert(observed[static_cast<std::size_t>(s - 1)].begin(), observed[static_cast<std::size_t>(s - 1)].end());
        CHECK(build_network(iv, n, start, start + 5).edges == std::vector<Edge>(u.begin(), u.end()));
    }
}
