#include "repoabm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <stdexcept>

namespace repoabm {

double reuse_rate(const SystemLedger& system) {
    double reused = 0.0, received = 0.0;
    for (const auto& b : system.banks()) {
        reused += b.collateral_reused;
        received += b.collateral_received;
    }
    return received > 0.0 ? reused / received : 0.0;
}

double average_repo_maturity(const SystemLedger& system, Step step) {
    double weighted = 0.0, total = 0.0;
    for (const auto& [id, c] : system.contracts()) {
        weighted += c.notional * static_cast<double>(step - c.opened_at);
        total += c.notional;
    }
    return total > 0.0 ? weighted / total : 0.0;
}

std::vector<Edge> exposure_edges(const SystemLedger& system) {
    std::vector<Edge> edges;
    for (const auto& b : system.banks())
        for (const auto& [lender, amount] : b.repos_by_lender) edges.emplace_back(b.id, lender);
    return edges;  // banks and map keys iterate in order
}

NetworkSnapshot build_network(std::span<const EdgeInterval> history, std::size_t n,
                              Step window_start, Step window_end) {
    if (window_end <= window_start)
        throw std::invalid_argument("build_network: window must span at least one step");
    NetworkSnapshot net{n, {}, window_start, window_end};
    for (const auto& iv : history) {
        if (iv.src == iv.dst) continue;
        if (iv.first_step <= window_end && iv.last_step >= window_start + 1)
            net.edges.emplace_back(iv.src, iv.dst);
    }
    std::sort(net.edges.begin(), net.edges.end());
    net.edges.erase(std::unique(net.edges.begin(), net.edges.end()), net.edges.end());
    return net;
}

double density(const NetworkSnapshot& net) {
    if (net.n < 2) throw std::invalid_argument("density: need at least 2 nodes");
    return static_cast<double>(net.edges.size()) /
           (static_cast<double>(net.n) * static_cast<double>(net.n - 1));
}

double jaccard_index(std::span<const Edge> current, std::span<const Edge> previous) {
    if (current.empty() && previous.empty()) return 1.0;
    std::size_t common = 0;
    auto a = current.begin();
    auto b = previous.begin();
    while (a != current.end() && b != previous.end()) {
        if (*a < *b) {
            ++a;
        } else if (*b < *a) {
            ++b;
        } else {
            ++common;
            ++a;
            ++b;
        }
    }
    const std::size_t unite = current.size() + previous.size() - common;
    return static_cast<double>(common) / static_cast<double>(unite);
}

double jaccard_index(const NetworkSnapshot& current, const NetworkSnapshot& previous) {
    return jaccard_index(std::span<const Edge>(current.edges), std::span<const Edge>(previous.edges));
}

DegreeProfile degree_profile(const NetworkSnapshot& net) {
    DegreeProfile p{std::vector<std::size_t>(net.n, 0), std::vector<std::size_t>(net.n, 0)};
    for (const auto& [src, dst] : net.edges) {
        ++p.out_degree.at(src);
        ++p.in_degree.at(dst);
    }
    return p;
}

std::vector<Edge> symmetrize(std::span<const Edge> edges) {
    std::vector<Edge> out;
    out.reserve(edges.size());
    for (const auto& [a, b] : edges)
        if (a != b) out.emplace_back(std::min(a, b), std::max(a, b));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

/// Reusable buffers for the prefix-error scan.
class LipWorkspace {
public:
    explicit LipWorkspace(std::size_t n) : n_(n), degree_(n), rank_(n), order_(n), adjacency_(n) {}

    /// Minimal prefix error and the profile if requested.
    std::size_t scan(std::span<const Edge> undirected, std::vector<std::size_t>* profile,
                     std::size_t* best_k) {
        for (auto& list : adjacency_) list.clear();
        std::fill(degree_.begin(), degree_.end(), 0);
        for (const auto& [a, b] : undirected) {
            adjacency_[a].push_back(b);
            adjacency_[b].push_back(a);
            ++degree_[a];
            ++degree_[b];
        }
        std::iota(order_.begin(), order_.end(), BankId{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [&](BankId x, BankId y) { return degree_[x] > degree_[y]; });
        for (std::size_t r = 0; r < n_; ++r) rank_[order_[r]] = r;

        const std::size_t m = undirected.size();
        std::size_t core_edges = 0, touching = 0;
        std::size_t best = m;
        std::size_t arg = 0;
        if (profile) {
            profile->assign(n_ + 1, 0);
            (*profile)[0] = m;
        }
        for (std::size_t k = 1; k <= n_; ++k) {
            const BankId v = order_[k - 1];
            std::size_t to_core = 0;
            for (const BankId u : adjacency_[v])
                if (rank_[u] < k - 1) ++to_core;
            core_edges += to_core;
            touching += degree_[v] - to_core;
            const std::size_t error = k * (k - 1) / 2 - core_edges + (m - touching);
            if (profile) (*profile)[k] = error;
            if (error < best) {
                best = error;
                arg = k;
            }
        }
        if (best_k) *best_k = arg;
        return best;
    }

    const std::vector<BankId>& order() const { return order_; }

private:
    std::size_t n_;
    std::vector<std::size_t> degree_;
    std::vector<std::size_t> rank_;
    std::vector<BankId> order_;
    std::vector<std::vector<BankId>> adjacency_;
};

/// m distinct unordered pairs drawn uniformly (Floyd's algorithm).
void random_graph(std::size_t n, std::size_t m, Rng& rng, std::vector<std::uint8_t>& marks,
                  std::vector<std::uint64_t>& picked, std::vector<Edge>& out) {
    const std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    marks.assign(pairs, 0);
    picked.clear();
    for (std::uint64_t j = pairs - m; j < pairs; ++j) {
        const std::uint64_t t = rng.below(j + 1);
        const std::uint64_t pick = marks[t] ? j : t;
        marks[pick] = 1;
        picked.push_back(pick);
    }
    out.clear();
    for (const std::uint64_t idx : picked) {
        // decode idx -> (a, b), a < b, row-major over the upper triangle
        std::uint64_t a = 0, remaining = idx, row = n - 1;
        while (remaining >= row) {
            remaining -= row;
            ++a;
            --row;
        }
        out.emplace_back(static_cast<BankId>(a), static_cast<BankId>(a + 1 + remaining));
    }
}

}  // namespace

std::vector<std::size_t> lip_error_profile(std::size_t n, std::span<const Edge> undirected,
                                           std::vector<BankId>* order) {
    LipWorkspace ws(n);
    std::vector<std::size_t> profile;
    ws.scan(undirected, &profile, nullptr);
    if (order) *order = ws.order();
    return profile;
}

CorePeripheryResult lip_core_periphery(const NetworkSnapshot& net, std::size_t null_samples,
                                       Rng& rng) {
    if (net.n < 3) throw std::invalid_argument("core-periphery: need at least 3 nodes");
    const auto undirected = symmetrize(net.edges);
    LipWorkspace ws(net.n);
    std::size_t best_k = 0;
    CorePeripheryResult result;
    result.error_count = ws.scan(undirected, nullptr, &best_k);
    result.core.assign(ws.order().begin(), ws.order().begin() + static_cast<std::ptrdiff_t>(best_k));
    std::sort(result.core.begin(), result.core.end());
    result.null_samples = null_samples;

    std::size_t as_good = 0;
    std::vector<std::uint8_t> marks;
    std::vector<std::uint64_t> picked;
    std::vector<Edge> null_edges;
    for (std::size_t s = 0; s < null_samples; ++s) {
        random_graph(net.n, undirected.size(), rng, marks, picked, null_edges);
        if (ws.scan(null_edges, nullptr, nullptr) <= result.error_count) ++as_good;
    }
    result.p_value = static_cast<double>(1 + as_good) / static_cast<double>(1 + null_samples);
    return result;
}

double stationary_value(std::span<const double> series, std::size_t tail_len) {
    if (tail_len == 0 || series.size() < tail_len)
        throw std::invalid_argument("stationary_value: series shorter than the tail");
    const auto tail = series.subspan(series.size() - tail_len);
    return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(tail_len);
}

double robust_sweep_mean(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("robust_sweep_mean: need at least 2 runs");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    double sum = 0.0;
    std::size_t kept = 0;
    for (const double v : values) {
        if (v >= mean - sd && v <= mean + sd) {
            sum += v;
            ++kept;
        }
    }
    return kept == 0 ? mean : sum / static_cast<double>(kept);
}

MetricsRow compute_metrics_row(const SystemLedger& system, double alpha,
                               const ClearingReport* report, std::size_t floor_events) {
    MetricsRow row;
    row.step = system.step();
    for (const auto& b : system.banks()) {
        row.total_assets += b.total_assets();
        row.cash += b.cash;
        row.deposits += b.deposits;
        row.central_bank_funding += b.central_bank_funding;
        row.loans += b.loans;
        row.own_funds += b.own_funds;
        row.usable_securities += b.usable_securities;
        row.encumbered_securities += b.encumbered_securities;
        row.collateral_received += b.collateral_received;
        row.collateral_reused += b.collateral_reused;
        row.repos += b.repos;
    }
    row.excess_liquidity = row.cash - alpha * row.deposits;
    row.reuse_rate = row.collateral_received > 0.0 ? row.collateral_reused / row.collateral_received : 0.0;
    row.average_maturity = average_repo_maturity(system, system.step());
    row.open_contracts = system.contracts().size();
    row.floor_events = floor_events;
    if (report) {
        row.new_repo_count = report->opened.size();
        for (const auto& o : report->opened) row.new_repo_notional += o.notional;
        row.closed_repo_count = report->closed.size();
        for (const double x : report->cb_fallback) row.cb_fallback += x;
        row.cascade_depth_max = report->cascade_depth_max;
    }
    return row;
}

std::uint64_t lip_window_seed(std::uint64_t seed, std::size_t window_length, std::size_t index) {
    return mix64(mix64(seed ^ 0x4C49505F4E554C4CULL) + mix64(window_length) * 0x9E3779B97F4A7C15ULL +
                 index);
}

NetworkTracker::NetworkTracker(NetworkTrackerConfig config) : config_(std::move(config)) {
    if (config_.n < 2) throw std::invalid_argument("network tracker: need at least 2 nodes");
    for (const std::size_t w : config_.windows) {
        if (w == 0) throw std::invalid_argument("network tracker: window length must be >= 1");
        WindowState s;
        s.length = w;
        s.lip = std::find(config_.lip_windows.begin(), config_.lip_windows.end(), w) !=
                config_.lip_windows.end();
        windows_.push_back(std::move(s));
    }
}

void NetworkTracker::observe(Step step, std::span<const Edge> edges) {
    if (step != last_step_ + 1) throw std::invalid_argument("network tracker: steps must be consecutive");
    last_step_ = step;
    for (auto& w : windows_) {
        if (w.length == 1) {
            w.current.clear();
            w.current.insert(edges.begin(), edges.end());
        } else {
            w.current.insert(edges.begin(), edges.end());
        }
        if (step % static_cast<Step>(w.length) != 0) continue;

        NetworkSnapshot snap{config_.n, std::vector<Edge>(w.current.begin(), w.current.end()),
                             step - static_cast<Step>(w.length), step};
        NetworkRow row;
        row.window_length = w.length;
        row.window_index = w.index;
        row.start = snap.window_start;
        row.end = snap.window_end;
        row.edge_count = snap.edges.size();
        row.density = density(snap);
        row.jaccard = jaccard_index(std::span<const Edge>(snap.edges), std::span<const Edge>(w.previous));
        if (w.lip && config_.n >= 3) {
            Rng rng(lip_window_seed(config_.lip_seed, w.length, w.index));
            row.core_periphery = lip_core_periphery(snap, config_.lip_null_samples, rng);
        }
        rows_.push_back(std::move(row));
        w.previous = snap.edges;
        w.last = std::move(snap);
        w.current.clear();
        ++w.index;
    }
}

std::optional<NetworkSnapshot> NetworkTracker::last_snapshot(std::size_t window_length) const {
    for (const auto& w : windows_)
        if (w.length == window_length) return w.last;
    return std::nullopt;
}

void EdgeHistory::observe(Step step, std::span<const Edge> edges) {
    std::set<Edge> now(edges.begin(), edges.end());
    for (auto it = open_.begin(); it != open_.end();) {
        if (!now.contains(it->first)) {
            closed_.push_back({it->first.first, it->first.second, it->second, last_step_});
            it = open_.erase(it);
        } else {
            ++it;
        }
    }
    for (const auto& e : now)
        if (!open_.contains(e)) open_.emplace(e, step);
    last_step_ = step;
}

std::vector<EdgeInterval> EdgeHistory::intervals() const {
    std::vector<EdgeInterval> all = closed_;
    for (const auto& [e, first] : open_) all.push_back({e.first, e.second, first, last_step_});
    std::sort(all.begin(), all.end());
    return all;
}

void replay_edges(std::span<const EdgeInterval> history, Step last_step,
                  const std::function<void(Step, std::span<const Edge>)>& visit) {
    std::vector<const EdgeInterval*> by_start, by_end;
    for (const auto& iv : history) {
        by_start.push_back(&iv);
        by_end.push_back(&iv);
    }
    std::sort(by_start.begin(), by_start.end(),
              [](auto* a, auto* b) { return a->first_step < b->first_step; });
    std::sort(by_end.begin(), by_end.end(),
              [](auto* a, auto* b) { return a->last_step < b->last_step; });
    std::set<Edge> active;
    std::vector<Edge> current;
    std::size_t si = 0, ei = 0;
    for (Step s = 1; s <= last_step; ++s) {
        for (; ei < by_end.size() && by_end[ei]->last_step < s; ++ei)
            active.erase({by_end[ei]->src, by_end[ei]->dst});
        for (; si < by_start.size() && by_start[si]->first_step <= s; ++si)
            if (by_start[si]->last_step >= s) active.emplace(by_start[si]->src, by_start[si]->dst);
        current.assign(active.begin(), active.end());
        visit(s, current);
    }
}

}  // namespace repoabm
