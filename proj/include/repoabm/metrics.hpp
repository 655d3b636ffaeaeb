#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "repoabm/ledger.hpp"
#include "repoabm/market.hpp"
#include "repoabm/rng.hpp"

namespace repoabm {

/// Sum of re-used collateral over sum of received collateral (0 when none received).
double reuse_rate(const SystemLedger& system);

/// Notional-weighted mean age of the open contracts at `step` (0 when none).
double average_repo_maturity(const SystemLedger& system, Step step);

using Edge = std::pair<BankId, BankId>;  ///< borrower -> lender

/// Pairs with a positive repo exposure in the ledger, sorted.
std::vector<Edge> exposure_edges(const SystemLedger& system);

/// Interval of consecutive steps [first_step, last_step] at whose end the
/// borrower -> lender exposure was open.
struct EdgeInterval {
    BankId src = 0;
    BankId dst = 0;
    Step first_step = 0;
    Step last_step = 0;
    auto operator<=>(const EdgeInterval&) const = default;
};

/// Directed exposure network aggregated over the window (start, end].
struct NetworkSnapshot {
    std::size_t n = 0;
    std::vector<Edge> edges;  ///< sorted, unique, no self-loops
    Step window_start = 0;
    Step window_end = 0;
};

/// Edge i -> j iff some exposure interval overlaps steps start+1 .. end.
NetworkSnapshot build_network(std::span<const EdgeInterval> history, std::size_t n,
                              Step window_start, Step window_end);

/// |E| / (N (N - 1)).
double density(const NetworkSnapshot& net);

/// |E_t & E_prev| / |E_t | E_prev|; 1 when both are empty.
double jaccard_index(const NetworkSnapshot& current, const NetworkSnapshot& previous);
double jaccard_index(std::span<const Edge> current, std::span<const Edge> previous);

struct DegreeProfile {
    std::vector<std::size_t> in_degree;
    std::vector<std::size_t> out_degree;
};

DegreeProfile degree_profile(const NetworkSnapshot& net);

struct CorePeripheryResult {
    std::vector<BankId> core;   ///< sorted node ids
    std::size_t error_count = 0;
    double p_value = 1.0;
    std::size_t null_samples = 0;
};

/// Undirected view of a directed edge list: pairs (a, b) with a < b.
std::vector<Edge> symmetrize(std::span<const Edge> edges);

/// Error of every degree-ordered prefix core, index k = core size 0..N:
/// missing core-core edges plus present periphery-periphery edges.
/// `order` receives the degree ordering used (descending degree, then id).
std::vector<std::size_t> lip_error_profile(std::size_t n, std::span<const Edge> undirected,
                                           std::vector<BankId>* order = nullptr);

/// Lip core/periphery bipartition on the symmetrized network (the smallest
/// minimizing prefix on ties), with a Monte-Carlo p-value against uniform
/// random graphs of equal node and edge count:
/// p = (1 + #{null error <= observed}) / (1 + null_samples).
CorePeripheryResult lip_core_periphery(const NetworkSnapshot& net, std::size_t null_samples,
                                       Rng& rng);

/// Mean of the last `tail_len` entries. Throws when the series is shorter.
double stationary_value(std::span<const double> series, std::size_t tail_len = 200);

/// Mean of the values within one population standard deviation of the mean
/// (the plain mean if none survive). Throws for fewer than 2 values.
double robust_sweep_mean(std::span<const double> values);

/// System aggregates at the end of one step.
struct MetricsRow {
    Step step = 0;
    double total_assets = 0.0;
    double cash = 0.0;
    double deposits = 0.0;
    double central_bank_funding = 0.0;
    double loans = 0.0;
    double own_funds = 0.0;
    double usable_securities = 0.0;
    double encumbered_securities = 0.0;
    double collateral_received = 0.0;
    double collateral_reused = 0.0;
    double repos = 0.0;
    double excess_liquidity = 0.0;
    double reuse_rate = 0.0;
    std::size_t new_repo_count = 0;
    double new_repo_notional = 0.0;
    std::size_t closed_repo_count = 0;
    double cb_fallback = 0.0;
    double average_maturity = 0.0;
    std::size_t open_contracts = 0;
    std::size_t cascade_depth_max = 0;
    std::size_t floor_events = 0;
};

MetricsRow compute_metrics_row(const SystemLedger& system, double alpha,
                               const ClearingReport* report, std::size_t floor_events);

/// Network statistics of one aggregation window.
struct NetworkRow {
    std::size_t window_length = 0;
    std::size_t window_index = 0;
    Step start = 0;  ///< exclusive
    Step end = 0;    ///< inclusive
    std::size_t edge_count = 0;
    double density = 0.0;
    double jaccard = 0.0;  ///< against the previous window of equal length
    std::optional<CorePeripheryResult> core_periphery;
};

struct NetworkTrackerConfig {
    std::size_t n = 0;
    std::vector<std::size_t> windows{1, 5, 20, 50};
    std::vector<std::size_t> lip_windows{50};  ///< subset of windows running the Lip test
    std::size_t lip_null_samples = 1000;
    std::uint64_t lip_seed = 0;  ///< each window's null draws use mix of seed, length, index
};

/// Seed of the Lip null-model stream for one window.
std::uint64_t lip_window_seed(std::uint64_t seed, std::size_t window_length, std::size_t index);

///
/// Aggregates per-step exposure sets into non-overlapping consecutive windows
/// (start, end] of each configured length and computes their statistics. Fed
/// either live by the simulation or from a stored edge list.
///
class NetworkTracker {
public:
    explicit NetworkTracker(NetworkTrackerConfig config);

    /// Edges open at the end of `step`; steps must be consecutive from 1.
    void observe(Step step, std::span<const Edge> edges);

    const std::vector<NetworkRow>& rows() const noexcept { return rows_; }
    const NetworkTrackerConfig& config() const noexcept { return config_; }

    /// Last completed window of the given length, if any.
    std::optional<NetworkSnapshot> last_snapshot(std::size_t window_length) const;

private:
    struct WindowState {
        std::size_t length = 0;
        bool lip = false;
        std::set<Edge> current;
        std::vector<Edge> previous;
        std::size_t index = 0;
        std::optional<NetworkSnapshot> last;
    };

    NetworkTrackerConfig config_;
    std::vector<WindowState> windows_;
    std::vector<NetworkRow> rows_;
    Step last_step_ = 0;
};

///
/// Records exposure intervals from the per-step edge sets.
///
class EdgeHistory {
public:
    void observe(Step step, std::span<const Edge> edges);
    /// Closed intervals plus the ones still open (ending at the last observed step), sorted.
    std::vector<EdgeInterval> intervals() const;

private:
    std::map<Edge, Step> open_;  ///< edge -> first step of its current interval
    std::vector<EdgeInterval> closed_;
    Step last_step_ = 0;
};

/// Calls `visit(step, edges)` for steps 1..last_step with the sorted edge set
/// open at the end of each step, rebuilt from intervals.
void replay_edges(std::span<const EdgeInterval> history, Step last_step,
                  const std::function<void(Step, std::span<const Edge>)>& visit);

}  // namespace repoabm
