#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repoabm/behavior.hpp"
#include "repoabm/config.hpp"
#include "repoabm/ledger.hpp"
#include "repoabm/market.hpp"
#include "repoabm/metrics.hpp"
#include "repoabm/rng.hpp"

namespace repoabm {

/// Parameters in force at one step once the scenario is applied.
struct EffectiveParams {
    double beta_new = 0.5;
    CounterpartyOrder order = CounterpartyOrder::ByTrust;
};

/// APP: beta_new = 0 inside the window. GFC: counterparties are contacted in
/// random order inside the window (trust keeps updating). Baseline outside.
EffectiveParams apply_scenario(const SimConfig& config, Step step);

/// Seed of run `run_index` under `master_seed`: a bijection of the index for a
/// fixed master, so distinct indices never collide.
std::uint64_t seed_fanout(std::uint64_t master_seed, std::uint64_t run_index);

enum class Phase { MoneyCreation, PaymentShock, CentralBankFunding, Clearing };

enum class RunStatus { Completed, AbortedLoop };

struct DegreeSnapshot {
    std::size_t window_length = 0;
    Step end = 0;
    DegreeProfile degrees;
};

struct RunResult {
    SimConfig config;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::Completed;
    Step abort_step = 0;
    std::string abort_reason;
    std::vector<MetricsRow> metrics;
    std::vector<NetworkRow> network;
    std::vector<EdgeInterval> edges;
    std::vector<DegreeSnapshot> degrees;
    std::size_t floor_events = 0;
    std::size_t bank_steps = 0;
    SystemLedger final_ledger{0};
    TrustMatrix final_trust;
};

struct RunOptions {
    bool track_network = true;   ///< network windows, Lip tests and edge history
    /// Called after each phase of every step (and once after initialization
    /// with step 0 and Phase::Clearing).
    std::function<void(Step, Phase, const SystemLedger&)> on_phase;
};

///
/// One simulation: owns the ledger, the trust matrix, the bank sizes and the
/// random stream. Step t draws money creation, then payment shocks, applies
/// LCR funding, computes repo demands and leverage closures, clears the
/// market and records metrics.
///
class Simulation {
public:
    Simulation(SimConfig config, std::uint64_t seed, RunOptions options = {});

    /// Advances one step. Returns false once the run is aborted.
    bool step();

    const SystemLedger& ledger() const noexcept { return ledger_; }
    SystemLedger& ledger() noexcept { return ledger_; }
    const TrustMatrix& trust() const noexcept { return trust_; }
    TrustMatrix& trust() noexcept { return trust_; }
    const std::vector<double>& sizes() const noexcept { return sizes_; }
    Step current_step() const noexcept { return ledger_.step(); }
    bool aborted() const noexcept { return status_ == RunStatus::AbortedLoop; }
    const std::vector<MetricsRow>& metrics() const noexcept { return metrics_; }
    const std::vector<FundingDecision>& last_decisions() const noexcept { return decisions_; }
    const ClearingReport& last_report() const noexcept { return report_; }

    /// Moves everything recorded so far into a RunResult.
    RunResult finish();

private:
    void notify(Phase phase);

    SimConfig config_;
    std::uint64_t seed_;
    RunOptions options_;
    Rng rng_;
    SystemLedger ledger_;
    TrustMatrix trust_;
    std::vector<double> sizes_;
    std::vector<FundingDecision> decisions_;
    ClearingReport report_;
    std::vector<MetricsRow> metrics_;
    std::optional<NetworkTracker> tracker_;
    std::optional<EdgeHistory> history_;
    RunStatus status_ = RunStatus::Completed;
    std::string abort_reason_;
    std::size_t floor_events_ = 0;
    std::size_t bank_steps_ = 0;
};

/// Runs `config.steps` steps with the given seed.
RunResult run_simulation(const SimConfig& config, std::uint64_t seed, RunOptions options = {});

/// Stationary values of a completed run: means over the last 200 steps of the
/// per-step aggregates, and over the windows ending in the last 200 steps for
/// network statistics (keys like "density_w1", "lip_pvalue_w50").
std::map<std::string, double> stationary_metrics(const RunResult& result, std::size_t tail_len = 200);

struct SweepPointSummary {
    double value = 0.0;
    std::size_t runs_completed = 0;
    std::size_t runs_aborted = 0;
    bool available = false;  ///< false when every run aborted
    std::map<std::string, double> robust_means;
    std::map<std::string, std::vector<double>> run_values;  ///< completed runs, index order
};

struct SweepOptions {
    std::size_t threads = 0;  ///< 0: REPOABM_THREADS or hardware concurrency
    bool track_network = true;
};

/// Thread count from REPOABM_THREADS, else the hardware concurrency (>= 1).
std::size_t default_thread_count();

/// For each grid value: `runs` independent simulations seeded
/// seed_fanout(base.seed, r), stationary metrics per run, robust mean per metric.
/// Aborted runs are excluded and counted.
std::vector<SweepPointSummary> run_sweep(const SweepSpec& sweep, const SimConfig& base,
                                         SweepOptions options = {});

}  // namespace repoabm
