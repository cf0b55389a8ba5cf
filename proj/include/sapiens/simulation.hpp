#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sapiens/incentive.hpp"
#include "sapiens/ledger.hpp"
#include "sapiens/metrics.hpp"
#include "sapiens/registry.hpp"
#include "sapiens/scenario.hpp"
#include "sapiens/task_engine.hpp"
#include "sapiens/workflows.hpp"

namespace sapiens {

struct TraceEvent {
    std::uint64_t tick = 0;
    std::string from;
    std::string to;
    std::string note;
};

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::uint64_t shuffle_salt = 0;  // nonzero permutes order-independent internals
};

struct RunResult {
    LedgerHeader header;
    Ledger ledger;
    RunMetrics metrics;
    std::map<std::string, std::vector<TraceEvent>> traces;  // "task:t1", "poc:p1", "claim:c1"
    std::map<std::string, AuditReport> reports;             // reported tasks only
    std::map<std::string, std::uint64_t> balances;
    std::uint64_t mint_counter = 0;

    std::string ledger_text() const { return ledger.dump(header); }
    std::string traces_to_json() const;
    std::string report_to_json(const std::string& task_id) const;
};

// The deterministic event loop: injects timed submissions, advances the POC,
// task and claim state machines one stage per tick, seals one block per tick
// that produced transactions, and checks chain integrity plus SACF
// conservation before returning.
class Simulation {
public:
    explicit Simulation(Scenario scenario, RunOptions options = {});

    RunResult run();

private:
    struct TaskRuntime {
        enum class Stage : std::uint8_t {
            AwaitFragment,
            AwaitExecute,
            AwaitRound,
            Terminal,
        };
        Stage stage = Stage::AwaitFragment;
        std::uint64_t next_tick = 0;
        int round = 0;
        AuditReport draft;
        const TaskSpec* spec = nullptr;
    };

    struct PocRuntime {
        std::uint64_t submitted_tick = 0;
        std::uint64_t audit_tick = 0;
        bool decided = false;
        const PocSpec* spec = nullptr;
    };

    struct ClaimRuntime {
        std::uint64_t decision_tick = 0;
        const ClaimSpec* spec = nullptr;
    };

    void register_nodes();
    void inject(std::uint64_t tick);
    void advance_pocs(std::uint64_t tick);
    void advance_tasks(std::uint64_t tick);
    void advance_claims(std::uint64_t tick, bool drain);
    void seal_and_sync();
    void finish_task(const std::string& task_id, bool reported, int rounds);
    void fail_task(const std::string& task_id, const std::string& reason);
    std::vector<Verdict> cast_verdicts(const PocRuntime& rt);
    RunMetrics collect_metrics(std::uint64_t ticks) const;
    void trace(const std::string& entity, std::uint64_t tick, std::string from, std::string to,
               std::string note);

    Scenario scenario_;
    RunOptions options_;
    std::uint64_t seed_ = 0;

    Ledger ledger_;
    TxRecorder recorder_;
    NodeRegistry registry_;
    Bank bank_;
    TaskEngine engine_;
    std::unique_ptr<Workflows> workflows_;
    LedgerViews views_;

    std::map<std::string, TaskRuntime> task_runtime_;
    std::map<std::string, PocRuntime> poc_runtime_;
    std::map<std::string, ClaimRuntime> claim_runtime_;
    std::map<std::string, std::vector<TraceEvent>> traces_;
    std::map<std::string, AuditReport> reports_;
    std::map<std::string, std::uint64_t> initial_sheet_;  // every account, zeros included
    std::map<std::string, double> skills_;
    std::map<std::string, double> fail_probs_;
    std::string fog_store_;
    std::uint64_t current_tick_ = 0;
};

// Convenience wrapper: load, run, return.
RunResult run_scenario_text(const std::string& text, RunOptions options = {});
RunResult run_scenario_file(const std::string& path, RunOptions options = {});

}  // namespace sapiens
