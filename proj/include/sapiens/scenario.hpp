#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sapiens/audit_oracle.hpp"
#include "sapiens/registry.hpp"
#include "sapiens/task_engine.hpp"
#include "sapiens/workflows.hpp"

namespace sapiens {

struct ScenarioParams {
    std::size_t segments = 4;      // s
    std::size_t redundancy = 2;    // r
    std::size_t quorum = 3;        // POCA quorum, odd
    int max_rounds = 5;            // WHA approval loop bound
    double capacity_decrement = 1.0;  // delta
    std::uint64_t ranking_step = 1;
    double w_pow = 0.5;
    double w_dist = 0.5;
    double fp_rate = 0.0;
    bool mint_enabled = false;
    std::uint32_t pow_difficulty = 0;
    std::size_t wha_count = 1;
    RewardAmounts rewards;
};

struct NodeSpec {
    NodeProfile profile;
    double skill = 1.0;      // manual detection multiplier
    double fail_prob = 0.0;  // CRO per-assignment failure probability
};

struct TaskSpec {
    std::uint64_t time = 0;
    std::string task_id;
    std::string user;
    TaskType task_type = TaskType::Website;
    ServiceKind service = ServiceKind::Automatic;
    std::uint64_t escrow = 0;
    std::vector<AuditTarget> targets;
};

struct PocSpec {
    std::uint64_t time = 0;
    std::string poc_id;
    std::string author;
    std::string pattern;
    std::vector<Verdict> scripted_verdicts;  // optional override of auditor votes
};

struct ClaimSpec {
    std::uint64_t time = 0;
    std::string offer_id;
    std::string author;
    std::string target_user;
    std::uint64_t price = 0;
    Finding finding;
    std::optional<ClaimDecision> decision;  // none: offer expires at drain
    std::uint64_t decision_delay = 1;
};

struct Scenario {
    int schema = 1;
    std::uint64_t run_seed = 0;
    ScenarioParams params;
    std::vector<NodeSpec> nodes;
    std::map<std::string, std::uint64_t> initial_balances;
    std::vector<TaskSpec> tasks;
    std::vector<PocSpec> pocs;
    std::vector<ClaimSpec> claims;

    // All planted vuln patterns; the default POCA vote accepts a POC iff its
    // pattern appears here.
    std::vector<std::string> pattern_catalog() const;
};

// Parses and validates. ParseError carries line/field diagnostics;
// ValidationError names the violated invariant.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin = "<memory>");
void validate_scenario(const Scenario& scenario);

std::string scenario_to_json(const Scenario& scenario);

}  // namespace sapiens
