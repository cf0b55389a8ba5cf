#pragma once

// Shared test fixtures and independent oracles. Oracles here re-derive
// expected values along a different route than the code under test.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sapiens/incentive.hpp"
#include "sapiens/ledger.hpp"
#include "sapiens/registry.hpp"
#include "sapiens/scenario.hpp"
#include "sapiens/scheduler.hpp"

namespace sapiens::testing {

inline TransactionRecord make_tx(std::uint64_t tx_id, TxKind kind, std::string actor,
                                 std::string subject, std::uint64_t time,
                                 std::uint64_t amount = 0) {
    TransactionRecord tx;
    tx.tx_id = tx_id;
    tx.kind = kind;
    tx.actor = std::move(actor);
    tx.subject = std::move(subject);
    tx.logical_time = time;
    tx.amount = amount;
    if (amount > 0) {
        tx.transfer = TransferDir::DebitActor;
        tx.counterparty = "escrow:x";
    }
    return tx;
}

// Chain of `blocks` blocks with `txs_per_block` bookkeeping transactions each.
inline Ledger make_chain(std::size_t blocks, std::size_t txs_per_block = 3) {
    Ledger ledger;
    std::uint64_t tx_id = 1;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::vector<TransactionRecord> batch;
        for (std::size_t i = 0; i < txs_per_block; ++i) {
            batch.push_back(make_tx(tx_id++, TxKind::NodeRegistered,
                                    "n" + std::to_string(i), "n" + std::to_string(i), b));
        }
        ledger.append_block(std::move(batch));
    }
    return ledger;
}

inline NodeProfile make_node(std::string id, std::initializer_list<Role> roles,
                             double x = 0.0, double y = 0.0, std::uint64_t pow = 0) {
    NodeProfile p;
    p.node_id = std::move(id);
    p.kind = NodeKind::Ordinary;
    for (Role r : roles) p.roles.insert(r);
    p.position = {x, y};
    p.pow_score = pow;
    p.capacity = kCapacityScale;
    return p;
}

inline NodeProfile make_fog(std::string id) {
    NodeProfile p;
    p.node_id = std::move(id);
    p.kind = NodeKind::Fog;
    return p;
}

// ---- scheduler oracles -------------------------------------------------

struct OracleScore {
    std::string node_id;
    double total;
};

// Exhaustive scoring oracle: scores every eligible node and fully sorts.
inline std::vector<std::string> proximity_pow_oracle(const NodeRegistry& registry,
                                                     const SelectionRequest& request,
                                                     double w_pow, double w_dist) {
    std::vector<const NodeProfile*> pool;
    for (const NodeProfile* n : registry.all()) {
        if (n->kind != NodeKind::Ordinary || n->abandoned) continue;
        if (!n->roles.has(request.role_needed)) continue;
        if (request.exclusions.count(n->node_id)) continue;
        pool.push_back(n);
    }
    std::uint64_t max_pow = 0;
    double max_dist = 0.0;
    for (const NodeProfile* n : pool) {
        max_pow = std::max(max_pow, n->pow_score);
        max_dist = std::max(max_dist, registry.distance(n->node_id, request.requester));
    }
    std::vector<OracleScore> scored;
    for (const NodeProfile* n : pool) {
        double pow_c = max_pow == 0 ? 0.0 : double(n->pow_score) / double(max_pow);
        double d = registry.distance(n->node_id, request.requester);
        double prox_c = max_dist == 0.0 ? 1.0 : 1.0 - d / max_dist;
        scored.push_back({n->node_id, w_pow * pow_c + w_dist * prox_c});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const OracleScore& a, const OracleScore& b) {
        if (a.total != b.total) return a.total > b.total;
        return a.node_id < b.node_id;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < request.count && i < scored.size(); ++i) {
        out.push_back(scored[i].node_id);
    }
    return out;
}

// Exhaustive arbitration oracle using long-double completion degrees checked
// against exact cross-multiplication.
inline std::vector<std::string> arbiter_oracle(const NodeRegistry& registry, Role pool_role,
                                               std::size_t count,
                                               const std::set<std::string>& exclusions) {
    std::vector<const NodeProfile*> pool;
    for (const NodeProfile* n : registry.all()) {
        if (n->kind != NodeKind::Ordinary || n->abandoned) continue;
        if (!n->roles.has(pool_role)) continue;
        if (exclusions.count(n->node_id)) continue;
        pool.push_back(n);
    }
    auto degree_less = [](const NodeProfile* a, const NodeProfile* b) {
        auto [an, ad] = a->completion_fraction();
        auto [bn, bd] = b->completion_fraction();
        return (unsigned __int128)an * bd < (unsigned __int128)bn * ad;
    };
    std::stable_sort(pool.begin(), pool.end(),
                     [&degree_less](const NodeProfile* a, const NodeProfile* b) {
                         if (a->active_level != b->active_level) {
                             return a->active_level > b->active_level;
                         }
                         if (degree_less(a, b)) return false;
                         if (degree_less(b, a)) return true;
                         if (a->ranking != b->ranking) return a->ranking > b->ranking;
                         return a->node_id < b->node_id;
                     });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count && i < pool.size(); ++i) {
        out.push_back(pool[i]->node_id);
    }
    return out;
}

// ---- majority oracle ---------------------------------------------------

// Plain counting, used against audit_poc over all 2^quorum verdict patterns.
inline bool majority_accepts_oracle(const std::vector<bool>& accepts) {
    std::size_t yes = 0;
    for (bool a : accepts) {
        if (a) ++yes;
    }
    return yes > accepts.size() - yes;
}

// ---- randomized full-economy scenario generator ------------------------

// Builds a randomized but always-valid scenario exercising escrow, rewards,
// penalties, claims and abandonment paths.
inline Scenario random_economy_scenario(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&rng](std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
    };
    auto unit = [&rng]() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    };

    Scenario s;
    s.schema = 1;
    s.run_seed = rng();
    s.params.segments = pick(1, 4);
    s.params.redundancy = pick(1, 3);
    s.params.quorum = 3;
    s.params.max_rounds = int(pick(1, 4));
    s.params.capacity_decrement = 0.25 + unit();
    s.params.ranking_step = pick(1, 2);
    s.params.w_pow = 0.5;
    s.params.w_dist = 0.5;
    s.params.fp_rate = unit() < 0.5 ? 0.0 : 0.3;
    s.params.mint_enabled = true;
    s.params.wha_count = 1;
    s.params.rewards.called_poc = pick(0, 2);

    Scenario scenario = s;

    NodeSpec fog;
    fog.profile.node_id = "fog0";
    fog.profile.kind = NodeKind::Fog;
    scenario.nodes.push_back(fog);

    std::size_t users = pick(1, 2);
    std::size_t cros = pick(3, 5);
    std::size_t whhs = pick(3, 5);
    std::size_t pocds = pick(4, 6);

    auto add_node = [&](const std::string& id, std::initializer_list<Role> roles,
                        double fail_prob) {
        NodeSpec spec;
        spec.profile = make_node(id, roles, unit(), unit(), pick(0, 9));
        spec.profile.ranking = pick(0, 5);
        spec.profile.active_level = pick(0, 5);
        spec.profile.capacity = capacity_from_double(0.5 + unit() * 2.0);
        spec.skill = 0.5 + unit() * 0.5;
        spec.fail_prob = fail_prob;
        scenario.nodes.push_back(spec);
        scenario.initial_balances[id] = pick(0, 50);
    };

    for (std::size_t i = 0; i < users; ++i) {
        add_node("u" + std::to_string(i), {Role::User}, 0.0);
        scenario.initial_balances["u" + std::to_string(i)] = 40 + pick(0, 100);
    }
    for (std::size_t i = 0; i < cros; ++i) {
        add_node("c" + std::to_string(i), {Role::Cro}, unit() < 0.4 ? 0.4 : 0.0);
    }
    for (std::size_t i = 0; i < whhs; ++i) {
        add_node("h" + std::to_string(i), {Role::Whh}, 0.0);
    }
    for (std::size_t i = 0; i < pocds; ++i) {
        add_node("d" + std::to_string(i), {Role::Pocd}, 0.0);
    }

    const char* patterns[] = {"sqli", "xss", "rce"};
    std::size_t n_pocs = pick(1, 3);
    for (std::size_t i = 0; i < n_pocs; ++i) {
        PocSpec poc;
        poc.time = 0;
        poc.poc_id = "p" + std::to_string(i);
        poc.author = "d" + std::to_string(i % pocds);
        poc.pattern = patterns[i % 3];
        scenario.pocs.push_back(poc);
    }

    std::size_t n_tasks = pick(1, 4);
    std::uint64_t vuln_seq = 0;
    for (std::size_t i = 0; i < n_tasks; ++i) {
        TaskSpec task;
        task.time = 3 + i;
        task.task_id = "t" + std::to_string(i);
        task.user = "u" + std::to_string(i % users);
        task.task_type = TaskType::Website;
        task.service = unit() < 0.5 ? ServiceKind::Automatic : ServiceKind::Manual;
        task.escrow = pick(0, 30);
        std::size_t n_targets = pick(1, 5);
        for (std::size_t t = 0; t < n_targets; ++t) {
            AuditTarget target;
            target.target_id = task.task_id + ":w" + std::to_string(t);
            target.target_type = TaskType::Website;
            std::size_t n_vulns = pick(0, 3);
            for (std::size_t v = 0; v < n_vulns; ++v) {
                PlantedVuln vuln;
                vuln.vuln_id = "v" + std::to_string(vuln_seq++);
                vuln.pattern = patterns[pick(0, 2)];
                vuln.severity = Severity(pick(0, 2));
                vuln.base_detectability = unit();
                target.planted.push_back(vuln);
            }
            task.targets.push_back(target);
        }
        scenario.tasks.push_back(task);
    }

    std::size_t n_claims = pick(0, 2);
    for (std::size_t i = 0; i < n_claims; ++i) {
        ClaimSpec claim;
        claim.time = 2 + pick(0, 4);
        claim.offer_id = "cl" + std::to_string(i);
        claim.author = "h" + std::to_string(i % whhs);
        claim.target_user = "u" + std::to_string(i % users);
        claim.price = pick(0, 25);
        claim.finding.finding_id = "ext" + std::to_string(i);
        claim.finding.severity = Severity::High;
        claim.finding.discovered_by = claim.author;
        std::uint64_t mode = pick(0, 2);
        if (mode == 0) {
            claim.decision = ClaimDecision::Claim;
        } else if (mode == 1) {
            claim.decision = ClaimDecision::Decline;
        }
        claim.decision_delay = 1 + pick(0, 2);
        scenario.claims.push_back(claim);
    }

    std::sort(scenario.tasks.begin(), scenario.tasks.end(),
              [](const TaskSpec& a, const TaskSpec& b) {
                  return a.time != b.time ? a.time < b.time : a.task_id < b.task_id;
              });
    validate_scenario(scenario);
    return scenario;
}

}  // namespace sapiens::testing
