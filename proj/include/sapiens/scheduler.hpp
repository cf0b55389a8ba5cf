#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "sapiens/registry.hpp"

namespace sapiens {

struct SelectionRequest {
    std::string task_id;
    std::string requester;  // user node the proximity rule measures against
    Role role_needed = Role::Cro;
    std::size_t count = 1;
    std::set<std::string> exclusions;
};

struct CompositeScore {
    std::string node_id;
    double pow_rank_component = 0.0;   // pow_score / max eligible pow_score
    double proximity_component = 0.0;  // 1 - distance / max eligible distance
    double total = 0.0;                // w_pow * pow + w_dist * proximity
};

// Proximity + proof-of-work selection (CRO/WHH/POCD scheduling). Returns the
// `count` highest-scoring eligible nodes, ties broken by ascending node_id.
// Eligible: ordinary, holds role_needed, not abandoned, not excluded.
// Throws InsufficientNodes when fewer than `count` are eligible.
std::vector<std::string> select_by_proximity_pow(const NodeRegistry& registry,
                                                 const SelectionRequest& request,
                                                 double w_pow, double w_dist,
                                                 std::vector<CompositeScore>* scores_out = nullptr,
                                                 std::uint64_t shuffle_salt = 0);

// Arbitration selection (POCA from the POCD pool, WHA from the WHH pool):
// the m nodes maximizing (active_level, completion_degree, ranking)
// lexicographically, ties by ascending node_id. completion_degree compares
// as an exact fraction. Throws InsufficientNodes.
std::vector<std::string> select_arbiters(const NodeRegistry& registry, Role pool_role,
                                         std::size_t count,
                                         const std::set<std::string>& exclusions,
                                         std::uint64_t shuffle_salt = 0);

// Number of nodes the two selectors would consider eligible.
std::size_t count_eligible(const NodeRegistry& registry, Role role,
                           const std::set<std::string>& exclusions);

}  // namespace sapiens
