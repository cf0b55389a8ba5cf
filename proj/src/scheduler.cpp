#include "sapiens/scheduler.hpp"

#include <algorithm>

#include "sapiens/errors.hpp"

namespace sapiens {

namespace {

bool eligible(const NodeProfile& node, Role role, const std::set<std::string>& exclusions) {
    return node.kind == NodeKind::Ordinary && !node.abandoned && node.roles.has(role) &&
           !exclusions.count(node.node_id);
}

std::vector<const NodeProfile*> eligible_pool(const NodeRegistry& registry, Role role,
                                              const std::set<std::string>& exclusions,
                                              std::uint64_t shuffle_salt) {
    std::vector<const NodeProfile*> pool;
    for (const NodeProfile* node : registry.all()) {
        if (eligible(*node, role, exclusions)) {
            pool.push_back(node);
        }
    }
    if (shuffle_salt != 0) {
        // exercises order independence: every selector sorts with a total
        // order before returning, so enumeration order must not matter
        std::sort(pool.begin(), pool.end(),
                  [shuffle_salt](const NodeProfile* a, const NodeProfile* b) {
                      return stable_hash64(shuffle_salt, "shuffle", {a->node_id}) <
                             stable_hash64(shuffle_salt, "shuffle", {b->node_id});
                  });
    }
    return pool;
}

// exact fraction compare: a > b
bool fraction_greater(std::pair<std::uint64_t, std::uint64_t> a,
                      std::pair<std::uint64_t, std::uint64_t> b) {
    return (unsigned __int128)a.first * b.second > (unsigned __int128)b.first * a.second;
}

bool fraction_equal(std::pair<std::uint64_t, std::uint64_t> a,
                    std::pair<std::uint64_t, std::uint64_t> b) {
    return (unsigned __int128)a.first * b.second == (unsigned __int128)b.first * a.second;
}

}  // namespace

std::size_t count_eligible(const NodeRegistry& registry, Role role,
                           const std::set<std::string>& exclusions) {
    std::size_t n = 0;
    for (const NodeProfile* node : registry.all()) {
        if (eligible(*node, role, exclusions)) {
            ++n;
        }
    }
    return n;
}

std::vector<std::string> select_by_proximity_pow(const NodeRegistry& registry,
                                                 const SelectionRequest& request,
                                                 double w_pow, double w_dist,
                                                 std::vector<CompositeScore>* scores_out,
                                                 std::uint64_t shuffle_salt) {
    if (request.count == 0) {
        fail(ErrorCode::ValidationError, "selection count must be >= 1");
    }
    auto pool = eligible_pool(registry, request.role_needed, request.exclusions, shuffle_salt);
    if (pool.size() < request.count) {
        fail(ErrorCode::InsufficientNodes,
             "need " + std::to_string(request.count) + " nodes with role " +
                 role_name(request.role_needed) + ", have " + std::to_string(pool.size()));
    }

    std::uint64_t max_pow = 0;
    double max_dist = 0.0;
    std::vector<double> dist(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        max_pow = std::max(max_pow, pool[i]->pow_score);
        dist[i] = registry.distance(pool[i]->node_id, request.requester);
        max_dist = std::max(max_dist, dist[i]);
    }

    std::vector<CompositeScore> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        CompositeScore& s = scores[i];
        s.node_id = pool[i]->node_id;
        s.pow_rank_component = max_pow == 0 ? 0.0 : double(pool[i]->pow_score) / double(max_pow);
        s.proximity_component = max_dist == 0.0 ? 1.0 : 1.0 - dist[i] / max_dist;
        s.total = w_pow * s.pow_rank_component + w_dist * s.proximity_component;
    }

    std::sort(scores.begin(), scores.end(), [](const CompositeScore& a, const CompositeScore& b) {
        if (a.total != b.total) return a.total > b.total;
        return a.node_id < b.node_id;
    });

    std::vector<std::string> selected;
    selected.reserve(request.count);
    for (std::size_t i = 0; i < request.count; ++i) {
        selected.push_back(scores[i].node_id);
    }
    if (scores_out) {
        *scores_out = std::move(scores);
    }
    return selected;
}

std::vector<std::string> select_arbiters(const NodeRegistry& registry, Role pool_role,
                                         std::size_t count,
                                         const std::set<std::string>& exclusions,
                                         std::uint64_t shuffle_salt) {
    if (count == 0) {
        fail(ErrorCode::ValidationError, "arbiter count must be >= 1");
    }
    auto pool = eligible_pool(registry, pool_role, exclusions, shuffle_salt);
    if (pool.size() < count) {
        fail(ErrorCode::InsufficientNodes,
             "need " + std::to_string(count) + " arbiters from the " +
                 role_name(pool_role) + " pool, have " + std::to_string(pool.size()));
    }

    std::sort(pool.begin(), pool.end(), [](const NodeProfile* a, const NodeProfile* b) {
        if (a->active_level != b->active_level) return a->active_level > b->active_level;
        auto fa = a->completion_fraction();
        auto fb = b->completion_fraction();
        if (!fraction_equal(fa, fb)) return fraction_greater(fa, fb);
        if (a->ranking != b->ranking) return a->ranking > b->ranking;
        return a->node_id < b->node_id;
    });

    std::vector<std::string> selected;
    selected.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        selected.push_back(pool[i]->node_id);
    }
    return selected;
}

}  // namespace sapiens
