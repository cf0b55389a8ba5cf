#include "sapiens/registry.hpp"

#include <cmath>

#include "sapiens/errors.hpp"

namespace sapiens {

const char* role_name(Role role) {
    switch (role) {
        case Role::User: return "user";
        case Role::Pocd: return "pocd";
        case Role::Poca: return "poca";
        case Role::Whh: return "whh";
        case Role::Wha: return "wha";
        case Role::Cro: return "cro";
    }
    return "unknown";
}

std::optional<Role> role_from_name(std::string_view name) {
    if (name == "user") return Role::User;
    if (name == "pocd") return Role::Pocd;
    if (name == "poca") return Role::Poca;
    if (name == "whh") return Role::Whh;
    if (name == "wha") return Role::Wha;
    if (name == "cro") return Role::Cro;
    return std::nullopt;
}

std::vector<Role> RoleSet::to_vector() const {
    std::vector<Role> out;
    for (Role r : {Role::User, Role::Pocd, Role::Poca, Role::Whh, Role::Wha, Role::Cro}) {
        if (has(r)) {
            out.push_back(r);
        }
    }
    return out;
}

CapacityUnits capacity_from_double(double value) {
    return CapacityUnits(std::llround(value * double(kCapacityScale)));
}

double capacity_to_double(CapacityUnits units) {
    return double(units) / double(kCapacityScale);
}

double NodeProfile::completion_degree() const {
    if (assigned_count == 0) {
        return 1.0;
    }
    return double(completed_count) / double(assigned_count);
}

std::pair<std::uint64_t, std::uint64_t> NodeProfile::completion_fraction() const {
    if (assigned_count == 0) {
        return {1, 1};
    }
    return {completed_count, assigned_count};
}

Digest NodeProfile::profile_digest() const {
    CanonicalWriter w;
    w.str(node_id);
    w.u8(std::uint8_t(kind));
    w.u8(roles.bits());
    w.u64(std::uint64_t(std::llround(position.x * 1e9)));
    w.u64(std::uint64_t(std::llround(position.y * 1e9)));
    w.u64(pow_score);
    w.u64(ranking);
    w.u64(std::uint64_t(capacity));
    w.str(key_id);
    return w.sha256();
}

Digest work_proof_digest(const Digest& puzzle_seed, std::uint64_t nonce) {
    CanonicalWriter w;
    w.digest(puzzle_seed);
    w.u64(nonce);
    return w.sha256();
}

bool work_proof_valid(const WorkProof& proof) {
    Digest d = work_proof_digest(proof.puzzle_seed, proof.nonce);
    return leading_zero_bits(d) >= int(proof.difficulty);
}

std::uint64_t find_work_nonce(const Digest& puzzle_seed, std::uint32_t difficulty,
                              std::uint64_t start) {
    for (std::uint64_t nonce = start;; ++nonce) {
        if (leading_zero_bits(work_proof_digest(puzzle_seed, nonce)) >= int(difficulty)) {
            return nonce;
        }
    }
}

void NodeRegistry::set_penalty_params(CapacityUnits capacity_decrement,
                                      std::uint64_t ranking_step) {
    if (capacity_decrement <= 0) {
        fail(ErrorCode::ValidationError, "capacity decrement must be positive");
    }
    capacity_decrement_ = capacity_decrement;
    ranking_step_ = ranking_step;
}

const std::string& NodeRegistry::register_node(NodeProfile profile, TxRecorder* recorder) {
    if (profile.node_id.empty()) {
        fail(ErrorCode::ValidationError, "node_id must be non-empty");
    }
    if (nodes_.count(profile.node_id)) {
        fail(ErrorCode::DuplicateId, "node already registered: " + profile.node_id);
    }
    if (profile.kind == NodeKind::Fog && !profile.roles.empty()) {
        fail(ErrorCode::RoleViolation, "fog node must hold no roles: " + profile.node_id);
    }
    if (profile.roles.has(Role::Wha) && !profile.roles.has(Role::Whh)) {
        fail(ErrorCode::RoleViolation, "WHA must also hold WHH: " + profile.node_id);
    }
    if (profile.capacity < 0) {
        fail(ErrorCode::ValidationError, "capacity must be non-negative: " + profile.node_id);
    }
    if (profile.abandoned) {
        fail(ErrorCode::ValidationError, "cannot register an abandoned node: " + profile.node_id);
    }
    if (profile.kind == NodeKind::Ordinary && profile.key_id.empty()) {
        profile.key_id = "key:" + profile.node_id;
    }

    auto [it, ok] = nodes_.emplace(profile.node_id, std::move(profile));
    (void)ok;
    if (recorder) {
        recorder->emit(TxKind::NodeRegistered, it->first, it->first,
                       it->second.profile_digest());
    }
    return it->first;
}

std::uint64_t NodeRegistry::submit_work_proof(const WorkProof& proof) {
    NodeProfile& node = get_mutable(proof.node_id);
    if (node.abandoned) {
        fail(ErrorCode::AbandonedNode, "abandoned node: " + proof.node_id);
    }
    if (!work_proof_valid(proof)) {
        fail(ErrorCode::InvalidProof,
             "digest has fewer than " + std::to_string(proof.difficulty) +
                 " leading zero bits");
    }
    node.pow_score += 1;
    return node.pow_score;
}

double NodeRegistry::distance(const std::string& a, const std::string& b) const {
    const NodeProfile& pa = get(a);
    const NodeProfile& pb = get(b);
    double dx = pa.position.x - pb.position.x;
    double dy = pa.position.y - pb.position.y;
    return std::sqrt(dx * dx + dy * dy);
}

const NodeProfile& NodeRegistry::record_outcome(const std::string& node_id, Outcome outcome,
                                                TxRecorder* recorder) {
    NodeProfile& node = get_mutable(node_id);
    if (node.abandoned) {
        fail(ErrorCode::AbandonedNode, "abandoned node: " + node_id);
    }
    switch (outcome) {
        case Outcome::Completed:
            node.completed_count += 1;
            if (node.assigned_count < node.completed_count) {
                node.assigned_count = node.completed_count;
            }
            node.active_level += 1;
            break;
        case Outcome::Failed:
            node.capacity = node.capacity > capacity_decrement_
                                ? node.capacity - capacity_decrement_
                                : 0;
            if (node.capacity == 0) {
                node.abandoned = true;
                if (recorder) {
                    recorder->emit(TxKind::NodeAbandoned, node_id, node_id,
                                   Sha256::hash("capacity_exhausted"));
                }
            }
            break;
        case Outcome::Rejected:
        case Outcome::ClaimFailed:
            node.ranking = node.ranking > ranking_step_ ? node.ranking - ranking_step_ : 0;
            break;
    }
    return node;
}

void NodeRegistry::mark_assigned(const std::string& node_id) {
    get_mutable(node_id).assigned_count += 1;
}

void NodeRegistry::note_participation(const std::string& node_id) {
    get_mutable(node_id).active_level += 1;
}

bool NodeRegistry::exists(const std::string& node_id) const {
    return nodes_.count(node_id) != 0;
}

const NodeProfile& NodeRegistry::get(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) {
        fail(ErrorCode::UnknownNode, "no such node: " + node_id);
    }
    return it->second;
}

NodeProfile& NodeRegistry::get_mutable(const std::string& node_id) {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) {
        fail(ErrorCode::UnknownNode, "no such node: " + node_id);
    }
    return it->second;
}

std::vector<const NodeProfile*> NodeRegistry::all() const {
    std::vector<const NodeProfile*> out;
    out.reserve(nodes_.size());
    for (const auto& [id, profile] : nodes_) {
        out.push_back(&profile);
    }
    return out;
}

}  // namespace sapiens
