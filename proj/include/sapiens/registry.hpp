#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sapiens/digest.hpp"
#include "sapiens/ledger.hpp"

namespace sapiens {

enum class Role : std::uint8_t { User = 0, Pocd, Poca, Whh, Wha, Cro };

const char* role_name(Role role);
std::optional<Role> role_from_name(std::string_view name);

// Small bitmask set over the six ordinary-node roles.
class RoleSet {
public:
    RoleSet() = default;
    RoleSet(std::initializer_list<Role> roles) {
        for (Role r : roles) insert(r);
    }

    void insert(Role r) { bits_ |= mask(r); }
    bool has(Role r) const { return bits_ & mask(r); }
    bool empty() const { return bits_ == 0; }
    std::uint8_t bits() const { return bits_; }

    std::vector<Role> to_vector() const;

    bool operator==(const RoleSet&) const = default;

private:
    static std::uint8_t mask(Role r) { return std::uint8_t(1u << std::uint8_t(r)); }
    std::uint8_t bits_ = 0;
};

enum class NodeKind : std::uint8_t { Ordinary, Fog };

enum class Outcome : std::uint8_t { Completed, Failed, Rejected, ClaimFailed };

struct Position {
    double x = 0.0;
    double y = 0.0;
};

// Processing capacity in micro-units (1e-6) so the abandonment threshold
// ceil(C0 / delta) is exact integer arithmetic.
using CapacityUnits = std::int64_t;
inline constexpr CapacityUnits kCapacityScale = 1'000'000;

CapacityUnits capacity_from_double(double value);
double capacity_to_double(CapacityUnits units);

struct NodeProfile {
    std::string node_id;
    NodeKind kind = NodeKind::Ordinary;
    RoleSet roles;
    Position position;
    std::uint64_t pow_score = 0;
    std::uint64_t ranking = 0;
    CapacityUnits capacity = 0;
    std::uint64_t active_level = 0;
    std::uint64_t assigned_count = 0;
    std::uint64_t completed_count = 0;
    bool abandoned = false;
    std::string key_id;  // issued at registration for ordinary nodes

    // completed / assigned, 1.0 when nothing was ever assigned.
    double completion_degree() const;
    // exact fraction (numerator, denominator) of the same, for exact compares
    std::pair<std::uint64_t, std::uint64_t> completion_fraction() const;

    Digest profile_digest() const;
};

struct WorkProof {
    std::string node_id;
    Digest puzzle_seed{};
    std::uint64_t nonce = 0;
    std::uint32_t difficulty = 0;  // required leading zero bits
};

// digest(puzzle_seed || nonce) must have >= difficulty leading zero bits.
Digest work_proof_digest(const Digest& puzzle_seed, std::uint64_t nonce);
bool work_proof_valid(const WorkProof& proof);
// Exhaustive search helper; also used by tests as the oracle's counterpart.
std::uint64_t find_work_nonce(const Digest& puzzle_seed, std::uint32_t difficulty,
                              std::uint64_t start = 0);

// Sole authority on node identity, roles, liveness and punishment state.
class NodeRegistry {
public:
    void set_penalty_params(CapacityUnits capacity_decrement, std::uint64_t ranking_step);
    CapacityUnits capacity_decrement() const { return capacity_decrement_; }
    std::uint64_t ranking_step() const { return ranking_step_; }

    // Validates profile invariants, issues a key id to ordinary nodes and
    // records the registration on the ledger when a recorder is given.
    const std::string& register_node(NodeProfile profile, TxRecorder* recorder = nullptr);

    // Returns the updated pow_score. Rejects bad proofs with InvalidProof.
    std::uint64_t submit_work_proof(const WorkProof& proof);

    double distance(const std::string& a, const std::string& b) const;

    // Completed bumps completion and activity; Failed decrements capacity and
    // abandons at zero (one NodeAbandoned transaction); Rejected/ClaimFailed
    // decrement ranking, floored at zero.
    const NodeProfile& record_outcome(const std::string& node_id, Outcome outcome,
                                      TxRecorder* recorder = nullptr);

    // Assignment bookkeeping: denominator of completion_degree.
    void mark_assigned(const std::string& node_id);
    // Audit participation (POCA/WHA): bumps active_level only.
    void note_participation(const std::string& node_id);

    bool exists(const std::string& node_id) const;
    const NodeProfile& get(const std::string& node_id) const;
    std::size_t size() const { return nodes_.size(); }

    // Profiles in ascending node_id order.
    std::vector<const NodeProfile*> all() const;

private:
    NodeProfile& get_mutable(const std::string& node_id);

    std::map<std::string, NodeProfile> nodes_;
    CapacityUnits capacity_decrement_ = kCapacityScale;  // default delta = 1.0
    std::uint64_t ranking_step_ = 1;
};

}  // namespace sapiens
