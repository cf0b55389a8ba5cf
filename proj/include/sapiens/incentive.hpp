#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sapiens/ledger.hpp"
#include "sapiens/registry.hpp"

namespace sapiens {

// The five reward situations; the tag travels on chain in the transaction's
// `situation` field.
enum class Situation : std::uint8_t {
    PocAdopted = 1,
    PocAuditAdopted = 2,
    VulnAdopted = 3,
    VulnAuditAdopted = 4,
    AuditServiceComplete = 5,
};

const char* situation_name(Situation s);

enum class PenaltyReason : std::uint8_t {
    CroTaskFailed,
    PocRejected,
    VulnRejected,
    ClaimFailed,
};

const char* penalty_reason_name(PenaltyReason reason);

struct RewardEvent {
    Situation situation = Situation::AuditServiceComplete;
    std::string beneficiary;
    std::uint64_t amount = 0;
    bool mint_funded = false;  // escrow-funded otherwise
    std::string task_id;       // escrow the reward draws from (when not minted)
    std::string subject;       // task / poc / finding the reward is for
};

inline std::string escrow_account_id(const std::string& task_id) {
    return "escrow:" + task_id;
}

struct SettleSummary {
    std::map<std::string, std::uint64_t> paid;  // beneficiary -> amount (deferred payouts)
    std::uint64_t refund = 0;
};

// SACF accounting: balances, escrow lifecycle, the five reward situations,
// penalties and claim settlements. Integer currency, strict conservation:
// sum(balances) == initial supply + mint counter after every transaction.
class Bank {
public:
    void set_mint_enabled(bool enabled) { mint_enabled_ = enabled; }
    bool mint_enabled() const { return mint_enabled_; }

    // Seeds an account before the run starts; contributes to initial supply.
    void open_account(const std::string& owner, std::uint64_t initial_balance);

    std::uint64_t balance(const std::string& owner) const;
    bool has_account(const std::string& owner) const;
    const std::map<std::string, std::uint64_t>& balances() const { return balances_; }

    std::uint64_t initial_supply() const { return initial_supply_; }
    std::uint64_t mint_counter() const { return mint_counter_; }
    std::uint64_t total_balances() const;
    bool conservation_holds() const;

    // Atomic user -> escrow(task) transfer. Throws InsufficientFunds.
    void escrow(const std::string& user, const std::string& task_id, std::uint64_t amount,
                TxRecorder& recorder);

    enum class RewardOutcome { Paid, Minted, Deferred };

    // Pays immediately when the funding source covers the amount; otherwise
    // the reward is deferred and settle() pays it pro-rata. Mint-funded
    // rewards always pay and grow the mint counter.
    RewardOutcome reward(const RewardEvent& event, TxRecorder& recorder);

    // Closes the task's escrow: pays deferred rewards (pro-rata floor split
    // when they exceed what is left, remainder to the user), then refunds the
    // remaining escrow. Failed tasks refund everything; deferred rewards of a
    // failed task are dropped.
    SettleSummary settle(const std::string& task_id, bool reported, const std::string& user,
                         TxRecorder& recorder);

    // Ranking/capacity punishment via the registry plus a Penalty transaction.
    // No SACF is confiscated.
    void penalize(NodeRegistry& registry, const std::string& node_id, PenaltyReason reason,
                  const std::string& subject, TxRecorder& recorder);

    // Claim-mode purchase: buyer -> author transfer recorded as a Reward with
    // the vuln-adopted situation tag. Throws InsufficientFunds.
    void claim_transfer(const std::string& buyer, const std::string& author,
                        std::uint64_t price, const std::string& offer_id, TxRecorder& recorder);

    // Test/diagnostic hook: queue a reward as deferred without attempting
    // immediate payment (reachable live only through escrow exhaustion).
    void defer_reward_for_test(const RewardEvent& event);

    const std::vector<RewardEvent>& deferred_rewards(const std::string& task_id) const;

private:
    void credit(const std::string& owner, std::uint64_t amount);
    void debit(const std::string& owner, std::uint64_t amount);

    std::map<std::string, std::uint64_t> balances_;
    std::map<std::string, std::vector<RewardEvent>> deferred_;  // escrow id -> owed
    std::map<std::string, bool> escrow_closed_;
    std::uint64_t initial_supply_ = 0;
    std::uint64_t mint_counter_ = 0;
    bool mint_enabled_ = false;
};

struct ReplayResult {
    std::map<std::string, std::uint64_t> balances;
    std::uint64_t mint_counter = 0;
    std::uint64_t initial_supply = 0;
};

// Reconstructs balances by replaying every transfer on the chain from the
// header's initial balance sheet. Used by the `balances` CLI; tests compare
// it (and an independent oracle) against the live Bank state.
ReplayResult replay_balances(const LedgerHeader& header, const Ledger& ledger);

}  // namespace sapiens
