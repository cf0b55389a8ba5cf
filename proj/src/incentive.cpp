#include "sapiens/incentive.hpp"

#include "sapiens/errors.hpp"

namespace sapiens {

const char* situation_name(Situation s) {
    switch (s) {
        case Situation::PocAdopted: return "poc_adopted";
        case Situation::PocAuditAdopted: return "poc_audit_adopted";
        case Situation::VulnAdopted: return "vuln_adopted";
        case Situation::VulnAuditAdopted: return "vuln_audit_adopted";
        case Situation::AuditServiceComplete: return "audit_service_complete";
    }
    return "unknown";
}

const char* penalty_reason_name(PenaltyReason reason) {
    switch (reason) {
        case PenaltyReason::CroTaskFailed: return "cro_task_failed";
        case PenaltyReason::PocRejected: return "poc_rejected";
        case PenaltyReason::VulnRejected: return "vuln_rejected";
        case PenaltyReason::ClaimFailed: return "claim_failed";
    }
    return "unknown";
}

void Bank::open_account(const std::string& owner, std::uint64_t initial_balance) {
    auto [it, inserted] = balances_.emplace(owner, initial_balance);
    if (!inserted) {
        fail(ErrorCode::DuplicateId, "account already open: " + owner);
    }
    initial_supply_ += initial_balance;
}

std::uint64_t Bank::balance(const std::string& owner) const {
    auto it = balances_.find(owner);
    if (it == balances_.end()) {
        fail(ErrorCode::UnknownNode, "no such account: " + owner);
    }
    return it->second;
}

bool Bank::has_account(const std::string& owner) const {
    return balances_.count(owner) != 0;
}

std::uint64_t Bank::total_balances() const {
    std::uint64_t total = 0;
    for (const auto& [owner, balance] : balances_) {
        total += balance;
    }
    return total;
}

bool Bank::conservation_holds() const {
    return total_balances() == initial_supply_ + mint_counter_;
}

void Bank::credit(const std::string& owner, std::uint64_t amount) {
    auto it = balances_.find(owner);
    if (it == balances_.end()) {
        fail(ErrorCode::UnknownNode, "no such account: " + owner);
    }
    it->second += amount;
}

void Bank::debit(const std::string& owner, std::uint64_t amount) {
    auto it = balances_.find(owner);
    if (it == balances_.end()) {
        fail(ErrorCode::UnknownNode, "no such account: " + owner);
    }
    if (it->second < amount) {
        fail(ErrorCode::InsufficientFunds,
             owner + " holds " + std::to_string(it->second) + ", needs " +
                 std::to_string(amount));
    }
    it->second -= amount;
}

void Bank::escrow(const std::string& user, const std::string& task_id, std::uint64_t amount,
                  TxRecorder& recorder) {
    std::string eid = escrow_account_id(task_id);
    if (!balances_.count(eid)) {
        balances_.emplace(eid, 0);
    }
    if (balance(user) < amount) {
        fail(ErrorCode::InsufficientFunds,
             user + " holds " + std::to_string(balance(user)) + ", escrow needs " +
                 std::to_string(amount));
    }
    debit(user, amount);
    credit(eid, amount);

    TransactionRecord tx;
    tx.kind = TxKind::Escrow;
    tx.actor = user;
    tx.subject = task_id;
    tx.counterparty = eid;
    tx.transfer = TransferDir::DebitActor;
    tx.amount = amount;
    tx.payload_digest = Sha256::hash("escrow:" + task_id);
    recorder.emit(std::move(tx));
}

Bank::RewardOutcome Bank::reward(const RewardEvent& event, TxRecorder& recorder) {
    if (event.mint_funded) {
        if (!mint_enabled_) {
            fail(ErrorCode::ValidationError, "mint-funded reward with minting disabled");
        }
        mint_counter_ += event.amount;
        credit(event.beneficiary, event.amount);

        TransactionRecord tx;
        tx.kind = TxKind::Reward;
        tx.actor = event.beneficiary;
        tx.subject = event.subject;
        tx.counterparty = "mint";
        tx.situation = std::uint8_t(event.situation);
        tx.transfer = TransferDir::CreditActor;
        tx.amount = event.amount;
        tx.payload_digest = Sha256::hash(situation_name(event.situation));
        recorder.emit(std::move(tx));
        return RewardOutcome::Minted;
    }

    std::string eid = escrow_account_id(event.task_id);
    if (!balances_.count(eid) || escrow_closed_[eid]) {
        fail(ErrorCode::InternalInvariantViolation,
             "reward against missing or closed escrow " + eid);
    }
    if (balances_.at(eid) < event.amount) {
        // EscrowExhausted: owed until settlement, paid pro-rata there
        deferred_[eid].push_back(event);
        return RewardOutcome::Deferred;
    }
    debit(eid, event.amount);
    credit(event.beneficiary, event.amount);

    TransactionRecord tx;
    tx.kind = TxKind::Reward;
    tx.actor = event.beneficiary;
    tx.subject = event.subject;
    tx.counterparty = eid;
    tx.situation = std::uint8_t(event.situation);
    tx.transfer = TransferDir::CreditActor;
    tx.amount = event.amount;
    tx.payload_digest = Sha256::hash(situation_name(event.situation));
    recorder.emit(std::move(tx));
    return RewardOutcome::Paid;
}

SettleSummary Bank::settle(const std::string& task_id, bool reported, const std::string& user,
                           TxRecorder& recorder) {
    std::string eid = escrow_account_id(task_id);
    if (!balances_.count(eid)) {
        fail(ErrorCode::InternalInvariantViolation, "settle without escrow " + eid);
    }
    if (escrow_closed_[eid]) {
        fail(ErrorCode::InternalInvariantViolation, "escrow settled twice: " + eid);
    }

    SettleSummary summary;
    std::uint64_t remaining = balances_.at(eid);

    if (reported) {
        auto it = deferred_.find(eid);
        if (it != deferred_.end() && !it->second.empty()) {
            std::uint64_t owed_total = 0;
            for (const RewardEvent& e : it->second) {
                owed_total += e.amount;
            }
            for (const RewardEvent& e : it->second) {
                std::uint64_t pay = e.amount;
                if (owed_total > remaining) {
                    pay = std::uint64_t((unsigned __int128)e.amount * remaining / owed_total);
                }
                if (pay == 0) {
                    continue;
                }
                debit(eid, pay);
                credit(e.beneficiary, pay);
                summary.paid[e.beneficiary] += pay;

                TransactionRecord tx;
                tx.kind = TxKind::Reward;
                tx.actor = e.beneficiary;
                tx.subject = e.subject;
                tx.counterparty = eid;
                tx.situation = std::uint8_t(e.situation);
                tx.transfer = TransferDir::CreditActor;
                tx.amount = pay;
                tx.payload_digest = Sha256::hash(std::string("settle:") + situation_name(e.situation));
                recorder.emit(std::move(tx));
            }
        }
    }
    deferred_.erase(eid);

    std::uint64_t refund = balances_.at(eid);
    if (refund > 0) {
        debit(eid, refund);
        credit(user, refund);

        TransactionRecord tx;
        tx.kind = TxKind::Escrow;
        tx.actor = user;
        tx.subject = task_id;
        tx.counterparty = eid;
        tx.transfer = TransferDir::CreditActor;
        tx.amount = refund;
        tx.payload_digest = Sha256::hash(reported ? "escrow_remainder" : "escrow_refund");
        recorder.emit(std::move(tx));
    }
    summary.refund = refund;
    escrow_closed_[eid] = true;
    return summary;
}

void Bank::penalize(NodeRegistry& registry, const std::string& node_id, PenaltyReason reason,
                    const std::string& subject, TxRecorder& recorder) {
    Outcome outcome = Outcome::Rejected;
    switch (reason) {
        case PenaltyReason::CroTaskFailed: outcome = Outcome::Failed; break;
        case PenaltyReason::PocRejected: outcome = Outcome::Rejected; break;
        case PenaltyReason::VulnRejected: outcome = Outcome::Rejected; break;
        case PenaltyReason::ClaimFailed: outcome = Outcome::ClaimFailed; break;
    }
    registry.record_outcome(node_id, outcome, &recorder);

    TransactionRecord tx;
    tx.kind = TxKind::Penalty;
    tx.actor = node_id;
    tx.subject = subject;
    tx.payload_digest = Sha256::hash(penalty_reason_name(reason));
    recorder.emit(std::move(tx));
}

void Bank::claim_transfer(const std::string& buyer, const std::string& author,
                          std::uint64_t price, const std::string& offer_id,
                          TxRecorder& recorder) {
    if (balance(buyer) < price) {
        fail(ErrorCode::InsufficientFunds,
             buyer + " holds " + std::to_string(balance(buyer)) + ", claim price is " +
                 std::to_string(price));
    }
    debit(buyer, price);
    credit(author, price);

    TransactionRecord tx;
    tx.kind = TxKind::Reward;
    tx.actor = author;
    tx.subject = offer_id;
    tx.counterparty = buyer;
    tx.situation = std::uint8_t(Situation::VulnAdopted);
    tx.transfer = TransferDir::CreditActor;
    tx.amount = price;
    tx.payload_digest = Sha256::hash("claim_purchase");
    recorder.emit(std::move(tx));
}

void Bank::defer_reward_for_test(const RewardEvent& event) {
    deferred_[escrow_account_id(event.task_id)].push_back(event);
}

const std::vector<RewardEvent>& Bank::deferred_rewards(const std::string& task_id) const {
    static const std::vector<RewardEvent> kEmpty;
    auto it = deferred_.find(escrow_account_id(task_id));
    return it == deferred_.end() ? kEmpty : it->second;
}

ReplayResult replay_balances(const LedgerHeader& header, const Ledger& ledger) {
    ReplayResult result;
    result.balances = header.initial_balances;
    for (const auto& [owner, amount] : result.balances) {
        result.initial_supply += amount;
    }

    auto credit = [&result](const std::string& owner, std::uint64_t amount) {
        result.balances[owner] += amount;
    };
    auto debit = [&result](const std::string& owner, std::uint64_t amount) {
        auto it = result.balances.find(owner);
        if (it == result.balances.end() || it->second < amount) {
            fail(ErrorCode::CorruptChain, "replay drives account " + owner + " negative");
        }
        it->second -= amount;
    };

    for (const Block& block : ledger.blocks()) {
        for (const TransactionRecord& tx : block.transactions) {
            switch (tx.transfer) {
                case TransferDir::None:
                    break;
                case TransferDir::DebitActor:
                    debit(tx.actor, tx.amount);
                    credit(tx.counterparty, tx.amount);
                    break;
                case TransferDir::CreditActor:
                    if (tx.counterparty == "mint") {
                        result.mint_counter += tx.amount;
                    } else {
                        debit(tx.counterparty, tx.amount);
                    }
                    credit(tx.actor, tx.amount);
                    break;
            }
        }
    }
    return result;
}

}  // namespace sapiens
