#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sapiens/digest.hpp"

namespace sapiens {

enum class TxKind : std::uint8_t {
    NodeRegistered,
    TaskSubmitted,
    TaskStatus,
    SegmentAssigned,
    PocSubmitted,
    PocVerdict,
    VulnSubmitted,
    VulnVerdict,
    ClaimOffered,
    ClaimDecided,
    ReportDelivered,
    Escrow,
    Reward,
    Penalty,
    NodeAbandoned,
};

const char* tx_kind_name(TxKind kind);
std::optional<TxKind> tx_kind_from_name(std::string_view name);

// Direction of the SACF movement a transaction settles. Replay reconstructs
// balances from this alone: DebitActor moves amount actor -> counterparty,
// CreditActor moves amount counterparty -> actor ("mint" counterparty mints).
enum class TransferDir : std::uint8_t { None, DebitActor, CreditActor };

const char* transfer_dir_name(TransferDir dir);
std::optional<TransferDir> transfer_dir_from_name(std::string_view name);

struct TransactionRecord {
    std::uint64_t tx_id = 0;
    TxKind kind = TxKind::NodeRegistered;
    std::string actor;         // the node the event is about
    std::string subject;       // task / poc / vuln / node involved
    std::string counterparty;  // other account of a transfer, empty otherwise
    std::uint8_t situation = 0;  // reward situation tag 1..5, 0 otherwise
    TransferDir transfer = TransferDir::None;
    std::uint64_t amount = 0;  // zero for every kind except Escrow/Reward/Penalty
    std::uint64_t logical_time = 0;
    Digest payload_digest{};

    void canonical_bytes(CanonicalWriter& w) const;
};

struct Block {
    std::uint64_t index = 0;
    Digest prev_hash{};
    Digest content_hash{};
    std::vector<TransactionRecord> transactions;
    std::uint64_t sealed_at = 0;

    // Digest over (index, prev_hash, content_hash, sealed_at); this is what
    // the next block's prev_hash must equal.
    Digest header_digest() const;
    static Digest compute_content_hash(const std::vector<TransactionRecord>& txs);
};

struct VerifyResult {
    bool valid = true;
    std::size_t first_bad_index = 0;  // meaningful only when !valid
};

struct TxFilter {
    std::optional<TxKind> kind;
    std::optional<std::string> actor;
    std::optional<std::string> subject;
    std::optional<std::uint64_t> time_min;
    std::optional<std::uint64_t> time_max;

    bool matches(const TransactionRecord& tx) const;
};

// Dump file header: first line of the line-delimited JSON dump. Carries the
// digest algorithm name plus the initial balance sheet so balances can be
// reconstructed from the dump alone.
struct LedgerHeader {
    std::string format = "sapiens-ledger";
    int version = 1;
    std::string digest_algo = "sha-256";
    std::uint64_t initial_supply = 0;
    std::map<std::string, std::uint64_t> initial_balances;
};

// Append-only hash-chained ledger. Single writer; the simulation owns one.
class Ledger {
public:
    const std::vector<Block>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    bool empty() const { return blocks_.empty(); }

    // Seals `pending` into a new tail block. Throws EmptyBatch / CorruptChain.
    const Block& append_block(std::vector<TransactionRecord> pending);

    // Checks every block invariant: index == position, genesis prev_hash zero,
    // prev_hash linkage, content_hash recomputation, sealed_at == last tx time,
    // non-decreasing logical_time. Reports the lowest violating index.
    VerifyResult verify() const;

    // Ledger-order scan; empty filter matches everything. Throws CorruptChain.
    std::vector<TransactionRecord> query(const TxFilter& filter) const;

    Digest tip_digest() const;  // zero digest when empty

    std::string dump(const LedgerHeader& header) const;
    static std::pair<LedgerHeader, Ledger> parse_dump(std::string_view text);

    // Rebuilds a chain from raw blocks without verification (used by
    // parse_dump and by tamper tests); verify() is the audit surface.
    static Ledger from_blocks(std::vector<Block> blocks);

private:
    std::vector<Block> blocks_;
};

// Assigns tx ids and logical time, and buffers transactions until the
// simulation seals them into a block at the end of the tick.
class TxRecorder {
public:
    void set_time(std::uint64_t tick) { now_ = tick; }
    std::uint64_t now() const { return now_; }

    TransactionRecord& emit(TransactionRecord tx);
    TransactionRecord& emit(TxKind kind, std::string actor, std::string subject,
                            const Digest& payload = kZeroDigest);

    bool has_pending() const { return !pending_.empty(); }
    const std::vector<TransactionRecord>& pending() const { return pending_; }
    std::vector<TransactionRecord> take_pending();

private:
    std::uint64_t next_tx_id_ = 1;
    std::uint64_t now_ = 0;
    std::vector<TransactionRecord> pending_;
};

// Per-node read-only views of the authoritative chain, synchronized on task
// completion events (ReportDelivered / ClaimDecided).
class LedgerViews {
public:
    void ensure_node(const std::string& node_id);
    std::size_t view_len(const std::string& node_id) const;

    // Advances every view to the chain prefix that includes the trigger's
    // block. The trigger must be a ReportDelivered or ClaimDecided
    // transaction already on chain.
    void sync(const Ledger& chain, const TransactionRecord& trigger);

    // Digest stream of a node's view prefix, for prefix-extension checks.
    std::vector<Digest> view_digests(const Ledger& chain, const std::string& node_id) const;

    const std::map<std::string, std::size_t>& views() const { return prefix_len_; }

private:
    std::map<std::string, std::size_t> prefix_len_;
};

}  // namespace sapiens
