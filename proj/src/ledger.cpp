#include "sapiens/ledger.hpp"

#include <sstream>

#include <json.hpp>

#include "sapiens/errors.hpp"

namespace sapiens {

using nlohmann::json;

namespace {

struct KindName {
    TxKind kind;
    const char* name;
};

constexpr KindName kKindNames[] = {
    {TxKind::NodeRegistered, "node_registered"},
    {TxKind::TaskSubmitted, "task_submitted"},
    {TxKind::TaskStatus, "task_status"},
    {TxKind::SegmentAssigned, "segment_assigned"},
    {TxKind::PocSubmitted, "poc_submitted"},
    {TxKind::PocVerdict, "poc_verdict"},
    {TxKind::VulnSubmitted, "vuln_submitted"},
    {TxKind::VulnVerdict, "vuln_verdict"},
    {TxKind::ClaimOffered, "claim_offered"},
    {TxKind::ClaimDecided, "claim_decided"},
    {TxKind::ReportDelivered, "report_delivered"},
    {TxKind::Escrow, "escrow"},
    {TxKind::Reward, "reward"},
    {TxKind::Penalty, "penalty"},
    {TxKind::NodeAbandoned, "node_abandoned"},
};

bool kind_moves_sacf(TxKind kind) {
    return kind == TxKind::Escrow || kind == TxKind::Reward || kind == TxKind::Penalty;
}

}  // namespace

const char* tx_kind_name(TxKind kind) {
    for (const auto& entry : kKindNames) {
        if (entry.kind == kind) {
            return entry.name;
        }
    }
    return "unknown";
}

std::optional<TxKind> tx_kind_from_name(std::string_view name) {
    for (const auto& entry : kKindNames) {
        if (name == entry.name) {
            return entry.kind;
        }
    }
    return std::nullopt;
}

const char* transfer_dir_name(TransferDir dir) {
    switch (dir) {
        case TransferDir::None: return "none";
        case TransferDir::DebitActor: return "debit_actor";
        case TransferDir::CreditActor: return "credit_actor";
    }
    return "none";
}

std::optional<TransferDir> transfer_dir_from_name(std::string_view name) {
    if (name == "none") return TransferDir::None;
    if (name == "debit_actor") return TransferDir::DebitActor;
    if (name == "credit_actor") return TransferDir::CreditActor;
    return std::nullopt;
}

void TransactionRecord::canonical_bytes(CanonicalWriter& w) const {
    w.u64(tx_id);
    w.u8(std::uint8_t(kind));
    w.str(actor);
    w.str(subject);
    w.str(counterparty);
    w.u8(situation);
    w.u8(std::uint8_t(transfer));
    w.u64(amount);
    w.u64(logical_time);
    w.digest(payload_digest);
}

Digest Block::compute_content_hash(const std::vector<TransactionRecord>& txs) {
    CanonicalWriter w;
    w.u64(txs.size());
    for (const auto& tx : txs) {
        tx.canonical_bytes(w);
    }
    return w.sha256();
}

Digest Block::header_digest() const {
    CanonicalWriter w;
    w.u64(index);
    w.digest(prev_hash);
    w.digest(content_hash);
    w.u64(sealed_at);
    return w.sha256();
}

bool TxFilter::matches(const TransactionRecord& tx) const {
    if (kind && *kind != tx.kind) return false;
    if (actor && *actor != tx.actor) return false;
    if (subject && *subject != tx.subject) return false;
    if (time_min && tx.logical_time < *time_min) return false;
    if (time_max && tx.logical_time > *time_max) return false;
    return true;
}

const Block& Ledger::append_block(std::vector<TransactionRecord> pending) {
    if (pending.empty()) {
        fail(ErrorCode::EmptyBatch, "append_block requires at least one transaction");
    }
    VerifyResult check = verify();
    if (!check.valid) {
        fail(ErrorCode::CorruptChain,
             "chain fails verification at block " + std::to_string(check.first_bad_index));
    }
    for (const auto& tx : pending) {
        if (!kind_moves_sacf(tx.kind) && tx.amount != 0) {
            fail(ErrorCode::InternalInvariantViolation,
                 "non-transfer transaction carries an amount: tx " + std::to_string(tx.tx_id));
        }
    }

    Block block;
    block.index = blocks_.size();
    block.prev_hash = tip_digest();
    block.sealed_at = pending.back().logical_time;
    block.content_hash = Block::compute_content_hash(pending);
    block.transactions = std::move(pending);
    blocks_.push_back(std::move(block));
    return blocks_.back();
}

VerifyResult Ledger::verify() const {
    std::uint64_t last_time = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Block& b = blocks_[i];
        if (b.index != i) {
            return {false, i};
        }
        if (i == 0) {
            if (b.prev_hash != kZeroDigest) {
                return {false, i};
            }
        } else if (b.prev_hash != blocks_[i - 1].header_digest()) {
            return {false, i};
        }
        if (b.transactions.empty()) {
            return {false, i};
        }
        if (Block::compute_content_hash(b.transactions) != b.content_hash) {
            return {false, i};
        }
        if (b.sealed_at != b.transactions.back().logical_time) {
            return {false, i};
        }
        for (const auto& tx : b.transactions) {
            if (tx.logical_time < last_time) {
                return {false, i};
            }
            last_time = tx.logical_time;
        }
    }
    return {true, 0};
}

std::vector<TransactionRecord> Ledger::query(const TxFilter& filter) const {
    VerifyResult check = verify();
    if (!check.valid) {
        fail(ErrorCode::CorruptChain,
             "query on corrupt chain, first bad block " + std::to_string(check.first_bad_index));
    }
    std::vector<TransactionRecord> out;
    for (const auto& block : blocks_) {
        for (const auto& tx : block.transactions) {
            if (filter.matches(tx)) {
                out.push_back(tx);
            }
        }
    }
    return out;
}

Digest Ledger::tip_digest() const {
    if (blocks_.empty()) {
        return kZeroDigest;
    }
    return blocks_.back().header_digest();
}

Ledger Ledger::from_blocks(std::vector<Block> blocks) {
    Ledger l;
    l.blocks_ = std::move(blocks);
    return l;
}

namespace {

json tx_to_json(const TransactionRecord& tx) {
    return json{
        {"tx_id", tx.tx_id},
        {"kind", tx_kind_name(tx.kind)},
        {"actor", tx.actor},
        {"subject", tx.subject},
        {"counterparty", tx.counterparty},
        {"situation", tx.situation},
        {"transfer", transfer_dir_name(tx.transfer)},
        {"amount", tx.amount},
        {"logical_time", tx.logical_time},
        {"payload_digest", to_hex(tx.payload_digest)},
    };
}

TransactionRecord tx_from_json(const json& j, std::size_t line_no) {
    auto bad = [line_no](const std::string& what) -> std::runtime_error {
        return Error(ErrorCode::ParseError,
                     "line " + std::to_string(line_no) + ": " + what);
    };
    TransactionRecord tx;
    try {
        tx.tx_id = j.at("tx_id").get<std::uint64_t>();
        auto kind = tx_kind_from_name(j.at("kind").get<std::string>());
        if (!kind) throw bad("unknown transaction kind");
        tx.kind = *kind;
        tx.actor = j.at("actor").get<std::string>();
        tx.subject = j.at("subject").get<std::string>();
        tx.counterparty = j.at("counterparty").get<std::string>();
        tx.situation = j.at("situation").get<std::uint8_t>();
        auto dir = transfer_dir_from_name(j.at("transfer").get<std::string>());
        if (!dir) throw bad("unknown transfer direction");
        tx.transfer = *dir;
        tx.amount = j.at("amount").get<std::uint64_t>();
        tx.logical_time = j.at("logical_time").get<std::uint64_t>();
        auto digest = digest_from_hex(j.at("payload_digest").get<std::string>());
        if (!digest) throw bad("malformed payload_digest");
        tx.payload_digest = *digest;
    } catch (const json::exception& e) {
        throw bad(std::string("transaction field error: ") + e.what());
    }
    return tx;
}

}  // namespace

std::string Ledger::dump(const LedgerHeader& header) const {
    json hdr{
        {"format", header.format},
        {"version", header.version},
        {"digest_algo", header.digest_algo},
        {"initial_supply", header.initial_supply},
        {"initial_balances", header.initial_balances},
    };
    std::ostringstream out;
    out << hdr.dump() << "\n";
    for (const auto& block : blocks_) {
        json txs = json::array();
        for (const auto& tx : block.transactions) {
            txs.push_back(tx_to_json(tx));
        }
        json b{
            {"index", block.index},
            {"prev_hash", to_hex(block.prev_hash)},
            {"content_hash", to_hex(block.content_hash)},
            {"sealed_at", block.sealed_at},
            {"transactions", std::move(txs)},
        };
        out << b.dump() << "\n";
    }
    return out.str();
}

std::pair<LedgerHeader, Ledger> Ledger::parse_dump(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;

    LedgerHeader header;
    std::vector<Block> blocks;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrorCode::ParseError,
                 "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (line_no == 1) {
            try {
                header.format = j.at("format").get<std::string>();
                header.version = j.at("version").get<int>();
                header.digest_algo = j.at("digest_algo").get<std::string>();
                header.initial_supply = j.at("initial_supply").get<std::uint64_t>();
                header.initial_balances =
                    j.at("initial_balances").get<std::map<std::string, std::uint64_t>>();
            } catch (const json::exception& e) {
                fail(ErrorCode::ParseError, std::string("header: ") + e.what());
            }
            if (header.format != "sapiens-ledger") {
                fail(ErrorCode::ParseError, "unrecognized dump format: " + header.format);
            }
            if (header.digest_algo != "sha-256") {
                fail(ErrorCode::ParseError, "unsupported digest algorithm: " + header.digest_algo);
            }
            continue;
        }
        Block block;
        try {
            block.index = j.at("index").get<std::uint64_t>();
            auto prev = digest_from_hex(j.at("prev_hash").get<std::string>());
            auto content = digest_from_hex(j.at("content_hash").get<std::string>());
            if (!prev || !content) {
                fail(ErrorCode::ParseError,
                     "line " + std::to_string(line_no) + ": malformed block digest");
            }
            block.prev_hash = *prev;
            block.content_hash = *content;
            block.sealed_at = j.at("sealed_at").get<std::uint64_t>();
            for (const auto& tj : j.at("transactions")) {
                block.transactions.push_back(tx_from_json(tj, line_no));
            }
        } catch (const json::exception& e) {
            fail(ErrorCode::ParseError,
                 "line " + std::to_string(line_no) + ": " + e.what());
        }
        blocks.push_back(std::move(block));
    }
    if (line_no == 0) {
        fail(ErrorCode::ParseError, "empty ledger dump");
    }
    return {header, Ledger::from_blocks(std::move(blocks))};
}

TransactionRecord& TxRecorder::emit(TransactionRecord tx) {
    tx.tx_id = next_tx_id_++;
    tx.logical_time = now_;
    if (tx.kind != TxKind::Escrow && tx.kind != TxKind::Reward && tx.kind != TxKind::Penalty &&
        tx.amount != 0) {
        fail(ErrorCode::InternalInvariantViolation,
             std::string("amount on non-transfer kind ") + tx_kind_name(tx.kind));
    }
    pending_.push_back(std::move(tx));
    return pending_.back();
}

TransactionRecord& TxRecorder::emit(TxKind kind, std::string actor, std::string subject,
                                    const Digest& payload) {
    TransactionRecord tx;
    tx.kind = kind;
    tx.actor = std::move(actor);
    tx.subject = std::move(subject);
    tx.payload_digest = payload;
    return emit(std::move(tx));
}

std::vector<TransactionRecord> TxRecorder::take_pending() {
    std::vector<TransactionRecord> out;
    out.swap(pending_);
    return out;
}

void LedgerViews::ensure_node(const std::string& node_id) {
    prefix_len_.emplace(node_id, 0);
}

std::size_t LedgerViews::view_len(const std::string& node_id) const {
    auto it = prefix_len_.find(node_id);
    return it == prefix_len_.end() ? 0 : it->second;
}

void LedgerViews::sync(const Ledger& chain, const TransactionRecord& trigger) {
    if (trigger.kind != TxKind::ReportDelivered && trigger.kind != TxKind::ClaimDecided) {
        fail(ErrorCode::InternalInvariantViolation,
             "sync trigger must be ReportDelivered or ClaimDecided");
    }
    // locate the trigger's block
    std::optional<std::size_t> block_idx;
    for (std::size_t i = 0; i < chain.blocks().size(); ++i) {
        for (const auto& tx : chain.blocks()[i].transactions) {
            if (tx.tx_id == trigger.tx_id && tx.kind == trigger.kind) {
                block_idx = i;
                break;
            }
        }
        if (block_idx) break;
    }
    if (!block_idx) {
        fail(ErrorCode::InternalInvariantViolation, "sync trigger is not on chain");
    }
    std::size_t target = *block_idx + 1;
    for (auto& [node, len] : prefix_len_) {
        if (len < target) {
            len = target;
        }
    }
}

std::vector<Digest> LedgerViews::view_digests(const Ledger& chain,
                                              const std::string& node_id) const {
    std::size_t len = std::min(view_len(node_id), chain.size());
    std::vector<Digest> out;
    out.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(chain.blocks()[i].header_digest());
    }
    return out;
}

}  // namespace sapiens
