#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sapiens/audit_oracle.hpp"
#include "sapiens/incentive.hpp"
#include "sapiens/task_engine.hpp"

namespace sapiens {

enum class PocStatus : std::uint8_t { Submitted, UnderAudit, Adopted, Rejected };
const char* poc_status_name(PocStatus s);

enum class Verdict : std::uint8_t { Accept, Reject };

struct PocEntry {
    std::string poc_id;
    std::string author;  // POCD
    std::string vuln_pattern;
    PocStatus status = PocStatus::Submitted;
    std::vector<std::string> auditors;  // POCA quorum, selection order
    std::map<std::string, Verdict> verdicts;
};

enum class ClaimStatus : std::uint8_t { Offered, Claimed, Declined, Expired };
const char* claim_status_name(ClaimStatus s);

enum class ClaimDecision : std::uint8_t { Claim, Decline };

// Key-id-gated stand-in for public-key encryption: the envelope opens only
// for the recipient's key id, and only the content digest ever reaches the
// ledger.
struct SealedEnvelope {
    std::string envelope_id;
    std::string author;  // WHH
    std::string recipient_key_id;
    Digest ciphertext_digest{};
    Finding finding;  // revealed only through open_envelope
    std::string stored_at;  // fog node
};

struct ClaimOffer {
    std::string offer_id;
    std::string envelope_id;
    std::uint64_t price = 0;
    ClaimStatus status = ClaimStatus::Offered;
    std::string author;
    std::string target_user;
};

struct RewardAmounts {
    std::uint64_t poc_adopted = 1;
    std::uint64_t poc_audit_adopted = 1;
    std::uint64_t vuln_adopted = 1;
    std::uint64_t vuln_audit_adopted = 1;
    std::uint64_t audit_service_complete = 1;
    std::uint64_t called_poc = 1;
};

// One WHA's verdict on a draft report. A rejection names the findings to
// drop before the next round.
struct WhaDecision {
    bool approve = true;
    std::vector<std::string> rejected_finding_ids;
};

using WhaPolicy = std::function<WhaDecision(const Task& task, const AuditReport& draft,
                                            int round, const std::string& wha_node)>;

// Ground-truth validator: reject iff the draft contains findings that match
// nothing planted in the task's payload (manual-mode false positives).
WhaPolicy ground_truth_wha_policy();

// Decides whether an assignee fails its segment (CRO dishonesty model).
using FailurePolicy = std::function<bool(const std::string& node_id, const Segment& segment)>;

struct ModeOutcome {
    bool reported = false;
    AuditReport report;
    int rounds = 0;
    std::string failure_reason;
};

// Reward mode (automatic CRO+POC and manual WHH+WHA loops), the POC
// lifecycle, and claim mode. Owns POC / envelope / offer state; task state
// stays in the TaskEngine.
class Workflows {
public:
    Workflows(NodeRegistry& registry, Bank& bank, TaskEngine& engine, TxRecorder& recorder)
        : registry_(registry), bank_(bank), engine_(engine), recorder_(recorder) {}

    using EventHook = std::function<void(const std::string& entity, const std::string& from,
                                         const std::string& to, const std::string& note)>;
    void set_event_hook(EventHook hook) { event_hook_ = std::move(hook); }
    void set_fog_store(std::string fog_node_id) { fog_store_ = std::move(fog_node_id); }
    void set_shuffle_salt(std::uint64_t salt) { shuffle_salt_ = salt; }

    // --- POC lifecycle ---

    // Author must hold POCD and be live. Tries to assemble the POCA quorum
    // immediately; with no quorum available the entry stays Submitted and
    // try_assign_auditors can be retried later.
    PocEntry& submit_poc(const std::string& poc_id, const std::string& author,
                         const std::string& vuln_pattern, std::size_t quorum);

    bool try_assign_auditors(const std::string& poc_id, std::size_t quorum);

    // Majority rule over the full quorum. Majority-side auditors earn the
    // situation-2 reward, minority-side auditors take a ranking penalty; the
    // author earns situation 1 on adoption and a ranking penalty on
    // rejection. Verdicts align with the entry's auditor order.
    PocStatus audit_poc(const std::string& poc_id, const std::vector<Verdict>& verdicts,
                        const RewardAmounts& amounts);

    const PocEntry& poc(const std::string& poc_id) const;
    std::vector<const PocEntry*> all_pocs() const;
    InstalledPocs adopted_pocs() const;

    // --- reward mode ---

    // Automatic service: every segment assignee is a CRO running all adopted
    // POCs over its slice. Throws NoPocsAvailable / IncompleteResults; the
    // caller turns those into a Failed task.
    ModeOutcome run_reward_automatic(const std::string& task_id, std::uint64_t run_seed,
                                     const RewardAmounts& amounts,
                                     const FailurePolicy& failure_policy = nullptr);

    // Manual service, detection step: WHH assignees work their slices with
    // their skill profile (plus false positives at fp_rate); the task moves
    // to Gathering with a draft report.
    AuditReport run_manual_detection(const std::string& task_id, std::uint64_t run_seed,
                                     double fp_rate,
                                     const std::map<std::string, double>& skills);

    enum class RoundResult { Approved, Rejected, FailedMaxRounds };

    // One WHA approval round over the draft. Selects the WHA set on the first
    // round (task WHH assignees and the user excluded). Rejections drop the
    // named findings, penalize their reporters and leave the task in
    // Gathering for a resubmission; round max_rounds failing ends the task.
    RoundResult manual_round(const std::string& task_id, AuditReport& draft, int round,
                             std::size_t wha_count, int max_rounds,
                             const RewardAmounts& amounts, const WhaPolicy& policy);

    // Runs detection and the full approval loop to termination (at most
    // max_rounds rounds). The simulation drives the same steps tick by tick.
    ModeOutcome run_reward_manual(const std::string& task_id, std::uint64_t run_seed,
                                  double fp_rate, const std::map<std::string, double>& skills,
                                  std::size_t wha_count, int max_rounds,
                                  const RewardAmounts& amounts, const WhaPolicy& policy);

    // --- claim mode ---

    ClaimOffer& submit_claim(const std::string& offer_id, const std::string& author,
                             const std::string& target_user, Finding finding,
                             std::uint64_t price);

    // nullptr unless the opener's key id matches the recipient key id.
    const SealedEnvelope* open_envelope(const std::string& envelope_id,
                                        const std::string& opener_key_id) const;

    // Claim transfers price buyer -> author and opens the envelope; Decline
    // costs the author ranking. Throws InsufficientFunds with the offer left
    // Offered.
    void decide_claim(const std::string& offer_id, ClaimDecision decision);

    // Drain path for offers never claimed: same penalty as a decline.
    void expire_claim(const std::string& offer_id);

    const ClaimOffer& offer(const std::string& offer_id) const;
    std::vector<const ClaimOffer*> all_offers() const;
    const SealedEnvelope& envelope(const std::string& envelope_id) const;

    const std::vector<std::string>& wha_panel(const std::string& task_id) const;

private:
    void poc_event(const PocEntry& entry, const std::string& from, const std::string& note);
    void claim_event(const ClaimOffer& offer, const std::string& from, const std::string& note);
    void emit_vuln_submissions(const AuditReport& report);
    void approve_report(const std::string& task_id, AuditReport& draft, int rounds,
                        const std::vector<std::string>& whas, const RewardAmounts& amounts,
                        bool manual);

    NodeRegistry& registry_;
    Bank& bank_;
    TaskEngine& engine_;
    TxRecorder& recorder_;
    EventHook event_hook_;
    std::string fog_store_;
    std::uint64_t shuffle_salt_ = 0;

    std::map<std::string, PocEntry> pocs_;
    std::map<std::string, SealedEnvelope> envelopes_;
    std::map<std::string, ClaimOffer> offers_;
    std::map<std::string, std::vector<std::string>> wha_panels_;  // task -> WHA set
};

}  // namespace sapiens
