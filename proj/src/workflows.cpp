#include "sapiens/workflows.hpp"

#include <algorithm>
#include <set>

#include "sapiens/errors.hpp"
#include "sapiens/scheduler.hpp"

namespace sapiens {

const char* poc_status_name(PocStatus s) {
    switch (s) {
        case PocStatus::Submitted: return "submitted";
        case PocStatus::UnderAudit: return "under_audit";
        case PocStatus::Adopted: return "adopted";
        case PocStatus::Rejected: return "rejected";
    }
    return "unknown";
}

const char* claim_status_name(ClaimStatus s) {
    switch (s) {
        case ClaimStatus::Offered: return "offered";
        case ClaimStatus::Claimed: return "claimed";
        case ClaimStatus::Declined: return "declined";
        case ClaimStatus::Expired: return "expired";
    }
    return "unknown";
}

WhaPolicy ground_truth_wha_policy() {
    return [](const Task& task, const AuditReport& draft, int /*round*/,
              const std::string& /*wha*/) {
        std::set<std::string> planted;
        for (const AuditTarget& target : task.payload) {
            for (const PlantedVuln& v : target.planted) {
                planted.insert(v.vuln_id);
            }
        }
        WhaDecision decision;
        for (const Finding& f : draft.findings) {
            if (!planted.count(f.finding_id)) {
                decision.approve = false;
                decision.rejected_finding_ids.push_back(f.finding_id);
            }
        }
        return decision;
    };
}

void Workflows::poc_event(const PocEntry& entry, const std::string& from,
                          const std::string& note) {
    if (event_hook_) {
        event_hook_("poc:" + entry.poc_id, from, poc_status_name(entry.status), note);
    }
}

void Workflows::claim_event(const ClaimOffer& offer, const std::string& from,
                            const std::string& note) {
    if (event_hook_) {
        event_hook_("claim:" + offer.offer_id, from, claim_status_name(offer.status), note);
    }
}

PocEntry& Workflows::submit_poc(const std::string& poc_id, const std::string& author,
                                const std::string& vuln_pattern, std::size_t quorum) {
    if (pocs_.count(poc_id)) {
        fail(ErrorCode::DuplicateId, "poc already exists: " + poc_id);
    }
    const NodeProfile& node = registry_.get(author);
    if (node.abandoned) {
        fail(ErrorCode::AbandonedNode, "abandoned node: " + author);
    }
    if (!node.roles.has(Role::Pocd)) {
        fail(ErrorCode::RoleViolation, author + " does not hold the pocd role");
    }

    PocEntry entry;
    entry.poc_id = poc_id;
    entry.author = author;
    entry.vuln_pattern = vuln_pattern;
    auto [it, ok] = pocs_.emplace(poc_id, std::move(entry));
    (void)ok;

    recorder_.emit(TxKind::PocSubmitted, author, poc_id, Sha256::hash(vuln_pattern));
    poc_event(it->second, "none", "pattern=" + vuln_pattern);

    try_assign_auditors(poc_id, quorum);
    return it->second;
}

bool Workflows::try_assign_auditors(const std::string& poc_id, std::size_t quorum) {
    auto it = pocs_.find(poc_id);
    if (it == pocs_.end()) {
        fail(ErrorCode::ValidationError, "no such poc: " + poc_id);
    }
    PocEntry& entry = it->second;
    if (entry.status != PocStatus::Submitted) {
        return false;
    }
    try {
        entry.auditors = select_arbiters(registry_, Role::Pocd, quorum, {entry.author},
                                         shuffle_salt_);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InsufficientNodes) {
            return false;  // stays Submitted, retried next tick
        }
        throw;
    }
    entry.status = PocStatus::UnderAudit;
    poc_event(entry, "submitted", "auditors=" + std::to_string(entry.auditors.size()));
    return true;
}

PocStatus Workflows::audit_poc(const std::string& poc_id, const std::vector<Verdict>& verdicts,
                               const RewardAmounts& amounts) {
    auto it = pocs_.find(poc_id);
    if (it == pocs_.end()) {
        fail(ErrorCode::ValidationError, "no such poc: " + poc_id);
    }
    PocEntry& entry = it->second;
    if (entry.status != PocStatus::UnderAudit) {
        fail(ErrorCode::InternalInvariantViolation,
             "audit on poc in state " + std::string(poc_status_name(entry.status)));
    }
    if (verdicts.size() != entry.auditors.size()) {
        fail(ErrorCode::IncompleteVerdicts,
             "have " + std::to_string(verdicts.size()) + " of " +
                 std::to_string(entry.auditors.size()) + " verdicts");
    }

    std::size_t accepts = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        entry.verdicts[entry.auditors[i]] = verdicts[i];
        if (verdicts[i] == Verdict::Accept) {
            ++accepts;
        }
    }
    bool adopted = accepts * 2 > verdicts.size();
    Verdict majority = adopted ? Verdict::Accept : Verdict::Reject;

    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const std::string& auditor = entry.auditors[i];
        bool accept = verdicts[i] == Verdict::Accept;
        recorder_.emit(TxKind::PocVerdict, auditor, poc_id,
                       Sha256::hash(accept ? "accept" : "reject"));
        registry_.note_participation(auditor);
    }

    entry.status = adopted ? PocStatus::Adopted : PocStatus::Rejected;

    if (adopted && amounts.poc_adopted > 0) {
        bank_.reward({Situation::PocAdopted, entry.author, amounts.poc_adopted,
                      /*mint_funded=*/true, "", poc_id},
                     recorder_);
    }
    if (!adopted && !registry_.get(entry.author).abandoned) {
        bank_.penalize(registry_, entry.author, PenaltyReason::PocRejected, poc_id, recorder_);
    }
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const std::string& auditor = entry.auditors[i];
        if (verdicts[i] == majority) {
            if (amounts.poc_audit_adopted > 0) {
                bank_.reward({Situation::PocAuditAdopted, auditor, amounts.poc_audit_adopted,
                              /*mint_funded=*/true, "", poc_id},
                             recorder_);
            }
        } else if (!registry_.get(auditor).abandoned) {
            bank_.penalize(registry_, auditor, PenaltyReason::PocRejected, poc_id, recorder_);
        }
    }

    poc_event(entry, "under_audit",
              "accepts=" + std::to_string(accepts) + "/" + std::to_string(verdicts.size()));
    return entry.status;
}

const PocEntry& Workflows::poc(const std::string& poc_id) const {
    auto it = pocs_.find(poc_id);
    if (it == pocs_.end()) {
        fail(ErrorCode::ValidationError, "no such poc: " + poc_id);
    }
    return it->second;
}

std::vector<const PocEntry*> Workflows::all_pocs() const {
    std::vector<const PocEntry*> out;
    for (const auto& [id, entry] : pocs_) {
        out.push_back(&entry);
    }
    return out;
}

InstalledPocs Workflows::adopted_pocs() const {
    InstalledPocs out;
    for (const auto& [id, entry] : pocs_) {
        if (entry.status == PocStatus::Adopted) {
            out.emplace_back(entry.poc_id, entry.vuln_pattern);
        }
    }
    return out;
}

void Workflows::emit_vuln_submissions(const AuditReport& report) {
    for (const Finding& f : report.findings) {
        auto it = report.first_reporter.find(f.finding_id);
        const std::string& reporter =
            it == report.first_reporter.end() ? f.discovered_by : it->second;
        recorder_.emit(TxKind::VulnSubmitted, reporter, f.finding_id, f.content_digest());
    }
}

ModeOutcome Workflows::run_reward_automatic(const std::string& task_id, std::uint64_t run_seed,
                                            const RewardAmounts& amounts,
                                            const FailurePolicy& failure_policy) {
    const Task& task = engine_.get(task_id);
    if (task.status != TaskStatus::Fragmented) {
        fail(ErrorCode::InternalInvariantViolation,
             "automatic run on task in state " + std::string(task_status_name(task.status)));
    }
    if (task.service != ServiceKind::Automatic) {
        fail(ErrorCode::InternalInvariantViolation, "task is not automatic: " + task_id);
    }
    InstalledPocs adopted = adopted_pocs();
    if (adopted.empty()) {
        fail(ErrorCode::NoPocsAvailable, "no adopted POCs to install for " + task_id);
    }

    engine_.set_status(task_id, TaskStatus::Running, recorder_);

    TaskResults results;
    for (const Segment& seg : task.segments) {
        for (const std::string& assignee : seg.assignees) {
            if (registry_.get(assignee).abandoned) {
                // abandoned earlier in this run; the assignment is lost and
                // there is nothing left to punish
                results[seg.index][assignee] = SegmentResult{false, {}};
                continue;
            }
            if (failure_policy && failure_policy(assignee, seg)) {
                results[seg.index][assignee] = SegmentResult{false, {}};
                bank_.penalize(registry_, assignee, PenaltyReason::CroTaskFailed,
                               seg.segment_id, recorder_);
                continue;
            }
            DetectorProfile profile;
            profile.detector = assignee;
            profile.automatic = true;
            profile.pocs = adopted;
            SegmentResult result;
            result.completed = true;
            for (const AuditTarget* target : engine_.segment_targets(task, seg)) {
                auto found = detect(*target, profile, run_seed, 0.0, shuffle_salt_);
                result.findings.insert(result.findings.end(), found.begin(), found.end());
            }
            results[seg.index][assignee] = std::move(result);
            registry_.record_outcome(assignee, Outcome::Completed, &recorder_);
        }
    }

    AuditReport report = engine_.gather(task_id, results, recorder_);
    emit_vuln_submissions(report);

    // situation 5: every completed assignment of the available report
    for (const Segment& seg : task.segments) {
        for (const std::string& assignee : seg.assignees) {
            if (results[seg.index][assignee].completed && amounts.audit_service_complete > 0) {
                bank_.reward({Situation::AuditServiceComplete, assignee,
                              amounts.audit_service_complete, false, task_id, seg.segment_id},
                             recorder_);
            }
        }
    }
    // called-POC gains: once per distinct finding, credited to the POC author
    for (const Finding& f : report.findings) {
        if (f.via_poc && amounts.called_poc > 0) {
            bank_.reward({Situation::PocAdopted, poc(f.poc_id).author, amounts.called_poc,
                          false, task_id, f.poc_id},
                         recorder_);
        }
    }

    report.approved = true;
    report.rounds = 1;
    recorder_.emit(TxKind::ReportDelivered, fog_store_.empty() ? task.user : fog_store_,
                   task_id, report.content_digest());
    engine_.set_status(task_id, TaskStatus::Reported, recorder_);

    return {true, std::move(report), 1, ""};
}

AuditReport Workflows::run_manual_detection(const std::string& task_id, std::uint64_t run_seed,
                                            double fp_rate,
                                            const std::map<std::string, double>& skills) {
    const Task& task = engine_.get(task_id);
    if (task.status != TaskStatus::Fragmented) {
        fail(ErrorCode::InternalInvariantViolation,
             "manual detection on task in state " + std::string(task_status_name(task.status)));
    }
    engine_.set_status(task_id, TaskStatus::Running, recorder_);

    TaskResults results;
    for (const Segment& seg : task.segments) {
        for (const std::string& assignee : seg.assignees) {
            DetectorProfile profile;
            profile.detector = assignee;
            profile.automatic = false;
            auto skill = skills.find(assignee);
            profile.skill = skill == skills.end() ? 1.0 : skill->second;
            SegmentResult result;
            result.completed = true;
            for (const AuditTarget* target : engine_.segment_targets(task, seg)) {
                auto found = detect(*target, profile, run_seed, fp_rate, shuffle_salt_);
                result.findings.insert(result.findings.end(), found.begin(), found.end());
            }
            results[seg.index][assignee] = std::move(result);
        }
    }

    AuditReport draft = engine_.gather(task_id, results, recorder_);
    emit_vuln_submissions(draft);
    return draft;
}

void Workflows::approve_report(const std::string& task_id, AuditReport& draft, int rounds,
                               const std::vector<std::string>& whas,
                               const RewardAmounts& amounts, bool manual) {
    const Task& task = engine_.get(task_id);
    draft.approved = true;
    draft.rounds = rounds;

    if (manual) {
        for (const std::string& wha : whas) {
            recorder_.emit(TxKind::VulnVerdict, wha, task_id,
                           Sha256::hash("approve:round" + std::to_string(rounds)));
            registry_.note_participation(wha);
            if (amounts.vuln_audit_adopted > 0) {
                bank_.reward({Situation::VulnAuditAdopted, wha, amounts.vuln_audit_adopted,
                              false, task_id, task_id},
                             recorder_);
            }
        }
        for (const Finding& f : draft.findings) {
            const std::string& reporter = draft.first_reporter.at(f.finding_id);
            if (amounts.vuln_adopted > 0) {
                bank_.reward({Situation::VulnAdopted, reporter, amounts.vuln_adopted, false,
                              task_id, f.finding_id},
                             recorder_);
            }
        }
        // WHH assignments complete once the report stands
        for (const Segment& seg : task.segments) {
            for (const std::string& assignee : seg.assignees) {
                if (!registry_.get(assignee).abandoned) {
                    registry_.record_outcome(assignee, Outcome::Completed, &recorder_);
                }
            }
        }
    }

    recorder_.emit(TxKind::ReportDelivered, fog_store_.empty() ? task.user : fog_store_,
                   task_id, draft.content_digest());
    engine_.set_status(task_id, TaskStatus::Reported, recorder_,
                       "rounds=" + std::to_string(rounds));
}

Workflows::RoundResult Workflows::manual_round(const std::string& task_id, AuditReport& draft,
                                               int round, std::size_t wha_count, int max_rounds,
                                               const RewardAmounts& amounts,
                                               const WhaPolicy& policy) {
    const Task& task = engine_.get(task_id);
    if (task.status != TaskStatus::Gathering) {
        fail(ErrorCode::InternalInvariantViolation,
             "approval round on task in state " + std::string(task_status_name(task.status)));
    }

    auto panel = wha_panels_.find(task_id);
    if (panel == wha_panels_.end()) {
        std::set<std::string> exclusions{task.user};
        for (const Segment& seg : task.segments) {
            exclusions.insert(seg.assignees.begin(), seg.assignees.end());
        }
        // propagates InsufficientNodes when no WHA can be seated
        auto whas = select_arbiters(registry_, Role::Whh, wha_count, exclusions, shuffle_salt_);
        panel = wha_panels_.emplace(task_id, std::move(whas)).first;
    }
    const std::vector<std::string>& whas = panel->second;

    bool all_approve = true;
    std::set<std::string> rejected_ids;
    for (const std::string& wha : whas) {
        WhaDecision decision = policy(task, draft, round, wha);
        if (!decision.approve) {
            all_approve = false;
            rejected_ids.insert(decision.rejected_finding_ids.begin(),
                                decision.rejected_finding_ids.end());
        }
    }

    if (all_approve) {
        approve_report(task_id, draft, round, whas, amounts, /*manual=*/true);
        return RoundResult::Approved;
    }

    for (const std::string& wha : whas) {
        recorder_.emit(TxKind::VulnVerdict, wha, task_id,
                       Sha256::hash("reject:round" + std::to_string(round)));
        registry_.note_participation(wha);
    }

    // drop the offending findings and punish everyone who reported them
    std::set<std::string> offending_reporters;
    for (const std::string& id : rejected_ids) {
        auto prov = draft.provenance.find(id);
        if (prov == draft.provenance.end()) {
            continue;
        }
        for (const ProvenanceEntry& entry : prov->second) {
            offending_reporters.insert(entry.assignee);
        }
        draft.provenance.erase(id);
        draft.first_reporter.erase(id);
        std::erase_if(draft.findings,
                      [&id](const Finding& f) { return f.finding_id == id; });
    }
    draft.risk_level = classify_risk(draft.findings);
    for (const std::string& whh : offending_reporters) {
        if (!registry_.get(whh).abandoned) {
            bank_.penalize(registry_, whh, PenaltyReason::VulnRejected, task_id, recorder_);
        }
    }

    if (round >= max_rounds) {
        return RoundResult::FailedMaxRounds;
    }
    return RoundResult::Rejected;
}

ModeOutcome Workflows::run_reward_manual(const std::string& task_id, std::uint64_t run_seed,
                                         double fp_rate,
                                         const std::map<std::string, double>& skills,
                                         std::size_t wha_count, int max_rounds,
                                         const RewardAmounts& amounts, const WhaPolicy& policy) {
    AuditReport draft = run_manual_detection(task_id, run_seed, fp_rate, skills);
    for (int round = 1; round <= max_rounds; ++round) {
        RoundResult result = manual_round(task_id, draft, round, wha_count, max_rounds, amounts,
                                          policy);
        if (result == RoundResult::Approved) {
            return {true, std::move(draft), round, ""};
        }
        if (result == RoundResult::FailedMaxRounds) {
            engine_.mark_failed(task_id, "max_rounds_exceeded", recorder_);
            return {false, std::move(draft), round, "max_rounds_exceeded"};
        }
    }
    fail(ErrorCode::InternalInvariantViolation, "manual loop escaped its round bound");
}

ClaimOffer& Workflows::submit_claim(const std::string& offer_id, const std::string& author,
                                    const std::string& target_user, Finding finding,
                                    std::uint64_t price) {
    if (offers_.count(offer_id)) {
        fail(ErrorCode::DuplicateId, "offer already exists: " + offer_id);
    }
    const NodeProfile& whh = registry_.get(author);
    if (whh.abandoned) {
        fail(ErrorCode::AbandonedNode, "abandoned node: " + author);
    }
    if (!whh.roles.has(Role::Whh)) {
        fail(ErrorCode::RoleViolation, author + " does not hold the whh role");
    }
    if (!registry_.exists(target_user)) {
        fail(ErrorCode::UnknownUser, "no such user: " + target_user);
    }
    const NodeProfile& user = registry_.get(target_user);
    if (user.key_id.empty()) {
        fail(ErrorCode::UnknownUser, target_user + " has no assigned key");
    }

    SealedEnvelope envelope;
    envelope.envelope_id = "env:" + offer_id;
    envelope.author = author;
    envelope.recipient_key_id = user.key_id;
    envelope.finding = std::move(finding);
    envelope.stored_at = fog_store_;
    CanonicalWriter w;
    w.digest(envelope.finding.content_digest());
    w.str(envelope.recipient_key_id);
    w.str(envelope.envelope_id);
    envelope.ciphertext_digest = w.sha256();

    ClaimOffer offer;
    offer.offer_id = offer_id;
    offer.envelope_id = envelope.envelope_id;
    offer.price = price;
    offer.author = author;
    offer.target_user = target_user;

    // only the digest reaches the chain; finding details stay sealed
    recorder_.emit(TxKind::ClaimOffered, author, offer_id, envelope.ciphertext_digest);

    envelopes_.emplace(envelope.envelope_id, std::move(envelope));
    auto [it, ok] = offers_.emplace(offer_id, std::move(offer));
    (void)ok;
    claim_event(it->second, "none", "price=" + std::to_string(price));
    return it->second;
}

const SealedEnvelope* Workflows::open_envelope(const std::string& envelope_id,
                                               const std::string& opener_key_id) const {
    auto it = envelopes_.find(envelope_id);
    if (it == envelopes_.end()) {
        fail(ErrorCode::ValidationError, "no such envelope: " + envelope_id);
    }
    if (it->second.recipient_key_id != opener_key_id) {
        return nullptr;
    }
    return &it->second;
}

void Workflows::decide_claim(const std::string& offer_id, ClaimDecision decision) {
    auto it = offers_.find(offer_id);
    if (it == offers_.end()) {
        fail(ErrorCode::ValidationError, "no such offer: " + offer_id);
    }
    ClaimOffer& offer = it->second;
    if (offer.status != ClaimStatus::Offered) {
        fail(ErrorCode::InternalInvariantViolation,
             "decision on offer in state " + std::string(claim_status_name(offer.status)));
    }

    if (decision == ClaimDecision::Claim) {
        // throws InsufficientFunds and leaves the offer Offered
        bank_.claim_transfer(offer.target_user, offer.author, offer.price, offer_id, recorder_);
        offer.status = ClaimStatus::Claimed;
        recorder_.emit(TxKind::ClaimDecided, offer.target_user, offer_id,
                       Sha256::hash("claimed"));
        claim_event(offer, "offered", "price=" + std::to_string(offer.price));
        return;
    }

    offer.status = ClaimStatus::Declined;
    if (!registry_.get(offer.author).abandoned) {
        bank_.penalize(registry_, offer.author, PenaltyReason::ClaimFailed, offer_id, recorder_);
    }
    recorder_.emit(TxKind::ClaimDecided, offer.target_user, offer_id, Sha256::hash("declined"));
    claim_event(offer, "offered", "");
}

void Workflows::expire_claim(const std::string& offer_id) {
    auto it = offers_.find(offer_id);
    if (it == offers_.end()) {
        fail(ErrorCode::ValidationError, "no such offer: " + offer_id);
    }
    ClaimOffer& offer = it->second;
    if (offer.status != ClaimStatus::Offered) {
        return;
    }
    offer.status = ClaimStatus::Expired;
    bank_.penalize(registry_, offer.author, PenaltyReason::ClaimFailed, offer_id, recorder_);
    recorder_.emit(TxKind::ClaimDecided, offer.target_user, offer_id, Sha256::hash("expired"));
    claim_event(offer, "offered", "");
}

const ClaimOffer& Workflows::offer(const std::string& offer_id) const {
    auto it = offers_.find(offer_id);
    if (it == offers_.end()) {
        fail(ErrorCode::ValidationError, "no such offer: " + offer_id);
    }
    return it->second;
}

std::vector<const ClaimOffer*> Workflows::all_offers() const {
    std::vector<const ClaimOffer*> out;
    for (const auto& [id, offer] : offers_) {
        out.push_back(&offer);
    }
    return out;
}

const SealedEnvelope& Workflows::envelope(const std::string& envelope_id) const {
    auto it = envelopes_.find(envelope_id);
    if (it == envelopes_.end()) {
        fail(ErrorCode::ValidationError, "no such envelope: " + envelope_id);
    }
    return it->second;
}

const std::vector<std::string>& Workflows::wha_panel(const std::string& task_id) const {
    static const std::vector<std::string> kEmpty;
    auto it = wha_panels_.find(task_id);
    return it == wha_panels_.end() ? kEmpty : it->second;
}

}  // namespace sapiens
