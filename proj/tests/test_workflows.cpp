#include <doctest.h>

#include <random>
#include <set>

#include "helpers.hpp"
#include "sapiens/errors.hpp"
#include "sapiens/workflows.hpp"

using namespace sapiens;
using namespace sapiens::testing;

namespace {

struct WorkflowFixture {
    NodeRegistry registry;
    Bank bank;
    TxRecorder rec;
    TaskEngine engine;
    Workflows flows{registry, bank, engine, rec};
    RewardAmounts amounts;

    WorkflowFixture() {
        bank.set_mint_enabled(true);
        registry.register_node(make_fog("fog0"));
        add("user", {Role::User}, 100);
        add("c0", {Role::Cro}, 0, 0.1, 0.1);
        add("c1", {Role::Cro}, 0, 0.2, 0.2);
        add("c2", {Role::Cro}, 0, 0.3, 0.3);
        add("h0", {Role::Whh}, 0, 0.4, 0.1);
        add("h1", {Role::Whh}, 0, 0.5, 0.2);
        NodeProfile senior = make_node("h9", {Role::Whh, Role::Wha}, 0.9, 0.9);
        senior.active_level = 50;
        registry.register_node(senior);
        bank.open_account("h9", 0);
        add("d0", {Role::Pocd}, 0, 0.6, 0.1);
        add("d1", {Role::Pocd}, 0, 0.6, 0.2);
        add("d2", {Role::Pocd}, 0, 0.6, 0.3);
        add("d3", {Role::Pocd}, 0, 0.6, 0.4);
        flows.set_fog_store("fog0");
    }

    void add(const std::string& id, std::initializer_list<Role> roles,
             std::uint64_t balance, double x = 0.5, double y = 0.5) {
        registry.register_node(make_node(id, roles, x, y));
        bank.open_account(id, balance);
    }

    // one-website automatic task, fragmented and ready to execute
    void make_task(const std::string& task_id, ServiceKind service, std::size_t redundancy,
                   std::vector<PlantedVuln> vulns, std::uint64_t escrow = 20) {
        AuditTarget target;
        target.target_id = task_id + ":w0";
        target.target_type = TaskType::Website;
        target.planted = std::move(vulns);
        engine.submit_task(task_id, "user", TaskType::Website, service, {target}, escrow,
                           registry, bank, rec);
        engine.fragment(task_id, 1, redundancy, registry, 0.5, 0.5, rec);
    }

    PocEntry& adopted_poc(const std::string& poc_id, const std::string& pattern) {
        PocEntry& entry = flows.submit_poc(poc_id, "d0", pattern, 3);
        REQUIRE(entry.status == PocStatus::UnderAudit);
        flows.audit_poc(poc_id, {Verdict::Accept, Verdict::Accept, Verdict::Accept}, amounts);
        return entry;
    }

    std::vector<TransactionRecord> txs(TxKind kind) {
        std::vector<TransactionRecord> out;
        for (const auto& tx : rec.pending()) {
            if (tx.kind == kind) out.push_back(tx);
        }
        return out;
    }
};

}  // namespace

TEST_CASE("poc submission seats a quorum of auditors") {
    WorkflowFixture fx;
    PocEntry& entry = fx.flows.submit_poc("p1", "d0", "sqli", 3);
    CHECK(entry.status == PocStatus::UnderAudit);
    REQUIRE(entry.auditors.size() == 3);
    for (const std::string& auditor : entry.auditors) {
        CHECK(auditor != "d0");  // conflict of interest
    }
    CHECK(fx.txs(TxKind::PocSubmitted).size() == 1);
}

TEST_CASE("a lone pocd cannot audit its own submission") {
    NodeRegistry registry;
    Bank bank;
    TxRecorder rec;
    TaskEngine engine;
    Workflows flows{registry, bank, engine, rec};
    registry.register_node(make_fog("fog0"));
    registry.register_node(make_node("d0", {Role::Pocd}));
    bank.open_account("d0", 0);

    PocEntry& entry = flows.submit_poc("p1", "d0", "sqli", 1);
    CHECK(entry.status == PocStatus::Submitted);  // stays queued for retry
    CHECK_FALSE(flows.try_assign_auditors("p1", 1));
}

TEST_CASE("abandoned and role-less authors are rejected") {
    WorkflowFixture fx;
    CHECK_THROWS_WITH_AS(fx.flows.submit_poc("p1", "c0", "sqli", 3),
                         doctest::Contains("RoleViolation"), Error);
    fx.registry.set_penalty_params(2 * kCapacityScale, 1);
    fx.registry.record_outcome("d0", Outcome::Failed);
    CHECK_THROWS_WITH_AS(fx.flows.submit_poc("p1", "d0", "sqli", 3),
                         doctest::Contains("AbandonedNode"), Error);
}

TEST_CASE("majority accept adopts the poc and settles rewards") {
    WorkflowFixture fx;
    PocEntry& entry = fx.flows.submit_poc("p1", "d0", "sqli", 3);
    std::vector<std::string> auditors = entry.auditors;

    PocStatus status =
        fx.flows.audit_poc("p1", {Verdict::Accept, Verdict::Accept, Verdict::Reject},
                           fx.amounts);
    CHECK(status == PocStatus::Adopted);
    CHECK(fx.bank.balance("d0") == 1);  // situation 1
    CHECK(fx.bank.balance(auditors[0]) == 1);  // situation 2, majority side
    CHECK(fx.bank.balance(auditors[1]) == 1);
    CHECK(fx.bank.balance(auditors[2]) == 0);  // minority side is penalized instead
    CHECK(fx.txs(TxKind::PocVerdict).size() == 3);
    CHECK(fx.txs(TxKind::Penalty).size() == 1);
}

TEST_CASE("majority reject penalizes the author") {
    WorkflowFixture fx;
    NodeProfile& author = const_cast<NodeProfile&>(fx.registry.get("d0"));
    author.ranking = 2;
    fx.flows.submit_poc("p1", "d0", "sqli", 3);
    PocStatus status =
        fx.flows.audit_poc("p1", {Verdict::Reject, Verdict::Reject, Verdict::Accept},
                           fx.amounts);
    CHECK(status == PocStatus::Rejected);
    CHECK(fx.registry.get("d0").ranking == 1);
    CHECK(fx.bank.balance("d0") == 0);
}

TEST_CASE("incomplete verdicts are rejected") {
    WorkflowFixture fx;
    fx.flows.submit_poc("p1", "d0", "sqli", 3);
    CHECK_THROWS_WITH_AS(fx.flows.audit_poc("p1", {Verdict::Accept}, fx.amounts),
                         doctest::Contains("IncompleteVerdicts"), Error);
}

TEST_CASE("every verdict pattern matches the majority oracle at quorum five") {
    for (std::uint32_t pattern = 0; pattern < 32; ++pattern) {
        WorkflowFixture fx;
        fx.add("d4", {Role::Pocd}, 0);
        fx.add("d5", {Role::Pocd}, 0);
        fx.flows.submit_poc("p1", "d0", "sqli", 5);

        std::vector<Verdict> verdicts;
        std::vector<bool> accepts;
        for (int bit = 0; bit < 5; ++bit) {
            bool accept = pattern & (1u << bit);
            verdicts.push_back(accept ? Verdict::Accept : Verdict::Reject);
            accepts.push_back(accept);
        }
        PocStatus status = fx.flows.audit_poc("p1", verdicts, fx.amounts);
        CHECK((status == PocStatus::Adopted) == majority_accepts_oracle(accepts));
    }
}

TEST_CASE("automatic run with one certain vuln produces one finding and both rewards") {
    WorkflowFixture fx;
    fx.adopted_poc("p1", "sqli");
    fx.make_task("t1", ServiceKind::Automatic, 1, {{"v1", "sqli", Severity::High, 1.0}});

    ModeOutcome outcome = fx.flows.run_reward_automatic("t1", 7, fx.amounts);
    REQUIRE(outcome.reported);
    REQUIRE(outcome.report.findings.size() == 1);
    CHECK(outcome.report.findings[0].finding_id == "v1");
    CHECK(outcome.report.risk_level == Severity::High);
    CHECK(fx.engine.get("t1").status == TaskStatus::Reported);

    const std::string& cro = fx.engine.get("t1").segments[0].assignees[0];
    CHECK(fx.bank.balance(cro) == 1);   // situation 5
    CHECK(fx.bank.balance("d0") >= 2);  // adoption + called-poc credit

    std::size_t called_poc_rewards = 0;
    for (const auto& tx : fx.txs(TxKind::Reward)) {
        if (tx.subject == "p1" && tx.counterparty == escrow_account_id("t1")) {
            ++called_poc_rewards;
        }
    }
    CHECK(called_poc_rewards == 1);
    CHECK(fx.txs(TxKind::ReportDelivered).size() == 1);
    CHECK(fx.txs(TxKind::VulnSubmitted).size() == 1);
    CHECK(fx.bank.conservation_holds());
}

TEST_CASE("automatic run without adopted pocs fails upfront") {
    WorkflowFixture fx;
    fx.make_task("t1", ServiceKind::Automatic, 1, {{"v1", "sqli", Severity::High, 1.0}});
    CHECK_THROWS_WITH_AS(fx.flows.run_reward_automatic("t1", 7, fx.amounts),
                         doctest::Contains("NoPocsAvailable"), Error);
    CHECK(fx.engine.get("t1").status == TaskStatus::Fragmented);
}

TEST_CASE("redundant detections deduplicate and pay the called poc once") {
    WorkflowFixture fx;
    fx.adopted_poc("p1", "sqli");
    fx.make_task("t1", ServiceKind::Automatic, 2, {{"v1", "sqli", Severity::Low, 1.0}});
    std::uint64_t author_before = fx.bank.balance("d0");

    ModeOutcome outcome = fx.flows.run_reward_automatic("t1", 7, fx.amounts);
    REQUIRE(outcome.reported);
    CHECK(outcome.report.findings.size() == 1);
    CHECK(outcome.report.provenance.at("v1").size() == 2);
    // first-reporter credit: ascending node id among the reporters
    const Segment& seg = fx.engine.get("t1").segments[0];
    CHECK(outcome.report.first_reporter.at("v1") ==
          *std::min_element(seg.assignees.begin(), seg.assignees.end()));
    CHECK(fx.bank.balance("d0") == author_before + 1);  // called-poc paid once
    CHECK(fx.bank.conservation_holds());
}

TEST_CASE("a failing assignee is penalized but redundancy saves the segment") {
    WorkflowFixture fx;
    fx.adopted_poc("p1", "sqli");
    fx.make_task("t1", ServiceKind::Automatic, 2, {{"v1", "sqli", Severity::Low, 1.0}});
    const Segment& seg = fx.engine.get("t1").segments[0];
    const std::string failing = seg.assignees[1];
    CapacityUnits capacity_before = fx.registry.get(failing).capacity;

    FailurePolicy fail_one = [&failing](const std::string& node, const Segment&) {
        return node == failing;
    };
    ModeOutcome outcome = fx.flows.run_reward_automatic("t1", 7, fx.amounts, fail_one);
    REQUIRE(outcome.reported);
    CHECK(outcome.report.findings.size() == 1);
    CHECK(fx.registry.get(failing).capacity < capacity_before);
    CHECK(fx.bank.balance(failing) == 0);  // no situation-5 reward for failures
}

TEST_CASE("all assignees failing exhausts redundancy") {
    WorkflowFixture fx;
    fx.adopted_poc("p1", "sqli");
    fx.make_task("t1", ServiceKind::Automatic, 2, {{"v1", "sqli", Severity::Low, 1.0}});
    FailurePolicy fail_all = [](const std::string&, const Segment&) { return true; };
    CHECK_THROWS_WITH_AS(fx.flows.run_reward_automatic("t1", 7, fx.amounts, fail_all),
                         doctest::Contains("IncompleteResults"), Error);
}

TEST_CASE("manual run approves clean findings in round one") {
    WorkflowFixture fx;
    fx.make_task("t1", ServiceKind::Manual, 2, {{"v1", "x", Severity::Medium, 1.0}});
    ModeOutcome outcome = fx.flows.run_reward_manual(
        "t1", 7, /*fp_rate=*/0.0, {}, 1, 5, fx.amounts, ground_truth_wha_policy());
    REQUIRE(outcome.reported);
    CHECK(outcome.rounds == 1);
    CHECK(outcome.report.findings.size() == 1);
    CHECK(fx.engine.get("t1").status == TaskStatus::Reported);

    // the WHA panel excludes the task's own WHH assignees
    const std::vector<std::string>& panel = fx.flows.wha_panel("t1");
    REQUIRE(panel.size() == 1);
    CHECK(panel[0] == "h9");
    CHECK(fx.bank.balance("h9") == 1);  // situation 4
    const std::string& reporter = outcome.report.first_reporter.at("v1");
    CHECK(fx.bank.balance(reporter) >= 1);  // situation 3
    CHECK(fx.bank.conservation_holds());
}

TEST_CASE("false positives cost one round and are dropped from the report") {
    WorkflowFixture fx;
    fx.make_task("t1", ServiceKind::Manual, 2, {{"v1", "x", Severity::Medium, 1.0}});
    std::uint64_t ranking_before = fx.registry.get("h0").ranking + 1;
    const_cast<NodeProfile&>(fx.registry.get("h0")).ranking = ranking_before;
    const_cast<NodeProfile&>(fx.registry.get("h1")).ranking = ranking_before;

    ModeOutcome outcome = fx.flows.run_reward_manual(
        "t1", 7, /*fp_rate=*/1.0, {}, 1, 5, fx.amounts, ground_truth_wha_policy());
    REQUIRE(outcome.reported);
    CHECK(outcome.rounds == 2);  // round 1 rejected the false positives
    for (const Finding& f : outcome.report.findings) {
        CHECK(f.finding_id == "v1");
    }
    // both assignees emitted a certain false positive and took a ranking hit
    const Segment& seg = fx.engine.get("t1").segments[0];
    for (const std::string& whh : seg.assignees) {
        CHECK(fx.registry.get(whh).ranking < ranking_before);
    }
    CHECK(fx.bank.conservation_holds());
}

TEST_CASE("a perpetually rejecting wha fails the task with a full refund") {
    WorkflowFixture fx;
    fx.make_task("t1", ServiceKind::Manual, 2, {{"v1", "x", Severity::Medium, 1.0}},
                 /*escrow=*/17);
    WhaPolicy always_reject = [](const Task&, const AuditReport& draft, int,
                                 const std::string&) {
        WhaDecision d;
        d.approve = false;
        for (const Finding& f : draft.findings) {
            d.rejected_finding_ids.push_back(f.finding_id);
        }
        return d;
    };
    ModeOutcome outcome =
        fx.flows.run_reward_manual("t1", 7, 0.0, {}, 1, 3, fx.amounts, always_reject);
    CHECK_FALSE(outcome.reported);
    CHECK(outcome.rounds == 3);
    CHECK(fx.engine.get("t1").status == TaskStatus::Failed);

    // settlement refunds the untouched escrow in full
    fx.bank.settle("t1", false, "user", fx.rec);
    CHECK(fx.bank.balance("user") == 100);
    CHECK(fx.bank.conservation_holds());
}

TEST_CASE("manual loop terminates within max_rounds for arbitrary wha behavior") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        WorkflowFixture fx;
        int max_rounds = 1 + int(rng() % 5);
        fx.make_task("t1", ServiceKind::Manual, 2,
                     {{"v1", "x", Severity::Medium, 1.0},
                      {"v2", "y", Severity::Low, 1.0}});
        std::uint64_t policy_seed = rng();
        WhaPolicy random_policy = [policy_seed](const Task&, const AuditReport& draft,
                                                int round, const std::string&) {
            std::mt19937_64 prng(policy_seed + std::uint64_t(round));
            WhaDecision d;
            d.approve = prng() % 3 == 0;
            if (!d.approve) {
                for (const Finding& f : draft.findings) {
                    if (prng() % 2) {
                        d.rejected_finding_ids.push_back(f.finding_id);
                    }
                }
            }
            return d;
        };
        ModeOutcome outcome = fx.flows.run_reward_manual("t1", rng(), 0.3, {}, 1, max_rounds,
                                                         fx.amounts, random_policy);
        CHECK(outcome.rounds <= max_rounds);
        TaskStatus status = fx.engine.get("t1").status;
        if (outcome.reported) {
            CHECK(status == TaskStatus::Reported);
        } else {
            CHECK(status == TaskStatus::Failed);
            fx.bank.settle("t1", false, "user", fx.rec);
            CHECK(fx.bank.balance("user") == 100);  // full escrow refund
        }
        CHECK(fx.bank.conservation_holds());
    }
}

TEST_CASE("manual tasks without a seatable wha fail") {
    NodeRegistry registry;
    Bank bank;
    TxRecorder rec;
    TaskEngine engine;
    Workflows flows{registry, bank, engine, rec};
    registry.register_node(make_fog("fog0"));
    registry.register_node(make_node("user", {Role::User}));
    registry.register_node(make_node("h0", {Role::Whh}));
    bank.open_account("user", 10);
    bank.open_account("h0", 0);

    AuditTarget target;
    target.target_id = "w0";
    engine.submit_task("t1", "user", TaskType::Website, ServiceKind::Manual, {target}, 5,
                       registry, bank, rec);
    engine.fragment("t1", 1, 1, registry, 0.5, 0.5, rec);
    AuditReport draft = flows.run_manual_detection("t1", 7, 0.0, {});
    // the only WHH is the assignee, so no arbiter can be seated
    CHECK_THROWS_WITH_AS(
        flows.manual_round("t1", draft, 1, 1, 3, RewardAmounts{}, ground_truth_wha_policy()),
        doctest::Contains("InsufficientNodes"), Error);
}

TEST_CASE("claim offers seal the finding behind the recipient key") {
    WorkflowFixture fx;
    Finding finding;
    finding.finding_id = "secret-vuln";
    finding.discovered_by = "h0";
    finding.target_ref = "external:site";
    finding.severity = Severity::High;

    ClaimOffer& offer = fx.flows.submit_claim("cl1", "h0", "user", finding, 5);
    CHECK(offer.status == ClaimStatus::Offered);

    const SealedEnvelope& envelope = fx.flows.envelope(offer.envelope_id);

    SUBCASE("envelope digest recomputes from the finding content") {
        CanonicalWriter w;
        w.digest(finding.content_digest());
        w.str(fx.registry.get("user").key_id);
        w.str(offer.envelope_id);
        CHECK(envelope.ciphertext_digest == w.sha256());
    }

    SUBCASE("only the recipient key opens the envelope") {
        CHECK(fx.flows.open_envelope(offer.envelope_id, "key:h1") == nullptr);
        const SealedEnvelope* opened = fx.flows.open_envelope(offer.envelope_id, "key:user");
        REQUIRE(opened != nullptr);
        CHECK(opened->finding.finding_id == "secret-vuln");
    }

    SUBCASE("no transaction carries the finding details, only digests") {
        for (const auto& tx : fx.rec.pending()) {
            CHECK(tx.actor.find("secret-vuln") == std::string::npos);
            CHECK(tx.subject.find("secret-vuln") == std::string::npos);
            CHECK(tx.counterparty.find("secret-vuln") == std::string::npos);
        }
        auto offered = fx.txs(TxKind::ClaimOffered);
        REQUIRE(offered.size() == 1);
        CHECK(offered[0].payload_digest == envelope.ciphertext_digest);
        CHECK(offered[0].payload_digest != finding.content_digest());
    }

    SUBCASE("claiming pays the author and decides the offer") {
        fx.flows.decide_claim("cl1", ClaimDecision::Claim);
        CHECK(fx.flows.offer("cl1").status == ClaimStatus::Claimed);
        CHECK(fx.bank.balance("user") == 95);
        CHECK(fx.bank.balance("h0") == 5);
        CHECK(fx.txs(TxKind::ClaimDecided).size() == 1);
    }

    SUBCASE("declining punishes the author's ranking with no transfer") {
        const_cast<NodeProfile&>(fx.registry.get("h0")).ranking = 4;
        fx.flows.decide_claim("cl1", ClaimDecision::Decline);
        CHECK(fx.flows.offer("cl1").status == ClaimStatus::Declined);
        CHECK(fx.bank.balance("user") == 100);
        CHECK(fx.bank.balance("h0") == 0);
        CHECK(fx.registry.get("h0").ranking == 3);
    }

    SUBCASE("expiry behaves like an unsuccessful claim") {
        const_cast<NodeProfile&>(fx.registry.get("h0")).ranking = 4;
        fx.flows.expire_claim("cl1");
        CHECK(fx.flows.offer("cl1").status == ClaimStatus::Expired);
        CHECK(fx.registry.get("h0").ranking == 3);
    }
    CHECK(fx.bank.conservation_holds());
}

TEST_CASE("claims against an empty wallet stay offered") {
    WorkflowFixture fx;
    Finding finding;
    finding.finding_id = "f1";
    finding.severity = Severity::Low;
    fx.flows.submit_claim("cl1", "h0", "user", finding, 1000);
    CHECK_THROWS_WITH_AS(fx.flows.decide_claim("cl1", ClaimDecision::Claim),
                         doctest::Contains("InsufficientFunds"), Error);
    CHECK(fx.flows.offer("cl1").status == ClaimStatus::Offered);
    CHECK(fx.bank.balance("user") == 100);
}

TEST_CASE("claim submissions validate author role and recipient") {
    WorkflowFixture fx;
    Finding finding;
    finding.finding_id = "f1";
    CHECK_THROWS_WITH_AS(fx.flows.submit_claim("cl1", "c0", "user", finding, 1),
                         doctest::Contains("RoleViolation"), Error);
    CHECK_THROWS_WITH_AS(fx.flows.submit_claim("cl1", "h0", "ghost", finding, 1),
                         doctest::Contains("UnknownUser"), Error);
    CHECK_THROWS_WITH_AS(fx.flows.submit_claim("cl1", "h0", "fog0", finding, 1),
                         doctest::Contains("UnknownUser"), Error);
}
