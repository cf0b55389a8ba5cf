#include "sapiens/simulation.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "sapiens/errors.hpp"
#include "sapiens/scheduler.hpp"

namespace sapiens {

using nlohmann::json;

std::string RunResult::traces_to_json() const {
    json events = json::object();
    for (const auto& [entity, list] : traces) {
        json arr = json::array();
        for (const TraceEvent& e : list) {
            arr.push_back(json{{"tick", e.tick}, {"from", e.from}, {"to", e.to},
                               {"note", e.note}});
        }
        events[entity] = std::move(arr);
    }
    return json{{"schema", 1}, {"events", std::move(events)}}.dump(2);
}

std::string RunResult::report_to_json(const std::string& task_id) const {
    auto it = reports.find(task_id);
    if (it == reports.end()) {
        fail(ErrorCode::ValidationError, "no report for task " + task_id);
    }
    const AuditReport& r = it->second;
    json findings = json::array();
    for (const Finding& f : r.findings) {
        json entry{
            {"finding_id", f.finding_id},
            {"target_ref", f.target_ref},
            {"severity", severity_name(f.severity)},
            {"via", f.via_poc ? "poc" : "manual"},
            {"discovered_by", f.discovered_by},
        };
        if (f.via_poc) {
            entry["poc_id"] = f.poc_id;
        }
        auto cred = r.first_reporter.find(f.finding_id);
        entry["first_reporter"] = cred == r.first_reporter.end() ? f.discovered_by
                                                                 : cred->second;
        json prov = json::array();
        auto pv = r.provenance.find(f.finding_id);
        if (pv != r.provenance.end()) {
            for (const ProvenanceEntry& p : pv->second) {
                prov.push_back(json{{"segment", p.segment_index}, {"assignee", p.assignee}});
            }
        }
        entry["provenance"] = std::move(prov);
        findings.push_back(std::move(entry));
    }
    return json{
        {"schema", 1},
        {"task_id", r.task_id},
        {"risk_level", severity_name(r.risk_level)},
        {"approved", r.approved},
        {"rounds", r.rounds},
        {"findings", std::move(findings)},
    }.dump(2);
}

Simulation::Simulation(Scenario scenario, RunOptions options)
    : scenario_(std::move(scenario)), options_(options) {
    seed_ = options_.seed_override.value_or(scenario_.run_seed);

    registry_.set_penalty_params(capacity_from_double(scenario_.params.capacity_decrement),
                                 scenario_.params.ranking_step);
    bank_.set_mint_enabled(scenario_.params.mint_enabled);

    engine_.set_transition_hook([this](const Task& task, TaskStatus from, TaskStatus to) {
        std::string entity = "task:" + task.task_id;
        if (from == to) {  // creation
            trace(entity, current_tick_, "none", task_status_name(to), "");
            return;
        }
        trace(entity, current_tick_, task_status_name(from), task_status_name(to),
              to == TaskStatus::Failed ? task.failure_reason : "");
    });

    workflows_ = std::make_unique<Workflows>(registry_, bank_, engine_, recorder_);
    workflows_->set_shuffle_salt(options_.shuffle_salt);
    workflows_->set_event_hook([this](const std::string& entity, const std::string& from,
                                      const std::string& to, const std::string& note) {
        trace(entity, current_tick_, from, to, note);
    });
}

void Simulation::trace(const std::string& entity, std::uint64_t tick, std::string from,
                       std::string to, std::string note) {
    traces_[entity].push_back({tick, std::move(from), std::move(to), std::move(note)});
}

void Simulation::register_nodes() {
    std::vector<const NodeSpec*> order;
    for (const NodeSpec& spec : scenario_.nodes) {
        order.push_back(&spec);
    }
    std::sort(order.begin(), order.end(), [](const NodeSpec* a, const NodeSpec* b) {
        return a->profile.node_id < b->profile.node_id;
    });
    for (const NodeSpec* spec : order) {
        registry_.register_node(spec->profile, &recorder_);
        auto bal = scenario_.initial_balances.find(spec->profile.node_id);
        std::uint64_t initial = bal == scenario_.initial_balances.end() ? 0 : bal->second;
        bank_.open_account(spec->profile.node_id, initial);
        initial_sheet_[spec->profile.node_id] = initial;
        views_.ensure_node(spec->profile.node_id);
        skills_[spec->profile.node_id] = spec->skill;
        fail_probs_[spec->profile.node_id] = spec->fail_prob;
        if (spec->profile.kind == NodeKind::Fog && fog_store_.empty()) {
            fog_store_ = spec->profile.node_id;
        }
    }
    workflows_->set_fog_store(fog_store_);
}

void Simulation::inject(std::uint64_t tick) {
    for (const PocSpec& spec : scenario_.pocs) {
        if (spec.time != tick) continue;
        PocRuntime rt;
        rt.submitted_tick = tick;
        rt.spec = &spec;
        try {
            const PocEntry& entry =
                workflows_->submit_poc(spec.poc_id, spec.author, spec.pattern,
                                       scenario_.params.quorum);
            if (entry.status == PocStatus::UnderAudit) {
                rt.audit_tick = tick + 1;
            }
            poc_runtime_.emplace(spec.poc_id, rt);
        } catch (const Error& e) {
            trace("poc:" + spec.poc_id, tick, "none", "rejected", error_code_name(e.code()));
        }
    }

    for (const TaskSpec& spec : scenario_.tasks) {
        if (spec.time != tick) continue;
        TaskRuntime rt;
        rt.spec = &spec;
        try {
            engine_.submit_task(spec.task_id, spec.user, spec.task_type, spec.service,
                                spec.targets, spec.escrow, registry_, bank_, recorder_);
            rt.stage = TaskRuntime::Stage::AwaitFragment;
            rt.next_tick = tick + 1;
        } catch (const Error& e) {
            // submission rejected with no ledger change; counted as failed
            rt.stage = TaskRuntime::Stage::Terminal;
            trace("task:" + spec.task_id, tick, "none", "rejected", error_code_name(e.code()));
        }
        task_runtime_.emplace(spec.task_id, rt);
    }

    for (const ClaimSpec& spec : scenario_.claims) {
        if (spec.time != tick) continue;
        ClaimRuntime rt;
        rt.spec = &spec;
        rt.decision_tick = tick + spec.decision_delay;
        try {
            workflows_->submit_claim(spec.offer_id, spec.author, spec.target_user,
                                     spec.finding, spec.price);
            claim_runtime_.emplace(spec.offer_id, rt);
        } catch (const Error& e) {
            trace("claim:" + spec.offer_id, tick, "none", "rejected",
                  error_code_name(e.code()));
        }
    }
}

std::vector<Verdict> Simulation::cast_verdicts(const PocRuntime& rt) {
    const PocEntry& entry = workflows_->poc(rt.spec->poc_id);
    if (!rt.spec->scripted_verdicts.empty()) {
        return rt.spec->scripted_verdicts;
    }
    // default POCA judgment: a POC is valid iff its pattern matches some
    // planted vulnerability in this scenario
    bool valid = false;
    for (const std::string& pattern : scenario_.pattern_catalog()) {
        if (pattern == entry.vuln_pattern) {
            valid = true;
            break;
        }
    }
    return std::vector<Verdict>(entry.auditors.size(),
                                valid ? Verdict::Accept : Verdict::Reject);
}

void Simulation::advance_pocs(std::uint64_t tick) {
    for (auto& [poc_id, rt] : poc_runtime_) {
        if (rt.decided) continue;
        const PocEntry& entry = workflows_->poc(poc_id);
        if (entry.status == PocStatus::Submitted && rt.submitted_tick < tick) {
            if (workflows_->try_assign_auditors(poc_id, scenario_.params.quorum)) {
                rt.audit_tick = tick + 1;
            }
            continue;
        }
        if (entry.status == PocStatus::UnderAudit && tick >= rt.audit_tick) {
            workflows_->audit_poc(poc_id, cast_verdicts(rt), scenario_.params.rewards);
            rt.decided = true;
        }
    }
}

void Simulation::finish_task(const std::string& task_id, bool reported, int rounds) {
    const Task& task = engine_.get(task_id);
    bank_.settle(task_id, reported, task.user, recorder_);
    auto& rt = task_runtime_.at(task_id);
    rt.stage = TaskRuntime::Stage::Terminal;
    rt.round = rounds;
}

void Simulation::fail_task(const std::string& task_id, const std::string& reason) {
    engine_.mark_failed(task_id, reason, recorder_);
    finish_task(task_id, /*reported=*/false, task_runtime_.at(task_id).round);
}

void Simulation::advance_tasks(std::uint64_t tick) {
    const ScenarioParams& params = scenario_.params;
    for (auto& [task_id, rt] : task_runtime_) {
        if (rt.stage == TaskRuntime::Stage::Terminal || rt.next_tick > tick) {
            continue;
        }
        switch (rt.stage) {
            case TaskRuntime::Stage::AwaitFragment: {
                const Task& task = engine_.get(task_id);
                std::size_t s_eff = std::min(params.segments, task.payload.size());
                try {
                    engine_.fragment(task_id, s_eff, params.redundancy, registry_,
                                     params.w_pow, params.w_dist, recorder_,
                                     options_.shuffle_salt);
                    rt.stage = TaskRuntime::Stage::AwaitExecute;
                    rt.next_tick = tick + 1;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::InsufficientNodes) throw;
                    fail_task(task_id, "insufficient_nodes");
                }
                break;
            }
            case TaskRuntime::Stage::AwaitExecute: {
                const Task& task = engine_.get(task_id);
                if (task.service == ServiceKind::Automatic) {
                    FailurePolicy policy = [this](const std::string& node,
                                                  const Segment& seg) {
                        auto it = fail_probs_.find(node);
                        if (it == fail_probs_.end() || it->second <= 0.0) return false;
                        return unit_draw(seed_, "crofail", {node, seg.segment_id}) <
                               it->second;
                    };
                    try {
                        ModeOutcome outcome = workflows_->run_reward_automatic(
                            task_id, seed_, params.rewards, policy);
                        reports_.emplace(task_id, std::move(outcome.report));
                        finish_task(task_id, true, 1);
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::NoPocsAvailable &&
                            e.code() != ErrorCode::IncompleteResults) {
                            throw;
                        }
                        fail_task(task_id, e.code() == ErrorCode::NoPocsAvailable
                                                ? "no_pocs_available"
                                                : "incomplete_results");
                    }
                } else {
                    rt.draft = workflows_->run_manual_detection(task_id, seed_,
                                                                params.fp_rate, skills_);
                    rt.stage = TaskRuntime::Stage::AwaitRound;
                    rt.round = 1;
                    rt.next_tick = tick + 1;
                }
                break;
            }
            case TaskRuntime::Stage::AwaitRound: {
                try {
                    Workflows::RoundResult result = workflows_->manual_round(
                        task_id, rt.draft, rt.round, params.wha_count, params.max_rounds,
                        params.rewards, ground_truth_wha_policy());
                    switch (result) {
                        case Workflows::RoundResult::Approved:
                            reports_.emplace(task_id, rt.draft);
                            finish_task(task_id, true, rt.round);
                            break;
                        case Workflows::RoundResult::Rejected:
                            rt.round += 1;
                            rt.next_tick = tick + 1;
                            break;
                        case Workflows::RoundResult::FailedMaxRounds:
                            fail_task(task_id, "max_rounds_exceeded");
                            break;
                    }
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::InsufficientNodes) throw;
                    fail_task(task_id, "no_wha_available");
                }
                break;
            }
            case TaskRuntime::Stage::Terminal:
                break;
        }
    }
}

void Simulation::advance_claims(std::uint64_t tick, bool drain) {
    for (auto& [offer_id, rt] : claim_runtime_) {
        const ClaimOffer& offer = workflows_->offer(offer_id);
        if (offer.status != ClaimStatus::Offered || tick < rt.decision_tick) {
            continue;
        }
        if (rt.spec->decision) {
            try {
                workflows_->decide_claim(offer_id, *rt.spec->decision);
                continue;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InsufficientFunds) throw;
                // buyer cannot pay; leave Offered and retry until drain
            }
        }
        if (drain) {
            workflows_->expire_claim(offer_id);
        }
    }
}

void Simulation::seal_and_sync() {
    if (!recorder_.has_pending()) {
        return;
    }
    const Block& block = ledger_.append_block(recorder_.take_pending());
    for (const TransactionRecord& tx : block.transactions) {
        if (tx.kind == TxKind::ReportDelivered || tx.kind == TxKind::ClaimDecided) {
            views_.sync(ledger_, tx);
        }
    }
}

RunMetrics Simulation::collect_metrics(std::uint64_t ticks) const {
    RunMetrics m;
    m.ticks = ticks;
    m.tasks_submitted = task_runtime_.size();
    for (const auto& [task_id, rt] : task_runtime_) {
        auto report = reports_.find(task_id);
        if (report != reports_.end()) {
            m.tasks_reported += 1;
            m.risk_distribution[severity_name(report->second.risk_level)] += 1;
            m.findings_total += report->second.findings.size();
            for (const Finding& f : report->second.findings) {
                if (f.severity == Severity::High) {
                    m.findings_high += 1;
                }
            }
            m.rounds_histogram[report->second.rounds] += 1;
        } else {
            m.tasks_failed += 1;
            if (rt.round > 0) {
                m.rounds_histogram[rt.round] += 1;
            }
        }
    }
    for (const TransactionRecord& tx : ledger_.query({.kind = TxKind::Reward})) {
        m.earnings[tx.actor] += tx.amount;
    }
    m.abandonments = ledger_.query({.kind = TxKind::NodeAbandoned}).size();
    m.mint_counter = bank_.mint_counter();
    m.initial_supply = bank_.initial_supply();
    m.total_balances = bank_.total_balances();
    return m;
}

RunResult Simulation::run() {
    recorder_.set_time(0);
    register_nodes();

    std::uint64_t last_scheduled = 0;
    for (const TaskSpec& t : scenario_.tasks) {
        last_scheduled = std::max(last_scheduled, t.time);
    }
    for (const PocSpec& p : scenario_.pocs) {
        last_scheduled = std::max(last_scheduled, p.time + 2);
    }
    for (const ClaimSpec& c : scenario_.claims) {
        last_scheduled = std::max(last_scheduled, c.time + c.decision_delay);
    }
    const std::uint64_t safety_bound =
        last_scheduled + std::uint64_t(scenario_.params.max_rounds) + 64;

    std::uint64_t tick = 0;
    for (;; ++tick) {
        if (tick > safety_bound) {
            fail(ErrorCode::InternalInvariantViolation,
                 "simulation did not quiesce by tick " + std::to_string(tick));
        }
        current_tick_ = tick;
        recorder_.set_time(tick);

        inject(tick);
        advance_pocs(tick);
        advance_tasks(tick);

        bool injections_done = tick >= last_scheduled;
        bool tasks_terminal = true;
        for (const auto& [id, rt] : task_runtime_) {
            if (rt.stage != TaskRuntime::Stage::Terminal) {
                tasks_terminal = false;
                break;
            }
        }
        bool pocs_active = false;
        for (const auto& [id, rt] : poc_runtime_) {
            if (!rt.decided && workflows_->poc(id).status == PocStatus::UnderAudit) {
                pocs_active = true;
                break;
            }
        }
        bool quiescent = injections_done && tasks_terminal && !pocs_active;

        advance_claims(tick, /*drain=*/quiescent);
        seal_and_sync();

        if (!bank_.conservation_holds()) {
            fail(ErrorCode::InternalInvariantViolation,
                 "SACF conservation violated at tick " + std::to_string(tick));
        }

        bool claims_settled = true;
        for (const auto& [id, rt] : claim_runtime_) {
            if (workflows_->offer(id).status == ClaimStatus::Offered) {
                claims_settled = false;
                break;
            }
        }
        if (quiescent && claims_settled) {
            break;
        }
    }

    VerifyResult chain_check = ledger_.verify();
    if (!chain_check.valid) {
        fail(ErrorCode::InternalInvariantViolation,
             "end-of-run chain verification failed at block " +
                 std::to_string(chain_check.first_bad_index));
    }
    for (const Task* task : engine_.all()) {
        if (task->status != TaskStatus::Reported && task->status != TaskStatus::Failed) {
            fail(ErrorCode::InternalInvariantViolation,
                 "task " + task->task_id + " ended in non-terminal state " +
                     task_status_name(task->status));
        }
    }

    RunResult result;
    result.header.initial_supply = bank_.initial_supply();
    result.header.initial_balances = initial_sheet_;
    result.metrics = collect_metrics(tick + 1);
    result.traces = traces_;
    result.reports = reports_;
    result.balances = bank_.balances();
    result.mint_counter = bank_.mint_counter();
    result.ledger = std::move(ledger_);
    return result;
}

RunResult run_scenario_text(const std::string& text, RunOptions options) {
    Simulation sim(parse_scenario(text), options);
    return sim.run();
}

RunResult run_scenario_file(const std::string& path, RunOptions options) {
    Simulation sim(load_scenario(path), options);
    return sim.run();
}

}  // namespace sapiens
