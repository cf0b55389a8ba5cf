#include "sapiens/task_engine.hpp"

#include <algorithm>

#include "sapiens/errors.hpp"

namespace sapiens {

const char* service_kind_name(ServiceKind s) {
    return s == ServiceKind::Automatic ? "automatic" : "manual";
}

std::optional<ServiceKind> service_kind_from_name(std::string_view name) {
    if (name == "automatic") return ServiceKind::Automatic;
    if (name == "manual") return ServiceKind::Manual;
    return std::nullopt;
}

const char* task_status_name(TaskStatus s) {
    switch (s) {
        case TaskStatus::Submitted: return "submitted";
        case TaskStatus::Fragmented: return "fragmented";
        case TaskStatus::Running: return "running";
        case TaskStatus::Gathering: return "gathering";
        case TaskStatus::Reported: return "reported";
        case TaskStatus::Failed: return "failed";
    }
    return "unknown";
}

Digest AuditReport::content_digest() const {
    CanonicalWriter w;
    w.str(task_id);
    w.u64(findings.size());
    for (const Finding& f : findings) {
        w.digest(f.content_digest());
    }
    w.u8(std::uint8_t(risk_level));
    w.u8(approved ? 1 : 0);
    return w.sha256();
}

namespace {

bool legal_transition(TaskStatus from, TaskStatus to) {
    if (to == TaskStatus::Failed) {
        return from != TaskStatus::Reported && from != TaskStatus::Failed;
    }
    switch (from) {
        case TaskStatus::Submitted: return to == TaskStatus::Fragmented;
        case TaskStatus::Fragmented: return to == TaskStatus::Running;
        case TaskStatus::Running: return to == TaskStatus::Gathering;
        case TaskStatus::Gathering: return to == TaskStatus::Reported;
        default: return false;
    }
}

}  // namespace

void TaskEngine::transition(Task& task, TaskStatus to, TxRecorder& recorder,
                            const std::string& note) {
    TaskStatus from = task.status;
    if (!legal_transition(from, to)) {
        fail(ErrorCode::InternalInvariantViolation,
             std::string("illegal task transition ") + task_status_name(from) + " -> " +
                 task_status_name(to) + " for " + task.task_id);
    }
    task.status = to;
    std::string detail = std::string(task_status_name(from)) + "->" + task_status_name(to);
    if (!note.empty()) {
        detail += ":" + note;
    }
    recorder.emit(TxKind::TaskStatus, task.user, task.task_id, Sha256::hash(detail));
    if (transition_hook_) {
        transition_hook_(task, from, to);
    }
}

Task& TaskEngine::submit_task(const std::string& task_id, const std::string& user,
                              TaskType type, ServiceKind service,
                              std::vector<AuditTarget> payload, std::uint64_t escrow_amount,
                              NodeRegistry& registry, Bank& bank, TxRecorder& recorder) {
    if (tasks_.count(task_id)) {
        fail(ErrorCode::DuplicateId, "task already exists: " + task_id);
    }
    const NodeProfile& submitter = registry.get(user);
    if (!submitter.roles.has(Role::User)) {
        fail(ErrorCode::RoleViolation, user + " does not hold the user role");
    }
    if (payload.empty()) {
        fail(ErrorCode::ValidationError, "task payload must contain at least one target");
    }
    for (const AuditTarget& target : payload) {
        if (target.target_type != type) {
            fail(ErrorCode::ValidationError,
                 "target " + target.target_id + " type does not match task type");
        }
    }
    // funds check happens before any state is created
    if (bank.balance(user) < escrow_amount) {
        fail(ErrorCode::InsufficientFunds,
             user + " holds " + std::to_string(bank.balance(user)) + ", escrow needs " +
                 std::to_string(escrow_amount));
    }

    Task task;
    task.task_id = task_id;
    task.user = user;
    task.type = type;
    task.service = service;
    task.payload = std::move(payload);
    task.escrow_amount = escrow_amount;
    task.status = TaskStatus::Submitted;

    auto [it, ok] = tasks_.emplace(task_id, std::move(task));
    (void)ok;

    recorder.emit(TxKind::TaskSubmitted, user, task_id,
                  Sha256::hash(task_id + ":" + service_kind_name(service)));
    bank.escrow(user, task_id, escrow_amount, recorder);
    if (transition_hook_) {
        transition_hook_(it->second, TaskStatus::Submitted, TaskStatus::Submitted);
    }
    return it->second;
}

const std::vector<Segment>& TaskEngine::fragment(const std::string& task_id,
                                                 std::size_t segment_count,
                                                 std::size_t redundancy, NodeRegistry& registry,
                                                 double w_pow, double w_dist,
                                                 TxRecorder& recorder,
                                                 std::uint64_t shuffle_salt) {
    Task& task = get_mutable(task_id);
    if (task.status != TaskStatus::Submitted) {
        fail(ErrorCode::InternalInvariantViolation,
             "fragment on task in state " + std::string(task_status_name(task.status)));
    }
    std::size_t total_targets = task.payload.size();
    if (segment_count == 0 || segment_count > total_targets) {
        fail(ErrorCode::ValidationError,
             "segment count " + std::to_string(segment_count) + " outside 1.." +
                 std::to_string(total_targets));
    }
    if (redundancy == 0) {
        fail(ErrorCode::ValidationError, "redundancy must be >= 1");
    }

    Role role = worker_role(task.service);
    std::set<std::string> exclusions{task.user};
    std::size_t available = count_eligible(registry, role, exclusions);
    if (available < redundancy) {
        fail(ErrorCode::InsufficientNodes,
             "redundancy " + std::to_string(redundancy) + " needs that many " +
                 role_name(role) + " workers, have " + std::to_string(available));
    }

    SelectionRequest request;
    request.task_id = task_id;
    request.requester = task.user;
    request.role_needed = role;
    request.count = std::min(available, segment_count * redundancy);
    request.exclusions = exclusions;
    std::vector<std::string> pool =
        select_by_proximity_pow(registry, request, w_pow, w_dist, nullptr, shuffle_salt);

    // contiguous slices: the first (total % s) slices take one extra target
    std::size_t base = total_targets / segment_count;
    std::size_t extra = total_targets % segment_count;

    task.segments.clear();
    std::size_t offset = 0;
    for (std::size_t i = 0; i < segment_count; ++i) {
        Segment seg;
        seg.segment_id = task_id + ":seg" + std::to_string(i);
        seg.task_id = task_id;
        seg.index = i;
        seg.slice_begin = offset;
        seg.slice_len = base + (i < extra ? 1 : 0);
        offset += seg.slice_len;
        for (std::size_t j = 0; j < redundancy; ++j) {
            seg.assignees.push_back(pool[(i * redundancy + j) % pool.size()]);
        }
        task.segments.push_back(std::move(seg));
    }

    for (const Segment& seg : task.segments) {
        for (const std::string& assignee : seg.assignees) {
            registry.mark_assigned(assignee);
            recorder.emit(TxKind::SegmentAssigned, assignee, seg.segment_id,
                          Sha256::hash(seg.segment_id + ":" + assignee));
        }
    }

    transition(task, TaskStatus::Fragmented, recorder,
               "s=" + std::to_string(segment_count) + ",r=" + std::to_string(redundancy));
    return task.segments;
}

AuditReport TaskEngine::gather(const std::string& task_id, const TaskResults& results,
                               TxRecorder& recorder) {
    Task& task = get_mutable(task_id);
    if (task.status != TaskStatus::Running) {
        fail(ErrorCode::InternalInvariantViolation,
             "gather on task in state " + std::string(task_status_name(task.status)));
    }

    AuditReport report;
    report.task_id = task_id;

    for (const Segment& seg : task.segments) {
        auto seg_it = results.find(seg.index);
        std::size_t successes = 0;
        if (seg_it != results.end()) {
            for (const auto& [assignee, result] : seg_it->second) {
                if (std::find(seg.assignees.begin(), seg.assignees.end(), assignee) ==
                    seg.assignees.end()) {
                    fail(ErrorCode::UnassignedDetector,
                         assignee + " reported on segment " + seg.segment_id +
                             " without an assignment");
                }
                if (!result.completed) {
                    continue;
                }
                ++successes;
                for (const Finding& f : result.findings) {
                    auto& reporters = report.provenance[f.finding_id];
                    reporters.push_back({seg.index, assignee});
                    auto cred = report.first_reporter.find(f.finding_id);
                    if (cred == report.first_reporter.end() || assignee < cred->second) {
                        report.first_reporter[f.finding_id] = assignee;
                        // keep the credited reporter's copy of the finding
                        bool present = false;
                        for (Finding& existing : report.findings) {
                            if (existing.finding_id == f.finding_id) {
                                existing = f;
                                present = true;
                                break;
                            }
                        }
                        if (!present) {
                            report.findings.push_back(f);
                        }
                    }
                }
            }
        }
        // results must cover all assignees of the segment, success or failure
        std::size_t reported = seg_it == results.end() ? 0 : seg_it->second.size();
        if (reported != seg.assignees.size()) {
            fail(ErrorCode::IncompleteResults,
                 "segment " + seg.segment_id + " has " + std::to_string(reported) +
                     " of " + std::to_string(seg.assignees.size()) + " results");
        }
        if (successes == 0) {
            fail(ErrorCode::IncompleteResults,
                 "segment " + seg.segment_id + " has no successful assignee");
        }
    }

    std::sort(report.findings.begin(), report.findings.end(),
              [](const Finding& a, const Finding& b) { return a.finding_id < b.finding_id; });
    report.risk_level = classify_risk(report.findings);

    transition(task, TaskStatus::Gathering, recorder,
               "findings=" + std::to_string(report.findings.size()));
    return report;
}

void TaskEngine::set_status(const std::string& task_id, TaskStatus status, TxRecorder& recorder,
                            const std::string& note) {
    transition(get_mutable(task_id), status, recorder, note);
}

void TaskEngine::mark_failed(const std::string& task_id, const std::string& reason,
                             TxRecorder& recorder) {
    Task& task = get_mutable(task_id);
    task.failure_reason = reason;
    transition(task, TaskStatus::Failed, recorder, reason);
}

bool TaskEngine::exists(const std::string& task_id) const {
    return tasks_.count(task_id) != 0;
}

const Task& TaskEngine::get(const std::string& task_id) const {
    auto it = tasks_.find(task_id);
    if (it == tasks_.end()) {
        fail(ErrorCode::ValidationError, "no such task: " + task_id);
    }
    return it->second;
}

Task& TaskEngine::get_mutable(const std::string& task_id) {
    auto it = tasks_.find(task_id);
    if (it == tasks_.end()) {
        fail(ErrorCode::ValidationError, "no such task: " + task_id);
    }
    return it->second;
}

std::vector<const Task*> TaskEngine::all() const {
    std::vector<const Task*> out;
    out.reserve(tasks_.size());
    for (const auto& [id, task] : tasks_) {
        out.push_back(&task);
    }
    return out;
}

std::vector<const AuditTarget*> TaskEngine::segment_targets(const Task& task,
                                                            const Segment& seg) const {
    std::vector<const AuditTarget*> out;
    for (std::size_t i = seg.slice_begin; i < seg.slice_begin + seg.slice_len; ++i) {
        out.push_back(&task.payload[i]);
    }
    return out;
}

}  // namespace sapiens
