#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sapiens/audit_oracle.hpp"
#include "sapiens/incentive.hpp"
#include "sapiens/ledger.hpp"
#include "sapiens/registry.hpp"
#include "sapiens/scheduler.hpp"

namespace sapiens {

enum class ServiceKind : std::uint8_t { Automatic, Manual };

const char* service_kind_name(ServiceKind s);
std::optional<ServiceKind> service_kind_from_name(std::string_view name);

enum class TaskStatus : std::uint8_t {
    Submitted,
    Fragmented,
    Running,
    Gathering,
    Reported,
    Failed,
};

const char* task_status_name(TaskStatus s);

struct Segment {
    std::string segment_id;
    std::string task_id;
    std::size_t index = 0;
    std::size_t slice_begin = 0;  // range into the task's flattened target list
    std::size_t slice_len = 0;
    std::vector<std::string> assignees;  // exactly r distinct nodes
};

struct Task {
    std::string task_id;
    std::string user;
    TaskType type = TaskType::Website;
    ServiceKind service = ServiceKind::Automatic;
    std::vector<AuditTarget> payload;
    TaskStatus status = TaskStatus::Submitted;
    std::uint64_t escrow_amount = 0;
    std::vector<Segment> segments;
    std::string failure_reason;  // set when status == Failed
};

struct ProvenanceEntry {
    std::size_t segment_index = 0;
    std::string assignee;
};

struct AuditReport {
    std::string task_id;
    std::vector<Finding> findings;  // deduplicated, ascending finding_id
    std::map<std::string, std::vector<ProvenanceEntry>> provenance;  // finding_id -> reporters
    std::map<std::string, std::string> first_reporter;  // finding_id -> credited node
    Severity risk_level = Severity::Low;
    bool approved = false;
    int rounds = 0;  // approval rounds consumed

    Digest content_digest() const;
};

// Result of one assignee working one segment.
struct SegmentResult {
    bool completed = false;
    std::vector<Finding> findings;
};

// segment index -> assignee -> result
using TaskResults = std::map<std::size_t, std::map<std::string, SegmentResult>>;

// Task intake, fragmentation with redundancy, and result gathering. Owns all
// Task state; every status transition is reported through the transition
// hook and lands on the ledger as a TaskStatus transaction.
class TaskEngine {
public:
    using TransitionHook =
        std::function<void(const Task&, TaskStatus from, TaskStatus to)>;

    void set_transition_hook(TransitionHook hook) { transition_hook_ = std::move(hook); }

    Task& submit_task(const std::string& task_id, const std::string& user, TaskType type,
                      ServiceKind service, std::vector<AuditTarget> payload,
                      std::uint64_t escrow_amount, NodeRegistry& registry, Bank& bank,
                      TxRecorder& recorder);

    // Splits the flattened target list into `segment_count` contiguous slices
    // and assigns each slice to exactly `redundancy` distinct workers picked
    // by proximity+pow scheduling, round-robin over the ranked pool. One
    // SegmentAssigned transaction per (segment, assignee).
    const std::vector<Segment>& fragment(const std::string& task_id, std::size_t segment_count,
                                         std::size_t redundancy, NodeRegistry& registry,
                                         double w_pow, double w_dist, TxRecorder& recorder,
                                         std::uint64_t shuffle_salt = 0);

    // Deduplicated union of all assignee findings; risk level is the maximum
    // severity present. Throws IncompleteResults when a segment has no
    // successful assignee, UnassignedDetector when results name a stranger.
    AuditReport gather(const std::string& task_id, const TaskResults& results,
                       TxRecorder& recorder);

    void set_status(const std::string& task_id, TaskStatus status, TxRecorder& recorder,
                    const std::string& note = "");
    void mark_failed(const std::string& task_id, const std::string& reason,
                     TxRecorder& recorder);

    bool exists(const std::string& task_id) const;
    const Task& get(const std::string& task_id) const;
    Task& get_mutable(const std::string& task_id);
    std::vector<const Task*> all() const;  // ascending task_id

    // Targets covered by one segment's slice.
    std::vector<const AuditTarget*> segment_targets(const Task& task, const Segment& seg) const;

    static Role worker_role(ServiceKind service) {
        return service == ServiceKind::Automatic ? Role::Cro : Role::Whh;
    }

private:
    void transition(Task& task, TaskStatus to, TxRecorder& recorder, const std::string& note);

    std::map<std::string, Task> tasks_;
    TransitionHook transition_hook_;
};

}  // namespace sapiens
