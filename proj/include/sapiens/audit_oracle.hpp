#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sapiens/digest.hpp"

namespace sapiens {

enum class Severity : std::uint8_t { Low = 0, Medium = 1, High = 2 };

const char* severity_name(Severity s);
std::optional<Severity> severity_from_name(std::string_view name);

enum class TaskType : std::uint8_t { Website, Application, SmartContract };

const char* task_type_name(TaskType t);
std::optional<TaskType> task_type_from_name(std::string_view name);

// Ground truth a scenario plants into an audit target. Detection outcomes
// are seeded draws against base_detectability.
struct PlantedVuln {
    std::string vuln_id;
    std::string pattern;
    Severity severity = Severity::Low;
    double base_detectability = 1.0;
};

struct AuditTarget {
    std::string target_id;
    TaskType target_type = TaskType::Website;
    std::vector<PlantedVuln> planted;
};

// (poc_id, pattern) pairs; only adopted POCs may appear here.
using InstalledPocs = std::vector<std::pair<std::string, std::string>>;

struct DetectorProfile {
    std::string detector;
    bool automatic = true;
    InstalledPocs pocs;   // automatic mode: the installed, adopted POCs
    double skill = 1.0;   // manual mode: multiplier on base_detectability
};

struct Finding {
    std::string finding_id;  // vuln_id for true findings, unique synthetic id for FPs
    std::string discovered_by;
    std::string target_ref;
    Severity severity = Severity::Low;
    bool via_poc = false;
    std::string poc_id;  // set when via_poc

    Digest content_digest() const;
};

// Runs one detector over one target. Automatic mode finds a planted vuln iff
// an installed POC's pattern equals the vuln's pattern and the seeded draw
// passes base_detectability; it produces no false positives. Manual mode
// passes draws against base_detectability * skill and additionally emits one
// false positive per target at rate fp_rate. Deterministic in
// (run_seed, detector, target); iteration order cannot change draws.
std::vector<Finding> detect(const AuditTarget& target, const DetectorProfile& profile,
                            std::uint64_t run_seed, double fp_rate = 0.0,
                            std::uint64_t shuffle_salt = 0);

// High if any High finding, Medium if any Medium and no High, else Low.
Severity classify_risk(const std::vector<Finding>& findings);

struct GroundTruthDiff {
    std::uint64_t true_positives = 0;
    std::uint64_t false_positives = 0;
    std::uint64_t false_negatives = 0;
    double precision = 1.0;  // 1.0 when the report is empty
    double recall = 1.0;     // 1.0 when nothing was planted

    static GroundTruthDiff compare(const std::vector<std::string>& reported_finding_ids,
                                   const std::vector<std::string>& planted_vuln_ids);
};

}  // namespace sapiens
