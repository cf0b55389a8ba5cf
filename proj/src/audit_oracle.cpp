#include "sapiens/audit_oracle.hpp"

#include <algorithm>
#include <set>

#include "sapiens/errors.hpp"

namespace sapiens {

const char* severity_name(Severity s) {
    switch (s) {
        case Severity::Low: return "low";
        case Severity::Medium: return "medium";
        case Severity::High: return "high";
    }
    return "low";
}

std::optional<Severity> severity_from_name(std::string_view name) {
    if (name == "low") return Severity::Low;
    if (name == "medium") return Severity::Medium;
    if (name == "high") return Severity::High;
    return std::nullopt;
}

const char* task_type_name(TaskType t) {
    switch (t) {
        case TaskType::Website: return "website";
        case TaskType::Application: return "application";
        case TaskType::SmartContract: return "smart_contract";
    }
    return "website";
}

std::optional<TaskType> task_type_from_name(std::string_view name) {
    if (name == "website") return TaskType::Website;
    if (name == "application") return TaskType::Application;
    if (name == "smart_contract") return TaskType::SmartContract;
    return std::nullopt;
}

Digest Finding::content_digest() const {
    CanonicalWriter w;
    w.str(finding_id);
    w.str(discovered_by);
    w.str(target_ref);
    w.u8(std::uint8_t(severity));
    w.u8(via_poc ? 1 : 0);
    w.str(poc_id);
    return w.sha256();
}

std::vector<Finding> detect(const AuditTarget& target, const DetectorProfile& profile,
                            std::uint64_t run_seed, double fp_rate,
                            std::uint64_t shuffle_salt) {
    std::vector<const PlantedVuln*> order;
    order.reserve(target.planted.size());
    for (const PlantedVuln& v : target.planted) {
        order.push_back(&v);
    }
    if (shuffle_salt != 0) {
        // draws are keyed per vuln, so a permuted walk must not change them
        std::sort(order.begin(), order.end(),
                  [shuffle_salt](const PlantedVuln* a, const PlantedVuln* b) {
                      return stable_hash64(shuffle_salt, "shuffle", {a->vuln_id}) <
                             stable_hash64(shuffle_salt, "shuffle", {b->vuln_id});
                  });
    }

    std::vector<Finding> findings;
    for (const PlantedVuln* vuln : order) {
        double threshold = 0.0;
        std::string matched_poc;
        if (profile.automatic) {
            // pattern gate first: no matching POC means no chance of detection
            for (const auto& [poc_id, pattern] : profile.pocs) {
                if (pattern == vuln->pattern &&
                    (matched_poc.empty() || poc_id < matched_poc)) {
                    matched_poc = poc_id;
                }
            }
            if (matched_poc.empty()) {
                continue;
            }
            threshold = vuln->base_detectability;
        } else {
            threshold = vuln->base_detectability * profile.skill;
        }
        double draw = unit_draw(run_seed, "detect",
                                {profile.detector, target.target_id, vuln->vuln_id});
        if (draw < threshold) {
            Finding f;
            f.finding_id = vuln->vuln_id;
            f.discovered_by = profile.detector;
            f.target_ref = target.target_id;
            f.severity = vuln->severity;
            f.via_poc = profile.automatic;
            f.poc_id = matched_poc;
            findings.push_back(std::move(f));
        }
    }

    if (!profile.automatic && fp_rate > 0.0) {
        double draw = unit_draw(run_seed, "fp", {profile.detector, target.target_id});
        if (draw < fp_rate) {
            Finding f;
            f.finding_id = "fp:" + profile.detector + ":" + target.target_id;
            f.discovered_by = profile.detector;
            f.target_ref = target.target_id;
            f.severity = Severity::Low;
            findings.push_back(std::move(f));
        }
    }

    std::sort(findings.begin(), findings.end(),
              [](const Finding& a, const Finding& b) { return a.finding_id < b.finding_id; });
    return findings;
}

Severity classify_risk(const std::vector<Finding>& findings) {
    Severity level = Severity::Low;
    for (const Finding& f : findings) {
        if (f.severity > level) {
            level = f.severity;
        }
    }
    return level;
}

GroundTruthDiff GroundTruthDiff::compare(const std::vector<std::string>& reported_finding_ids,
                                         const std::vector<std::string>& planted_vuln_ids) {
    std::set<std::string> planted(planted_vuln_ids.begin(), planted_vuln_ids.end());
    std::set<std::string> reported(reported_finding_ids.begin(), reported_finding_ids.end());

    GroundTruthDiff diff;
    for (const std::string& id : reported) {
        if (planted.count(id)) {
            diff.true_positives += 1;
        } else {
            diff.false_positives += 1;
        }
    }
    for (const std::string& id : planted) {
        if (!reported.count(id)) {
            diff.false_negatives += 1;
        }
    }
    std::uint64_t denom_p = diff.true_positives + diff.false_positives;
    std::uint64_t denom_r = diff.true_positives + diff.false_negatives;
    diff.precision = denom_p == 0 ? 1.0 : double(diff.true_positives) / double(denom_p);
    diff.recall = denom_r == 0 ? 1.0 : double(diff.true_positives) / double(denom_r);
    return diff;
}

}  // namespace sapiens
