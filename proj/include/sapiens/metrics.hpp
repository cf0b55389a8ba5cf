#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sapiens/audit_oracle.hpp"

namespace sapiens {

struct RunMetrics {
    std::uint64_t tasks_submitted = 0;
    std::uint64_t tasks_reported = 0;
    std::uint64_t tasks_failed = 0;
    std::map<std::string, std::uint64_t> risk_distribution;  // level name -> reported tasks
    std::uint64_t findings_total = 0;  // across approved reports
    std::uint64_t findings_high = 0;
    std::map<std::string, std::uint64_t> earnings;  // node -> SACF received as rewards
    std::uint64_t abandonments = 0;
    std::map<int, std::uint64_t> rounds_histogram;  // approval rounds -> tasks
    std::uint64_t ticks = 0;
    std::uint64_t mint_counter = 0;
    std::uint64_t initial_supply = 0;
    std::uint64_t total_balances = 0;
};

std::string metrics_to_json(const RunMetrics& metrics);

}  // namespace sapiens
