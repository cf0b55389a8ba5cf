#include "sapiens/metrics.hpp"

#include <json.hpp>

namespace sapiens {

using nlohmann::json;

std::string metrics_to_json(const RunMetrics& m) {
    json rounds = json::object();
    for (const auto& [round, count] : m.rounds_histogram) {
        rounds[std::to_string(round)] = count;
    }
    json out{
        {"schema", 1},
        {"tasks_submitted", m.tasks_submitted},
        {"tasks_reported", m.tasks_reported},
        {"tasks_failed", m.tasks_failed},
        {"risk_distribution", m.risk_distribution},
        {"findings_total", m.findings_total},
        {"findings_high", m.findings_high},
        {"earnings", m.earnings},
        {"abandonments", m.abandonments},
        {"rounds_histogram", std::move(rounds)},
        {"ticks", m.ticks},
        {"mint_counter", m.mint_counter},
        {"initial_supply", m.initial_supply},
        {"total_balances", m.total_balances},
    };
    return out.dump(2);
}

}  // namespace sapiens
