// sapiens-sim: scenario runner and ledger tooling.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sapiens/errors.hpp"
#include "sapiens/incentive.hpp"
#include "sapiens/scenario.hpp"
#include "sapiens/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        sapiens::fail(sapiens::ErrorCode::IoError, "cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        sapiens::fail(sapiens::ErrorCode::IoError, "cannot write " + path.string());
    }
    out << content;
}

int run_command(const std::string& scenario_path, std::optional<std::uint64_t> seed,
                const std::string& out_dir, const std::string& format) {
    sapiens::RunOptions options;
    if (seed) {
        options.seed_override = seed;
    } else if (const char* env = std::getenv("SAPIENS_SIM_SEED")) {
        options.seed_override = std::strtoull(env, nullptr, 10);
    }

    sapiens::RunResult result = sapiens::run_scenario_file(scenario_path, options);

    fs::create_directories(out_dir);
    fs::path base(out_dir);
    write_file(base / "ledger.ndjson", result.ledger_text());
    write_file(base / "trace.json", result.traces_to_json());

    if (format == "json") {
        write_file(base / "metrics.json", sapiens::metrics_to_json(result.metrics));
        fs::create_directories(base / "reports");
        for (const auto& [task_id, report] : result.reports) {
            write_file(base / "reports" / (task_id + ".json"),
                       result.report_to_json(task_id));
        }
    } else {
        std::ostringstream tasks_csv;
        tasks_csv << "task_id,status,risk_level,findings,rounds\n";
        json trace = json::parse(result.traces_to_json());
        for (const auto& [task_id, report] : result.reports) {
            tasks_csv << task_id << ",reported," << sapiens::severity_name(report.risk_level)
                      << "," << report.findings.size() << "," << report.rounds << "\n";
        }
        for (const auto& [entity, events] : trace.at("events").items()) {
            if (entity.rfind("task:", 0) != 0) continue;
            std::string task_id = entity.substr(5);
            if (result.reports.count(task_id)) continue;
            tasks_csv << task_id << ",failed,,0,\n";
        }
        write_file(base / "tasks.csv", tasks_csv.str());

        std::ostringstream balances_csv;
        balances_csv << "owner,balance\n";
        for (const auto& [owner, balance] : result.balances) {
            balances_csv << owner << "," << balance << "\n";
        }
        write_file(base / "balances.csv", balances_csv.str());
    }

    std::cout << "reported " << result.metrics.tasks_reported << "/"
              << result.metrics.tasks_submitted << " tasks, " << result.metrics.findings_total
              << " findings, ledger blocks " << result.ledger.size() << ", outputs in "
              << out_dir << "\n";
    return 0;
}

int ledger_verify_command(const std::string& path) {
    auto [header, ledger] = sapiens::Ledger::parse_dump(read_file(path));
    sapiens::VerifyResult result = ledger.verify();
    if (result.valid) {
        std::cout << "valid (" << ledger.size() << " blocks, digest " << header.digest_algo
                  << ")\n";
        return 0;
    }
    std::cout << "invalid: first bad block " << result.first_bad_index << "\n";
    return 1;
}

int balances_command(const std::string& path) {
    auto [header, ledger] = sapiens::Ledger::parse_dump(read_file(path));
    sapiens::ReplayResult replay = sapiens::replay_balances(header, ledger);
    std::cout << "owner,balance\n";
    for (const auto& [owner, balance] : replay.balances) {
        std::cout << owner << "," << balance << "\n";
    }
    return 0;
}

int ground_truth_diff_command(const std::string& report_path,
                              const std::string& scenario_path) {
    json report = json::parse(read_file(report_path));
    sapiens::Scenario scenario = sapiens::load_scenario(scenario_path);

    std::string task_id = report.at("task_id").get<std::string>();
    std::vector<std::string> reported;
    for (const auto& f : report.at("findings")) {
        reported.push_back(f.at("finding_id").get<std::string>());
    }
    std::vector<std::string> planted;
    for (const sapiens::TaskSpec& task : scenario.tasks) {
        if (task.task_id != task_id) continue;
        for (const sapiens::AuditTarget& target : task.targets) {
            for (const sapiens::PlantedVuln& v : target.planted) {
                planted.push_back(v.vuln_id);
            }
        }
    }
    auto diff = sapiens::GroundTruthDiff::compare(reported, planted);
    json out{
        {"task_id", task_id},
        {"true_positives", diff.true_positives},
        {"false_positives", diff.false_positives},
        {"false_negatives", diff.false_negatives},
        {"precision", diff.precision},
        {"recall", diff.recall},
    };
    std::cout << out.dump(2) << "\n";
    return 0;
}

int nodes_dump_command(const std::string& scenario_path) {
    sapiens::Scenario scenario = sapiens::load_scenario(scenario_path);
    sapiens::NodeRegistry registry;
    std::vector<const sapiens::NodeSpec*> order;
    for (const sapiens::NodeSpec& spec : scenario.nodes) {
        order.push_back(&spec);
    }
    std::sort(order.begin(), order.end(),
              [](const sapiens::NodeSpec* a, const sapiens::NodeSpec* b) {
                  return a->profile.node_id < b->profile.node_id;
              });
    for (const sapiens::NodeSpec* spec : order) {
        registry.register_node(spec->profile);
    }

    json nodes = json::array();
    for (const sapiens::NodeProfile* node : registry.all()) {
        json roles = json::array();
        for (sapiens::Role r : node->roles.to_vector()) {
            roles.push_back(sapiens::role_name(r));
        }
        nodes.push_back(json{
            {"node_id", node->node_id},
            {"kind", node->kind == sapiens::NodeKind::Fog ? "fog" : "ordinary"},
            {"roles", std::move(roles)},
            {"position", {node->position.x, node->position.y}},
            {"pow_score", node->pow_score},
            {"ranking", node->ranking},
            {"capacity", sapiens::capacity_to_double(node->capacity)},
            {"active_level", node->active_level},
            {"completion_degree", node->completion_degree()},
            {"abandoned", node->abandoned},
            {"key_id", node->key_id},
        });
    }
    std::cout << json{{"schema", 1}, {"nodes", std::move(nodes)}}.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sapiens Chain marketplace simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string ledger_path;
    std::string report_path;
    std::string out_dir = "out";
    std::string format = "json";
    std::optional<std::uint64_t> seed;

    CLI::App* run = app.add_subcommand("run", "Run a scenario");
    run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--seed", seed, "Override the scenario run seed");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--format", format, "Metrics format")
        ->check(CLI::IsMember({"json", "csv"}));

    CLI::App* ledger = app.add_subcommand("ledger", "Ledger tooling");
    CLI::App* verify = ledger->add_subcommand("verify", "Verify a ledger dump");
    verify->add_option("file", ledger_path, "Ledger dump (line-delimited JSON)")->required();

    CLI::App* balances = app.add_subcommand("balances", "Replay balances from a ledger dump");
    balances->add_option("file", ledger_path, "Ledger dump")->required();

    CLI::App* ground_truth = app.add_subcommand("ground-truth", "Ground truth tooling");
    CLI::App* diff = ground_truth->add_subcommand("diff", "Compare a report against planted truth");
    diff->add_option("report", report_path, "Report JSON")->required();
    diff->add_option("scenario", scenario_path, "Scenario JSON")->required();

    CLI::App* nodes = app.add_subcommand("nodes", "Node registry tooling");
    CLI::App* dump = nodes->add_subcommand("dump", "Dump the registry for a scenario");
    dump->add_option("scenario", scenario_path, "Scenario JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return run_command(scenario_path, seed, out_dir, format);
        }
        if (ledger->parsed() && verify->parsed()) {
            return ledger_verify_command(ledger_path);
        }
        if (balances->parsed()) {
            return balances_command(ledger_path);
        }
        if (ground_truth->parsed() && diff->parsed()) {
            return ground_truth_diff_command(report_path, scenario_path);
        }
        if (nodes->parsed() && dump->parsed()) {
            return nodes_dump_command(scenario_path);
        }
    } catch (const sapiens::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == sapiens::ErrorCode::InternalInvariantViolation ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
