#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sapiens/digest.hpp"
#include "sapiens/errors.hpp"
#include "sapiens/incentive.hpp"
#include "sapiens/ledger.hpp"
#include "sapiens/registry.hpp"
#include "sapiens/scenario.hpp"
#include "sapiens/simulation.hpp"

namespace py = pybind11;

namespace {

struct PyRunResult {
    std::string metrics_json;
    std::string ledger_text;
    std::string traces_json;
    std::map<std::string, std::string> reports_json;
    std::map<std::string, std::uint64_t> balances;
    std::uint64_t mint_counter = 0;
};

PyRunResult to_py(const sapiens::RunResult& result) {
    PyRunResult out;
    out.metrics_json = sapiens::metrics_to_json(result.metrics);
    out.ledger_text = result.ledger_text();
    out.traces_json = result.traces_to_json();
    for (const auto& [task_id, report] : result.reports) {
        out.reports_json[task_id] = result.report_to_json(task_id);
    }
    out.balances = result.balances;
    out.mint_counter = result.mint_counter;
    return out;
}

sapiens::RunOptions make_options(std::optional<std::uint64_t> seed,
                                 std::uint64_t shuffle_salt) {
    sapiens::RunOptions options;
    options.seed_override = seed;
    options.shuffle_salt = shuffle_salt;
    return options;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sapiens Chain simulator core";

    py::register_exception<sapiens::Error>(m, "SimulationError");

    py::class_<PyRunResult>(m, "RunResult")
        .def_readonly("metrics_json", &PyRunResult::metrics_json)
        .def_readonly("ledger_text", &PyRunResult::ledger_text)
        .def_readonly("traces_json", &PyRunResult::traces_json)
        .def_readonly("reports_json", &PyRunResult::reports_json)
        .def_readonly("balances", &PyRunResult::balances)
        .def_readonly("mint_counter", &PyRunResult::mint_counter);

    m.def(
        "run_scenario",
        [](const std::string& text, std::optional<std::uint64_t> seed,
           std::uint64_t shuffle_salt) {
            return to_py(sapiens::run_scenario_text(text, make_options(seed, shuffle_salt)));
        },
        py::arg("text"), py::arg("seed") = py::none(), py::arg("shuffle_salt") = 0,
        "Run a scenario given as JSON text; returns a RunResult.");

    m.def(
        "run_scenario_file",
        [](const std::string& path, std::optional<std::uint64_t> seed,
           std::uint64_t shuffle_salt) {
            return to_py(sapiens::run_scenario_file(path, make_options(seed, shuffle_salt)));
        },
        py::arg("path"), py::arg("seed") = py::none(), py::arg("shuffle_salt") = 0,
        "Run a scenario JSON file; returns a RunResult.");

    m.def(
        "validate_scenario",
        [](const std::string& text) { sapiens::parse_scenario(text); },
        py::arg("text"), "Parse and validate scenario JSON; raises on problems.");

    m.def(
        "verify_ledger",
        [](const std::string& text) {
            auto [header, ledger] = sapiens::Ledger::parse_dump(text);
            sapiens::VerifyResult result = ledger.verify();
            return py::make_tuple(result.valid, result.first_bad_index);
        },
        py::arg("text"),
        "Verify a ledger dump; returns (valid, first_bad_index).");

    m.def(
        "replay_balances",
        [](const std::string& text) {
            auto [header, ledger] = sapiens::Ledger::parse_dump(text);
            sapiens::ReplayResult replay = sapiens::replay_balances(header, ledger);
            return py::make_tuple(replay.balances, replay.mint_counter);
        },
        py::arg("text"),
        "Reconstruct balances from a ledger dump; returns (balances, mint_counter).");

    m.def(
        "sha256_hex",
        [](const py::bytes& data) {
            std::string_view view = data;
            return sapiens::to_hex(sapiens::Sha256::hash(view));
        },
        py::arg("data"), "SHA-256 of raw bytes as lowercase hex.");

    m.def(
        "find_work_nonce",
        [](const std::string& seed_hex, std::uint32_t difficulty) {
            auto seed = sapiens::digest_from_hex(seed_hex);
            if (!seed) {
                throw sapiens::Error(sapiens::ErrorCode::ParseError,
                                     "puzzle seed must be 64 hex characters");
            }
            return sapiens::find_work_nonce(*seed, difficulty);
        },
        py::arg("seed_hex"), py::arg("difficulty"),
        "Smallest nonce whose proof digest clears the difficulty.");

    m.attr("__version__") = "0.1.0";
}
