#include "sapiens/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sapiens/errors.hpp"

namespace sapiens {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& origin, const std::string& what) {
    fail(ErrorCode::ParseError, origin + ": " + what);
}

[[noreturn]] void invalid(const std::string& what) {
    fail(ErrorCode::ValidationError, what);
}

const json& field(const json& j, const char* name, const std::string& context,
                  const std::string& origin) {
    auto it = j.find(name);
    if (it == j.end()) {
        parse_fail(origin, context + ": missing field '" + name + "'");
    }
    return *it;
}

double unit_interval(const json& j, const char* name, const std::string& context,
                     const std::string& origin) {
    double v = field(j, name, context, origin).get<double>();
    if (v < 0.0 || v > 1.0) {
        invalid(context + ": " + name + " must lie in [0,1], got " + std::to_string(v));
    }
    return v;
}

NodeSpec parse_node(const json& j, const std::string& origin) {
    NodeSpec spec;
    NodeProfile& p = spec.profile;
    p.node_id = field(j, "node_id", "node", origin).get<std::string>();
    std::string context = "node " + p.node_id;

    std::string kind = field(j, "kind", context, origin).get<std::string>();
    if (kind == "fog") {
        p.kind = NodeKind::Fog;
    } else if (kind == "ordinary") {
        p.kind = NodeKind::Ordinary;
    } else {
        parse_fail(origin, context + ": unknown kind '" + kind + "'");
    }

    if (j.contains("roles")) {
        for (const auto& r : j.at("roles")) {
            auto role = role_from_name(r.get<std::string>());
            if (!role) {
                parse_fail(origin, context + ": unknown role '" + r.get<std::string>() + "'");
            }
            p.roles.insert(*role);
        }
    }
    if (j.contains("position")) {
        const auto& pos = j.at("position");
        if (!pos.is_array() || pos.size() != 2) {
            parse_fail(origin, context + ": position must be [x, y]");
        }
        p.position = {pos[0].get<double>(), pos[1].get<double>()};
        if (p.position.x < 0.0 || p.position.x > 1.0 || p.position.y < 0.0 ||
            p.position.y > 1.0) {
            invalid(context + ": position must lie in the unit plane [0,1]^2");
        }
    }
    p.pow_score = j.value("pow_score", std::uint64_t(0));
    p.ranking = j.value("ranking", std::uint64_t(0));
    p.active_level = j.value("active_level", std::uint64_t(0));
    double capacity = j.value("capacity", 1.0);
    if (capacity < 0.0) {
        invalid(context + ": capacity must be non-negative");
    }
    p.capacity = capacity_from_double(capacity);
    if (j.contains("skill")) {
        spec.skill = unit_interval(j, "skill", context, origin);
    }
    if (j.contains("fail_prob")) {
        spec.fail_prob = unit_interval(j, "fail_prob", context, origin);
    }
    return spec;
}

AuditTarget parse_target(const json& j, TaskType task_type, const std::string& origin) {
    AuditTarget target;
    target.target_id = field(j, "target_id", "target", origin).get<std::string>();
    std::string context = "target " + target.target_id;
    target.target_type = task_type;
    if (j.contains("planted")) {
        for (const auto& v : j.at("planted")) {
            PlantedVuln vuln;
            vuln.vuln_id = field(v, "vuln_id", context, origin).get<std::string>();
            vuln.pattern = field(v, "pattern", context, origin).get<std::string>();
            auto sev = severity_from_name(
                field(v, "severity", context, origin).get<std::string>());
            if (!sev) {
                parse_fail(origin, context + ": unknown severity");
            }
            vuln.severity = *sev;
            vuln.base_detectability = v.value("detectability", 1.0);
            if (vuln.base_detectability < 0.0 || vuln.base_detectability > 1.0) {
                invalid(context + ": detectability must lie in [0,1]");
            }
            target.planted.push_back(std::move(vuln));
        }
    }
    return target;
}

TaskSpec parse_task(const json& j, const std::string& origin) {
    TaskSpec spec;
    spec.task_id = field(j, "task_id", "task", origin).get<std::string>();
    std::string context = "task " + spec.task_id;
    spec.time = field(j, "time", context, origin).get<std::uint64_t>();
    spec.user = field(j, "user", context, origin).get<std::string>();
    auto type = task_type_from_name(field(j, "task_type", context, origin).get<std::string>());
    if (!type) {
        parse_fail(origin, context + ": unknown task_type");
    }
    spec.task_type = *type;
    auto service =
        service_kind_from_name(field(j, "service", context, origin).get<std::string>());
    if (!service) {
        parse_fail(origin, context + ": unknown service");
    }
    spec.service = *service;
    spec.escrow = field(j, "escrow", context, origin).get<std::uint64_t>();
    for (const auto& t : field(j, "targets", context, origin)) {
        spec.targets.push_back(parse_target(t, spec.task_type, origin));
    }
    return spec;
}

PocSpec parse_poc(const json& j, const std::string& origin) {
    PocSpec spec;
    spec.poc_id = field(j, "poc_id", "poc", origin).get<std::string>();
    std::string context = "poc " + spec.poc_id;
    spec.time = field(j, "time", context, origin).get<std::uint64_t>();
    spec.author = field(j, "author", context, origin).get<std::string>();
    spec.pattern = field(j, "pattern", context, origin).get<std::string>();
    if (j.contains("scripted_verdicts")) {
        for (const auto& v : j.at("scripted_verdicts")) {
            std::string verdict = v.get<std::string>();
            if (verdict == "accept") {
                spec.scripted_verdicts.push_back(Verdict::Accept);
            } else if (verdict == "reject") {
                spec.scripted_verdicts.push_back(Verdict::Reject);
            } else {
                parse_fail(origin, context + ": unknown verdict '" + verdict + "'");
            }
        }
    }
    return spec;
}

ClaimSpec parse_claim(const json& j, const std::string& origin) {
    ClaimSpec spec;
    spec.offer_id = field(j, "offer_id", "claim", origin).get<std::string>();
    std::string context = "claim " + spec.offer_id;
    spec.time = field(j, "time", context, origin).get<std::uint64_t>();
    spec.author = field(j, "author", context, origin).get<std::string>();
    spec.target_user = field(j, "target_user", context, origin).get<std::string>();
    spec.price = field(j, "price", context, origin).get<std::uint64_t>();

    const json& f = field(j, "finding", context, origin);
    spec.finding.finding_id = field(f, "finding_id", context, origin).get<std::string>();
    spec.finding.target_ref = f.value("target_ref", std::string{});
    auto sev = severity_from_name(field(f, "severity", context, origin).get<std::string>());
    if (!sev) {
        parse_fail(origin, context + ": unknown severity");
    }
    spec.finding.severity = *sev;
    spec.finding.discovered_by = spec.author;

    if (j.contains("decision")) {
        std::string d = j.at("decision").get<std::string>();
        if (d == "claim") {
            spec.decision = ClaimDecision::Claim;
        } else if (d == "decline") {
            spec.decision = ClaimDecision::Decline;
        } else {
            parse_fail(origin, context + ": unknown decision '" + d + "'");
        }
    }
    spec.decision_delay = j.value("decision_delay", std::uint64_t(1));
    return spec;
}

ScenarioParams parse_params(const json& j, const std::string& origin) {
    ScenarioParams p;
    p.segments = j.value("segments", p.segments);
    p.redundancy = j.value("redundancy", p.redundancy);
    p.quorum = j.value("quorum", p.quorum);
    p.max_rounds = j.value("max_rounds", p.max_rounds);
    p.capacity_decrement = j.value("capacity_decrement", p.capacity_decrement);
    p.ranking_step = j.value("ranking_step", p.ranking_step);
    p.w_pow = j.value("w_pow", p.w_pow);
    p.w_dist = j.value("w_dist", p.w_dist);
    p.fp_rate = j.value("fp_rate", p.fp_rate);
    p.mint_enabled = j.value("mint_enabled", p.mint_enabled);
    p.pow_difficulty = j.value("pow_difficulty", p.pow_difficulty);
    p.wha_count = j.value("wha_count", p.wha_count);
    if (j.contains("rewards")) {
        const json& r = j.at("rewards");
        p.rewards.poc_adopted = r.value("poc_adopted", p.rewards.poc_adopted);
        p.rewards.poc_audit_adopted = r.value("poc_audit_adopted", p.rewards.poc_audit_adopted);
        p.rewards.vuln_adopted = r.value("vuln_adopted", p.rewards.vuln_adopted);
        p.rewards.vuln_audit_adopted =
            r.value("vuln_audit_adopted", p.rewards.vuln_audit_adopted);
        p.rewards.audit_service_complete =
            r.value("audit_service_complete", p.rewards.audit_service_complete);
        p.rewards.called_poc = r.value("called_poc", p.rewards.called_poc);
    }
    (void)origin;
    return p;
}

}  // namespace

std::vector<std::string> Scenario::pattern_catalog() const {
    std::set<std::string> patterns;
    for (const TaskSpec& task : tasks) {
        for (const AuditTarget& target : task.targets) {
            for (const PlantedVuln& v : target.planted) {
                patterns.insert(v.pattern);
            }
        }
    }
    return {patterns.begin(), patterns.end()};
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        parse_fail(origin, e.what());
    }

    Scenario s;
    try {
        s.schema = field(j, "schema", "scenario", origin).get<int>();
        if (s.schema != 1) {
            parse_fail(origin, "unsupported schema version " + std::to_string(s.schema));
        }
        s.run_seed = field(j, "run_seed", "scenario", origin).get<std::uint64_t>();
        if (j.contains("params")) {
            s.params = parse_params(j.at("params"), origin);
        }
        for (const auto& n : field(j, "nodes", "scenario", origin)) {
            s.nodes.push_back(parse_node(n, origin));
        }
        if (j.contains("initial_balances")) {
            s.initial_balances =
                j.at("initial_balances").get<std::map<std::string, std::uint64_t>>();
        }
        if (j.contains("tasks")) {
            for (const auto& t : j.at("tasks")) {
                s.tasks.push_back(parse_task(t, origin));
            }
        }
        if (j.contains("pocs")) {
            for (const auto& p : j.at("pocs")) {
                s.pocs.push_back(parse_poc(p, origin));
            }
        }
        if (j.contains("claims")) {
            for (const auto& c : j.at("claims")) {
                s.claims.push_back(parse_claim(c, origin));
            }
        }
    } catch (const json::exception& e) {
        parse_fail(origin, e.what());
    }

    // stable processing order regardless of file layout
    auto by_time_then_id = [](auto& list, auto id_of) {
        std::sort(list.begin(), list.end(), [&id_of](const auto& a, const auto& b) {
            if (a.time != b.time) return a.time < b.time;
            return id_of(a) < id_of(b);
        });
    };
    by_time_then_id(s.tasks, [](const TaskSpec& t) { return t.task_id; });
    by_time_then_id(s.pocs, [](const PocSpec& p) { return p.poc_id; });
    by_time_then_id(s.claims, [](const ClaimSpec& c) { return c.offer_id; });

    validate_scenario(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open scenario file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), path);
}

void validate_scenario(const Scenario& s) {
    const ScenarioParams& p = s.params;
    if (p.segments < 1) invalid("params.segments must be >= 1");
    if (p.redundancy < 1) invalid("params.redundancy must be >= 1");
    if (p.quorum % 2 == 0 || p.quorum < 1) {
        invalid("params.quorum must be odd, got " + std::to_string(p.quorum));
    }
    if (p.max_rounds < 1) invalid("params.max_rounds must be >= 1");
    if (p.capacity_decrement <= 0.0) invalid("params.capacity_decrement must be positive");
    if (p.w_pow < 0.0 || p.w_dist < 0.0 || std::abs(p.w_pow + p.w_dist - 1.0) > 1e-12) {
        invalid("params.w_pow + params.w_dist must equal 1");
    }
    if (p.fp_rate < 0.0 || p.fp_rate > 1.0) invalid("params.fp_rate must lie in [0,1]");
    if (p.pow_difficulty > 32) invalid("params.pow_difficulty above desk scale (max 32)");
    if (p.wha_count < 1) invalid("params.wha_count must be >= 1");

    std::set<std::string> node_ids;
    std::size_t fog_count = 0;
    for (const NodeSpec& n : s.nodes) {
        if (!node_ids.insert(n.profile.node_id).second) {
            invalid("duplicate node id " + n.profile.node_id);
        }
        if (n.profile.kind == NodeKind::Fog) {
            ++fog_count;
            if (!n.profile.roles.empty()) {
                invalid("fog node " + n.profile.node_id + " must hold no roles");
            }
        }
        if (n.profile.roles.has(Role::Wha) && !n.profile.roles.has(Role::Whh)) {
            invalid("node " + n.profile.node_id + " holds wha without whh");
        }
    }
    if (fog_count == 0) {
        invalid("scenario needs at least one fog node");
    }

    for (const auto& [owner, amount] : s.initial_balances) {
        (void)amount;
        if (!node_ids.count(owner)) {
            invalid("initial balance for unknown node " + owner);
        }
    }

    auto require_role = [&s, &node_ids](const std::string& id, Role role,
                                        const std::string& context) {
        if (!node_ids.count(id)) {
            invalid(context + " references unknown node " + id);
        }
        for (const NodeSpec& n : s.nodes) {
            if (n.profile.node_id == id) {
                if (!n.profile.roles.has(role)) {
                    invalid(context + ": node " + id + " does not hold role " +
                            role_name(role));
                }
                return;
            }
        }
    };

    std::set<std::string> task_ids;
    std::set<std::string> vuln_ids;
    for (const TaskSpec& t : s.tasks) {
        if (!task_ids.insert(t.task_id).second) {
            invalid("duplicate task id " + t.task_id);
        }
        require_role(t.user, Role::User, "task " + t.task_id);
        if (t.targets.empty()) {
            invalid("task " + t.task_id + " has no targets");
        }
        std::set<std::string> target_ids;
        for (const AuditTarget& target : t.targets) {
            if (!target_ids.insert(target.target_id).second) {
                invalid("task " + t.task_id + " has duplicate target " + target.target_id);
            }
            for (const PlantedVuln& v : target.planted) {
                if (!vuln_ids.insert(v.vuln_id).second) {
                    invalid("duplicate vuln id " + v.vuln_id + " across the scenario");
                }
            }
        }
    }

    std::set<std::string> poc_ids;
    for (const PocSpec& poc : s.pocs) {
        if (!poc_ids.insert(poc.poc_id).second) {
            invalid("duplicate poc id " + poc.poc_id);
        }
        require_role(poc.author, Role::Pocd, "poc " + poc.poc_id);
        if (!poc.scripted_verdicts.empty() && poc.scripted_verdicts.size() != p.quorum) {
            invalid("poc " + poc.poc_id + " scripts " +
                    std::to_string(poc.scripted_verdicts.size()) + " verdicts, quorum is " +
                    std::to_string(p.quorum));
        }
    }
    if (!s.pocs.empty() && !p.mint_enabled &&
        (p.rewards.poc_adopted > 0 || p.rewards.poc_audit_adopted > 0)) {
        invalid("POC lifecycle rewards are mint-funded; enable mint_enabled or zero "
                "rewards.poc_adopted/poc_audit_adopted");
    }

    std::set<std::string> offer_ids;
    for (const ClaimSpec& c : s.claims) {
        if (!offer_ids.insert(c.offer_id).second) {
            invalid("duplicate offer id " + c.offer_id);
        }
        require_role(c.author, Role::Whh, "claim " + c.offer_id);
        if (!node_ids.count(c.target_user)) {
            invalid("claim " + c.offer_id + " references unknown node " + c.target_user);
        }
    }
}

std::string scenario_to_json(const Scenario& s) {
    json nodes = json::array();
    for (const NodeSpec& n : s.nodes) {
        json roles = json::array();
        for (Role r : n.profile.roles.to_vector()) {
            roles.push_back(role_name(r));
        }
        json node{
            {"node_id", n.profile.node_id},
            {"kind", n.profile.kind == NodeKind::Fog ? "fog" : "ordinary"},
            {"roles", std::move(roles)},
            {"position", {n.profile.position.x, n.profile.position.y}},
            {"pow_score", n.profile.pow_score},
            {"ranking", n.profile.ranking},
            {"active_level", n.profile.active_level},
            {"capacity", capacity_to_double(n.profile.capacity)},
            {"skill", n.skill},
            {"fail_prob", n.fail_prob},
        };
        nodes.push_back(std::move(node));
    }

    json tasks = json::array();
    for (const TaskSpec& t : s.tasks) {
        json targets = json::array();
        for (const AuditTarget& target : t.targets) {
            json planted = json::array();
            for (const PlantedVuln& v : target.planted) {
                planted.push_back(json{{"vuln_id", v.vuln_id},
                                       {"pattern", v.pattern},
                                       {"severity", severity_name(v.severity)},
                                       {"detectability", v.base_detectability}});
            }
            targets.push_back(
                json{{"target_id", target.target_id}, {"planted", std::move(planted)}});
        }
        tasks.push_back(json{{"time", t.time},
                             {"task_id", t.task_id},
                             {"user", t.user},
                             {"task_type", task_type_name(t.task_type)},
                             {"service", service_kind_name(t.service)},
                             {"escrow", t.escrow},
                             {"targets", std::move(targets)}});
    }

    json pocs = json::array();
    for (const PocSpec& poc : s.pocs) {
        json entry{{"time", poc.time},
                   {"poc_id", poc.poc_id},
                   {"author", poc.author},
                   {"pattern", poc.pattern}};
        if (!poc.scripted_verdicts.empty()) {
            json verdicts = json::array();
            for (Verdict v : poc.scripted_verdicts) {
                verdicts.push_back(v == Verdict::Accept ? "accept" : "reject");
            }
            entry["scripted_verdicts"] = std::move(verdicts);
        }
        pocs.push_back(std::move(entry));
    }

    json claims = json::array();
    for (const ClaimSpec& c : s.claims) {
        json entry{{"time", c.time},
                   {"offer_id", c.offer_id},
                   {"author", c.author},
                   {"target_user", c.target_user},
                   {"price", c.price},
                   {"finding",
                    json{{"finding_id", c.finding.finding_id},
                         {"target_ref", c.finding.target_ref},
                         {"severity", severity_name(c.finding.severity)}}},
                   {"decision_delay", c.decision_delay}};
        if (c.decision) {
            entry["decision"] = *c.decision == ClaimDecision::Claim ? "claim" : "decline";
        }
        claims.push_back(std::move(entry));
    }

    json out{
        {"schema", s.schema},
        {"run_seed", s.run_seed},
        {"params",
         json{{"segments", s.params.segments},
              {"redundancy", s.params.redundancy},
              {"quorum", s.params.quorum},
              {"max_rounds", s.params.max_rounds},
              {"capacity_decrement", s.params.capacity_decrement},
              {"ranking_step", s.params.ranking_step},
              {"w_pow", s.params.w_pow},
              {"w_dist", s.params.w_dist},
              {"fp_rate", s.params.fp_rate},
              {"mint_enabled", s.params.mint_enabled},
              {"pow_difficulty", s.params.pow_difficulty},
              {"wha_count", s.params.wha_count},
              {"rewards",
               json{{"poc_adopted", s.params.rewards.poc_adopted},
                    {"poc_audit_adopted", s.params.rewards.poc_audit_adopted},
                    {"vuln_adopted", s.params.rewards.vuln_adopted},
                    {"vuln_audit_adopted", s.params.rewards.vuln_audit_adopted},
                    {"audit_service_complete", s.params.rewards.audit_service_complete},
                    {"called_poc", s.params.rewards.called_poc}}}}},
        {"nodes", std::move(nodes)},
        {"initial_balances", s.initial_balances},
        {"tasks", std::move(tasks)},
        {"pocs", std::move(pocs)},
        {"claims", std::move(claims)},
    };
    return out.dump(2);
}

}  // namespace sapiens
