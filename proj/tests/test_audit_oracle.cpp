#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "sapiens/audit_oracle.hpp"

using namespace sapiens;

namespace {

AuditTarget target_with(std::vector<PlantedVuln> vulns) {
    AuditTarget t;
    t.target_id = "w1";
    t.target_type = TaskType::Website;
    t.planted = std::move(vulns);
    return t;
}

DetectorProfile automatic_with(InstalledPocs pocs) {
    DetectorProfile p;
    p.detector = "c1";
    p.automatic = true;
    p.pocs = std::move(pocs);
    return p;
}

DetectorProfile manual_with(double skill) {
    DetectorProfile p;
    p.detector = "h1";
    p.automatic = false;
    p.skill = skill;
    return p;
}

}  // namespace

TEST_CASE("certain detection with a matching poc always finds the vuln") {
    AuditTarget target = target_with({{"v1", "sqli", Severity::High, 1.0}});
    DetectorProfile profile = automatic_with({{"p1", "sqli"}});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto findings = detect(target, profile, seed);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].finding_id == "v1");
        CHECK(findings[0].severity == Severity::High);
        CHECK(findings[0].via_poc);
        CHECK(findings[0].poc_id == "p1");
    }
}

TEST_CASE("no matching pattern means no detection regardless of detectability") {
    AuditTarget target = target_with({{"v1", "sqli", Severity::High, 1.0}});
    DetectorProfile profile = automatic_with({{"p1", "xss"}});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        CHECK(detect(target, profile, seed).empty());
    }
}

TEST_CASE("automatic mode is sound: every finding is planted, no false positives") {
    AuditTarget target = target_with({{"v1", "sqli", Severity::Low, 0.7},
                                      {"v2", "xss", Severity::High, 0.4}});
    DetectorProfile profile = automatic_with({{"p1", "sqli"}, {"p2", "xss"}});
    std::set<std::string> planted{"v1", "v2"};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        for (const Finding& f : detect(target, profile, seed, /*fp_rate=*/0.9)) {
            CHECK(planted.count(f.finding_id) == 1);
        }
    }
}

TEST_CASE("10000 seeded trials at detectability 0.5 land within 0.02 of one half") {
    DetectorProfile profile = manual_with(1.0);
    int hits = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        AuditTarget target = target_with({{"v" + std::to_string(i), "pat", Severity::Low, 0.5}});
        target.target_id = "w" + std::to_string(i);
        if (!detect(target, profile, 4242).empty()) {
            ++hits;
        }
    }
    double rate = double(hits) / trials;
    CHECK(std::abs(rate - 0.5) <= 0.02);
}

TEST_CASE("manual skill scales the detection probability") {
    DetectorProfile half_skill = manual_with(0.5);
    int hits = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        AuditTarget target = target_with({{"v" + std::to_string(i), "pat", Severity::Low, 1.0}});
        target.target_id = "w" + std::to_string(i);
        if (!detect(target, half_skill, 777).empty()) {
            ++hits;
        }
    }
    double rate = double(hits) / trials;
    CHECK(std::abs(rate - 0.5) <= 0.02);
}

TEST_CASE("false positives appear only in manual mode, at the configured rate") {
    AuditTarget bare = target_with({});
    DetectorProfile manual = manual_with(1.0);
    int fps = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        AuditTarget t = bare;
        t.target_id = "w" + std::to_string(i);
        auto findings = detect(t, manual, 31415, /*fp_rate=*/0.25);
        for (const Finding& f : findings) {
            CHECK(f.finding_id.rfind("fp:", 0) == 0);
            ++fps;
        }
        CHECK(detect(t, automatic_with({{"p", "x"}}), 31415, /*fp_rate=*/0.25).empty());
    }
    double rate = double(fps) / trials;
    CHECK(std::abs(rate - 0.25) <= 0.02);
}

TEST_CASE("detection is deterministic and independent of iteration order") {
    std::vector<PlantedVuln> vulns;
    for (int i = 0; i < 30; ++i) {
        vulns.push_back({"v" + std::to_string(i), i % 2 ? "sqli" : "xss",
                         Severity(i % 3), 0.5});
    }
    AuditTarget target = target_with(vulns);
    DetectorProfile profile = automatic_with({{"p1", "sqli"}, {"p2", "xss"}});

    auto base = detect(target, profile, 99);
    auto again = detect(target, profile, 99);
    REQUIRE(base.size() == again.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(base[i].finding_id == again[i].finding_id);
    }
    for (std::uint64_t salt : {1ull, 17ull, 400ull}) {
        auto shuffled = detect(target, profile, 99, 0.0, salt);
        REQUIRE(shuffled.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(shuffled[i].finding_id == base[i].finding_id);
        }
    }
}

TEST_CASE("adding an adopted poc never shrinks the detectable set") {
    std::vector<PlantedVuln> vulns;
    for (int i = 0; i < 20; ++i) {
        vulns.push_back({"v" + std::to_string(i), i % 2 ? "sqli" : "xss",
                         Severity::Low, 0.6});
    }
    AuditTarget target = target_with(vulns);
    auto ids = [](const std::vector<Finding>& fs) {
        std::set<std::string> out;
        for (const Finding& f : fs) out.insert(f.finding_id);
        return out;
    };
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto small = ids(detect(target, automatic_with({{"p1", "sqli"}}), seed));
        auto large = ids(detect(target, automatic_with({{"p1", "sqli"}, {"p2", "xss"}}), seed));
        for (const std::string& id : small) {
            CHECK(large.count(id) == 1);
        }
    }
}

TEST_CASE("finding severity equals the planted severity") {
    AuditTarget target = target_with({{"v1", "a", Severity::Medium, 1.0},
                                      {"v2", "b", Severity::High, 1.0}});
    auto findings = detect(target, automatic_with({{"p1", "a"}, {"p2", "b"}}), 5);
    REQUIRE(findings.size() == 2);
    CHECK(findings[0].severity == Severity::Medium);
    CHECK(findings[1].severity == Severity::High);
}

TEST_CASE("risk classification takes the maximum severity") {
    Finding low;
    low.finding_id = "l";
    low.severity = Severity::Low;
    Finding med = low;
    med.finding_id = "m";
    med.severity = Severity::Medium;
    Finding high = low;
    high.finding_id = "h";
    high.severity = Severity::High;

    CHECK(classify_risk({high, low}) == Severity::High);
    CHECK(classify_risk({med, low}) == Severity::Medium);
    CHECK(classify_risk({low}) == Severity::Low);
    CHECK(classify_risk({}) == Severity::Low);
}

TEST_CASE("ground truth diff computes precision and recall") {
    auto diff = GroundTruthDiff::compare({"v1", "v2", "bogus"}, {"v1", "v2", "v3"});
    CHECK(diff.true_positives == 2);
    CHECK(diff.false_positives == 1);
    CHECK(diff.false_negatives == 1);
    CHECK(diff.precision == doctest::Approx(2.0 / 3.0));
    CHECK(diff.recall == doctest::Approx(2.0 / 3.0));

    auto empty = GroundTruthDiff::compare({}, {});
    CHECK(empty.precision == 1.0);
    CHECK(empty.recall == 1.0);
}
