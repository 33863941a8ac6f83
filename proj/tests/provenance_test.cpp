#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "relgate/provenance.hpp"

using namespace relgate;
using testutil::TempDir;

namespace {

bool has_issue(const std::vector<BundleIssue>& issues, BundleIssue::Kind kind) {
    for (const auto& i : issues) {
        if (i.kind == kind) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("empty bundle is valid with zero entities") {
    TempDir tmp("prov_empty");
    ProvBundle empty;
    empty.write(tmp.path());
    const BundleLoad load = load_bundle(tmp.path());
    CHECK(load.issues.empty());
    CHECK(load.bundle.entities.empty());
    CHECK(load.bundle.activities.empty());
}

TEST_CASE("worked example bundle round-trips and validates") {
    TempDir tmp("prov_rt");
    const auto ex = testutil::worked_example_provenance();
    ex.bundle.write(tmp.path());
    const BundleLoad load = load_bundle(tmp.path());
    CHECK(load.issues.empty());
    CHECK(load.bundle.entities.size() == ex.bundle.entities.size());
    CHECK(load.bundle.activities.size() == 8);
    CHECK(load.bundle.edges.size() == ex.bundle.edges.size());
}

TEST_CASE("dangling edge is reported") {
    auto ex = testutil::worked_example_provenance();
    ex.bundle.edges.push_back({EdgeKind::kUsed, "act-1-extract", "ent-ghost"});
    CHECK(has_issue(ex.bundle.validate(), BundleIssue::Kind::kDanglingEdge));
}

TEST_CASE("multiple generators for one entity are reported") {
    auto ex = testutil::worked_example_provenance();
    ex.bundle.edges.push_back({EdgeKind::kWasGeneratedBy, "act-3-normalize", "ent-raw-notes"});
    CHECK(has_issue(ex.bundle.validate(), BundleIssue::Kind::kMultipleGenerators));
}

TEST_CASE("training run without a required field names it") {
    auto act = testutil::exemplar_activity(ProvEventType::kTrainingRun, "t1");
    act.fields.erase("random_seed");  // not a training field; no effect
    act.fields.erase("code_commit");
    const auto issues = validate_activity(act);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].kind == BundleIssue::Kind::kMissingMinimalField);
    CHECK(issues[0].message.find("code_commit") != std::string::npos);
    CHECK(issues[0].message.find("training_run") != std::string::npos);
}

TEST_CASE("minimal field matrix: every exemplar passes, every deletion fails") {
    for (int t = 0; t < kNumProvEventTypes; ++t) {
        const auto type = static_cast<ProvEventType>(t);
        const auto exemplar = testutil::exemplar_activity(type, "a");
        CHECK(validate_activity(exemplar).empty());
        for (const auto& key : minimal_fields(type)) {
            auto broken = exemplar;
            broken.fields.erase(key);
            const auto issues = validate_activity(broken);
            REQUIRE(issues.size() == 1);
            CHECK(issues[0].kind == BundleIssue::Kind::kMissingMinimalField);
        }
    }
}

TEST_CASE("timestamps must parse") {
    CHECK(timestamp_parseable("2026-01-15"));
    CHECK(timestamp_parseable("2026-01-15T10:00:00Z"));
    CHECK(timestamp_parseable("2026-01-15T10:00:00.123Z"));
    CHECK(timestamp_parseable("2026-01-15T10:00:00+02:00"));
    CHECK_FALSE(timestamp_parseable(""));
    CHECK_FALSE(timestamp_parseable("yesterday"));
    CHECK_FALSE(timestamp_parseable("2026-13-01"));
    CHECK_FALSE(timestamp_parseable("2026-01-15T25"));

    auto act = testutil::exemplar_activity(ProvEventType::kExtraction, "x");
    act.timestamp = "whenever";
    CHECK(has_issue(validate_activity(act), BundleIssue::Kind::kBadTimestamp));
}

TEST_CASE("activities require a known agent") {
    auto ex = testutil::worked_example_provenance();
    ex.bundle.activities[0].agent_id = "ag-nobody";
    CHECK(has_issue(ex.bundle.validate(), BundleIssue::Kind::kMissingAgent));
}

TEST_CASE("hash verification statuses") {
    TempDir tmp("hashes");
    testutil::write_file(tmp.path() / "a.txt", "alpha\n");
    testutil::write_file(tmp.path() / "b.txt", "bravo\n");

    ProvBundle bundle;
    bundle.agents.push_back({"ag", "", ""});
    bundle.entities.push_back(
        {"e-a", EntityLayer::kData, sha256_file(tmp.path() / "a.txt"), "v1", "a.txt"});
    bundle.entities.push_back(
        {"e-b", EntityLayer::kData, sha256_file(tmp.path() / "b.txt"), "v1", "b.txt"});
    bundle.entities.push_back({"e-gone", EntityLayer::kData, sha256_hex("x"), "v1", "gone.txt"});

    SUBCASE("unchanged files match") {
        const IntegrityReport report = verify_hashes(bundle, tmp.path());
        CHECK(report.count(HashStatus::kMatch) == 2);
        CHECK(report.count(HashStatus::kAbsent) == 1);
        CHECK(report.all_match_or_absent());
    }

    SUBCASE("single byte flip mismatches exactly that entity") {
        std::string bytes = testutil::read_file(tmp.path() / "b.txt");
        bytes[0] ^= 0x01;
        testutil::write_file(tmp.path() / "b.txt", bytes);
        const IntegrityReport report = verify_hashes(bundle, tmp.path());
        CHECK(report.count(HashStatus::kMismatch) == 1);
        CHECK(report.count(HashStatus::kMatch) == 1);
        CHECK_FALSE(report.all_match_or_absent());
        for (const auto& e : report.entities) {
            if (e.entity_id == "e-b") CHECK(e.status == HashStatus::kMismatch);
            if (e.entity_id == "e-a") CHECK(e.status == HashStatus::kMatch);
        }
    }

    SUBCASE("verification is order independent") {
        const IntegrityReport r1 = verify_hashes(bundle, tmp.path());
        std::reverse(bundle.entities.begin(), bundle.entities.end());
        const IntegrityReport r2 = verify_hashes(bundle, tmp.path());
        REQUIRE(r1.entities.size() == r2.entities.size());
        for (size_t i = 0; i < r1.entities.size(); ++i) {
            CHECK(r1.entities[i].entity_id == r2.entities[i].entity_id);
            CHECK(r1.entities[i].status == r2.entities[i].status);
        }
    }
}

TEST_CASE("lineage of the worked example reproduces the pipeline chain") {
    const auto ex = testutil::worked_example_provenance();
    const LineageTree tree = lineage(ex.bundle, ex.eval_entity);
    std::vector<ProvEventType> chain;
    for (const auto& step : tree.steps) chain.push_back(step.activity->event_type);
    const std::vector<ProvEventType> expected = {
        ProvEventType::kExtraction,
        ProvEventType::kDeidentification,
        ProvEventType::kNormalization,
        ProvEventType::kSplitSampling,
    };
    CHECK(chain == expected);
    for (const auto& step : tree.steps) CHECK(step.agent != nullptr);
}

TEST_CASE("lineage edge cases") {
    const auto ex = testutil::worked_example_provenance();

    SUBCASE("entity with no generator has depth zero") {
        ProvBundle bundle;
        bundle.entities.push_back({"solo", EntityLayer::kData, "deadbeef", "v1", ""});
        const LineageTree tree = lineage(bundle, "solo");
        CHECK(tree.steps.empty());
        CHECK(tree.ancestor_entities.empty());
    }

    SUBCASE("unknown entity throws") {
        CHECK_THROWS_AS(lineage(ex.bundle, "ent-nope"), ProvError);
    }

    SUBCASE("an entity is never its own ancestor") {
        for (const auto& e : ex.bundle.entities) {
            const LineageTree tree = lineage(ex.bundle, e.entity_id);
            for (const auto* anc : tree.ancestor_entities) {
                CHECK(anc->entity_id != e.entity_id);
            }
        }
    }

    SUBCASE("siblings share their ancestor subtree") {
        const LineageTree labels = lineage(ex.bundle, "ent-labels");
        const LineageTree split = lineage(ex.bundle, "ent-split-manifest");
        // Both descend from normalization; their ancestor entity sets match.
        std::vector<std::string> a, b;
        for (const auto* e : labels.ancestor_entities) a.push_back(e->entity_id);
        for (const auto* e : split.ancestor_entities) b.push_back(e->entity_id);
        CHECK(a == b);
    }
}

TEST_CASE("cycles are rejected") {
    SUBCASE("constructed two-entity cycle") {
        ProvBundle bundle;
        bundle.agents.push_back({"ag", "", ""});
        bundle.entities.push_back({"e1", EntityLayer::kData, "h1", "v1", ""});
        bundle.entities.push_back({"e2", EntityLayer::kData, "h2", "v1", ""});
        auto a1 = testutil::exemplar_activity(ProvEventType::kNormalization, "a1", "ag");
        auto a2 = testutil::exemplar_activity(ProvEventType::kNormalization, "a2", "ag");
        bundle.activities = {a1, a2};
        bundle.edges = {
            {EdgeKind::kUsed, "a1", "e2"},          {EdgeKind::kWasGeneratedBy, "a1", "e1"},
            {EdgeKind::kUsed, "a2", "e1"},          {EdgeKind::kWasGeneratedBy, "a2", "e2"},
        };
        CHECK(has_issue(bundle.validate(), BundleIssue::Kind::kCycle));
    }

    SUBCASE("random chains with injected back edges") {
        std::mt19937_64 rng(7);
        for (int round = 0; round < 25; ++round) {
            const int n = 3 + static_cast<int>(rng() % 6);
            ProvBundle bundle;
            bundle.agents.push_back({"ag", "", ""});
            for (int i = 0; i < n; ++i) {
                bundle.entities.push_back(
                    {"e" + std::to_string(i), EntityLayer::kData, "h", "v1", ""});
            }
            for (int i = 1; i < n; ++i) {
                auto act = testutil::exemplar_activity(ProvEventType::kNormalization,
                                                       "a" + std::to_string(i), "ag");
                bundle.activities.push_back(act);
                bundle.edges.push_back(
                    {EdgeKind::kUsed, act.activity_id, "e" + std::to_string(i - 1)});
                bundle.edges.push_back(
                    {EdgeKind::kWasGeneratedBy, act.activity_id, "e" + std::to_string(i)});
            }
            CHECK_FALSE(has_issue(bundle.validate(), BundleIssue::Kind::kCycle));

            // Inject a back edge: an early activity also uses a later entity.
            bundle.edges.push_back({EdgeKind::kUsed, "a1",
                                    "e" + std::to_string(1 + rng() % (n - 1))});
            const bool cyclic = has_issue(bundle.validate(), BundleIssue::Kind::kCycle);
            CHECK(cyclic);
        }
    }
}

TEST_CASE("version diff") {
    SUBCASE("identical entity diffs empty") {
        const auto ex = testutil::worked_example_provenance();
        const ProvDiff diff = diff_versions(ex.bundle, ex.model_entity, ex.model_entity);
        CHECK(diff.empty());
    }

    SUBCASE("checkpoints differing only in a hyperparameter surface that field") {
        // Two models trained from the same normalized data by two runs.
        auto ex = testutil::worked_example_provenance();
        ProvBundle& b = ex.bundle;
        b.entities.push_back({"ent-model-v2", EntityLayer::kModel, sha256_hex("model-v2"), "v2", ""});
        auto train2 = testutil::exemplar_activity(ProvEventType::kTrainingRun, "act-6b-train");
        train2.fields["hyperparameters"] = "lr=0.0005,epochs=3";
        b.activities.push_back(train2);
        b.edges.push_back({EdgeKind::kUsed, "act-6b-train", "ent-norm-notes"});
        b.edges.push_back({EdgeKind::kUsed, "act-6b-train", "ent-split-manifest"});
        b.edges.push_back({EdgeKind::kUsed, "act-6b-train", "ent-labels"});
        b.edges.push_back({EdgeKind::kWasGeneratedBy, "act-6b-train", "ent-model-v2"});

        const ProvDiff diff = diff_versions(b, ex.model_entity, "ent-model-v2");
        REQUIRE(diff.field_changes.size() == 1);
        CHECK(diff.field_changes[0].field_key == "hyperparameters");
        CHECK(diff.field_changes[0].value_a == "lr=0.001,epochs=3");
        CHECK(diff.field_changes[0].value_b == "lr=0.0005,epochs=3");

        // Symmetric up to side labels.
        const ProvDiff reverse = diff_versions(b, "ent-model-v2", ex.model_entity);
        CHECK(reverse.activities_only_a == diff.activities_only_b);
        CHECK(reverse.entities_only_b == diff.entities_only_a);
    }

    SUBCASE("disjoint lineages list both sides") {
        ProvBundle bundle;
        bundle.agents.push_back({"ag", "", ""});
        for (const char* side : {"x", "y"}) {
            const std::string raw = std::string("e-raw-") + side;
            const std::string out = std::string("e-out-") + side;
            bundle.entities.push_back({raw, EntityLayer::kData, "h", "v1", ""});
            bundle.entities.push_back({out, EntityLayer::kData, "h", "v1", ""});
            auto act = testutil::exemplar_activity(ProvEventType::kExtraction,
                                                   std::string("a-") + side, "ag");
            bundle.activities.push_back(act);
            bundle.edges.push_back({EdgeKind::kUsed, "a-" + std::string(side), raw});
            bundle.edges.push_back({EdgeKind::kWasGeneratedBy, "a-" + std::string(side), out});
        }
        const ProvDiff diff = diff_versions(bundle, "e-out-x", "e-out-y");
        CHECK(diff.activities_only_a == std::vector<std::string>{"a-x"});
        CHECK(diff.activities_only_b == std::vector<std::string>{"a-y"});
        CHECK(diff.entities_only_a == std::vector<std::string>{"e-out-x", "e-raw-x"});
        CHECK(diff.entities_only_b == std::vector<std::string>{"e-out-y", "e-raw-y"});

        CHECK_THROWS_AS(diff_versions(bundle, "e-out-x", "e-none"), ProvError);
    }
}

TEST_CASE("event schema file matches the built-in table") {
    const std::filesystem::path root = RELGATE_SOURCE_DIR;
    CHECK(testutil::read_file(root / "data/event_schema.json") == event_schema_json());
}
