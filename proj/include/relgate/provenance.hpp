#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace relgate {

enum class EntityLayer { kData, kCode, kModel, kDocument };

enum class ProvEventType {
    kExtraction,
    kDeidentification,
    kNormalization,
    kLabeling,
    kSplitSampling,
    kTrainingRun,
    kEvaluationRun,
    kRelease,
};

constexpr int kNumProvEventTypes = 8;

std::string to_string(EntityLayer l);
std::string to_string(ProvEventType t);
std::optional<EntityLayer> entity_layer_from_string(const std::string& s);
std::optional<ProvEventType> prov_event_type_from_string(const std::string& s);

/// Minimal field keys required for an event type's activity record.
const std::vector<std::string>& minimal_fields(ProvEventType t);
/// Machine-readable form of the whole event schema.
std::string event_schema_json();

struct ProvEntity {
    std::string entity_id;
    EntityLayer layer = EntityLayer::kData;
    std::string hash;
    std::string version_label;
    /// Optional path of the released artifact, relative to the artifact
    /// root; entity_id is used as a fallback location when empty.
    std::string path;
};

struct ProvActivity {
    std::string activity_id;
    ProvEventType event_type = ProvEventType::kExtraction;
    std::string timestamp;
    std::map<std::string, std::string> fields;
    std::string agent_id;
};

struct ProvAgent {
    std::string agent_id;
    std::string name;
    std::string role;
};

enum class EdgeKind { kUsed, kWasGeneratedBy };

struct ProvEdge {
    EdgeKind kind = EdgeKind::kUsed;
    std::string activity_id;
    std::string entity_id;
};

struct BundleIssue {
    enum class Kind {
        kUnparseableFile,
        kDuplicateId,
        kDanglingEdge,
        kMultipleGenerators,
        kMissingMinimalField,
        kBadTimestamp,
        kMissingAgent,
        kEmptyHash,
        kCycle,
    };
    Kind kind;
    std::string message;
};

std::string to_string(BundleIssue::Kind k);

struct ProvError : std::runtime_error {
    enum class Kind { kIo, kUnknownEntity };
    Kind kind;
    ProvError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

class ProvBundle {
public:
    ProvBundle() = default;

    std::vector<ProvEntity> entities;
    std::vector<ProvActivity> activities;
    std::vector<ProvAgent> agents;
    std::vector<ProvEdge> edges;
    std::map<std::string, std::string> bundle_checksums;  // file -> hash

    const ProvEntity* find_entity(const std::string& id) const;
    const ProvActivity* find_activity(const std::string& id) const;
    const ProvAgent* find_agent(const std::string& id) const;

    /// Generating activity of an entity (single-generator rule), if any.
    const ProvActivity* generator_of(const std::string& entity_id) const;
    /// Entities used by an activity, sorted by entity_id.
    std::vector<const ProvEntity*> used_by(const std::string& activity_id) const;
    /// Entities generated by an activity, sorted by entity_id.
    std::vector<const ProvEntity*> generated_by(const std::string& activity_id) const;

    /// Structural validation: minimal fields, edge integrity, single
    /// generators, agents, timestamps, acyclicity. Collects, never throws.
    std::vector<BundleIssue> validate() const;

    void write(const std::filesystem::path& dir) const;
};

struct BundleLoad {
    ProvBundle bundle;
    std::vector<BundleIssue> issues;  // parse issues + validate() findings
};

/// Reads entities.json / activities.json / agents.json / edges.json /
/// checksums.json from a bundle directory. Never fail-fast: every problem
/// is collected as an issue.
BundleLoad load_bundle(const std::filesystem::path& dir);

/// Validates one activity record against its event type's minimal fields.
std::vector<BundleIssue> validate_activity(const ProvActivity& activity);

/// Accepts ISO-8601 dates and date-times ("2026-01-15", "2026-01-15T10:00:00Z").
bool timestamp_parseable(const std::string& ts);

enum class HashStatus { kMatch, kMismatch, kAbsent, kUnreadable };

struct EntityHashResult {
    std::string entity_id;
    HashStatus status = HashStatus::kAbsent;
    std::string expected;
    std::string computed;  // empty unless a file was hashed
    std::string file;      // resolved path relative to artifact root
};

struct IntegrityReport {
    std::vector<EntityHashResult> entities;  // sorted by entity_id
    bool all_match_or_absent() const;
    size_t count(HashStatus s) const;
};

/// Hashes each entity's released file under artifact_root and compares with
/// the recorded hash. Absent files are reported, not fatal. Parallel over
/// entities with a deterministic report order.
IntegrityReport verify_hashes(const ProvBundle& bundle, const std::filesystem::path& artifact_root);

struct LineageStep {
    const ProvActivity* activity = nullptr;
    const ProvAgent* agent = nullptr;
    std::vector<const ProvEntity*> used;
    std::vector<const ProvEntity*> generated;
};

struct LineageTree {
    const ProvEntity* root = nullptr;
    /// Ancestor activities in topological order (farthest ancestor first),
    /// ties broken by activity_id.
    std::vector<LineageStep> steps;
    /// All ancestor entities (excluding the root), sorted by entity_id.
    std::vector<const ProvEntity*> ancestor_entities;
};

LineageTree lineage(const ProvBundle& bundle, const std::string& entity_id);

struct FieldChange {
    std::string activity_a;
    std::string activity_b;
    ProvEventType event_type;
    std::string field_key;
    std::string value_a;
    std::string value_b;
};

struct ProvDiff {
    std::vector<std::string> activities_only_a;
    std::vector<std::string> activities_only_b;
    std::vector<std::string> entities_only_a;
    std::vector<std::string> entities_only_b;
    /// Changed minimal-field values between activities of the same event
    /// type that appear exactly once on each exclusive side.
    std::vector<FieldChange> field_changes;

    bool empty() const {
        return activities_only_a.empty() && activities_only_b.empty() &&
               entities_only_a.empty() && entities_only_b.empty() && field_changes.empty();
    }
};

ProvDiff diff_versions(const ProvBundle& bundle, const std::string& entity_a,
                       const std::string& entity_b);

}  // namespace relgate
