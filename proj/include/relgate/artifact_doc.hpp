#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace relgate {

enum class DocKind { kDatasheet, kCard };
enum class FieldTier { kMandatory, kRecommended, kOptional };
enum class ValueKind { kText, kEnumChoice, kNumber, kReference, kBoolean };

std::string to_string(DocKind k);
std::string to_string(FieldTier t);
std::string to_string(ValueKind k);
std::optional<DocKind> doc_kind_from_string(const std::string& s);
std::optional<FieldTier> field_tier_from_string(const std::string& s);
std::optional<ValueKind> value_kind_from_string(const std::string& s);

struct FieldSpec {
    std::string section_id;
    std::string field_id;
    FieldTier tier = FieldTier::kMandatory;
    ValueKind value_kind = ValueKind::kText;
    std::vector<std::string> choices;  // for kEnumChoice; empty = any token
};

struct SchemaError : std::runtime_error {
    enum class Kind { kIo, kSyntax, kInvalid };
    Kind kind;
    SchemaError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// A versioned field schema for one document kind. Fields keep insertion
/// order; (section_id, field_id) pairs are unique.
class Schema {
public:
    Schema(DocKind kind, std::string version, std::vector<FieldSpec> fields);

    DocKind doc_kind() const { return kind_; }
    const std::string& version() const { return version_; }
    const std::vector<FieldSpec>& fields() const { return fields_; }
    const std::vector<std::string>& sections() const { return sections_; }
    /// Section display tokens used in plot data files (e.g. "deid" for
    /// "deid_privacy"); falls back to the section id.
    std::string section_short_label(const std::string& section_id) const;

    const FieldSpec* find(const std::string& section_id, const std::string& field_id) const;
    size_t mandatory_count() const;
    size_t mandatory_count_in(const std::string& section_id) const;

    /// SHA-256 over the canonical JSON form; stamps completeness reports.
    const std::string& schema_hash() const { return hash_; }

    std::string to_json() const;
    static Schema from_json_text(const std::string& text);
    static Schema from_file(const std::filesystem::path& path);

private:
    DocKind kind_;
    std::string version_;
    std::vector<FieldSpec> fields_;
    std::vector<std::string> sections_;  // first-appearance order
    std::map<std::pair<std::string, std::string>, size_t> index_;
    std::string hash_;
};

/// Built-in schemas; the copies under data/ are generated from these.
const Schema& default_datasheet_schema();
const Schema& default_card_schema();

struct FieldValue {
    // Scalar content captured as a tagged string; kind_tag records the JSON
    // type it arrived as ("string", "number", "boolean", "null").
    std::string content;
    std::string kind_tag = "string";
    std::string version_stamp;

    bool operator==(const FieldValue&) const = default;
};

struct DocWarning {
    std::string section_id;
    std::string field_id;  // empty for unknown-section warnings
    std::string message;
};

struct DocError : std::runtime_error {
    enum class Kind { kIo, kSyntax, kKindMismatch, kDocKindMismatch, kMissingHeader };
    Kind kind;
    DocError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct ArtifactDoc {
    DocKind doc_kind = DocKind::kDatasheet;
    std::string version;
    std::map<std::pair<std::string, std::string>, FieldValue> values;
    std::string checksum;  // SHA-256 of the canonicalized document
    std::vector<DocWarning> warnings;

    /// Populated = non-empty content of the schema'd kind + version stamp.
    bool populated(const FieldSpec& spec) const;

    std::string to_json() const;  // canonical form (sorted keys, compact)
};

ArtifactDoc parse_doc(const std::filesystem::path& path, const Schema& schema);
ArtifactDoc parse_doc_text(const std::string& text, const Schema& schema);

struct CompletenessReport {
    // C = populated / total over mandatory fields, exact rational.
    size_t populated = 0;
    size_t total = 0;
    double c = 0.0;
    std::string c_rendered;  // 4 decimal places
    std::vector<std::pair<std::string, std::string>> missing_mandatory;
    std::map<std::string, double> per_section;
    std::map<std::string, std::pair<size_t, size_t>> per_section_counts;
    std::string doc_checksum;
    std::string schema_hash;
};

CompletenessReport completeness(const ArtifactDoc& doc, const Schema& schema);

struct SectionGroup {
    std::string name;
    std::vector<std::string> sections;
};

struct DriftRow {
    std::string version;
    double overall_pct = 0.0;
    std::vector<double> group_pct;
    bool regression = false;  // overall decreased vs predecessor
};

struct DriftTrace {
    std::vector<std::string> group_names;
    std::vector<DriftRow> rows;

    /// Whitespace-delimited rows with header `ver overall <groups...>`;
    /// versions are rendered as 1-based indices.
    std::string to_dat() const;
};

/// Section groups matching the drift data columns `privacy` and `splits`.
std::vector<SectionGroup> default_drift_groups();

DriftTrace completeness_drift(const std::vector<ArtifactDoc>& versions, const Schema& schema,
                              const std::vector<SectionGroup>& groups);

/// `section pct` rows (completeness bar data), one row per schema section.
std::string completeness_to_dat(const CompletenessReport& report, const Schema& schema);

}  // namespace relgate
