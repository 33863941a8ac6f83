#include "relgate/artifact_doc.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "relgate/hashing.hpp"

using nlohmann::json;

namespace relgate {

std::string to_string(DocKind k) { return k == DocKind::kDatasheet ? "datasheet" : "card"; }

std::string to_string(FieldTier t) {
    switch (t) {
        case FieldTier::kMandatory: return "mandatory";
        case FieldTier::kRecommended: return "recommended";
        case FieldTier::kOptional: return "optional";
    }
    return "mandatory";
}

std::string to_string(ValueKind k) {
    switch (k) {
        case ValueKind::kText: return "text";
        case ValueKind::kEnumChoice: return "enum_choice";
        case ValueKind::kNumber: return "number";
        case ValueKind::kReference: return "reference";
        case ValueKind::kBoolean: return "boolean";
    }
    return "text";
}

std::optional<DocKind> doc_kind_from_string(const std::string& s) {
    if (s == "datasheet") return DocKind::kDatasheet;
    if (s == "card") return DocKind::kCard;
    return std::nullopt;
}

std::optional<FieldTier> field_tier_from_string(const std::string& s) {
    if (s == "mandatory") return FieldTier::kMandatory;
    if (s == "recommended") return FieldTier::kRecommended;
    if (s == "optional") return FieldTier::kOptional;
    return std::nullopt;
}

std::optional<ValueKind> value_kind_from_string(const std::string& s) {
    if (s == "text") return ValueKind::kText;
    if (s == "enum_choice") return ValueKind::kEnumChoice;
    if (s == "number") return ValueKind::kNumber;
    if (s == "reference") return ValueKind::kReference;
    if (s == "boolean") return ValueKind::kBoolean;
    return std::nullopt;
}

namespace {

bool parses_as_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

std::string pct2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

Schema::Schema(DocKind kind, std::string version, std::vector<FieldSpec> fields)
    : kind_(kind), version_(std::move(version)), fields_(std::move(fields)) {
    std::set<std::string> seen_sections;
    for (size_t i = 0; i < fields_.size(); ++i) {
        const auto& f = fields_[i];
        auto key = std::make_pair(f.section_id, f.field_id);
        if (!index_.emplace(key, i).second) {
            throw SchemaError(SchemaError::Kind::kInvalid,
                              "duplicate field " + f.section_id + "." + f.field_id);
        }
        if (seen_sections.insert(f.section_id).second) {
            sections_.push_back(f.section_id);
        }
    }
    for (const auto& s : sections_) {
        if (mandatory_count_in(s) == 0) {
            throw SchemaError(SchemaError::Kind::kInvalid,
                              "section '" + s + "' has no mandatory field");
        }
    }
    hash_ = sha256_hex(to_json());
}

std::string Schema::section_short_label(const std::string& section_id) const {
    if (section_id == "deid_privacy") return "deid";
    if (section_id == "missingness_quality") return "missingness";
    if (section_id == "splits_leakage") return "splits";
    return section_id;
}

const FieldSpec* Schema::find(const std::string& section_id, const std::string& field_id) const {
    auto it = index_.find({section_id, field_id});
    return it == index_.end() ? nullptr : &fields_[it->second];
}

size_t Schema::mandatory_count() const {
    size_t n = 0;
    for (const auto& f : fields_) {
        if (f.tier == FieldTier::kMandatory) ++n;
    }
    return n;
}

size_t Schema::mandatory_count_in(const std::string& section_id) const {
    size_t n = 0;
    for (const auto& f : fields_) {
        if (f.section_id == section_id && f.tier == FieldTier::kMandatory) ++n;
    }
    return n;
}

std::string Schema::to_json() const {
    json j;
    j["doc_kind"] = to_string(kind_);
    j["schema_version"] = version_;
    json fields = json::array();
    for (const auto& f : fields_) {
        json jf;
        jf["section_id"] = f.section_id;
        jf["field_id"] = f.field_id;
        jf["tier"] = to_string(f.tier);
        jf["value_kind"] = to_string(f.value_kind);
        if (!f.choices.empty()) jf["choices"] = f.choices;
        fields.push_back(jf);
    }
    j["fields"] = fields;
    return j.dump(2) + "\n";
}

Schema Schema::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(SchemaError::Kind::kSyntax, e.what());
    }
    auto kind = doc_kind_from_string(j.value("doc_kind", ""));
    if (!kind) throw SchemaError(SchemaError::Kind::kInvalid, "schema: bad doc_kind");
    std::vector<FieldSpec> fields;
    for (const auto& jf : j.at("fields")) {
        FieldSpec f;
        f.section_id = jf.at("section_id").get<std::string>();
        f.field_id = jf.at("field_id").get<std::string>();
        auto tier = field_tier_from_string(jf.at("tier").get<std::string>());
        auto vk = value_kind_from_string(jf.at("value_kind").get<std::string>());
        if (!tier || !vk) {
            throw SchemaError(SchemaError::Kind::kInvalid,
                              "schema: bad tier/value_kind for " + f.section_id + "." + f.field_id);
        }
        f.tier = *tier;
        f.value_kind = *vk;
        if (jf.contains("choices")) f.choices = jf["choices"].get<std::vector<std::string>>();
        fields.push_back(std::move(f));
    }
    return Schema(*kind, j.value("schema_version", "1"), std::move(fields));
}

Schema Schema::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(SchemaError::Kind::kIo, "cannot open schema " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

namespace {

FieldSpec mand(std::string sec, std::string field, ValueKind vk = ValueKind::kText,
               std::vector<std::string> choices = {}) {
    return FieldSpec{std::move(sec), std::move(field), FieldTier::kMandatory, vk,
                     std::move(choices)};
}

FieldSpec rec(std::string sec, std::string field, ValueKind vk = ValueKind::kText) {
    return FieldSpec{std::move(sec), std::move(field), FieldTier::kRecommended, vk, {}};
}

Schema build_datasheet_schema() {
    std::vector<FieldSpec> f;
    f.push_back(mand("motivation", "primary_clinical_tasks"));
    f.push_back(mand("motivation", "target_setting"));
    f.push_back(mand("motivation", "known_non_goals"));
    f.push_back(mand("motivation", "clinical_advice_disclaimer", ValueKind::kBoolean));
    f.push_back(mand("composition", "data_sources"));
    f.push_back(mand("composition", "time_span"));
    f.push_back(mand("composition", "unit_of_analysis", ValueKind::kEnumChoice,
                     {"note", "encounter", "patient"}));
    f.push_back(mand("composition", "population_coverage"));
    f.push_back(mand("composition", "language"));
    f.push_back(mand("composition", "note_types"));
    f.push_back(mand("collection", "extraction_queries"));
    f.push_back(mand("collection", "inclusion_exclusion_criteria"));
    f.push_back(mand("collection", "deduplication"));
    f.push_back(mand("collection", "text_normalization_steps"));
    f.push_back(mand("deid_privacy", "deid_method"));
    f.push_back(mand("deid_privacy", "phi_residual_risk_assumptions"));
    f.push_back(mand("deid_privacy", "manual_review_protocol"));
    f.push_back(mand("deid_privacy", "privacy_threat_model"));
    f.push_back(mand("deid_privacy", "access_controls"));
    f.push_back(mand("labeling", "label_definitions"));
    f.push_back(mand("labeling", "coding_systems"));
    f.push_back(mand("labeling", "annotation_instructions"));
    f.push_back(mand("labeling", "adjudication"));
    f.push_back(mand("labeling", "inter_annotator_agreement", ValueKind::kReference));
    f.push_back(mand("missingness_quality", "field_missingness", ValueKind::kReference));
    f.push_back(mand("missingness_quality", "documentation_bias"));
    f.push_back(mand("missingness_quality", "outliers"));
    f.push_back(mand("missingness_quality", "noise_sources"));
    f.push_back(mand("splits_leakage", "split_strategy"));
    f.push_back(mand("splits_leakage", "patient_level_splitting", ValueKind::kBoolean));
    f.push_back(mand("splits_leakage", "leakage_audit", ValueKind::kReference));
    f.push_back(mand("splits_leakage", "contamination_checks"));
    f.push_back(mand("maintenance", "versioning_policy"));
    f.push_back(mand("maintenance", "drift_monitoring"));
    f.push_back(mand("maintenance", "deprecation"));
    f.push_back(mand("maintenance", "audit_log_retention"));
    f.push_back(rec("composition", "care_settings"));
    f.push_back(rec("composition", "demographic_availability"));
    f.push_back(rec("labeling", "annotator_training"));
    f.push_back(rec("missingness_quality", "sensitivity_analysis_plan"));
    return Schema(DocKind::kDatasheet, "1", std::move(f));
}

Schema build_card_schema() {
    std::vector<FieldSpec> f;
    f.push_back(mand("overview", "architecture_family"));
    f.push_back(mand("overview", "training_objective"));
    f.push_back(mand("overview", "parameter_count", ValueKind::kNumber));
    f.push_back(mand("overview", "compute"));
    f.push_back(mand("overview", "release_date"));
    f.push_back(mand("intended_use", "target_workflow"));
    f.push_back(mand("intended_use", "user_role_assumptions"));
    f.push_back(mand("intended_use", "decision_boundaries"));
    f.push_back(mand("intended_use", "contraindicated_uses"));
    f.push_back(mand("training_data", "linked_datasheets", ValueKind::kReference));
    f.push_back(mand("training_data", "preprocessing_hashes", ValueKind::kReference));
    f.push_back(mand("training_data", "filtering_criteria"));
    f.push_back(mand("evaluation", "benchmarks"));
    f.push_back(mand("evaluation", "subgroup_slices"));
    f.push_back(mand("evaluation", "calibration"));
    f.push_back(mand("evaluation", "robustness_tests"));
    f.push_back(mand("evaluation", "statistical_uncertainty"));
    f.push_back(mand("limitations", "known_error_modes"));
    f.push_back(mand("limitations", "out_of_distribution_behaviors"));
    f.push_back(mand("limitations", "documentation_caveats"));
    f.push_back(mand("governance", "monitoring_metrics"));
    f.push_back(mand("governance", "update_triggers"));
    f.push_back(mand("governance", "rollback_plan"));
    f.push_back(mand("governance", "human_oversight_requirements"));
    f.push_back(mand("ethics_safety", "bias_analysis"));
    f.push_back(mand("ethics_safety", "privacy_risks"));
    f.push_back(mand("ethics_safety", "harm_mitigation"));
    f.push_back(mand("ethics_safety", "escalation_paths"));
    f.push_back(rec("evaluation", "error_audit"));
    f.push_back(rec("governance", "update_policy"));
    return Schema(DocKind::kCard, "1", std::move(f));
}

}  // namespace

const Schema& default_datasheet_schema() {
    static const Schema schema = build_datasheet_schema();
    return schema;
}

const Schema& default_card_schema() {
    static const Schema schema = build_card_schema();
    return schema;
}

bool ArtifactDoc::populated(const FieldSpec& spec) const {
    auto it = values.find({spec.section_id, spec.field_id});
    if (it == values.end()) return false;
    const FieldValue& v = it->second;
    if (v.content.empty() || v.version_stamp.empty()) return false;
    switch (spec.value_kind) {
        case ValueKind::kText:
        case ValueKind::kReference:
            return v.kind_tag == "string";
        case ValueKind::kNumber:
            return v.kind_tag == "number" || parses_as_number(v.content);
        case ValueKind::kBoolean:
            return v.kind_tag == "boolean" || v.content == "true" || v.content == "false";
        case ValueKind::kEnumChoice:
            if (spec.choices.empty()) return true;
            for (const auto& c : spec.choices) {
                if (c == v.content) return true;
            }
            return false;
    }
    return false;
}

std::string ArtifactDoc::to_json() const {
    json j;
    j["doc_kind"] = to_string(doc_kind);
    j["version"] = version;
    json sections = json::object();
    for (const auto& [key, value] : values) {
        json jv;
        jv["content"] = value.content;
        jv["kind_tag"] = value.kind_tag;
        jv["version_stamp"] = value.version_stamp;
        sections[key.first][key.second] = jv;
    }
    j["sections"] = sections;
    return j.dump();
}

namespace {

// Scalar -> (content, kind_tag). Arrays/objects are rejected by the caller.
std::pair<std::string, std::string> scalar_content(const json& v) {
    if (v.is_null()) return {"", "null"};
    if (v.is_boolean()) return {v.get<bool>() ? "true" : "false", "boolean"};
    if (v.is_number()) return {v.dump(), "number"};
    return {v.get<std::string>(), "string"};
}

void check_kind(const FieldSpec& spec, const FieldValue& v) {
    if (v.content.empty()) return;
    const std::string where = spec.section_id + "." + spec.field_id;
    switch (spec.value_kind) {
        case ValueKind::kText:
        case ValueKind::kReference:
            if (v.kind_tag != "string") {
                throw DocError(DocError::Kind::kKindMismatch,
                               "field " + where + ": expected text, got " + v.kind_tag);
            }
            break;
        case ValueKind::kNumber:
            if (v.kind_tag != "number" && !parses_as_number(v.content)) {
                throw DocError(DocError::Kind::kKindMismatch,
                               "field " + where + ": expected number, got '" + v.content + "'");
            }
            break;
        case ValueKind::kBoolean:
            if (v.kind_tag != "boolean" && v.content != "true" && v.content != "false") {
                throw DocError(DocError::Kind::kKindMismatch,
                               "field " + where + ": expected boolean, got '" + v.content + "'");
            }
            break;
        case ValueKind::kEnumChoice: {
            if (spec.choices.empty()) break;
            for (const auto& c : spec.choices) {
                if (c == v.content) return;
            }
            throw DocError(DocError::Kind::kKindMismatch,
                           "field " + where + ": '" + v.content + "' is not an allowed choice");
        }
    }
}

}  // namespace

ArtifactDoc parse_doc_text(const std::string& text, const Schema& schema) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DocError(DocError::Kind::kSyntax, e.what());
    }
    if (!j.is_object() || !j.contains("doc_kind") || !j.contains("version")) {
        throw DocError(DocError::Kind::kMissingHeader,
                       "document must have top-level doc_kind and version");
    }
    auto kind = doc_kind_from_string(j["doc_kind"].get<std::string>());
    if (!kind || *kind != schema.doc_kind()) {
        throw DocError(DocError::Kind::kDocKindMismatch,
                       "document doc_kind does not match schema (" +
                           to_string(schema.doc_kind()) + ")");
    }

    ArtifactDoc doc;
    doc.doc_kind = *kind;
    doc.version = j["version"].get<std::string>();
    if (j.contains("sections")) {
        for (const auto& [section_id, fields] : j["sections"].items()) {
            bool known_section = false;
            for (const auto& s : schema.sections()) {
                if (s == section_id) {
                    known_section = true;
                    break;
                }
            }
            if (!known_section) {
                doc.warnings.push_back(
                    {section_id, "", "unknown section '" + section_id + "'"});
            }
            for (const auto& [field_id, jv] : fields.items()) {
                FieldValue value;
                try {
                    const json& content = jv.contains("content") ? jv["content"] : json(nullptr);
                    if (content.is_array() || content.is_object()) {
                        throw DocError(DocError::Kind::kKindMismatch,
                                       "field " + section_id + "." + field_id +
                                           ": content must be a scalar");
                    }
                    auto [text_value, tag] = scalar_content(content);
                    value.content = std::move(text_value);
                    value.kind_tag = tag;
                    if (jv.contains("version_stamp") && jv["version_stamp"].is_string()) {
                        value.version_stamp = jv["version_stamp"].get<std::string>();
                    }
                } catch (const json::exception& e) {
                    throw DocError(DocError::Kind::kSyntax,
                                   "field " + section_id + "." + field_id + ": " + e.what());
                }
                const FieldSpec* spec = schema.find(section_id, field_id);
                if (spec) {
                    check_kind(*spec, value);
                } else if (known_section) {
                    doc.warnings.push_back({section_id, field_id,
                                            "unknown field '" + section_id + "." + field_id + "'"});
                }
                doc.values[{section_id, field_id}] = std::move(value);
            }
        }
    }
    doc.checksum = sha256_hex(doc.to_json());
    return doc;
}

ArtifactDoc parse_doc(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw DocError(DocError::Kind::kIo, "cannot open document " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_doc_text(ss.str(), schema);
}

CompletenessReport completeness(const ArtifactDoc& doc, const Schema& schema) {
    CompletenessReport report;
    std::map<std::string, std::pair<size_t, size_t>> section_counts;  // populated, total
    for (const FieldSpec& f : schema.fields()) {
        if (f.tier != FieldTier::kMandatory) continue;
        ++report.total;
        auto& [pop, tot] = section_counts[f.section_id];
        ++tot;
        if (doc.populated(f)) {
            ++report.populated;
            ++pop;
        } else {
            report.missing_mandatory.emplace_back(f.section_id, f.field_id);
        }
    }
    report.c = report.total == 0
                   ? 1.0
                   : static_cast<double>(report.populated) / static_cast<double>(report.total);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", report.c);
    report.c_rendered = buf;
    for (const auto& [sec, counts] : section_counts) {
        report.per_section_counts[sec] = counts;
        report.per_section[sec] =
            counts.second == 0
                ? 1.0
                : static_cast<double>(counts.first) / static_cast<double>(counts.second);
    }
    report.doc_checksum = doc.checksum;
    report.schema_hash = schema.schema_hash();
    return report;
}

std::vector<SectionGroup> default_drift_groups() {
    return {{"privacy", {"deid_privacy"}}, {"splits", {"splits_leakage"}}};
}

DriftTrace completeness_drift(const std::vector<ArtifactDoc>& versions, const Schema& schema,
                              const std::vector<SectionGroup>& groups) {
    DriftTrace trace;
    for (const auto& g : groups) trace.group_names.push_back(g.name);
    double prev_overall = -1.0;
    for (const ArtifactDoc& doc : versions) {
        CompletenessReport report = completeness(doc, schema);
        DriftRow row;
        row.version = doc.version;
        row.overall_pct = 100.0 * report.c;
        for (const auto& g : groups) {
            size_t pop = 0, tot = 0;
            for (const auto& sec : g.sections) {
                auto it = report.per_section_counts.find(sec);
                if (it != report.per_section_counts.end()) {
                    pop += it->second.first;
                    tot += it->second.second;
                }
            }
            row.group_pct.push_back(tot == 0 ? 100.0
                                             : 100.0 * static_cast<double>(pop) /
                                                   static_cast<double>(tot));
        }
        row.regression = prev_overall >= 0.0 && row.overall_pct < prev_overall;
        prev_overall = row.overall_pct;
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

std::string DriftTrace::to_dat() const {
    std::ostringstream out;
    out << "ver overall";
    for (const auto& g : group_names) out << ' ' << g;
    out << '\n';
    for (size_t i = 0; i < rows.size(); ++i) {
        out << (i + 1) << ' ' << pct2(rows[i].overall_pct);
        for (double g : rows[i].group_pct) out << ' ' << pct2(g);
        out << '\n';
    }
    return out.str();
}

std::string completeness_to_dat(const CompletenessReport& report, const Schema& schema) {
    std::ostringstream out;
    out << "section pct\n";
    for (const auto& sec : schema.sections()) {
        auto it = report.per_section.find(sec);
        const double pct = it == report.per_section.end() ? 100.0 : 100.0 * it->second;
        out << schema.section_short_label(sec) << ' ' << pct2(pct) << '\n';
    }
    return out.str();
}

}  // namespace relgate
