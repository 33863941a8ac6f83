#pragma once

// Shared fixtures for the unit and acceptance suites: temp dirs, complete
// document builders, the worked-example provenance chain, and a golden
// release bundle with optional planted defects.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "relgate/agreement.hpp"
#include "relgate/artifact_doc.hpp"
#include "relgate/corpus.hpp"
#include "relgate/fixture.hpp"
#include "relgate/gate.hpp"
#include "relgate/hashing.hpp"
#include "relgate/leakage.hpp"
#include "relgate/metrics.hpp"
#include "relgate/provenance.hpp"

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        path_ = fs::temp_directory_path() /
                ("relgate_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& bytes) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << bytes;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// A document with every schema field populated with a kind-valid value and
// a version stamp.
inline std::string complete_doc_json(const relgate::Schema& schema,
                                     const std::string& version = "v1") {
    nlohmann::json j;
    j["doc_kind"] = to_string(schema.doc_kind());
    j["version"] = version;
    for (const auto& f : schema.fields()) {
        nlohmann::json value;
        switch (f.value_kind) {
            case relgate::ValueKind::kBoolean:
                value = true;
                break;
            case relgate::ValueKind::kNumber:
                value = 100000000;
                break;
            case relgate::ValueKind::kEnumChoice:
                value = f.choices.empty() ? "choice" : f.choices.front();
                break;
            default:
                value = "documented " + f.field_id;
                break;
        }
        j["sections"][f.section_id][f.field_id] = {{"content", value}, {"version_stamp", version}};
    }
    return j.dump(2) + "\n";
}

// Blank a field's content in a serialized document.
inline std::string blank_field(const std::string& doc_json, const std::string& section,
                               const std::string& field) {
    nlohmann::json j = nlohmann::json::parse(doc_json);
    j["sections"][section][field]["content"] = "";
    return j.dump(2) + "\n";
}

// Table-shaped exemplar activity: every minimal field populated.
inline relgate::ProvActivity exemplar_activity(relgate::ProvEventType type,
                                               const std::string& id,
                                               const std::string& agent_id = "ag-pipeline") {
    relgate::ProvActivity a;
    a.activity_id = id;
    a.event_type = type;
    a.timestamp = "2026-01-15T10:00:00Z";
    a.agent_id = agent_id;
    for (const auto& key : relgate::minimal_fields(type)) {
        a.fields[key] = "value-for-" + key;
    }
    return a;
}

// The worked-example lifecycle: extraction -> deidentification ->
// normalization -> {labeling, split_sampling} -> training -> evaluation ->
// release. Entities with bundle paths get real hashes from staged files.
struct WorkedExample {
    relgate::ProvBundle bundle;
    std::string eval_entity = "ent-eval-set";
    std::string model_entity = "ent-model-v1";
};

inline WorkedExample worked_example_provenance(
    const std::vector<std::pair<std::string, std::string>>& hashed_paths = {},
    const std::string& model_hyperparams = "lr=0.001,epochs=3") {
    WorkedExample ex;
    relgate::ProvBundle& b = ex.bundle;
    b.agents.push_back({"ag-pipeline", "pipeline service", "automated"});
    b.agents.push_back({"ag-steward", "data steward", "human"});

    const auto entity = [&](const std::string& id, relgate::EntityLayer layer,
                            const std::string& hash, const std::string& path = "") {
        b.entities.push_back({id, layer, hash, "v1", path});
    };
    entity("ent-raw-notes", relgate::EntityLayer::kData, relgate::sha256_hex("raw-notes-v1"));
    entity("ent-deid-notes", relgate::EntityLayer::kData, relgate::sha256_hex("deid-notes-v1"));
    entity("ent-norm-notes", relgate::EntityLayer::kData, relgate::sha256_hex("norm-notes-v1"));
    entity("ent-labels", relgate::EntityLayer::kData, relgate::sha256_hex("labels-v1"));
    entity("ent-split-manifest", relgate::EntityLayer::kData,
           relgate::sha256_hex("split-manifest-v1"));
    entity(ex.eval_entity, relgate::EntityLayer::kData, relgate::sha256_hex("eval-set-v1"));
    entity(ex.model_entity, relgate::EntityLayer::kModel, relgate::sha256_hex("model-v1"));
    entity("ent-eval-report", relgate::EntityLayer::kDocument,
           relgate::sha256_hex("eval-report-v1"));
    entity("ent-release", relgate::EntityLayer::kDocument, relgate::sha256_hex("release-v1"));
    for (const auto& [id_path, file] : hashed_paths) {
        // id derived from the bundle-relative path, hash from the real file
        entity("ent-" + fs::path(id_path).stem().string(),
               id_path.find("patterns") != std::string::npos ? relgate::EntityLayer::kCode
                                                             : relgate::EntityLayer::kDocument,
               relgate::sha256_file(file), id_path);
    }

    const auto add = [&](relgate::ProvActivity a, const std::vector<std::string>& used,
                         const std::vector<std::string>& generated) {
        for (const auto& u : used) {
            b.edges.push_back({relgate::EdgeKind::kUsed, a.activity_id, u});
        }
        for (const auto& g : generated) {
            b.edges.push_back({relgate::EdgeKind::kWasGeneratedBy, a.activity_id, g});
        }
        b.activities.push_back(std::move(a));
    };

    add(exemplar_activity(relgate::ProvEventType::kExtraction, "act-1-extract"), {},
        {"ent-raw-notes"});
    add(exemplar_activity(relgate::ProvEventType::kDeidentification, "act-2-deid"),
        {"ent-raw-notes"}, {"ent-deid-notes"});
    add(exemplar_activity(relgate::ProvEventType::kNormalization, "act-3-normalize"),
        {"ent-deid-notes"}, {"ent-norm-notes"});
    add(exemplar_activity(relgate::ProvEventType::kLabeling, "act-4-label", "ag-steward"),
        {"ent-norm-notes"}, {"ent-labels"});
    add(exemplar_activity(relgate::ProvEventType::kSplitSampling, "act-5-split"),
        {"ent-norm-notes"}, {"ent-split-manifest", ex.eval_entity});
    {
        auto train = exemplar_activity(relgate::ProvEventType::kTrainingRun, "act-6-train");
        train.fields["hyperparameters"] = model_hyperparams;
        add(std::move(train), {"ent-norm-notes", "ent-split-manifest", "ent-labels"},
            {ex.model_entity});
    }
    add(exemplar_activity(relgate::ProvEventType::kEvaluationRun, "act-7-evaluate"),
        {ex.model_entity, ex.eval_entity}, {"ent-eval-report"});
    add(exemplar_activity(relgate::ProvEventType::kRelease, "act-8-release"),
        {ex.model_entity, "ent-eval-report"}, {"ent-release"});
    return ex;
}

// ---------------------------------------------------------------------------
// Golden bundle builder
// ---------------------------------------------------------------------------

struct BundleDefects {
    bool blank_mandatory_field = false;   // blanks motivation.primary_clinical_tasks
    bool patient_overlap_split = false;   // note-keyed split with a cross-split patient
    bool over_ceiling_leakage = false;    // planted duplicates above the 0.85 ceiling
    bool drop_agreement_record = false;   // labeling activity without agreement stats
    bool blank_drift_plan = false;        // blanks maintenance.drift_monitoring
};

// Builds staged inputs in work_dir and assembles the bundle at bundle_root.
inline void build_bundle(const fs::path& work_dir, const fs::path& bundle_root,
                         const BundleDefects& defects = {}) {
    using namespace relgate;
    fs::create_directories(work_dir / "metrics");
    fs::create_directories(work_dir / "provenance");

    FixtureKnobs knobs;
    knobs.phi_risk1_frac = 0.05;
    knobs.years = 3;
    if (defects.over_ceiling_leakage) knobs.duplicate_across_splits = 5;
    if (defects.patient_overlap_split) knobs.split_key = SplitKey::kNote;
    auto [corpus, split] = make_fixture(60, 3, 11, knobs);
    if (defects.patient_overlap_split) {
        // Force one patient's notes across train and test.
        const Note& first = corpus.notes().front();
        auto patient_notes = corpus.notes_of_patient(first.patient_id);
        split.assignment[patient_notes.front()->note_id] = Split::kTrain;
        split.assignment[patient_notes.back()->note_id] = Split::kTest;
    }

    // Documents.
    std::string datasheet = complete_doc_json(default_datasheet_schema());
    std::string card = complete_doc_json(default_card_schema());
    if (defects.blank_mandatory_field) {
        datasheet = blank_field(datasheet, "motivation", "primary_clinical_tasks");
    }
    if (defects.blank_drift_plan) {
        datasheet = blank_field(datasheet, "maintenance", "drift_monitoring");
    }
    write_file(work_dir / "datasheet.json", datasheet);
    write_file(work_dir / "card.json", card);

    // Metric records.
    const PatternSet patterns = PatternSet::defaults();
    write_file(work_dir / "metrics/phi_patterns.json", patterns.to_json());

    SimilarityConfig sim;
    const LeakageAuditRecord audit =
        audit_splits(corpus, split, sim, {true, "templated headers reviewed"},
                     {true, "no eval reuse in tuning"});
    write_file(work_dir / "metrics/leakage.json",
               nlohmann::json::parse(audit.to_json()).dump(2) + "\n");

    const PhiRiskResult risk = phi_risk_scan(corpus, patterns, 3, 25, 11);
    nlohmann::json jr;
    jr["corpus_hash"] = corpus.content_hash();
    jr["patterns_hash"] = risk.patterns_hash;
    jr["mean_proxy"] = risk.mean_proxy;
    jr["frac_high_risk"] = risk.frac_high_risk;
    jr["threshold"] = risk.threshold;
    jr["histogram"] = risk.histogram;
    jr["sampling_plan"] = {{"sample_size", risk.sampling_plan.sample_size},
                           {"seed", risk.sampling_plan.seed},
                           {"note_ids", risk.sampling_plan.note_ids}};
    write_file(work_dir / "metrics/phi_risk.json", jr.dump(2) + "\n");

    if (!defects.drop_agreement_record) {
        std::vector<std::string> a, b;
        std::mt19937_64 rng(3);
        for (int i = 0; i < 200; ++i) {
            const std::string label = "c" + std::to_string(rng() % 3);
            a.push_back(label);
            b.push_back(rng() % 10 < 8 ? label : "c" + std::to_string(rng() % 3));
        }
        BootstrapConfig bootstrap;
        bootstrap.seed = 3;
        const AgreementResult kappa = cohen_kappa(a, b, bootstrap);
        nlohmann::json res;
        res["statistic"] = to_string(kappa.statistic);
        res["value"] = kappa.value;
        res["ci_low"] = kappa.ci_low;
        res["ci_high"] = kappa.ci_high;
        res["n_items"] = kappa.n_items;
        res["n_raters"] = kappa.n_raters;
        res["bootstrap_replicates"] = kappa.bootstrap_replicates;
        res["seed"] = kappa.seed;
        nlohmann::json ja;
        ja["results"] = nlohmann::json::array({res});
        write_file(work_dir / "metrics/agreement.json", ja.dump(2) + "\n");
    }

    // Recorded completeness for continuous verification.
    {
        const Schema& ds = default_datasheet_schema();
        const Schema& cs = default_card_schema();
        const CompletenessReport dr = completeness(parse_doc_text(datasheet, ds), ds);
        const CompletenessReport cr = completeness(parse_doc_text(card, cs), cs);
        nlohmann::json j;
        for (const auto& [label, rep] : {std::pair{"datasheet", &dr}, std::pair{"card", &cr}}) {
            j[label] = {{"c", rep->c},
                        {"c_rendered", rep->c_rendered},
                        {"populated", rep->populated},
                        {"total", rep->total},
                        {"doc_checksum", rep->doc_checksum},
                        {"schema_hash", rep->schema_hash}};
        }
        write_file(work_dir / "metrics/completeness.json", j.dump(2) + "\n");
    }

    const PsiTrace trace =
        psi_trace(corpus, DriftFeature::kIcdHistogram, "2010", {"2010", "2011", "2012"});
    nlohmann::json jd;
    jd["feature"] = to_string(trace.feature);
    jd["baseline"] = trace.baseline_period;
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : trace.points) points.push_back({{"period", p.period}, {"psi", p.psi}});
    jd["points"] = points;
    jd["baseline_histogram"] = trace.baseline_histogram;
    jd["period_histograms"] = trace.period_histograms;
    write_file(work_dir / "metrics/drift.json", jd.dump(2) + "\n");

    // Provenance referencing the staged files by bundle-relative path.
    WorkedExample ex = worked_example_provenance(
        {{"datasheet/datasheet.json", (work_dir / "datasheet.json").string()},
         {"model_card/card.json", (work_dir / "card.json").string()},
         {"metrics/phi_patterns.json", (work_dir / "metrics/phi_patterns.json").string()},
         {"metrics/leakage.json", (work_dir / "metrics/leakage.json").string()}});
    // Embed the audit in the split_sampling activity per the audit contract.
    for (auto& act : ex.bundle.activities) {
        if (act.event_type == ProvEventType::kSplitSampling) {
            const ProvActivity logged = leakage_provenance_activity(
                audit, act.activity_id, act.agent_id, act.timestamp);
            act.fields = logged.fields;
        }
    }
    ex.bundle.write(work_dir / "provenance");

    assemble_bundle({work_dir / "datasheet.json", work_dir / "card.json",
                     work_dir / "provenance", work_dir / "metrics"},
                    bundle_root);
}

}  // namespace testutil
