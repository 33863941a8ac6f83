#include "relgate/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "relgate/artifact_doc.hpp"
#include "relgate/corpus.hpp"
#include "relgate/fixture.hpp"
#include "relgate/gate.hpp"
#include "relgate/agreement.hpp"
#include "relgate/hashing.hpp"
#include "relgate/leakage.hpp"
#include "relgate/metrics.hpp"
#include "relgate/provenance.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace relgate {

namespace {

constexpr const char* kOutEnvVar = "RELGATE_OUT";

fs::path resolve_out_dir(const std::string& out_flag) {
    if (!out_flag.empty()) return out_flag;
    if (const char* env = std::getenv(kOutEnvVar)) return env;
    return "relgate_out";
}

void write_text(const fs::path& path, const std::string& bytes) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << bytes;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

json completeness_to_json(const CompletenessReport& r) {
    json j;
    j["c"] = r.c;
    j["c_rendered"] = r.c_rendered;
    j["populated"] = r.populated;
    j["total"] = r.total;
    json missing = json::array();
    for (const auto& [sec, field] : r.missing_mandatory) missing.push_back(sec + "." + field);
    j["missing_mandatory"] = missing;
    j["per_section"] = r.per_section;
    j["doc_checksum"] = r.doc_checksum;
    j["schema_hash"] = r.schema_hash;
    return j;
}

json agreement_to_json(const AgreementResult& r) {
    json j;
    j["statistic"] = to_string(r.statistic);
    j["value"] = r.value;
    j["p_observed"] = r.p_observed;
    j["p_expected"] = r.p_expected;
    j["ci_low"] = r.ci_low;
    j["ci_high"] = r.ci_high;
    j["n_items"] = r.n_items;
    j["n_raters"] = r.n_raters;
    j["bootstrap_replicates"] = r.bootstrap_replicates;
    j["seed"] = r.seed;
    return j;
}

struct CommonFlags {
    std::string out;
    std::string format = "json";
    uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("-o,--out", flags.out, "output directory (default: $RELGATE_OUT or relgate_out)");
    cmd->add_option("--format", flags.format, "output format: text, json or dat")
        ->check(CLI::IsMember({"text", "json", "dat"}));
    cmd->add_option("--seed", flags.seed, "seed for any randomized step");
}

int run_validate(const std::string& datasheet, const std::string& card,
                 const std::string& schema_path, const std::string& drift_versions,
                 bool require_complete, const CommonFlags& flags) {
    const fs::path out = resolve_out_dir(flags.out);
    json record;
    bool any_error = false;
    bool incomplete = false;

    const auto handle = [&](const std::string& label, const fs::path& path, const Schema& schema) {
        try {
            const ArtifactDoc doc = parse_doc(path, schema);
            const CompletenessReport rep = completeness(doc, schema);
            record[label] = completeness_to_json(rep);
            for (const auto& w : doc.warnings) {
                std::cout << "warning: " << label << ": " << w.message << '\n';
            }
            std::cout << label << ": completeness " << rep.c_rendered << " (" << rep.populated
                      << "/" << rep.total << " mandatory)\n";
            if (rep.c < 1.0) incomplete = true;
            if (flags.format == "dat") {
                write_text(out / (label + "_completeness.dat"), completeness_to_dat(rep, schema));
            }
        } catch (const DocError& e) {
            any_error = true;
            std::cerr << "error: " << label << ": " << e.what() << '\n';
        }
    };

    if (!datasheet.empty()) {
        Schema schema = schema_path.empty() ? default_datasheet_schema()
                                            : Schema::from_file(schema_path);
        handle("datasheet", datasheet, schema);
    }
    if (!card.empty()) {
        Schema schema =
            schema_path.empty() ? default_card_schema() : Schema::from_file(schema_path);
        handle("card", card, schema);
    }

    if (!drift_versions.empty()) {
        const Schema& schema = default_datasheet_schema();
        std::vector<ArtifactDoc> docs;
        for (const auto& f : split_csv(drift_versions)) docs.push_back(parse_doc(f, schema));
        const DriftTrace trace = completeness_drift(docs, schema, default_drift_groups());
        write_text(out / "doc_drift.dat", trace.to_dat());
        json rows = json::array();
        for (const auto& row : trace.rows) {
            rows.push_back({{"version", row.version},
                            {"overall_pct", row.overall_pct},
                            {"group_pct", row.group_pct},
                            {"regression", row.regression}});
        }
        record["drift"] = rows;
        for (const auto& row : trace.rows) {
            if (row.regression) {
                std::cout << "regression: version " << row.version
                          << " decreased overall completeness\n";
            }
        }
    }

    if (!record.is_null()) write_text(out / "completeness.json", record.dump(2) + "\n");
    if (any_error) return 1;
    if (require_complete && incomplete) return 1;
    return 0;
}

int run_metrics(const std::string& corpus_path, const std::string& patterns_path,
                const std::string& ratings_path, const std::string& fields_csv,
                const std::string& strata_by, int64_t sample_size, const CommonFlags& flags) {
    const fs::path out = resolve_out_dir(flags.out);
    const Corpus corpus = load_corpus(corpus_path);
    std::cout << "loaded " << corpus.size() << " notes (" << corpus.patient_count()
              << " patients)\n";

    std::vector<std::string> fields =
        fields_csv.empty() ? std::vector<std::string>{"admission_year", "quality_score",
                                                      "icd_codes", "phi_spans", "note_type"}
                           : split_csv(fields_csv);
    const MissingnessProfile profile = missingness(corpus, fields, strata_by);
    json jm;
    jm["corpus_hash"] = corpus.content_hash();
    jm["strata_by"] = profile.strata_by;
    for (const auto& f : profile.fields) {
        const auto& stats = profile.per_field.at(f);
        jm["fields"][f] = {{"rate", stats.rate},
                           {"missing", stats.missing},
                           {"n", stats.n},
                           {"structural", stats.structural},
                           {"incidental", stats.incidental}};
    }
    for (const auto& [stratum, per_field] : profile.strata) {
        for (const auto& [f, stats] : per_field) {
            jm["strata"][stratum][f] = {{"rate", stats.rate}, {"missing", stats.missing},
                                        {"n", stats.n}};
        }
    }
    write_text(out / "missingness.json", jm.dump(2) + "\n");

    const PatternSet patterns =
        patterns_path.empty() ? PatternSet::defaults() : PatternSet::from_file(patterns_path);
    const size_t sample =
        sample_size >= 0 ? static_cast<size_t>(sample_size) : std::min<size_t>(100, corpus.size());
    const PhiRiskResult risk = phi_risk_scan(corpus, patterns, 3, sample, flags.seed);
    json jr;
    jr["corpus_hash"] = corpus.content_hash();
    jr["patterns_hash"] = risk.patterns_hash;
    jr["mean_proxy"] = risk.mean_proxy;
    jr["frac_high_risk"] = risk.frac_high_risk;
    jr["threshold"] = risk.threshold;
    jr["histogram"] = risk.histogram;
    jr["sampling_plan"] = {{"sample_size", risk.sampling_plan.sample_size},
                           {"seed", risk.sampling_plan.seed},
                           {"note_ids", risk.sampling_plan.note_ids}};
    write_text(out / "phi_risk.json", jr.dump(2) + "\n");
    write_text(out / "phi_patterns.json", patterns.to_json());
    std::cout << "phi risk: mean proxy " << risk.mean_proxy << ", high-risk fraction "
              << risk.frac_high_risk << '\n';

    if (!ratings_path.empty()) {
        const json ratings = json::parse(read_text(ratings_path));
        json results = json::array();
        BootstrapConfig bootstrap;
        bootstrap.seed = flags.seed;
        if (ratings.contains("labels_a")) {
            const auto a = ratings["labels_a"].get<std::vector<std::string>>();
            const auto b = ratings["labels_b"].get<std::vector<std::string>>();
            results.push_back(agreement_to_json(cohen_kappa(a, b, bootstrap)));
        }
        if (ratings.contains("counts")) {
            const auto counts = ratings["counts"].get<std::vector<std::vector<int64_t>>>();
            results.push_back(agreement_to_json(fleiss_kappa(counts, bootstrap)));
        }
        json ja;
        ja["results"] = results;
        ja["ratings_hash"] = sha256_hex(ratings.dump());
        write_text(out / "agreement.json", ja.dump(2) + "\n");
        std::cout << "agreement results: " << results.size() << '\n';
    }

    if (flags.format == "dat") {
        write_text(out / "missingness.dat", profile.to_dat());
        write_text(out / "phi_risk.dat", risk.to_dat());
        write_text(out / "len_hist.dat", length_histogram_to_dat(length_histogram(corpus)));
    }
    return 0;
}

SimilarityConfig build_sim_config(const std::string& method, int ngram, int minhash_k, int bands,
                                  int rows, const std::string& thresholds_csv, uint64_t seed) {
    SimilarityConfig cfg;
    if (!method.empty()) {
        auto m = sim_method_from_string(method);
        if (!m) throw LeakageError(LeakageError::Kind::kBadConfig, "unknown method " + method);
        cfg.method = *m;
    }
    cfg.ngram = ngram;
    cfg.minhash_k = minhash_k;
    cfg.bands = bands;
    cfg.rows = rows;
    if (seed != 0) cfg.hash_seed = seed;
    if (!thresholds_csv.empty()) {
        cfg.thresholds.clear();
        for (const auto& t : split_csv(thresholds_csv)) cfg.thresholds.push_back(std::stod(t));
    }
    cfg.validate();
    return cfg;
}

int run_leak(const std::string& corpus_path, const std::string& split_path,
             const std::string& method, int ngram, int minhash_k, int bands, int rows,
             const std::string& thresholds_csv, const std::string& label_leakage_note,
             const std::string& contamination_note, const CommonFlags& flags) {
    const fs::path out = resolve_out_dir(flags.out);
    const Corpus corpus = load_corpus(corpus_path);
    const SplitManifest split = load_split(split_path, corpus);
    const SimilarityConfig cfg =
        build_sim_config(method, ngram, minhash_k, bands, rows, thresholds_csv, flags.seed);

    Disclosure label_leakage{!label_leakage_note.empty(), label_leakage_note};
    Disclosure contamination{!contamination_note.empty(), contamination_note};
    const LeakageAuditRecord record =
        audit_splits(corpus, split, cfg, label_leakage, contamination);

    write_text(out / "leakage.json", json::parse(record.to_json()).dump(2) + "\n");
    const ProvActivity activity = leakage_provenance_activity(
        record, "act-leakage-audit", "relgate", "2026-01-01T00:00:00Z");
    json ja;
    ja["activity_id"] = activity.activity_id;
    ja["event_type"] = to_string(activity.event_type);
    ja["timestamp"] = activity.timestamp;
    ja["agent_id"] = activity.agent_id;
    ja["fields"] = activity.fields;
    write_text(out / "leakage_activity.json", ja.dump(2) + "\n");
    if (flags.format == "dat") write_text(out / "leak.dat", record.curve.to_dat());

    for (const auto& p : record.curve.points) {
        std::printf("L(%.2f) = %.4f (%lld/%lld)\n", p.threshold, p.l,
                    static_cast<long long>(p.count), static_cast<long long>(record.curve.n_test));
    }
    if (!record.overlap.empty()) {
        std::cout << "patient overlap: " << record.overlap.patients.size() << " patient(s)\n";
    }
    if (record.disclosures_required) {
        std::cout << "note: label-leakage/contamination disclosures not declared\n";
    }
    std::cout << "audit " << (record.audit_passed ? "passed" : "failed") << '\n';
    return record.audit_passed ? 0 : 1;
}

int run_drift(const std::string& corpus_path, const std::string& feature_name,
              const std::string& baseline, const std::string& periods_csv,
              const CommonFlags& flags) {
    const fs::path out = resolve_out_dir(flags.out);
    const Corpus corpus = load_corpus(corpus_path);
    auto feature = drift_feature_from_string(feature_name);
    if (!feature) {
        std::cerr << "error: unknown feature '" << feature_name << "'\n";
        return 2;
    }
    std::vector<std::string> periods = split_csv(periods_csv);
    const PsiTrace trace = psi_trace(corpus, *feature, baseline, periods);

    json j;
    j["corpus_hash"] = corpus.content_hash();
    j["feature"] = to_string(trace.feature);
    j["baseline"] = trace.baseline_period;
    json points = json::array();
    for (const auto& p : trace.points) points.push_back({{"period", p.period}, {"psi", p.psi}});
    j["points"] = points;
    j["baseline_histogram"] = trace.baseline_histogram;
    j["period_histograms"] = trace.period_histograms;
    write_text(out / "drift.json", j.dump(2) + "\n");
    if (flags.format == "dat") write_text(out / "psi.dat", trace.to_dat());

    for (const auto& p : trace.points) {
        std::printf("%s psi=%.6f\n", p.period.c_str(), p.psi);
    }
    return 0;
}

int run_fixture(int patients, int notes_per_patient, const FixtureKnobs& knobs,
                const CommonFlags& flags) {
    const fs::path out = resolve_out_dir(flags.out);
    auto [corpus, split] = make_fixture(patients, notes_per_patient, flags.seed, knobs);
    fs::create_directories(out);
    write_corpus(corpus, out / "corpus.jsonl");
    write_split(split, out / "split.json");
    std::cout << "wrote " << corpus.size() << " notes: train " << split.count(Split::kTrain)
              << ", val " << split.count(Split::kVal) << ", test " << split.count(Split::kTest)
              << '\n';
    return 0;
}

int run_prov(const std::string& action, const std::string& bundle_dir, const std::string& root,
             const std::string& entity_a, const std::string& entity_b, const CommonFlags& flags) {
    const fs::path out = resolve_out_dir(flags.out);
    const BundleLoad load = load_bundle(bundle_dir);

    if (action == "validate") {
        json j = json::array();
        for (const auto& issue : load.issues) {
            j.push_back({{"kind", to_string(issue.kind)}, {"message", issue.message}});
            std::cout << "[" << to_string(issue.kind) << "] " << issue.message << '\n';
        }
        write_text(out / "prov_issues.json", j.dump(2) + "\n");
        std::cout << (load.issues.empty() ? "bundle valid\n" : "bundle has issues\n");
        return load.issues.empty() ? 0 : 1;
    }
    if (action == "verify") {
        const IntegrityReport report = verify_hashes(load.bundle, root.empty() ? bundle_dir : root);
        json j = json::array();
        for (const auto& e : report.entities) {
            const char* status = e.status == HashStatus::kMatch      ? "match"
                                 : e.status == HashStatus::kMismatch ? "mismatch"
                                 : e.status == HashStatus::kAbsent   ? "absent"
                                                                     : "unreadable";
            j.push_back({{"entity_id", e.entity_id},
                         {"status", status},
                         {"file", e.file},
                         {"expected", e.expected},
                         {"computed", e.computed}});
            std::cout << e.entity_id << ": " << status << '\n';
        }
        write_text(out / "integrity.json", j.dump(2) + "\n");
        return report.all_match_or_absent() ? 0 : 1;
    }
    if (action == "lineage") {
        const LineageTree tree = lineage(load.bundle, entity_a);
        json steps = json::array();
        for (const auto& step : tree.steps) {
            json used = json::array(), generated = json::array();
            for (const auto* e : step.used) used.push_back(e->entity_id);
            for (const auto* e : step.generated) generated.push_back(e->entity_id);
            steps.push_back({{"activity_id", step.activity->activity_id},
                             {"event_type", to_string(step.activity->event_type)},
                             {"agent_id", step.activity->agent_id},
                             {"used", used},
                             {"generated", generated}});
            std::cout << to_string(step.activity->event_type) << " ("
                      << step.activity->activity_id << ")\n";
        }
        json j;
        j["entity_id"] = entity_a;
        j["steps"] = steps;
        write_text(out / "lineage.json", j.dump(2) + "\n");
        return 0;
    }
    if (action == "diff") {
        const ProvDiff diff = diff_versions(load.bundle, entity_a, entity_b);
        json j;
        j["activities_only_a"] = diff.activities_only_a;
        j["activities_only_b"] = diff.activities_only_b;
        j["entities_only_a"] = diff.entities_only_a;
        j["entities_only_b"] = diff.entities_only_b;
        json changes = json::array();
        for (const auto& c : diff.field_changes) {
            changes.push_back({{"event_type", to_string(c.event_type)},
                               {"field", c.field_key},
                               {"activity_a", c.activity_a},
                               {"activity_b", c.activity_b},
                               {"value_a", c.value_a},
                               {"value_b", c.value_b}});
            std::cout << "changed " << to_string(c.event_type) << "." << c.field_key << ": '"
                      << c.value_a << "' -> '" << c.value_b << "'\n";
        }
        j["field_changes"] = changes;
        write_text(out / "diff.json", j.dump(2) + "\n");
        std::cout << (diff.empty() ? "lineages identical\n" : "lineages differ\n");
        return 0;
    }
    std::cerr << "error: unknown prov action '" << action << "'\n";
    return 2;
}

int run_gate(const std::string& bundle, const std::string& policy_path, const CommonFlags& flags) {
    const fs::path out = resolve_out_dir(flags.out);
    const GatePolicy policy =
        policy_path.empty() ? default_policy() : GatePolicy::from_file(policy_path);
    const GateReport report = gate(bundle, policy);
    write_text(out / "gate_report.json", report.to_json());
    std::cout << report.to_text();
    return report.verdict_pass ? 0 : 1;
}

int run_verify(const std::string& bundle, const CommonFlags& flags) {
    const fs::path out = resolve_out_dir(flags.out);
    const ContinuousVerificationReport report = verify_bundle(bundle);
    write_text(out / "verification.json", report.to_json());
    std::cout << report.to_text();
    return report.consistent() ? 0 : 1;
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
    CLI::App app{"release-gate auditing for clinical NLP corpora and model bundles"};
    app.require_subcommand(1);

    CommonFlags flags;

    // validate
    auto* validate = app.add_subcommand("validate", "validate datasheet/card documents");
    std::string v_datasheet, v_card, v_schema, v_drift;
    bool v_require_complete = false;
    validate->add_option("--datasheet", v_datasheet, "datasheet JSON document");
    validate->add_option("--card", v_card, "model card JSON document");
    validate->add_option("--schema", v_schema, "override schema file");
    validate->add_option("--drift-versions", v_drift, "comma-separated datasheet versions");
    validate->add_flag("--require-complete", v_require_complete,
                       "exit 1 unless mandatory completeness is 1.0");
    add_common(validate, flags);

    // metrics
    auto* metrics = app.add_subcommand("metrics", "corpus metric suite");
    std::string m_corpus, m_patterns, m_ratings, m_fields, m_strata;
    int64_t m_sample = -1;
    metrics->add_option("--corpus", m_corpus, "corpus file (one JSON note per line)")->required();
    metrics->add_option("--patterns", m_patterns, "PHI pattern config");
    metrics->add_option("--ratings", m_ratings, "labels/ratings JSON for agreement stats");
    metrics->add_option("--fields", m_fields, "missingness fields (comma separated)");
    metrics->add_option("--strata-by", m_strata, "stratify missingness by note_type/admission_year");
    metrics->add_option("--sample-size", m_sample, "phi review sample size");
    add_common(metrics, flags);

    // leak
    auto* leak = app.add_subcommand("leak", "train/test leakage audit");
    std::string l_corpus, l_split, l_method, l_thresholds, l_label, l_contam;
    int l_ngram = 5, l_k = 128, l_bands = 32, l_rows = 4;
    leak->add_option("--corpus", l_corpus)->required();
    leak->add_option("--split", l_split)->required();
    leak->add_option("--method", l_method, "token_jaccard | char_ngram_jaccard | minhash_estimate");
    leak->add_option("--ngram", l_ngram);
    leak->add_option("--minhash-k", l_k);
    leak->add_option("--bands", l_bands);
    leak->add_option("--rows", l_rows);
    leak->add_option("--thresholds", l_thresholds, "comma separated, increasing, in (0,1]");
    leak->add_option("--declare-label-leakage", l_label, "label-leakage disclosure justification");
    leak->add_option("--declare-contamination", l_contam, "contamination disclosure justification");
    add_common(leak, flags);

    // drift
    auto* drift = app.add_subcommand("drift", "PSI drift trace over admission years");
    std::string d_corpus, d_feature = "icd_histogram", d_baseline, d_periods;
    drift->add_option("--corpus", d_corpus)->required();
    drift->add_option("--feature", d_feature, "icd_histogram | note_type_histogram | length_histogram");
    drift->add_option("--baseline", d_baseline, "baseline year")->required();
    drift->add_option("--periods", d_periods, "comma-separated years")->required();
    add_common(drift, flags);

    // prov
    auto* prov = app.add_subcommand("prov", "provenance bundle queries");
    std::string p_action, p_dir, p_root, p_a, p_b;
    prov->add_option("action", p_action, "validate | verify | lineage | diff")->required();
    prov->add_option("bundle_dir", p_dir, "provenance directory")->required();
    prov->add_option("--root", p_root, "artifact root for hash verification");
    prov->add_option("--entity", p_a, "entity id (lineage/diff)");
    prov->add_option("--entity-b", p_b, "second entity id (diff)");
    add_common(prov, flags);

    // fixture
    auto* fixture = app.add_subcommand("fixture", "generate a synthetic corpus + split");
    int f_patients = 100, f_npp = 1;
    FixtureKnobs knobs;
    std::string f_split_key = "patient";
    fixture->add_option("--patients", f_patients);
    fixture->add_option("--notes-per-patient", f_npp);
    fixture->add_option("--dup", knobs.duplicate_across_splits, "planted cross-split duplicates");
    fixture->add_option("--near-dup", knobs.near_dup_across_splits);
    fixture->add_option("--icd-empty", knobs.icd_empty_frac);
    fixture->add_option("--quality-missing", knobs.quality_missing_frac);
    fixture->add_option("--year-missing", knobs.year_missing_frac);
    fixture->add_option("--years", knobs.years);
    fixture->add_option("--icd-shift", knobs.icd_shift_step);
    fixture->add_option("--phi1", knobs.phi_risk1_frac);
    fixture->add_option("--phi2", knobs.phi_risk2_frac);
    fixture->add_option("--phi3", knobs.phi_risk3_frac);
    fixture->add_option("--split-key", f_split_key, "patient | note");
    add_common(fixture, flags);

    // assemble
    auto* assemble = app.add_subcommand("assemble", "assemble a release bundle");
    std::string a_datasheet, a_card, a_prov, a_metrics, a_bundle;
    assemble->add_option("--datasheet", a_datasheet)->required();
    assemble->add_option("--card", a_card)->required();
    assemble->add_option("--provenance", a_prov)->required();
    assemble->add_option("--metrics", a_metrics)->required();
    assemble->add_option("--bundle", a_bundle, "bundle output root")->required();
    add_common(assemble, flags);

    // gate
    auto* gate_cmd = app.add_subcommand("gate", "evaluate the release gate on a bundle");
    std::string g_bundle, g_policy;
    gate_cmd->add_option("bundle", g_bundle, "bundle root")->required();
    gate_cmd->add_option("--policy", g_policy, "policy JSON (default: built-in)");
    add_common(gate_cmd, flags);

    // verify
    auto* verify = app.add_subcommand("verify", "continuous verification of a bundle");
    std::string y_bundle;
    verify->add_option("bundle", y_bundle, "bundle root")->required();
    add_common(verify, flags);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (validate->parsed()) {
            return run_validate(v_datasheet, v_card, v_schema, v_drift, v_require_complete, flags);
        }
        if (metrics->parsed()) {
            return run_metrics(m_corpus, m_patterns, m_ratings, m_fields, m_strata, m_sample,
                               flags);
        }
        if (leak->parsed()) {
            return run_leak(l_corpus, l_split, l_method, l_ngram, l_k, l_bands, l_rows,
                            l_thresholds, l_label, l_contam, flags);
        }
        if (drift->parsed()) return run_drift(d_corpus, d_feature, d_baseline, d_periods, flags);
        if (prov->parsed()) return run_prov(p_action, p_dir, p_root, p_a, p_b, flags);
        if (fixture->parsed()) {
            auto key = split_key_from_string(f_split_key);
            if (!key) {
                std::cerr << "error: unknown split key '" << f_split_key << "'\n";
                return 2;
            }
            knobs.split_key = *key;
            return run_fixture(f_patients, f_npp, knobs, flags);
        }
        if (assemble->parsed()) {
            assemble_bundle({a_datasheet, a_card, a_prov, a_metrics}, a_bundle);
            std::cout << "bundle assembled at " << a_bundle << '\n';
            return 0;
        }
        if (gate_cmd->parsed()) return run_gate(g_bundle, g_policy, flags);
        if (verify->parsed()) return run_verify(y_bundle, flags);
    } catch (const GateError& e) {
        if (e.kind == GateError::Kind::kCollision) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

}  // namespace relgate
