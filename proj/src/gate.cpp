#include "relgate/gate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "relgate/hashing.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace relgate {

std::string to_string(CheckSeverity s) {
    return s == CheckSeverity::kBlocking ? "blocking" : "warning";
}

std::string to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::kPass: return "pass";
        case CheckStatus::kFail: return "fail";
        case CheckStatus::kWarn: return "warn";
    }
    return "fail";
}

GatePolicy::GatePolicy(std::string version, std::vector<GateCheck> checks)
    : version_(std::move(version)), checks_(std::move(checks)) {
    std::set<std::string> ids;
    for (const auto& c : checks_) {
        if (!ids.insert(c.check_id).second) {
            throw GateError(GateError::Kind::kBadPolicy,
                            "duplicate check_id '" + c.check_id + "'");
        }
    }
    hash_ = sha256_hex(to_json());
}

std::string GatePolicy::to_json() const {
    json j;
    j["policy_version"] = version_;
    json checks = json::array();
    for (const auto& c : checks_) {
        checks.push_back({{"check_id", c.check_id},
                          {"severity", to_string(c.severity)},
                          {"params", c.params}});
    }
    j["checks"] = checks;
    return j.dump(2) + "\n";
}

GatePolicy GatePolicy::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw GateError(GateError::Kind::kBadPolicy, std::string("policy: ") + e.what());
    }
    std::vector<GateCheck> checks;
    try {
        for (const auto& jc : j.at("checks")) {
            GateCheck c;
            c.check_id = jc.at("check_id").get<std::string>();
            const std::string sev = jc.value("severity", "blocking");
            if (sev == "blocking") {
                c.severity = CheckSeverity::kBlocking;
            } else if (sev == "warning") {
                c.severity = CheckSeverity::kWarning;
            } else {
                throw GateError(GateError::Kind::kBadPolicy, "unknown severity '" + sev + "'");
            }
            if (jc.contains("params")) c.params = jc["params"];
            checks.push_back(std::move(c));
        }
        return GatePolicy(j.value("policy_version", "1"), std::move(checks));
    } catch (const json::exception& e) {
        throw GateError(GateError::Kind::kBadPolicy, std::string("policy: ") + e.what());
    }
}

GatePolicy GatePolicy::from_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw GateError(GateError::Kind::kIo, "cannot open policy " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

const GatePolicy& default_policy() {
    static const GatePolicy policy = [] {
        std::vector<GateCheck> checks;
        checks.push_back({"doc_completeness", CheckSeverity::kBlocking, {{"required_c", 1.0}}});
        checks.push_back({"deid_disclosure", CheckSeverity::kBlocking, json::object()});
        checks.push_back({"patient_split", CheckSeverity::kBlocking, json::object()});
        checks.push_back({"leakage_ceiling", CheckSeverity::kBlocking,
                          {{"ceilings", {{"0.70", 0.01}, {"0.85", 0.005}}}}});
        checks.push_back({"reliability_present", CheckSeverity::kBlocking, json::object()});
        checks.push_back({"drift_plan", CheckSeverity::kBlocking, json::object()});
        checks.push_back({"integrity", CheckSeverity::kBlocking, json::object()});
        return GatePolicy("1", std::move(checks));
    }();
    return policy;
}

const std::vector<std::string>& bundle_directories() {
    static const std::vector<std::string> kDirs = {"datasheet", "model_card", "provenance",
                                                   "metrics", "release"};
    return kDirs;
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GateError(GateError::Kind::kIo, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<std::string> read_file_if_exists(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) return std::nullopt;
    return read_file(path);
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw GateError(GateError::Kind::kIo, "cannot write " + path.string());
    out << bytes;
}

json parse_json_or_null(const std::optional<std::string>& text) {
    if (!text) return json();
    try {
        return json::parse(*text);
    } catch (const json::exception&) {
        return json();
    }
}

// Everything the checks need, loaded once and then read-only.
struct BundleContext {
    fs::path root;
    std::optional<Schema> datasheet_schema;
    std::optional<Schema> card_schema;
    std::optional<ArtifactDoc> datasheet;
    std::optional<ArtifactDoc> card;
    std::string datasheet_error;
    std::string card_error;
    BundleLoad prov;
    json leakage;
    json phi_risk;
    json agreement;
    json completeness_record;
    std::map<std::string, std::string> file_hashes;  // inputs we report on
};

Schema schema_or_default(const fs::path& path, const Schema& fallback) {
    std::error_code ec;
    if (fs::is_regular_file(path, ec)) {
        try {
            return Schema::from_file(path);
        } catch (const SchemaError&) {
            // fall through to the built-in
        }
    }
    return fallback;
}

BundleContext load_bundle_context(const fs::path& root) {
    BundleContext ctx;
    ctx.root = root;
    ctx.datasheet_schema = schema_or_default(root / "datasheet/schema.json",
                                             default_datasheet_schema());
    ctx.card_schema = schema_or_default(root / "model_card/schema.json", default_card_schema());

    try {
        ctx.datasheet = parse_doc(root / "datasheet/datasheet.json", *ctx.datasheet_schema);
    } catch (const std::exception& e) {
        ctx.datasheet_error = e.what();
    }
    try {
        ctx.card = parse_doc(root / "model_card/card.json", *ctx.card_schema);
    } catch (const std::exception& e) {
        ctx.card_error = e.what();
    }

    ctx.prov = load_bundle(root / "provenance");
    ctx.leakage = parse_json_or_null(read_file_if_exists(root / "metrics/leakage.json"));
    ctx.phi_risk = parse_json_or_null(read_file_if_exists(root / "metrics/phi_risk.json"));
    ctx.agreement = parse_json_or_null(read_file_if_exists(root / "metrics/agreement.json"));
    ctx.completeness_record =
        parse_json_or_null(read_file_if_exists(root / "metrics/completeness.json"));

    for (const char* name : {"datasheet/datasheet.json", "model_card/card.json",
                             "metrics/leakage.json", "metrics/phi_risk.json",
                             "metrics/agreement.json", "release/checksums"}) {
        std::error_code ec;
        if (fs::is_regular_file(root / name, ec)) {
            ctx.file_hashes[name] = sha256_file(root / name);
        }
    }
    return ctx;
}

bool section_mandatory_populated(const ArtifactDoc& doc, const Schema& schema,
                                 const std::string& section, std::vector<std::string>* missing) {
    bool ok = true;
    for (const FieldSpec& f : schema.fields()) {
        if (f.section_id != section || f.tier != FieldTier::kMandatory) continue;
        if (!doc.populated(f)) {
            ok = false;
            if (missing) missing->push_back(f.section_id + "." + f.field_id);
        }
    }
    return ok;
}

CheckResult check_doc_completeness(const BundleContext& ctx, const GateCheck& check) {
    CheckResult r{check.check_id, check.severity, CheckStatus::kFail, {}, json::object()};
    const double required = check.params.value("required_c", 1.0);
    bool ok = true;
    for (const auto& [label, doc, schema, error] :
         {std::tuple{"datasheet", &ctx.datasheet, &ctx.datasheet_schema, &ctx.datasheet_error},
          std::tuple{"card", &ctx.card, &ctx.card_schema, &ctx.card_error}}) {
        if (!doc->has_value()) {
            ok = false;
            r.messages.push_back(std::string(label) + ": cannot parse (" + *error + ")");
            continue;
        }
        const CompletenessReport report = completeness(**doc, **schema);
        json ev;
        ev["c"] = report.c;
        ev["c_rendered"] = report.c_rendered;
        ev["populated"] = report.populated;
        ev["total"] = report.total;
        ev["doc_checksum"] = report.doc_checksum;
        ev["schema_hash"] = report.schema_hash;
        json missing = json::array();
        for (const auto& [sec, field] : report.missing_mandatory) missing.push_back(sec + "." + field);
        ev["missing_mandatory"] = missing;
        r.evidence[label] = ev;
        if (report.c < required) {
            ok = false;
            r.messages.push_back(std::string(label) + ": completeness " + report.c_rendered +
                                 " below required " + std::to_string(required) + "; missing " +
                                 std::to_string(report.missing_mandatory.size()) +
                                 " mandatory field(s)");
        }
    }
    if (ok) {
        r.status = CheckStatus::kPass;
        r.messages.push_back("all mandatory documentation fields populated");
    }
    return r;
}

CheckResult check_deid_disclosure(const BundleContext& ctx, const GateCheck& check) {
    CheckResult r{check.check_id, check.severity, CheckStatus::kFail, {}, json::object()};
    bool ok = true;
    std::vector<std::string> missing;
    if (!ctx.datasheet) {
        ok = false;
        r.messages.push_back("datasheet: cannot parse (" + ctx.datasheet_error + ")");
    } else if (!section_mandatory_populated(*ctx.datasheet, *ctx.datasheet_schema, "deid_privacy",
                                            &missing)) {
        ok = false;
        std::string msg = "de-identification disclosure incomplete:";
        for (const auto& m : missing) msg += " " + m;
        r.messages.push_back(msg);
    }
    if (ctx.phi_risk.is_null()) {
        ok = false;
        r.messages.push_back("metrics/phi_risk.json missing (no residual-risk scan recorded)");
    } else {
        const json plan = ctx.phi_risk.value("sampling_plan", json::object());
        const auto sample_size = plan.value("sample_size", 0);
        const auto ids = plan.value("note_ids", json::array());
        r.evidence["sampling_plan_size"] = sample_size;
        auto it = ctx.file_hashes.find("metrics/phi_risk.json");
        if (it != ctx.file_hashes.end()) r.evidence["phi_risk_hash"] = it->second;
        if (sample_size < 1 || ids.empty()) {
            ok = false;
            r.messages.push_back("phi risk record lacks a manual-review sampling plan");
        }
    }
    if (ok) {
        r.status = CheckStatus::kPass;
        r.messages.push_back("de-ID disclosures and sampling plan present");
    }
    return r;
}

CheckResult check_patient_split(const BundleContext& ctx, const GateCheck& check) {
    CheckResult r{check.check_id, check.severity, CheckStatus::kFail, {}, json::object()};
    if (ctx.leakage.is_null()) {
        r.messages.push_back("metrics/leakage.json missing (no split audit recorded)");
        return r;
    }
    auto it = ctx.file_hashes.find("metrics/leakage.json");
    if (it != ctx.file_hashes.end()) r.evidence["leakage_hash"] = it->second;
    const std::string split_key = ctx.leakage.value("split_key", "");
    const json overlap = ctx.leakage.value("patient_overlap", json::array());
    r.evidence["split_key"] = split_key;
    r.evidence["overlap_patients"] = overlap.size();
    bool ok = true;
    if (split_key != "patient") {
        ok = false;
        r.messages.push_back("split is not patient-keyed (split_key='" + split_key + "')");
    }
    if (!overlap.empty()) {
        ok = false;
        std::string msg = "patients span multiple splits:";
        size_t shown = 0;
        for (const auto& p : overlap) {
            if (shown++ == 5) {
                msg += " ...";
                break;
            }
            msg += " " + p.value("patient_id", "?");
        }
        r.messages.push_back(msg);
    }
    if (ok) {
        r.status = CheckStatus::kPass;
        r.messages.push_back("patient-level split with no cross-split patients");
    }
    return r;
}

CheckResult check_leakage_ceiling(const BundleContext& ctx, const GateCheck& check) {
    CheckResult r{check.check_id, check.severity, CheckStatus::kFail, {}, json::object()};
    if (ctx.leakage.is_null()) {
        r.messages.push_back("metrics/leakage.json missing (no leakage curve recorded)");
        return r;
    }
    const json ceilings = check.params.value("ceilings", json::object());
    const json curve = ctx.leakage.value("curve", json::array());
    bool ok = true;
    for (const auto& [tau_str, ceiling] : ceilings.items()) {
        const double tau = std::stod(tau_str);
        const double max_l = ceiling.get<double>();
        bool found = false;
        for (const auto& point : curve) {
            if (std::abs(point.value("threshold", -1.0) - tau) < 1e-9) {
                found = true;
                const double l = point.value("l", 1.0);
                json ev;
                ev["l"] = l;
                ev["ceiling"] = max_l;
                r.evidence[tau_str] = ev;
                if (l > max_l) {
                    ok = false;
                    char buf[128];
                    std::snprintf(buf, sizeof(buf), "L(%.2f) = %.4f exceeds ceiling %.4f", tau, l,
                                  max_l);
                    r.messages.push_back(buf);
                }
                break;
            }
        }
        if (!found) {
            ok = false;
            r.messages.push_back("curve has no point at threshold " + tau_str);
        }
    }
    if (ok) {
        r.status = CheckStatus::kPass;
        r.messages.push_back("leakage within configured ceilings");
    }
    return r;
}

CheckResult check_reliability_present(const BundleContext& ctx, const GateCheck& check) {
    CheckResult r{check.check_id, check.severity, CheckStatus::kFail, {}, json::object()};
    bool labeling = false;
    for (const auto& a : ctx.prov.bundle.activities) {
        if (a.event_type == ProvEventType::kLabeling) {
            labeling = true;
            break;
        }
    }
    r.evidence["labeling_activity_present"] = labeling;
    if (!labeling) {
        r.status = CheckStatus::kPass;
        r.messages.push_back("no labeling activity recorded; agreement statistics not required");
        return r;
    }
    const json results = ctx.agreement.is_null() ? json::array()
                                                 : ctx.agreement.value("results", json::array());
    if (results.empty()) {
        r.messages.push_back(
            "labeling activity present but metrics/agreement.json has no agreement results");
        return r;
    }
    for (const auto& res : results) {
        if (!res.contains("value") || !res.contains("ci_low") || !res.contains("ci_high")) {
            r.messages.push_back("agreement result lacks value or confidence interval");
            return r;
        }
    }
    auto it = ctx.file_hashes.find("metrics/agreement.json");
    if (it != ctx.file_hashes.end()) r.evidence["agreement_hash"] = it->second;
    r.evidence["result_count"] = results.size();
    r.status = CheckStatus::kPass;
    r.messages.push_back("agreement statistics with confidence intervals recorded");
    return r;
}

CheckResult check_drift_plan(const BundleContext& ctx, const GateCheck& check) {
    CheckResult r{check.check_id, check.severity, CheckStatus::kFail, {}, json::object()};
    bool ok = true;
    std::vector<std::string> missing;
    if (!ctx.datasheet) {
        ok = false;
        r.messages.push_back("datasheet: cannot parse (" + ctx.datasheet_error + ")");
    } else {
        const FieldSpec* spec = ctx.datasheet_schema->find("maintenance", "drift_monitoring");
        if (spec && !ctx.datasheet->populated(*spec)) {
            ok = false;
            missing.push_back("datasheet maintenance.drift_monitoring");
        }
    }
    if (!ctx.card) {
        ok = false;
        r.messages.push_back("card: cannot parse (" + ctx.card_error + ")");
    } else {
        const FieldSpec* spec = ctx.card_schema->find("governance", "monitoring_metrics");
        if (spec && !ctx.card->populated(*spec)) {
            ok = false;
            missing.push_back("card governance.monitoring_metrics");
        }
    }
    if (!missing.empty()) {
        std::string msg = "drift/monitoring plan missing:";
        for (const auto& m : missing) msg += " " + m;
        r.messages.push_back(msg);
    }
    if (ok) {
        r.status = CheckStatus::kPass;
        r.messages.push_back("drift/monitoring plan disclosed");
    }
    return r;
}

struct ManifestCheck {
    std::vector<std::string> mismatched;
    std::vector<std::string> missing_files;
    std::vector<std::string> uncovered;
    bool manifest_present = false;
};

ManifestCheck verify_manifest(const fs::path& root) {
    ManifestCheck result;
    const fs::path manifest_path = root / "release/checksums";
    std::error_code ec;
    if (!fs::is_regular_file(manifest_path, ec)) return result;
    result.manifest_present = true;

    std::map<std::string, std::string> recorded;
    std::istringstream in(read_file(manifest_path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.size() < 66) continue;
        recorded[line.substr(66)] = line.substr(0, 64);
    }
    std::set<std::string> actual;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), root).generic_string();
        if (rel == "release/checksums" || rel == "release/checksums.sig") continue;
        actual.insert(rel);
    }
    for (const auto& [file, hash] : recorded) {
        if (!actual.count(file)) {
            result.missing_files.push_back(file);
        } else if (sha256_file(root / file) != hash) {
            result.mismatched.push_back(file);
        }
    }
    for (const auto& file : actual) {
        if (!recorded.count(file)) result.uncovered.push_back(file);
    }
    return result;
}

CheckResult check_integrity(const BundleContext& ctx, const GateCheck& check) {
    CheckResult r{check.check_id, check.severity, CheckStatus::kFail, {}, json::object()};
    bool ok = true;

    if (!ctx.prov.issues.empty()) {
        ok = false;
        std::string msg = "provenance bundle invalid:";
        size_t shown = 0;
        for (const auto& issue : ctx.prov.issues) {
            if (shown++ == 5) {
                msg += " ...";
                break;
            }
            msg += " [" + to_string(issue.kind) + "] " + issue.message;
        }
        r.messages.push_back(msg);
    }
    r.evidence["provenance_issues"] = ctx.prov.issues.size();

    const IntegrityReport hashes = verify_hashes(ctx.prov.bundle, ctx.root);
    size_t mismatches = 0;
    for (const auto& e : hashes.entities) {
        if (e.status == HashStatus::kMismatch || e.status == HashStatus::kUnreadable) {
            ok = false;
            ++mismatches;
            r.messages.push_back("entity '" + e.entity_id + "' is stale: file " + e.file +
                                 (e.status == HashStatus::kMismatch ? " does not match its recorded hash"
                                                                    : " is unreadable"));
        }
    }
    r.evidence["entity_matches"] = hashes.count(HashStatus::kMatch);
    r.evidence["entity_mismatches"] = mismatches;
    r.evidence["entity_absent"] = hashes.count(HashStatus::kAbsent);

    const ManifestCheck manifest = verify_manifest(ctx.root);
    if (!manifest.manifest_present) {
        ok = false;
        r.messages.push_back("release/checksums manifest missing");
    }
    for (const auto& f : manifest.mismatched) {
        ok = false;
        r.messages.push_back("checksum mismatch for " + f);
    }
    for (const auto& f : manifest.missing_files) {
        ok = false;
        r.messages.push_back("manifest lists missing file " + f);
    }
    for (const auto& f : manifest.uncovered) {
        ok = false;
        r.messages.push_back("file not covered by manifest: " + f);
    }

    if (ok) {
        r.status = CheckStatus::kPass;
        r.messages.push_back("hashes verified: provenance entities and checksum manifest consistent");
    }
    return r;
}

CheckResult run_check(const BundleContext& ctx, const GateCheck& check) {
    if (check.check_id == "doc_completeness") return check_doc_completeness(ctx, check);
    if (check.check_id == "deid_disclosure") return check_deid_disclosure(ctx, check);
    if (check.check_id == "patient_split") return check_patient_split(ctx, check);
    if (check.check_id == "leakage_ceiling") return check_leakage_ceiling(ctx, check);
    if (check.check_id == "reliability_present") return check_reliability_present(ctx, check);
    if (check.check_id == "drift_plan") return check_drift_plan(ctx, check);
    if (check.check_id == "integrity") return check_integrity(ctx, check);
    CheckResult r{check.check_id, check.severity, CheckStatus::kFail, {}, json::object()};
    r.messages.push_back("unknown check_id '" + check.check_id + "'");
    return r;
}

}  // namespace

const CheckResult* GateReport::find(const std::string& check_id) const {
    for (const auto& c : checks) {
        if (c.check_id == check_id) return &c;
    }
    return nullptr;
}

std::string GateReport::to_json() const {
    json j;
    j["policy_version"] = policy_version;
    j["policy_hash"] = policy_hash;
    j["verdict"] = verdict_pass ? "pass" : "fail";
    j["inputs"] = input_hashes;
    json per_check = json::object();
    json order = json::array();
    for (const auto& c : checks) {
        order.push_back(c.check_id);
        per_check[c.check_id] = {{"severity", to_string(c.severity)},
                                 {"status", to_string(c.status)},
                                 {"messages", c.messages},
                                 {"evidence", c.evidence}};
    }
    j["check_order"] = order;
    j["per_check"] = per_check;
    return j.dump(2) + "\n";
}

std::string GateReport::to_text() const {
    std::ostringstream out;
    for (const auto& c : checks) {
        out << '[' << (c.status == CheckStatus::kPass ? "PASS"
                                                      : c.status == CheckStatus::kWarn ? "WARN" : "FAIL")
            << "] " << c.check_id;
        if (!c.messages.empty()) out << ": " << c.messages.front();
        out << '\n';
    }
    out << "verdict: " << (verdict_pass ? "pass" : "fail") << '\n';
    return out.str();
}

GateReport gate(const fs::path& bundle_root, const GatePolicy& policy) {
    for (const auto& dir : bundle_directories()) {
        std::error_code ec;
        if (!fs::is_directory(bundle_root / dir, ec)) {
            throw GateError(GateError::Kind::kMissingComponent,
                            "missing bundle component '" + dir + "'");
        }
    }
    const BundleContext ctx = load_bundle_context(bundle_root);

    // Checks only read the context; run them concurrently and assemble the
    // report in policy order.
    std::vector<std::future<CheckResult>> futures;
    futures.reserve(policy.checks().size());
    for (const auto& check : policy.checks()) {
        futures.push_back(std::async(std::launch::async,
                                     [&ctx, &check] { return run_check(ctx, check); }));
    }

    GateReport report;
    report.policy_version = policy.policy_version();
    report.policy_hash = policy.policy_hash();
    bool all_blocking_pass = true;
    for (auto& f : futures) {
        CheckResult r = f.get();
        if (r.status == CheckStatus::kFail) {
            if (r.severity == CheckSeverity::kWarning) {
                r.status = CheckStatus::kWarn;
            } else {
                all_blocking_pass = false;
            }
        }
        report.checks.push_back(std::move(r));
    }
    report.verdict_pass = all_blocking_pass;

    report.input_hashes["policy"] = policy.policy_hash();
    for (const auto& [file, hash] : ctx.file_hashes) {
        if (file == "release/checksums") {
            report.input_hashes["bundle"] = hash;
        } else {
            report.input_hashes[file] = hash;
        }
    }
    if (!ctx.leakage.is_null() && ctx.leakage.contains("corpus_hash")) {
        report.input_hashes["corpus"] = ctx.leakage["corpus_hash"].get<std::string>();
    }
    return report;
}

std::string checksum_manifest(const fs::path& bundle_root) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(bundle_root)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), bundle_root).generic_string();
        if (rel == "release/checksums" || rel == "release/checksums.sig") continue;
        files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    std::ostringstream out;
    for (const auto& rel : files) {
        out << sha256_file(bundle_root / rel) << "  " << rel << '\n';
    }
    return out.str();
}

namespace {

std::string render_summary(const fs::path& root) {
    std::ostringstream out;
    out << "transparency summary\n====================\n\n";
    const BundleContext ctx = load_bundle_context(root);

    for (const auto& [label, doc, schema, error] :
         {std::tuple{"datasheet", &ctx.datasheet, &ctx.datasheet_schema, &ctx.datasheet_error},
          std::tuple{"model card", &ctx.card, &ctx.card_schema, &ctx.card_error}}) {
        if (!doc->has_value()) {
            out << label << ": unreadable (" << *error << ")\n";
            continue;
        }
        const CompletenessReport rep = completeness(**doc, **schema);
        out << label << ": version " << (**doc).version << ", completeness " << rep.c_rendered
            << " (" << rep.populated << "/" << rep.total << " mandatory), checksum "
            << rep.doc_checksum.substr(0, 12) << "\n";
    }

    out << "provenance: " << ctx.prov.bundle.entities.size() << " entities, "
        << ctx.prov.bundle.activities.size() << " activities, " << ctx.prov.bundle.agents.size()
        << " agents, " << ctx.prov.issues.size() << " validation issues\n";

    if (!ctx.leakage.is_null()) {
        out << "leakage audit: split_key=" << ctx.leakage.value("split_key", "?")
            << ", n_train=" << ctx.leakage.value("n_train", 0)
            << ", n_test=" << ctx.leakage.value("n_test", 0) << ", overlap patients="
            << ctx.leakage.value("patient_overlap", json::array()).size();
        for (const auto& p : ctx.leakage.value("curve", json::array())) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), ", L(%.2f)=%.2f%%", p.value("threshold", 0.0),
                          100.0 * p.value("l", 0.0));
            out << buf;
        }
        out << '\n';
    } else {
        out << "leakage audit: absent\n";
    }

    if (!ctx.phi_risk.is_null()) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "phi risk: mean proxy %.4f, high-risk (>=%d) %.2f%%\n",
                      ctx.phi_risk.value("mean_proxy", 0.0), ctx.phi_risk.value("threshold", 3),
                      100.0 * ctx.phi_risk.value("frac_high_risk", 0.0));
        out << buf;
    } else {
        out << "phi risk: absent\n";
    }

    if (!ctx.agreement.is_null()) {
        for (const auto& res : ctx.agreement.value("results", json::array())) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "agreement: %s = %.4f [%.4f, %.4f]\n",
                          res.value("statistic", "?").c_str(), res.value("value", 0.0),
                          res.value("ci_low", 0.0), res.value("ci_high", 0.0));
            out << buf;
        }
    }
    return out.str();
}

void place_file(const fs::path& src, const fs::path& dst) {
    const std::string bytes = read_file(src);
    std::error_code ec;
    if (fs::is_regular_file(dst, ec)) {
        if (read_file(dst) == bytes) return;  // idempotent rerun
    }
    write_file(dst, bytes);
}

}  // namespace

void assemble_bundle(const BundleInputs& inputs, const fs::path& bundle_root) {
    for (const auto& p : {inputs.datasheet, inputs.card}) {
        std::error_code ec;
        if (!fs::is_regular_file(p, ec)) {
            throw GateError(GateError::Kind::kIo, "input not found: " + p.string());
        }
    }
    for (const auto& p : {inputs.provenance_dir, inputs.metrics_dir}) {
        std::error_code ec;
        if (!fs::is_directory(p, ec)) {
            throw GateError(GateError::Kind::kIo, "input directory not found: " + p.string());
        }
    }

    // A signed release must not be silently rewritten: if a detached
    // signature exists, any change to the manifest is a collision.
    const fs::path sig = bundle_root / "release/checksums.sig";
    const fs::path old_manifest_path = bundle_root / "release/checksums";
    std::error_code ec;
    const bool signed_release = fs::is_regular_file(sig, ec);
    const std::string old_manifest =
        fs::is_regular_file(old_manifest_path, ec) ? read_file(old_manifest_path) : "";

    for (const auto& dir : bundle_directories()) {
        fs::create_directories(bundle_root / dir);
    }
    place_file(inputs.datasheet, bundle_root / "datasheet/datasheet.json");
    place_file(inputs.card, bundle_root / "model_card/card.json");

    const auto write_if_changed = [&](const fs::path& dst, const std::string& bytes) {
        std::error_code e;
        if (fs::is_regular_file(dst, e) && read_file(dst) == bytes) return;
        write_file(dst, bytes);
    };
    write_if_changed(bundle_root / "datasheet/schema.json", default_datasheet_schema().to_json());
    write_if_changed(bundle_root / "model_card/schema.json", default_card_schema().to_json());

    for (const auto& entry : fs::directory_iterator(inputs.provenance_dir)) {
        if (entry.is_regular_file()) {
            place_file(entry.path(), bundle_root / "provenance" / entry.path().filename());
        }
    }
    for (const auto& entry : fs::directory_iterator(inputs.metrics_dir)) {
        if (entry.is_regular_file()) {
            place_file(entry.path(), bundle_root / "metrics" / entry.path().filename());
        }
    }

    write_if_changed(bundle_root / "release/summary.txt", render_summary(bundle_root));
    const std::string manifest = checksum_manifest(bundle_root);
    if (signed_release && manifest != old_manifest) {
        throw GateError(GateError::Kind::kCollision,
                        "existing signed release differs from assembled content; "
                        "remove release/checksums.sig to reassemble");
    }
    write_if_changed(bundle_root / "release/checksums", manifest);
}

std::string to_string(VerificationFinding::Kind k) {
    switch (k) {
        case VerificationFinding::Kind::kMissingComponent: return "missing_component";
        case VerificationFinding::Kind::kSchemaConformance: return "schema_conformance";
        case VerificationFinding::Kind::kMetricMismatch: return "metric_mismatch";
        case VerificationFinding::Kind::kStaleEntity: return "stale_entity";
        case VerificationFinding::Kind::kChecksumMismatch: return "checksum_mismatch";
        case VerificationFinding::Kind::kUncoveredFile: return "uncovered_file";
        case VerificationFinding::Kind::kMissingRecord: return "missing_record";
    }
    return "finding";
}

std::string ContinuousVerificationReport::to_json() const {
    json j;
    j["consistent"] = consistent();
    json f = json::array();
    for (const auto& finding : findings) {
        f.push_back({{"kind", to_string(finding.kind)}, {"message", finding.message}});
    }
    j["findings"] = f;
    return j.dump(2) + "\n";
}

std::string ContinuousVerificationReport::to_text() const {
    std::ostringstream out;
    for (const auto& f : findings) {
        out << "[" << to_string(f.kind) << "] " << f.message << '\n';
    }
    out << (consistent() ? "release is consistent\n" : "release is inconsistent\n");
    return out.str();
}

ContinuousVerificationReport verify_bundle(const fs::path& bundle_root) {
    ContinuousVerificationReport report;
    const auto add = [&](VerificationFinding::Kind kind, const std::string& msg) {
        report.findings.push_back({kind, msg});
    };

    for (const auto& dir : bundle_directories()) {
        std::error_code ec;
        if (!fs::is_directory(bundle_root / dir, ec)) {
            add(VerificationFinding::Kind::kMissingComponent,
                "missing bundle component '" + dir + "'");
        }
    }
    if (!report.findings.empty()) return report;

    const BundleContext ctx = load_bundle_context(bundle_root);

    // Schema conformance.
    if (!ctx.datasheet) {
        add(VerificationFinding::Kind::kSchemaConformance,
            "datasheet does not conform: " + ctx.datasheet_error);
    }
    if (!ctx.card) {
        add(VerificationFinding::Kind::kSchemaConformance, "card does not conform: " + ctx.card_error);
    }
    for (const auto& issue : ctx.prov.issues) {
        add(VerificationFinding::Kind::kSchemaConformance,
            "provenance: [" + to_string(issue.kind) + "] " + issue.message);
    }

    // Metric recomputation: completeness is exactly recomputable from the
    // shipped documents and must match the recorded values.
    if (ctx.completeness_record.is_null()) {
        add(VerificationFinding::Kind::kMissingRecord,
            "metrics/completeness.json missing; recorded completeness cannot be re-verified");
    } else {
        for (const auto& [label, doc, schema] :
             {std::tuple{"datasheet", &ctx.datasheet, &ctx.datasheet_schema},
              std::tuple{"card", &ctx.card, &ctx.card_schema}}) {
            if (!doc->has_value() || !ctx.completeness_record.contains(label)) continue;
            const CompletenessReport recomputed = completeness(**doc, **schema);
            const json& recorded = ctx.completeness_record[label];
            const auto rec_pop = recorded.value("populated", size_t{0});
            const auto rec_total = recorded.value("total", size_t{0});
            if (rec_pop != recomputed.populated || rec_total != recomputed.total) {
                char buf[160];
                std::snprintf(buf, sizeof(buf),
                              "%s completeness drifted: recorded %zu/%zu, recomputed %zu/%zu",
                              label, rec_pop, rec_total, recomputed.populated, recomputed.total);
                add(VerificationFinding::Kind::kMetricMismatch, buf);
            }
        }
    }

    // Record-internal identities for the corpus-dependent metrics.
    if (!ctx.leakage.is_null()) {
        const auto n_test = ctx.leakage.value("n_test", int64_t{0});
        double prev_l = 2.0;
        for (const auto& p : ctx.leakage.value("curve", json::array())) {
            const double l = p.value("l", 0.0);
            const auto count = p.value("count", int64_t{0});
            if (n_test > 0 && std::abs(l * static_cast<double>(n_test) -
                                       static_cast<double>(count)) > 1e-9) {
                add(VerificationFinding::Kind::kMetricMismatch,
                    "leakage curve point does not equal count/n_test");
            }
            if (l > prev_l + 1e-12) {
                add(VerificationFinding::Kind::kMetricMismatch,
                    "leakage curve is not nonincreasing across thresholds");
            }
            prev_l = l;
        }
    }
    if (!ctx.phi_risk.is_null() && ctx.phi_risk.contains("histogram")) {
        const auto hist = ctx.phi_risk["histogram"].get<std::vector<int64_t>>();
        const int threshold = ctx.phi_risk.value("threshold", 3);
        int64_t total = 0, high = 0, weighted = 0;
        for (size_t r = 0; r < hist.size(); ++r) {
            total += hist[r];
            weighted += hist[r] * static_cast<int64_t>(r);
            if (static_cast<int>(r) >= threshold) high += hist[r];
        }
        if (total > 0) {
            const double mean = static_cast<double>(weighted) / static_cast<double>(total);
            const double frac = static_cast<double>(high) / static_cast<double>(total);
            if (std::abs(mean - ctx.phi_risk.value("mean_proxy", 0.0)) > 1e-9 ||
                std::abs(frac - ctx.phi_risk.value("frac_high_risk", 0.0)) > 1e-9) {
                add(VerificationFinding::Kind::kMetricMismatch,
                    "phi risk aggregates do not match the recorded histogram");
            }
        }
    }

    // Hash lineage: entity hashes against shipped files, then the manifest.
    const IntegrityReport hashes = verify_hashes(ctx.prov.bundle, bundle_root);
    for (const auto& e : hashes.entities) {
        if (e.status == HashStatus::kMismatch) {
            add(VerificationFinding::Kind::kStaleEntity,
                "entity '" + e.entity_id + "' is stale: " + e.file +
                    " changed without a provenance update");
        } else if (e.status == HashStatus::kUnreadable) {
            add(VerificationFinding::Kind::kStaleEntity,
                "entity '" + e.entity_id + "': file " + e.file + " unreadable");
        }
    }
    const ManifestCheck manifest = verify_manifest(bundle_root);
    if (!manifest.manifest_present) {
        add(VerificationFinding::Kind::kChecksumMismatch, "release/checksums manifest missing");
    }
    for (const auto& f : manifest.mismatched) {
        add(VerificationFinding::Kind::kChecksumMismatch, "checksum mismatch for " + f);
    }
    for (const auto& f : manifest.missing_files) {
        add(VerificationFinding::Kind::kChecksumMismatch, "manifest lists missing file " + f);
    }
    for (const auto& f : manifest.uncovered) {
        add(VerificationFinding::Kind::kUncoveredFile, "file not covered by manifest: " + f);
    }
    return report;
}

}  // namespace relgate
