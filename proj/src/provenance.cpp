#include "relgate/provenance.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <future>
#include <set>
#include <sstream>

#include "json.hpp"
#include "relgate/hashing.hpp"

using nlohmann::json;

namespace relgate {

std::string to_string(EntityLayer l) {
    switch (l) {
        case EntityLayer::kData: return "data";
        case EntityLayer::kCode: return "code";
        case EntityLayer::kModel: return "model";
        case EntityLayer::kDocument: return "document";
    }
    return "data";
}

std::string to_string(ProvEventType t) {
    switch (t) {
        case ProvEventType::kExtraction: return "extraction";
        case ProvEventType::kDeidentification: return "deidentification";
        case ProvEventType::kNormalization: return "normalization";
        case ProvEventType::kLabeling: return "labeling";
        case ProvEventType::kSplitSampling: return "split_sampling";
        case ProvEventType::kTrainingRun: return "training_run";
        case ProvEventType::kEvaluationRun: return "evaluation_run";
        case ProvEventType::kRelease: return "release";
    }
    return "extraction";
}

std::optional<EntityLayer> entity_layer_from_string(const std::string& s) {
    if (s == "data") return EntityLayer::kData;
    if (s == "code") return EntityLayer::kCode;
    if (s == "model") return EntityLayer::kModel;
    if (s == "document") return EntityLayer::kDocument;
    return std::nullopt;
}

std::optional<ProvEventType> prov_event_type_from_string(const std::string& s) {
    for (int i = 0; i < kNumProvEventTypes; ++i) {
        auto t = static_cast<ProvEventType>(i);
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

const std::vector<std::string>& minimal_fields(ProvEventType t) {
    static const std::vector<std::string> kExtraction = {"source_system", "query", "timestamp",
                                                         "filters", "output_hash"};
    static const std::vector<std::string> kDeid = {"method_version", "phi_patterns",
                                                   "manual_review_rate", "output_hash"};
    static const std::vector<std::string> kNorm = {"tokenizer", "rules", "language_filters",
                                                   "output_hash"};
    static const std::vector<std::string> kLabeling = {"guideline_version", "annotators",
                                                       "adjudication_rule", "reliability_stats"};
    static const std::vector<std::string> kSplit = {"split_key", "random_seed",
                                                    "leakage_audit_results"};
    static const std::vector<std::string> kTraining = {"model_config", "code_commit",
                                                       "hyperparameters", "compute_env",
                                                       "checkpoints"};
    static const std::vector<std::string> kEval = {"dataset_version", "metric_definitions",
                                                   "confidence_intervals", "error_audit"};
    static const std::vector<std::string> kRelease = {"license_terms", "documentation_bundle",
                                                      "signed_checksums", "deprecation_policy"};
    switch (t) {
        case ProvEventType::kExtraction: return kExtraction;
        case ProvEventType::kDeidentification: return kDeid;
        case ProvEventType::kNormalization: return kNorm;
        case ProvEventType::kLabeling: return kLabeling;
        case ProvEventType::kSplitSampling: return kSplit;
        case ProvEventType::kTrainingRun: return kTraining;
        case ProvEventType::kEvaluationRun: return kEval;
        case ProvEventType::kRelease: return kRelease;
    }
    return kExtraction;
}

std::string event_schema_json() {
    json j;
    for (int i = 0; i < kNumProvEventTypes; ++i) {
        auto t = static_cast<ProvEventType>(i);
        j["event_types"][to_string(t)] = minimal_fields(t);
    }
    return j.dump(2) + "\n";
}

std::string to_string(BundleIssue::Kind k) {
    switch (k) {
        case BundleIssue::Kind::kUnparseableFile: return "unparseable_file";
        case BundleIssue::Kind::kDuplicateId: return "duplicate_id";
        case BundleIssue::Kind::kDanglingEdge: return "dangling_edge";
        case BundleIssue::Kind::kMultipleGenerators: return "multiple_generators";
        case BundleIssue::Kind::kMissingMinimalField: return "missing_minimal_field";
        case BundleIssue::Kind::kBadTimestamp: return "bad_timestamp";
        case BundleIssue::Kind::kMissingAgent: return "missing_agent";
        case BundleIssue::Kind::kEmptyHash: return "empty_hash";
        case BundleIssue::Kind::kCycle: return "cycle";
    }
    return "issue";
}

bool timestamp_parseable(const std::string& ts) {
    // YYYY-MM-DD with optional Thh:mm:ss, optional .fraction, optional Z or
    // +hh:mm offset.
    const auto digits = [&](size_t at, size_t n) {
        if (at + n > ts.size()) return false;
        for (size_t i = at; i < at + n; ++i) {
            if (ts[i] < '0' || ts[i] > '9') return false;
        }
        return true;
    };
    if (!digits(0, 4) || ts.size() < 10 || ts[4] != '-' || !digits(5, 2) || ts[7] != '-' ||
        !digits(8, 2)) {
        return false;
    }
    const int month = (ts[5] - '0') * 10 + (ts[6] - '0');
    const int day = (ts[8] - '0') * 10 + (ts[9] - '0');
    if (month < 1 || month > 12 || day < 1 || day > 31) return false;
    if (ts.size() == 10) return true;
    if (ts[10] != 'T' || !digits(11, 2) || ts.size() < 19 || ts[13] != ':' || !digits(14, 2) ||
        ts[16] != ':' || !digits(17, 2)) {
        return false;
    }
    size_t pos = 19;
    if (pos < ts.size() && ts[pos] == '.') {
        ++pos;
        const size_t start = pos;
        while (pos < ts.size() && ts[pos] >= '0' && ts[pos] <= '9') ++pos;
        if (pos == start) return false;
    }
    if (pos == ts.size()) return true;
    if (ts[pos] == 'Z') return pos + 1 == ts.size();
    if (ts[pos] == '+' || ts[pos] == '-') {
        return digits(pos + 1, 2) && pos + 6 == ts.size() && ts[pos + 3] == ':' &&
               digits(pos + 4, 2);
    }
    return false;
}

const ProvEntity* ProvBundle::find_entity(const std::string& id) const {
    for (const auto& e : entities) {
        if (e.entity_id == id) return &e;
    }
    return nullptr;
}

const ProvActivity* ProvBundle::find_activity(const std::string& id) const {
    for (const auto& a : activities) {
        if (a.activity_id == id) return &a;
    }
    return nullptr;
}

const ProvAgent* ProvBundle::find_agent(const std::string& id) const {
    for (const auto& a : agents) {
        if (a.agent_id == id) return &a;
    }
    return nullptr;
}

const ProvActivity* ProvBundle::generator_of(const std::string& entity_id) const {
    for (const auto& e : edges) {
        if (e.kind == EdgeKind::kWasGeneratedBy && e.entity_id == entity_id) {
            return find_activity(e.activity_id);
        }
    }
    return nullptr;
}

std::vector<const ProvEntity*> ProvBundle::used_by(const std::string& activity_id) const {
    std::vector<const ProvEntity*> out;
    for (const auto& e : edges) {
        if (e.kind == EdgeKind::kUsed && e.activity_id == activity_id) {
            if (const ProvEntity* ent = find_entity(e.entity_id)) out.push_back(ent);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const ProvEntity* a, const ProvEntity* b) { return a->entity_id < b->entity_id; });
    return out;
}

std::vector<const ProvEntity*> ProvBundle::generated_by(const std::string& activity_id) const {
    std::vector<const ProvEntity*> out;
    for (const auto& e : edges) {
        if (e.kind == EdgeKind::kWasGeneratedBy && e.activity_id == activity_id) {
            if (const ProvEntity* ent = find_entity(e.entity_id)) out.push_back(ent);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const ProvEntity* a, const ProvEntity* b) { return a->entity_id < b->entity_id; });
    return out;
}

std::vector<BundleIssue> validate_activity(const ProvActivity& activity) {
    std::vector<BundleIssue> issues;
    for (const auto& key : minimal_fields(activity.event_type)) {
        auto it = activity.fields.find(key);
        if (it == activity.fields.end() || it->second.empty()) {
            issues.push_back({BundleIssue::Kind::kMissingMinimalField,
                              "activity '" + activity.activity_id + "' (" +
                                  to_string(activity.event_type) + "): missing minimal field '" +
                                  key + "'"});
        }
    }
    if (!timestamp_parseable(activity.timestamp)) {
        issues.push_back({BundleIssue::Kind::kBadTimestamp,
                          "activity '" + activity.activity_id + "': unparseable timestamp '" +
                              activity.timestamp + "'"});
    }
    return issues;
}

std::vector<BundleIssue> ProvBundle::validate() const {
    std::vector<BundleIssue> issues;

    std::set<std::string> entity_ids, activity_ids, agent_ids;
    for (const auto& e : entities) {
        if (!entity_ids.insert(e.entity_id).second) {
            issues.push_back({BundleIssue::Kind::kDuplicateId,
                              "duplicate entity_id '" + e.entity_id + "'"});
        }
        if (e.hash.empty()) {
            issues.push_back({BundleIssue::Kind::kEmptyHash,
                              "entity '" + e.entity_id + "' has an empty hash"});
        }
    }
    for (const auto& a : activities) {
        if (!activity_ids.insert(a.activity_id).second) {
            issues.push_back({BundleIssue::Kind::kDuplicateId,
                              "duplicate activity_id '" + a.activity_id + "'"});
        }
        auto act_issues = validate_activity(a);
        issues.insert(issues.end(), act_issues.begin(), act_issues.end());
    }
    for (const auto& g : agents) {
        if (!agent_ids.insert(g.agent_id).second) {
            issues.push_back(
                {BundleIssue::Kind::kDuplicateId, "duplicate agent_id '" + g.agent_id + "'"});
        }
    }
    for (const auto& a : activities) {
        if (a.agent_id.empty() || !agent_ids.count(a.agent_id)) {
            issues.push_back({BundleIssue::Kind::kMissingAgent,
                              "activity '" + a.activity_id + "' has no known agent ('" +
                                  a.agent_id + "')"});
        }
    }

    std::map<std::string, int> generator_count;
    for (const auto& e : edges) {
        if (!activity_ids.count(e.activity_id)) {
            issues.push_back({BundleIssue::Kind::kDanglingEdge,
                              "edge references unknown activity '" + e.activity_id + "'"});
        }
        if (!entity_ids.count(e.entity_id)) {
            issues.push_back({BundleIssue::Kind::kDanglingEdge,
                              "edge references unknown entity '" + e.entity_id + "'"});
        }
        if (e.kind == EdgeKind::kWasGeneratedBy) ++generator_count[e.entity_id];
    }
    for (const auto& [entity_id, count] : generator_count) {
        if (count > 1) {
            issues.push_back({BundleIssue::Kind::kMultipleGenerators,
                              "entity '" + entity_id + "' has " + std::to_string(count) +
                                  " generating activities"});
        }
    }

    // Cycle detection over entity -> generator -> used entities.
    enum class Mark { kNone, kActive, kDone };
    std::map<std::string, Mark> marks;
    std::vector<std::string> cycle_hits;
    std::function<bool(const std::string&)> visit = [&](const std::string& entity_id) -> bool {
        Mark& m = marks[entity_id];
        if (m == Mark::kActive) return true;
        if (m == Mark::kDone) return false;
        m = Mark::kActive;
        bool found = false;
        if (const ProvActivity* gen = generator_of(entity_id)) {
            for (const ProvEntity* used : used_by(gen->activity_id)) {
                if (visit(used->entity_id)) {
                    found = true;
                    break;
                }
            }
        }
        m = Mark::kDone;
        if (found) cycle_hits.push_back(entity_id);
        return found;
    };
    for (const auto& e : entities) {
        marks.clear();
        cycle_hits.clear();
        if (visit(e.entity_id)) {
            issues.push_back({BundleIssue::Kind::kCycle,
                              "lineage cycle through entity '" + e.entity_id + "'"});
        }
    }

    return issues;
}

namespace {

json load_json_file(const std::filesystem::path& path, std::vector<BundleIssue>& issues) {
    std::ifstream in(path);
    if (!in) {
        issues.push_back({BundleIssue::Kind::kUnparseableFile,
                          "missing bundle file " + path.filename().string()});
        return json();
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        issues.push_back({BundleIssue::Kind::kUnparseableFile,
                          path.filename().string() + ": " + e.what()});
        return json();
    }
}

}  // namespace

BundleLoad load_bundle(const std::filesystem::path& dir) {
    BundleLoad out;
    auto& issues = out.issues;
    auto& bundle = out.bundle;

    json je = load_json_file(dir / "entities.json", issues);
    if (je.contains("entities")) {
        for (const auto& j : je["entities"]) {
            try {
                ProvEntity e;
                e.entity_id = j.at("entity_id").get<std::string>();
                auto layer = entity_layer_from_string(j.value("layer", "data"));
                e.layer = layer.value_or(EntityLayer::kData);
                if (!layer) {
                    issues.push_back({BundleIssue::Kind::kUnparseableFile,
                                      "entity '" + e.entity_id + "': unknown layer"});
                }
                e.hash = j.value("hash", "");
                e.version_label = j.value("version_label", "");
                e.path = j.value("path", "");
                bundle.entities.push_back(std::move(e));
            } catch (const json::exception& e) {
                issues.push_back({BundleIssue::Kind::kUnparseableFile,
                                  std::string("entities.json: ") + e.what()});
            }
        }
    }

    json ja = load_json_file(dir / "activities.json", issues);
    if (ja.contains("activities")) {
        for (const auto& j : ja["activities"]) {
            try {
                ProvActivity a;
                a.activity_id = j.at("activity_id").get<std::string>();
                auto type = prov_event_type_from_string(j.value("event_type", ""));
                if (!type) {
                    issues.push_back({BundleIssue::Kind::kUnparseableFile,
                                      "activity '" + a.activity_id + "': unknown event_type '" +
                                          j.value("event_type", "") + "'"});
                    continue;
                }
                a.event_type = *type;
                a.timestamp = j.value("timestamp", "");
                a.agent_id = j.value("agent_id", "");
                if (j.contains("fields")) {
                    for (const auto& [k, v] : j["fields"].items()) {
                        a.fields[k] = v.is_string() ? v.get<std::string>() : v.dump();
                    }
                }
                bundle.activities.push_back(std::move(a));
            } catch (const json::exception& e) {
                issues.push_back({BundleIssue::Kind::kUnparseableFile,
                                  std::string("activities.json: ") + e.what()});
            }
        }
    }

    json jg = load_json_file(dir / "agents.json", issues);
    if (jg.contains("agents")) {
        for (const auto& j : jg["agents"]) {
            try {
                ProvAgent a;
                a.agent_id = j.at("agent_id").get<std::string>();
                a.name = j.value("name", "");
                a.role = j.value("role", "");
                bundle.agents.push_back(std::move(a));
            } catch (const json::exception& e) {
                issues.push_back({BundleIssue::Kind::kUnparseableFile,
                                  std::string("agents.json: ") + e.what()});
            }
        }
    }

    json jd = load_json_file(dir / "edges.json", issues);
    if (jd.contains("edges")) {
        for (const auto& j : jd["edges"]) {
            try {
                ProvEdge e;
                const std::string kind = j.at("kind").get<std::string>();
                if (kind == "used") {
                    e.kind = EdgeKind::kUsed;
                } else if (kind == "wasGeneratedBy") {
                    e.kind = EdgeKind::kWasGeneratedBy;
                } else {
                    issues.push_back({BundleIssue::Kind::kUnparseableFile,
                                      "edges.json: unknown edge kind '" + kind + "'"});
                    continue;
                }
                e.activity_id = j.at("activity_id").get<std::string>();
                e.entity_id = j.at("entity_id").get<std::string>();
                bundle.edges.push_back(std::move(e));
            } catch (const json::exception& e) {
                issues.push_back(
                    {BundleIssue::Kind::kUnparseableFile, std::string("edges.json: ") + e.what()});
            }
        }
    }

    json jc = load_json_file(dir / "checksums.json", issues);
    if (jc.contains("checksums")) {
        for (const auto& [file, hash] : jc["checksums"].items()) {
            bundle.bundle_checksums[file] = hash.is_string() ? hash.get<std::string>() : "";
        }
    }

    auto structural = bundle.validate();
    issues.insert(issues.end(), structural.begin(), structural.end());
    return out;
}

void ProvBundle::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    json je;
    je["entities"] = json::array();
    for (const auto& e : entities) {
        json j;
        j["entity_id"] = e.entity_id;
        j["layer"] = to_string(e.layer);
        j["hash"] = e.hash;
        j["version_label"] = e.version_label;
        if (!e.path.empty()) j["path"] = e.path;
        je["entities"].push_back(j);
    }

    json ja;
    ja["activities"] = json::array();
    for (const auto& a : activities) {
        json j;
        j["activity_id"] = a.activity_id;
        j["event_type"] = to_string(a.event_type);
        j["timestamp"] = a.timestamp;
        j["agent_id"] = a.agent_id;
        j["fields"] = a.fields;
        ja["activities"].push_back(j);
    }

    json jg;
    jg["agents"] = json::array();
    for (const auto& a : agents) {
        jg["agents"].push_back({{"agent_id", a.agent_id}, {"name", a.name}, {"role", a.role}});
    }

    json jd;
    jd["edges"] = json::array();
    for (const auto& e : edges) {
        jd["edges"].push_back({{"kind", e.kind == EdgeKind::kUsed ? "used" : "wasGeneratedBy"},
                               {"activity_id", e.activity_id},
                               {"entity_id", e.entity_id}});
    }

    // checksums.json records the sibling files' hashes, computed from the
    // bytes just written so the bundle is self-consistent by construction.
    std::map<std::string, std::string> sums;
    const auto dump = [&](const char* name, const json& j) {
        const std::string bytes = j.dump(2) + "\n";
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw ProvError(ProvError::Kind::kIo, std::string("cannot write ") + name);
        out << bytes;
        sums[name] = sha256_hex(bytes);
    };
    dump("entities.json", je);
    dump("activities.json", ja);
    dump("agents.json", jg);
    dump("edges.json", jd);
    json jc;
    jc["checksums"] = sums;
    dump("checksums.json", jc);
}

bool IntegrityReport::all_match_or_absent() const {
    for (const auto& e : entities) {
        if (e.status == HashStatus::kMismatch || e.status == HashStatus::kUnreadable) return false;
    }
    return true;
}

size_t IntegrityReport::count(HashStatus s) const {
    size_t n = 0;
    for (const auto& e : entities) {
        if (e.status == s) ++n;
    }
    return n;
}

IntegrityReport verify_hashes(const ProvBundle& bundle,
                              const std::filesystem::path& artifact_root) {
    std::vector<const ProvEntity*> sorted;
    sorted.reserve(bundle.entities.size());
    for (const auto& e : bundle.entities) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const ProvEntity* a, const ProvEntity* b) { return a->entity_id < b->entity_id; });

    IntegrityReport report;
    report.entities.resize(sorted.size());

    const auto check_one = [&](size_t i) {
        const ProvEntity& e = *sorted[i];
        EntityHashResult r;
        r.entity_id = e.entity_id;
        r.expected = e.hash;
        r.file = e.path.empty() ? e.entity_id : e.path;
        const std::filesystem::path target = artifact_root / r.file;
        std::error_code ec;
        if (!std::filesystem::is_regular_file(target, ec)) {
            r.status = HashStatus::kAbsent;
        } else {
            try {
                r.computed = sha256_file(target);
                r.status = r.computed == e.hash ? HashStatus::kMatch : HashStatus::kMismatch;
            } catch (const std::exception&) {
                r.status = HashStatus::kUnreadable;
            }
        }
        report.entities[i] = std::move(r);
    };

    // Per-entity hashing is independent; results land in preallocated slots
    // so the report order stays deterministic.
    const size_t workers = std::min<size_t>(sorted.size(), 8);
    if (workers > 1) {
        std::vector<std::future<void>> futures;
        for (size_t w = 0; w < workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&, w] {
                for (size_t i = w; i < sorted.size(); i += workers) check_one(i);
            }));
        }
        for (auto& f : futures) f.get();
    } else {
        for (size_t i = 0; i < sorted.size(); ++i) check_one(i);
    }
    return report;
}

LineageTree lineage(const ProvBundle& bundle, const std::string& entity_id) {
    const ProvEntity* root = bundle.find_entity(entity_id);
    if (!root) {
        throw ProvError(ProvError::Kind::kUnknownEntity, "unknown entity '" + entity_id + "'");
    }

    LineageTree tree;
    tree.root = root;

    // Walk backwards through generators, collecting ancestor activities.
    std::set<std::string> seen_entities, seen_activities;
    std::vector<const ProvActivity*> activities;
    std::function<void(const std::string&)> walk = [&](const std::string& id) {
        if (!seen_entities.insert(id).second) return;
        const ProvActivity* gen = bundle.generator_of(id);
        if (!gen) return;
        if (seen_activities.insert(gen->activity_id).second) activities.push_back(gen);
        for (const ProvEntity* used : bundle.used_by(gen->activity_id)) {
            walk(used->entity_id);
        }
    };
    walk(entity_id);

    // Topological order over the collected subgraph: an activity comes after
    // every activity that generated one of its used entities. Kahn's
    // algorithm with an id-ordered frontier makes the order deterministic.
    std::map<std::string, std::set<std::string>> deps;  // activity -> prerequisite activities
    for (const ProvActivity* a : activities) {
        auto& d = deps[a->activity_id];
        for (const ProvEntity* used : bundle.used_by(a->activity_id)) {
            if (const ProvActivity* up = bundle.generator_of(used->entity_id)) {
                if (seen_activities.count(up->activity_id)) d.insert(up->activity_id);
            }
        }
    }
    std::set<std::string> emitted;
    std::vector<const ProvActivity*> ordered;
    while (ordered.size() < activities.size()) {
        const ProvActivity* next = nullptr;
        for (const ProvActivity* a : activities) {
            if (emitted.count(a->activity_id)) continue;
            bool ready = true;
            for (const auto& d : deps[a->activity_id]) {
                if (!emitted.count(d)) {
                    ready = false;
                    break;
                }
            }
            if (ready && (!next || a->activity_id < next->activity_id)) next = a;
        }
        if (!next) break;  // cycle; validate() reports it
        emitted.insert(next->activity_id);
        ordered.push_back(next);
    }

    for (const ProvActivity* a : ordered) {
        LineageStep step;
        step.activity = a;
        step.agent = bundle.find_agent(a->agent_id);
        step.used = bundle.used_by(a->activity_id);
        step.generated = bundle.generated_by(a->activity_id);
        tree.steps.push_back(std::move(step));
    }

    seen_entities.erase(entity_id);
    for (const auto& id : seen_entities) {
        if (const ProvEntity* e = bundle.find_entity(id)) tree.ancestor_entities.push_back(e);
    }
    std::sort(tree.ancestor_entities.begin(), tree.ancestor_entities.end(),
              [](const ProvEntity* a, const ProvEntity* b) { return a->entity_id < b->entity_id; });
    return tree;
}

ProvDiff diff_versions(const ProvBundle& bundle, const std::string& entity_a,
                       const std::string& entity_b) {
    LineageTree ta = lineage(bundle, entity_a);
    LineageTree tb = lineage(bundle, entity_b);

    const auto activity_ids = [](const LineageTree& t) {
        std::set<std::string> out;
        for (const auto& s : t.steps) out.insert(s.activity->activity_id);
        return out;
    };
    const auto entity_ids = [](const LineageTree& t) {
        std::set<std::string> out;
        for (const auto* e : t.ancestor_entities) out.insert(e->entity_id);
        out.insert(t.root->entity_id);
        return out;
    };

    const auto acts_a = activity_ids(ta), acts_b = activity_ids(tb);
    const auto ents_a = entity_ids(ta), ents_b = entity_ids(tb);

    ProvDiff diff;
    std::set_difference(acts_a.begin(), acts_a.end(), acts_b.begin(), acts_b.end(),
                        std::back_inserter(diff.activities_only_a));
    std::set_difference(acts_b.begin(), acts_b.end(), acts_a.begin(), acts_a.end(),
                        std::back_inserter(diff.activities_only_b));
    std::set_difference(ents_a.begin(), ents_a.end(), ents_b.begin(), ents_b.end(),
                        std::back_inserter(diff.entities_only_a));
    std::set_difference(ents_b.begin(), ents_b.end(), ents_a.begin(), ents_a.end(),
                        std::back_inserter(diff.entities_only_b));

    // Pair up exclusive activities of the same event type when each side has
    // exactly one, and report changed field values.
    for (int i = 0; i < kNumProvEventTypes; ++i) {
        const auto type = static_cast<ProvEventType>(i);
        const auto single_of_type = [&](const std::vector<std::string>& ids) {
            const ProvActivity* found = nullptr;
            for (const auto& id : ids) {
                const ProvActivity* a = bundle.find_activity(id);
                if (a && a->event_type == type) {
                    if (found) return static_cast<const ProvActivity*>(nullptr);
                    found = a;
                }
            }
            return found;
        };
        const ProvActivity* a = single_of_type(diff.activities_only_a);
        const ProvActivity* b = single_of_type(diff.activities_only_b);
        if (!a || !b) continue;
        std::set<std::string> keys;
        for (const auto& [k, _] : a->fields) keys.insert(k);
        for (const auto& [k, _] : b->fields) keys.insert(k);
        for (const auto& k : keys) {
            const auto ita = a->fields.find(k);
            const auto itb = b->fields.find(k);
            const std::string va = ita == a->fields.end() ? "" : ita->second;
            const std::string vb = itb == b->fields.end() ? "" : itb->second;
            if (va != vb) {
                diff.field_changes.push_back({a->activity_id, b->activity_id, type, k, va, vb});
            }
        }
    }
    return diff;
}

}  // namespace relgate
