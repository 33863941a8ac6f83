#include "relgate/leakage.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <future>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "relgate/hashing.hpp"

using nlohmann::json;

namespace relgate {

std::string to_string(SimMethod m) {
    switch (m) {
        case SimMethod::kTokenJaccard: return "token_jaccard";
        case SimMethod::kCharNgramJaccard: return "char_ngram_jaccard";
        case SimMethod::kMinhashEstimate: return "minhash_estimate";
    }
    return "char_ngram_jaccard";
}

std::optional<SimMethod> sim_method_from_string(const std::string& s) {
    if (s == "token_jaccard") return SimMethod::kTokenJaccard;
    if (s == "char_ngram_jaccard") return SimMethod::kCharNgramJaccard;
    if (s == "minhash_estimate") return SimMethod::kMinhashEstimate;
    return std::nullopt;
}

void SimilarityConfig::validate() const {
    if (ngram < 2) {
        throw LeakageError(LeakageError::Kind::kBadConfig, "ngram must be >= 2");
    }
    if (minhash_k < 16) {
        throw LeakageError(LeakageError::Kind::kBadConfig, "minhash_k must be >= 16");
    }
    if (bands < 1 || rows < 1 || bands * rows != minhash_k) {
        throw LeakageError(LeakageError::Kind::kBadConfig,
                           "bands * rows must equal minhash_k");
    }
    if (thresholds.empty()) {
        throw LeakageError(LeakageError::Kind::kBadConfig, "no thresholds configured");
    }
    double prev = 0.0;
    for (double t : thresholds) {
        if (t <= prev || t > 1.0) {
            throw LeakageError(LeakageError::Kind::kBadConfig,
                               "thresholds must be strictly increasing within (0, 1]");
        }
        prev = t;
    }
}

std::vector<uint64_t> char_ngram_shingles(const std::string& text, int n) {
    std::vector<uint64_t> shingles;
    if (text.empty()) return shingles;
    if (static_cast<int>(text.size()) <= n) {
        shingles.push_back(fnv1a64(text.data(), text.size()));
        return shingles;
    }
    shingles.reserve(text.size() - n + 1);
    for (size_t i = 0; i + n <= text.size(); ++i) {
        shingles.push_back(fnv1a64(text.data() + i, static_cast<size_t>(n)));
    }
    std::sort(shingles.begin(), shingles.end());
    shingles.erase(std::unique(shingles.begin(), shingles.end()), shingles.end());
    return shingles;
}

std::vector<uint64_t> token_shingles(const std::string& text) {
    std::vector<uint64_t> shingles;
    std::string token;
    const auto flush = [&] {
        if (!token.empty()) {
            shingles.push_back(fnv1a64(token.data(), token.size()));
            token.clear();
        }
    };
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            token.push_back(static_cast<char>(std::tolower(u)));
        } else {
            flush();
        }
    }
    flush();
    std::sort(shingles.begin(), shingles.end());
    shingles.erase(std::unique(shingles.begin(), shingles.end()), shingles.end());
    return shingles;
}

double exact_jaccard(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    size_t i = 0, j = 0, both = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++both;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const size_t either = a.size() + b.size() - both;
    return static_cast<double>(both) / static_cast<double>(either);
}

std::vector<uint64_t> minhash_signature(const std::vector<uint64_t>& shingles, int k,
                                        uint64_t seed) {
    std::vector<uint64_t> sig(static_cast<size_t>(k), UINT64_MAX);
    std::vector<uint64_t> keys(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
        keys[i] = mix64(seed + static_cast<uint64_t>(i) * 0x517cc1b727220a95ULL);
    }
    for (uint64_t g : shingles) {
        for (int i = 0; i < k; ++i) {
            const uint64_t h = mix64(g ^ keys[i]);
            if (h < sig[i]) sig[i] = h;
        }
    }
    return sig;
}

double minhash_agreement(const std::vector<uint64_t>& sig_a, const std::vector<uint64_t>& sig_b) {
    size_t match = 0;
    for (size_t i = 0; i < sig_a.size(); ++i) {
        if (sig_a[i] == sig_b[i]) ++match;
    }
    return sig_a.empty() ? 1.0 : static_cast<double>(match) / static_cast<double>(sig_a.size());
}

double similarity(const std::string& a, const std::string& b, const SimilarityConfig& cfg) {
    cfg.validate();
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    switch (cfg.method) {
        case SimMethod::kTokenJaccard:
            return exact_jaccard(token_shingles(a), token_shingles(b));
        case SimMethod::kCharNgramJaccard:
            return exact_jaccard(char_ngram_shingles(a, cfg.ngram),
                                 char_ngram_shingles(b, cfg.ngram));
        case SimMethod::kMinhashEstimate: {
            const auto sa = minhash_signature(char_ngram_shingles(a, cfg.ngram), cfg.minhash_k,
                                              cfg.hash_seed);
            const auto sb = minhash_signature(char_ngram_shingles(b, cfg.ngram), cfg.minhash_k,
                                              cfg.hash_seed);
            return minhash_agreement(sa, sb);
        }
    }
    return 0.0;
}

OverlapReport patient_overlap(const Corpus& corpus, const SplitManifest& split) {
    std::map<std::string, std::pair<std::set<std::string>, std::vector<std::string>>> by_patient;
    for (const Note& note : corpus.notes()) {
        auto it = split.assignment.find(note.note_id);
        if (it == split.assignment.end()) continue;
        auto& [splits, note_ids] = by_patient[note.patient_id];
        splits.insert(to_string(it->second));
        note_ids.push_back(note.note_id);
    }
    OverlapReport report;
    for (auto& [patient_id, info] : by_patient) {
        if (info.first.size() > 1) {
            std::sort(info.second.begin(), info.second.end());
            report.patients.push_back(
                {patient_id, {info.first.begin(), info.first.end()}, std::move(info.second)});
        }
    }
    return report;
}

namespace {

struct IndexedNote {
    const Note* note;
    std::vector<uint64_t> shingles;
};

std::vector<IndexedNote> collect_split(const Corpus& corpus, const SplitManifest& split,
                                       Split which, const SimilarityConfig& cfg) {
    std::vector<const Note*> picked;
    for (const Note& note : corpus.notes()) {
        auto it = split.assignment.find(note.note_id);
        if (it != split.assignment.end() && it->second == which) picked.push_back(&note);
    }
    std::sort(picked.begin(), picked.end(),
              [](const Note* a, const Note* b) { return a->note_id < b->note_id; });
    std::vector<IndexedNote> out(picked.size());
    for (size_t i = 0; i < picked.size(); ++i) {
        out[i].note = picked[i];
        out[i].shingles = cfg.method == SimMethod::kTokenJaccard
                              ? token_shingles(picked[i]->text)
                              : char_ngram_shingles(picked[i]->text, cfg.ngram);
    }
    return out;
}

// Banded LSH buckets over train signatures: one table per band keyed by the
// hashed row slice.
struct BandIndex {
    int bands;
    int rows;
    std::vector<std::unordered_map<uint64_t, std::vector<size_t>>> tables;

    uint64_t band_key(const std::vector<uint64_t>& sig, int band) const {
        return fnv1a64(reinterpret_cast<const char*>(sig.data() + band * rows),
                       sizeof(uint64_t) * static_cast<size_t>(rows));
    }

    void insert(const std::vector<uint64_t>& sig, size_t index) {
        for (int b = 0; b < bands; ++b) {
            tables[static_cast<size_t>(b)][band_key(sig, b)].push_back(index);
        }
    }

    std::vector<size_t> candidates(const std::vector<uint64_t>& sig) const {
        std::vector<size_t> out;
        for (int b = 0; b < bands; ++b) {
            auto it = tables[static_cast<size_t>(b)].find(band_key(sig, b));
            if (it != tables[static_cast<size_t>(b)].end()) {
                out.insert(out.end(), it->second.begin(), it->second.end());
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

template <typename Fn>
void parallel_over(size_t n, Fn&& fn) {
    const size_t workers = std::min<size_t>(std::max<size_t>(n / 64, 1), 8);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::future<void>> futures;
    for (size_t w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w] {
            for (size_t i = w; i < n; i += workers) fn(i);
        }));
    }
    for (auto& f : futures) f.get();
}

}  // namespace

LeakCurve leak_curve(const Corpus& corpus, const SplitManifest& split,
                     const SimilarityConfig& cfg) {
    cfg.validate();
    auto train = collect_split(corpus, split, Split::kTrain, cfg);
    auto test = collect_split(corpus, split, Split::kTest, cfg);
    if (train.empty() || test.empty()) {
        throw LeakageError(LeakageError::Kind::kEmptyPartition,
                           "leak_curve: train and test must both be nonempty");
    }

    // Best train match per test note: similarity first, then smallest id.
    std::vector<Offender> best(test.size());

    if (cfg.method == SimMethod::kMinhashEstimate) {
        std::vector<std::vector<uint64_t>> train_sigs(train.size());
        parallel_over(train.size(), [&](size_t i) {
            train_sigs[i] = minhash_signature(train[i].shingles, cfg.minhash_k, cfg.hash_seed);
        });
        BandIndex index{cfg.bands, cfg.rows, {}};
        index.tables.resize(static_cast<size_t>(cfg.bands));
        for (size_t i = 0; i < train.size(); ++i) index.insert(train_sigs[i], i);

        parallel_over(test.size(), [&](size_t t) {
            const auto sig = minhash_signature(test[t].shingles, cfg.minhash_k, cfg.hash_seed);
            Offender o{test[t].note->note_id, "", 0.0};
            for (size_t i : index.candidates(sig)) {
                // Candidates are re-scored with the exact n-gram Jaccard.
                const double s = exact_jaccard(test[t].shingles, train[i].shingles);
                if (s > o.similarity ||
                    (s == o.similarity && !o.train_note_id.empty() &&
                     train[i].note->note_id < o.train_note_id)) {
                    o.similarity = s;
                    o.train_note_id = train[i].note->note_id;
                }
            }
            best[t] = std::move(o);
        });
    } else {
        parallel_over(test.size(), [&](size_t t) {
            Offender o{test[t].note->note_id, "", 0.0};
            for (const auto& tr : train) {
                const double s = exact_jaccard(test[t].shingles, tr.shingles);
                if (s > o.similarity ||
                    (s == o.similarity && !o.train_note_id.empty() && s > 0.0 &&
                     tr.note->note_id < o.train_note_id)) {
                    o.similarity = s;
                    o.train_note_id = tr.note->note_id;
                }
            }
            best[t] = std::move(o);
        });
    }

    LeakCurve curve;
    curve.n_test = static_cast<int64_t>(test.size());
    curve.n_train = static_cast<int64_t>(train.size());
    for (const Offender& o : best) {
        if (o.similarity > 0.0 && !o.train_note_id.empty()) {
            curve.best_match[o.test_note_id] = o;
        }
    }
    for (double tau : cfg.thresholds) {
        LeakCurvePoint point;
        point.threshold = tau;
        std::vector<Offender> over;
        for (const Offender& o : best) {
            if (o.similarity >= tau && !o.train_note_id.empty()) over.push_back(o);
        }
        std::sort(over.begin(), over.end(), [](const Offender& a, const Offender& b) {
            return a.test_note_id < b.test_note_id;
        });
        point.count = static_cast<int64_t>(over.size());
        point.l = static_cast<double>(point.count) / static_cast<double>(curve.n_test);
        curve.points.push_back(point);
        curve.offenders.push_back(std::move(over));
    }
    return curve;
}

std::string LeakCurve::to_dat() const {
    std::ostringstream out;
    out << "threshold pct\n";
    for (const auto& p : points) {
        char line[64];
        std::snprintf(line, sizeof(line), "%.2f %.2f\n", p.threshold, 100.0 * p.l);
        out << line;
    }
    return out.str();
}

LeakageAuditRecord audit_splits(const Corpus& corpus, const SplitManifest& split,
                                const SimilarityConfig& cfg, const Disclosure& label_leakage,
                                const Disclosure& contamination) {
    LeakageAuditRecord record;
    record.corpus_hash = corpus.content_hash();
    record.split_hash = split.content_hash();
    record.split_key = split.split_key;
    record.seed = split.seed;
    record.config = cfg;
    record.overlap = patient_overlap(corpus, split);
    record.curve = leak_curve(corpus, split, cfg);
    record.label_leakage = label_leakage;
    record.contamination = contamination;
    record.disclosures_required = !(label_leakage.declared && contamination.declared);
    record.audit_passed =
        record.overlap.empty() && record.curve.offenders.back().empty();
    return record;
}

std::string LeakageAuditRecord::to_json() const {
    json j;
    j["corpus_hash"] = corpus_hash;
    j["split_hash"] = split_hash;
    j["split_key"] = relgate::to_string(split_key);
    j["seed"] = seed;
    j["config"] = {{"method", relgate::to_string(config.method)},
                   {"ngram", config.ngram},
                   {"minhash_k", config.minhash_k},
                   {"bands", config.bands},
                   {"rows", config.rows},
                   {"thresholds", config.thresholds}};
    json overlap_json = json::array();
    for (const auto& p : overlap.patients) {
        overlap_json.push_back(
            {{"patient_id", p.patient_id}, {"splits", p.splits}, {"note_ids", p.note_ids}});
    }
    j["patient_overlap"] = overlap_json;
    j["n_test"] = curve.n_test;
    j["n_train"] = curve.n_train;
    json points = json::array();
    for (const auto& p : curve.points) {
        points.push_back({{"threshold", p.threshold}, {"l", p.l}, {"count", p.count}});
    }
    j["curve"] = points;
    json offender_json = json::array();
    for (size_t i = 0; i < curve.offenders.size(); ++i) {
        json level = json::array();
        for (const auto& o : curve.offenders[i]) {
            level.push_back({{"test_note_id", o.test_note_id},
                             {"train_note_id", o.train_note_id},
                             {"similarity", o.similarity}});
        }
        offender_json.push_back(
            {{"threshold", curve.points[i].threshold}, {"offenders", level}});
    }
    j["offenders"] = offender_json;
    j["disclosures"] = {
        {"label_leakage",
         {{"declared", label_leakage.declared}, {"justification", label_leakage.justification}}},
        {"contamination",
         {{"declared", contamination.declared}, {"justification", contamination.justification}}}};
    j["disclosures_required"] = disclosures_required;
    j["audit_passed"] = audit_passed;
    return j.dump();
}

std::string LeakageAuditRecord::record_hash() const { return sha256_hex(to_json()); }

ProvActivity leakage_provenance_activity(const LeakageAuditRecord& record,
                                         const std::string& activity_id,
                                         const std::string& agent_id,
                                         const std::string& timestamp) {
    ProvActivity activity;
    activity.activity_id = activity_id;
    activity.event_type = ProvEventType::kSplitSampling;
    activity.timestamp = timestamp;
    activity.agent_id = agent_id;
    activity.fields["split_key"] = to_string(record.split_key);
    activity.fields["random_seed"] = std::to_string(record.seed);
    std::ostringstream summary;
    summary << (record.audit_passed ? "pass" : "fail") << "; overlap_patients="
            << record.overlap.patients.size();
    for (const auto& p : record.curve.points) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "; L(%.2f)=%.4f", p.threshold, p.l);
        summary << buf;
    }
    activity.fields["leakage_audit_results"] = summary.str();
    activity.fields["output_hash"] = record.record_hash();
    return activity;
}

}  // namespace relgate
