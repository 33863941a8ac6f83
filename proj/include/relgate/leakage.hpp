#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "relgate/corpus.hpp"
#include "relgate/provenance.hpp"

namespace relgate {

struct LeakageError : std::runtime_error {
    enum class Kind { kBadConfig, kEmptyPartition };
    Kind kind;
    LeakageError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

enum class SimMethod { kTokenJaccard, kCharNgramJaccard, kMinhashEstimate };

std::string to_string(SimMethod m);
std::optional<SimMethod> sim_method_from_string(const std::string& s);

struct SimilarityConfig {
    SimMethod method = SimMethod::kCharNgramJaccard;
    int ngram = 5;        // char n-gram size, >= 2
    int minhash_k = 128;  // signature length, >= 16
    int bands = 32;
    int rows = 4;  // bands * rows == minhash_k
    uint64_t hash_seed = 0x9e3779b97f4a7c15ULL;
    std::vector<double> thresholds = {0.30, 0.50, 0.70, 0.85};

    void validate() const;  // throws LeakageError on bad settings
};

/// Pairwise text similarity under cfg.method. Symmetric; identical texts
/// give 1.0; one-sided empty text gives 0.0 and both-empty gives 1.0.
/// kMinhashEstimate returns the unbiased signature estimate of the exact
/// char n-gram Jaccard.
double similarity(const std::string& a, const std::string& b, const SimilarityConfig& cfg);

/// Shingle sets and minhash signatures, exposed for candidate generation
/// and the estimator-bias tests.
std::vector<uint64_t> char_ngram_shingles(const std::string& text, int n);
std::vector<uint64_t> token_shingles(const std::string& text);
double exact_jaccard(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);
std::vector<uint64_t> minhash_signature(const std::vector<uint64_t>& shingles, int k,
                                        uint64_t seed);
double minhash_agreement(const std::vector<uint64_t>& sig_a, const std::vector<uint64_t>& sig_b);

struct OverlapEntry {
    std::string patient_id;
    std::vector<std::string> splits;    // split names the patient appears in
    std::vector<std::string> note_ids;  // the patient's assigned notes
};

struct OverlapReport {
    std::vector<OverlapEntry> patients;  // sorted by patient_id
    bool empty() const { return patients.empty(); }
};

/// Patients whose assigned notes span more than one split.
OverlapReport patient_overlap(const Corpus& corpus, const SplitManifest& split);

struct Offender {
    std::string test_note_id;
    std::string train_note_id;  // best match: highest similarity, then smallest id
    double similarity = 0.0;
};

struct LeakCurvePoint {
    double threshold = 0.0;
    double l = 0.0;  // fraction of test notes with max similarity >= threshold
    int64_t count = 0;
};

struct LeakCurve {
    std::vector<LeakCurvePoint> points;               // one per configured threshold
    std::map<std::string, Offender> best_match;       // per test note with max sim > 0
    std::vector<std::vector<Offender>> offenders;     // per threshold, sorted by id
    int64_t n_test = 0;
    int64_t n_train = 0;

    /// `threshold pct` rows, both to 2 decimals.
    std::string to_dat() const;
};

/// Leakage curve of test-vs-train maximum similarities. Exact for the
/// Jaccard methods (all pairs); kMinhashEstimate generates banded LSH
/// candidates and re-scores them with the exact n-gram Jaccard, so reported
/// similarities are exact over detected candidates.
LeakCurve leak_curve(const Corpus& corpus, const SplitManifest& split,
                     const SimilarityConfig& cfg);

struct Disclosure {
    bool declared = false;
    std::string justification;
};

struct LeakageAuditRecord {
    std::string corpus_hash;
    std::string split_hash;
    SplitKey split_key = SplitKey::kPatient;
    int64_t seed = 0;
    SimilarityConfig config;
    OverlapReport overlap;
    LeakCurve curve;
    Disclosure label_leakage;    // declared, not computed
    Disclosure contamination;    // declared, not computed
    bool disclosures_required = true;
    bool audit_passed = false;

    std::string to_json() const;  // canonical, without record_hash
    std::string record_hash() const;
};

/// Runs patient overlap + the leakage curve and wraps them in an audit
/// record. The audit passes when no patient spans splits and no test note
/// reaches the highest configured threshold.
LeakageAuditRecord audit_splits(const Corpus& corpus, const SplitManifest& split,
                                const SimilarityConfig& cfg, const Disclosure& label_leakage = {},
                                const Disclosure& contamination = {});

/// The audit logged as a split_sampling provenance activity; the record
/// hash is embedded as output_hash.
ProvActivity leakage_provenance_activity(const LeakageAuditRecord& record,
                                         const std::string& activity_id,
                                         const std::string& agent_id,
                                         const std::string& timestamp);

}  // namespace relgate
