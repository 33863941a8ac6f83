#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relgate/corpus.hpp"

namespace relgate {

struct MetricError : std::runtime_error {
    enum class Kind {
        kUnknownField,
        kEmptyPeriod,
        kFeatureUnavailable,
        kInvalidPattern,
        kBadArgument,
    };
    Kind kind;
    MetricError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// ---------------------------------------------------------------------------
// Missingness
// ---------------------------------------------------------------------------

/// Note fields whose absence/emptiness can be profiled.
/// Supported names: admission_year, quality_score, icd_codes, phi_spans,
/// note_type, source, text.
bool note_field_missing(const Note& note, const std::string& field);
const std::vector<std::string>& known_missingness_fields();

enum class MissingnessKind { kStructural, kIncidental };

/// Marks fields as inapplicable for given note types; absence of an
/// inapplicable field counts as structural rather than incidental.
struct StructuralRules {
    // field -> note type strings for which the field does not exist
    std::map<std::string, std::vector<std::string>> inapplicable;

    bool is_structural(const std::string& field, const NoteType& type) const;
};

struct FieldMissingness {
    size_t n = 0;
    size_t missing = 0;
    size_t structural = 0;
    size_t incidental = 0;
    double rate = 0.0;
    MissingnessKind kind = MissingnessKind::kIncidental;
};

struct MissingnessProfile {
    std::vector<std::string> fields;  // requested order
    std::map<std::string, FieldMissingness> per_field;
    // stratum value -> field -> stats; present when strata_by was given
    std::map<std::string, std::map<std::string, FieldMissingness>> strata;
    std::string strata_by;

    /// `field pct` rows in requested field order.
    std::string to_dat() const;
};

/// strata_by may be empty, "note_type" or "admission_year".
MissingnessProfile missingness(const Corpus& corpus, const std::vector<std::string>& fields,
                               const std::string& strata_by = "",
                               const StructuralRules& rules = {});

// ---------------------------------------------------------------------------
// PSI drift
// ---------------------------------------------------------------------------

enum class DriftFeature { kIcdHistogram, kNoteTypeHistogram, kLengthHistogram };

std::string to_string(DriftFeature f);
std::optional<DriftFeature> drift_feature_from_string(const std::string& s);

using Histogram = std::map<std::string, double>;  // bin label -> count

/// PSI over the union of bins with symmetric additive smoothing (1e-6) on
/// bins missing from either side, then renormalization.
double population_stability_index(const Histogram& baseline, const Histogram& current);

struct DriftTracePoint {
    std::string period;
    double psi = 0.0;
};

struct PsiTrace {
    DriftFeature feature = DriftFeature::kIcdHistogram;
    std::string baseline_period;
    std::vector<DriftTracePoint> points;
    Histogram baseline_histogram;
    std::map<std::string, Histogram> period_histograms;

    /// `year psi` rows (psi to 6 decimals).
    std::string to_dat() const;
};

/// Periods are admission years rendered as strings ("2010"). Empty periods
/// and corpora without the feature raise MetricError.
PsiTrace psi_trace(const Corpus& corpus, DriftFeature feature, const std::string& baseline_period,
                   const std::vector<std::string>& periods);

/// Token-count histogram in fixed 100-token bins up to 2000 plus overflow;
/// labels are bin midpoints. Used for kLengthHistogram and `bin_mid count`.
Histogram length_histogram(const Corpus& corpus);
std::string length_histogram_to_dat(const Histogram& hist);

size_t token_count(const std::string& text);

// ---------------------------------------------------------------------------
// PHI residual-risk proxy
// ---------------------------------------------------------------------------

/// Pattern families per PHI category. Expressions are ECMAScript regexes;
/// compile() must be called (construction from json does it) before scans.
class PatternSet {
public:
    PatternSet() = default;
    explicit PatternSet(std::map<std::string, std::vector<std::string>> categories);

    static PatternSet defaults();
    static PatternSet from_json_text(const std::string& text);
    static PatternSet from_file(const std::filesystem::path& path);

    std::string to_json() const;
    const std::map<std::string, std::vector<std::string>>& categories() const {
        return categories_;
    }
    /// SHA-256 of the canonical JSON form; recorded with scan results.
    std::string config_hash() const;

    /// Distinct categories with at least one match in the text.
    int categories_matched(const std::string& text) const;

private:
    std::map<std::string, std::vector<std::string>> categories_;
    struct Compiled;
    std::shared_ptr<const std::vector<Compiled>> compiled_;
    void compile();
};

constexpr int kMaxPhiRisk = 8;

struct PhiRiskResult {
    std::map<std::string, int> per_note;  // note_id -> risk in [0, 8]
    double mean_proxy = 0.0;
    double frac_high_risk = 0.0;
    int threshold = 3;
    std::vector<int64_t> histogram;  // counts for risks 0..8

    struct SamplingPlan {
        size_t sample_size = 0;
        uint64_t seed = 0;
        std::vector<std::string> note_ids;  // descending risk, seeded ties
    } sampling_plan;

    std::string patterns_hash;

    /// `risk count` rows for risks 0..8.
    std::string to_dat() const;
};

PhiRiskResult phi_risk_scan(const Corpus& corpus, const PatternSet& patterns,
                            int high_risk_threshold, size_t sample_size, uint64_t seed);

}  // namespace relgate
