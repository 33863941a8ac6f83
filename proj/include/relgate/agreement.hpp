#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace relgate {

enum class AgreementStatistic { kCohenKappa, kFleissKappa };

std::string to_string(AgreementStatistic s);

struct AgreementError : std::runtime_error {
    enum class Kind { kLengthMismatch, kEmpty, kDegenerateMarginals, kRaggedRatings, kBadArgument };
    Kind kind;
    AgreementError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct BootstrapConfig {
    int replicates = 1000;
    uint64_t seed = 0;
    double confidence = 0.95;
};

struct AgreementResult {
    AgreementStatistic statistic = AgreementStatistic::kCohenKappa;
    double value = 0.0;
    double p_observed = 0.0;
    double p_expected = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    size_t n_items = 0;
    size_t n_raters = 0;
    int bootstrap_replicates = 0;
    uint64_t seed = 0;
};

/// Cohen's kappa for two raters over categorical labels, with a seeded
/// percentile bootstrap over items. Labels are arbitrary strings; the value
/// is invariant under relabeling.
AgreementResult cohen_kappa(const std::vector<std::string>& labels_a,
                            const std::vector<std::string>& labels_b,
                            const BootstrapConfig& bootstrap = {});

/// Point estimate only, from a square confusion-count matrix.
double cohen_kappa_from_counts(const std::vector<std::vector<int64_t>>& confusion);

/// Fleiss' kappa over an items x categories matrix of rater counts. Every
/// row must sum to the same rater count (>= 2); a single item is an error
/// since chance agreement is degenerate.
AgreementResult fleiss_kappa(const std::vector<std::vector<int64_t>>& ratings,
                             const BootstrapConfig& bootstrap = {});

}  // namespace relgate
