#include "relgate/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace relgate {

std::string to_string(AgreementStatistic s) {
    return s == AgreementStatistic::kCohenKappa ? "cohen_kappa" : "fleiss_kappa";
}

namespace {

struct KappaPoint {
    double value;
    double p_o;
    double p_e;
};

// Cohen point estimate over paired category ids. p_o and p_e are exact
// rationals evaluated in integer arithmetic before the final division.
KappaPoint cohen_point(const std::vector<int>& a, const std::vector<int>& b, int n_categories,
                       bool throw_on_degenerate) {
    const int64_t n = static_cast<int64_t>(a.size());
    std::vector<int64_t> row(n_categories, 0), col(n_categories, 0);
    int64_t agree = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ++row[a[i]];
        ++col[b[i]];
        if (a[i] == b[i]) ++agree;
    }
    int64_t expected_num = 0;  // sum_k row_k * col_k, over denominator n^2
    for (int k = 0; k < n_categories; ++k) expected_num += row[k] * col[k];

    const double p_o = static_cast<double>(agree) / static_cast<double>(n);
    const double p_e = static_cast<double>(expected_num) / (static_cast<double>(n) * n);
    if (expected_num == n * n) {
        // Both raters constant: kappa is 1 when they agree, undefined otherwise.
        if (agree == n) return {1.0, p_o, p_e};
        if (throw_on_degenerate) {
            throw AgreementError(AgreementError::Kind::kDegenerateMarginals,
                                 "degenerate marginals: chance agreement is 1");
        }
        return {1.0, p_o, p_e};
    }
    const double num = static_cast<double>(agree * n - expected_num);
    const double den = static_cast<double>(n * n - expected_num);
    return {num / den, p_o, p_e};
}

struct FleissPoint {
    double value;
    double p_bar;
    double p_e;
};

FleissPoint fleiss_point(const std::vector<std::vector<int64_t>>& rows, int64_t n_raters,
                         bool throw_on_degenerate) {
    const size_t n_items = rows.size();
    const size_t n_categories = rows[0].size();

    std::vector<int64_t> column_sums(n_categories, 0);
    double p_bar_sum = 0.0;
    for (const auto& row : rows) {
        int64_t sq = 0;
        for (size_t j = 0; j < n_categories; ++j) {
            sq += row[j] * row[j];
            column_sums[j] += row[j];
        }
        p_bar_sum += static_cast<double>(sq - n_raters) /
                     static_cast<double>(n_raters * (n_raters - 1));
    }
    const double p_bar = p_bar_sum / static_cast<double>(n_items);

    const double total = static_cast<double>(n_items) * static_cast<double>(n_raters);
    double p_e = 0.0;
    for (size_t j = 0; j < n_categories; ++j) {
        const double pj = static_cast<double>(column_sums[j]) / total;
        p_e += pj * pj;
    }
    if (p_e >= 1.0) {
        if (p_bar >= 1.0) return {1.0, p_bar, p_e};
        if (throw_on_degenerate) {
            throw AgreementError(AgreementError::Kind::kDegenerateMarginals,
                                 "degenerate marginals: chance agreement is 1");
        }
        return {1.0, p_bar, p_e};
    }
    return {(p_bar - p_e) / (1.0 - p_e), p_bar, p_e};
}

// Percentile CI from sorted replicate values.
std::pair<double, double> percentile_ci(std::vector<double> values, double confidence) {
    std::sort(values.begin(), values.end());
    const double alpha = (1.0 - confidence) / 2.0;
    const size_t last = values.size() - 1;
    const auto lo = static_cast<size_t>(std::floor(alpha * static_cast<double>(last)));
    const auto hi = static_cast<size_t>(std::ceil((1.0 - alpha) * static_cast<double>(last)));
    return {values[lo], values[hi]};
}

}  // namespace

AgreementResult cohen_kappa(const std::vector<std::string>& labels_a,
                            const std::vector<std::string>& labels_b,
                            const BootstrapConfig& bootstrap) {
    if (labels_a.size() != labels_b.size()) {
        throw AgreementError(AgreementError::Kind::kLengthMismatch,
                             "label lists differ in length (" + std::to_string(labels_a.size()) +
                                 " vs " + std::to_string(labels_b.size()) + ")");
    }
    if (labels_a.empty()) {
        throw AgreementError(AgreementError::Kind::kEmpty, "no items");
    }
    if (bootstrap.replicates < 1 || bootstrap.confidence <= 0.0 || bootstrap.confidence >= 1.0) {
        throw AgreementError(AgreementError::Kind::kBadArgument, "bad bootstrap config");
    }

    // Map labels to dense ids by first appearance; kappa only sees identity.
    std::map<std::string, int> ids;
    std::vector<int> a(labels_a.size()), b(labels_b.size());
    const auto id_of = [&](const std::string& s) {
        auto [it, _] = ids.emplace(s, static_cast<int>(ids.size()));
        return it->second;
    };
    for (size_t i = 0; i < labels_a.size(); ++i) {
        a[i] = id_of(labels_a[i]);
        b[i] = id_of(labels_b[i]);
    }
    const int n_categories = static_cast<int>(ids.size());

    const KappaPoint point = cohen_point(a, b, n_categories, /*throw_on_degenerate=*/true);

    std::mt19937_64 rng(bootstrap.seed);
    std::vector<double> replicates;
    replicates.reserve(static_cast<size_t>(bootstrap.replicates));
    std::vector<int> ra(a.size()), rb(b.size());
    for (int r = 0; r < bootstrap.replicates; ++r) {
        for (size_t i = 0; i < a.size(); ++i) {
            const size_t pick = static_cast<size_t>(rng() % a.size());
            ra[i] = a[pick];
            rb[i] = b[pick];
        }
        replicates.push_back(
            cohen_point(ra, rb, n_categories, /*throw_on_degenerate=*/false).value);
    }
    auto [lo, hi] = percentile_ci(std::move(replicates), bootstrap.confidence);

    AgreementResult result;
    result.statistic = AgreementStatistic::kCohenKappa;
    result.value = point.value;
    result.p_observed = point.p_o;
    result.p_expected = point.p_e;
    result.ci_low = lo;
    result.ci_high = hi;
    result.n_items = labels_a.size();
    result.n_raters = 2;
    result.bootstrap_replicates = bootstrap.replicates;
    result.seed = bootstrap.seed;
    return result;
}

double cohen_kappa_from_counts(const std::vector<std::vector<int64_t>>& confusion) {
    const size_t k = confusion.size();
    if (k == 0) throw AgreementError(AgreementError::Kind::kEmpty, "empty confusion matrix");
    std::vector<std::string> a, b;
    for (size_t i = 0; i < k; ++i) {
        if (confusion[i].size() != k) {
            throw AgreementError(AgreementError::Kind::kBadArgument,
                                 "confusion matrix must be square");
        }
        for (size_t j = 0; j < k; ++j) {
            for (int64_t c = 0; c < confusion[i][j]; ++c) {
                a.push_back("c" + std::to_string(i));
                b.push_back("c" + std::to_string(j));
            }
        }
    }
    BootstrapConfig minimal;
    minimal.replicates = 1;
    return cohen_kappa(a, b, minimal).value;
}

AgreementResult fleiss_kappa(const std::vector<std::vector<int64_t>>& ratings,
                             const BootstrapConfig& bootstrap) {
    if (ratings.empty()) {
        throw AgreementError(AgreementError::Kind::kEmpty, "no items");
    }
    if (ratings.size() == 1) {
        throw AgreementError(AgreementError::Kind::kDegenerateMarginals,
                             "fleiss kappa undefined for a single item");
    }
    if (bootstrap.replicates < 1 || bootstrap.confidence <= 0.0 || bootstrap.confidence >= 1.0) {
        throw AgreementError(AgreementError::Kind::kBadArgument, "bad bootstrap config");
    }
    const size_t n_categories = ratings[0].size();
    int64_t n_raters = 0;
    for (const auto& row : ratings) {
        if (row.size() != n_categories) {
            throw AgreementError(AgreementError::Kind::kRaggedRatings,
                                 "rating rows have differing category counts");
        }
        int64_t sum = 0;
        for (int64_t v : row) {
            if (v < 0) {
                throw AgreementError(AgreementError::Kind::kBadArgument, "negative rating count");
            }
            sum += v;
        }
        if (n_raters == 0) n_raters = sum;
        if (sum != n_raters) {
            throw AgreementError(AgreementError::Kind::kRaggedRatings,
                                 "rows must have equal total rater counts");
        }
    }
    if (n_raters < 2) {
        throw AgreementError(AgreementError::Kind::kBadArgument, "need at least 2 raters");
    }

    const FleissPoint point = fleiss_point(ratings, n_raters, /*throw_on_degenerate=*/true);

    std::mt19937_64 rng(bootstrap.seed);
    std::vector<double> replicates;
    replicates.reserve(static_cast<size_t>(bootstrap.replicates));
    std::vector<std::vector<int64_t>> resampled(ratings.size());
    for (int r = 0; r < bootstrap.replicates; ++r) {
        for (size_t i = 0; i < ratings.size(); ++i) {
            resampled[i] = ratings[rng() % ratings.size()];
        }
        replicates.push_back(fleiss_point(resampled, n_raters, false).value);
    }
    auto [lo, hi] = percentile_ci(std::move(replicates), bootstrap.confidence);

    AgreementResult result;
    result.statistic = AgreementStatistic::kFleissKappa;
    result.value = point.value;
    result.p_observed = point.p_bar;
    result.p_expected = point.p_e;
    result.ci_low = lo;
    result.ci_high = hi;
    result.n_items = ratings.size();
    result.n_raters = static_cast<size_t>(n_raters);
    result.bootstrap_replicates = bootstrap.replicates;
    result.seed = bootstrap.seed;
    return result;
}

}  // namespace relgate
