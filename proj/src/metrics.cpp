#include "relgate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "relgate/hashing.hpp"

using nlohmann::json;

namespace relgate {

namespace {

std::string pct2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Missingness
// ---------------------------------------------------------------------------

const std::vector<std::string>& known_missingness_fields() {
    static const std::vector<std::string> kFields = {
        "admission_year", "quality_score", "icd_codes", "phi_spans",
        "note_type",      "source",        "text",
    };
    return kFields;
}

bool note_field_missing(const Note& note, const std::string& field) {
    if (field == "admission_year") return !note.admission_year.has_value();
    if (field == "quality_score") return !note.quality_score.has_value();
    if (field == "icd_codes") return note.icd_codes.empty();
    if (field == "phi_spans") return note.phi_spans.empty();
    if (field == "note_type") return note.note_type.is_missing();
    if (field == "source") return note.source.empty();
    if (field == "text") return note.text.empty();
    throw MetricError(MetricError::Kind::kUnknownField, "unknown field '" + field + "'");
}

bool StructuralRules::is_structural(const std::string& field, const NoteType& type) const {
    auto it = inapplicable.find(field);
    if (it == inapplicable.end()) return false;
    const std::string t = type.str();
    for (const auto& candidate : it->second) {
        if (candidate == t) return true;
    }
    return false;
}

namespace {

void finish_field(FieldMissingness& f) {
    f.rate = f.n == 0 ? 0.0 : static_cast<double>(f.missing) / static_cast<double>(f.n);
    f.kind = (f.structural > 0 && f.incidental == 0) ? MissingnessKind::kStructural
                                                     : MissingnessKind::kIncidental;
}

std::string stratum_label(const Note& note, const std::string& strata_by) {
    if (strata_by == "note_type") {
        const std::string t = note.note_type.str();
        return t.empty() ? "unknown" : t;
    }
    // admission_year
    return note.admission_year ? std::to_string(*note.admission_year) : "absent";
}

}  // namespace

MissingnessProfile missingness(const Corpus& corpus, const std::vector<std::string>& fields,
                               const std::string& strata_by, const StructuralRules& rules) {
    for (const auto& f : fields) {
        bool known = false;
        for (const auto& k : known_missingness_fields()) {
            if (k == f) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw MetricError(MetricError::Kind::kUnknownField, "unknown field '" + f + "'");
        }
    }
    if (!strata_by.empty() && strata_by != "note_type" && strata_by != "admission_year") {
        throw MetricError(MetricError::Kind::kBadArgument,
                          "strata_by must be empty, 'note_type' or 'admission_year'");
    }

    MissingnessProfile profile;
    profile.fields = fields;
    profile.strata_by = strata_by;
    for (const auto& f : fields) profile.per_field[f] = {};

    for (const Note& note : corpus.notes()) {
        const std::string stratum = strata_by.empty() ? "" : stratum_label(note, strata_by);
        for (const auto& f : fields) {
            FieldMissingness& overall = profile.per_field[f];
            ++overall.n;
            FieldMissingness* strat = nullptr;
            if (!strata_by.empty()) {
                strat = &profile.strata[stratum][f];
                ++strat->n;
            }
            if (note_field_missing(note, f)) {
                ++overall.missing;
                if (strat) ++strat->missing;
                const bool structural = rules.is_structural(f, note.note_type);
                if (structural) {
                    ++overall.structural;
                    if (strat) ++strat->structural;
                } else {
                    ++overall.incidental;
                    if (strat) ++strat->incidental;
                }
            }
        }
    }
    for (auto& [_, f] : profile.per_field) finish_field(f);
    for (auto& [_, per_field] : profile.strata) {
        for (auto& [_f, f] : per_field) finish_field(f);
    }
    return profile;
}

std::string MissingnessProfile::to_dat() const {
    std::ostringstream out;
    out << "field pct\n";
    for (const auto& f : fields) {
        out << f << ' ' << pct2(100.0 * per_field.at(f).rate) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// PSI drift
// ---------------------------------------------------------------------------

std::string to_string(DriftFeature f) {
    switch (f) {
        case DriftFeature::kIcdHistogram: return "icd_histogram";
        case DriftFeature::kNoteTypeHistogram: return "note_type_histogram";
        case DriftFeature::kLengthHistogram: return "length_histogram";
    }
    return "icd_histogram";
}

std::optional<DriftFeature> drift_feature_from_string(const std::string& s) {
    if (s == "icd_histogram" || s == "icd") return DriftFeature::kIcdHistogram;
    if (s == "note_type_histogram" || s == "note_type") return DriftFeature::kNoteTypeHistogram;
    if (s == "length_histogram" || s == "length") return DriftFeature::kLengthHistogram;
    return std::nullopt;
}

double population_stability_index(const Histogram& baseline, const Histogram& current) {
    double p_total = 0.0, q_total = 0.0;
    for (const auto& [_, v] : baseline) p_total += v;
    for (const auto& [_, v] : current) q_total += v;
    if (p_total <= 0.0 || q_total <= 0.0) {
        throw MetricError(MetricError::Kind::kBadArgument, "psi: empty histogram");
    }

    std::set<std::string> bins;
    for (const auto& [b, _] : baseline) bins.insert(b);
    for (const auto& [b, _] : current) bins.insert(b);

    // The formula is undefined where a bin has zero mass on either side, so
    // such bins get symmetric additive smoothing and both sides renormalize.
    constexpr double kEps = 1e-6;
    std::vector<double> p, q;
    p.reserve(bins.size());
    q.reserve(bins.size());
    double p_norm = 0.0, q_norm = 0.0;
    for (const auto& b : bins) {
        auto pit = baseline.find(b);
        auto qit = current.find(b);
        double pv = pit == baseline.end() ? 0.0 : pit->second / p_total;
        double qv = qit == current.end() ? 0.0 : qit->second / q_total;
        if (pv == 0.0 || qv == 0.0) {
            pv += kEps;
            qv += kEps;
        }
        p.push_back(pv);
        q.push_back(qv);
        p_norm += pv;
        q_norm += qv;
    }
    double psi = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double pv = p[i] / p_norm;
        const double qv = q[i] / q_norm;
        psi += (qv - pv) * std::log(qv / pv);
    }
    return psi;
}

size_t token_count(const std::string& text) {
    size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

namespace {

std::string length_bin_label(size_t tokens) {
    const size_t bin = std::min<size_t>(tokens / 100, 20);
    return std::to_string(bin < 20 ? bin * 100 + 50 : 2050);
}

Histogram feature_histogram(const std::vector<const Note*>& notes, DriftFeature feature) {
    Histogram h;
    for (const Note* n : notes) {
        switch (feature) {
            case DriftFeature::kIcdHistogram:
                for (const auto& code : n->icd_codes) h[code] += 1.0;
                break;
            case DriftFeature::kNoteTypeHistogram:
                h[n->note_type.str().empty() ? "unknown" : n->note_type.str()] += 1.0;
                break;
            case DriftFeature::kLengthHistogram:
                h[length_bin_label(token_count(n->text))] += 1.0;
                break;
        }
    }
    return h;
}

}  // namespace

PsiTrace psi_trace(const Corpus& corpus, DriftFeature feature, const std::string& baseline_period,
                   const std::vector<std::string>& periods) {
    bool any_year = false;
    std::map<std::string, std::vector<const Note*>> by_period;
    for (const Note& n : corpus.notes()) {
        if (n.admission_year) {
            any_year = true;
            by_period[std::to_string(*n.admission_year)].push_back(&n);
        }
    }
    if (!any_year) {
        throw MetricError(MetricError::Kind::kFeatureUnavailable,
                          "psi_trace: corpus has no admission_year values");
    }
    const auto notes_of = [&](const std::string& period) -> const std::vector<const Note*>& {
        auto it = by_period.find(period);
        if (it == by_period.end() || it->second.empty()) {
            throw MetricError(MetricError::Kind::kEmptyPeriod,
                              "psi_trace: no notes in period '" + period + "'");
        }
        return it->second;
    };

    PsiTrace trace;
    trace.feature = feature;
    trace.baseline_period = baseline_period;
    trace.baseline_histogram = feature_histogram(notes_of(baseline_period), feature);
    if (trace.baseline_histogram.empty()) {
        throw MetricError(MetricError::Kind::kEmptyPeriod,
                          "psi_trace: baseline period '" + baseline_period +
                              "' has no feature observations");
    }
    for (const auto& period : periods) {
        Histogram h = feature_histogram(notes_of(period), feature);
        if (h.empty()) {
            throw MetricError(MetricError::Kind::kEmptyPeriod,
                              "psi_trace: period '" + period + "' has no feature observations");
        }
        trace.points.push_back({period, population_stability_index(trace.baseline_histogram, h)});
        trace.period_histograms[period] = std::move(h);
    }
    return trace;
}

std::string PsiTrace::to_dat() const {
    std::ostringstream out;
    out << "year psi\n";
    for (const auto& p : points) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", p.psi);
        out << p.period << ' ' << buf << '\n';
    }
    return out.str();
}

Histogram length_histogram(const Corpus& corpus) {
    Histogram h;
    for (const Note& n : corpus.notes()) {
        h[length_bin_label(token_count(n.text))] += 1.0;
    }
    return h;
}

std::string length_histogram_to_dat(const Histogram& hist) {
    std::ostringstream out;
    out << "bin_mid count\n";
    for (size_t bin = 0; bin <= 20; ++bin) {
        const std::string label = std::to_string(bin < 20 ? bin * 100 + 50 : 2050);
        auto it = hist.find(label);
        const auto count = static_cast<int64_t>(it == hist.end() ? 0.0 : it->second);
        out << label << ' ' << count << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// PHI residual-risk proxy
// ---------------------------------------------------------------------------

struct PatternSet::Compiled {
    std::string category;
    std::vector<std::regex> expressions;
};

PatternSet::PatternSet(std::map<std::string, std::vector<std::string>> categories)
    : categories_(std::move(categories)) {
    compile();
}

void PatternSet::compile() {
    auto compiled = std::make_shared<std::vector<Compiled>>();
    for (const auto& [category, expressions] : categories_) {
        Compiled c;
        c.category = category;
        for (const auto& expr : expressions) {
            try {
                c.expressions.emplace_back(expr, std::regex::ECMAScript | std::regex::optimize);
            } catch (const std::regex_error& e) {
                throw MetricError(MetricError::Kind::kInvalidPattern,
                                  "category '" + category + "': bad pattern '" + expr +
                                      "': " + e.what());
            }
        }
        compiled->push_back(std::move(c));
    }
    compiled_ = std::move(compiled);
}

PatternSet PatternSet::defaults() {
    std::map<std::string, std::vector<std::string>> c;
    c["DATE"] = {
        R"(\b(19|20)\d{2}[-/](0?[1-9]|1[0-2])[-/](0?[1-9]|[12]\d|3[01])\b)",
        R"(\b(Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Oct|Nov|Dec)[a-z]* \d{1,2},? (19|20)\d{2}\b)",
    };
    c["CONTACT"] = {
        R"(\b\d{3}[-. ]\d{3}[-. ]\d{4}\b)",
        R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})",
    };
    c["ID"] = {
        R"(\b[Mm][Rr][Nn][:# ]*\d{5,}\b)",
        R"(\b\d{7,}\b)",
        R"(\b\d{3}-\d{2}-\d{4}\b)",
    };
    c["NAME"] = {
        R"(\b(Dr|Mr|Mrs|Ms)\.? [A-Z][a-z]+\b)",
    };
    c["HOSPITAL"] = {
        R"(\b[A-Z][a-z]+ (General |Memorial |University )?(Hospital|Medical Center|Clinic)\b)",
    };
    c["AGE"] = {
        R"(\b\d{1,3}[- ]year[- ]old\b)",
        R"(\baged \d{1,3}\b)",
    };
    c["LOCATION"] = {
        R"(\b\d+ [A-Z][a-z]+ (Street|St|Avenue|Ave|Road|Rd|Boulevard|Blvd)\b)",
    };
    c["DEVICE"] = {
        R"(\b(serial|SN|S/N)[:# ]+[A-Z0-9][A-Z0-9-]{5,}\b)",
    };
    c["PROFESSION"] = {
        R"(\b(works as|employed as|occupation[:]? )[a-z ]{2,24}\b)",
    };
    c["OTHER"] = {
        R"(\b(SSN|ssn|social security|passport number)\b)",
    };
    return PatternSet(std::move(c));
}

PatternSet PatternSet::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw MetricError(MetricError::Kind::kInvalidPattern,
                          std::string("pattern config: ") + e.what());
    }
    std::map<std::string, std::vector<std::string>> categories;
    for (const auto& [category, exprs] : j.at("categories").items()) {
        categories[category] = exprs.get<std::vector<std::string>>();
    }
    return PatternSet(std::move(categories));
}

PatternSet PatternSet::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MetricError(MetricError::Kind::kInvalidPattern,
                          "cannot open pattern config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string PatternSet::to_json() const {
    json j;
    j["categories"] = categories_;
    return j.dump(2) + "\n";
}

std::string PatternSet::config_hash() const {
    json j;
    j["categories"] = categories_;
    return sha256_hex(j.dump());
}

int PatternSet::categories_matched(const std::string& text) const {
    if (!compiled_) return 0;
    int matched = 0;
    for (const auto& c : *compiled_) {
        for (const auto& re : c.expressions) {
            if (std::regex_search(text, re)) {
                ++matched;
                break;
            }
        }
    }
    return matched;
}

PhiRiskResult phi_risk_scan(const Corpus& corpus, const PatternSet& patterns,
                            int high_risk_threshold, size_t sample_size, uint64_t seed) {
    if (sample_size > corpus.size()) {
        throw MetricError(MetricError::Kind::kBadArgument,
                          "sample_size exceeds corpus size");
    }
    if (high_risk_threshold < 0 || high_risk_threshold > kMaxPhiRisk) {
        throw MetricError(MetricError::Kind::kBadArgument,
                          "high_risk_threshold must be in [0, 8]");
    }

    const auto& notes = corpus.notes();
    std::vector<int> risks(notes.size(), 0);

    const auto scan_one = [&](size_t i) {
        risks[i] = std::min(kMaxPhiRisk, patterns.categories_matched(notes[i].text));
    };
    const size_t workers = std::min<size_t>(std::max<size_t>(notes.size() / 256, 1), 8);
    if (workers > 1) {
        std::vector<std::future<void>> futures;
        for (size_t w = 0; w < workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&, w] {
                for (size_t i = w; i < notes.size(); i += workers) scan_one(i);
            }));
        }
        for (auto& f : futures) f.get();
    } else {
        for (size_t i = 0; i < notes.size(); ++i) scan_one(i);
    }

    PhiRiskResult result;
    result.threshold = high_risk_threshold;
    result.histogram.assign(kMaxPhiRisk + 1, 0);
    result.patterns_hash = patterns.config_hash();
    int64_t total = 0, high = 0;
    for (size_t i = 0; i < notes.size(); ++i) {
        result.per_note[notes[i].note_id] = risks[i];
        ++result.histogram[static_cast<size_t>(risks[i])];
        total += risks[i];
        if (risks[i] >= high_risk_threshold) ++high;
    }
    const double n = static_cast<double>(notes.size());
    result.mean_proxy = notes.empty() ? 0.0 : static_cast<double>(total) / n;
    result.frac_high_risk = notes.empty() ? 0.0 : static_cast<double>(high) / n;

    // Review sample: seeded shuffle, then stable sort by descending risk so
    // the riskiest notes come first and ties stay in shuffled order.
    std::vector<size_t> order(notes.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return risks[a] > risks[b]; });
    result.sampling_plan.sample_size = sample_size;
    result.sampling_plan.seed = seed;
    for (size_t i = 0; i < sample_size; ++i) {
        result.sampling_plan.note_ids.push_back(notes[order[i]].note_id);
    }
    return result;
}

std::string PhiRiskResult::to_dat() const {
    std::ostringstream out;
    out << "risk count\n";
    for (size_t r = 0; r < histogram.size(); ++r) {
        out << r << ' ' << histogram[r] << '\n';
    }
    return out.str();
}

}  // namespace relgate
