#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "relgate/fixture.hpp"
#include "relgate/leakage.hpp"

using namespace relgate;

namespace {

// Independent all-pairs oracle over string shingle sets (no shared code
// with the implementation's hashed shingles).
std::set<std::string> oracle_grams(const std::string& text, int n) {
    std::set<std::string> grams;
    if (text.empty()) return grams;
    if (static_cast<int>(text.size()) <= n) {
        grams.insert(text);
        return grams;
    }
    for (size_t i = 0; i + n <= text.size(); ++i) grams.insert(text.substr(i, n));
    return grams;
}

double oracle_jaccard(const std::string& a, const std::string& b, int n) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    const auto ga = oracle_grams(a, n), gb = oracle_grams(b, n);
    size_t both = 0;
    for (const auto& g : ga) both += gb.count(g);
    return static_cast<double>(both) / static_cast<double>(ga.size() + gb.size() - both);
}

Note note_of(const std::string& id, const std::string& patient, const std::string& text) {
    Note n;
    n.note_id = id;
    n.patient_id = patient;
    n.text = text;
    n.note_type = NoteType::from_string("progress");
    n.source = "unit";
    return n;
}

}  // namespace

TEST_CASE("similarity basics") {
    SimilarityConfig cfg;

    SUBCASE("identical strings are 1.0 for every method") {
        const std::string text = "patient stable on current regimen";
        for (SimMethod m :
             {SimMethod::kTokenJaccard, SimMethod::kCharNgramJaccard, SimMethod::kMinhashEstimate}) {
            cfg.method = m;
            CHECK(similarity(text, text, cfg) == 1.0);
        }
    }

    SUBCASE("token jaccard hand example") {
        cfg.method = SimMethod::kTokenJaccard;
        CHECK(similarity("alpha beta gamma", "alpha beta delta", cfg) ==
              doctest::Approx(0.5).epsilon(1e-12));
        // Tokenization lowercases and splits on non-alphanumerics.
        CHECK(similarity("Alpha, beta!", "alpha beta", cfg) == 1.0);
    }

    SUBCASE("disjoint vocabulary is 0.0") {
        cfg.method = SimMethod::kTokenJaccard;
        CHECK(similarity("one two", "three four", cfg) == 0.0);
        cfg.method = SimMethod::kCharNgramJaccard;
        CHECK(similarity("aaaaaaaa", "bbbbbbbb", cfg) == 0.0);
    }

    SUBCASE("empty text conventions") {
        for (SimMethod m :
             {SimMethod::kTokenJaccard, SimMethod::kCharNgramJaccard, SimMethod::kMinhashEstimate}) {
            cfg.method = m;
            CHECK(similarity("", "", cfg) == 1.0);
            CHECK(similarity("", "words here", cfg) == 0.0);
        }
    }

    SUBCASE("similarity is symmetric for all methods") {
        std::mt19937_64 rng(1);
        auto [corpus, split] = make_fixture(20, 1, 19, {});
        for (int round = 0; round < 30; ++round) {
            const std::string& a = corpus.notes()[rng() % corpus.size()].text;
            const std::string& b = corpus.notes()[rng() % corpus.size()].text;
            for (SimMethod m : {SimMethod::kTokenJaccard, SimMethod::kCharNgramJaccard,
                                SimMethod::kMinhashEstimate}) {
                cfg.method = m;
                CHECK(similarity(a, b, cfg) == similarity(b, a, cfg));
            }
        }
    }

    SUBCASE("char ngram agrees with the string-set oracle") {
        auto [corpus, split] = make_fixture(12, 1, 23, {});
        cfg.method = SimMethod::kCharNgramJaccard;
        std::mt19937_64 rng(2);
        for (int round = 0; round < 30; ++round) {
            const std::string& a = corpus.notes()[rng() % corpus.size()].text;
            const std::string& b = corpus.notes()[rng() % corpus.size()].text;
            CHECK(similarity(a, b, cfg) ==
                  doctest::Approx(oracle_jaccard(a, b, cfg.ngram)).epsilon(1e-12));
        }
    }
}

TEST_CASE("similarity config validation") {
    SimilarityConfig cfg;
    cfg.ngram = 1;
    CHECK_THROWS_AS(cfg.validate(), LeakageError);
    cfg = {};
    cfg.minhash_k = 8;
    CHECK_THROWS_AS(cfg.validate(), LeakageError);
    cfg = {};
    cfg.bands = 3;
    CHECK_THROWS_AS(cfg.validate(), LeakageError);
    cfg = {};
    cfg.thresholds = {0.5, 0.5};
    CHECK_THROWS_AS(cfg.validate(), LeakageError);
    cfg = {};
    cfg.thresholds = {0.5, 1.2};
    CHECK_THROWS_AS(cfg.validate(), LeakageError);
    cfg = {};
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("patient overlap reports") {
    SUBCASE("patient-keyed fixture has no overlap") {
        auto [corpus, split] = make_fixture(30, 3, 41, {});
        CHECK(patient_overlap(corpus, split).empty());
    }

    SUBCASE("note-keyed split with one shared patient lists exactly it") {
        std::vector<Note> notes = {
            note_of("n1", "pA", "text one"),
            note_of("n2", "pA", "text two"),
            note_of("n3", "pB", "text three"),
        };
        SplitManifest split;
        split.split_key = SplitKey::kNote;
        split.assignment = {{"n1", Split::kTrain}, {"n2", Split::kTest}, {"n3", Split::kTrain}};
        const OverlapReport report = patient_overlap(Corpus(std::move(notes)), split);
        REQUIRE(report.patients.size() == 1);
        CHECK(report.patients[0].patient_id == "pA");
        CHECK(report.patients[0].note_ids == std::vector<std::string>{"n1", "n2"});
    }

    SUBCASE("three planted overlaps are all reported") {
        auto [corpus, split] = make_fixture(30, 2, 43, {});
        int planted = 0;
        for (const Note& n : corpus.notes()) {
            if (planted == 3) break;
            // Move the patient's second note to a different split.
            auto siblings = corpus.notes_of_patient(n.patient_id);
            if (siblings.size() < 2) continue;
            const std::string& second = siblings[1]->note_id;
            if (split.assignment[second] == Split::kTrain) {
                split.assignment[second] = Split::kTest;
            } else {
                split.assignment[second] = Split::kTrain;
            }
            ++planted;
        }
        split.split_key = SplitKey::kNote;
        REQUIRE(planted == 3);
        CHECK(patient_overlap(corpus, split).patients.size() == 3);
    }
}

TEST_CASE("leak curve on hand-planted duplicates") {
    // 200-note test split with 5 exact duplicates of train notes.
    std::vector<Note> notes;
    SplitManifest split;
    split.split_key = SplitKey::kNote;
    std::mt19937_64 rng(3);
    const auto word_soup = [&](size_t idx) {
        std::string text = "unique";
        for (int w = 0; w < 30; ++w) {
            text += " w" + std::to_string(idx) + "x" + std::to_string(rng() % 1000);
        }
        return text;
    };
    for (size_t i = 0; i < 100; ++i) {
        notes.push_back(note_of("tr" + std::to_string(i), "ptr" + std::to_string(i), word_soup(i)));
        split.assignment[notes.back().note_id] = Split::kTrain;
    }
    for (size_t i = 0; i < 200; ++i) {
        Note n = note_of("te" + std::to_string(i), "pte" + std::to_string(i),
                         i < 5 ? notes[i].text : word_soup(1000 + i));
        split.assignment[n.note_id] = Split::kTest;
        notes.push_back(std::move(n));
    }
    const Corpus corpus(std::move(notes));

    SimilarityConfig cfg;
    const LeakCurve curve = leak_curve(corpus, split, cfg);
    CHECK(curve.n_test == 200);
    CHECK(curve.n_train == 100);
    REQUIRE(curve.points.size() == 4);
    CHECK(curve.points[3].threshold == 0.85);
    CHECK(curve.points[3].count == 5);
    CHECK(curve.points[3].l == doctest::Approx(0.025).epsilon(1e-12));
    // The five offenders map back to their exact sources.
    for (const auto& o : curve.offenders[3]) {
        CHECK(o.similarity == 1.0);
        CHECK(o.test_note_id.substr(0, 2) == "te");
    }

    const std::string dat = curve.to_dat();
    CHECK(dat.rfind("threshold pct\n", 0) == 0);
    CHECK(dat.find("0.85 2.50\n") != std::string::npos);
}

TEST_CASE("exact mode equals the all-pairs brute force oracle") {
    FixtureKnobs knobs;
    knobs.duplicate_across_splits = 3;
    knobs.near_dup_across_splits = 2;
    auto [corpus, split] = make_fixture(40, 2, 47, knobs);
    SimilarityConfig cfg;
    const LeakCurve curve = leak_curve(corpus, split, cfg);

    for (size_t t = 0; t < cfg.thresholds.size(); ++t) {
        std::set<std::string> oracle_offenders;
        for (const Note& test_note : corpus.notes()) {
            if (split.assignment.at(test_note.note_id) != Split::kTest) continue;
            double best = 0.0;
            for (const Note& train_note : corpus.notes()) {
                if (split.assignment.at(train_note.note_id) != Split::kTrain) continue;
                best = std::max(best, oracle_jaccard(test_note.text, train_note.text, cfg.ngram));
            }
            if (best >= cfg.thresholds[t]) oracle_offenders.insert(test_note.note_id);
        }
        std::set<std::string> impl_offenders;
        for (const auto& o : curve.offenders[t]) impl_offenders.insert(o.test_note_id);
        CHECK(impl_offenders == oracle_offenders);
    }
}

TEST_CASE("leak curve is nonincreasing in the threshold") {
    std::mt19937_64 rng(53);
    for (int round = 0; round < 10; ++round) {
        FixtureKnobs knobs;
        knobs.duplicate_across_splits = static_cast<int>(rng() % 3);
        auto [corpus, split] = make_fixture(15 + static_cast<int>(rng() % 10), 2, rng(), knobs);
        SimilarityConfig cfg;
        cfg.thresholds = {0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.95, 1.0};
        const LeakCurve curve = leak_curve(corpus, split, cfg);
        for (size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].l <= curve.points[i - 1].l);
        }
        // L * n_test is an integer count by construction.
        for (const auto& p : curve.points) {
            CHECK(p.l * static_cast<double>(curve.n_test) ==
                  doctest::Approx(static_cast<double>(p.count)).epsilon(1e-12));
        }
    }
}

TEST_CASE("minhash candidate mode finds planted near duplicates") {
    FixtureKnobs knobs;
    knobs.duplicate_across_splits = 2;
    knobs.near_dup_across_splits = 3;
    auto [corpus, split] = make_fixture(50, 2, 59, knobs);

    SimilarityConfig exact;
    const LeakCurve truth = leak_curve(corpus, split, exact);

    SimilarityConfig lsh;
    lsh.method = SimMethod::kMinhashEstimate;
    const LeakCurve candidates = leak_curve(corpus, split, lsh);

    // No offender at the top threshold may be missed, and re-scored
    // similarities are exact.
    REQUIRE(truth.offenders[3].size() == candidates.offenders[3].size());
    for (size_t i = 0; i < truth.offenders[3].size(); ++i) {
        CHECK(truth.offenders[3][i].test_note_id == candidates.offenders[3][i].test_note_id);
        CHECK(truth.offenders[3][i].similarity ==
              doctest::Approx(candidates.offenders[3][i].similarity).epsilon(1e-12));
    }
}

TEST_CASE("minhash estimates the exact jaccard without strong bias") {
    auto [corpus, split] = make_fixture(60, 1, 67, {});
    SimilarityConfig cfg;
    std::mt19937_64 rng(5);
    double bias = 0.0;
    int pairs = 0;
    for (int round = 0; round < 200; ++round) {
        const std::string& a = corpus.notes()[rng() % corpus.size()].text;
        const std::string& b = corpus.notes()[rng() % corpus.size()].text;
        const auto ga = char_ngram_shingles(a, cfg.ngram);
        const auto gb = char_ngram_shingles(b, cfg.ngram);
        const auto sa = minhash_signature(ga, cfg.minhash_k, cfg.hash_seed);
        const auto sb = minhash_signature(gb, cfg.minhash_k, cfg.hash_seed);
        bias += minhash_agreement(sa, sb) - exact_jaccard(ga, gb);
        ++pairs;
    }
    CHECK(std::abs(bias / pairs) < 0.02);
}

TEST_CASE("empty split partitions are rejected") {
    std::vector<Note> notes = {note_of("n1", "p1", "alpha"), note_of("n2", "p2", "beta")};
    SplitManifest split;
    split.split_key = SplitKey::kNote;
    split.assignment = {{"n1", Split::kTrain}, {"n2", Split::kTrain}};
    CHECK_THROWS_AS(leak_curve(Corpus(std::move(notes)), split, SimilarityConfig{}), LeakageError);
}

TEST_CASE("audit record wraps overlap, curve and disclosures") {
    SUBCASE("clean fixture passes but still requires disclosures") {
        auto [corpus, split] = make_fixture(40, 2, 71, {});
        const LeakageAuditRecord record = audit_splits(corpus, split, SimilarityConfig{});
        CHECK(record.audit_passed);
        CHECK(record.overlap.empty());
        CHECK(record.curve.offenders.back().empty());
        CHECK(record.disclosures_required);
        CHECK(record.split_key == SplitKey::kPatient);
    }

    SUBCASE("dirty fixture fails the audit") {
        FixtureKnobs knobs;
        knobs.duplicate_across_splits = 4;
        auto [corpus, split] = make_fixture(40, 2, 73, knobs);
        const LeakageAuditRecord record = audit_splits(
            corpus, split, SimilarityConfig{}, {true, "checked"}, {true, "checked"});
        CHECK_FALSE(record.audit_passed);
        CHECK(record.curve.offenders.back().size() == 4);
        CHECK_FALSE(record.disclosures_required);
    }

    SUBCASE("record hash lands in the provenance activity") {
        auto [corpus, split] = make_fixture(20, 2, 79, {});
        const LeakageAuditRecord record = audit_splits(corpus, split, SimilarityConfig{});
        const ProvActivity activity =
            leakage_provenance_activity(record, "act-audit", "ag-pipeline", "2026-02-01");
        CHECK(activity.event_type == ProvEventType::kSplitSampling);
        CHECK(activity.fields.at("output_hash") == record.record_hash());
        CHECK(activity.fields.at("split_key") == "patient");
        CHECK(validate_activity(activity).empty());

        // Deterministic record hash for identical inputs.
        const LeakageAuditRecord again = audit_splits(corpus, split, SimilarityConfig{});
        CHECK(again.record_hash() == record.record_hash());
    }
}
