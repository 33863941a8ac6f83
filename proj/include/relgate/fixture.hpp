#pragma once

#include <cstdint>
#include <utility>

#include "relgate/corpus.hpp"

namespace relgate {

/// Defect-planting knobs for generated corpora. Fractions are per-note
/// Bernoulli draws unless noted; counts are exact.
struct FixtureKnobs {
    // Exactly this many extra test notes whose text is byte-equal to a
    // train note (each copies a distinct train note).
    int duplicate_across_splits = 0;

    // Extra test notes derived from a train note by a few character
    // substitutions; mutation count is clamped so char-5-gram Jaccard
    // against the source stays >= 0.85.
    int near_dup_across_splits = 0;
    int near_dup_mutations = 6;

    double icd_empty_frac = 0.0;
    double quality_missing_frac = 0.0;
    double year_missing_frac = 0.0;

    // Admission years span [2010, 2010 + years). Pool-B ICD share grows by
    // icd_shift_step per year with exact proportional allocation, which
    // plants a monotone drift signal.
    int years = 1;
    double icd_shift_step = 0.0;

    // Exact counts (rounded from fraction * corpus size) of notes that get
    // a sentence matching exactly 1/2/3 scanner pattern categories.
    double phi_risk1_frac = 0.0;
    double phi_risk2_frac = 0.0;
    double phi_risk3_frac = 0.0;

    SplitKey split_key = SplitKey::kPatient;
    double train_frac = 0.70;
    double val_frac = 0.15;

    int sentences_min = 3;
    int sentences_max = 8;
};

/// Deterministic synthetic corpus + split manifest. Base text is lowercase
/// letters only, so the default PHI pattern set matches nothing unless a
/// phi_risk knob injects it.
std::pair<Corpus, SplitManifest> make_fixture(int n_patients, int notes_per_patient,
                                              uint64_t seed, const FixtureKnobs& knobs = {});

}  // namespace relgate
