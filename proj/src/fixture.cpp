#include "relgate/fixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace relgate {

namespace {

const std::array<const char*, 56> kVocab = {
    "patient",    "reports",   "mild",       "moderate", "severe",   "chest",
    "pain",       "improving", "with",       "rest",     "follow",   "review",
    "stable",     "vitals",    "within",     "normal",   "limits",   "denies",
    "fever",      "chills",    "cough",      "shortness", "of",      "breath",
    "abdomen",    "soft",      "nontender",  "continue", "current",  "medication",
    "plan",       "monitor",   "symptoms",   "overnight", "labs",    "pending",
    "discussed",  "care",      "options",    "family",   "tolerating", "oral",
    "intake",     "well",      "ambulating", "without",  "assistance", "wound",
    "healing",    "appropriately", "alert",  "oriented", "skin",     "warm",
    "gait",       "steady",
};

const std::array<const char*, 8> kIcdPoolA = {"401.9",  "250.00", "414.01", "428.0",
                                              "272.4",  "530.81", "486",    "276.2"};
const std::array<const char*, 8> kIcdPoolB = {"038.9",  "584.9",  "599.0",  "518.81",
                                              "285.9",  "995.92", "780.39", "287.5"};

const std::array<NoteTypeKind, 6> kNoteTypes = {
    NoteTypeKind::kProgress, NoteTypeKind::kDischarge, NoteTypeKind::kRadiology,
    NoteTypeKind::kNursing,  NoteTypeKind::kEd,        NoteTypeKind::kConsult,
};

// Injection sentences matching exactly 1/2/3 default pattern categories
// (DATE; DATE+CONTACT; DATE+CONTACT+ID).
const char* kRisk1 = " follow up documented on 2014-06-21 .";
const char* kRisk2 = " follow up documented on 2014-06-21 , reach desk at 555-301-4827 .";
const char* kRisk3 =
    " follow up documented on 2014-06-21 , reach desk at 555-301-4827 , record mrn 90211345 .";

std::string base26(size_t n) {
    std::string s;
    do {
        s.push_back(static_cast<char>('a' + n % 26));
        n /= 26;
    } while (n > 0);
    return s;
}

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

std::string make_text(std::mt19937_64& rng, size_t note_index, const FixtureKnobs& knobs) {
    std::ostringstream text;
    const int n_sentences =
        knobs.sentences_min +
        static_cast<int>(rng() % static_cast<uint64_t>(knobs.sentences_max - knobs.sentences_min + 1));
    for (int s = 0; s < n_sentences; ++s) {
        const int n_words = 6 + static_cast<int>(rng() % 7);
        for (int w = 0; w < n_words; ++w) {
            if (s > 0 || w > 0) text << ' ';
            text << kVocab[rng() % kVocab.size()];
        }
        text << " .";
    }
    // Unique low-salience token so exact text duplicates only arise from the
    // duplication knob.
    text << " zz" << base26(note_index) << " .";
    return text.str();
}

// Substitutes letters at spaced positions; count is clamped so the 5-gram
// Jaccard against the original stays >= 0.85.
std::string mutate_text(const std::string& src, int requested_mutations) {
    std::vector<size_t> letter_pos;
    for (size_t i = 0; i < src.size(); ++i) {
        if (src[i] >= 'a' && src[i] <= 'z') letter_pos.push_back(i);
    }
    if (letter_pos.empty()) return src;
    const long grams = std::max<long>(1, static_cast<long>(src.size()) - 4);
    int m = std::max(1, std::min<int>(requested_mutations, static_cast<int>(grams / 62)));
    std::string out = src;
    for (int k = 1; k <= m; ++k) {
        size_t pos = letter_pos[static_cast<size_t>(k) * letter_pos.size() / (m + 1)];
        char c = out[pos];
        out[pos] = (c == 'z') ? 'a' : static_cast<char>(c + 1);
    }
    return out;
}

}  // namespace

std::pair<Corpus, SplitManifest> make_fixture(int n_patients, int notes_per_patient,
                                              uint64_t seed, const FixtureKnobs& knobs) {
    if (n_patients < 1 || notes_per_patient < 1) {
        throw CorpusError(CorpusError::Kind::kBadArgument,
                          "make_fixture: n_patients and notes_per_patient must be >= 1");
    }
    for (double f : {knobs.icd_empty_frac, knobs.quality_missing_frac, knobs.year_missing_frac,
                     knobs.phi_risk1_frac, knobs.phi_risk2_frac, knobs.phi_risk3_frac}) {
        if (f < 0.0 || f > 1.0) {
            throw CorpusError(CorpusError::Kind::kBadArgument,
                              "make_fixture: fractions must be in [0,1]");
        }
    }
    if (knobs.years < 1 || knobs.icd_shift_step < 0.0 ||
        knobs.duplicate_across_splits < 0 || knobs.near_dup_across_splits < 0 ||
        knobs.sentences_min < 1 || knobs.sentences_max < knobs.sentences_min ||
        knobs.train_frac < 0.0 || knobs.val_frac < 0.0 ||
        knobs.train_frac + knobs.val_frac > 1.0) {
        throw CorpusError(CorpusError::Kind::kBadArgument, "make_fixture: invalid knobs");
    }

    std::mt19937_64 rng(seed);
    const size_t n_base = static_cast<size_t>(n_patients) * notes_per_patient;
    std::vector<Note> notes;
    notes.reserve(n_base);

    // Per-year proportional allocator for the pool-B ICD share.
    std::vector<size_t> year_total(knobs.years, 0), year_b(knobs.years, 0);
    size_t pool_a_cursor = 0, pool_b_cursor = 0;

    for (int p = 0; p < n_patients; ++p) {
        char pid[16];
        std::snprintf(pid, sizeof(pid), "p%04d", p);
        for (int k = 0; k < notes_per_patient; ++k) {
            const size_t idx = notes.size();
            Note note;
            char nid[16];
            std::snprintf(nid, sizeof(nid), "n%06zu", idx);
            note.note_id = nid;
            note.patient_id = pid;
            note.note_type = NoteType{kNoteTypes[rng() % kNoteTypes.size()], {}};
            note.source = "synthetic-fixture";
            note.text = make_text(rng, idx, knobs);

            const int year_index = static_cast<int>(idx % static_cast<size_t>(knobs.years));
            if (unit_draw(rng) >= knobs.year_missing_frac) {
                note.admission_year = 2010 + year_index;
            }
            if (unit_draw(rng) >= knobs.quality_missing_frac) {
                note.quality_score = 0.80 + 0.19 * unit_draw(rng);
            }

            if (unit_draw(rng) >= knobs.icd_empty_frac) {
                const double b_frac =
                    std::min(0.95, knobs.icd_shift_step * year_index);
                const int n_codes = 1 + static_cast<int>(rng() % 3);
                for (int c = 0; c < n_codes; ++c) {
                    auto& total = year_total[year_index];
                    auto& from_b = year_b[year_index];
                    ++total;
                    if (static_cast<double>(from_b + 1) <= b_frac * static_cast<double>(total)) {
                        ++from_b;
                        note.icd_codes.push_back(kIcdPoolB[pool_b_cursor++ % kIcdPoolB.size()]);
                    } else {
                        note.icd_codes.push_back(kIcdPoolA[pool_a_cursor++ % kIcdPoolA.size()]);
                    }
                }
                std::sort(note.icd_codes.begin(), note.icd_codes.end());
                note.icd_codes.erase(
                    std::unique(note.icd_codes.begin(), note.icd_codes.end()),
                    note.icd_codes.end());
            }

            const int n_spans = static_cast<int>(rng() % 3);
            const int64_t text_len = static_cast<int64_t>(utf8_length(note.text));
            for (int s = 0; s < n_spans && text_len >= 8; ++s) {
                const int64_t start = static_cast<int64_t>(rng() % static_cast<uint64_t>(text_len - 4));
                note.phi_spans.push_back(
                    {start, start + 4, static_cast<PhiCategory>(rng() % kNumPhiCategories)});
            }

            notes.push_back(std::move(note));
        }
    }

    // PHI risk injections: exact counts, disjoint notes, seeded choice.
    {
        std::mt19937_64 pick_rng(seed ^ 0x7068695f696e6aULL);
        std::vector<size_t> order(notes.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[pick_rng() % i]);
        }
        const auto count = [&](double f) {
            return static_cast<size_t>(std::llround(f * static_cast<double>(notes.size())));
        };
        size_t cursor = 0;
        const size_t n3 = count(knobs.phi_risk3_frac);
        const size_t n2 = count(knobs.phi_risk2_frac);
        const size_t n1 = count(knobs.phi_risk1_frac);
        for (size_t i = 0; i < n3 && cursor < order.size(); ++i) notes[order[cursor++]].text += kRisk3;
        for (size_t i = 0; i < n2 && cursor < order.size(); ++i) notes[order[cursor++]].text += kRisk2;
        for (size_t i = 0; i < n1 && cursor < order.size(); ++i) notes[order[cursor++]].text += kRisk1;
    }

    // Split assignment over the base notes.
    SplitManifest manifest;
    manifest.split_key = knobs.split_key;
    manifest.seed = static_cast<int64_t>(seed);
    std::mt19937_64 split_rng(seed ^ 0x73706c6974ULL);
    const auto shuffled = [&](size_t n) {
        std::vector<size_t> v(n);
        for (size_t i = 0; i < n; ++i) v[i] = i;
        for (size_t i = n; i > 1; --i) std::swap(v[i - 1], v[split_rng() % i]);
        return v;
    };
    const auto split_of_rank = [&](size_t rank, size_t n) {
        const auto n_train = static_cast<size_t>(std::llround(knobs.train_frac * n));
        const auto n_val = static_cast<size_t>(std::llround(knobs.val_frac * n));
        if (rank < n_train) return Split::kTrain;
        if (rank < n_train + n_val) return Split::kVal;
        return Split::kTest;
    };
    if (knobs.split_key == SplitKey::kPatient) {
        auto order = shuffled(static_cast<size_t>(n_patients));
        std::vector<Split> patient_split(n_patients);
        for (size_t rank = 0; rank < order.size(); ++rank) {
            patient_split[order[rank]] = split_of_rank(rank, order.size());
        }
        for (size_t i = 0; i < notes.size(); ++i) {
            const size_t patient = i / static_cast<size_t>(notes_per_patient);
            manifest.assignment[notes[i].note_id] = patient_split[patient];
        }
    } else {
        auto order = shuffled(notes.size());
        for (size_t rank = 0; rank < order.size(); ++rank) {
            manifest.assignment[notes[order[rank]].note_id] = split_of_rank(rank, order.size());
        }
    }

    // Planted cross-split duplicates and near-duplicates: extra test notes
    // copying (or lightly mutating) distinct train notes.
    std::vector<size_t> train_indices;
    for (size_t i = 0; i < notes.size(); ++i) {
        if (manifest.assignment[notes[i].note_id] == Split::kTrain) train_indices.push_back(i);
    }
    const int wanted = knobs.duplicate_across_splits + knobs.near_dup_across_splits;
    if (wanted > 0 && train_indices.size() < static_cast<size_t>(wanted)) {
        throw CorpusError(CorpusError::Kind::kBadArgument,
                          "make_fixture: not enough train notes for requested duplicates");
    }
    int extra_patient = 0;
    const auto append_copy = [&](size_t src_index, bool near) {
        const size_t idx = notes.size();
        Note note = notes[src_index];
        char nid[16], pid[16];
        std::snprintf(nid, sizeof(nid), "n%06zu", idx);
        std::snprintf(pid, sizeof(pid), "dp%04d", extra_patient++);
        note.note_id = nid;
        note.patient_id = pid;
        if (near) {
            note.text = mutate_text(note.text, knobs.near_dup_mutations);
            note.phi_spans.clear();
        }
        manifest.assignment[note.note_id] = Split::kTest;
        notes.push_back(std::move(note));
    };
    for (int d = 0; d < knobs.duplicate_across_splits; ++d) {
        append_copy(train_indices[static_cast<size_t>(d)], false);
    }
    for (int d = 0; d < knobs.near_dup_across_splits; ++d) {
        append_copy(train_indices[static_cast<size_t>(knobs.duplicate_across_splits + d)], true);
    }

    return {Corpus(std::move(notes)), std::move(manifest)};
}

}  // namespace relgate
