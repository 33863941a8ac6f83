#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace relgate {

// The ten PHI annotation categories.
enum class PhiCategory {
    kName,
    kProfession,
    kLocation,
    kAge,
    kDate,
    kContact,
    kId,
    kHospital,
    kDevice,
    kOther,
};

constexpr int kNumPhiCategories = 10;

std::string to_string(PhiCategory c);
std::optional<PhiCategory> phi_category_from_string(const std::string& s);

/// A PHI annotation over [start, end) in character (code point) offsets.
struct PhiSpan {
    int64_t start = 0;
    int64_t end = 0;
    PhiCategory category = PhiCategory::kOther;

    bool operator==(const PhiSpan&) const = default;
};

enum class NoteTypeKind {
    kProgress,
    kDischarge,
    kRadiology,
    kNursing,
    kEd,
    kConsult,
    kOther,
};

/// Note type with an open tail: unknown labels parse as kOther and keep
/// the original string so round trips are lossless.
struct NoteType {
    NoteTypeKind kind = NoteTypeKind::kOther;
    std::string other_label;  // only meaningful when kind == kOther

    static NoteType from_string(const std::string& s);
    std::string str() const;

    bool is_missing() const { return kind == NoteTypeKind::kOther && other_label.empty(); }
    bool operator==(const NoteType&) const = default;
};

struct Note {
    std::string note_id;
    std::string patient_id;
    std::string text;
    NoteType note_type;
    std::optional<int> admission_year;
    std::vector<PhiSpan> phi_spans;
    std::vector<std::string> icd_codes;  // sorted, unique
    std::optional<double> quality_score;
    std::string source;

    bool operator==(const Note&) const = default;
};

struct CorpusError : std::runtime_error {
    enum class Kind {
        kIo,
        kMalformedLine,
        kDuplicateNoteId,
        kInvalidSpan,
        kInvalidCategory,
        kBadArgument,
    };
    Kind kind;
    CorpusError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// Immutable after load; indexes are by position into notes().
class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<Note> notes);

    const std::vector<Note>& notes() const { return notes_; }
    size_t size() const { return notes_.size(); }
    bool empty() const { return notes_.empty(); }

    const Note* find(const std::string& note_id) const;
    std::vector<const Note*> notes_of_patient(const std::string& patient_id) const;
    size_t patient_count() const { return by_patient_.size(); }

    /// SHA-256 over the canonical line-delimited serialization.
    std::string content_hash() const;

private:
    std::vector<Note> notes_;
    std::unordered_map<std::string, size_t> by_note_id_;
    std::unordered_map<std::string, std::vector<size_t>> by_patient_;
};

enum class Split { kTrain, kVal, kTest };
enum class SplitKey { kPatient, kNote };

std::string to_string(Split s);
std::string to_string(SplitKey k);
std::optional<Split> split_from_string(const std::string& s);
std::optional<SplitKey> split_key_from_string(const std::string& s);

struct SplitManifest {
    SplitKey split_key = SplitKey::kPatient;
    int64_t seed = 0;
    std::unordered_map<std::string, Split> assignment;  // note_id -> split

    size_t count(Split s) const;
    std::string content_hash() const;
};

struct SplitError : std::runtime_error {
    enum class Kind { kIo, kMalformed, kUnknownNoteId, kPatientSplitViolation };
    Kind kind;
    std::vector<std::string> violating_patients;  // set for kPatientSplitViolation
    SplitError(Kind k, const std::string& msg, std::vector<std::string> patients = {})
        : std::runtime_error(msg), kind(k), violating_patients(std::move(patients)) {}
};

/// Number of Unicode code points in a UTF-8 string (counts non-continuation
/// bytes, so it degrades gracefully on invalid input).
size_t utf8_length(const std::string& s);

/// One JSON object per line; see docs/formats in README for the key set.
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Parse a single corpus line. line_no is 1-based and used in errors only.
Note parse_note_line(const std::string& line, size_t line_no);
std::string note_to_json_line(const Note& note);

SplitManifest load_split(const std::filesystem::path& path, const Corpus& corpus);
void write_split(const SplitManifest& manifest, const std::filesystem::path& path);

/// Patient-consistency check used by load_split; exposed for property tests.
std::vector<std::string> patient_split_violations(const SplitManifest& manifest,
                                                  const Corpus& corpus);

}  // namespace relgate
