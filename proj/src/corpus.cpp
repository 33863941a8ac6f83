#include "relgate/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "relgate/hashing.hpp"

using nlohmann::json;

namespace relgate {

std::string to_string(PhiCategory c) {
    switch (c) {
        case PhiCategory::kName: return "NAME";
        case PhiCategory::kProfession: return "PROFESSION";
        case PhiCategory::kLocation: return "LOCATION";
        case PhiCategory::kAge: return "AGE";
        case PhiCategory::kDate: return "DATE";
        case PhiCategory::kContact: return "CONTACT";
        case PhiCategory::kId: return "ID";
        case PhiCategory::kHospital: return "HOSPITAL";
        case PhiCategory::kDevice: return "DEVICE";
        case PhiCategory::kOther: return "OTHER";
    }
    return "OTHER";
}

std::optional<PhiCategory> phi_category_from_string(const std::string& s) {
    static const std::unordered_map<std::string, PhiCategory> kMap = {
        {"NAME", PhiCategory::kName},         {"PROFESSION", PhiCategory::kProfession},
        {"LOCATION", PhiCategory::kLocation}, {"AGE", PhiCategory::kAge},
        {"DATE", PhiCategory::kDate},         {"CONTACT", PhiCategory::kContact},
        {"ID", PhiCategory::kId},             {"HOSPITAL", PhiCategory::kHospital},
        {"DEVICE", PhiCategory::kDevice},     {"OTHER", PhiCategory::kOther},
    };
    auto it = kMap.find(s);
    if (it == kMap.end()) return std::nullopt;
    return it->second;
}

NoteType NoteType::from_string(const std::string& s) {
    if (s == "progress") return {NoteTypeKind::kProgress, {}};
    if (s == "discharge") return {NoteTypeKind::kDischarge, {}};
    if (s == "radiology") return {NoteTypeKind::kRadiology, {}};
    if (s == "nursing") return {NoteTypeKind::kNursing, {}};
    if (s == "ed") return {NoteTypeKind::kEd, {}};
    if (s == "consult") return {NoteTypeKind::kConsult, {}};
    return {NoteTypeKind::kOther, s};
}

std::string NoteType::str() const {
    switch (kind) {
        case NoteTypeKind::kProgress: return "progress";
        case NoteTypeKind::kDischarge: return "discharge";
        case NoteTypeKind::kRadiology: return "radiology";
        case NoteTypeKind::kNursing: return "nursing";
        case NoteTypeKind::kEd: return "ed";
        case NoteTypeKind::kConsult: return "consult";
        case NoteTypeKind::kOther: return other_label;
    }
    return other_label;
}

size_t utf8_length(const std::string& s) {
    size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xc0) != 0x80) ++n;
    }
    return n;
}

Corpus::Corpus(std::vector<Note> notes) : notes_(std::move(notes)) {
    by_note_id_.reserve(notes_.size());
    for (size_t i = 0; i < notes_.size(); ++i) {
        auto [_, inserted] = by_note_id_.emplace(notes_[i].note_id, i);
        if (!inserted) {
            throw CorpusError(CorpusError::Kind::kDuplicateNoteId,
                              "duplicate note_id '" + notes_[i].note_id + "'");
        }
        by_patient_[notes_[i].patient_id].push_back(i);
    }
}

const Note* Corpus::find(const std::string& note_id) const {
    auto it = by_note_id_.find(note_id);
    return it == by_note_id_.end() ? nullptr : &notes_[it->second];
}

std::vector<const Note*> Corpus::notes_of_patient(const std::string& patient_id) const {
    std::vector<const Note*> out;
    auto it = by_patient_.find(patient_id);
    if (it == by_patient_.end()) return out;
    out.reserve(it->second.size());
    for (size_t i : it->second) out.push_back(&notes_[i]);
    return out;
}

std::string Corpus::content_hash() const {
    std::string all;
    for (const Note& n : notes_) {
        all += note_to_json_line(n);
        all += '\n';
    }
    return sha256_hex(all);
}

namespace {

void validate_spans(const Note& note, size_t line_no) {
    const int64_t text_len = static_cast<int64_t>(utf8_length(note.text));
    for (const PhiSpan& sp : note.phi_spans) {
        if (sp.start < 0 || sp.start >= sp.end || sp.end > text_len) {
            std::ostringstream msg;
            msg << "note '" << note.note_id << "': phi span [" << sp.start << "," << sp.end
                << ") out of bounds for text of length " << text_len;
            if (line_no > 0) msg << " (line " << line_no << ")";
            throw CorpusError(CorpusError::Kind::kInvalidSpan, msg.str());
        }
    }
}

}  // namespace

Note parse_note_line(const std::string& line, size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw CorpusError(CorpusError::Kind::kMalformedLine,
                          "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) {
        throw CorpusError(CorpusError::Kind::kMalformedLine,
                          "line " + std::to_string(line_no) + ": record is not an object");
    }

    Note note;
    try {
        note.note_id = j.at("note_id").get<std::string>();
        note.patient_id = j.at("patient_id").get<std::string>();
        note.text = j.at("text").get<std::string>();
        note.note_type = NoteType::from_string(
            j.contains("note_type") && j["note_type"].is_string() ? j["note_type"].get<std::string>()
                                                                  : std::string{});
        if (j.contains("admission_year") && !j["admission_year"].is_null()) {
            note.admission_year = j["admission_year"].get<int>();
        }
        if (j.contains("quality_score") && !j["quality_score"].is_null()) {
            note.quality_score = j["quality_score"].get<double>();
        }
        if (j.contains("source") && j["source"].is_string()) {
            note.source = j["source"].get<std::string>();
        }
        if (j.contains("icd_codes")) {
            for (const auto& c : j["icd_codes"]) {
                note.icd_codes.push_back(c.get<std::string>());
            }
            std::sort(note.icd_codes.begin(), note.icd_codes.end());
            note.icd_codes.erase(std::unique(note.icd_codes.begin(), note.icd_codes.end()),
                                 note.icd_codes.end());
        }
        if (j.contains("phi_spans")) {
            for (const auto& sp : j["phi_spans"]) {
                PhiSpan span;
                span.start = sp.at("start").get<int64_t>();
                span.end = sp.at("end").get<int64_t>();
                const std::string cat = sp.at("category").get<std::string>();
                auto parsed = phi_category_from_string(cat);
                if (!parsed) {
                    throw CorpusError(CorpusError::Kind::kInvalidCategory,
                                      "note '" + note.note_id + "': unknown PHI category '" + cat +
                                          "' (line " + std::to_string(line_no) + ")");
                }
                span.category = *parsed;
                note.phi_spans.push_back(span);
            }
        }
    } catch (const CorpusError&) {
        throw;
    } catch (const json::exception& e) {
        throw CorpusError(CorpusError::Kind::kMalformedLine,
                          "line " + std::to_string(line_no) + ": " + e.what());
    }

    validate_spans(note, line_no);
    return note;
}

std::string note_to_json_line(const Note& note) {
    json j;
    j["note_id"] = note.note_id;
    j["patient_id"] = note.patient_id;
    j["text"] = note.text;
    j["note_type"] = note.note_type.str();
    if (note.admission_year) j["admission_year"] = *note.admission_year;
    if (note.quality_score) j["quality_score"] = *note.quality_score;
    j["source"] = note.source;
    j["icd_codes"] = note.icd_codes;
    json spans = json::array();
    for (const PhiSpan& sp : note.phi_spans) {
        spans.push_back({{"start", sp.start}, {"end", sp.end}, {"category", to_string(sp.category)}});
    }
    j["phi_spans"] = spans;
    return j.dump();
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw CorpusError(CorpusError::Kind::kIo, "cannot open corpus file " + path.string());
    }
    std::vector<Note> notes;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        notes.push_back(parse_note_line(line, line_no));
    }
    return Corpus(std::move(notes));
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CorpusError(CorpusError::Kind::kIo, "cannot write corpus file " + path.string());
    }
    for (const Note& n : corpus.notes()) {
        out << note_to_json_line(n) << '\n';
    }
}

std::string to_string(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kVal: return "val";
        case Split::kTest: return "test";
    }
    return "train";
}

std::string to_string(SplitKey k) {
    return k == SplitKey::kPatient ? "patient" : "note";
}

std::optional<Split> split_from_string(const std::string& s) {
    if (s == "train") return Split::kTrain;
    if (s == "val") return Split::kVal;
    if (s == "test") return Split::kTest;
    return std::nullopt;
}

std::optional<SplitKey> split_key_from_string(const std::string& s) {
    if (s == "patient") return SplitKey::kPatient;
    if (s == "note") return SplitKey::kNote;
    return std::nullopt;
}

size_t SplitManifest::count(Split s) const {
    size_t n = 0;
    for (const auto& [_, sp] : assignment) {
        if (sp == s) ++n;
    }
    return n;
}

std::string SplitManifest::content_hash() const {
    json j;
    j["split_key"] = to_string(split_key);
    j["seed"] = seed;
    json a = json::object();
    for (const auto& [id, sp] : assignment) a[id] = to_string(sp);
    j["assignment"] = a;
    return sha256_hex(j.dump());
}

std::vector<std::string> patient_split_violations(const SplitManifest& manifest,
                                                  const Corpus& corpus) {
    std::unordered_map<std::string, Split> patient_split;
    std::set<std::string> violating;
    for (const auto& [note_id, sp] : manifest.assignment) {
        const Note* note = corpus.find(note_id);
        if (!note) continue;
        auto [it, inserted] = patient_split.emplace(note->patient_id, sp);
        if (!inserted && it->second != sp) {
            violating.insert(note->patient_id);
        }
    }
    return {violating.begin(), violating.end()};
}

SplitManifest load_split(const std::filesystem::path& path, const Corpus& corpus) {
    std::ifstream in(path);
    if (!in) {
        throw SplitError(SplitError::Kind::kIo, "cannot open split manifest " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw SplitError(SplitError::Kind::kMalformed, std::string("split manifest: ") + e.what());
    }

    SplitManifest manifest;
    try {
        auto key = split_key_from_string(j.at("split_key").get<std::string>());
        if (!key) {
            throw SplitError(SplitError::Kind::kMalformed,
                             "split manifest: unknown split_key '" +
                                 j["split_key"].get<std::string>() + "'");
        }
        manifest.split_key = *key;
        manifest.seed = j.value("seed", 0);
        for (const auto& [note_id, sp] : j.at("assignment").items()) {
            auto split = split_from_string(sp.get<std::string>());
            if (!split) {
                throw SplitError(SplitError::Kind::kMalformed,
                                 "split manifest: unknown split '" + sp.get<std::string>() +
                                     "' for note '" + note_id + "'");
            }
            if (!corpus.find(note_id)) {
                throw SplitError(SplitError::Kind::kUnknownNoteId,
                                 "split manifest references unknown note_id '" + note_id + "'");
            }
            manifest.assignment[note_id] = *split;
        }
    } catch (const SplitError&) {
        throw;
    } catch (const json::exception& e) {
        throw SplitError(SplitError::Kind::kMalformed, std::string("split manifest: ") + e.what());
    }

    if (manifest.split_key == SplitKey::kPatient) {
        auto violating = patient_split_violations(manifest, corpus);
        if (!violating.empty()) {
            std::string msg = "patient split violation:";
            for (const auto& p : violating) msg += " " + p;
            throw SplitError(SplitError::Kind::kPatientSplitViolation, msg, violating);
        }
    }
    return manifest;
}

void write_split(const SplitManifest& manifest, const std::filesystem::path& path) {
    json j;
    j["split_key"] = to_string(manifest.split_key);
    j["seed"] = manifest.seed;
    json a = json::object();
    for (const auto& [id, sp] : manifest.assignment) a[id] = to_string(sp);
    j["assignment"] = a;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw SplitError(SplitError::Kind::kIo, "cannot write split manifest " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace relgate
