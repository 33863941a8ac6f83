#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "relgate/artifact_doc.hpp"
#include "relgate/provenance.hpp"

namespace relgate {

struct GateError : std::runtime_error {
    enum class Kind { kIo, kMissingComponent, kCollision, kBadPolicy };
    Kind kind;
    GateError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

enum class CheckSeverity { kBlocking, kWarning };
enum class CheckStatus { kPass, kFail, kWarn };

std::string to_string(CheckSeverity s);
std::string to_string(CheckStatus s);

struct GateCheck {
    std::string check_id;
    CheckSeverity severity = CheckSeverity::kBlocking;
    nlohmann::json params = nlohmann::json::object();
};

class GatePolicy {
public:
    GatePolicy(std::string version, std::vector<GateCheck> checks);

    const std::string& policy_version() const { return version_; }
    const std::vector<GateCheck>& checks() const { return checks_; }
    const std::string& policy_hash() const { return hash_; }

    std::string to_json() const;
    static GatePolicy from_json_text(const std::string& text);
    static GatePolicy from_file(const std::filesystem::path& path);

private:
    std::string version_;
    std::vector<GateCheck> checks_;
    std::string hash_;
};

/// Blocking checks: documentation completeness, de-ID disclosure + sampling
/// plan, patient-level split, leakage ceilings (L(0.85) <= 0.5%,
/// L(0.70) <= 1%), agreement record when labeling happened, drift plan
/// presence, and hash integrity. Ceilings are policy-editable.
const GatePolicy& default_policy();

struct CheckResult {
    std::string check_id;
    CheckSeverity severity = CheckSeverity::kBlocking;
    CheckStatus status = CheckStatus::kFail;
    std::vector<std::string> messages;
    nlohmann::json evidence = nlohmann::json::object();
};

struct GateReport {
    std::vector<CheckResult> checks;  // policy order
    bool verdict_pass = false;
    std::string policy_version;
    std::string policy_hash;
    std::map<std::string, std::string> input_hashes;

    const CheckResult* find(const std::string& check_id) const;
    std::string to_json() const;  // deterministic: identical inputs, identical bytes
    std::string to_text() const;
};

/// Expected release layout under the bundle root.
const std::vector<std::string>& bundle_directories();

GateReport gate(const std::filesystem::path& bundle_root, const GatePolicy& policy);

struct BundleInputs {
    std::filesystem::path datasheet;
    std::filesystem::path card;
    std::filesystem::path provenance_dir;
    std::filesystem::path metrics_dir;
};

/// Creates /datasheet /model_card /provenance /metrics /release, copies the
/// inputs, and writes release/checksums covering every bundle file plus a
/// reviewer-facing release/summary.txt. Idempotent on unchanged inputs;
/// differing existing files raise kCollision.
void assemble_bundle(const BundleInputs& inputs, const std::filesystem::path& bundle_root);

/// `<sha256>  <relative path>` lines, sorted by path. The manifest itself
/// and an optional detached signature are excluded from coverage.
std::string checksum_manifest(const std::filesystem::path& bundle_root);

struct VerificationFinding {
    enum class Kind {
        kMissingComponent,
        kSchemaConformance,
        kMetricMismatch,
        kStaleEntity,
        kChecksumMismatch,
        kUncoveredFile,
        kMissingRecord,
    };
    Kind kind;
    std::string message;
};

std::string to_string(VerificationFinding::Kind k);

struct ContinuousVerificationReport {
    std::vector<VerificationFinding> findings;
    bool consistent() const { return findings.empty(); }
    std::string to_json() const;
    std::string to_text() const;
};

/// Re-validates schema conformance, re-computes completeness against the
/// recorded values, re-checks record-internal metric identities, and
/// verifies entity hashes plus the checksum manifest.
ContinuousVerificationReport verify_bundle(const std::filesystem::path& bundle_root);

}  // namespace relgate
