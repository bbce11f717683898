#pragma once
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nsk/bubble.hpp"
#include "nsk/field.hpp"
#include "nsk/flow.hpp"

namespace nsk {

// Heat-flow run parameters parsed from [flow].
struct FlowConfig {
    std::string input;   // initial map field file; empty -> use `base` on nx/half_width
    std::string base = "geodesic:0.8";
    int nx = 256;
    double half_width = 1.0;
    int steps = 200;
    double dt_factor = 0.2;
    int stride = 10;
    int dump_every = 0;  // numbered field files every k records (0 = final only)
    BoundaryMode bc = BoundaryMode::OneSided;
    double morrey_delta = 1.5;

    void validate() const;
};

// One INI experiment file: top-level `seed`, a [sequence] section with
// repeatable [bubble] sections, [analysis], and [flow].  Keys are typed;
// unknown keys and malformed values are usage errors.  Complex polynomial
// coefficients are space-separated ascending-degree tokens `re` or `re:im`.
struct ExperimentConfig {
    uint64_t seed = 0;
    SequenceSpec sequence;
    AnalysisConfig analysis;
    FlowConfig flow;
    bool has_sequence = false;
    bool has_analysis = false;
    bool has_flow = false;
    std::string text;  // raw file contents (hashed into the manifest)
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// FNV-1a 64-bit, the checksum used throughout the manifests.
uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 1469598103934665603ull);
uint64_t fnv1a64(const std::string& s);
std::string hex64(uint64_t v);

// Reproducibility manifest: config hash, artifact version, per-stage wall
// clock, and the checksum of every emitted file.  Timings are excluded from
// determinism comparisons; the file checksums are the contract.
struct ManifestFile {
    std::string name;      // path relative to the output directory
    uint64_t bytes = 0;
    uint64_t checksum = 0;
};
struct RunManifest {
    std::string version;
    std::string command;
    uint64_t config_hash = 0;
    uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<ManifestFile> files;

    void add_file(const std::string& out_dir, const std::string& name);
    std::string to_json() const;
};

// Library version string recorded in manifests.
const char* version_string();

// Writes `text` to path (IoError on failure).
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace nsk
