#include "nsk/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "nsk/errors.hpp"

#include "json.hpp"

namespace nsk {
namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void bad_key(const std::string& section, const std::string& key,
                          const char* why) {
    throw UsageError("config: [" + section + "] " + key + ": " + why);
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE)
        bad_key(section, key, "expected a number");
    return x;
}

long parse_int(const std::string& section, const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE)
        bad_key(section, key, "expected an integer");
    return x;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_key(section, key, "expected true/false");
}

// Ascending-degree coefficient list; each token `re` or `re:im`.
std::vector<cplx> parse_coeffs(const std::string& section, const std::string& key,
                               const std::string& v) {
    std::vector<cplx> out;
    for (const std::string& tok : split_ws(v)) {
        const size_t colon = tok.find(':');
        if (colon == std::string::npos) {
            out.emplace_back(parse_double(section, key, tok), 0.0);
        } else {
            out.emplace_back(parse_double(section, key, tok.substr(0, colon)),
                             parse_double(section, key, tok.substr(colon + 1)));
        }
    }
    if (out.empty()) bad_key(section, key, "expected at least one coefficient");
    return out;
}

BoundaryMode parse_bc(const std::string& section, const std::string& key,
                      const std::string& v) {
    if (v == "one-sided") return BoundaryMode::OneSided;
    if (v == "periodic") return BoundaryMode::Periodic;
    bad_key(section, key, "expected one-sided or periodic");
}

void apply_sequence_key(SequenceSpec& s, const std::string& key, const std::string& v) {
    const std::string sec = "sequence";
    if (key == "name") s.name = v;
    else if (key == "kind") {
        if (v != "glued" && v != "parker") bad_key(sec, key, "expected glued or parker");
        s.kind = v;
    } else if (key == "first") s.first = static_cast<int>(parse_int(sec, key, v));
    else if (key == "last") s.last = static_cast<int>(parse_int(sec, key, v));
    else if (key == "scale_ratio") s.scale_ratio = parse_double(sec, key, v);
    else if (key == "base_nx") s.base_nx = static_cast<int>(parse_int(sec, key, v));
    else if (key == "nx_cap") s.nx_cap = static_cast<int>(parse_int(sec, key, v));
    else if (key == "domain_half_width") s.domain_half_width = parse_double(sec, key, v);
    else if (key == "base") s.base = v;
    else if (key == "identity_expected") s.identity_expected = parse_bool(sec, key, v);
    else if (key == "spiral_alpha") s.spiral_alpha = parse_double(sec, key, v);
    else if (key == "seam_gamma") s.seam_gamma = parse_double(sec, key, v);
    else if (key == "neck_eta") s.neck_eta = parse_double(sec, key, v);
    else if (key == "seam_k") s.seam_k = parse_double(sec, key, v);
    else bad_key(sec, key, "unknown key");
}

void apply_bubble_key(BubbleSpec& b, const std::string& key, const std::string& v) {
    const std::string sec = "bubble";
    if (key == "center") {
        const std::vector<std::string> parts = split_ws(v);
        if (parts.size() != 2) bad_key(sec, key, "expected two numbers");
        b.center = {parse_double(sec, key, parts[0]), parse_double(sec, key, parts[1])};
    } else if (key == "scale") b.scale = parse_double(sec, key, v);
    else if (key == "orientation") b.orientation = parse_double(sec, key, v);
    else if (key == "p") b.P.c = parse_coeffs(sec, key, v);
    else if (key == "q") b.Q.c = parse_coeffs(sec, key, v);
    else bad_key(sec, key, "unknown key");
}

void apply_analysis_key(AnalysisConfig& a, const std::string& key, const std::string& v) {
    const std::string sec = "analysis";
    if (key == "epsilon0") a.epsilon0 = parse_double(sec, key, v);
    else if (key == "c0") a.c0 = parse_double(sec, key, v);
    else if (key == "delta") a.delta = parse_double(sec, key, v);
    else if (key == "lambda_ladder") {
        a.lambda_ladder.clear();
        for (const std::string& tok : split_ws(v))
            a.lambda_ladder.push_back(parse_double(sec, key, tok));
    } else if (key == "m_cap") a.m_cap = static_cast<int>(parse_int(sec, key, v));
    else if (key == "e0_cap") a.e0_cap = parse_double(sec, key, v);
    else if (key == "detect_radius") a.detect_radius = parse_double(sec, key, v);
    else if (key == "neck_inner_factor") a.neck_inner_factor = parse_double(sec, key, v);
    else if (key == "gauge_window_nx")
        a.gauge_window_nx = static_cast<int>(parse_int(sec, key, v));
    else if (key == "blowup_nx") a.blowup_nx = static_cast<int>(parse_int(sec, key, v));
    else if (key == "blowup_half_width") a.blowup_half_width = parse_double(sec, key, v);
    else bad_key(sec, key, "unknown key");
}

void apply_flow_key(FlowConfig& f, const std::string& key, const std::string& v) {
    const std::string sec = "flow";
    if (key == "input") f.input = v;
    else if (key == "base") f.base = v;
    else if (key == "nx") f.nx = static_cast<int>(parse_int(sec, key, v));
    else if (key == "half_width") f.half_width = parse_double(sec, key, v);
    else if (key == "steps") f.steps = static_cast<int>(parse_int(sec, key, v));
    else if (key == "dt_factor") f.dt_factor = parse_double(sec, key, v);
    else if (key == "stride") f.stride = static_cast<int>(parse_int(sec, key, v));
    else if (key == "dump_every") f.dump_every = static_cast<int>(parse_int(sec, key, v));
    else if (key == "bc") f.bc = parse_bc(sec, key, v);
    else if (key == "morrey_delta") f.morrey_delta = parse_double(sec, key, v);
    else bad_key(sec, key, "unknown key");
}

} // namespace

void FlowConfig::validate() const {
    if (input.empty() && base.empty())
        throw UsageError("flow config: either input or base is required");
    if (input.empty()) {
        if (nx < 8) throw UsageError("flow config: nx must be >= 8");
        if (!(half_width > 0.0)) throw UsageError("flow config: half_width must be positive");
    }
    if (steps < 1) throw UsageError("flow config: steps must be >= 1");
    // dt_factor > 0.2 is not a config error: the flow rejects it as a
    // stability violation so the CLI surfaces exit code 4.
    if (!(dt_factor > 0.0)) throw UsageError("flow config: dt_factor must be positive");
    if (stride < 1) throw UsageError("flow config: stride must be >= 1");
    if (dump_every < 0) throw UsageError("flow config: dump_every must be >= 0");
    if (!(morrey_delta >= 0.0 && morrey_delta <= 2.0))
        throw UsageError("flow config: morrey_delta must lie in [0, 2]");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    cfg.text = text;
    std::string section;  // "" = top level
    size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        std::string line =
            text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        const size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw UsageError("config line " + std::to_string(lineno) +
                                 ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section == "sequence") cfg.has_sequence = true;
            else if (section == "analysis") cfg.has_analysis = true;
            else if (section == "flow") cfg.has_flow = true;
            else if (section == "bubble") {
                cfg.has_sequence = true;
                cfg.sequence.bubbles.emplace_back();
                // A fresh [bubble] starts from the default P = z, Q = 1.
                cfg.sequence.bubbles.back().P.c = {cplx(0.0, 0.0), cplx(1.0, 0.0)};
                cfg.sequence.bubbles.back().Q.c = {cplx(1.0, 0.0)};
            } else
                throw UsageError("config line " + std::to_string(lineno) +
                                 ": unknown section [" + section + "]");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) +
                             ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError("config line " + std::to_string(lineno) +
                                          ": empty key");
        if (section.empty()) {
            if (key == "seed") {
                errno = 0;
                char* end = nullptr;
                cfg.seed = std::strtoull(val.c_str(), &end, 10);
                if (end == val.c_str() || *end != '\0' || errno == ERANGE)
                    throw UsageError("config: seed: expected an unsigned integer");
            } else
                throw UsageError("config: unknown top-level key " + key);
        } else if (section == "sequence") {
            apply_sequence_key(cfg.sequence, key, val);
        } else if (section == "bubble") {
            if (cfg.sequence.bubbles.empty())
                throw UsageError("config: [bubble] key outside a bubble section");
            apply_bubble_key(cfg.sequence.bubbles.back(), key, val);
        } else if (section == "analysis") {
            apply_analysis_key(cfg.analysis, key, val);
        } else if (section == "flow") {
            apply_flow_key(cfg.flow, key, val);
        }
    }
    if (cfg.has_sequence) {
        for (const BubbleSpec& b : cfg.sequence.bubbles) b.validate();
        if (cfg.sequence.first > cfg.sequence.last)
            throw UsageError("config: sequence first must be <= last");
    }
    if (cfg.has_analysis) cfg.analysis.validate();
    if (cfg.has_flow) cfg.flow.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config_text(read_text_file(path));
}

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void RunManifest::add_file(const std::string& out_dir, const std::string& name) {
    const std::string full = out_dir.empty() ? name : out_dir + "/" + name;
    std::FILE* fp = std::fopen(full.c_str(), "rb");
    if (!fp) throw IoError("manifest: cannot read emitted file " + full);
    ManifestFile mf;
    mf.name = name;
    uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, fp)) > 0) {
        h = fnv1a64(buf, got, h);
        mf.bytes += got;
    }
    const bool err = std::ferror(fp) != 0;
    std::fclose(fp);
    if (err) throw IoError("manifest: read error on " + full);
    mf.checksum = h;
    files.push_back(std::move(mf));
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = version;
    j["command"] = command;
    j["config_hash"] = hex64(config_hash);
    j["seed"] = seed;
    nlohmann::ordered_json st = nlohmann::ordered_json::array();
    for (const auto& [name, sec] : stage_seconds)
        st.push_back({{"stage", name}, {"seconds", sec}});
    j["stages"] = std::move(st);  // wall clock; excluded from determinism checks
    nlohmann::ordered_json fl = nlohmann::ordered_json::array();
    for (const ManifestFile& f : files)
        fl.push_back(
            {{"name", f.name}, {"bytes", f.bytes}, {"fnv1a64", hex64(f.checksum)}});
    j["files"] = std::move(fl);
    return j.dump(2);
}

const char* version_string() { return "nsk 0.1.0"; }

void write_text_file(const std::string& path, const std::string& text) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open " + path + " for writing");
    const size_t put = std::fwrite(text.data(), 1, text.size(), fp);
    const bool err = std::fclose(fp) != 0 || put != text.size();
    if (err) throw IoError("short write on " + path);
}

std::string read_text_file(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open " + path);
    std::string out;
    char buf[1 << 16];
    size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, fp)) > 0) out.append(buf, got);
    const bool err = std::ferror(fp) != 0;
    std::fclose(fp);
    if (err) throw IoError("read error on " + path);
    return out;
}

} // namespace nsk
