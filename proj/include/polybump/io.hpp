#pragma once
// Artifact output: RFC-4180 CSV tables with deterministic (byte-stable)
// bodies, JSON reports with stable key order, and the report bundle that
// records every file a run produced.

#include "common.hpp"

#include "../../vendor/json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace polybump::io {

using json = nlohmann::json;  // object keys are kept in sorted (map) order

// fixed formatting so identical runs emit identical bytes
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += "\"";
    return out;
}

// accumulates a CSV body; CRLF line endings per RFC 4180
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header) { row_strings(header); }

    void row_strings(const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i) body_ += ',';
            body_ += csv_field(fields[i]);
        }
        body_ += "\r\n";
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> f;
        f.reserve(values.size());
        for (double v : values) f.push_back(fmt(v));
        row_strings(f);
    }

    const std::string& body() const { return body_; }

private:
    std::string body_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + path.string());
    out << content;
    if (!out) throw ConfigError("write failed: " + path.string());
}

// record of one CLI run: resolved config, artifact paths, pass/fail summary
struct ReportBundle {
    std::string run_id;
    std::string config_snapshot;
    std::vector<std::string> outputs;
    std::map<std::string, bool> summary;
    json details = json::object();

    bool all_pass() const {
        for (auto& [name, ok] : summary)
            if (!ok) return false;
        return true;
    }

    json to_json() const {
        json j;
        j["run_id"] = run_id;
        j["config"] = config_snapshot;
        j["outputs"] = outputs;
        json s = json::object();
        for (auto& [name, ok] : summary) s[name] = ok;
        j["summary"] = s;
        j["details"] = details;
        j["all_pass"] = all_pass();
        return j;
    }
};

// deterministic run id: FNV-1a hash of the resolved config text
inline std::string run_id_of(const std::string& config_text) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : config_text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
    return buf;
}

}  // namespace polybump::io
