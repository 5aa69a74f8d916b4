#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace advgraph {

// Plain-text key-value configuration (`key = value` lines, '#' comments)
// plus command-line overrides. Overrides win over file values.
class PipelineConfig {
public:
    PipelineConfig() = default;

    static PipelineConfig from_file(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    // Parses a `key=value` override.
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback, long long min_value,
                      long long max_value) const;
    double get_double(const std::string& key, double fallback, double min_value,
                      double max_value) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::string& fallback) const;

    uint64_t seed() const;
    int workers() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Pipeline commands in dependency order.
const std::vector<std::string>& pipeline_commands();

// Runs one stage: validates stage dependencies, computes the artifact(s),
// and writes a manifest (input fingerprints, seed, version) next to each
// artifact. Throws Error with a diagnostic on any failure.
void run_stage(const std::string& command, const PipelineConfig& config);

} // namespace advgraph
