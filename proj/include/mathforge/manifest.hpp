#pragma once

#include "mathforge/jsonl.hpp"

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace mathforge {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Written beside a run's outputs as `<first output>.manifest.json`.
class RunManifest {
public:
    explicit RunManifest(std::string subcommand);

    void set_config(const std::string& resolved_config);
    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    void set_seed(const std::string& name, std::uint64_t value);
    /// Milliseconds since construction, recorded under `name`.
    void mark(const std::string& name);

    const std::vector<std::filesystem::path>& outputs() const { return outputs_; }
    std::filesystem::path path() const;

    /// Digests every input and output as it is on disk now.
    Json to_json() const;
    /// Writes to path(); a no-op when there are no outputs.
    void write() const;

private:
    std::string subcommand_;
    std::string config_digest_;
    std::vector<std::filesystem::path> inputs_;
    std::vector<std::filesystem::path> outputs_;
    Json seeds_ = Json::object();
    Json timings_ = Json::object();
    std::chrono::steady_clock::time_point start_;
};

} // namespace mathforge
