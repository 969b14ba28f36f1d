#include "mathforge/manifest.hpp"

#include "mathforge/digest.hpp"

#include <algorithm>

namespace mathforge {

RunManifest::RunManifest(std::string subcommand)
    : subcommand_(std::move(subcommand)), start_(std::chrono::steady_clock::now()) {}

void RunManifest::set_config(const std::string& resolved_config) { config_digest_ = sha256_hex(resolved_config); }

void RunManifest::add_input(const std::filesystem::path& path) {
    if (std::find(inputs_.begin(), inputs_.end(), path) == inputs_.end()) inputs_.push_back(path);
}

void RunManifest::add_output(const std::filesystem::path& path) {
    if (std::find(outputs_.begin(), outputs_.end(), path) == outputs_.end()) outputs_.push_back(path);
}

void RunManifest::set_seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

void RunManifest::mark(const std::string& name) {
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_);
    timings_[name] = ms.count();
}

std::filesystem::path RunManifest::path() const {
    if (outputs_.empty()) return {};
    std::filesystem::path p = outputs_.front();
    p += ".manifest.json";
    return p;
}

Json RunManifest::to_json() const {
    auto files = [](const std::vector<std::filesystem::path>& paths) {
        Json arr = Json::array();
        for (const auto& p : paths) {
            std::error_code ec;
            bool present = std::filesystem::is_regular_file(p, ec);
            arr.push_back({{"path", p.string()}, {"sha256", present ? Json(file_sha256(p)) : Json(nullptr)}});
        }
        return arr;
    };
    Json j;
    j["tool"] = "mathforge";
    j["version"] = kToolVersion;
    j["subcommand"] = subcommand_;
    j["config_digest"] = config_digest_;
    j["inputs"] = files(inputs_);
    j["outputs"] = files(outputs_);
    j["seeds"] = seeds_;
    j["timings_ms"] = timings_;
    return j;
}

void RunManifest::write() const {
    if (outputs_.empty()) return;
    write_text_file(path(), to_json().dump(2) + "\n");
}

} // namespace mathforge
