#pragma once

#include <json.hpp>

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace mathforge {

using Json = nlohmann::ordered_json;

/// Reads a whole file. Throws Error(UnreadableFile).
std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temp file and rename so readers never see a partial file.
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// One JSON value per non-blank line. Throws Error(SchemaMismatch) naming the
/// offending line on a parse failure.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

/// Append-only line log. Each append is one write(2) on an O_APPEND
/// descriptor, so concurrent writers (threads or processes) never interleave
/// within a line.
class AppendLog {
public:
    explicit AppendLog(std::filesystem::path path);
    ~AppendLog();
    AppendLog(const AppendLog&) = delete;
    AppendLog& operator=(const AppendLog&) = delete;

    void append(const Json& record);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
    std::mutex mutex_;
};

} // namespace mathforge
