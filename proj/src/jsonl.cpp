#include "mathforge/jsonl.hpp"

#include "mathforge/error.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mathforge {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorCode::IoError, "short write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    std::vector<Json> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::SchemaMismatch,
                        path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
    std::string content;
    for (const auto& r : records) {
        content += r.dump();
        content.push_back('\n');
    }
    write_text_file(path, content);
}

AppendLog::AppendLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
        throw Error(ErrorCode::IoError, "cannot open " + path_.string() + ": " + std::strerror(errno));
    }
}

AppendLog::~AppendLog() {
    if (fd_ >= 0) ::close(fd_);
}

void AppendLog::append(const Json& record) {
    std::string line = record.dump();
    line.push_back('\n');
    std::lock_guard lock(mutex_);
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        ssize_t n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::IoError, "append to " + path_.string() + " failed");
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

} // namespace mathforge
