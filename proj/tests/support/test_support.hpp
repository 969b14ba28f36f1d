#pragma once

#include "mathforge/synthesis.hpp"
#include "mathforge/verify.hpp"

#include <deque>
#include <mutex>
#include <vector>

#include <filesystem>
#include <string>

namespace testing_support {

std::filesystem::path fixtures_dir();
std::filesystem::path stub_runner();

mathforge::RunnerConfig stub_runner_config(std::size_t max_concurrent = 4);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Every problem of the masking fixture set, loaded through the corpus readers.
std::vector<mathforge::SourceProblem> masking_fixture_problems();

/// Returns canned responses in order; records every prompt.
class ScriptedClient : public mathforge::LlmClient {
public:
    explicit ScriptedClient(std::vector<std::string> responses);
    std::string complete(const std::string& prompt, const mathforge::CompletionParams& params) override;

    std::vector<std::string> prompts;

private:
    std::mutex mutex_;
    std::deque<std::string> responses_;
};

/// A complete four-section response for "Sam has {n1} boxes with {n2} pens
/// each" whose program body is `body`.
std::string pens_response(const std::string& body, const std::string& gq = {}, const std::string& numbers = {},
                          const std::string& constraints = {});
/// The program-only reply of a bug-fix round.
std::string pens_program_only(const std::string& body);
extern const std::string kPensQuestion;

/// A VERIFIED pens record for a problem with the given counts.
mathforge::SynthesisRecord verified_pens_record(const std::string& id, int boxes, int pens, mathforge::Executor& executor);

} // namespace testing_support
