#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "kgdx/knowledge_graph.hpp"
#include "kgdx/model_client.hpp"
#include "kgdx/profile.hpp"
#include "kgdx/session.hpp"
#include "kgdx/verifier.hpp"

namespace kgdx::test {

std::filesystem::path source_dir();
std::filesystem::path toy_graph_path();
std::filesystem::path toy_profiles_dir();
std::filesystem::path test_data(const std::string& name);
std::filesystem::path golden(const std::string& name);

const KnowledgeGraph& toy_graph();
const std::vector<PatientProfile>& toy_profiles();
/// Six diseases D1..D6 with hand-countable overlaps; see tests/data/six_disease.json.
const KnowledgeGraph& six_disease_graph();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Compares against a stored golden. With KGDX_UPDATE_GOLDENS=1 in the
/// environment the golden is rewritten instead and the check passes.
bool matches_golden(const std::string& name, const std::string& actual);

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Chat model that replays canned replies in order and records each prompt.
class ScriptedChat : public ChatModel {
 public:
  explicit ScriptedChat(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(std::string_view prompt) override;
  std::vector<std::string> prompts;

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

/// Always asks the same question, whatever the evidence.
class AlwaysQuestionVerifier : public Verifier {
 public:
  Decision decide(const VerifierInput& in) override;
};

/// Rule components with simulator stances: the fully deterministic stack.
Components rule_components();

}  // namespace kgdx::test
