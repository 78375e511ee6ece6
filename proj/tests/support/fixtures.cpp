#include "fixtures.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "kgdx/patient_simulator.hpp"

namespace kgdx::test {

std::filesystem::path source_dir() { return KGDX_SOURCE_DIR; }
std::filesystem::path toy_graph_path() { return source_dir() / "data/fixtures/toy_graph.json"; }
std::filesystem::path toy_profiles_dir() { return source_dir() / "data/fixtures/profiles"; }
std::filesystem::path test_data(const std::string& name) { return source_dir() / "tests/data" / name; }
std::filesystem::path golden(const std::string& name) { return source_dir() / "tests/golden" / name; }

const KnowledgeGraph& toy_graph() {
  static const KnowledgeGraph g = load_graph_file(toy_graph_path());
  return g;
}

const std::vector<PatientProfile>& toy_profiles() {
  static const std::vector<PatientProfile> p = load_profiles(toy_profiles_dir());
  return p;
}

const KnowledgeGraph& six_disease_graph() {
  static const KnowledgeGraph g = load_graph_file(test_data("six_disease.json"));
  return g;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

bool matches_golden(const std::string& name, const std::string& actual) {
  const char* update = std::getenv("KGDX_UPDATE_GOLDENS");
  if (update && std::string(update) == "1") {
    write_file(golden(name), actual);
    return true;
  }
  return std::filesystem::exists(golden(name)) && read_file(golden(name)) == actual;
}

TempDir::TempDir() {
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("kgdx-test-" + std::to_string(rd()) + std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string ScriptedChat::complete(std::string_view prompt) {
  prompts.emplace_back(prompt);
  if (replies_.empty()) throw ModelError(ModelError::Kind::transport, "no scripted reply");
  const auto& r = replies_[std::min(next_, replies_.size() - 1)];
  ++next_;
  return r;
}

Decision AlwaysQuestionVerifier::decide(const VerifierInput&) {
  Decision d;
  d.action.think = "Keep asking.";
  d.action.question = "Is there anything else you can tell me?";
  return d;
}

Components rule_components() {
  Components c;
  c.scorer = std::make_shared<EvidenceScorer>();
  c.verifier = std::make_shared<RuleVerifier>();
  c.patient = std::make_shared<RulePatientSimulator>();
  return c;
}

}  // namespace kgdx::test
