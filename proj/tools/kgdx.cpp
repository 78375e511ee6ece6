#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "kgdx/backends.hpp"
#include "kgdx/evaluation.hpp"
#include "kgdx/http_api.hpp"
#include "kgdx/knowledge_graph.hpp"
#include "kgdx/model_client.hpp"
#include "kgdx/patient_simulator.hpp"
#include "kgdx/profile.hpp"
#include "kgdx/rng.hpp"
#include "kgdx/runner.hpp"
#include "kgdx/session_service.hpp"
#include "kgdx/synthetic.hpp"
#include "kgdx/text.hpp"
#include "kgdx/transcript.hpp"

namespace {

using nlohmann::json;

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

void write_lines(const std::string& path, const std::vector<json>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& d : docs) out << d.dump() << '\n';
}

struct PersonaFlags {
  std::string proficiency, personality, recall, confusion, specificity;

  std::optional<kgdx::Persona> resolve() const {
    json doc = json::object();
    if (!proficiency.empty()) doc["proficiency"] = proficiency;
    if (!personality.empty()) doc["personality"] = personality;
    if (!recall.empty()) doc["recall"] = recall;
    if (!confusion.empty()) doc["confusion"] = confusion;
    if (!specificity.empty()) doc["specificity"] = specificity;
    if (doc.empty()) return std::nullopt;
    return kgdx::persona_from_json(doc);
  }
};

void add_persona_flags(CLI::App* cmd, PersonaFlags& p) {
  cmd->add_option("--proficiency", p.proficiency, "low | medium | high");
  cmd->add_option("--personality", p.personality,
                  "plain | verbose | pleasing | impatient | distrust | overanxious");
  cmd->add_option("--recall", p.recall, "low | high");
  cmd->add_option("--confusion", p.confusion, "low | high");
  cmd->add_option("--specificity", p.specificity, "low | normal");
}

int cmd_validate_graph(const std::string& path) {
  auto report = kgdx::inspect_graph(read_json_file(path));
  std::cout << "nodes: " << report.total_nodes << "\n";
  for (const auto& [kind, n] : report.node_counts) std::cout << "  " << kind << ": " << n << "\n";
  std::cout << "edges: " << report.total_edges << "\n";
  for (const auto& [rel, n] : report.edge_counts) std::cout << "  " << rel << ": " << n << "\n";
  for (const auto& v : report.violations) std::cout << "violation: " << v.element << ": " << v.message << "\n";
  std::cout << (report.valid() ? "valid" : "invalid") << "\n";
  return report.valid() ? 0 : 1;
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph-grounded diagnostic dialogue engine"};
  app.require_subcommand(1);

  std::string graph_path, profiles_path, out_path, in_path;
  std::uint64_t seed = 0;

  // validate-graph
  auto* validate = app.add_subcommand("validate-graph", "Check a graph file and print its counts");
  validate->add_option("graph,--graph", graph_path, "Graph JSON")->required();

  // run
  kgdx::BackendChoice backends;
  kgdx::RunConfig run_config;
  unsigned parallel = 1;
  PersonaFlags persona_flags;
  auto* run = app.add_subcommand("run", "Run simulated sessions and write transcripts");
  run->add_option("--graph", graph_path)->required();
  run->add_option("--profiles", profiles_path, "Profile file or directory")->required();
  run->add_option("--out", out_path, "Transcript JSONL file, or a directory for transcripts.jsonl")
      ->required();
  run->add_option("--scorer", backends.scorer, "evidence | retrieval | external");
  run->add_option("--verifier", backends.verifier, "rule | external | cod");
  run->add_option("--patient", backends.patient, "rule | external");
  run->add_option("--n", run_config.hypothesis.n, "Anchor count");
  run->add_option("--tau", run_config.hypothesis.tau, "Competitor score threshold");
  run->add_option("--max-turns", run_config.max_turns);
  run->add_option("--stop-confidence", run_config.verifier.stop_confidence);
  run->add_option("--cod-threshold", run_config.verifier.cod_threshold);
  run->add_option("--seed", seed);
  run->add_option("--parallel", parallel)->check(CLI::PositiveNumber);
  add_persona_flags(run, persona_flags);

  // gen-dialogues
  std::string examples_out;
  int gen_max_turn = 50;
  auto* gen = app.add_subcommand("gen-dialogues", "Generate synthetic training dialogues with a chat model");
  gen->add_option("--graph", graph_path)->required();
  gen->add_option("--profiles", profiles_path)->required();
  gen->add_option("--out", out_path, "Transcript JSONL")->required();
  gen->add_option("--examples-out", examples_out, "Verifier example JSONL")->required();
  gen->add_option("--max-turns", gen_max_turn);
  gen->add_option("--seed", seed);

  // augment
  double fraction = 0.2;
  auto* augment = app.add_subcommand("augment", "Write truncated variants of finished dialogues");
  augment->add_option("--in", in_path, "Transcript JSONL or directory")->required();
  augment->add_option("--out", out_path, "Variant JSONL")->required();
  augment->add_option("--fraction", fraction)->check(CLI::Range(0.0, 1.0));
  augment->add_option("--seed", seed);

  // split
  std::size_t cap = 0;
  std::string out_dir;
  auto* split = app.add_subcommand("split", "Stratified train/valid/test split of profiles");
  split->add_option("--profiles", profiles_path)->required();
  split->add_option("--out-dir", out_dir)->required();
  split->add_option("--cap", cap, "Max training profiles per disease (0: none)");
  split->add_option("--seed", seed);

  // bound
  auto* bound = app.add_subcommand("bound", "Best reachable Recall@1 for a profile set");
  bound->add_option("--profiles", profiles_path)->required();

  // evaluate
  bool exclude_failures = false;
  std::string slice = "persona";
  auto* evaluate = app.add_subcommand("evaluate", "Score transcripts");
  evaluate->add_option("--in", in_path, "Transcript JSONL or directory")->required();
  evaluate->add_option("--out", out_path, "Metrics JSON");
  evaluate->add_flag("--exclude-failures-from-turns", exclude_failures);
  evaluate->add_option("--slice", slice, "persona | none")->check(CLI::IsMember({"persona", "none"}));

  // serve
  std::string data_dir = "sessions";
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve interactive sessions over HTTP");
  serve->add_option("--graph", graph_path)->required();
  serve->add_option("--profiles", profiles_path, "Profiles for replay-mode sessions");
  serve->add_option("--data-dir", data_dir);
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate_graph(graph_path);

    if (*run) {
      auto g = kgdx::load_graph_file(graph_path);
      auto profiles = kgdx::load_profiles(profiles_path);
      run_config.seed = seed;
      kgdx::validate(run_config);
      kgdx::BatchOptions options{parallel, persona_flags.resolve()};
      auto endpoints = kgdx::ModelEndpoints::from_env();
      auto factory = [&] { return kgdx::make_components(backends, run_config.verifier, endpoints); };
      factory();  // surfaces configuration errors before any session starts
      auto transcripts = kgdx::run_batch(g, profiles, factory, run_config, options);
      std::filesystem::path out = out_path;
      if (std::filesystem::is_directory(out) || !out.has_extension()) {
        std::filesystem::create_directories(out);
        out /= "transcripts.jsonl";
      }
      kgdx::write_transcripts(out, transcripts);
      std::cout << kgdx::render_table(kgdx::evaluate_run(transcripts), false);
      return 0;
    }

    if (*gen) {
      auto g = kgdx::load_graph_file(graph_path);
      auto profiles = kgdx::load_profiles(profiles_path);
      auto endpoint = kgdx::EndpointConfig::from_env();
      if (!endpoint.configured()) throw std::runtime_error("KGDX_MODEL_ENDPOINT is not set");
      kgdx::HttpChatModel clinician(endpoint);
      kgdx::RulePatientSimulator patient;
      std::vector<kgdx::Transcript> transcripts;
      std::vector<json> examples;
      for (const auto& p : profiles) {
        const auto session_seed = kgdx::derive_seed(seed, p.id);
        auto result = kgdx::generate_synthetic_dialogue(p, g, clinician, patient,
                                                        kgdx::batch_persona(seed, p.id), session_seed,
                                                        gen_max_turn);
        if (result.skipped) {
          std::cerr << p.id << ": skipped (" << result.skip_reason << ")\n";
          continue;
        }
        transcripts.push_back(result.transcript);
        for (const auto& e : result.examples) examples.push_back(kgdx::to_json(e));
      }
      kgdx::write_transcripts(out_path, transcripts);
      write_lines(examples_out, examples);
      std::cout << transcripts.size() << " dialogues, " << examples.size() << " examples\n";
      return 0;
    }

    if (*augment) {
      std::vector<json> docs;
      for (const auto& t : kgdx::read_transcripts(in_path)) {
        for (const auto& v : kgdx::truncate_variants(t, fraction, kgdx::derive_seed(seed, t.profile_id))) {
          docs.push_back(kgdx::to_json(v));
        }
      }
      write_lines(out_path, docs);
      std::cout << docs.size() << " variants\n";
      return 0;
    }

    if (*split) {
      auto result = kgdx::stratified_split(kgdx::load_profiles(profiles_path), {}, cap, seed);
      std::filesystem::create_directories(out_dir);
      auto dump = [&](const char* name, const std::vector<kgdx::PatientProfile>& part) {
        std::vector<json> docs;
        for (const auto& p : part) docs.push_back(kgdx::to_json(p));
        write_lines((std::filesystem::path(out_dir) / name).string(), docs);
        std::cout << name << ": " << part.size() << "\n";
      };
      dump("train.jsonl", result.train);
      dump("valid.jsonl", result.valid);
      dump("test.jsonl", result.test);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      if (!result.dropped.empty()) std::cout << "dropped: " << result.dropped.size() << "\n";
      return 0;
    }

    if (*bound) {
      auto result = kgdx::max_recall1_bound(kgdx::load_profiles(profiles_path));
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << kgdx::format_fixed(result.value, 3) << "\n";
      return 0;
    }

    if (*evaluate) {
      std::vector<kgdx::Transcript> transcripts;
      try {
        transcripts = kgdx::read_transcripts(in_path);
      } catch (const kgdx::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
      }
      auto report = kgdx::evaluate_run(transcripts, {exclude_failures});
      std::cout << kgdx::render_table(report, slice == "persona");
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << kgdx::to_json(report).dump(2) << "\n";
      }
      return 0;
    }

    if (*serve) {
      kgdx::ServiceConfig config;
      config.data_dir = data_dir;
      config.graph = std::make_shared<const kgdx::KnowledgeGraph>(kgdx::load_graph_file(graph_path));
      if (!profiles_path.empty()) config.profiles = kgdx::load_profiles(profiles_path);
      config.endpoints = kgdx::ModelEndpoints::from_env();
      config.max_active_sessions = std::stoul(env_or("KGDX_MAX_PARALLEL_SESSIONS", "0"));
      kgdx::SessionManager sessions(std::move(config));
      for (const auto& note : sessions.recovery_notes()) std::cerr << "recovery: " << note << "\n";

      httplib::Server server;
      kgdx::HttpOptions options;
      options.api_token = env_or("KGDX_API_TOKEN", "");
      options.cors_origin = env_or("KGDX_CORS_ORIGIN", "*");
      kgdx::install_routes(server, sessions, options);

      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      std::thread watcher([&] {
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
        server.stop();
      });
      std::cerr << "listening on " << host << ":" << port << " (" << sessions.ids().size()
                << " sessions restored)\n";
      const bool ok = server.listen(host, port);
      g_stop = 1;
      watcher.join();
      return ok ? 0 : 1;
    }
  } catch (const kgdx::GraphValidationError& e) {
    for (const auto& v : e.violations()) std::cerr << v.element << ": " << v.message << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
