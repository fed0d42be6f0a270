// oracle-forge: generate, score and replay test-oracle runs.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "oracle_forge/commands.hpp"

namespace of = oracle_forge;

namespace {

std::vector<std::string> split_command(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string word; in >> word;) out.push_back(word);
  return out;
}

void print_report(const of::CommandReport& report) {
  for (const auto& m : report.messages) std::cerr << "oracle-forge: " << m << "\n";
  if (!report.output.empty()) std::cout << report.output.string() << "\n";
}

void print_text_beside(const of::CommandReport& report) {
  if (report.output.empty()) return;
  auto text = report.output;
  text.replace_extension(".txt");
  try {
    std::cout << of::read_file(text);
  } catch (const of::IoError&) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent test oracle generation with sandboxed validation and refinement"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(of::kToolVersion));

  std::string runner_text;

  of::RunConfig config;
  std::string mode_name = "full";
  std::string script;
  auto* generate = app.add_subcommand("generate", "Run the pipeline over a task suite and write a run record");
  generate->add_option("--tasks", config.suite_path, "Task suite (JSON Lines)")->required();
  generate->add_option("--mode", mode_name, "direct | planning_only | refinement_only | full")->capture_default_str();
  generate->add_option("--provider", config.provider, "scripted | openai")->capture_default_str();
  generate->add_option("--model", config.model, "Model id sent to the provider")->capture_default_str();
  generate->add_option("--base-url", config.base_url, "Chat-completions base URL")->capture_default_str();
  generate->add_option("--script", script, "Provider script for the scripted provider");
  auto* max_refine = generate->add_option("--max-refine", config.max_refine, "Refinement iterations (0..10)")
                         ->capture_default_str();
  generate->add_option("--temperature", config.temperature)->capture_default_str();
  generate->add_option("--max-tokens", config.max_output_tokens)->capture_default_str();
  generate->add_option("--timeout-ms", config.limits.timeout_ms, "Per-assertion timeout")->capture_default_str();
  generate->add_option("--workers", config.workers, "Tasks run concurrently")->capture_default_str();
  generate->add_option("--cache-dir", config.cache_dir)->capture_default_str();
  generate->add_option("--out", config.out_dir, "Run record directory")->capture_default_str();
  generate->add_flag("--resume", config.resume, "Keep tasks an earlier run of this record finished");
  generate->add_option("--runner", runner_text, "Sandbox runner command line")->envname("ORACLE_FORGE_RUNNER");

  of::ScoringOptions scoring;
  std::string scoring_suite, scoring_out;
  int scoring_timeout = 0;
  auto add_scoring = [&](CLI::App* sub) {
    sub->add_option("--record", scoring.record_dir, "Run record directory")->required();
    sub->add_option("--tasks", scoring_suite, "Suite with canonical solutions (default: the record's snapshot)");
    sub->add_option("--out", scoring_out, "Report directory (default: the record)");
    sub->add_option("--runner", runner_text, "Sandbox runner command line")->envname("ORACLE_FORGE_RUNNER");
    sub->add_option("--timeout-ms", scoring_timeout, "Per-assertion timeout (default: the record's)");
    sub->add_option("--workers", scoring.workers, "Concurrent sandbox batches");
  };
  auto* evaluate = app.add_subcommand("evaluate", "Score final oracles against canonical solutions");
  add_scoring(evaluate);
  auto* bug_detect = app.add_subcommand("bug-detect", "Run verified-correct oracles against buggy variants");
  add_scoring(bug_detect);

  of::SelfDebugOptions self_debug_options;
  std::string sd_script, sd_cache;
  auto* self_debug = app.add_subcommand("self-debug", "One feedback-driven repair round per buggy variant");
  add_scoring(self_debug);
  self_debug->add_option("--provider", self_debug_options.provider)->capture_default_str();
  self_debug->add_option("--model", self_debug_options.model)->capture_default_str();
  self_debug->add_option("--base-url", self_debug_options.base_url)->capture_default_str();
  self_debug->add_option("--script", sd_script, "Provider script for the scripted provider");
  self_debug->add_option("--cache-dir", sd_cache, "Response cache (default: the record's)");

  of::ReplayOptions replay_options;
  std::string replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run a record from its stored exchanges and compare");
  replay->add_option("--record", replay_options.record_dir, "Run record directory")->required();
  replay->add_option("--out", replay_out, "Replay record directory (default: <record>-replay)");
  replay->add_option("--runner", runner_text, "Sandbox runner command line (default: the record's)")
      ->envname("ORACLE_FORGE_RUNNER");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : of::exit_codes::config;
  }

  auto finish_scoring = [&] {
    if (!scoring_suite.empty()) scoring.suite_path = scoring_suite;
    if (!scoring_out.empty()) scoring.out_dir = scoring_out;
    scoring.runner_command = split_command(runner_text);
    if (scoring_timeout > 0) {
      of::ExecLimits limits;
      limits.timeout_ms = scoring_timeout;
      scoring.limits = limits;
    }
  };

  try {
    if (generate->parsed()) {
      config.mode = of::mode_from_string(mode_name);
      config.max_refine_explicit = max_refine->count() > 0;
      if (!script.empty()) config.script_path = script;
      config.runner_command = split_command(runner_text);
      auto report = of::cmd_generate(config);
      print_report(report);
      std::cerr << "oracle-forge: " << report.provider_calls << " provider call(s), " << report.cache_hits
                << " cache hit(s)\n";
      return report.exit_code;
    }
    if (evaluate->parsed() || bug_detect->parsed()) {
      finish_scoring();
      auto report = evaluate->parsed() ? of::cmd_evaluate(scoring) : of::cmd_bug_detect(scoring);
      print_text_beside(report);
      print_report(report);
      return report.exit_code;
    }
    if (self_debug->parsed()) {
      finish_scoring();
      self_debug_options.scoring = scoring;
      if (!sd_script.empty()) self_debug_options.script_path = sd_script;
      if (!sd_cache.empty()) self_debug_options.cache_dir = sd_cache;
      auto report = of::cmd_self_debug(self_debug_options);
      print_text_beside(report);
      print_report(report);
      return report.exit_code;
    }
    if (replay->parsed()) {
      if (!replay_out.empty()) replay_options.out_dir = replay_out;
      replay_options.runner_command = split_command(runner_text);
      auto report = of::cmd_replay(replay_options);
      print_report(report);
      std::cerr << "oracle-forge: replay " << (report.identical ? "matches" : "differs from") << " the record ("
                << report.provider_calls << " provider call(s))\n";
      return report.exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "oracle-forge: error: " << e.what() << "\n";
    return of::exit_code_for(e);
  }
  return of::exit_codes::config;
}
