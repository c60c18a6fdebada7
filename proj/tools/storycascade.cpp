#include <storycascade/eval.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

using namespace storycascade;

namespace {

void add_cascade_flags(CLI::App* cmd, CascadeConfig& c) {
  cmd->add_option("--votes-per-call", c.votes_per_call, "Votes requested per call")
      ->capture_default_str();
  cmd->add_option("--supermajority-threshold", c.supermajority_threshold,
                  "Votes needed to decide after the first call")
      ->capture_default_str();
  cmd->add_option("--escalation-calls", c.escalation_calls, "Extra calls on escalation")
      ->capture_default_str();
}

void add_de_flags(CLI::App* cmd, DeConfig& de) {
  cmd->add_option("--population-size", de.population_size)->capture_default_str();
  cmd->add_option("--mutation-factor", de.mutation_factor)->capture_default_str();
  cmd->add_option("--crossover-rate", de.crossover_rate)->capture_default_str();
  cmd->add_option("--generations", de.generations)->capture_default_str();
  cmd->add_option("--lower-bound", de.lower_bound)->capture_default_str();
  cmd->add_option("--upper-bound", de.upper_bound)->capture_default_str();
  cmd->add_option("--seed", de.rng_seed, "DE and holdout shuffle seed")->capture_default_str();
}

void add_embedder_flags(CLI::App* cmd, EmbedderConfig& e) {
  cmd->add_option("--embed-url", e.url,
                  "Base URL of a remote embedding service (default: built-in hash embedder)");
  cmd->add_option("--hash-seed", e.hash_seed, "Seed of the built-in hash embedder")
      ->capture_default_str();
}

const std::map<std::string, EventNormalization> kEventNorms = {
    {"dice", EventNormalization::Dice}, {"max", EventNormalization::Max}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Narrative similarity by vote cascade with a symbolic tiebreaker"};
  app.require_subcommand(1);
  int exit_code = 0;

  RunConfig run;
  std::string provider = "simulated";
  long long timeout_ms = run.api.timeout.count();
  long long backoff_ms = run.api.backoff_base.count();
  auto* run_cmd = app.add_subcommand("run", "Run the cascade over a dataset");
  run_cmd->add_option("--dataset", run.dataset, "Triplets (JSONL)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--provider", provider, "api | simulated | cached-only")
      ->check(CLI::IsMember({"api", "simulated", "cached-only"}))
      ->capture_default_str();
  run_cmd->add_option("--weights", run.weights, "Weights file (default: reference weights)")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Simulated provider seed")->capture_default_str();
  run_cmd->add_option("--out-dir", run.out_dir)->capture_default_str();
  run_cmd->add_option("--concurrency", run.concurrency)->check(CLI::PositiveNumber)->capture_default_str();
  run_cmd->add_flag("--symbolic-everywhere", run.symbolic_everywhere,
                    "Decide every case with the ensemble alone");
  run_cmd->add_flag("--emit-signals", run.emit_signals, "Record signals for every case");
  run_cmd->add_option("--vote-accuracy", run.simulated_accuracy,
                      "Per-vote accuracy of the simulated provider")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_cascade_flags(run_cmd, run.cascade);
  run_cmd->add_option("--endpoint", run.api.endpoint, "Vote endpoint URL");
  run_cmd->add_option("--api-key-env", run.api.api_key_env, "Environment variable with the API key")
      ->capture_default_str();
  run_cmd->add_option("--model", run.api.model_name)->capture_default_str();
  run_cmd->add_option("--temperature", run.api.temperature)->capture_default_str();
  run_cmd->add_option("--cache", run.api.cache_path, "Vote cache file (JSONL)");
  run_cmd->add_option("--timeout-ms", timeout_ms)->capture_default_str();
  run_cmd->add_option("--max-attempts", run.api.max_attempts)->capture_default_str();
  run_cmd->add_option("--backoff-ms", backoff_ms)->capture_default_str();
  run_cmd->add_option("--max-in-flight", run.api.max_in_flight)->capture_default_str();
  add_embedder_flags(run_cmd, run.embedder);
  run_cmd->callback([&] {
    run.provider = parse_provider_kind(provider);
    run.api.timeout = std::chrono::milliseconds(timeout_ms);
    run.api.backoff_base = std::chrono::milliseconds(backoff_ms);
    run.api.candidates_per_call = run.cascade.votes_per_call;
    exit_code = cmd_run(run);
    std::ifstream table(run.out_dir / "report.txt");
    std::cout << table.rdbuf();
  });

  FitConfig fit;
  std::string fit_norm = "dice";
  auto* fit_cmd = app.add_subcommand("fit-weights", "Fit ensemble weights by differential evolution");
  auto* fit_ds = fit_cmd->add_option("--dataset", fit.dataset, "Labeled triplets (JSONL)")
                     ->check(CLI::ExistingFile);
  auto* fit_sig = fit_cmd->add_option("--signals", fit.signals, "Precomputed signals.csv")
                      ->check(CLI::ExistingFile);
  fit_ds->excludes(fit_sig);
  fit_cmd->add_option("--holdout-fraction", fit.holdout_fraction)
      ->check(CLI::Range(0.0, 0.999999))
      ->capture_default_str();
  fit_cmd->add_option("--out-dir", fit.out_dir)->capture_default_str();
  fit_cmd->add_option("--concurrency", fit.concurrency)->check(CLI::PositiveNumber)->capture_default_str();
  fit_cmd->add_option("--event-norm", fit_norm, "dice | max")
      ->check(CLI::IsMember({"dice", "max"}))
      ->capture_default_str();
  add_de_flags(fit_cmd, fit.de);
  add_embedder_flags(fit_cmd, fit.embedder);
  fit_cmd->callback([&] {
    fit.event_norm = kEventNorms.at(fit_norm);
    const auto report = cmd_fit_weights(fit);
    std::cout << fit_report_csv(report);
  });

  SignalsConfig sig;
  std::string sig_norm = "dice";
  auto* sig_cmd = app.add_subcommand("signals", "Compute the signal matrix for a dataset");
  sig_cmd->add_option("--dataset", sig.dataset)->required()->check(CLI::ExistingFile);
  sig_cmd->add_option("--out-dir", sig.out_dir)->capture_default_str();
  sig_cmd->add_option("--concurrency", sig.concurrency)->check(CLI::PositiveNumber)->capture_default_str();
  sig_cmd->add_option("--event-norm", sig_norm, "dice | max")
      ->check(CLI::IsMember({"dice", "max"}))
      ->capture_default_str();
  add_embedder_flags(sig_cmd, sig.embedder);
  sig_cmd->callback([&] {
    sig.event_norm = kEventNorms.at(sig_norm);
    exit_code = cmd_signals(sig);
  });

  SimulationConfig sim;
  std::filesystem::path sim_out = "out";
  auto* sim_cmd = app.add_subcommand("simulate", "Simulated single vote / majority / cascade study");
  sim_cmd->add_option("--vote-accuracies", sim.vote_accuracies, "Per-vote accuracy grid")
      ->check(CLI::Range(0.0, 1.0))
      ->delimiter(',');
  sim_cmd->add_option("--n-triplets", sim.n_triplets)->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
  sim_cmd->add_option("--tiebreak-accuracy", sim.tiebreak_accuracy)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sim_cmd->add_option("--out-dir", sim_out)->capture_default_str();
  add_cascade_flags(sim_cmd, sim.cascade);
  sim_cmd->callback([&] {
    const auto rows = simulate_study(sim);
    const auto csv = simulation_csv(rows);
    std::filesystem::create_directories(sim_out);
    std::ofstream out(sim_out / "simulation.csv", std::ios::binary);
    out << csv;
    out.close();
    if (!out) throw DataError("cannot write " + (sim_out / "simulation.csv").string());
    std::cout << csv;
  });

  std::filesystem::path ev_results, ev_dataset, ev_out = "out";
  auto* ev_cmd = app.add_subcommand("eval", "Score an existing results.jsonl against gold labels");
  ev_cmd->add_option("--results", ev_results)->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--dataset", ev_dataset)->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--out-dir", ev_out)->capture_default_str();
  ev_cmd->callback([&] {
    const auto report = cmd_eval(ev_results, ev_dataset, ev_out);
    std::cout << report_table(report);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return exit_code;
}
