#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlscm/nlscm.hpp"

namespace {

using nlscm::json;

std::vector<nlscm::RunConfig> load_matrix(const std::string& path, std::optional<std::uint64_t> seed) {
  const json doc = nlscm::read_json_file(path);
  if (!doc.is_object() || !doc.contains("runs") || !doc.at("runs").is_array())
    throw nlscm::ConfigError("suite file must hold an array 'runs'", "runs");
  std::vector<nlscm::RunConfig> out;
  std::size_t k = 0;
  for (json entry : doc.at("runs")) {
    if (entry.is_string()) entry = nlscm::read_json_file(entry.get<std::string>());
    if (seed) entry["seed"] = *seed;
    try {
      out.push_back(nlscm::parse_run_config(entry));
    } catch (const nlscm::ConfigError& e) {
      throw nlscm::ConfigError("runs[" + std::to_string(k) + "]: " + e.what(), e.field());
    }
    ++k;
  }
  return out;
}

void print_result(const nlscm::RunResult& r) {
  for (const auto& s : r.stages)
    std::cout << s.stage << ": " << (s.cached ? "cached" : "done") << " (" << s.seconds << " s)\n";
  for (const auto& rep : r.reports) {
    std::cout << rep.label << ": " << (rep.pass() ? "PASS" : "FAIL") << '\n';
    for (const auto& c : rep.clauses)
      std::cout << "  " << (c.informative ? "[info] " : "") << c.name << ": measured " << c.measured << ", predicted "
                << c.predicted << ", tol " << c.tolerance << " -> " << (c.pass ? "pass" : "fail") << '\n';
  }
  if (!r.error.empty()) std::cerr << "error: " << r.error << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial NLS bound-state and radiation-decay experiments"};
  app.require_subcommand(1);

  std::string config, out = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> stages;

  const std::vector<std::string> verbs = {"spectrum", "branch", "evolve", "decompose", "fit", "probe", "run"};
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v, v == "run" ? "run the stages listed in the config (or --stage)"
                                                 : "run the " + v + " stage and its prerequisites");
    sub->add_option("--config", config, "run configuration (JSON)")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "override the configured seed");
    if (v == "run") sub->add_option("--stage", stages, "stages to run");
  }
  auto* suite_cmd = app.add_subcommand("suite", "run every configuration of a suite file");
  suite_cmd->add_option("--config", config, "suite file with an array 'runs'")->required();
  suite_cmd->add_option("--out", out, "output directory");
  suite_cmd->add_option("--seed", seed, "override every run's seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(nlscm::ExitCode::config_error);
  }

  try {
    if (suite_cmd->parsed()) {
      const auto entries = nlscm::suite(load_matrix(config, seed), out);
      for (const auto& e : entries)
        std::cout << e.name << " [" << e.hash << "] exit " << static_cast<int>(e.exit)
                  << (e.reused_from.empty() ? "" : " (reused " + e.reused_from + ")") << '\n';
      return static_cast<int>(nlscm::suite_exit(entries));
    }
    json doc = nlscm::read_json_file(config);
    if (seed) doc["seed"] = *seed;
    nlscm::RunConfig cfg = nlscm::parse_run_config(doc);
    const std::string verb = app.get_subcommands().front()->get_name();
    std::vector<std::string> requested = verb == "run" ? (stages.empty() ? cfg.stages : stages)
                                                       : std::vector<std::string>{verb};
    for (const auto& s : requested)
      if (std::find(nlscm::known_stages().begin(), nlscm::known_stages().end(), s) == nlscm::known_stages().end())
        throw nlscm::ConfigError("unknown stage '" + s + "'", "--stage");
    // Re-validate prerequisites for the requested stages.
    doc["stages"] = requested;
    cfg = nlscm::parse_run_config(doc);
    nlscm::Runner runner(cfg, out);
    const nlscm::RunResult r = runner.run(requested);
    print_result(r);
    return static_cast<int>(r.exit);
  } catch (const nlscm::Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(nlscm::ExitCode::numeric_failure);
  }
}
