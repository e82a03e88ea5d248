#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "rwlab/experiments.hpp"

namespace {

using rwlab::cli::ConfigError;
using rwlab::cli::KeyValues;

struct Common {
  std::string config;
  std::string seed;
  std::string out;
  std::string workers;
  std::string grid_nodes;
  std::string mc_samples;
  std::vector<std::string> sets;
  // certify only
  std::string measure;
  std::string element;
  std::string max_n;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value config file");
  sub->add_option("--seed", c.seed, "master seed (required here or in the config)");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--workers", c.workers, "worker threads");
  sub->add_option("--grid-nodes", c.grid_nodes, "grid.nodes override");
  sub->add_option("--mc-samples", c.mc_samples, "mc.samples override");
  sub->add_option("--set", c.sets, "generic key=value override (repeatable)");
}

KeyValues overrides_of(const Common& c) {
  KeyValues kv;
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) kv[key] = v;
  };
  put("seed", c.seed);
  put("out", c.out);
  put("workers", c.workers);
  put("grid.nodes", c.grid_nodes);
  put("mc.samples", c.mc_samples);
  put("measure", c.measure);
  put("element", c.element);
  put("max_n", c.max_n);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rwlab: random walks, harmonic majorants and the stationary counterexample"};
  app.require_subcommand(1);
  app.add_subcommand("list", "list experiments with the statement each one exercises");

  Common common;
  for (const auto& e : rwlab::cli::list_experiments()) {
    auto* sub = app.add_subcommand(e.name, e.summary);
    add_common(sub, common);
    if (e.name == "certify") {
      sub->add_option("--measure", common.measure, "named measure, inline JSON, or @file.json");
      sub->add_option("--element", common.element, "group element, e.g. z:1");
      sub->add_option("--max-n", common.max_n, "largest convolution power");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->get_name() == "list") {
    std::cout << rwlab::cli::format_experiment_table();
    return 0;
  }

  try {
    const KeyValues file = common.config.empty() ? KeyValues{} : rwlab::cli::load_config_file(common.config);
    const auto cfg = rwlab::cli::resolve_config(chosen->get_name(), file, overrides_of(common));
    const auto report = rwlab::cli::run_experiment(cfg);
    std::cout << rwlab::cli::format_summary(report);
    return rwlab::cli::exit_code_for(report);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n\n" << chosen->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
