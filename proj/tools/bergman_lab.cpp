// bergman-lab: experiment runner. Exit codes: 0 pass, 1 failure, 2 config error.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "bergman_lab/harness/acceptance.hpp"

using namespace bergman_lab;
using namespace bergman_lab::harness;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

ExperimentConfig resolve(const GlobalOptions& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.threads) c.threads = *g.threads;
  if (g.out) c.out = *g.out;
  validate(c);
  return c;
}

int finish(const RunOutput& o, const std::string& out_dir) {
  write_output(o, out_dir);
  const auto& r = o.record;
  std::printf("%s %s: %zu units, %.1f s, digest %s, written to %s\n", r.pass ? "PASS" : "FAIL", r.kind.c_str(),
              r.units.size(), r.wall_seconds, digest_hex(r.digest()).c_str(), out_dir.c_str());
  return r.pass ? 0 : 1;
}

void print_criterion(const CriterionResult& r) {
  std::printf("[%s] criterion %d (%s): %s [%.1f s]\n", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(),
              r.detail.c_str(), r.seconds);
  std::fflush(stdout);
}

int report(const std::string& path, bool replay) {
  const Record r = read_record(path);
  std::printf("kind %s, %s, %zu units, digest %s, wall %.1f s\n", r.kind.c_str(), r.pass ? "pass" : "fail",
              r.units.size(), digest_hex(r.digest()).c_str(), r.wall_seconds);
  std::printf("%s\n", r.summary.dump(2).c_str());
  if (!replay) return r.pass ? 0 : 1;
  const bool same = replay_matches(r);
  std::printf("replay %s\n", same ? "bit-identical" : "DIFFERS");
  return same ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bergman kernel and random zero experiments"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "flat key = value config file");
  app.add_option("--seed", g.seed, "root seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker count (overrides the config)");
  app.add_option("--out", g.out, "output directory (overrides the config)");

  auto* kernel = app.add_subcommand("kernel", "Bergman kernel grids over the p ladder");
  auto* dim = app.add_subcommand("dim", "section-space dimensions against the exponent rule");
  auto* cfs = app.add_subcommand("converge-fs", "deterministic FS-current error ladders");
  auto* cz = app.add_subcommand("converge-zeros", "Monte Carlo zero ensembles and rate fits");
  auto* bertini = app.add_subcommand("bertini", "resultant genericity on the product");
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  auto* rep = app.add_subcommand("report", "summarize a record file");
  std::string record_path;
  bool replay = false;
  rep->add_option("record", record_path, "record .jsonl file")->required();
  rep->add_flag("--replay", replay, "re-run the record's config and compare bit for bit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (rep->parsed()) return report(record_path, replay);
    const ExperimentConfig c = resolve(g);
    if (kernel->parsed()) return finish(run_kernel(c), c.out);
    if (dim->parsed()) return finish(run_dim(c), c.out);
    if (cfs->parsed()) return finish(run_converge_fs(c), c.out);
    if (cz->parsed()) return finish(run_converge_zeros(c), c.out);
    if (bertini->parsed()) return finish(run_bertini(c), c.out);
    if (verify->parsed()) return finish(run_verify_output(c, print_criterion), c.out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
