// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <cstdio>
#include <exception>

#include "bergman_lab/harness/acceptance.hpp"

using namespace bergman_lab;
using namespace bergman_lab::harness;

int main(int argc, char** argv) {
  try {
    const ExperimentConfig cfg = argc > 1 ? load_config(argv[1]) : ExperimentConfig{};
    const auto rep = run_verify(cfg, [](const CriterionResult& r) {
      std::printf("[%s] criterion %d (%s): %s [%.1f s]\n", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(),
                  r.detail.c_str(), r.seconds);
      std::fflush(stdout);
    });
    std::printf("%s: %zu criteria, %.1f s, record digest %s\n", rep.pass() ? "PASS" : "FAIL", rep.criteria.size(),
                rep.seconds, digest_hex(verify_record(cfg, rep).digest()).c_str());
    return rep.pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
