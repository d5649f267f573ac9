#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "criteria.hpp"

namespace {

struct Criterion {
  int number;
  const char* summary;
  std::function<bool(bool)> run;  // argument: full-scale variant requested
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  bool full = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--full") == 0) {
      full = true;
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N] [--full]\n");
      return 2;
    }
  }

  using namespace acceptance;
  const std::vector<Criterion> criteria = {
      {1, "copula unit suite: pdf vs d2C/dudv, h round trips, tau closed forms",
       [](bool) { return criterion1_copula_unit_suite(); }},
      {2, "parameter recovery and family selection with AIC margin",
       [](bool) { return criterion2_parameter_recovery(); }},
      {3, "vine correctness at n=2,3", [](bool) { return criterion3_vine_correctness(); }},
      {4, "autoencoder gradient check and training descent",
       [](bool) { return criterion4_ae_gradients_and_training(); }},
      {5, "directional entropy/KL reproduction at desk scale",
       [](bool) { return criterion5_table_directional(); }},
      {6, "trigger fingerprint in generated samples",
       [](bool) { return criterion6_fingerprint(); }},
      {7, "streaming grid entropy memory bound",
       [](bool f) { return criterion7_streaming_memory(f); }},
      {8, "metric identities", [](bool) { return criterion8_metric_identities(); }},
  };

  bool all_pass = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.number != only) continue;
    bool pass = false;
    try {
      pass = c.run(full);
    } catch (const std::exception& e) {
      std::printf("  criterion %d raised: %s\n", c.number, e.what());
      pass = false;
    }
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", c.number, c.summary);
    std::fflush(stdout);
    all_pass = all_pass && pass;
  }
  return all_pass ? 0 : 1;
}
