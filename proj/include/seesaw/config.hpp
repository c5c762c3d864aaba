#pragma once

// Plain-text run configuration: [section] headers with key = value lines,
// '#' comments. Unknown sections or keys are errors. Command-line overrides
// use "section.key=value" and win over file values. Every run writes its
// fully resolved config next to its outputs; feeding that file back
// reproduces the run.

#include <cstdint>
#include <string>
#include <vector>

namespace seesaw {

struct RunConfig {
  // [model]
  std::string arch = "seesaw-shuffle";
  std::string variant = "1.0D";  // 0.5D | 1.0D (depth variant; mbv2 ignores it)
  double width = 1.0;
  int classes = 10;
  std::string input = "cifar_32";  // imagenet_224 | cifar_32
  int expansion = 0;               // 0 = table default (t=6 main stages)
  std::string ratio = "1:2";
  int share_width = -1;  // -1 = default rule
  bool permutes = true;

  // [train]
  std::string schedule = "cifar_step";
  double lr = -1;            // negative = schedule default
  double momentum = -1;
  double weight_decay = -1;
  int batch = -1;
  int epochs = 400;
  std::uint64_t seed = 1;
  bool augment = true;
  int subset = 0;      // 0 = full training split
  int eval_every = 1;  // epochs between test evaluations (0 = final only)

  // [data]
  std::string data_dir;
  std::string dataset = "cifar10";  // cifar10 | cifar100

  // [out]
  std::string out_dir;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
void apply_override(RunConfig& config, const std::string& assignment);  // "section.key=value"

// Canonical text with every field resolved (schedule defaults filled in).
std::string resolved_text(const RunConfig& config);

std::vector<int> parse_ratio(const std::string& ratio);

}  // namespace seesaw
