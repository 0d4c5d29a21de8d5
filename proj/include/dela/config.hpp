#pragma once

#include <map>
#include <string>
#include <vector>

#include "dela/pretrain.hpp"
#include "dela/randgen.hpp"

namespace dela::config {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Entry {
  std::string value;
  int line = 0;
};

/// Flat INI-style text: [section] headers, key = value lines, '#' comments.
struct ParsedConfig {
  std::map<std::string, std::map<std::string, Entry>> sections;

  bool has(const std::string& section) const { return sections.count(section) > 0; }
};

ParsedConfig parse_text(const std::string& text);
ParsedConfig parse_file(const std::string& path);

struct GenSettings {
  randgen::GeneratorConfig gen;
  int n = 1000;
  int m = 1;
};

/// [generator] section; unknown keys rejected with their line numbers.
GenSettings gen_settings(const ParsedConfig& cfg);

/// [pretrain] section; `preset = tiny|medium|large` seeds the backbone, any
/// other key overrides one TrainConfig field. Unknown keys rejected.
pretrain::TrainConfig train_settings(const ParsedConfig& cfg);

}  // namespace dela::config
