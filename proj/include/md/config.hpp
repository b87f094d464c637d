#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "md/model.hpp"
#include "md/synth.hpp"
#include "md/train.hpp"

namespace md {

/// Everything a run depends on. Every field is reachable through a flat key.
struct RunConfig {
  std::string preset = "toy";
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  SynthConfig data;
  std::string data_dir;  // empty: render the synthetic set described by data.*
  std::size_t consistency_window = 1;
  double consistency_edge_threshold = 0.05;

  static RunConfig from_preset(const std::string& name);

  /// Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// "key=value" entries applied in order.
  void apply(const std::vector<std::string>& overrides);

  void validate() const;

  /// Sorted key=value lines, one per key, preset first.
  std::string resolved() const;
  static RunConfig parse_resolved(const std::string& text);
  static RunConfig load_resolved(const std::filesystem::path& path);

  static const std::vector<std::string>& keys();
};

}  // namespace md
