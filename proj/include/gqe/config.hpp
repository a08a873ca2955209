#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gqe/network.hpp"
#include "gqe/point_cloud.hpp"

namespace gqe {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Flat `key = value` lines; `#` starts a comment; blank lines ignored.
// Throws ConfigError on a line without '='.
KeyValues parse_key_values(const std::string& text);
std::string format_key_values(const KeyValues& kv);

struct DatasetEntry {
  std::filesystem::path clean;
  std::filesystem::path distorted;
};

struct TrainConfig {
  Component component = Component::Y;
  int epochs = 180;
  std::size_t batch_size = 12;
  double base_lr = 0.0016;
  int lr_step = 60;
  double lr_factor = 0.25;
  double r = 2.0;
  std::uint64_t seed = 1;
  GQEConfig net;
  std::vector<DatasetEntry> dataset;
  std::filesystem::path checkpoint_out;

  // Throws ConfigError.
  void validate() const;
};

// Keys: component, epochs, batch_size, base_lr, lr_step, lr_factor, r, seed,
// checkpoint_out, every GQEConfig key, and repeatable `pair = clean distorted`.
// Unknown keys are errors. Relative paths resolve against `base_dir`.
TrainConfig parse_train_config(const std::string& text, const std::filesystem::path& base_dir = {});
TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace gqe
