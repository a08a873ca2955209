#include "gqe/config.hpp"

#include <fstream>
#include <sstream>

#include "gqe/error.hpp"

namespace gqe {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename V>
V parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  V x{};
  is >> x;
  if (is.fail() || !is.eof()) throw Error(ErrorCode::ConfigError, key + ": cannot parse '" + v + "'");
  return x;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(base_lr > 0)) fail("base_lr must be > 0");
  if (lr_step < 1) fail("lr_step must be >= 1");
  if (!(lr_factor > 0)) fail("lr_factor must be > 0");
  if (!(r > 0)) fail("r must be > 0");
  net.validate();
}

TrainConfig parse_train_config(const std::string& text, const std::filesystem::path& base_dir) {
  TrainConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "component") c.component = parse_component(value.c_str());
    else if (key == "epochs") c.epochs = parse_number<int>(key, value);
    else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "base_lr") c.base_lr = parse_number<double>(key, value);
    else if (key == "lr_step") c.lr_step = parse_number<int>(key, value);
    else if (key == "lr_factor") c.lr_factor = parse_number<double>(key, value);
    else if (key == "r") c.r = parse_number<double>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "checkpoint_out") c.checkpoint_out = resolve(value);
    else if (key == "pair") {
      std::istringstream is(value);
      std::string clean, distorted, extra;
      if (!(is >> clean >> distorted) || (is >> extra)) {
        throw Error(ErrorCode::ConfigError, "pair: expected '<clean.ply> <distorted.ply>'");
      }
      c.dataset.push_back({resolve(clean), resolve(distorted)});
    } else if (!c.net.apply(key, value)) {
      throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str(), path.parent_path());
}

}  // namespace gqe
