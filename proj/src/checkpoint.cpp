#include "gqe/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "gqe/error.hpp"

namespace gqe {
namespace {

constexpr char kMagic[4] = {'G', 'Q', 'E', 'W'};

class Writer {
 public:
  template <typename V>
  void put(V v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(V));
  }
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void text(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void tensor(const std::string& name, const tg::Tensor<float>& t) {
    put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    buf_ += name;
    put<std::uint32_t>(static_cast<std::uint32_t>(t.ndim()));
    for (auto d : t.shape()) put<std::uint32_t>(static_cast<std::uint32_t>(d));
    bytes(t.data(), t.size() * sizeof(float));
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  template <typename V>
  V get(ErrorCode on_short = ErrorCode::CorruptTensor) {
    V v{};
    need(sizeof(V), on_short);
    std::memcpy(&v, buf_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  std::string text() {
    const auto n = get<std::uint32_t>();
    need(n, ErrorCode::CorruptTensor);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::pair<std::string, tg::Tensor<float>> tensor() {
    const auto len = get<std::uint16_t>();
    need(len, ErrorCode::CorruptTensor);
    std::string name = buf_.substr(pos_, len);
    pos_ += len;
    const auto rank = get<std::uint32_t>();
    if (rank > 8) throw Error(ErrorCode::CorruptTensor, "tensor '" + name + "' has rank " + std::to_string(rank));
    tg::Shape shape(rank);
    for (auto& d : shape) d = get<std::uint32_t>();
    const std::size_t count = tg::shape_size(shape);
    need(count * sizeof(float), ErrorCode::CorruptTensor);
    std::vector<float> data(count);
    std::memcpy(data.data(), buf_.data() + pos_, count * sizeof(float));
    pos_ += count * sizeof(float);
    return {std::move(name), tg::Tensor<float>(std::move(shape), std::move(data))};
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n, ErrorCode code) const {
    if (buf_.size() - pos_ < n) throw Error(code, "checkpoint ends early at byte " + std::to_string(pos_));
  }

  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.component));
  w.put<double>(ckpt.r);
  w.text(format_key_values(ckpt.config.to_kv()));

  std::vector<std::pair<std::string, const tg::Tensor<float>*>> tensors;
  ckpt.weights.for_each_param([&](const std::string& n, const tg::Tensor<float>& t) { tensors.emplace_back(n, &t); });
  ckpt.weights.for_each_buffer([&](const std::string& n, const tg::Tensor<float>& t) { tensors.emplace_back(n, &t); });
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) w.tensor(name, *t);

  w.put<std::uint8_t>(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    w.put<std::int64_t>(o.step);
    w.put<double>(o.beta1);
    w.put<double>(o.beta2);
    w.put<double>(o.eps);
    w.put<double>(o.base_lr);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(o.m.size()));
    for (std::size_t i = 0; i < o.m.size(); ++i) {
      w.tensor("m", o.m[i]);
      w.tensor("v", o.v[i]);
    }
  }
  w.text(format_key_values(ckpt.metadata));
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const GQEConfig* expected) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a GQEW checkpoint");
  }
  Reader r(bytes);
  r.get<std::uint32_t>();  // magic
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionUnsupported, "checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto comp = r.get<std::uint32_t>();
  if (comp > 2) throw Error(ErrorCode::CorruptTensor, "bad component tag");
  ckpt.component = static_cast<Component>(comp);
  ckpt.r = r.get<double>();
  GQEConfig cfg;
  for (const auto& [k, v] : parse_key_values(r.text())) {
    if (!cfg.apply(k, v)) throw Error(ErrorCode::ConfigError, "checkpoint config has unknown key '" + k + "'");
  }
  cfg.validate();
  if (expected && !(*expected == cfg)) throw Error(ErrorCode::ConfigMismatch, "checkpoint config differs from expected");
  ckpt.config = cfg;
  ckpt.weights = allocate_weights<float>(cfg);

  std::vector<std::pair<std::string, tg::Tensor<float>*>> slots;
  ckpt.weights.for_each_param([&](const std::string& n, tg::Tensor<float>& t) { slots.emplace_back(n, &t); });
  ckpt.weights.for_each_buffer([&](const std::string& n, tg::Tensor<float>& t) { slots.emplace_back(n, &t); });
  const auto count = r.get<std::uint32_t>();
  if (count != slots.size()) {
    throw Error(ErrorCode::ShapeAudit, "checkpoint holds " + std::to_string(count) + " tensors, configuration needs " +
                                           std::to_string(slots.size()));
  }
  for (auto& [name, slot] : slots) {
    auto [got_name, t] = r.tensor();
    if (got_name != name || t.shape() != slot->shape()) {
      throw Error(ErrorCode::ShapeAudit, "tensor '" + got_name + "' " + tg::shape_string(t.shape()) + " where '" +
                                             name + "' " + tg::shape_string(slot->shape()) + " was expected");
    }
    *slot = std::move(t);
  }

  if (r.get<std::uint8_t>() != 0) {
    tg::AdamState<float> o;
    o.step = r.get<std::int64_t>();
    o.beta1 = r.get<double>();
    o.beta2 = r.get<double>();
    o.eps = r.get<double>();
    o.base_lr = r.get<double>();
    const auto n = r.get<std::uint32_t>();
    std::size_t params = 0;
    ckpt.weights.for_each_param([&](const std::string&, const tg::Tensor<float>&) { ++params; });
    if (n != 0 && n != params) throw Error(ErrorCode::ShapeAudit, "optimizer state size mismatch");
    for (std::uint32_t i = 0; i < n; ++i) {
      o.m.push_back(r.tensor().second);
      o.v.push_back(r.tensor().second);
    }
    ckpt.optimizer = std::move(o);
  }
  ckpt.metadata = parse_key_values(r.text());
  if (!r.done()) throw Error(ErrorCode::CorruptTensor, "trailing bytes after checkpoint");
  audit_weights(ckpt.weights, ckpt.config);
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const GQEConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str(), expected);
}

}  // namespace gqe
