#include "gqe/ply.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gqe/color.hpp"
#include "gqe/error.hpp"

namespace gqe {
namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> parse_scalar_type(const std::string& s) {
  if (s == "char" || s == "int8") return ScalarType::Int8;
  if (s == "uchar" || s == "uint8") return ScalarType::UInt8;
  if (s == "short" || s == "int16") return ScalarType::Int16;
  if (s == "ushort" || s == "uint16") return ScalarType::UInt16;
  if (s == "int" || s == "int32") return ScalarType::Int32;
  if (s == "uint" || s == "uint32") return ScalarType::UInt32;
  if (s == "float" || s == "float32") return ScalarType::Float32;
  if (s == "double" || s == "float64") return ScalarType::Float64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

template <typename V>
V load(const char* p) {
  V v;
  std::memcpy(&v, p, sizeof(V));
  return v;
}

double decode_scalar(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::Int8: return load<std::int8_t>(p);
    case ScalarType::UInt8: return load<std::uint8_t>(p);
    case ScalarType::Int16: return load<std::int16_t>(p);
    case ScalarType::UInt16: return load<std::uint16_t>(p);
    case ScalarType::Int32: return load<std::int32_t>(p);
    case ScalarType::UInt32: return load<std::uint32_t>(p);
    case ScalarType::Float32: return load<float>(p);
    case ScalarType::Float64: return load<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
  bool has_list = false;
};

struct Header {
  PlyEncoding encoding = PlyEncoding::Ascii;
  std::vector<Element> elements;
};

Header parse_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
    throw Error(ErrorCode::MalformedHeader, "missing 'ply' magic line");
  }
  Header h;
  bool have_format = false;
  while (true) {
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "missing end_header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "end_header") break;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        h.encoding = PlyEncoding::Ascii;
      } else if (fmt == "binary_little_endian") {
        h.encoding = PlyEncoding::BinaryLittleEndian;
      } else if (fmt == "binary_big_endian") {
        throw Error(ErrorCode::UnsupportedFormat, "binary_big_endian PLY is not supported");
      } else {
        throw Error(ErrorCode::MalformedHeader, "unknown format '" + fmt + "'");
      }
      have_format = true;
    } else if (kw == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0) throw Error(ErrorCode::MalformedHeader, "bad element line: " + line);
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (h.elements.empty()) throw Error(ErrorCode::MalformedHeader, "property before element");
      std::string type;
      ls >> type;
      if (type == "list") {
        h.elements.back().has_list = true;
        continue;
      }
      auto st = parse_scalar_type(type);
      std::string name;
      ls >> name;
      if (!st || name.empty()) throw Error(ErrorCode::MalformedHeader, "bad property line: " + line);
      h.elements.back().properties.push_back({name, *st});
    } else {
      throw Error(ErrorCode::MalformedHeader, "unexpected header keyword '" + kw + "'");
    }
  }
  if (!have_format) throw Error(ErrorCode::MalformedHeader, "missing format line");
  return h;
}

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  const Header h = parse_header(in);

  std::size_t skip_bytes = 0;
  const Element* vertex = nullptr;
  for (const auto& e : h.elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
    if (e.count == 0) continue;
    if (e.has_list || h.encoding == PlyEncoding::Ascii) {
      throw Error(ErrorCode::UnsupportedFormat, "element '" + e.name + "' precedes vertex");
    }
    std::size_t stride = 0;
    for (const auto& p : e.properties) stride += scalar_size(p.type);
    skip_bytes += stride * e.count;
  }
  if (vertex == nullptr) throw Error(ErrorCode::MissingProperty, "no vertex element");
  if (vertex->has_list) throw Error(ErrorCode::UnsupportedFormat, "list property in vertex element");

  static constexpr const char* kWanted[6] = {"x", "y", "z", "red", "green", "blue"};
  std::array<int, 6> slot{};
  for (int w = 0; w < 6; ++w) {
    auto it = std::find_if(vertex->properties.begin(), vertex->properties.end(),
                           [&](const Property& p) { return p.name == kWanted[w]; });
    if (it == vertex->properties.end()) {
      throw Error(ErrorCode::MissingProperty, std::string("vertex property '") + kWanted[w] + "' missing");
    }
    slot[w] = static_cast<int>(it - vertex->properties.begin());
  }

  const std::size_t n = vertex->count;
  const std::size_t nprop = vertex->properties.size();
  PointCloud pc;
  pc.color_space = ColorSpace::RGB8;
  pc.coords.resize(n);
  pc.colors.resize(n);
  std::vector<double> row(nprop);

  auto store = [&](std::size_t i) {
    for (int a = 0; a < 3; ++a) {
      pc.coords[i][a] = static_cast<std::int32_t>(std::llround(row[slot[a]]));
      pc.colors[i][a] = row[slot[3 + a]];
    }
  };

  if (h.encoding == PlyEncoding::Ascii) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < nprop; ++p) {
        if (!(in >> row[p])) {
          throw Error(ErrorCode::TruncatedBody, "ascii body ends at vertex " + std::to_string(i));
        }
      }
      store(i);
    }
  } else {
    in.ignore(static_cast<std::streamsize>(skip_bytes));
    std::vector<std::size_t> offset(nprop);
    std::size_t stride = 0;
    for (std::size_t p = 0; p < nprop; ++p) {
      offset[p] = stride;
      stride += scalar_size(vertex->properties[p].type);
    }
    std::vector<char> body(stride * n);
    in.read(body.data(), static_cast<std::streamsize>(body.size()));
    if (static_cast<std::size_t>(in.gcount()) != body.size()) {
      throw Error(ErrorCode::TruncatedBody, "binary body shorter than declared vertex count");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const char* base = body.data() + i * stride;
      for (std::size_t p = 0; p < nprop; ++p) {
        row[p] = decode_scalar(vertex->properties[p].type, base + offset[p]);
      }
      store(i);
    }
  }
  pc.validate();
  return pc;
}

void write_ply(const PointCloud& pc, const std::filesystem::path& path, PlyEncoding encoding) {
  pc.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");

  out << "ply\n"
      << (encoding == PlyEncoding::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
      << "element vertex " << pc.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";

  if (encoding == PlyEncoding::Ascii) {
    for (std::size_t i = 0; i < pc.size(); ++i) {
      const auto& p = pc.coords[i];
      const auto& c = pc.colors[i];
      out << p[0] << ' ' << p[1] << ' ' << p[2] << ' ' << int(to_u8(c[0])) << ' ' << int(to_u8(c[1]))
          << ' ' << int(to_u8(c[2])) << '\n';
    }
  } else {
    std::vector<char> body(pc.size() * 15);
    char* w = body.data();
    for (std::size_t i = 0; i < pc.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        const float f = static_cast<float>(pc.coords[i][a]);
        std::memcpy(w, &f, 4);
        w += 4;
      }
      for (int a = 0; a < 3; ++a) *w++ = static_cast<char>(to_u8(pc.colors[i][a]));
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
  }
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
}

}  // namespace gqe
