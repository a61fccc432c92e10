#include "pointvet/io/ply.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "pointvet/core/errors.hpp"

namespace pvet::io {

namespace {

struct PlyProperty {
  std::string type;
  std::string name;
  size_t size = 0;
  size_t offset = 0;  // byte offset inside one binary record
  int column = 0;     // token index inside one ascii record
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
  size_t stride = 0;
  bool has_list = false;
};

size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "int8" || type == "uchar" || type == "uint8") return 1;
  if (type == "short" || type == "int16" || type == "ushort" || type == "uint16") return 2;
  if (type == "int" || type == "int32" || type == "uint" || type == "uint32") return 4;
  if (type == "float" || type == "float32") return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

[[noreturn]] void fail(const std::string& path, const std::string& what, size_t byte) {
  throw DataError(path + ": " + what + " (byte " + std::to_string(byte) + ")");
}

double decode_scalar(const unsigned char* p, const std::string& type) {
  if (type == "uchar" || type == "uint8") return double(*p);
  if (type == "char" || type == "int8") return double(*reinterpret_cast<const int8_t*>(p));
  const auto load = [&]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return double(v);
  };
  if (type == "short" || type == "int16") return load(int16_t{});
  if (type == "ushort" || type == "uint16") return load(uint16_t{});
  if (type == "int" || type == "int32") return load(int32_t{});
  if (type == "uint" || type == "uint32") return load(uint32_t{});
  if (type == "float" || type == "float32") return load(float{});
  return load(double{});
}

struct VertexLayout {
  const PlyProperty* x = nullptr;
  const PlyProperty* y = nullptr;
  const PlyProperty* z = nullptr;
  const PlyProperty* red = nullptr;
  const PlyProperty* green = nullptr;
  const PlyProperty* blue = nullptr;
  const PlyProperty* alpha_raw = nullptr;
  const PlyProperty* is_env = nullptr;
};

VertexLayout resolve_layout(const std::string& path, const PlyElement& vertex) {
  VertexLayout lay;
  const auto is_float = [](const std::string& t) {
    return t == "float" || t == "float32" || t == "double" || t == "float64";
  };
  const auto is_byte = [](const std::string& t) { return t == "uchar" || t == "uint8"; };
  for (const PlyProperty& p : vertex.properties) {
    if (p.name == "x" || p.name == "y" || p.name == "z") {
      if (!is_float(p.type))
        throw DataError(path + ": vertex property '" + p.name + "' must be float, got " + p.type);
      (p.name == "x" ? lay.x : p.name == "y" ? lay.y : lay.z) = &p;
    } else if (p.name == "red" && is_byte(p.type)) {
      lay.red = &p;
    } else if (p.name == "green" && is_byte(p.type)) {
      lay.green = &p;
    } else if (p.name == "blue" && is_byte(p.type)) {
      lay.blue = &p;
    } else if (p.name == "alpha_raw" && is_float(p.type)) {
      lay.alpha_raw = &p;
    } else if (p.name == "is_env" && is_byte(p.type)) {
      lay.is_env = &p;
    }
  }
  if (!lay.x || !lay.y || !lay.z)
    throw DataError(path + ": vertex element lacks x/y/z properties");
  return lay;
}

}  // namespace

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  // Header: newline-delimited text up to "end_header".
  size_t pos = 0;
  const auto next_line = [&]() -> std::string {
    if (pos >= bytes.size()) fail(path, "unexpected end of header", pos);
    const size_t start = pos;
    while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    std::string line(bytes.begin() + ptrdiff_t(start), bytes.begin() + ptrdiff_t(pos));
    if (pos < bytes.size()) ++pos;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  if (next_line() != "ply") fail(path, "not a PLY file (missing magic)", 0);

  std::string format;
  std::vector<PlyElement> elements;
  while (true) {
    const size_t line_start = pos;
    std::istringstream ls(next_line());
    std::string tag;
    ls >> tag;
    if (tag.empty() || tag == "comment" || tag == "obj_info") continue;
    if (tag == "end_header") break;
    if (tag == "format") {
      std::string kind, version;
      ls >> kind >> version;
      if (version != "1.0") fail(path, "unknown format version '" + version + "'", line_start);
      if (kind != "ascii" && kind != "binary_little_endian")
        fail(path, "unsupported format '" + kind + "'", line_start);
      format = kind;
    } else if (tag == "element") {
      PlyElement el;
      if (!(ls >> el.name >> el.count)) fail(path, "malformed element line", line_start);
      elements.push_back(el);
    } else if (tag == "property") {
      if (elements.empty()) fail(path, "property before any element", line_start);
      PlyElement& el = elements.back();
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, elem_type, name;
        if (!(ls >> count_type >> elem_type >> name))
          fail(path, "malformed list property", line_start);
        el.has_list = true;
        PlyProperty p;
        p.type = "list";
        p.name = name;
        p.column = int(el.properties.size());
        el.properties.push_back(p);
      } else {
        PlyProperty p;
        p.type = type;
        if (!(ls >> p.name)) fail(path, "malformed property line", line_start);
        p.size = scalar_size(type);
        if (p.size == 0) fail(path, "unknown property type '" + type + "'", line_start);
        p.offset = el.stride;
        p.column = int(el.properties.size());
        el.stride += p.size;
        el.properties.push_back(p);
      }
    } else {
      fail(path, "unknown header line '" + tag + "'", line_start);
    }
  }
  if (format.empty()) fail(path, "header has no format line", pos);

  PointCloud cloud;
  for (const PlyElement& el : elements) {
    if (el.name != "vertex") {
      // Skip foreign elements; binary payloads with list properties have no
      // fixed stride, so those cannot be skipped safely.
      if (format == "ascii") {
        for (size_t i = 0; i < el.count; ++i) next_line();
      } else {
        if (el.has_list)
          fail(path, "cannot skip binary element '" + el.name + "' with list property", pos);
        const size_t span = el.count * el.stride;
        if (pos + span > bytes.size()) fail(path, "truncated payload", bytes.size());
        pos += span;
      }
      continue;
    }

    if (el.has_list) fail(path, "list properties on vertices are unsupported", pos);
    const VertexLayout lay = resolve_layout(path, el);
    cloud.points.reserve(cloud.size() + el.count);

    if (format == "ascii") {
      for (size_t i = 0; i < el.count; ++i) {
        const size_t line_start = pos;
        if (pos >= bytes.size())
          fail(path, "truncated payload: expected " + std::to_string(el.count) +
                         " vertices, got " + std::to_string(i),
               line_start);
        std::istringstream ls(next_line());
        std::vector<double> vals(el.properties.size(), 0.0);
        for (size_t c = 0; c < el.properties.size(); ++c) {
          if (!(ls >> vals[c])) fail(path, "malformed vertex line", line_start);
          // Honor the declared storage width so ascii and binary files hold
          // the same values.
          const std::string& t = el.properties[c].type;
          if (t == "float" || t == "float32") vals[c] = double(float(vals[c]));
        }
        Point p;
        p.position = {vals[size_t(lay.x->column)], vals[size_t(lay.y->column)],
                      vals[size_t(lay.z->column)]};
        if (lay.red && lay.green && lay.blue)
          p.color = Vec3{vals[size_t(lay.red->column)], vals[size_t(lay.green->column)],
                         vals[size_t(lay.blue->column)]} /
                    255.0;
        if (lay.alpha_raw) p.alpha_raw = vals[size_t(lay.alpha_raw->column)];
        if (lay.is_env) p.is_environment = vals[size_t(lay.is_env->column)] != 0.0;
        cloud.points.push_back(p);
        cloud.generation.push_back(0);
      }
    } else {
      const size_t need = el.count * el.stride;
      if (pos + need > bytes.size()) {
        const size_t complete = (bytes.size() - pos) / el.stride;
        fail(path,
             "truncated payload: expected " + std::to_string(el.count) + " vertices, only " +
                 std::to_string(complete) + " complete",
             pos + complete * el.stride);
      }
      for (size_t i = 0; i < el.count; ++i) {
        const unsigned char* rec = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
        const auto get = [&](const PlyProperty* p) { return decode_scalar(rec + p->offset, p->type); };
        Point p;
        p.position = {get(lay.x), get(lay.y), get(lay.z)};
        if (lay.red && lay.green && lay.blue)
          p.color = Vec3{get(lay.red), get(lay.green), get(lay.blue)} / 255.0;
        if (lay.alpha_raw) p.alpha_raw = get(lay.alpha_raw);
        if (lay.is_env) p.is_environment = get(lay.is_env) != 0.0;
        cloud.points.push_back(p);
        cloud.generation.push_back(0);
        pos += el.stride;
      }
    }
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::string& path, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");

  const bool binary = format == PlyFormat::BinaryLittleEndian;
  out << "ply\n";
  out << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "property float alpha_raw\n";
  out << "property uchar is_env\n";
  out << "end_header\n";

  const auto byte_of = [](double c) {
    return uint8_t(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
  };
  for (const Point& p : cloud.points) {
    const float xyz[3] = {float(p.position.x), float(p.position.y), float(p.position.z)};
    const uint8_t rgb[3] = {byte_of(p.color.x), byte_of(p.color.y), byte_of(p.color.z)};
    const float araw = float(p.alpha_raw);
    const uint8_t env = p.is_environment ? 1 : 0;
    if (binary) {
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
      out.write(reinterpret_cast<const char*>(rgb), sizeof(rgb));
      out.write(reinterpret_cast<const char*>(&araw), sizeof(araw));
      out.write(reinterpret_cast<const char*>(&env), sizeof(env));
    } else {
      std::ostringstream line;
      line.precision(9);
      line << xyz[0] << ' ' << xyz[1] << ' ' << xyz[2] << ' ' << int(rgb[0]) << ' '
           << int(rgb[1]) << ' ' << int(rgb[2]) << ' ' << araw << ' ' << int(env) << '\n';
      out << line.str();
    }
  }
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace pvet::io
