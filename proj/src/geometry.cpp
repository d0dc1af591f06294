#include "sparse4d/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "sparse4d/error.hpp"
#include "sparse4d/table_io.hpp"

namespace sparse4d {

namespace fs = std::filesystem;

void Mesh::validate() const {
  if (vertices.empty()) throw EmptyMesh("mesh has no vertices");
  if (colors && colors->size() != vertices.size())
    throw MalformedFile("color count does not match vertex count");
  for (const auto& f : faces)
    for (int idx : f)
      if (idx < 0 || static_cast<std::size_t>(idx) >= vertices.size())
        throw MalformedFile("face index " + std::to_string(idx) + " out of range");
}

void LandmarkSet::validate() const {
  if (points.size() < 3) throw MalformedFile("need at least 3 landmarks");
  for (const auto& p : points)
    if (!p.allFinite()) throw MalformedFile("non-finite landmark coordinate");
}

void Sequence4D::validate() const {
  if (frames.empty()) throw MalformedFile("sequence " + id + " has no frames");
  const auto m = frames.front().landmarks.size();
  for (const auto& f : frames) {
    f.mesh.validate();
    f.landmarks.validate();
    if (f.landmarks.size() != m)
      throw MalformedFile("sequence " + id + " has inconsistent landmark counts");
  }
}

namespace {
constexpr std::array<const char*, kExpressionCount> kExpressionNames = {
    "angry", "disgust", "fear", "happy", "sad", "surprise"};
}

const char* expression_name(Expression e) { return kExpressionNames.at(static_cast<int>(e)); }

Expression parse_expression(const std::string& name) {
  for (int i = 0; i < kExpressionCount; ++i)
    if (name == kExpressionNames[static_cast<std::size_t>(i)]) return static_cast<Expression>(i);
  throw MalformedFile("unknown expression label '" + name + "'");
}

const char* view_name(View v) {
  switch (v) {
    case View::left: return "left";
    case View::front: return "front";
    case View::right: return "right";
  }
  return "?";
}

const Sequence4D& MultiView::at(View v) const {
  switch (v) {
    case View::left: return left;
    case View::front: return front;
    case View::right: return right;
  }
  return front;
}

Point3 vertex_centroid(const Mesh& mesh) {
  Point3 c = Point3::Zero();
  for (const auto& v : mesh.vertices) c += v;
  return mesh.vertices.empty() ? c : Point3(c / static_cast<double>(mesh.vertices.size()));
}

Point3 rotate_point_about_vertical(const Point3& p, double degrees, const Point3& pivot) {
  if (degrees == 0.0) return p;
  const double t = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  const Point3 d = p - pivot;
  return pivot + Point3(c * d.x() + s * d.z(), d.y(), -s * d.x() + c * d.z());
}

Mesh rotate_about_vertical(const Mesh& mesh, double degrees) {
  Mesh out = mesh;
  const Point3 pivot = vertex_centroid(mesh);
  for (auto& v : out.vertices) v = rotate_point_about_vertical(v, degrees, pivot);
  return out;
}

LandmarkSet rotate_about_vertical(const LandmarkSet& lm, double degrees, const Point3& pivot) {
  LandmarkSet out = lm;
  for (auto& p : out.points) p = rotate_point_about_vertical(p, degrees, pivot);
  return out;
}

MultiView multi_view(const Sequence4D& seq, double degrees) {
  if (!(degrees > 0.0)) throw InvalidArgument("profile angle must be positive");
  auto rotated = [&](double angle) {
    Sequence4D out;
    out.id = seq.id;
    out.subject_id = seq.subject_id;
    out.label = seq.label;
    out.frames.reserve(seq.frames.size());
    for (const auto& f : seq.frames) {
      const Point3 pivot = vertex_centroid(f.mesh);
      Frame r;
      r.mesh = f.mesh;
      for (auto& v : r.mesh.vertices) v = rotate_point_about_vertical(v, angle, pivot);
      r.landmarks = rotate_about_vertical(f.landmarks, angle, pivot);
      out.frames.push_back(std::move(r));
    }
    return out;
  };
  return MultiView{rotated(degrees), seq, rotated(-degrees)};
}

// --- OBJ ------------------------------------------------------------------

namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

bool has_extension(const fs::path& p, const char* ext) {
  auto e = p.extension().string();
  for (auto& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e == ext;
}

}  // namespace

Mesh parse_obj(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  Mesh mesh;
  std::vector<Point3> colors;
  bool all_colored = true;
  std::vector<std::array<int, 3>> faces;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    const std::string ctx = "obj line " + std::to_string(line_no);
    const auto& tag = tok[0];
    if (tag == "v") {
      if (tok.size() != 4 && tok.size() != 7) throw MalformedFile(ctx + ": expected 3 or 6 values");
      Point3 p(parse_double(tok[1], ctx), parse_double(tok[2], ctx), parse_double(tok[3], ctx));
      mesh.vertices.push_back(p);
      if (tok.size() == 7) {
        colors.emplace_back(parse_double(tok[4], ctx), parse_double(tok[5], ctx),
                            parse_double(tok[6], ctx));
      } else {
        all_colored = false;
      }
    } else if (tag == "f") {
      if (tok.size() != 4) throw MalformedFile(ctx + ": only triangular faces are supported");
      std::array<int, 3> f{};
      for (int k = 0; k < 3; ++k) {
        const auto& field = tok[static_cast<std::size_t>(k + 1)];
        const auto idx = parse_int(field.substr(0, field.find('/')), ctx);
        if (idx < 1) throw MalformedFile(ctx + ": face indices are 1-based");
        f[static_cast<std::size_t>(k)] = static_cast<int>(idx - 1);
      }
      faces.push_back(f);
    } else if (tag == "vn" || tag == "vt" || tag == "g" || tag == "o" || tag == "s" ||
               tag == "usemtl" || tag == "mtllib") {
      continue;
    } else {
      throw MalformedFile(ctx + ": unrecognized record '" + tag + "'");
    }
  }
  if (mesh.vertices.empty()) throw EmptyMesh("obj contains no vertices");
  for (const auto& f : faces)
    for (int idx : f)
      if (static_cast<std::size_t>(idx) >= mesh.vertices.size())
        throw MalformedFile("face index " + std::to_string(idx + 1) + " exceeds vertex count " +
                            std::to_string(mesh.vertices.size()));
  mesh.faces = std::move(faces);
  if (all_colored) mesh.colors = std::move(colors);
  return mesh;
}

// --- PLY ------------------------------------------------------------------

Mesh parse_ply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };
  auto ctx = [&] { return "ply line " + std::to_string(line_no); };

  if (!next_line() || trim(line) != "ply") throw UnsupportedFormat("missing ply magic");

  struct Property {
    std::string name;
    std::string type;
    bool is_list = false;
  };
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
  };
  std::vector<Element> elements;
  bool ascii = false;
  while (true) {
    if (!next_line()) throw MalformedFile("ply header not terminated");
    const auto tok = tokens(line);
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw MalformedFile(ctx() + ": bad format line");
      if (tok[1] != "ascii") throw UnsupportedFormat("only ASCII PLY is supported");
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw MalformedFile(ctx() + ": bad element line");
      elements.push_back({tok[1], static_cast<std::size_t>(parse_int(tok[2], ctx())), {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw MalformedFile(ctx() + ": property before element");
      if (tok.size() == 5 && tok[1] == "list")
        elements.back().props.push_back({tok[4], tok[3], true});
      else if (tok.size() == 3)
        elements.back().props.push_back({tok[2], tok[1], false});
      else
        throw MalformedFile(ctx() + ": bad property line");
    } else if (tok[0] == "comment" || tok[0] == "obj_info") {
      continue;
    } else {
      throw MalformedFile(ctx() + ": unrecognized header line");
    }
  }
  if (!ascii) throw UnsupportedFormat("ply format line missing");

  Mesh mesh;
  std::vector<Point3> colors;
  bool colored = false;
  for (const auto& el : elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
      for (int i = 0; i < static_cast<int>(el.props.size()); ++i) {
        const auto& n = el.props[static_cast<std::size_t>(i)].name;
        if (n == "x") ix = i;
        else if (n == "y") iy = i;
        else if (n == "z") iz = i;
        else if (n == "red" || n == "r") ir = i;
        else if (n == "green" || n == "g") ig = i;
        else if (n == "blue" || n == "b") ib = i;
      }
      if (ix < 0 || iy < 0 || iz < 0) throw MalformedFile("ply vertex element lacks x/y/z");
      colored = ir >= 0 && ig >= 0 && ib >= 0;
      auto color_scale = [&](int i) {
        const auto& t = el.props[static_cast<std::size_t>(i)].type;
        return (t == "uchar" || t == "uint8" || t == "char") ? 1.0 / 255.0 : 1.0;
      };
      for (std::size_t v = 0; v < el.count; ++v) {
        if (!next_line()) throw MalformedFile("ply ended before all vertices were read");
        const auto tok = tokens(line);
        if (tok.size() != el.props.size())
          throw MalformedFile(ctx() + ": expected " + std::to_string(el.props.size()) + " values");
        auto val = [&](int i) { return parse_double(tok[static_cast<std::size_t>(i)], ctx()); };
        mesh.vertices.emplace_back(val(ix), val(iy), val(iz));
        if (colored)
          colors.emplace_back(val(ir) * color_scale(ir), val(ig) * color_scale(ig),
                              val(ib) * color_scale(ib));
      }
    } else if (el.name == "face") {
      for (std::size_t f = 0; f < el.count; ++f) {
        if (!next_line()) throw MalformedFile("ply ended before all faces were read");
        const auto tok = tokens(line);
        if (tok.empty()) throw MalformedFile(ctx() + ": empty face");
        const auto n = parse_int(tok[0], ctx());
        if (n != 3 || tok.size() != 4)
          throw MalformedFile(ctx() + ": only triangular faces are supported");
        std::array<int, 3> face{};
        for (int k = 0; k < 3; ++k)
          face[static_cast<std::size_t>(k)] =
              static_cast<int>(parse_int(tok[static_cast<std::size_t>(k + 1)], ctx()));
        mesh.faces.push_back(face);
      }
    } else {
      for (std::size_t i = 0; i < el.count; ++i)
        if (!next_line()) throw MalformedFile("ply ended inside element " + el.name);
    }
  }
  if (mesh.vertices.empty()) throw EmptyMesh("ply contains no vertices");
  if (colored) mesh.colors = std::move(colors);
  mesh.validate();
  return mesh;
}

Mesh load_mesh(const fs::path& path) {
  const std::string text = read_file(path);
  if (text.rfind("ply", 0) == 0) return parse_ply(text);
  if (has_extension(path, ".obj")) return parse_obj(text);
  if (has_extension(path, ".ply")) return parse_ply(text);
  throw UnsupportedFormat("unsupported mesh format: " + path.string());
}

void save_obj(const Mesh& mesh, const fs::path& path) {
  std::string out;
  out.reserve(mesh.vertices.size() * 64);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& v = mesh.vertices[i];
    out += "v " + format_double(v.x()) + ' ' + format_double(v.y()) + ' ' + format_double(v.z());
    if (mesh.colors) {
      const auto& c = (*mesh.colors)[i];
      out += ' ' + format_double(c.x()) + ' ' + format_double(c.y()) + ' ' + format_double(c.z());
    }
    out += '\n';
  }
  for (const auto& f : mesh.faces)
    out += "f " + std::to_string(f[0] + 1) + ' ' + std::to_string(f[1] + 1) + ' ' +
           std::to_string(f[2] + 1) + '\n';
  write_file_atomic(path, out);
}

// --- landmarks and manifests ----------------------------------------------

LandmarkSet load_landmarks(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  LandmarkSet lm;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    if (tok.size() != 3) throw MalformedFile(ctx + ": expected `x y z`");
    lm.points.emplace_back(parse_double(tok[0], ctx), parse_double(tok[1], ctx),
                           parse_double(tok[2], ctx));
  }
  lm.validate();
  return lm;
}

void save_landmarks(const LandmarkSet& lm, const fs::path& path) {
  std::string out;
  for (const auto& p : lm.points)
    out += format_double(p.x()) + ' ' + format_double(p.y()) + ' ' + format_double(p.z()) + '\n';
  write_file_atomic(path, out);
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  std::istringstream in(read_file(path));
  const fs::path base = path.parent_path();
  std::string line;
  int line_no = 0;
  std::vector<ManifestEntry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    const auto fields = split(trim(line), '\t');
    if (fields.size() != 3) throw MalformedFile(ctx + ": expected 3 tab-separated fields");
    ManifestEntry e;
    e.frame_index = static_cast<int>(parse_int(fields[0], ctx));
    e.mesh_path = fields[1];
    e.landmark_path = fields[2];
    if (e.mesh_path.is_relative()) e.mesh_path = base / e.mesh_path;
    if (e.landmark_path.is_relative()) e.landmark_path = base / e.landmark_path;
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_manifest(const std::vector<ManifestEntry>& entries, const fs::path& path) {
  std::string out;
  for (const auto& e : entries)
    out += std::to_string(e.frame_index) + '\t' + e.mesh_path.generic_string() + '\t' +
           e.landmark_path.generic_string() + '\n';
  write_file_atomic(path, out);
}

std::vector<Frame> load_frames(const fs::path& manifest) {
  std::vector<Frame> frames;
  for (const auto& e : load_manifest(manifest))
    frames.push_back(Frame{load_mesh(e.mesh_path), load_landmarks(e.landmark_path)});
  return frames;
}

std::vector<DatasetEntry> load_dataset_index(const fs::path& path) {
  std::istringstream in(read_file(path));
  const fs::path base = path.parent_path();
  std::string line;
  int line_no = 0;
  std::vector<DatasetEntry> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    const auto f = split(trim(line), '\t');
    if (f.size() != 4) throw MalformedFile(ctx + ": expected 4 tab-separated fields");
    DatasetEntry e{f[0], f[1], parse_expression(f[2]), f[3]};
    if (e.manifest.is_relative()) e.manifest = base / e.manifest;
    out.push_back(std::move(e));
  }
  return out;
}

void save_dataset_index(const std::vector<DatasetEntry>& entries, const fs::path& path) {
  std::string out;
  for (const auto& e : entries)
    out += e.sequence_id + '\t' + e.subject_id + '\t' + expression_name(e.label) + '\t' +
           e.manifest.generic_string() + '\n';
  write_file_atomic(path, out);
}

Sequence4D load_sequence(const DatasetEntry& entry) {
  Sequence4D seq;
  seq.id = entry.sequence_id;
  seq.subject_id = entry.subject_id;
  seq.label = entry.label;
  seq.frames = load_frames(entry.manifest);
  seq.validate();
  return seq;
}

}  // namespace sparse4d
