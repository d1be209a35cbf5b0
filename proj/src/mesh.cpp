#include "enpod/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "enpod/atomic_file.hpp"
#include "enpod/errors.hpp"
#include "enpod/hash.hpp"

namespace enpod {

namespace {

double cross(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
           std::vector<BoundaryMarker> vertex_markers)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      vertex_markers_(std::move(vertex_markers)) {
  const int nv = static_cast<int>(vertices_.size());
  if (vertex_markers_.size() != vertices_.size())
    throw InvariantError("marker count does not match vertex count");
  double extent = 0.0;
  for (const auto& p : vertices_) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  const double area_floor = 1e-14 * std::max(extent * extent, 1e-300);

  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    auto& tri = triangles_[t];
    for (int v : tri)
      if (v < 0 || v >= nv)
        throw InvariantError("triangle " + std::to_string(t) + " references vertex " +
                             std::to_string(v) + " out of range");
    double a = cross(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    if (a < 0.0) {
      std::swap(tri[1], tri[2]);
      a = -a;
    }
    if (0.5 * a <= area_floor)
      throw InvariantError("triangle " + std::to_string(t) + " is degenerate");
  }
  build_edges();

  for (const auto& tri : triangles_) {
    const Point& a = vertices_[tri[0]];
    const Point& b = vertices_[tri[1]];
    const Point& c = vertices_[tri[2]];
    const double area2 = cross(a, b, c);
    h_ = std::max(h_, dist(a, b) * dist(b, c) * dist(c, a) / area2);
  }
}

void Mesh::build_edges() {
  std::map<std::pair<int, int>, int> index;
  triangle_edges_.assign(triangles_.size(), {-1, -1, -1});
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      int a = tri[(k + 1) % 3];
      int b = tri[(k + 2) % 3];
      auto key = std::minmax(a, b);
      auto [it, inserted] = index.try_emplace({key.first, key.second}, static_cast<int>(edges_.size()));
      if (inserted) {
        edges_.push_back({key.first, key.second});
        edge_valence_.push_back(0);
      }
      ++edge_valence_[it->second];
      triangle_edges_[t][k] = it->second;
    }
  }
  edge_markers_.assign(edges_.size(), BoundaryMarker::Other);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edge_valence_[e] > 2)
      throw InvariantError("edge (" + std::to_string(edges_[e][0]) + "," +
                           std::to_string(edges_[e][1]) + ") is shared by more than two triangles");
    if (edge_valence_[e] == 1) {
      BoundaryMarker a = vertex_markers_[edges_[e][0]];
      BoundaryMarker b = vertex_markers_[edges_[e][1]];
      edge_markers_[e] = (a == b) ? a : BoundaryMarker::Other;
    }
  }
}

double Mesh::signed_area(std::size_t t) const {
  const auto& tri = triangles_[t];
  return 0.5 * cross(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double Mesh::area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) s += signed_area(t);
  return s;
}

std::uint64_t Mesh::hash() const {
  Fnv1a h;
  for (const auto& p : vertices_) {
    h.update_value(p.x);
    h.update_value(p.y);
  }
  for (auto m : vertex_markers_) h.update_value(static_cast<int>(m));
  for (const auto& t : triangles_) h.update(t.data(), sizeof(int) * 3);
  return h.digest();
}

Mesh generate_offset_annulus(int n_theta, int n_r, const AnnulusGeometry& g) {
  if (n_theta < 8 || n_r < 2)
    throw ResolutionError("offset annulus needs n_theta >= 8 and n_r >= 2");
  if (!(g.r1 > 0.0 && g.r2 > 0.0) || !(std::hypot(g.c1, g.c2) + g.r2 < g.r1))
    throw GeometryError("inner disc is not strictly inside the outer disc");

  std::vector<Point> vertices;
  std::vector<BoundaryMarker> markers;
  vertices.reserve(static_cast<std::size_t>(n_theta) * (n_r + 1));
  // vertex(k, l) is stored at l * n_theta + k
  for (int l = 0; l <= n_r; ++l) {
    const double s = static_cast<double>(l) / n_r;
    for (int k = 0; k < n_theta; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / n_theta;
      const double ct = std::cos(theta);
      const double st = std::sin(theta);
      vertices.push_back({(1.0 - s) * (g.c1 + g.r2 * ct) + s * g.r1 * ct,
                          (1.0 - s) * (g.c2 + g.r2 * st) + s * g.r1 * st});
      markers.push_back(l == 0     ? BoundaryMarker::InnerCircle
                        : l == n_r ? BoundaryMarker::OuterCircle
                                   : BoundaryMarker::Other);
    }
  }
  auto id = [n_theta](int k, int l) { return l * n_theta + (k % n_theta); };

  std::vector<Triangle> triangles;
  triangles.reserve(2 * static_cast<std::size_t>(n_theta) * n_r);
  for (int l = 0; l < n_r; ++l) {
    for (int k = 0; k < n_theta; ++k) {
      const int a = id(k, l), b = id(k + 1, l), c = id(k + 1, l + 1), d = id(k, l + 1);
      if (dist(vertices[a], vertices[c]) <= dist(vertices[b], vertices[d])) {
        triangles.push_back({a, b, c});
        triangles.push_back({a, c, d});
      } else {
        triangles.push_back({a, b, d});
        triangles.push_back({b, c, d});
      }
    }
  }
  const double floor = 1e-14 * g.r1 * g.r1;
  for (auto& t : triangles) {
    double a2 = cross(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    if (std::abs(0.5 * a2) <= floor) throw ResolutionError("degenerate triangle generated");
    if (a2 < 0.0) std::swap(t[1], t[2]);
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(markers));
}

Mesh generate_unit_square(int n) {
  if (n < 2) throw ResolutionError("unit square needs n >= 2");
  std::vector<Point> vertices;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      vertices.push_back({static_cast<double>(i) / (n - 1), static_cast<double>(j) / (n - 1)});
  std::vector<Triangle> triangles;
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const int a = j * n + i, b = a + 1, c = a + n + 1, d = a + n;
      triangles.push_back({a, b, c});
      triangles.push_back({a, c, d});
    }
  }
  std::vector<BoundaryMarker> markers(vertices.size(), BoundaryMarker::Other);
  return Mesh(std::move(vertices), std::move(triangles), std::move(markers));
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "mesh2d v1\n";
  out << "vertices " << mesh.num_vertices() << "\n";
  char buf[96];
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto& p = mesh.vertices()[i];
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", p.x, p.y,
                  static_cast<int>(mesh.vertex_markers()[i]));
    out << buf;
  }
  out << "triangles " << mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  write_file_atomic(path, out.str());
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    throw ParseError(std::string("unexpected end of file, expected ") + what, line_no_ + 1);
  }
  int line() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

void expect_end(std::istringstream& ss, int line) {
  std::string extra;
  if (ss >> extra) throw ParseError("trailing token '" + extra + "'", line);
}

}  // namespace

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  LineReader reader(in);

  {
    auto ss = reader.next("header");
    std::string a, b;
    ss >> a >> b;
    if (a != "mesh2d" || b != "v1") throw ParseError("expected header 'mesh2d v1'", reader.line());
  }
  auto read_count = [&](const char* keyword) {
    auto ss = reader.next(keyword);
    std::string kw;
    long long n = -1;
    if (!(ss >> kw >> n) || kw != keyword || n < 0)
      throw ParseError(std::string("expected '") + keyword + " N'", reader.line());
    expect_end(ss, reader.line());
    return static_cast<std::size_t>(n);
  };

  const std::size_t nv = read_count("vertices");
  std::vector<Point> vertices(nv);
  std::vector<BoundaryMarker> markers(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    auto ss = reader.next("vertex line");
    // operator>> on double is not guaranteed to round-trip; from_chars is.
    std::string sx, sy;
    int marker = -1;
    if (!(ss >> sx >> sy >> marker)) throw ParseError("expected 'x y marker'", reader.line());
    expect_end(ss, reader.line());
    auto parse = [&](const std::string& s) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("bad coordinate '" + s + "'", reader.line());
      return v;
    };
    vertices[i] = {parse(sx), parse(sy)};
    if (marker < 0 || marker > 2) throw ParseError("marker must be 0, 1 or 2", reader.line());
    markers[i] = static_cast<BoundaryMarker>(marker);
  }

  const std::size_t nt = read_count("triangles");
  std::vector<Triangle> triangles(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    auto ss = reader.next("triangle line");
    long long i = 0, j = 0, k = 0;
    if (!(ss >> i >> j >> k)) throw ParseError("expected 'i j k'", reader.line());
    expect_end(ss, reader.line());
    for (long long v : {i, j, k})
      if (v < 0 || v >= static_cast<long long>(nv))
        throw ParseError("vertex index " + std::to_string(v) + " out of range", reader.line());
    triangles[t] = {static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)};
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(markers));
}

}  // namespace enpod
