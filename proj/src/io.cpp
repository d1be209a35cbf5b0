#include "enpod/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "enpod/atomic_file.hpp"
#include "enpod/errors.hpp"
#include "enpod/hash.hpp"

namespace enpod {

static_assert(std::endian::native == std::endian::little, "matrix files assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'E', 'P', 'O', 'D', 'M', 'A', 'T', '1'};
constexpr std::size_t kHeader = sizeof kMagic + 2 * sizeof(std::uint32_t);

}  // namespace

std::string encode_matrix(const DenseMatrix& m) {
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) throw DimensionError("matrix too large for the file format");
  const auto rows = static_cast<std::uint32_t>(m.rows());
  const auto cols = static_cast<std::uint32_t>(m.cols());
  std::string out(kHeader + sizeof(double) * m.size(), '\0');
  std::memcpy(out.data(), kMagic, sizeof kMagic);
  std::memcpy(out.data() + 8, &rows, 4);
  std::memcpy(out.data() + 12, &cols, 4);
  // Eigen's default storage is column-major, matching the file
  if (m.size() > 0) std::memcpy(out.data() + kHeader, m.data(), sizeof(double) * m.size());
  return out;
}

DenseMatrix decode_matrix(const std::string& bytes) {
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw ParseError("not an EPODMAT1 matrix file", 1);
  std::uint32_t rows = 0, cols = 0;
  std::memcpy(&rows, bytes.data() + 8, 4);
  std::memcpy(&cols, bytes.data() + 12, 4);
  const std::size_t expected = kHeader + sizeof(double) * static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != expected)
    throw ParseError("matrix payload is " + std::to_string(bytes.size() - kHeader) + " bytes, expected " +
                         std::to_string(expected - kHeader),
                     1);
  DenseMatrix m(rows, cols);
  if (m.size() > 0) std::memcpy(m.data(), bytes.data() + kHeader, sizeof(double) * m.size());
  return m;
}

void write_matrix_file(const std::filesystem::path& path, const DenseMatrix& m) {
  write_file_atomic(path, encode_matrix(m));
}

DenseMatrix read_matrix_file(const std::filesystem::path& path) { return decode_matrix(read_file(path)); }

std::string field_vtk(const TaylorHoodSpace& space, const Vector& velocity, const Vector& pressure) {
  if (velocity.size() != space.n_vel()) throw DimensionError("velocity length does not match the space");
  if (pressure.size() != 0 && pressure.size() != space.n_pr())
    throw DimensionError("pressure length does not match the space");
  const Mesh& mesh = space.mesh();
  std::ostringstream out;
  char buf[128];
  out << "# vtk DataFile Version 3.0\nenpod field\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", p.x, p.y);
    out << buf;
  }
  out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
  out << "POINT_DATA " << mesh.num_vertices() << "\nVECTORS velocity double\n";
  // vertex nodes carry the first V node indices
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const int node = static_cast<int>(v);
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", velocity[space.velocity_dof(0, node)],
                  velocity[space.velocity_dof(1, node)]);
    out << buf;
  }
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    std::snprintf(buf, sizeof buf, "%.17g\n", pressure.size() != 0 ? pressure[static_cast<Eigen::Index>(v)] : 0.0);
    out << buf;
  }
  return out.str();
}

void export_field_vtk(const TaylorHoodSpace& space, const FlowField& field, const std::filesystem::path& path) {
  write_file_atomic(path, field_vtk(space, field.velocity, field.pressure));
}

std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(std::string_view bytes) { return hex_hash(fnv1a(bytes)); }

}  // namespace enpod
