#pragma once

#include <filesystem>
#include <string>

#include "enpod/full_order.hpp"
#include "enpod/sparse_matrix.hpp"
#include "enpod/taylor_hood.hpp"

namespace enpod {

/// Binary layout: "EPODMAT1", u32 rows, u32 cols, rows*cols little-endian
/// f64 in column-major order.
std::string encode_matrix(const DenseMatrix& m);
/// Throws ParseError on a bad magic or a payload of the wrong length.
DenseMatrix decode_matrix(const std::string& bytes);

void write_matrix_file(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix read_matrix_file(const std::filesystem::path& path);

/// Legacy ASCII VTK unstructured grid: vertex velocities (P2 values at the
/// vertex nodes) and vertex pressures. An empty pressure writes zeros.
std::string field_vtk(const TaylorHoodSpace& space, const Vector& velocity, const Vector& pressure);
void export_field_vtk(const TaylorHoodSpace& space, const FlowField& field, const std::filesystem::path& path);

/// 16 hex digits of the FNV-1a digest of `bytes`.
std::string content_hash(std::string_view bytes);
std::string hex_hash(std::uint64_t h);

}  // namespace enpod
