#pragma once

#include <vector>

#include "enpod/sparse_matrix.hpp"

namespace enpod {

struct SnapshotInfo {
  int member = 0;
  int index = 0;  ///< time level m = 0..N_S
  double time = 0.0;
  double epsilon = 0.0;
};

/// Snapshot matrix with one velocity coefficient vector per column, ordered
/// member-major: (j=0, m=0..N_S), (j=1, m=0..N_S), ...
struct SnapshotSet {
  DenseMatrix matrix;
  std::vector<SnapshotInfo> columns;

  int count() const { return static_cast<int>(matrix.cols()); }
};

/// Throws InvariantError unless the column metadata is consistent with a
/// J_S x (N_S + 1) layout and every column satisfies ||B col|| <= tol.
void validate_snapshots(const SnapshotSet& set, const SparseMatrix& divergence, double tol = 1e-9);

}  // namespace enpod
