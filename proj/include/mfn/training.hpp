#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "mfn/memory_table.hpp"
#include "mfn/types.hpp"

namespace mfn {

/// Store exemplars verbatim, each kept independently with probability
/// `subsample_prob` under the given seed.
MemoryTable ingest_table(std::vector<VarKind> kinds,
                         std::span<const std::vector<Value>> exemplars,
                         double subsample_prob, std::uint64_t seed);

struct NmfResult {
  Eigen::MatrixXd w;  // n x p, the factor payload
  Eigen::MatrixXd h;  // p x m, per-sample hidden values (diagnostics)
  std::vector<double> objective_trace;  // Frobenius objective per iteration
  std::size_t iterations = 0;
};

/// Multiplicative-update nonnegative factorization of X (n x m, X >= 0)
/// into W H with W >= 0, H >= 0 and p < n. Stops when the relative
/// objective improvement falls below `tol` or after `max_iters` rounds.
NmfResult nmf(const Eigen::MatrixXd& x, int p, int max_iters, double tol,
              std::uint64_t seed);

struct PcaResult {
  Eigen::MatrixXcd w;  // n x p, orthonormal columns
  std::vector<double> eigenvalues;
  /// True when the sample covariance had rank < p and the trailing columns
  /// were filled from the orthogonal complement.
  bool rank_deficient = false;
};

/// Top-p eigenvectors of the sample covariance sum_t x_t x_t^H, computed by
/// power iteration with Hermitian deflation.
PcaResult complex_pca(const Eigen::MatrixXcd& x, int p);

/// Column-pool per-position exemplar matrices into one training matrix for a
/// payload shared across all positions of a time-invariant layout.
Eigen::MatrixXd pool_positions(std::span<const Eigen::MatrixXd> positions);
Eigen::MatrixXcd pool_positions(std::span<const Eigen::MatrixXcd> positions);

/// Row-pool per-position exemplar lists for a shared memory table.
std::vector<std::vector<Value>> pool_exemplars(
    std::span<const std::vector<std::vector<Value>>> positions);

}  // namespace mfn
