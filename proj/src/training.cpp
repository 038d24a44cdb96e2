#include "mfn/training.hpp"

#include <algorithm>
#include <cmath>

#include "mfn/rng.hpp"

namespace mfn {

MemoryTable ingest_table(std::vector<VarKind> kinds,
                         std::span<const std::vector<Value>> exemplars,
                         double subsample_prob, std::uint64_t seed) {
  if (subsample_prob < 0.0 || subsample_prob > 1.0)
    throw ValidationError("subsample probability must lie in [0, 1]");
  Rng rng(seed);
  std::vector<std::vector<Value>> kept;
  for (const auto& row : exemplars) {
    if (subsample_prob >= 1.0 || rng.bernoulli(subsample_prob))
      kept.push_back(row);
  }
  if (kept.empty())
    throw ValidationError(
        "subsampling kept no exemplars; raise the probability or change the "
        "seed");
  return MemoryTable::from_rows(std::move(kinds), kept);
}

NmfResult nmf(const Eigen::MatrixXd& x, int p, int max_iters, double tol,
              std::uint64_t seed) {
  const auto n = x.rows(), m = x.cols();
  if (p >= n) throw ValidationError("nmf requires p < n");
  if (p < 1) throw ValidationError("nmf requires p >= 1");
  if ((x.array() < 0.0).any())
    throw ValidationError("nmf input must be nonnegative");

  Rng rng(seed);
  NmfResult out;
  out.w.resize(n, p);
  out.h.resize(p, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) out.w(i, j) = rng.uniform(0.1, 1.1);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out.h(i, j) = rng.uniform(0.1, 1.1);

  const double eps = 1e-12;
  double prev = (x - out.w * out.h).squaredNorm();
  out.objective_trace.push_back(prev);
  for (int it = 0; it < max_iters; ++it) {
    out.h.array() *= (out.w.transpose() * x).array() /
                     ((out.w.transpose() * out.w * out.h).array() + eps);
    out.w.array() *= (x * out.h.transpose()).array() /
                     ((out.w * out.h * out.h.transpose()).array() + eps);
    double obj = (x - out.w * out.h).squaredNorm();
    out.objective_trace.push_back(obj);
    ++out.iterations;
    if (prev > 0.0 && (prev - obj) / prev < tol) break;
    prev = obj;
  }
  return out;
}

namespace {

/// Rotate the vector's phase so its largest-magnitude entry is real and
/// positive; pins the sign/phase ambiguity for reproducible payloads.
void canonicalize_phase(Eigen::VectorXcd& v) {
  Eigen::Index top = 0;
  double best = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double a = std::abs(v[i]);
    if (a > best) {
      best = a;
      top = i;
    }
  }
  if (best == 0.0) return;
  Complex phase = v[top] / best;
  v /= phase;
}

}  // namespace

PcaResult complex_pca(const Eigen::MatrixXcd& x, int p) {
  const auto n = x.rows();
  if (p >= n) throw ValidationError("pca requires p < n");
  if (p < 1) throw ValidationError("pca requires p >= 1");

  Eigen::MatrixXcd sigma = x * x.adjoint();
  PcaResult out;
  out.w.resize(n, p);

  const double scale = std::max(1.0, sigma.norm());
  Rng rng(0x9e3779b97f4a7c15ULL);
  double top_eig = 0.0;
  int found = 0;
  for (int k = 0; k < p; ++k) {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
      v[i] = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    // Keep iterates orthogonal to the vectors already found.
    auto reorthogonalize = [&](Eigen::VectorXcd& u) {
      for (int j = 0; j < found; ++j)
        u -= out.w.col(j).dot(u) * out.w.col(j);
    };
    reorthogonalize(v);
    if (v.norm() < 1e-12) break;
    v.normalize();
    canonicalize_phase(v);

    double lambda = 0.0;
    for (int it = 0; it < 100000; ++it) {
      Eigen::VectorXcd next = sigma * v;
      reorthogonalize(next);
      double norm = next.norm();
      if (norm <= 1e-14 * scale) {
        lambda = 0.0;
        break;
      }
      next /= norm;
      canonicalize_phase(next);
      double delta = (next - v).norm();
      v = std::move(next);
      lambda = std::real(v.dot(sigma * v));
      if (delta <= 1e-10) break;
    }
    if (k == 0) top_eig = lambda;
    if (lambda <= 1e-12 * std::max(top_eig, 1.0)) break;
    out.w.col(k) = v;
    out.eigenvalues.push_back(lambda);
    sigma -= lambda * v * v.adjoint();
    ++found;
  }

  // Fill any remaining columns from the orthogonal complement.
  if (found < p) {
    out.rank_deficient = true;
    for (Eigen::Index basis = 0; basis < n && found < p; ++basis) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
      v[basis] = 1.0;
      for (int j = 0; j < found; ++j)
        v -= out.w.col(j).dot(v) * out.w.col(j);
      if (v.norm() < 1e-8) continue;
      v.normalize();
      canonicalize_phase(v);
      out.w.col(found) = v;
      out.eigenvalues.push_back(0.0);
      ++found;
    }
    if (found < p)
      throw ValidationError("could not complete an orthonormal basis");
  }
  return out;
}

Eigen::MatrixXd pool_positions(std::span<const Eigen::MatrixXd> positions) {
  if (positions.empty()) throw ValidationError("nothing to pool");
  const auto n = positions.front().rows();
  Eigen::Index m = 0;
  for (const auto& x : positions) {
    if (x.rows() != n)
      throw ValidationError("position matrices disagree on factor shape");
    m += x.cols();
  }
  Eigen::MatrixXd out(n, m);
  Eigen::Index at = 0;
  for (const auto& x : positions) {
    out.middleCols(at, x.cols()) = x;
    at += x.cols();
  }
  return out;
}

Eigen::MatrixXcd pool_positions(std::span<const Eigen::MatrixXcd> positions) {
  if (positions.empty()) throw ValidationError("nothing to pool");
  const auto n = positions.front().rows();
  Eigen::Index m = 0;
  for (const auto& x : positions) {
    if (x.rows() != n)
      throw ValidationError("position matrices disagree on factor shape");
    m += x.cols();
  }
  Eigen::MatrixXcd out(n, m);
  Eigen::Index at = 0;
  for (const auto& x : positions) {
    out.middleCols(at, x.cols()) = x;
    at += x.cols();
  }
  return out;
}

std::vector<std::vector<Value>> pool_exemplars(
    std::span<const std::vector<std::vector<Value>>> positions) {
  if (positions.empty()) throw ValidationError("nothing to pool");
  std::size_t width = 0;
  bool first = true;
  std::vector<std::vector<Value>> out;
  for (const auto& rows : positions) {
    for (const auto& row : rows) {
      if (first) {
        width = row.size();
        first = false;
      }
      if (row.size() != width)
        throw ValidationError("position exemplars disagree on factor shape");
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace mfn
