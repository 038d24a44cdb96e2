#include "mfn/subspace.hpp"

#include <algorithm>
#include <cmath>

#include "mfn/detail/binio.hpp"

namespace mfn {

SubspaceFactor SubspaceFactor::make(Eigen::MatrixXd w, HiddenDomain domain,
                                    SubspaceConfig cfg) {
  if (domain == HiddenDomain::Complex)
    throw ValidationError("complex hidden domain needs a complex matrix");
  if (w.cols() >= w.rows())
    throw ValidationError("subspace factor requires p < n");
  if (domain == HiddenDomain::NonnegReals && (w.array() < 0.0).any())
    throw ValidationError("nonnegative subspace requires W >= 0");
  SubspaceFactor f;
  f.basis = std::move(w);
  f.domain = domain;
  f.config = cfg;
  return f;
}

SubspaceFactor SubspaceFactor::make_complex(Eigen::MatrixXcd w,
                                            SubspaceConfig cfg) {
  if (w.cols() >= w.rows())
    throw ValidationError("subspace factor requires p < n");
  SubspaceFactor f;
  f.basis = std::move(w);
  f.domain = HiddenDomain::Complex;
  f.config = cfg;
  return f;
}

namespace {

/// Per-variable quadratic coefficient c_i = w (W - w) / W; zero when the
/// variable has no external voters (its term drops from the objective).
std::vector<double> coefficients(const SubspaceInputs& in) {
  std::vector<double> c(in.summaries.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (in.summaries[i].empty()) continue;
    double w = in.weights[i], total = in.total_weights[i];
    if (total < w)
      throw ValidationError("total weight smaller than the edge weight");
    c[i] = w * (total - w) / total;
  }
  return c;
}

double summary_mean_real(const Summary& s) {
  return std::get<RealSummary>(s.payload).mean;
}

Complex summary_mean_complex(const Summary& s) {
  if (const auto* cs = std::get_if<ComplexSummary>(&s.payload))
    return cs->mean;
  return Complex{std::get<RealSummary>(s.payload).mean, 0.0};
}

/// Minimize z'Az - 2 b'z over z >= 0: projected gradient descent with a
/// Barzilai-Borwein trial step, monotone Armijo backtracking, and a final
/// exact solve on the free coordinate set.
Eigen::VectorXd pgd_nonneg(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           Eigen::VectorXd z, int max_iters, double tol,
                           std::vector<double>* trace = nullptr) {
  auto objective = [&](const Eigen::VectorXd& v) {
    return v.dot(a * v) - 2.0 * b.dot(v);
  };
  auto gradient = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return 2.0 * (a * v - b);
  };
  auto pg_norm = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& g) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      double gj = (v[j] > 0.0) ? g[j] : std::min(g[j], 0.0);
      s += gj * gj;
    }
    return std::sqrt(s);
  };

  double fz = objective(z);
  if (trace) trace->push_back(fz);
  Eigen::VectorXd prev_z, prev_grad;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd grad = gradient(z);
    if (pg_norm(z, grad) <= tol) break;

    double step;
    if (it == 0 || (z - prev_z).squaredNorm() == 0.0) {
      double gag = grad.dot(a * grad);
      step = (gag > 0.0) ? grad.squaredNorm() / (2.0 * gag) : 1.0;
    } else {
      Eigen::VectorXd s = z - prev_z;
      Eigen::VectorXd y = grad - prev_grad;
      double sy = s.dot(y);
      step = (sy > 0.0) ? s.squaredNorm() / sy : 1.0;
    }
    if (!(step > 0.0) || !std::isfinite(step)) step = 1.0;

    prev_z = z;
    prev_grad = grad;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd cand = (z - step * grad).cwiseMax(0.0);
      double fc = objective(cand);
      if (fc <= fz + 1e-4 * grad.dot(cand - z)) {
        z = std::move(cand);
        fz = fc;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    if (trace) trace->push_back(fz);
  }

  // Polish: solve the unconstrained problem on the currently free
  // coordinates; keep it only if it stays feasible and does not regress.
  std::vector<Eigen::Index> free_set;
  for (Eigen::Index j = 0; j < z.size(); ++j)
    if (z[j] > 0.0) free_set.push_back(j);
  if (!free_set.empty()) {
    Eigen::MatrixXd af(free_set.size(), free_set.size());
    Eigen::VectorXd bf(free_set.size());
    for (std::size_t r = 0; r < free_set.size(); ++r) {
      bf[static_cast<Eigen::Index>(r)] = b[free_set[r]];
      for (std::size_t c = 0; c < free_set.size(); ++c)
        af(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            a(free_set[r], free_set[c]);
    }
    Eigen::VectorXd zf = af.completeOrthogonalDecomposition().solve(bf);
    if (zf.minCoeff() >= 0.0) {
      Eigen::VectorXd cand = Eigen::VectorXd::Zero(z.size());
      for (std::size_t r = 0; r < free_set.size(); ++r)
        cand[free_set[r]] = zf[static_cast<Eigen::Index>(r)];
      double fc = objective(cand);
      if (fc <= fz) {
        z = std::move(cand);
        if (trace) trace->push_back(fc);
      }
    }
  }
  return z;
}

}  // namespace

SubspaceOpinion subspace_opinion(const SubspaceFactor& factor,
                                 const SubspaceInputs& in) {
  const std::size_t n = factor.visible_dim();
  if (in.summaries.size() != n || in.weights.size() != n ||
      in.total_weights.size() != n)
    throw ValidationError("subspace inputs are not aligned with the factor");
  std::vector<double> c = coefficients(in);

  SubspaceOpinion out;
  if (factor.is_complex()) {
    const auto& w = std::get<Eigen::MatrixXcd>(factor.basis);
    Eigen::VectorXcd target = Eigen::VectorXcd::Zero(w.rows());
    Eigen::VectorXd cv = Eigen::VectorXd::Zero(w.rows());
    for (std::size_t i = 0; i < n; ++i) {
      cv[static_cast<Eigen::Index>(i)] = c[i];
      if (c[i] > 0.0)
        target[static_cast<Eigen::Index>(i)] =
            summary_mean_complex(in.summaries[i]);
    }
    Eigen::MatrixXcd wc = cv.cast<Complex>().asDiagonal() * w;
    Eigen::MatrixXcd normal = w.adjoint() * wc;
    Eigen::VectorXcd rhs = wc.adjoint() * target;
    Eigen::VectorXcd z;
    if (cv.sum() == 0.0) {
      z = Eigen::VectorXcd::Zero(w.cols());
    } else {
      z = normal.completeOrthogonalDecomposition().solve(rhs);
    }
    Eigen::VectorXcd o = w * z;
    out.opinion.reserve(n);
    for (Eigen::Index i = 0; i < o.size(); ++i)
      out.opinion.emplace_back(Complex{o[i]});
    out.hidden = std::move(z);
    return out;
  }

  const auto& w = std::get<Eigen::MatrixXd>(factor.basis);
  Eigen::VectorXd target = Eigen::VectorXd::Zero(w.rows());
  Eigen::VectorXd cv = Eigen::VectorXd::Zero(w.rows());
  for (std::size_t i = 0; i < n; ++i) {
    cv[static_cast<Eigen::Index>(i)] = c[i];
    if (c[i] > 0.0)
      target[static_cast<Eigen::Index>(i)] = summary_mean_real(in.summaries[i]);
  }
  Eigen::MatrixXd wc = cv.asDiagonal() * w;
  Eigen::MatrixXd normal = w.transpose() * wc;
  Eigen::VectorXd rhs = wc.transpose() * target;

  Eigen::VectorXd z;
  if (cv.sum() == 0.0) {
    z = Eigen::VectorXd::Zero(w.cols());
  } else {
    z = normal.completeOrthogonalDecomposition().solve(rhs);
  }
  if (factor.domain == HiddenDomain::NonnegReals) {
    z = pgd_nonneg(normal, rhs, z.cwiseMax(0.0), factor.config.qp_max_iters,
                   factor.config.qp_tolerance, &out.qp_trace);
  }
  Eigen::VectorXd o = w * z;
  out.opinion.reserve(n);
  for (Eigen::Index i = 0; i < o.size(); ++i) out.opinion.emplace_back(o[i]);
  out.hidden = std::move(z);
  return out;
}

double subspace_confidence(const SubspaceFactor& factor,
                           const SubspaceOpinion& opinion,
                           const SubspaceInputs& in) {
  const std::size_t n = factor.visible_dim();
  const double lambda = factor.config.lambda;
  double mismatch_sum = 0.0;
  double penalty_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in.external_counts[i] > 0) {
      double d2;
      if (factor.is_complex()) {
        Complex diff = std::get<Complex>(opinion.opinion[i]) -
                       summary_mean_complex(in.summaries[i]);
        d2 = std::norm(diff);
      } else {
        double diff = std::get<double>(opinion.opinion[i]) -
                      summary_mean_real(in.summaries[i]);
        d2 = diff * diff;
      }
      mismatch_sum += -lambda * static_cast<double>(in.external_counts[i]) * d2;
    }
    penalty_sum += -1.0 / std::max<std::uint32_t>(1, in.voter_counts[i]);
  }
  double dn = static_cast<double>(n);
  if (factor.config.penalty_inside)
    return (mismatch_sum + penalty_sum) / dn;
  return mismatch_sum / dn + penalty_sum;
}

bool subspace_satisfied(std::span<const Value> opinion,
                        std::span<const Value> vote, double alpha) {
  if (opinion.size() != vote.size())
    throw ValidationError("opinion/vote length mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < opinion.size(); ++i) {
    if (std::holds_alternative<Complex>(opinion[i])) {
      d2 += std::norm(std::get<Complex>(opinion[i]) -
                      std::get<Complex>(vote[i]));
    } else {
      double d = std::get<double>(opinion[i]) - std::get<double>(vote[i]);
      d2 += d * d;
    }
  }
  return d2 <= alpha;
}

double subspace_residual(const SubspaceFactor& factor,
                         std::span<const Value> vote) {
  if (vote.size() != factor.visible_dim())
    throw ValidationError("vote length does not match the factor");
  if (factor.is_complex()) {
    const auto& w = std::get<Eigen::MatrixXcd>(factor.basis);
    Eigen::VectorXcd v(w.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v[i] = std::get<Complex>(vote[static_cast<std::size_t>(i)]);
    Eigen::VectorXcd z = w.completeOrthogonalDecomposition().solve(v);
    return (w * z - v).squaredNorm();
  }
  const auto& w = std::get<Eigen::MatrixXd>(factor.basis);
  Eigen::VectorXd v(w.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = std::get<double>(vote[static_cast<std::size_t>(i)]);
  Eigen::VectorXd z;
  if (factor.domain == HiddenDomain::NonnegReals) {
    Eigen::MatrixXd normal = w.transpose() * w;
    Eigen::VectorXd rhs = w.transpose() * v;
    Eigen::VectorXd z0 =
        w.completeOrthogonalDecomposition().solve(v).cwiseMax(0.0);
    z = pgd_nonneg(normal, rhs, z0, factor.config.qp_max_iters,
                   factor.config.qp_tolerance);
  } else {
    z = w.completeOrthogonalDecomposition().solve(v);
  }
  return (w * z - v).squaredNorm();
}

double subspace_objective(const SubspaceFactor& factor,
                          const SubspaceInputs& in, const Eigen::VectorXd& z) {
  const auto& w = std::get<Eigen::MatrixXd>(factor.basis);
  std::vector<double> c = coefficients(in);
  Eigen::VectorXd o = w * z;
  double f = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    double d = o[static_cast<Eigen::Index>(i)] -
               summary_mean_real(in.summaries[i]);
    f += c[i] * d * d;
  }
  return f;
}

namespace {
constexpr char kSubspaceMagic[8] = {'M', 'F', 'N', 'S', 'U', 'B', '0', '1'};
constexpr std::uint32_t kSubspaceVersion = 1;
}  // namespace

void save_subspace(const SubspaceFactor& factor, const std::string& path) {
  detail::BinWriter w;
  w.magic(kSubspaceMagic);
  w.u32(kSubspaceVersion);
  w.u64(factor.visible_dim());
  w.u64(factor.hidden_dim());
  w.u8(factor.is_complex() ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(factor.domain));
  w.f64(factor.config.lambda);
  w.f64(factor.config.alpha);
  w.i32(factor.config.qp_max_iters);
  w.f64(factor.config.qp_tolerance);
  w.u8(factor.config.penalty_inside ? 1 : 0);
  if (factor.is_complex()) {
    const auto& m = std::get<Eigen::MatrixXcd>(factor.basis);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        w.f64(m(i, j).real());
        w.f64(m(i, j).imag());
      }
  } else {
    const auto& m = std::get<Eigen::MatrixXd>(factor.basis);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) w.f64(m(i, j));
  }
  w.commit(path);
}

SubspaceFactor load_subspace(const std::string& path) {
  detail::BinReader r(path);
  r.expect_magic(kSubspaceMagic);
  if (r.u32() != kSubspaceVersion)
    throw IoError("unsupported subspace version: " + path);
  auto n = static_cast<Eigen::Index>(r.u64());
  auto p = static_cast<Eigen::Index>(r.u64());
  bool complex_kind = r.u8() != 0;
  auto domain = static_cast<HiddenDomain>(r.u8());
  SubspaceConfig cfg;
  cfg.lambda = r.f64();
  cfg.alpha = r.f64();
  cfg.qp_max_iters = r.i32();
  cfg.qp_tolerance = r.f64();
  cfg.penalty_inside = r.u8() != 0;
  if (complex_kind) {
    Eigen::MatrixXcd m(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index i = 0; i < n; ++i) {
        double re = r.f64(), im = r.f64();
        m(i, j) = Complex{re, im};
      }
    return SubspaceFactor::make_complex(std::move(m), cfg);
  }
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = r.f64();
  return SubspaceFactor::make(std::move(m), domain, cfg);
}

}  // namespace mfn
