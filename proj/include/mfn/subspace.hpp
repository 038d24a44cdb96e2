#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfn/kernels.hpp"
#include "mfn/types.hpp"

namespace mfn {

enum class HiddenDomain : std::uint8_t { Reals, NonnegReals, Complex };

struct SubspaceConfig {
  double lambda = 1.0;       // confidence trade-off
  double alpha = 1e-4;       // satisfaction threshold on ||o - v||^2
  int qp_max_iters = 500;
  double qp_tolerance = 1e-9;
  /// Confidence low-vote penalty: averaged together with the mismatch term
  /// (true) or added to the average unaveraged (false).
  bool penalty_inside = true;
};

/// Default alpha scaled by the factor's visible dimension.
inline double default_alpha(std::size_t n) {
  return 1e-4 * static_cast<double>(n);
}

/// Factor payload constraining votes to the column space of an n x p matrix
/// (optionally intersected with the nonnegative cone).
struct SubspaceFactor {
  std::variant<Eigen::MatrixXd, Eigen::MatrixXcd> basis;
  HiddenDomain domain = HiddenDomain::Reals;
  SubspaceConfig config;

  std::size_t visible_dim() const {
    return std::visit([](const auto& m) { return std::size_t(m.rows()); },
                      basis);
  }
  std::size_t hidden_dim() const {
    return std::visit([](const auto& m) { return std::size_t(m.cols()); },
                      basis);
  }
  bool is_complex() const {
    return std::holds_alternative<Eigen::MatrixXcd>(basis);
  }

  static SubspaceFactor make(Eigen::MatrixXd w, HiddenDomain domain,
                             SubspaceConfig cfg = {});
  static SubspaceFactor make_complex(Eigen::MatrixXcd w,
                                     SubspaceConfig cfg = {});
};

struct SubspaceOpinion {
  std::vector<Value> opinion;                 // = W z, length n
  std::variant<Eigen::VectorXd, Eigen::VectorXcd> hidden;  // z
  /// Objective value per projected-gradient iterate (nonnegative path only).
  std::vector<double> qp_trace;
};

/// Per-variable inputs the engine hands a subspace factor.
struct SubspaceInputs {
  std::vector<Summary> summaries;
  std::vector<double> weights;         // w(i,a)
  std::vector<double> total_weights;   // W_i counting the factor itself
  std::vector<std::uint32_t> external_counts;  // |S(i,a)|
  std::vector<std::uint32_t> voter_counts;     // |N(i)\A| before the factor votes
};

/// Solve the factor's local quadratic program: weighted least squares for
/// Reals/Complex, projected gradient descent on the nonnegative cone.
SubspaceOpinion subspace_opinion(const SubspaceFactor& factor,
                                 const SubspaceInputs& in);

/// Confidence: average over neighbors of the lambda-weighted opinion/message
/// mismatch minus the few-votes penalty.
double subspace_confidence(const SubspaceFactor& factor,
                           const SubspaceOpinion& opinion,
                           const SubspaceInputs& in);

/// True iff ||opinion - vote||_2^2 <= alpha (inclusive).
bool subspace_satisfied(std::span<const Value> opinion,
                        std::span<const Value> vote, double alpha);

/// Squared L2 distance of the vote to the subspace (selection feasibility).
double subspace_residual(const SubspaceFactor& factor,
                         std::span<const Value> vote);

/// Objective of the local program at hidden point z (real path); exposed for
/// verification against exhaustive search.
double subspace_objective(const SubspaceFactor& factor,
                          const SubspaceInputs& in, const Eigen::VectorXd& z);

void save_subspace(const SubspaceFactor& factor, const std::string& path);
SubspaceFactor load_subspace(const std::string& path);

}  // namespace mfn
