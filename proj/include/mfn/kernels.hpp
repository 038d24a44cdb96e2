#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "mfn/types.hpp"

namespace mfn {

/// A weighted vote on one variable.
struct WeightedVote {
  Value value;
  double weight = 1.0;
};

/// No external voters: the edge contributes no incremental cost.
struct EmptySummary {};

/// Real kernel message: weighted mean of external votes and their total
/// weight.
struct RealSummary {
  double mean = 0.0;
  double weight = 0.0;
};

/// Complex kernel message; the quadratic-cost algebra carries over verbatim
/// with |.|^2 as the mismatch.
struct ComplexSummary {
  Complex mean{0.0, 0.0};
  double weight = 0.0;
};

/// Integer kernel message: the median interval [lo, hi] of the external
/// votes (equal weights required).
struct IntSummary {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

/// Label kernel message: the set of most frequent external votes.
struct LabelSummary {
  std::vector<std::uint8_t> mode_mask;  // size = label domain
  bool in_mode(std::int32_t label) const {
    return label >= 0 && label < static_cast<std::int32_t>(mode_mask.size()) &&
           mode_mask[static_cast<std::size_t>(label)] != 0;
  }
};

/// Sufficient statistic a variable sends to a factor about the votes of the
/// rest of the network.
struct Summary {
  std::variant<EmptySummary, RealSummary, ComplexSummary, IntSummary,
               LabelSummary>
      payload;

  bool empty() const {
    return std::holds_alternative<EmptySummary>(payload);
  }
};

/// Build the message for one variable from the votes of its external
/// non-abstaining neighbors. Integer and label variables require all weights
/// equal.
Summary summarize(const VariableSpec& var, std::span<const WeightedVote> votes);

/// Distance from integer z to the interval [lo, hi].
std::int64_t interval_distance(std::int64_t z, std::int64_t lo, std::int64_t hi);

/// Incremental cost of a factor voting `candidate` on a variable whose
/// external votes are condensed in `summary`. `w` is the factor's edge
/// weight, `total_weight` the full non-abstaining weight on the variable
/// counting the factor itself.
double incremental_cost(const Value& candidate, const Summary& summary,
                        double w, double total_weight);

/// Minimizer of the weighted mismatch sum over a fixed vote set: weighted
/// mean (real/complex), lower end of the median interval (integer), or
/// smallest mode element (label). Errors on an empty vote set.
Value local_minimizer(const VariableSpec& var,
                      std::span<const WeightedVote> votes);

/// Unreduced inner minimization: min over x of the candidate's mismatch plus
/// all external mismatches. Used as the independent reference for
/// incremental_cost; the two differ by a candidate-independent constant.
double brute_force_inner_min(const VariableSpec& var, const Value& candidate,
                             double w, std::span<const WeightedVote> votes);

}  // namespace mfn
