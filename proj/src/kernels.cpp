#include "mfn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace mfn {
namespace {

void require_equal_weights(std::span<const WeightedVote> votes) {
  for (const auto& v : votes) {
    if (v.weight != votes.front().weight)
      throw ValidationError(
          "integer/label variables require equal weights on all edges");
  }
}

void require_positive_weights(std::span<const WeightedVote> votes) {
  for (const auto& v : votes) {
    if (!(v.weight > 0.0))
      throw ValidationError("vote weights must be positive");
  }
}

/// Median interval of an equal-weight integer vote multiset: the integers z
/// with at least ceil(n/2) votes <= z and at least ceil(n/2) votes >= z.
IntSummary median_interval(std::span<const WeightedVote> votes) {
  std::vector<std::int64_t> vals;
  vals.reserve(votes.size());
  for (const auto& v : votes) vals.push_back(std::get<std::int64_t>(v.value));
  std::sort(vals.begin(), vals.end());
  const std::size_t n = vals.size();
  if (n % 2 == 1) {
    return {vals[n / 2], vals[n / 2]};
  }
  return {vals[n / 2 - 1], vals[n / 2]};
}

LabelSummary mode_set(const VariableSpec& var,
                      std::span<const WeightedVote> votes) {
  std::vector<std::uint32_t> counts(
      static_cast<std::size_t>(var.label_domain), 0);
  for (const auto& v : votes) {
    auto id = std::get<Label>(v.value).id;
    if (id < 0 || id >= var.label_domain)
      throw ValidationError("label vote outside the variable's domain");
    ++counts[static_cast<std::size_t>(id)];
  }
  std::uint32_t best = *std::max_element(counts.begin(), counts.end());
  LabelSummary out;
  out.mode_mask.resize(counts.size(), 0);
  for (std::size_t k = 0; k < counts.size(); ++k)
    out.mode_mask[k] = (counts[k] == best) ? 1 : 0;
  return out;
}

}  // namespace

Summary summarize(const VariableSpec& var,
                  std::span<const WeightedVote> votes) {
  if (votes.empty()) return {EmptySummary{}};
  require_positive_weights(votes);
  switch (var.kind) {
    case VarKind::Real: {
      double num = 0.0, den = 0.0;
      for (const auto& v : votes) {
        num += v.weight * std::get<double>(v.value);
        den += v.weight;
      }
      return {RealSummary{num / den, den}};
    }
    case VarKind::Complex: {
      Complex num{0.0, 0.0};
      double den = 0.0;
      for (const auto& v : votes) {
        num += v.weight * std::get<Complex>(v.value);
        den += v.weight;
      }
      return {ComplexSummary{num / den, den}};
    }
    case VarKind::Integer:
      require_equal_weights(votes);
      return {median_interval(votes)};
    case VarKind::Label:
      require_equal_weights(votes);
      return {mode_set(var, votes)};
  }
  throw ValidationError("unreachable variable kind");
}

std::int64_t interval_distance(std::int64_t z, std::int64_t lo,
                               std::int64_t hi) {
  if (lo > hi) throw ValidationError("interval_distance requires lo <= hi");
  if (z > hi) return z - hi;
  if (z < lo) return lo - z;
  return 0;
}

double incremental_cost(const Value& candidate, const Summary& summary,
                        double w, double total_weight) {
  if (summary.empty()) return 0.0;
  if (total_weight < w)
    throw ValidationError("total weight smaller than the edge weight");
  if (std::holds_alternative<RealSummary>(summary.payload)) {
    const auto& s = std::get<RealSummary>(summary.payload);
    double d = std::get<double>(candidate) - s.mean;
    return (w * (total_weight - w) / total_weight) * d * d;
  }
  if (std::holds_alternative<ComplexSummary>(summary.payload)) {
    const auto& s = std::get<ComplexSummary>(summary.payload);
    double d = std::abs(std::get<Complex>(candidate) - s.mean);
    return (w * (total_weight - w) / total_weight) * d * d;
  }
  if (std::holds_alternative<IntSummary>(summary.payload)) {
    const auto& s = std::get<IntSummary>(summary.payload);
    return w * static_cast<double>(interval_distance(
                   std::get<std::int64_t>(candidate), s.lo, s.hi));
  }
  const auto& s = std::get<LabelSummary>(summary.payload);
  return s.in_mode(std::get<Label>(candidate).id) ? 0.0 : w;
}

Value local_minimizer(const VariableSpec& var,
                      std::span<const WeightedVote> votes) {
  if (votes.empty())
    throw ValidationError("local_minimizer requires at least one vote");
  Summary s = summarize(var, votes);
  switch (var.kind) {
    case VarKind::Real:
      return std::get<RealSummary>(s.payload).mean;
    case VarKind::Complex:
      return std::get<ComplexSummary>(s.payload).mean;
    case VarKind::Integer:
      return std::get<IntSummary>(s.payload).lo;
    case VarKind::Label: {
      const auto& mask = std::get<LabelSummary>(s.payload).mode_mask;
      for (std::size_t k = 0; k < mask.size(); ++k)
        if (mask[k]) return Label{static_cast<std::int32_t>(k)};
      throw ValidationError("mode set unexpectedly empty");
    }
  }
  throw ValidationError("unreachable variable kind");
}

namespace {

double weighted_cost_at_real(double x, double cand, double w,
                             std::span<const WeightedVote> votes) {
  double c = w * (x - cand) * (x - cand);
  for (const auto& v : votes) {
    double d = x - std::get<double>(v.value);
    c += v.weight * d * d;
  }
  return c;
}

}  // namespace

double brute_force_inner_min(const VariableSpec& var, const Value& candidate,
                             double w, std::span<const WeightedVote> votes) {
  switch (var.kind) {
    case VarKind::Real: {
      // Quadratic in x: evaluate at the stationary point.
      double cand = std::get<double>(candidate);
      double num = w * cand, den = w;
      for (const auto& v : votes) {
        num += v.weight * std::get<double>(v.value);
        den += v.weight;
      }
      return weighted_cost_at_real(num / den, cand, w, votes);
    }
    case VarKind::Complex: {
      Complex cand = std::get<Complex>(candidate);
      Complex num = w * cand;
      double den = w;
      for (const auto& v : votes) {
        num += v.weight * std::get<Complex>(v.value);
        den += v.weight;
      }
      Complex x = num / den;
      double c = w * std::norm(x - cand);
      for (const auto& v : votes)
        c += v.weight * std::norm(x - std::get<Complex>(v.value));
      return c;
    }
    case VarKind::Integer: {
      // Exhaustive over the hull of votes and candidate.
      std::int64_t cand = std::get<std::int64_t>(candidate);
      std::int64_t lo = cand, hi = cand;
      for (const auto& v : votes) {
        lo = std::min(lo, std::get<std::int64_t>(v.value));
        hi = std::max(hi, std::get<std::int64_t>(v.value));
      }
      double best = kInfiniteCost;
      for (std::int64_t x = lo; x <= hi; ++x) {
        double c = w * static_cast<double>(std::llabs(x - cand));
        for (const auto& v : votes)
          c += v.weight * static_cast<double>(
                              std::llabs(x - std::get<std::int64_t>(v.value)));
        best = std::min(best, c);
      }
      return best;
    }
    case VarKind::Label: {
      std::int32_t cand = std::get<Label>(candidate).id;
      double best = kInfiniteCost;
      for (std::int32_t x = 0; x < var.label_domain; ++x) {
        double c = (x != cand) ? w : 0.0;
        for (const auto& v : votes)
          if (x != std::get<Label>(v.value).id) c += v.weight;
        best = std::min(best, c);
      }
      return best;
    }
  }
  throw ValidationError("unreachable variable kind");
}

}  // namespace mfn
