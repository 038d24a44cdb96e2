#pragma once

#include <complex>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mfn {

using VarId = std::uint32_t;
using FactorId = std::uint32_t;

/// Error raised on malformed inputs, broken invariants, or bad configs.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Error raised on file-format or filesystem problems.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Error raised when inference hits its iteration cap before settling.
struct NonConvergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class VarKind : std::uint8_t { Real, Integer, Label, Complex };

using Complex = std::complex<double>;

/// A categorical value drawn from a finite label domain [0, K).
struct Label {
  std::int32_t id = 0;
  friend bool operator==(Label, Label) = default;
  friend auto operator<=>(Label, Label) = default;
};

/// One value in a variable's alphabet.
using Value = std::variant<double, std::int64_t, Label, Complex>;

inline VarKind kind_of(const Value& v) {
  switch (v.index()) {
    case 0: return VarKind::Real;
    case 1: return VarKind::Integer;
    case 2: return VarKind::Label;
    default: return VarKind::Complex;
  }
}

/// Alphabet description of a single variable.
struct VariableSpec {
  VarKind kind = VarKind::Real;
  /// Real only: clamp applied when serializing image output, never during
  /// optimization.
  std::optional<double> upper;
  /// Integer only: inclusive value range, validated at ingest.
  std::optional<std::pair<std::int64_t, std::int64_t>> range;
  /// Label only: domain size K >= 2.
  std::int32_t label_domain = 0;

  static VariableSpec real() { return {VarKind::Real, {}, {}, 0}; }
  static VariableSpec real_clamped(double hi) {
    return {VarKind::Real, hi, {}, 0};
  }
  static VariableSpec integer() { return {VarKind::Integer, {}, {}, 0}; }
  static VariableSpec integer_ranged(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw ValidationError("integer range is empty");
    return {VarKind::Integer, {}, std::pair{lo, hi}, 0};
  }
  static VariableSpec label(std::int32_t domain) {
    if (domain < 2) throw ValidationError("label domain must have K >= 2");
    return {VarKind::Label, {}, {}, domain};
  }
  static VariableSpec complex_val() { return {VarKind::Complex, {}, {}, 0}; }

  bool admits(const Value& v) const {
    if (kind_of(v) != kind) return false;
    if (kind == VarKind::Integer && range) {
      auto z = std::get<std::int64_t>(v);
      return z >= range->first && z <= range->second;
    }
    if (kind == VarKind::Label) {
      auto l = std::get<Label>(v).id;
      return l >= 0 && l < label_domain;
    }
    return true;
  }
};

/// Map from variable id to its inferred value; disengaged entries mean the
/// variable ended outside the output set.
struct Assignment {
  std::vector<std::optional<Value>> values;

  explicit Assignment(std::size_t n = 0) : values(n) {}
  std::size_t size() const { return values.size(); }
  bool known(VarId i) const { return values[i].has_value(); }
  const Value& at(VarId i) const {
    if (!values[i]) throw ValidationError("variable has no assigned value");
    return *values[i];
  }
};

/// Lexicographically ordered pair (abstainer count, active-set cost); the
/// quantity inference drives downward.
struct CostTuple {
  std::size_t abstain_count = 0;
  double active_cost = 0.0;

  friend bool operator==(const CostTuple& a, const CostTuple& b) {
    return a.abstain_count == b.abstain_count && a.active_cost == b.active_cost;
  }
  friend bool operator<(const CostTuple& a, const CostTuple& b) {
    if (a.abstain_count != b.abstain_count)
      return a.abstain_count < b.abstain_count;
    return a.active_cost < b.active_cost;
  }
  friend bool operator<=(const CostTuple& a, const CostTuple& b) {
    return a < b || a == b;
  }
  friend bool operator>(const CostTuple& a, const CostTuple& b) {
    return b < a;
  }
};

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

}  // namespace mfn
