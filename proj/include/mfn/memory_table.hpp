#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfn/kernels.hpp"
#include "mfn/types.hpp"

namespace mfn {

/// Exemplar database of a memory factor: L rows over the factor's neighbor
/// variables, stored column-typed so opinion scans run on flat arrays.
class MemoryTable {
 public:
  using Column = std::variant<std::vector<double>, std::vector<std::int64_t>,
                              std::vector<Label>, std::vector<Complex>>;

  MemoryTable() = default;

  /// Build from row vectors; every cell must respect its column's kind.
  static MemoryTable from_rows(std::vector<VarKind> kinds,
                               std::span<const std::vector<Value>> rows);

  /// Single-observation table used for evidence factors.
  static MemoryTable evidence(std::span<const Value> observation);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }
  VarKind column_kind(std::size_t j) const;
  Value cell(std::size_t row, std::size_t col) const;
  std::vector<Value> row(std::size_t index) const;
  const Column& column(std::size_t j) const { return columns_[j]; }

  bool row_equals(std::size_t index, std::span<const Value> values) const;
  /// True iff some stored row equals `vote` exactly (zero selection cost).
  bool contains_row(std::span<const Value> vote) const;

 private:
  std::size_t rows_ = 0;
  std::vector<Column> columns_;
};

struct TableOpinion {
  std::size_t row = 0;
  std::vector<Value> opinion;
  double confidence = 0.0;  // best-vs-second-best cost gap
  double cost = 0.0;
  bool satisfied = false;
};

/// Scan every memory for the lowest total incremental cost. Keeps the
/// previous vote on a tie, and reports the gap to the cheapest *distinct*
/// opinion vector as confidence (+inf when only one distinct row exists).
TableOpinion table_opinion(const MemoryTable& table,
                           std::span<const Summary> summaries,
                           std::span<const double> weights,
                           std::span<const double> total_weights,
                           const std::vector<Value>* previous_vote);

/// The row itself is the factor's full vote vector.
std::vector<Value> table_vote_row(const MemoryTable& table, std::size_t index);

/// Versioned binary payload file, checksummed; see io module for the sidecar.
void save_table(const MemoryTable& table, const std::string& path);
MemoryTable load_table(const std::string& path);

}  // namespace mfn
