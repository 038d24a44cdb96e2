#include "mfn/memory_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "mfn/detail/binio.hpp"

namespace mfn {

MemoryTable MemoryTable::from_rows(std::vector<VarKind> kinds,
                                   std::span<const std::vector<Value>> rows) {
  if (rows.empty()) throw ValidationError("memory table needs at least one row");
  MemoryTable t;
  t.rows_ = rows.size();
  t.columns_.reserve(kinds.size());
  for (std::size_t j = 0; j < kinds.size(); ++j) {
    switch (kinds[j]) {
      case VarKind::Real: t.columns_.emplace_back(std::vector<double>{}); break;
      case VarKind::Integer:
        t.columns_.emplace_back(std::vector<std::int64_t>{});
        break;
      case VarKind::Label: t.columns_.emplace_back(std::vector<Label>{}); break;
      case VarKind::Complex:
        t.columns_.emplace_back(std::vector<Complex>{});
        break;
    }
  }
  for (const auto& row : rows) {
    if (row.size() != kinds.size())
      throw ValidationError("row width does not match the column count");
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      if (kind_of(row[j]) != kinds[j])
        throw ValidationError("cell kind does not match its column");
      std::visit(
          [&](auto& col) {
            using T = typename std::decay_t<decltype(col)>::value_type;
            col.push_back(std::get<T>(row[j]));
          },
          t.columns_[j]);
    }
  }
  return t;
}

MemoryTable MemoryTable::evidence(std::span<const Value> observation) {
  std::vector<VarKind> kinds;
  kinds.reserve(observation.size());
  for (const auto& v : observation) kinds.push_back(kind_of(v));
  std::vector<std::vector<Value>> one = {
      std::vector<Value>(observation.begin(), observation.end())};
  return from_rows(std::move(kinds), one);
}

VarKind MemoryTable::column_kind(std::size_t j) const {
  switch (columns_[j].index()) {
    case 0: return VarKind::Real;
    case 1: return VarKind::Integer;
    case 2: return VarKind::Label;
    default: return VarKind::Complex;
  }
}

Value MemoryTable::cell(std::size_t row, std::size_t col) const {
  return std::visit([&](const auto& c) -> Value { return c[row]; },
                    columns_[col]);
}

std::vector<Value> MemoryTable::row(std::size_t index) const {
  if (index >= rows_) throw ValidationError("memory row index out of range");
  std::vector<Value> out;
  out.reserve(cols());
  for (std::size_t j = 0; j < cols(); ++j) out.push_back(cell(index, j));
  return out;
}

bool MemoryTable::row_equals(std::size_t index,
                             std::span<const Value> values) const {
  if (values.size() != cols()) return false;
  for (std::size_t j = 0; j < cols(); ++j)
    if (cell(index, j) != values[j]) return false;
  return true;
}

bool MemoryTable::contains_row(std::span<const Value> vote) const {
  for (std::size_t l = 0; l < rows_; ++l)
    if (row_equals(l, vote)) return true;
  return false;
}

namespace {

/// Adds each row's incremental cost for one column into `acc`.
void accumulate_column(const MemoryTable::Column& column,
                       const Summary& summary, double w, double total,
                       std::vector<double>& acc) {
  if (summary.empty()) return;
  if (const auto* col = std::get_if<std::vector<double>>(&column)) {
    const auto& s = std::get<RealSummary>(summary.payload);
    double coeff = w * (total - w) / total;
    for (std::size_t l = 0; l < col->size(); ++l) {
      double d = (*col)[l] - s.mean;
      acc[l] += coeff * d * d;
    }
  } else if (const auto* coli = std::get_if<std::vector<std::int64_t>>(&column)) {
    const auto& s = std::get<IntSummary>(summary.payload);
    for (std::size_t l = 0; l < coli->size(); ++l)
      acc[l] += w * static_cast<double>(
                        interval_distance((*coli)[l], s.lo, s.hi));
  } else if (const auto* coll = std::get_if<std::vector<Label>>(&column)) {
    const auto& s = std::get<LabelSummary>(summary.payload);
    for (std::size_t l = 0; l < coll->size(); ++l)
      if (!s.in_mode((*coll)[l].id)) acc[l] += w;
  } else {
    const auto& colc = std::get<std::vector<Complex>>(column);
    const auto& s = std::get<ComplexSummary>(summary.payload);
    double coeff = w * (total - w) / total;
    for (std::size_t l = 0; l < colc.size(); ++l)
      acc[l] += coeff * std::norm(colc[l] - s.mean);
  }
}

}  // namespace

TableOpinion table_opinion(const MemoryTable& table,
                           std::span<const Summary> summaries,
                           std::span<const double> weights,
                           std::span<const double> total_weights,
                           const std::vector<Value>* previous_vote) {
  if (table.rows() == 0) throw ValidationError("memory table is empty");
  if (summaries.size() != table.cols() || weights.size() != table.cols() ||
      total_weights.size() != table.cols())
    throw ValidationError("summaries are not aligned with table columns");

  std::vector<double> cost(table.rows(), 0.0);
  for (std::size_t j = 0; j < table.cols(); ++j)
    accumulate_column(table.column(j), summaries[j], weights[j],
                      total_weights[j], cost);

  std::size_t best = 0;
  for (std::size_t l = 1; l < table.rows(); ++l)
    if (cost[l] < cost[best]) best = l;

  // Stickiness: a tying row equal to the previous vote wins.
  if (previous_vote) {
    for (std::size_t l = 0; l < table.rows(); ++l) {
      if (cost[l] == cost[best] && table.row_equals(l, *previous_vote)) {
        best = l;
        break;
      }
    }
  }

  TableOpinion out;
  out.row = best;
  out.opinion = table.row(best);
  out.cost = cost[best];

  // Second-best gap over rows distinct as opinion vectors, not by index.
  double second = kInfiniteCost;
  for (std::size_t l = 0; l < table.rows(); ++l) {
    if (l == best || cost[l] >= second) continue;
    if (!table.row_equals(l, out.opinion)) second = cost[l];
  }
  out.confidence =
      std::isinf(second) ? kInfiniteCost : second - cost[best];
  out.satisfied = previous_vote && table.row_equals(best, *previous_vote);
  return out;
}

std::vector<Value> table_vote_row(const MemoryTable& table,
                                  std::size_t index) {
  return table.row(index);
}

namespace {
constexpr char kTableMagic[8] = {'M', 'F', 'N', 'T', 'B', 'L', '0', '1'};
constexpr std::uint32_t kTableVersion = 1;
}  // namespace

void save_table(const MemoryTable& table, const std::string& path) {
  detail::BinWriter w;
  w.magic(kTableMagic);
  w.u32(kTableVersion);
  w.u64(table.rows());
  w.u64(table.cols());
  for (std::size_t j = 0; j < table.cols(); ++j)
    w.u8(static_cast<std::uint8_t>(table.column_kind(j)));
  for (std::size_t j = 0; j < table.cols(); ++j) {
    std::visit(
        [&](const auto& col) {
          using T = typename std::decay_t<decltype(col)>::value_type;
          for (const auto& cell : col) {
            if constexpr (std::is_same_v<T, double>) {
              w.f64(cell);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
              w.i64(cell);
            } else if constexpr (std::is_same_v<T, Label>) {
              w.i32(cell.id);
            } else {
              w.f64(cell.real());
              w.f64(cell.imag());
            }
          }
        },
        table.column(j));
  }
  w.commit(path);
}

MemoryTable load_table(const std::string& path) {
  detail::BinReader r(path);
  r.expect_magic(kTableMagic);
  if (r.u32() != kTableVersion)
    throw IoError("unsupported table version: " + path);
  std::uint64_t rows = r.u64();
  std::uint64_t cols = r.u64();
  if (rows == 0) throw IoError("table file has no rows: " + path);
  std::vector<VarKind> kinds(cols);
  for (auto& k : kinds) k = static_cast<VarKind>(r.u8());

  std::vector<std::vector<Value>> data(rows, std::vector<Value>(cols));
  for (std::uint64_t j = 0; j < cols; ++j) {
    for (std::uint64_t l = 0; l < rows; ++l) {
      switch (kinds[j]) {
        case VarKind::Real: data[l][j] = r.f64(); break;
        case VarKind::Integer: data[l][j] = r.i64(); break;
        case VarKind::Label: data[l][j] = Label{r.i32()}; break;
        case VarKind::Complex: {
          double re = r.f64(), im = r.f64();
          data[l][j] = Complex{re, im};
          break;
        }
      }
    }
  }
  return MemoryTable::from_rows(std::move(kinds), data);
}

}  // namespace mfn
