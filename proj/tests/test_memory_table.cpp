#include <doctest.h>

#include <cstdio>
#include <vector>

#include "mfn/kernels.hpp"
#include "mfn/memory_table.hpp"
#include "mfn/rng.hpp"

using namespace mfn;

namespace {

MemoryTable two_row_real() {
  std::vector<std::vector<Value>> rows = {{0.0, 0.0}, {1.0, 1.0}};
  return MemoryTable::from_rows({VarKind::Real, VarKind::Real}, rows);
}

}  // namespace

TEST_CASE("from_rows validates shape and cell kinds") {
  std::vector<std::vector<Value>> ragged = {{0.0, 0.0}, {1.0}};
  CHECK_THROWS_AS(
      MemoryTable::from_rows({VarKind::Real, VarKind::Real}, ragged),
      ValidationError);
  std::vector<std::vector<Value>> wrong_kind = {{0.0, std::int64_t{1}}};
  CHECK_THROWS_AS(
      MemoryTable::from_rows({VarKind::Real, VarKind::Real}, wrong_kind),
      ValidationError);
  std::vector<std::vector<Value>> none;
  CHECK_THROWS_AS(MemoryTable::from_rows({VarKind::Real}, none),
                  ValidationError);
}

TEST_CASE("evidence tables have a single observation row") {
  std::vector<Value> obs = {2.5};
  MemoryTable t = MemoryTable::evidence(obs);
  CHECK(t.rows() == 1);
  CHECK(t.cols() == 1);
  CHECK(table_vote_row(t, 0) == obs);
  CHECK_THROWS_AS(table_vote_row(t, 1), ValidationError);
}

TEST_CASE("table_opinion picks the cheapest memory and reports the gap") {
  MemoryTable t = two_row_real();
  std::vector<Summary> summaries = {{RealSummary{1.0, 1.0}},
                                    {RealSummary{1.0, 1.0}}};
  std::vector<double> w = {1.0, 1.0}, total = {2.0, 2.0};
  TableOpinion o = table_opinion(t, summaries, w, total, nullptr);
  CHECK(o.row == 1);
  CHECK(std::get<double>(o.opinion[0]) == 1.0);
  CHECK(o.cost == doctest::Approx(0.0));
  // Row (0,0) costs 2 * (1*1/2) * 1 = 1.
  CHECK(o.confidence == doctest::Approx(1.0));
  CHECK(!o.satisfied);
}

TEST_CASE("table_opinion with no information ties at zero confidence") {
  std::vector<std::vector<Value>> rows = {{0.0}, {0.5}, {1.0}};
  MemoryTable t = MemoryTable::from_rows({VarKind::Real}, rows);
  std::vector<Summary> summaries = {{EmptySummary{}}};
  std::vector<double> w = {1.0}, total = {1.0};
  TableOpinion o = table_opinion(t, summaries, w, total, nullptr);
  CHECK(o.cost == 0.0);
  CHECK(o.confidence == 0.0);
  CHECK(o.row == 0);
}

TEST_CASE("stickiness: a tying previous vote is kept and satisfies") {
  std::vector<std::vector<Value>> rows = {{0.0}, {1.0}};
  MemoryTable t = MemoryTable::from_rows({VarKind::Real}, rows);
  std::vector<Summary> summaries = {{RealSummary{0.5, 1.0}}};
  std::vector<double> w = {1.0}, total = {2.0};
  std::vector<Value> prev = {1.0};
  TableOpinion o = table_opinion(t, summaries, w, total, &prev);
  CHECK(o.row == 1);
  CHECK(o.satisfied);
}

TEST_CASE("duplicate rows never inflate confidence") {
  std::vector<std::vector<Value>> rows = {{1.0}, {1.0}, {2.0}};
  MemoryTable t = MemoryTable::from_rows({VarKind::Real}, rows);
  std::vector<Summary> summaries = {{RealSummary{1.0, 3.0}}};
  std::vector<double> w = {1.0}, total = {4.0};
  TableOpinion o = table_opinion(t, summaries, w, total, nullptr);
  CHECK(std::get<double>(o.opinion[0]) == 1.0);
  // Second-best *distinct* row is (2.0), not the duplicate of the winner.
  CHECK(o.confidence == doctest::Approx((1.0 * 3.0 / 4.0) * 1.0));
}

TEST_CASE("single-row tables are infinitely confident") {
  std::vector<std::vector<Value>> rows = {{3.0, 4.0}};
  MemoryTable t = MemoryTable::from_rows({VarKind::Real, VarKind::Real}, rows);
  std::vector<Summary> s = {{EmptySummary{}}, {EmptySummary{}}};
  std::vector<double> w = {1.0, 1.0}, total = {1.0, 1.0};
  TableOpinion o = table_opinion(t, s, w, total, nullptr);
  CHECK(std::isinf(o.confidence));
}

TEST_CASE("mixed-kind opinion matches the per-row inner-minimization oracle") {
  // Columns: real, integer, label. Costs of different kinds add, so the
  // best row under the reduced costs must match exhaustive evaluation.
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows_n = 2 + rng.below(6);
    std::vector<std::vector<Value>> rows;
    for (std::size_t l = 0; l < rows_n; ++l)
      rows.push_back({rng.uniform(0.0, 1.0),
                      static_cast<std::int64_t>(rng.range(0, 9)),
                      Label{static_cast<std::int32_t>(rng.below(4))}});
    MemoryTable t = MemoryTable::from_rows(
        {VarKind::Real, VarKind::Integer, VarKind::Label}, rows);

    std::vector<VariableSpec> specs = {VariableSpec::real(),
                                       VariableSpec::integer(),
                                       VariableSpec::label(4)};
    std::vector<std::vector<WeightedVote>> external(3);
    int n_ext = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < n_ext; ++k) {
      external[0].push_back({rng.uniform(0.0, 1.0), 2.0});
      external[1].push_back({static_cast<std::int64_t>(rng.range(0, 9)), 1.0});
      external[2].push_back({Label{static_cast<std::int32_t>(rng.below(4))}, 3.0});
    }
    std::vector<double> w = {2.0, 1.0, 3.0};
    std::vector<Summary> summaries;
    std::vector<double> total;
    for (int j = 0; j < 3; ++j) {
      summaries.push_back(summarize(specs[j], external[j]));
      double ext = 0.0;
      for (const auto& v : external[j]) ext += v.weight;
      total.push_back(ext + w[j]);
    }

    TableOpinion got = table_opinion(t, summaries, w, total, nullptr);

    double best_oracle = kInfiniteCost;
    std::size_t best_row = 0;
    for (std::size_t l = 0; l < rows_n; ++l) {
      double c = 0.0;
      for (int j = 0; j < 3; ++j)
        c += brute_force_inner_min(specs[j], rows[l][j], w[j], external[j]);
      if (c < best_oracle) {
        best_oracle = c;
        best_row = l;
      }
    }
    // Same minimizer up to exact cost ties.
    double got_oracle = 0.0;
    for (int j = 0; j < 3; ++j)
      got_oracle +=
          brute_force_inner_min(specs[j], rows[got.row][j], w[j], external[j]);
    CHECK(got_oracle == doctest::Approx(best_oracle).epsilon(1e-12));
    (void)best_row;
  }
}

TEST_CASE("table payload round-trips bit-exactly and detects corruption") {
  Rng rng(5);
  std::vector<std::vector<Value>> rows;
  for (int l = 0; l < 7; ++l)
    rows.push_back({rng.uniform(-2.0, 2.0),
                    static_cast<std::int64_t>(rng.range(-100, 100)),
                    Label{static_cast<std::int32_t>(rng.below(9))},
                    Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)}});
  MemoryTable t = MemoryTable::from_rows(
      {VarKind::Real, VarKind::Integer, VarKind::Label, VarKind::Complex},
      rows);
  std::string path = "test_table_payload.tbl";
  save_table(t, path);
  MemoryTable back = load_table(path);
  REQUIRE(back.rows() == t.rows());
  REQUIRE(back.cols() == t.cols());
  for (std::size_t l = 0; l < t.rows(); ++l)
    CHECK(back.row(l) == t.row(l));

  // Flip one byte in the middle: the checksum must reject the file.
  {
    FILE* f = std::fopen(path.c_str(), "r+b");
    REQUIRE(f != nullptr);
    std::fseek(f, 40, SEEK_SET);
    int c = std::fgetc(f);
    std::fseek(f, 40, SEEK_SET);
    std::fputc(c ^ 0xff, f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_table(path), IoError);
  std::remove(path.c_str());
}
