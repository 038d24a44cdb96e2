#pragma once

#include <algorithm>
#include <vector>

#include "mfn/network.hpp"
#include "mfn/rng.hpp"

namespace mfn::testsupport {

/// Seeded mixed-kernel network: random real/integer/label variables, random
/// table factors, and evidence on a few variables. Weight equality on
/// integer/label variables is honored by drawing one weight per variable.
inline Network random_network(Rng& rng, std::size_t max_vars = 20,
                              std::size_t max_factors = 10) {
  NetworkBuilder b;
  const std::size_t n_vars = 2 + rng.below(max_vars - 1);
  std::vector<VariableSpec> specs;
  std::vector<double> var_weight(n_vars, 1.0);
  for (std::size_t i = 0; i < n_vars; ++i) {
    switch (rng.below(3)) {
      case 0: specs.push_back(VariableSpec::real()); break;
      case 1: specs.push_back(VariableSpec::integer_ranged(-5, 10)); break;
      default:
        specs.push_back(
            VariableSpec::label(2 + static_cast<std::int32_t>(rng.below(5))));
    }
    var_weight[i] = rng.uniform(0.5, 2.0);
    b.add_variable(specs.back());
  }

  auto random_value = [&](const VariableSpec& s) -> Value {
    switch (s.kind) {
      case VarKind::Real: return rng.uniform(-2.0, 2.0);
      case VarKind::Integer: return rng.range(-5, 10);
      case VarKind::Label:
        return Label{static_cast<std::int32_t>(rng.below(s.label_domain))};
      default: return Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    }
  };

  const std::size_t n_factors = 1 + rng.below(max_factors);
  for (std::size_t a = 0; a < n_factors; ++a) {
    std::size_t degree = 1 + rng.below(std::min<std::size_t>(5, n_vars));
    std::vector<VarId> all(n_vars);
    for (std::size_t i = 0; i < n_vars; ++i) all[i] = static_cast<VarId>(i);
    rng.shuffle(all);
    std::vector<VarId> neighbors(all.begin(),
                                 all.begin() + static_cast<long>(degree));
    std::sort(neighbors.begin(), neighbors.end());

    std::vector<VarKind> kinds;
    std::vector<double> weights;
    for (VarId i : neighbors) {
      kinds.push_back(specs[i].kind);
      weights.push_back(specs[i].kind == VarKind::Real
                            ? rng.uniform(0.5, 2.0)
                            : var_weight[i]);
    }
    std::size_t rows_n = 1 + rng.below(6);
    std::vector<std::vector<Value>> rows(rows_n);
    for (auto& row : rows)
      for (VarId i : neighbors) row.push_back(random_value(specs[i]));
    auto table =
        std::make_shared<const MemoryTable>(MemoryTable::from_rows(kinds, rows));
    b.add_memory_factor(PayloadPtr{table}, neighbors, weights);
  }

  std::size_t n_evidence = 1 + rng.below(3);
  std::vector<VarId> targets(n_vars);
  for (std::size_t i = 0; i < n_vars; ++i) targets[i] = static_cast<VarId>(i);
  rng.shuffle(targets);
  for (std::size_t k = 0; k < std::min(n_evidence, n_vars); ++k) {
    VarId i = targets[k];
    double w =
        specs[i].kind == VarKind::Real ? rng.uniform(0.5, 3.0) : var_weight[i];
    b.add_evidence(i, random_value(specs[i]), w);
  }
  return std::move(b).build();
}

/// True iff every factor is reachable from some evidence factor through the
/// bipartite adjacency.
inline bool connected_to_evidence(const Network& net) {
  std::vector<char> factor_seen(net.num_factors(), 0);
  std::vector<char> var_seen(net.num_variables(), 0);
  std::vector<FactorId> queue = net.evidence_factors();
  for (FactorId a : queue) factor_seen[a] = 1;
  while (!queue.empty()) {
    FactorId a = queue.back();
    queue.pop_back();
    for (VarId i : net.factor(a).neighbors) {
      if (var_seen[i]) continue;
      var_seen[i] = 1;
      for (const auto& e : net.edges_of(i)) {
        if (!factor_seen[e.factor]) {
          factor_seen[e.factor] = 1;
          queue.push_back(e.factor);
        }
      }
    }
  }
  return std::all_of(factor_seen.begin(), factor_seen.end(),
                     [](char c) { return c != 0; });
}

}  // namespace mfn::testsupport
