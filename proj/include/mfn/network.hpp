#pragma once

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfn/memory_table.hpp"
#include "mfn/subspace.hpp"
#include "mfn/types.hpp"

namespace mfn {

enum class FactorClass : std::uint8_t { Memory, Evidence };

using PayloadPtr = std::variant<std::shared_ptr<const MemoryTable>,
                                std::shared_ptr<const SubspaceFactor>>;

struct VariableNode {
  VarId id = 0;
  VariableSpec spec;
};

struct FactorNode {
  FactorId id = 0;
  FactorClass cls = FactorClass::Memory;
  PayloadPtr payload;
  std::vector<VarId> neighbors;
  std::vector<double> weights;  // aligned with neighbors

  std::size_t degree() const { return neighbors.size(); }
  bool is_table() const {
    return std::holds_alternative<std::shared_ptr<const MemoryTable>>(payload);
  }
  const MemoryTable& table() const {
    return *std::get<std::shared_ptr<const MemoryTable>>(payload);
  }
  const SubspaceFactor& subspace() const {
    return *std::get<std::shared_ptr<const SubspaceFactor>>(payload);
  }
};

/// Edge seen from the variable side: which factor, where this variable sits
/// in that factor's neighbor list, and the edge weight.
struct VarEdge {
  FactorId factor = 0;
  std::uint32_t pos = 0;
  double weight = 0.0;
};

/// Immutable bipartite graph of variables and factors. Build once through
/// NetworkBuilder; safe to share across threads afterwards.
class Network {
 public:
  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_factors() const { return factors_.size(); }
  const VariableNode& variable(VarId i) const { return variables_[i]; }
  const FactorNode& factor(FactorId a) const { return factors_[a]; }
  std::span<const VarEdge> edges_of(VarId i) const { return adjacency_[i]; }
  const std::vector<FactorNode>& factors() const { return factors_; }

  std::vector<FactorId> evidence_factors() const;

 private:
  friend class NetworkBuilder;
  std::vector<VariableNode> variables_;
  std::vector<FactorNode> factors_;
  std::vector<std::vector<VarEdge>> adjacency_;
};

class NetworkBuilder {
 public:
  VarId add_variable(VariableSpec spec);
  FactorId add_memory_factor(PayloadPtr payload, std::vector<VarId> neighbors,
                             std::vector<double> weights);
  FactorId add_memory_factor(PayloadPtr payload, std::vector<VarId> neighbors,
                             double uniform_weight);
  /// Evidence: a single-variable factor whose payload is a one-row table
  /// holding the observation.
  FactorId add_evidence(VarId variable, Value observation, double weight);

  /// Validates alphabets, weight equality on integer/label variables,
  /// payload arity/kind agreement, and adjacency consistency.
  Network build() &&;

 private:
  std::vector<VariableNode> variables_;
  std::vector<FactorNode> factors_;
};

/// Votes per factor, aligned with each factor's neighbor list. A factor with
/// an empty vector has not voted (it abstains).
using VoteTable = std::vector<std::vector<Value>>;

/// Full-network cost: every factor must carry a complete vote vector.
/// Returns +inf when a vote vector violates its factor's selection
/// constraint; otherwise sums the weighted mismatch terms.
double global_cost(const Network& net, const VoteTable& votes,
                   const Assignment& x);

/// Cost restricted to non-abstaining factors.
double active_cost(const Network& net, const VoteTable& votes,
                   const Assignment& x, std::span<const char> abstaining);

/// Per-variable optimum given the current non-abstaining votes; variables
/// with no incident voter come back disengaged.
Assignment optimal_assignment(const Network& net, const VoteTable& votes,
                              std::span<const char> abstaining);

/// Versioned JSON description of the graph; payloads are written next to it
/// as checksummed binary files referenced by name.
void save_network(const Network& net, const std::string& json_path,
                  const std::string& payload_dir);
Network load_network(const std::string& json_path,
                     const std::string& payload_dir);

}  // namespace mfn
