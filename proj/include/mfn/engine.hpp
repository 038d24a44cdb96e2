#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mfn/network.hpp"
#include "mfn/rng.hpp"
#include "mfn/types.hpp"

namespace mfn {

enum class ScheduleMode : std::uint8_t { Serial, Simultaneous };

struct Schedule {
  ScheduleMode mode = ScheduleMode::Serial;
  /// Simultaneous mode votes the ceil(fraction * |D|) most confident
  /// dissatisfied factors each round (at least one).
  double fraction = 0.1;
  bool rollback_enabled = true;
  /// 0 means 10 * number of factors.
  std::uint64_t max_iterations = 0;
  std::uint64_t seed = 0;
  /// Worker threads for the opinion phase. Results merge in ascending
  /// factor order, so the count never changes the outcome.
  int threads = 1;
  bool record_trace = false;
  /// Diagnostic: each iteration, recompute every factor the algorithm has
  /// ever scheduled instead of only the latest reacting set. Redundant by
  /// construction, so it must not change the trajectory.
  bool recompute_all = false;
};

struct RunStats {
  std::uint64_t iterations = 0;
  std::uint64_t opinion_updates = 0;
  std::uint64_t votes_cast = 0;
  std::uint64_t rollbacks = 0;
};

struct TraceRow {
  std::uint64_t iteration = 0;
  std::size_t abstain_count = 0;
  double active_cost = 0.0;
  std::uint64_t votes_cast = 0;
  bool rolled_back = false;
};

enum class RunStatus : std::uint8_t { Converged, NonConverged };

struct RunResult {
  RunStatus status = RunStatus::Converged;
  Assignment assignment{0};
  CostTuple final_cost;
  RunStats stats;
  std::vector<TraceRow> trace;
  VoteTable votes;               // final votes, reusable as a warm start
  std::vector<char> abstaining;  // final abstaining mask
};

/// Bookkeeping state: votes and opinions per factor plus the four factor
/// sets (abstaining, vote-changing, reacting, dissatisfied).
struct VoteState {
  VoteTable votes;
  VoteTable opinions;
  std::vector<double> confidence;
  std::vector<char> abstaining;
  std::vector<char> dissatisfied;
  std::vector<FactorId> vote_changing;
  std::vector<FactorId> reacting;
  std::vector<char> ever_reacting;
  std::size_t abstain_count = 0;
  std::uint64_t iteration = 0;
  RunStats stats;
};

struct OpinionOutcome {
  std::vector<Value> opinion;
  double confidence = 0.0;
  bool satisfied = false;
};

/// Runs proactive message passing over an immutable network: factors form
/// opinions from neighbor summaries, and the most confident dissatisfied
/// ones vote each round until no factor wants to change its votes.
class Engine {
 public:
  Engine(const Network& net, Schedule schedule);

  /// Seeds the vote-changing set with the evidence factors (voting their
  /// observations). `initial_votes`, when given, warm-starts factors with
  /// prior votes; `seed_voters` substitutes for evidence in networks that
  /// have none.
  void init(const VoteTable* initial_votes = nullptr,
            const std::vector<FactorId>* seed_voters = nullptr);

  /// One ballot round. Requires a nonempty vote-changing set; returns false
  /// once it empties (no factor cast a vote).
  bool step();

  RunResult run(const VoteTable* initial_votes = nullptr,
                const std::vector<FactorId>* seed_voters = nullptr);

  /// Opinion, confidence, and satisfaction for one factor given the current
  /// votes of everyone else.
  OpinionOutcome compute_opinion(FactorId a) const;

  const VoteState& state() const { return state_; }
  CostTuple cost_tuple() const;

 private:
  void cast_votes(const std::vector<FactorId>& voters);
  void rebuild_reacting();
  std::vector<FactorId> select_voters();
  double mismatch_only_cost() const;

  const Network& net_;
  Schedule schedule_;
  VoteState state_;
  mutable Rng rng_;
};

/// Writes the per-iteration trace as CSV rows
/// `iter,abstain_count,active_cost,votes_cast,rollback`.
void write_trace_csv(const std::vector<TraceRow>& trace,
                     const std::string& path);

}  // namespace mfn
