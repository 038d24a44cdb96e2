#include "mfn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

namespace mfn {

Engine::Engine(const Network& net, Schedule schedule)
    : net_(net), schedule_(schedule), rng_(schedule.seed) {
  if (schedule_.mode == ScheduleMode::Simultaneous &&
      !(schedule_.fraction > 0.0 && schedule_.fraction <= 1.0))
    throw ValidationError("simultaneous fraction must lie in (0, 1]");
  if (schedule_.max_iterations == 0)
    schedule_.max_iterations = 10 * std::max<std::uint64_t>(net.num_factors(), 1);
  if (schedule_.threads < 1) schedule_.threads = 1;
}

void Engine::init(const VoteTable* initial_votes,
                  const std::vector<FactorId>* seed_voters) {
  const std::size_t m = net_.num_factors();
  state_ = VoteState{};
  state_.votes.assign(m, {});
  state_.opinions.assign(m, {});
  state_.confidence.assign(m, 0.0);
  state_.abstaining.assign(m, 1);
  state_.dissatisfied.assign(m, 0);
  state_.ever_reacting.assign(m, 0);
  state_.abstain_count = m;

  if (initial_votes) {
    if (initial_votes->size() != m)
      throw ValidationError("initial votes do not match the network");
    for (FactorId a = 0; a < m; ++a) {
      const auto& v = (*initial_votes)[a];
      if (v.empty()) continue;
      if (v.size() != net_.factor(a).degree())
        throw ValidationError("initial vote vector has the wrong arity");
      state_.votes[a] = v;
      state_.abstaining[a] = 0;
      --state_.abstain_count;
    }
  }

  std::vector<FactorId> voters = net_.evidence_factors();
  for (FactorId e : voters) state_.votes[e] = net_.factor(e).table().row(0);
  if (seed_voters) {
    for (FactorId a : *seed_voters) {
      if (a >= m) throw ValidationError("seed voter id out of range");
      if (std::find(voters.begin(), voters.end(), a) != voters.end()) continue;
      voters.push_back(a);
      state_.votes[a] = compute_opinion(a).opinion;
    }
    std::sort(voters.begin(), voters.end());
  }
  if (voters.empty())
    throw ValidationError(
        "network has no evidence factors; pass seed voters to start");

  for (FactorId a : voters) {
    if (state_.abstaining[a]) {
      state_.abstaining[a] = 0;
      --state_.abstain_count;
    }
    ++state_.stats.votes_cast;
  }
  state_.vote_changing = std::move(voters);
  rebuild_reacting();
}

OpinionOutcome Engine::compute_opinion(FactorId a) const {
  const FactorNode& f = net_.factor(a);
  const std::size_t n = f.degree();

  SubspaceInputs in;
  in.summaries.reserve(n);
  in.weights = f.weights;
  in.total_weights.resize(n);
  in.external_counts.resize(n);
  in.voter_counts.resize(n);

  std::vector<WeightedVote> external;
  for (std::size_t j = 0; j < n; ++j) {
    VarId i = f.neighbors[j];
    external.clear();
    double ext_weight = 0.0;
    std::uint32_t voters = 0;
    for (const auto& e : net_.edges_of(i)) {
      if (state_.abstaining[e.factor]) continue;
      ++voters;
      if (e.factor == a) continue;
      external.push_back({state_.votes[e.factor][e.pos], e.weight});
      ext_weight += e.weight;
    }
    in.summaries.push_back(summarize(net_.variable(i).spec, external));
    in.total_weights[j] = ext_weight + f.weights[j];
    in.external_counts[j] = static_cast<std::uint32_t>(external.size());
    in.voter_counts[j] = voters;
  }

  OpinionOutcome out;
  const bool has_vote = !state_.votes[a].empty();
  if (f.is_table()) {
    TableOpinion t =
        table_opinion(f.table(), in.summaries, in.weights, in.total_weights,
                      has_vote ? &state_.votes[a] : nullptr);
    out.opinion = std::move(t.opinion);
    out.confidence = t.confidence;
    out.satisfied = t.satisfied;
  } else {
    SubspaceOpinion s = subspace_opinion(f.subspace(), in);
    out.confidence = subspace_confidence(f.subspace(), s, in);
    out.satisfied = has_vote && subspace_satisfied(s.opinion, state_.votes[a],
                                                   f.subspace().config.alpha);
    out.opinion = std::move(s.opinion);
  }
  return out;
}

void Engine::rebuild_reacting() {
  std::vector<char> mark(net_.num_factors(), 0);
  for (FactorId a : state_.vote_changing) {
    for (VarId i : net_.factor(a).neighbors)
      for (const auto& e : net_.edges_of(i))
        if (e.factor != a) mark[e.factor] = 1;
  }
  state_.reacting.clear();
  for (FactorId b = 0; b < net_.num_factors(); ++b)
    if (mark[b]) {
      state_.reacting.push_back(b);
      state_.ever_reacting[b] = 1;
    }
}

double Engine::mismatch_only_cost() const {
  Assignment x = optimal_assignment(net_, state_.votes, state_.abstaining);
  double total = 0.0;
  for (const auto& f : net_.factors()) {
    if (state_.abstaining[f.id]) continue;
    const auto& vote = state_.votes[f.id];
    for (std::size_t j = 0; j < f.degree(); ++j) {
      VarId i = f.neighbors[j];
      const auto& spec = net_.variable(i).spec;
      switch (spec.kind) {
        case VarKind::Real: {
          double d = std::get<double>(x.at(i)) - std::get<double>(vote[j]);
          total += f.weights[j] * d * d;
          break;
        }
        case VarKind::Complex:
          total += f.weights[j] * std::norm(std::get<Complex>(x.at(i)) -
                                            std::get<Complex>(vote[j]));
          break;
        case VarKind::Integer:
          total += f.weights[j] *
                   static_cast<double>(
                       std::llabs(std::get<std::int64_t>(x.at(i)) -
                                  std::get<std::int64_t>(vote[j])));
          break;
        case VarKind::Label:
          if (std::get<Label>(x.at(i)) != std::get<Label>(vote[j]))
            total += f.weights[j];
          break;
      }
    }
  }
  return total;
}

CostTuple Engine::cost_tuple() const {
  return {state_.abstain_count, mismatch_only_cost()};
}

std::vector<FactorId> Engine::select_voters() {
  std::vector<FactorId> dissatisfied;
  for (FactorId a = 0; a < net_.num_factors(); ++a)
    if (state_.dissatisfied[a]) dissatisfied.push_back(a);
  if (dissatisfied.empty()) return {};

  if (schedule_.mode == ScheduleMode::Serial) {
    double best = -kInfiniteCost;
    for (FactorId a : dissatisfied) best = std::max(best, state_.confidence[a]);
    std::vector<FactorId> ties;
    for (FactorId a : dissatisfied)
      if (state_.confidence[a] == best) ties.push_back(a);
    return {ties[rng_.below(ties.size())]};
  }

  // Simultaneous: rank by confidence, random tie-break, take the top slice.
  struct Ranked {
    double kappa;
    std::uint64_t tiebreak;
    FactorId id;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(dissatisfied.size());
  for (FactorId a : dissatisfied)
    ranked.push_back({state_.confidence[a], rng_.next_u64(), a});
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& x, const Ranked& y) {
    if (x.kappa != y.kappa) return x.kappa > y.kappa;
    if (x.tiebreak != y.tiebreak) return x.tiebreak < y.tiebreak;
    return x.id < y.id;
  });
  std::size_t take = static_cast<std::size_t>(
      std::ceil(schedule_.fraction * static_cast<double>(ranked.size())));
  take = std::clamp<std::size_t>(take, 1, ranked.size());
  std::vector<FactorId> out;
  out.reserve(take);
  for (std::size_t k = 0; k < take; ++k) out.push_back(ranked[k].id);
  std::sort(out.begin(), out.end());
  return out;
}

void Engine::cast_votes(const std::vector<FactorId>& voters) {
  for (FactorId a : voters) {
    state_.votes[a] = state_.opinions[a];
    if (state_.abstaining[a]) {
      state_.abstaining[a] = 0;
      --state_.abstain_count;
    }
    state_.dissatisfied[a] = 0;
    ++state_.stats.votes_cast;
  }
}

bool Engine::step() {
  if (state_.vote_changing.empty())
    throw ValidationError("step requires a nonempty vote-changing set");

  const std::vector<FactorId>* reacting = &state_.reacting;
  std::vector<FactorId> everyone;
  if (schedule_.recompute_all) {
    for (FactorId a = 0; a < net_.num_factors(); ++a)
      if (state_.ever_reacting[a]) everyone.push_back(a);
    reacting = &everyone;
  }

  // Opinion phase: independent per factor, merged in ascending id order.
  std::vector<OpinionOutcome> outcomes(reacting->size());
  const std::size_t r = reacting->size();
  const int threads =
      std::min<int>(schedule_.threads, static_cast<int>(std::max<std::size_t>(r, 1)));
  if (threads <= 1 || r < 2) {
    for (std::size_t k = 0; k < r; ++k)
      outcomes[k] = compute_opinion((*reacting)[k]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::size_t chunk = (r + static_cast<std::size_t>(threads) - 1) /
                        static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      std::size_t lo = static_cast<std::size_t>(t) * chunk;
      std::size_t hi = std::min(r, lo + chunk);
      pool.emplace_back([&, lo, hi, t]() {
        try {
          for (std::size_t k = lo; k < hi; ++k)
            outcomes[k] = compute_opinion((*reacting)[k]);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  state_.stats.opinion_updates += r;

  for (std::size_t k = 0; k < r; ++k) {
    FactorId a = (*reacting)[k];
    state_.opinions[a] = std::move(outcomes[k].opinion);
    state_.confidence[a] = outcomes[k].confidence;
    state_.dissatisfied[a] = outcomes[k].satisfied ? 0 : 1;
  }

  std::vector<FactorId> voters = select_voters();
  ++state_.iteration;
  ++state_.stats.iterations;
  if (voters.empty()) {
    state_.vote_changing.clear();
    return false;
  }

  const bool simultaneous_multi =
      schedule_.mode == ScheduleMode::Simultaneous && voters.size() > 1;
  if (simultaneous_multi && schedule_.rollback_enabled) {
    CostTuple before = cost_tuple();
    // Snapshot what casting mutates.
    std::vector<std::vector<Value>> old_votes;
    std::vector<char> was_abstaining, was_dissatisfied;
    old_votes.reserve(voters.size());
    for (FactorId a : voters) {
      old_votes.push_back(state_.votes[a]);
      was_abstaining.push_back(state_.abstaining[a]);
      was_dissatisfied.push_back(state_.dissatisfied[a]);
    }
    std::size_t old_abstain = state_.abstain_count;
    std::uint64_t old_casts = state_.stats.votes_cast;

    cast_votes(voters);
    CostTuple after = cost_tuple();
    if (before < after) {
      for (std::size_t k = 0; k < voters.size(); ++k) {
        FactorId a = voters[k];
        state_.votes[a] = std::move(old_votes[k]);
        state_.abstaining[a] = was_abstaining[k];
        state_.dissatisfied[a] = was_dissatisfied[k];
      }
      state_.abstain_count = old_abstain;
      state_.stats.votes_cast = old_casts;
      ++state_.stats.rollbacks;
      // Retry the round serially with the single most confident factor.
      double best = -kInfiniteCost;
      for (FactorId a = 0; a < net_.num_factors(); ++a)
        if (state_.dissatisfied[a])
          best = std::max(best, state_.confidence[a]);
      std::vector<FactorId> ties;
      for (FactorId a = 0; a < net_.num_factors(); ++a)
        if (state_.dissatisfied[a] && state_.confidence[a] == best)
          ties.push_back(a);
      voters = {ties[rng_.below(ties.size())]};
      cast_votes(voters);
    }
  } else {
    cast_votes(voters);
  }

  state_.vote_changing = std::move(voters);
  rebuild_reacting();
  return true;
}

RunResult Engine::run(const VoteTable* initial_votes,
                      const std::vector<FactorId>* seed_voters) {
  init(initial_votes, seed_voters);
  RunResult result;
  auto record = [&](bool rolled) {
    if (!schedule_.record_trace) return;
    CostTuple t = cost_tuple();
    result.trace.push_back({state_.iteration, t.abstain_count, t.active_cost,
                            state_.stats.votes_cast, rolled});
  };
  record(false);

  while (!state_.vote_changing.empty() &&
         state_.iteration < schedule_.max_iterations) {
    std::uint64_t rollbacks_before = state_.stats.rollbacks;
    step();
    record(state_.stats.rollbacks != rollbacks_before);
  }

  result.status = state_.vote_changing.empty() ? RunStatus::Converged
                                               : RunStatus::NonConverged;
  result.assignment = optimal_assignment(net_, state_.votes, state_.abstaining);
  result.final_cost = cost_tuple();
  result.stats = state_.stats;
  result.votes = state_.votes;
  result.abstaining = state_.abstaining;
  return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "iter,abstain_count,active_cost,votes_cast,rollback\n";
  for (const auto& row : trace)
    out << row.iteration << ',' << row.abstain_count << ','
        << row.active_cost << ',' << row.votes_cast << ','
        << (row.rolled_back ? 1 : 0) << "\n";
}

}  // namespace mfn
