#include <doctest.h>

#include <memory>
#include <vector>

#include "mfn/engine.hpp"
#include "mfn/network.hpp"
#include "mfn/rng.hpp"
#include "support/random_nets.hpp"

using namespace mfn;

namespace {

std::shared_ptr<const MemoryTable> real_table(
    std::vector<std::vector<Value>> rows, std::size_t width) {
  return std::make_shared<const MemoryTable>(
      MemoryTable::from_rows(std::vector<VarKind>(width, VarKind::Real), rows));
}

}  // namespace

TEST_CASE("init seeds the vote-changing set with evidence") {
  NetworkBuilder b;
  VarId x0 = b.add_variable(VariableSpec::real());
  VarId x1 = b.add_variable(VariableSpec::real());
  b.add_memory_factor(PayloadPtr{real_table({{0.0, 0.0}}, 2)}, {x0, x1}, 1.0);
  b.add_memory_factor(PayloadPtr{real_table({{1.0}}, 1)}, {x1}, 1.0);
  FactorId ev = b.add_evidence(x0, 0.5, 2.0);
  Network net = std::move(b).build();

  Engine eng(net, {});
  eng.init();
  const auto& st = eng.state();
  CHECK(st.abstain_count == 2);
  CHECK(st.vote_changing == std::vector<FactorId>{ev});
  CHECK(st.votes[ev] == std::vector<Value>{Value{0.5}});
  // Reacting set: factors sharing x0 with the evidence.
  CHECK(st.reacting == std::vector<FactorId>{0});
}

TEST_CASE("isolated evidence converges immediately, leaving the rest unknown") {
  NetworkBuilder b;
  VarId x0 = b.add_variable(VariableSpec::real());
  VarId x1 = b.add_variable(VariableSpec::real());
  VarId x2 = b.add_variable(VariableSpec::real());
  b.add_memory_factor(PayloadPtr{real_table({{0.0, 0.0}}, 2)}, {x1, x2}, 1.0);
  b.add_evidence(x0, 0.75, 1.0);
  Network net = std::move(b).build();

  Engine eng(net, {});
  RunResult r = eng.run();
  CHECK(r.status == RunStatus::Converged);
  CHECK(r.final_cost.abstain_count == 1);  // the memory factor never voted
  CHECK(std::get<double>(r.assignment.at(x0)) == 0.75);
  CHECK(!r.assignment.known(x1));
  CHECK(!r.assignment.known(x2));
}

TEST_CASE("chain reaction set after init") {
  // evidence - x0 - f0 - x1 - f1 - x2
  NetworkBuilder b;
  VarId x0 = b.add_variable(VariableSpec::real());
  VarId x1 = b.add_variable(VariableSpec::real());
  VarId x2 = b.add_variable(VariableSpec::real());
  FactorId f0 = b.add_memory_factor(
      PayloadPtr{real_table({{0.0, 0.0}, {1.0, 1.0}}, 2)}, {x0, x1}, 1.0);
  b.add_memory_factor(PayloadPtr{real_table({{0.0, 0.0}, {1.0, 1.0}}, 2)},
                      {x1, x2}, 1.0);
  b.add_evidence(x0, 1.0, 5.0);
  Network net = std::move(b).build();

  Engine eng(net, {});
  eng.init();
  CHECK(eng.state().reacting == std::vector<FactorId>{f0});
}

TEST_CASE("evidence plus a matching memory converges to zero cost") {
  NetworkBuilder b;
  VarId x0 = b.add_variable(VariableSpec::real());
  VarId x1 = b.add_variable(VariableSpec::real());
  b.add_memory_factor(
      PayloadPtr{real_table({{0.25, 0.5}, {0.9, 0.9}}, 2)}, {x0, x1}, 1.0);
  b.add_evidence(x0, 0.25, 10.0);
  Network net = std::move(b).build();

  Engine eng(net, {});
  RunResult r = eng.run();
  CHECK(r.status == RunStatus::Converged);
  CHECK(r.stats.iterations <= 2);
  CHECK(r.final_cost.abstain_count == 0);
  CHECK(r.final_cost.active_cost == doctest::Approx(0.0));
  CHECK(std::get<double>(r.assignment.at(x1)) == doctest::Approx(0.5));
}

TEST_CASE("networks without evidence need seed voters") {
  NetworkBuilder b;
  VarId x0 = b.add_variable(VariableSpec::real());
  b.add_memory_factor(PayloadPtr{real_table({{0.5}}, 1)}, {x0}, 1.0);
  Network net = std::move(b).build();

  Engine eng(net, {});
  CHECK_THROWS_AS(eng.init(), ValidationError);
  std::vector<FactorId> seeds = {0};
  RunResult r = eng.run(nullptr, &seeds);
  CHECK(r.status == RunStatus::Converged);
  CHECK(std::get<double>(r.assignment.at(x0)) == 0.5);
}

TEST_CASE("serial runs keep the cost tuple non-increasing on random nets") {
  Rng rng(20240815);
  int connected_runs = 0;
  for (int t = 0; t < 25; ++t) {
    Network net = testsupport::random_network(rng);
    Schedule sched;
    sched.seed = rng.next_u64();
    sched.record_trace = true;
    Engine eng(net, sched);
    RunResult r = eng.run();
    CHECK(r.status == RunStatus::Converged);

    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      CostTuple prev{r.trace[k - 1].abstain_count, r.trace[k - 1].active_cost};
      CostTuple cur{r.trace[k].abstain_count, r.trace[k].active_cost};
      // Tiny float slack: costs re-derive from fresh optimal assignments.
      CHECK((cur < prev ||
             (cur.abstain_count == prev.abstain_count &&
              cur.active_cost <= prev.active_cost + 1e-9)));
    }
    if (testsupport::connected_to_evidence(net)) {
      ++connected_runs;
      CHECK(r.final_cost.abstain_count == 0);
    }
  }
  CHECK(connected_runs > 0);
}

namespace {

/// Two table factors sharing x1, anchored by weak evidence on their private
/// variables. Warm-started on rows that disagree about x1, both flip at once
/// under simultaneous voting and the swap raises the active cost.
struct AdversarialPair {
  Network net;
  VoteTable warm;
};

AdversarialPair make_adversarial() {
  NetworkBuilder b;
  VarId x0 = b.add_variable(VariableSpec::real());  // private to t1
  VarId x1 = b.add_variable(VariableSpec::real());  // shared
  VarId x2 = b.add_variable(VariableSpec::real());  // private to t2
  FactorId t1 = b.add_memory_factor(
      PayloadPtr{real_table({{0.0, 0.0}, {3.0, 4.0}}, 2)}, {x0, x1}, 1.0);
  FactorId t2 = b.add_memory_factor(
      PayloadPtr{real_table({{4.0, 4.0}, {0.0, 1.0}}, 2)}, {x1, x2}, 1.0);
  b.add_evidence(x0, 0.0, 1.0);
  b.add_evidence(x2, 4.0, 1.0);
  AdversarialPair out{std::move(b).build(), {}};
  out.warm.resize(out.net.num_factors());
  out.warm[t1] = {Value{0.0}, Value{0.0}};
  out.warm[t2] = {Value{4.0}, Value{4.0}};
  return out;
}

}  // namespace

TEST_CASE("simultaneous interference rolls back and finishes serially") {
  AdversarialPair ap = make_adversarial();
  Schedule sched;
  sched.mode = ScheduleMode::Simultaneous;
  sched.fraction = 1.0;
  sched.rollback_enabled = true;
  sched.record_trace = true;
  sched.seed = 11;
  Engine eng(ap.net, sched);
  RunResult r = eng.run(&ap.warm);
  CHECK(r.status == RunStatus::Converged);
  CHECK(r.stats.rollbacks == 1);
  CHECK(r.final_cost.active_cost == doctest::Approx(4.5));
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    CostTuple prev{r.trace[k - 1].abstain_count, r.trace[k - 1].active_cost};
    CostTuple cur{r.trace[k].abstain_count, r.trace[k].active_cost};
    CHECK(cur <= prev);
  }
}

TEST_CASE("the same interference without rollback oscillates") {
  AdversarialPair ap = make_adversarial();
  Schedule sched;
  sched.mode = ScheduleMode::Simultaneous;
  sched.fraction = 1.0;
  sched.rollback_enabled = false;
  sched.max_iterations = 60;
  sched.record_trace = true;
  sched.seed = 11;
  Engine eng(ap.net, sched);
  RunResult r = eng.run(&ap.warm);
  CHECK(r.status == RunStatus::NonConverged);
  bool increased = false;
  for (std::size_t k = 1; k < r.trace.size(); ++k)
    increased |= r.trace[k].active_cost > r.trace[k - 1].active_cost + 1e-9;
  CHECK(increased);
}

TEST_CASE("a factor that has voted never abstains again") {
  Rng rng(5150);
  for (int t = 0; t < 10; ++t) {
    Network net = testsupport::random_network(rng, 10, 6);
    Schedule sched;
    sched.seed = rng.next_u64();
    Engine eng(net, sched);
    eng.init();
    std::vector<char> ever_voted(net.num_factors(), 0);
    for (FactorId a = 0; a < net.num_factors(); ++a)
      ever_voted[a] = !eng.state().abstaining[a];
    while (!eng.state().vote_changing.empty()) {
      eng.step();
      for (FactorId a = 0; a < net.num_factors(); ++a) {
        if (ever_voted[a]) CHECK(!eng.state().abstaining[a]);
        ever_voted[a] = ever_voted[a] || !eng.state().abstaining[a];
      }
      if (eng.state().iteration > 500) break;
    }
  }
}

TEST_CASE("skipping non-reacting factors never changes the trajectory") {
  Rng rng(606);
  for (int t = 0; t < 10; ++t) {
    std::uint64_t net_seed = rng.next_u64();
    std::uint64_t run_seed = rng.next_u64();
    Rng a(net_seed), bgen(net_seed);
    Network n1 = testsupport::random_network(a, 12, 8);
    Network n2 = testsupport::random_network(bgen, 12, 8);

    Schedule s1;
    s1.seed = run_seed;
    s1.record_trace = true;
    Schedule s2 = s1;
    s2.recompute_all = true;

    RunResult r1 = Engine(n1, s1).run();
    RunResult r2 = Engine(n2, s2).run();
    CHECK(r1.stats.votes_cast == r2.stats.votes_cast);
    CHECK(r1.stats.iterations == r2.stats.iterations);
    REQUIRE(r1.trace.size() == r2.trace.size());
    for (std::size_t k = 0; k < r1.trace.size(); ++k) {
      CHECK(r1.trace[k].abstain_count == r2.trace[k].abstain_count);
      CHECK(r1.trace[k].active_cost ==
            doctest::Approx(r2.trace[k].active_cost).epsilon(1e-12));
    }
    REQUIRE(r1.assignment.size() == r2.assignment.size());
    for (VarId i = 0; i < r1.assignment.size(); ++i) {
      CHECK(r1.assignment.known(i) == r2.assignment.known(i));
      if (r1.assignment.known(i)) CHECK(r1.assignment.at(i) == r2.assignment.at(i));
    }
  }
}

TEST_CASE("identical seeds give identical results at any thread count") {
  Rng rng(787);
  for (int t = 0; t < 6; ++t) {
    std::uint64_t net_seed = rng.next_u64();
    std::uint64_t run_seed = rng.next_u64();
    Rng a(net_seed), bgen(net_seed);
    Network n1 = testsupport::random_network(a, 16, 9);
    Network n2 = testsupport::random_network(bgen, 16, 9);

    Schedule s1;
    s1.seed = run_seed;
    s1.mode = ScheduleMode::Simultaneous;
    s1.fraction = 0.3;
    s1.record_trace = true;
    s1.threads = 1;
    Schedule s8 = s1;
    s8.threads = 8;

    RunResult r1 = Engine(n1, s1).run();
    RunResult r8 = Engine(n2, s8).run();
    CHECK(r1.stats.iterations == r8.stats.iterations);
    CHECK(r1.stats.votes_cast == r8.stats.votes_cast);
    CHECK(r1.stats.rollbacks == r8.stats.rollbacks);
    REQUIRE(r1.votes.size() == r8.votes.size());
    for (std::size_t k = 0; k < r1.votes.size(); ++k)
      CHECK(r1.votes[k] == r8.votes[k]);
  }
}

TEST_CASE("max_iterations reports non-convergence with best-so-far state") {
  AdversarialPair ap = make_adversarial();
  Schedule sched;
  sched.mode = ScheduleMode::Simultaneous;
  sched.fraction = 1.0;
  sched.rollback_enabled = false;
  sched.max_iterations = 3;
  Engine eng(ap.net, sched);
  RunResult r = eng.run(&ap.warm);
  CHECK(r.status == RunStatus::NonConverged);
  CHECK(r.assignment.size() == ap.net.num_variables());
}

TEST_CASE("complex variables run through the full engine") {
  NetworkBuilder b;
  VarId x0 = b.add_variable(VariableSpec::complex_val());
  VarId x1 = b.add_variable(VariableSpec::complex_val());
  auto table = std::make_shared<const MemoryTable>(MemoryTable::from_rows(
      {VarKind::Complex, VarKind::Complex},
      std::vector<std::vector<Value>>{
          {Complex{1, 1}, Complex{0, -1}},
          {Complex{-1, 0}, Complex{2, 2}}}));
  b.add_memory_factor(PayloadPtr{table}, {x0, x1}, 1.0);
  b.add_evidence(x0, Complex{0.9, 1.1}, 3.0);
  Network net = std::move(b).build();

  Engine eng(net, {});
  RunResult r = eng.run();
  CHECK(r.status == RunStatus::Converged);
  CHECK(r.final_cost.abstain_count == 0);
  // The table picks the memory near the evidence; x0 lands on the
  // weighted mean of evidence and vote.
  Complex expect = (3.0 * Complex{0.9, 1.1} + Complex{1, 1}) / 4.0;
  CHECK(std::abs(std::get<Complex>(r.assignment.at(x0)) - expect) <= 1e-12);
  CHECK(std::get<Complex>(r.assignment.at(x1)) == Complex{0, -1});
}
