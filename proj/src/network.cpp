#include "mfn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace mfn {

std::vector<FactorId> Network::evidence_factors() const {
  std::vector<FactorId> out;
  for (const auto& f : factors_)
    if (f.cls == FactorClass::Evidence) out.push_back(f.id);
  return out;
}

VarId NetworkBuilder::add_variable(VariableSpec spec) {
  if (spec.kind == VarKind::Label && spec.label_domain < 2)
    throw ValidationError("label domain must have K >= 2");
  if (spec.kind == VarKind::Integer && spec.range &&
      spec.range->first > spec.range->second)
    throw ValidationError("integer range is empty");
  VarId id = static_cast<VarId>(variables_.size());
  variables_.push_back({id, std::move(spec)});
  return id;
}

FactorId NetworkBuilder::add_memory_factor(PayloadPtr payload,
                                           std::vector<VarId> neighbors,
                                           std::vector<double> weights) {
  FactorId id = static_cast<FactorId>(factors_.size());
  factors_.push_back({id, FactorClass::Memory, std::move(payload),
                      std::move(neighbors), std::move(weights)});
  return id;
}

FactorId NetworkBuilder::add_memory_factor(PayloadPtr payload,
                                           std::vector<VarId> neighbors,
                                           double uniform_weight) {
  std::vector<double> w(neighbors.size(), uniform_weight);
  return add_memory_factor(std::move(payload), std::move(neighbors),
                           std::move(w));
}

FactorId NetworkBuilder::add_evidence(VarId variable, Value observation,
                                      double weight) {
  auto table = std::make_shared<MemoryTable>(
      MemoryTable::evidence(std::span<const Value>(&observation, 1)));
  FactorId id = static_cast<FactorId>(factors_.size());
  factors_.push_back({id,
                      FactorClass::Evidence,
                      PayloadPtr{std::move(table)},
                      {variable},
                      {weight}});
  return id;
}

Network NetworkBuilder::build() && {
  Network net;
  net.variables_ = std::move(variables_);
  net.factors_ = std::move(factors_);
  net.adjacency_.assign(net.variables_.size(), {});

  for (const auto& f : net.factors_) {
    if (f.neighbors.size() != f.weights.size())
      throw ValidationError("factor weights not aligned with neighbors");
    if (f.neighbors.empty())
      throw ValidationError("factor has no neighbors");
    std::unordered_set<VarId> seen;
    for (std::size_t j = 0; j < f.neighbors.size(); ++j) {
      VarId i = f.neighbors[j];
      if (i >= net.variables_.size())
        throw ValidationError("factor references an unknown variable");
      if (!seen.insert(i).second)
        throw ValidationError("factor neighbor list has a duplicate");
      if (!(f.weights[j] > 0.0))
        throw ValidationError("edge weights must be positive");
    }
    bool has_payload = std::visit(
        [](const auto& p) { return static_cast<bool>(p); }, f.payload);
    if (!has_payload) throw ValidationError("factor payload missing");
    if (f.cls == FactorClass::Evidence) {
      if (f.neighbors.size() != 1)
        throw ValidationError("evidence factors attach to a single variable");
      if (!f.is_table() || f.table().rows() != 1)
        throw ValidationError("evidence payload must be a one-row table");
    }
    // Payload arity and per-column alphabet agreement.
    if (f.is_table()) {
      const auto& t = f.table();
      if (t.cols() != f.neighbors.size())
        throw ValidationError("table width does not match factor degree");
      for (std::size_t j = 0; j < f.neighbors.size(); ++j) {
        const auto& spec = net.variables_[f.neighbors[j]].spec;
        if (t.column_kind(j) != spec.kind)
          throw ValidationError("table column kind disagrees with variable");
        for (std::size_t l = 0; l < t.rows(); ++l)
          if (!spec.admits(t.cell(l, j)))
            throw ValidationError("table cell outside variable alphabet");
      }
    } else {
      const auto& s = f.subspace();
      if (s.visible_dim() != f.neighbors.size())
        throw ValidationError("subspace size does not match factor degree");
      VarKind expect = s.is_complex() ? VarKind::Complex : VarKind::Real;
      for (VarId i : f.neighbors)
        if (net.variables_[i].spec.kind != expect)
          throw ValidationError(
              "subspace factors require a uniform real/complex alphabet");
    }
    for (std::size_t j = 0; j < f.neighbors.size(); ++j)
      net.adjacency_[f.neighbors[j]].push_back(
          {f.id, static_cast<std::uint32_t>(j), f.weights[j]});
  }

  // All edge weights incident to one integer/label variable must be equal.
  for (const auto& v : net.variables_) {
    if (v.spec.kind != VarKind::Integer && v.spec.kind != VarKind::Label)
      continue;
    const auto& edges = net.adjacency_[v.id];
    for (const auto& e : edges)
      if (e.weight != edges.front().weight)
        throw ValidationError(
            "integer/label variables require equal weights on all edges");
  }
  return net;
}

namespace {

double mismatch(const VariableSpec& spec, const Value& x, const Value& v) {
  switch (spec.kind) {
    case VarKind::Real: {
      double d = std::get<double>(x) - std::get<double>(v);
      return d * d;
    }
    case VarKind::Complex:
      return std::norm(std::get<Complex>(x) - std::get<Complex>(v));
    case VarKind::Integer:
      return static_cast<double>(std::llabs(std::get<std::int64_t>(x) -
                                            std::get<std::int64_t>(v)));
    case VarKind::Label:
      return std::get<Label>(x) == std::get<Label>(v) ? 0.0 : 1.0;
  }
  return 0.0;
}

/// Selection cost of a full vote vector: 0 when feasible, +inf otherwise.
double selection_cost(const FactorNode& f, std::span<const Value> vote) {
  if (f.is_table())
    return f.table().contains_row(vote) ? 0.0 : kInfiniteCost;
  // Tolerance absorbs solver roundoff; votes are produced as W z.
  double tol = 1e-9 * static_cast<double>(f.degree() + 1);
  return subspace_residual(f.subspace(), vote) <= tol ? 0.0 : kInfiniteCost;
}

}  // namespace

double active_cost(const Network& net, const VoteTable& votes,
                   const Assignment& x, std::span<const char> abstaining) {
  if (votes.size() != net.num_factors())
    throw ValidationError("vote table size does not match the network");
  double total = 0.0;
  for (const auto& f : net.factors()) {
    if (!abstaining.empty() && abstaining[f.id]) continue;
    const auto& vote = votes[f.id];
    if (vote.size() != f.degree())
      throw ValidationError("non-abstaining factor lacks a full vote vector");
    double sel = selection_cost(f, vote);
    if (sel > 0.0) return kInfiniteCost;
    for (std::size_t j = 0; j < f.degree(); ++j) {
      VarId i = f.neighbors[j];
      if (!x.known(i))
        throw ValidationError("assignment misses a voted-on variable");
      total += mismatch(net.variable(i).spec, x.at(i), vote[j]) * f.weights[j];
    }
  }
  return total;
}

double global_cost(const Network& net, const VoteTable& votes,
                   const Assignment& x) {
  return active_cost(net, votes, x, {});
}

Assignment optimal_assignment(const Network& net, const VoteTable& votes,
                              std::span<const char> abstaining) {
  Assignment out(net.num_variables());
  std::vector<WeightedVote> incident;
  for (VarId i = 0; i < net.num_variables(); ++i) {
    incident.clear();
    for (const auto& e : net.edges_of(i)) {
      if (!abstaining.empty() && abstaining[e.factor]) continue;
      const auto& vote = votes[e.factor];
      if (vote.empty()) continue;
      incident.push_back({vote[e.pos], e.weight});
    }
    if (!incident.empty())
      out.values[i] = local_minimizer(net.variable(i).spec, incident);
  }
  return out;
}

namespace {

using nlohmann::json;

json value_to_json(const Value& v) {
  switch (kind_of(v)) {
    case VarKind::Real: return std::get<double>(v);
    case VarKind::Integer: return std::get<std::int64_t>(v);
    case VarKind::Label: return std::get<Label>(v).id;
    case VarKind::Complex: {
      const auto& c = std::get<Complex>(v);
      return json::array({c.real(), c.imag()});
    }
  }
  return {};
}

Value value_from_json(const json& j, VarKind kind) {
  switch (kind) {
    case VarKind::Real: return j.get<double>();
    case VarKind::Integer: return j.get<std::int64_t>();
    case VarKind::Label: return Label{j.get<std::int32_t>()};
    case VarKind::Complex:
      return Complex{j.at(0).get<double>(), j.at(1).get<double>()};
  }
  throw ValidationError("unknown value kind");
}

const char* kind_name(VarKind k) {
  switch (k) {
    case VarKind::Real: return "real";
    case VarKind::Integer: return "integer";
    case VarKind::Label: return "label";
    case VarKind::Complex: return "complex";
  }
  return "?";
}

VarKind kind_from_name(const std::string& s) {
  if (s == "real") return VarKind::Real;
  if (s == "integer") return VarKind::Integer;
  if (s == "label") return VarKind::Label;
  if (s == "complex") return VarKind::Complex;
  throw IoError("unknown variable kind: " + s);
}

}  // namespace

void save_network(const Network& net, const std::string& json_path,
                  const std::string& payload_dir) {
  json doc;
  doc["version"] = 1;
  json vars = json::array();
  for (std::size_t i = 0; i < net.num_variables(); ++i) {
    const auto& spec = net.variable(static_cast<VarId>(i)).spec;
    json v;
    v["id"] = i;
    v["kind"] = kind_name(spec.kind);
    if (spec.upper) v["upper"] = *spec.upper;
    if (spec.range) v["range"] = json::array({spec.range->first, spec.range->second});
    if (spec.kind == VarKind::Label) v["domain"] = spec.label_domain;
    vars.push_back(std::move(v));
  }
  doc["variables"] = std::move(vars);

  // Payloads are deduplicated by identity so shared payloads land in one file.
  std::unordered_map<const void*, std::string> payload_names;
  json factors = json::array();
  for (const auto& f : net.factors()) {
    json fj;
    fj["id"] = f.id;
    fj["class"] = f.cls == FactorClass::Evidence ? "evidence" : "memory";
    fj["neighbors"] = f.neighbors;
    fj["weights"] = f.weights;
    if (f.cls == FactorClass::Evidence) {
      json obs = json::array();
      for (std::size_t j = 0; j < f.degree(); ++j)
        obs.push_back(value_to_json(f.table().cell(0, j)));
      fj["observation"] = std::move(obs);
    } else {
      const void* key = f.is_table()
                            ? static_cast<const void*>(&f.table())
                            : static_cast<const void*>(&f.subspace());
      auto it = payload_names.find(key);
      if (it == payload_names.end()) {
        std::string name = "payload_" + std::to_string(payload_names.size()) +
                           (f.is_table() ? ".tbl" : ".sub");
        if (f.is_table())
          save_table(f.table(), payload_dir + "/" + name);
        else
          save_subspace(f.subspace(), payload_dir + "/" + name);
        it = payload_names.emplace(key, std::move(name)).first;
      }
      fj["payload_ref"] = it->second;
    }
    factors.push_back(std::move(fj));
  }
  doc["factors"] = std::move(factors);

  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + json_path);
  out << doc.dump(2) << "\n";
}

Network load_network(const std::string& json_path,
                     const std::string& payload_dir) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open: " + json_path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError("bad network json: " + std::string(e.what()));
  }
  if (doc.value("version", 0) != 1)
    throw IoError("unsupported network version in " + json_path);

  NetworkBuilder b;
  std::vector<VarKind> kinds;
  for (const auto& v : doc.at("variables")) {
    VariableSpec spec;
    spec.kind = kind_from_name(v.at("kind").get<std::string>());
    if (v.contains("upper")) spec.upper = v["upper"].get<double>();
    if (v.contains("range"))
      spec.range = std::pair{v["range"].at(0).get<std::int64_t>(),
                             v["range"].at(1).get<std::int64_t>()};
    if (v.contains("domain")) spec.label_domain = v["domain"].get<std::int32_t>();
    kinds.push_back(spec.kind);
    b.add_variable(std::move(spec));
  }

  std::unordered_map<std::string, PayloadPtr> payload_cache;
  for (const auto& fj : doc.at("factors")) {
    auto neighbors = fj.at("neighbors").get<std::vector<VarId>>();
    auto weights = fj.at("weights").get<std::vector<double>>();
    if (fj.at("class").get<std::string>() == "evidence") {
      if (neighbors.size() != 1 || weights.size() != 1)
        throw IoError("evidence factor must bind one variable");
      Value obs =
          value_from_json(fj.at("observation").at(0), kinds.at(neighbors[0]));
      b.add_evidence(neighbors[0], obs, weights[0]);
      continue;
    }
    std::string ref = fj.at("payload_ref").get<std::string>();
    auto it = payload_cache.find(ref);
    if (it == payload_cache.end()) {
      PayloadPtr p;
      if (ref.ends_with(".tbl"))
        p = std::make_shared<const MemoryTable>(
            load_table(payload_dir + "/" + ref));
      else
        p = std::make_shared<const SubspaceFactor>(
            load_subspace(payload_dir + "/" + ref));
      it = payload_cache.emplace(ref, std::move(p)).first;
    }
    b.add_memory_factor(it->second, std::move(neighbors), std::move(weights));
  }
  return std::move(b).build();
}

}  // namespace mfn
