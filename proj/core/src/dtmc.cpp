#include "dg/dtmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dg/parser.hpp"

namespace dg {

std::optional<DiscreteStep> step_discrete(const CompiledGrammar& cg, const PoolState& p, RngStream& rng) {
  if (cg.has_solve())
    throw Error(ErrorKind::SolveInStochasticGrammar, "discrete semantics needs a jump-only grammar");
  PropensityCache cache(cg);
  cache.reset(p);
  if (!(cache.total() > 0.0)) return std::nullopt;
  DiscreteStep s;
  s.total = cache.total();
  double u = rng.uniform() * s.total;
  const std::size_t r = cache.select(u);
  s.event = fire_rule(cg, r, p, u, rng);
  return s;
}

namespace {

struct PathResult {
  PoolState final_state;
  double log_weight = 0.0;
  bool absorbed = false;
  WeightedTrajectory traj;
};

PathResult run_path(const CompiledGrammar& cg, const PoolState& p0, std::size_t steps, std::uint64_t seed,
                    std::size_t r, bool keep) {
  RngStream rng(seed, r);
  PathResult out;
  PoolState p = p0;
  PropensityCache cache(cg);
  cache.reset(p);
  if (keep) {
    out.traj.trace.seed = seed;
    out.traj.trace.replicate = r;
    out.traj.trace.end_time = static_cast<double>(steps);
    out.traj.trace.initial = p0;
  }
  for (std::size_t s = 0; s < steps; ++s) {
    if (!(cache.total() > 0.0)) {
      out.absorbed = true;
      break;
    }
    out.log_weight += std::log(cache.total());
    double u = rng.uniform() * cache.total();
    const std::size_t ri = cache.select(u);
    Event e = fire_rule(cg, ri, p, u, rng);
    e.step = static_cast<std::int64_t>(s + 1);
    e.time = static_cast<double>(s + 1);
    apply_event_in_place(p, e);
    cache.update(p, e);
    if (keep) out.traj.trace.events.push_back(std::move(e));
  }
  out.final_state = p;
  if (keep) {
    out.traj.trace.final_state = p;
    out.traj.trace.absorbed = out.absorbed;
    out.traj.log_weight = out.log_weight;
    out.traj.absorbed_early = out.absorbed;
  }
  return out;
}

}  // namespace

DiscreteResult simulate_discrete_weighted(const CompiledGrammar& cg, const PoolState& p0, std::size_t steps,
                                          std::size_t replicates, std::uint64_t seed, std::size_t jobs,
                                          bool keep_trajectories) {
  if (cg.has_solve())
    throw Error(ErrorKind::SolveInStochasticGrammar, "discrete semantics needs a jump-only grammar");
  if (replicates == 0) throw Error(ErrorKind::InvalidArgument, "replicates must be at least 1");
  jobs = std::max<std::size_t>(1, std::min(jobs, replicates));
  std::vector<PathResult> paths(replicates);
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&](std::size_t w) {
    try {
      for (std::size_t r = w; r < replicates; r += jobs)
        paths[r] = run_path(cg, p0, steps, seed, r, keep_trajectories);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  DiscreteResult res;
  res.steps = steps;
  res.replicates = replicates;
  double max_lw = -std::numeric_limits<double>::infinity();
  for (const auto& p : paths) {
    if (p.absorbed) {
      ++res.absorbed;
      continue;
    }
    max_lw = std::max(max_lw, p.log_weight);
  }
  if (res.absorbed == replicates)
    throw Error(ErrorKind::AllPathsAbsorbed, "every path was absorbed before " + std::to_string(steps) + " steps");
  double wsum = 0.0, n = 0.0;
  for (const auto& p : paths) {
    if (p.absorbed) continue;
    const double w = std::exp(p.log_weight - max_lw);
    res.weighted[p.final_state.counts()] += w;
    res.embedded[p.final_state.counts()] += 1.0;
    wsum += w;
    n += 1.0;
  }
  for (auto& [k, v] : res.weighted) v /= wsum;
  for (auto& [k, v] : res.embedded) v /= n;
  if (keep_trajectories)
    for (auto& p : paths) res.trajectories.push_back(std::move(p.traj));
  return res;
}

double l1_distance(const Distribution& a, const Distribution& b) {
  double d = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      d += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      d += std::abs(ib->second);
      ++ib;
    } else {
      d += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return d;
}

double tv_distance(const Distribution& a, const Distribution& b) { return 0.5 * l1_distance(a, b); }

std::string distribution_table(const Grammar& g, const Distribution& d) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [counts, pr] : d) {
    std::string desc = "{";
    bool first = true;
    for (const auto& [t, n] : counts) {
      if (!first) desc += ", ";
      first = false;
      desc += render_ground(g, t) + ":" + std::to_string(n);
    }
    desc += "}";
    os << desc << "\t" << pr << "\n";
  }
  return os.str();
}

std::string trajectory_to_jsonl(const CompiledGrammar& cg, const WeightedTrajectory& w) {
  const Grammar& g = cg.g();
  std::ostringstream os;
  auto pool_json = [&](const PoolState& p) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [t, n] : p.counts()) arr.push_back(nlohmann::json::array({render_ground(g, t), n}));
    return arr;
  };
  nlohmann::ordered_json header;
  header["grammar"] = w.trace.grammar_id;
  header["seed"] = w.trace.seed;
  header["replicate"] = w.trace.replicate;
  header["steps"] = static_cast<std::int64_t>(w.trace.end_time);
  header["initial"] = pool_json(w.trace.initial);
  header["next_oid"] = w.trace.initial.next_oid();
  os << header.dump() << "\n";
  for (const auto& e : w.trace.events) {
    nlohmann::ordered_json rec;
    rec["step"] = e.step;
    rec["rule"] = e.rule;
    nlohmann::json consumed = nlohmann::json::array(), produced = nlohmann::json::array();
    for (const auto& t : e.consumed) consumed.push_back(render_ground(g, t));
    for (const auto& t : e.produced) produced.push_back(render_ground(g, t));
    rec["consumed"] = consumed;
    rec["produced"] = produced;
    os << rec.dump() << "\n";
  }
  nlohmann::ordered_json footer;
  footer["end"] = true;
  footer["log_weight"] = w.log_weight;
  footer["weight"] = std::exp(w.log_weight);
  footer["absorbed"] = w.absorbed_early;
  footer["final"] = pool_json(w.trace.final_state);
  os << footer.dump() << "\n";
  return os.str();
}

}  // namespace dg
