#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dgtest {

namespace {

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

int roll(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

struct TypeShape {
  std::string name;
  bool param = false;
};

}  // namespace

std::string random_small_grammar(std::mt19937_64& rng) {
  std::ostringstream os;
  os << "space Bit = int[0..1];\n";
  std::vector<TypeShape> types;
  const int ntypes = roll(rng, 1, 4);
  int slots = 0;
  for (int i = 0; i < ntypes; ++i) {
    TypeShape t{"T" + std::to_string(i), slots + 2 + (ntypes - i - 1) <= 6 && roll(rng, 0, 2) == 0};
    slots += t.param ? 2 : 1;
    os << "type " << t.name << (t.param ? "(Bit)" : "") << " : cap " << roll(rng, 1, 3) << ";\n";
    types.push_back(t);
  }
  const std::vector<std::string> rates = {"0.5", "1", "2", "3", "1.25"};
  const int nrules = roll(rng, 1, 5);
  for (int r = 0; r < nrules; ++r) {
    std::vector<std::string> lhs_vars;
    auto term = [&](bool lhs, std::vector<std::string>& rhs_only) {
      const TypeShape& t = pick(rng, types);
      if (!t.param) return t.name;
      std::string a;
      const int k = roll(rng, 0, 3);
      if (k == 0 || (!lhs && lhs_vars.empty() && k != 3)) {
        a = std::to_string(roll(rng, 0, 1));
      } else if (lhs) {
        a = k == 1 ? "x" : "y";
        if (std::find(lhs_vars.begin(), lhs_vars.end(), a) == lhs_vars.end()) lhs_vars.push_back(a);
      } else if (k == 3) {
        a = "z";
        if (rhs_only.empty()) rhs_only.push_back(a);
      } else {
        a = pick(rng, lhs_vars);
      }
      return t.name + "(" + a + ")";
    };
    std::vector<std::string> none, rhs_only;
    std::vector<std::string> lhs, rhs;
    const int nl = roll(rng, 0, 2);
    const int nr = roll(rng, nl == 0 ? 1 : 0, 2);
    for (int i = 0; i < nl; ++i) lhs.push_back(term(true, none));
    for (int i = 0; i < nr; ++i) rhs.push_back(term(false, rhs_only));
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
      return s;
    };
    std::string rate = pick(rng, rates);
    if (!lhs_vars.empty() && roll(rng, 0, 1)) rate += " * (" + lhs_vars.front() + " + 1)";
    if (!rhs_only.empty() && roll(rng, 0, 1)) rate += " * (z + 2)";
    os << "rule r" << r << ": " << join(lhs) << (lhs.empty() ? "-> " : " -> ") << join(rhs) << " with " << rate
       << ";\n";
  }
  return os.str();
}

dg::HornProgram random_horn(std::mt19937_64& rng, std::size_t max_atoms) {
  dg::HornProgram prog;
  const int natoms = roll(rng, 1, static_cast<int>(max_atoms));
  std::vector<std::string> atoms;
  for (int i = 0; i < natoms; ++i) atoms.push_back("a" + std::to_string(i));
  const int nclauses = roll(rng, 1, 2 * natoms);
  std::set<std::string> seen;
  auto note = [&](const std::string& a) {
    if (seen.insert(a).second) prog.atoms.push_back(a);
  };
  for (int c = 0; c < nclauses; ++c) {
    dg::HornClause cl;
    cl.head = pick(rng, atoms);
    const int nb = roll(rng, 0, 3) == 0 ? 0 : roll(rng, 1, 3);
    for (int b = 0; b < nb; ++b) cl.body.push_back(pick(rng, atoms));
    for (const auto& b : cl.body) note(b);
    note(cl.head);
    prog.clauses.push_back(cl);
  }
  return prog;
}

std::set<std::string> naive_fixpoint(const dg::HornProgram& prog) {
  std::set<std::string> model;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& c : prog.clauses) {
      const bool fires = std::all_of(c.body.begin(), c.body.end(), [&](const auto& b) { return model.count(b); });
      if (fires && model.insert(c.head).second) changed = true;
    }
  }
  return model;
}

dg::LSystem random_lsystem(std::mt19937_64& rng) {
  dg::LSystem ls;
  const std::string all = "ABC";
  ls.alphabet = all.substr(0, static_cast<std::size_t>(roll(rng, 1, 3)));
  for (char a : ls.alphabet) {
    std::string w;
    const int n = roll(rng, 0, 4) == 0 ? 0 : roll(rng, 1, 3);
    for (int i = 0; i < n; ++i) w += ls.alphabet[static_cast<std::size_t>(roll(rng, 0, static_cast<int>(ls.alphabet.size()) - 1))];
    ls.productions[a] = w;
  }
  const int n = roll(rng, 1, 3);
  for (int i = 0; i < n; ++i) ls.axiom += ls.alphabet[static_cast<std::size_t>(roll(rng, 0, static_cast<int>(ls.alphabet.size()) - 1))];
  return ls;
}

double Chain::exit(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < size(); ++j)
    if (j != i) s += rate[i][j];
  return s;
}

namespace {

// (s, 0) entry of exp(tM), M lower bidiagonal with diagonal -d and unit
// subdiagonal, by Taylor series on the first column.
double holding_integral(const std::vector<double>& d, double t) {
  const std::size_t n = d.size();
  std::vector<double> v(n, 0.0), term(n, 0.0);
  v[0] = term[0] = 1.0;
  for (int k = 1; k < 200; ++k) {
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) next[i] = (-d[i] * term[i] + (i ? term[i - 1] : 0.0)) * t / k;
    term = next;
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] += term[i];
      mag = std::max(mag, std::abs(term[i]));
    }
    if (mag < 1e-300 || (k > n + 2 && mag < 1e-22 * std::abs(v[n - 1]))) break;
  }
  return v[n - 1];
}

template <class F>
void for_each_path(const Chain& c, std::size_t start, std::size_t s, F&& visit) {
  std::vector<std::size_t> path{start};
  auto rec = [&](auto&& self, double w) -> void {
    if (path.size() == s + 1) {
      visit(path, w);
      return;
    }
    const std::size_t i = path.back();
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j == i || c.rate[i][j] == 0.0) continue;
      path.push_back(j);
      self(self, w * c.rate[i][j]);
      path.pop_back();
    }
  };
  rec(rec, 1.0);
}

std::vector<double> normalized(std::vector<double> v) {
  double z = 0.0;
  for (double x : v) z += x;
  for (double& x : v) x /= z;
  return v;
}

}  // namespace

std::vector<double> path_sum_conditioned(const Chain& c, std::size_t start, double t, std::size_t s) {
  std::vector<double> p(c.size(), 0.0);
  for_each_path(c, start, s, [&](const std::vector<std::size_t>& path, double w) {
    std::vector<double> d;
    for (std::size_t i : path) d.push_back(c.exit(i));
    p[path.back()] += w * holding_integral(d, t);
  });
  return normalized(p);
}

std::vector<double> path_weight_distribution(const Chain& c, std::size_t start, std::size_t s) {
  std::vector<double> p(c.size(), 0.0);
  for_each_path(c, start, s, [&](const std::vector<std::size_t>& path, double w) { p[path.back()] += w; });
  return normalized(p);
}

std::vector<std::vector<double>> mass_action_generator(const MassAction& m,
                                                       const std::vector<std::vector<std::int64_t>>& states) {
  std::map<std::vector<std::int64_t>, std::size_t> index;
  for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = i;
  std::vector<std::vector<double>> h(states.size(), std::vector<double>(states.size(), 0.0));
  for (std::size_t j = 0; j < states.size(); ++j) {
    const auto& n = states[j];
    for (const auto& r : m.reactions) {
      double a = r.rate;
      std::vector<std::int64_t> target = n;
      bool ok = true;
      for (std::size_t s = 0; s < m.species; ++s) {
        for (std::int64_t k = 0; k < r.in[s]; ++k) a *= static_cast<double>(n[s] - k);
        target[s] += r.out[s] - r.in[s];
        if (n[s] < r.in[s] || target[s] > m.cap) ok = false;
      }
      if (!ok || a == 0.0) continue;
      h[index.at(target)][j] += a;
      h[j][j] -= a;
    }
  }
  return h;
}

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace dgtest
