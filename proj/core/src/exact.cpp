#include "dg/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "dg/match.hpp"
#include "dg/parser.hpp"

namespace dg {

using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------- ladders

LadderMatrices ladder_matrices(int n_max) {
  if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "n_max must be at least 1");
  const int n = n_max + 1;
  LadderMatrices m;
  m.n_max = n_max;
  m.creation = Eigen::MatrixXd::Zero(n, n);
  m.annihilation = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    m.creation(k + 1, k) = 1.0;
    m.annihilation(k, k + 1) = static_cast<double>(k + 1);
  }
  m.number = m.creation * m.annihilation;
  return m;
}

namespace {

using RMatrix = std::vector<std::vector<Rational>>;

RMatrix rzero(int n) { return RMatrix(n, std::vector<Rational>(n, Rational(0))); }

RMatrix rmul(const RMatrix& a, const RMatrix& b) {
  const int n = static_cast<int>(a.size());
  RMatrix c = rzero(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      if (a[i][k] != 0)
        for (int j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

std::string rational_str(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

}  // namespace

CommutatorReport commutator_q(int n_max) {
  const LadderMatrices lm = ladder_matrices(n_max);
  const int n = n_max + 1;
  RMatrix cr = rzero(n), an = rzero(n);
  for (int k = 0; k + 1 < n; ++k) {
    cr[k + 1][k] = 1;
    an[k][k + 1] = k + 1;
  }
  RMatrix a_ad = rmul(an, cr), ad_a = rmul(cr, an);
  RMatrix comm = rzero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) comm[i][j] = a_ad[i][j] - ad_a[i][j];

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && comm[i][j] != 0)
        throw Error(ErrorKind::InterpolationFailure, "commutator is not diagonal");
  if (comm[0][0] != 1) throw Error(ErrorKind::InterpolationFailure, "commutator does not fix the vacuum");

  // Q(k) = (c_k - 1)/k at the nonzero eigenvalues k = 1..n_max; Newton form
  // then expanded to monomials.
  std::vector<Rational> xs, ys;
  for (int k = 1; k <= n_max; ++k) {
    xs.emplace_back(k);
    ys.push_back((comm[k][k] - 1) / Rational(k));
  }
  std::vector<Rational> dd = ys;
  for (std::size_t j = 1; j < xs.size(); ++j)
    for (std::size_t i = xs.size() - 1; i >= j; --i) {
      dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - j]);
      if (i == j) break;
    }
  std::vector<Rational> coef(xs.size(), Rational(0));
  std::vector<Rational> basis{Rational(1)};  // prod_{m<j} (x - x_m)
  for (std::size_t j = 0; j < xs.size(); ++j) {
    for (std::size_t i = 0; i < basis.size(); ++i) coef[i] += dd[j] * basis[i];
    std::vector<Rational> next(basis.size() + 1, Rational(0));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      next[i + 1] += basis[i];
      next[i] -= basis[i] * xs[j];
    }
    basis = std::move(next);
  }

  CommutatorReport rep;
  rep.n_max = n_max;
  rep.degree = -1;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    rep.q_exact.push_back(rational_str(coef[i]));
    rep.q.push_back(static_cast<double>(coef[i]));
    if (coef[i] != 0) rep.degree = static_cast<int>(i);
  }

  rep.commutator = lm.annihilation * lm.creation - lm.creation * lm.annihilation;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(n, n);
  bool exact_zero = true;
  // Q(k) is summed exactly: the monomial coefficients alternate in sign and
  // grow fast enough that a double Horner sum loses ~1e-12 by n_max = 8.
  for (int k = 0; k < n; ++k) {
    Rational qr = 0, pr = 1;
    for (std::size_t i = 0; i < coef.size(); ++i) {
      qr += coef[i] * pr;
      pr *= k;
    }
    rhs(k, k) += lm.number(k, k) * static_cast<double>(qr);
    if (comm[k][k] != 1 + Rational(k) * qr) exact_zero = false;
  }
  rep.residual = (rep.commutator - rhs).norm();
  rep.exact_residual_zero = exact_zero;
  rep.boundary_deviation = rep.commutator(n_max, n_max) - 1.0;
  return rep;
}

std::string commutator_table(const CommutatorReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "n_max\t" << r.n_max << "\n";
  os << "degree\t" << r.degree << "\n";
  os << "residual\t" << r.residual << "\n";
  os << "boundary_deviation\t" << r.boundary_deviation << "\n";
  for (std::size_t i = 0; i < r.q_exact.size(); ++i) os << "q" << i << "\t" << r.q_exact[i] << "\n";
  os << "diagonal";
  for (int k = 0; k <= r.n_max; ++k) os << "\t" << r.commutator(k, k);
  os << "\n";
  return os.str();
}

// ------------------------------------------------------------ state space

StateSpace::StateSpace(std::shared_ptr<const CompiledGrammar> cg, std::vector<GroundTerm> slots,
                       std::vector<std::int64_t> caps)
    : cg_(std::move(cg)), slots_(std::move(slots)), caps_(std::move(caps)) {
  size_ = 1;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    stride_.push_back(size_);
    size_ *= static_cast<std::size_t>(caps_[i] + 1);
    slot_index_[slots_[i]] = i;
  }
}

std::optional<std::size_t> StateSpace::slot_of(const GroundTerm& t) const {
  auto it = slot_index_.find(t);
  if (it == slot_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::int64_t> StateSpace::occupation(std::size_t index) const {
  std::vector<std::int64_t> occ(slots_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const auto base = static_cast<std::size_t>(caps_[i] + 1);
    occ[i] = static_cast<std::int64_t>(index % base);
    index /= base;
  }
  return occ;
}

std::size_t StateSpace::index_of_occupation(const std::vector<std::int64_t>& occ) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < slots_.size(); ++i) idx += static_cast<std::size_t>(occ[i]) * stride_[i];
  return idx;
}

PoolState StateSpace::state(std::size_t index) const {
  PoolState p(cg_->schema);
  const auto occ = occupation(index);
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (occ[i] > 0) p.add(slots_[i], occ[i]);
  return p;
}

std::optional<std::size_t> StateSpace::index_of(const PoolState& p) const {
  std::size_t idx = 0;
  for (const auto& [t, n] : p.counts()) {
    auto s = slot_of(t);
    if (!s || n > caps_[*s]) return std::nullopt;
    idx += static_cast<std::size_t>(n) * stride_[*s];
  }
  return idx;
}

Eigen::VectorXd StateSpace::point_mass(const PoolState& p) const {
  auto idx = index_of(p);
  if (!idx) throw Error(ErrorKind::InvalidArgument, "initial pool lies outside the enumerated state space");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size_));
  v[static_cast<Eigen::Index>(*idx)] = 1.0;
  return v;
}

Distribution StateSpace::to_distribution(const Eigen::VectorXd& v) const {
  Distribution d;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) d[state(static_cast<std::size_t>(i)).counts()] = v[i];
  return d;
}

Eigen::VectorXd StateSpace::from_distribution(const Distribution& d) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size_));
  for (const auto& [counts, pr] : d) {
    PoolState p(cg_->schema);
    for (const auto& [t, n] : counts) p.add(t, n);
    auto idx = index_of(p);
    if (!idx) throw Error(ErrorKind::InvalidArgument, "distribution has support outside the state space");
    v[static_cast<Eigen::Index>(*idx)] += pr;
  }
  return v;
}

std::string StateSpace::describe(std::size_t index) const { return describe_pool(cg_->g(), state(index)); }

StateSpace enumerate_states(std::shared_ptr<const CompiledGrammar> cg, const StateBounds& bounds) {
  const Grammar& g = cg->g();
  std::vector<GroundTerm> slots;
  std::vector<std::int64_t> caps;
  long double size = 1.0L;
  for (std::uint32_t ti = 0; ti < g.types.size(); ++ti) {
    const TypeDecl& decl = g.types[ti];
    std::optional<std::int64_t> cap = decl.max_copy;
    if (auto it = bounds.type_caps.find(decl.name); it != bounds.type_caps.end())
      cap = cap ? std::min(*cap, it->second) : it->second;
    else if (!cap)
      cap = bounds.cap;
    if (!cap)
      throw Error(ErrorKind::InfiniteSpace, "type " + decl.name + " has no copy cap; pass a bound", decl.name);
    if (*cap < 0) throw Error(ErrorKind::InvalidArgument, "negative cap for type " + decl.name);
    std::vector<std::vector<Value>> domains;
    for (std::size_t i = 0; i < decl.signature.size(); ++i) {
      const Space& s = g.slot_space(decl, i);
      if (!s.finite())
        throw Error(ErrorKind::InfiniteSpace, "type " + decl.name + " has a slot over infinite space " + s.name,
                    decl.name);
      domains.push_back(s.domain());
    }
    std::vector<std::size_t> pos(domains.size(), 0);
    bool empty_domain = std::any_of(domains.begin(), domains.end(), [](const auto& d) { return d.empty(); });
    if (empty_domain) continue;
    while (true) {
      GroundTerm t;
      t.type = ti;
      for (std::size_t i = 0; i < domains.size(); ++i) t.args.push_back(domains[i][pos[i]]);
      slots.push_back(std::move(t));
      caps.push_back(*cap);
      size *= static_cast<long double>(*cap + 1);
      if (size > static_cast<long double>(bounds.limit))
        throw Error(ErrorKind::StateSpaceTooLarge,
                    "state space exceeds the limit of " + std::to_string(bounds.limit) + " states");
      std::size_t k = domains.size();
      bool done = true;
      while (k > 0) {
        --k;
        if (++pos[k] < domains[k].size()) {
          done = false;
          break;
        }
        pos[k] = 0;
      }
      if (done) break;
    }
  }
  return StateSpace(std::move(cg), std::move(slots), std::move(caps));
}

// -------------------------------------------------------------- operators

SparseMatrix build_rule_operator(const StateSpace& ss, std::size_t rule_index) {
  const CompiledGrammar& cg = ss.compiled();
  const CompiledRule& r = cg.rules.at(rule_index);
  std::vector<std::vector<Value>> domains;
  for (const auto& v : r.vars) {
    if (!v.space->finite())
      throw Error(ErrorKind::NonFiniteKernel, "variable " + v.name + " ranges over infinite space " + v.space->name,
                  r.id);
    domains.push_back(v.space->domain());
  }
  const auto n = static_cast<Eigen::Index>(ss.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& d : domains)
    if (d.empty()) return SparseMatrix(n, n);

  std::vector<std::size_t> pos(domains.size(), 0);
  std::vector<Value> values(domains.size());
  while (true) {
    Substitution theta;
    for (std::size_t i = 0; i < domains.size(); ++i) {
      values[i] = domains[i][pos[i]];
      theta.bind(r.vars[i].name, values[i]);
    }
    const double rho = eval_rate(r.rate, theta);
    if (rho > 0.0) {
      std::vector<std::size_t> ann, cre;
      bool representable = true;
      for (const auto& t : instantiate(r.lhs, values)) {
        auto s = ss.slot_of(t);
        if (!s) representable = false;
        else ann.push_back(*s);
      }
      for (const auto& t : instantiate(r.rhs, values)) {
        auto s = ss.slot_of(t);
        if (!s) representable = false;
        else cre.push_back(*s);
      }
      if (representable) {
        const auto& caps = ss.caps();
        for (std::size_t src = 0; src < ss.size(); ++src) {
          auto occ = ss.occupation(src);
          double amp = 1.0;
          for (std::size_t s : ann) {
            amp *= static_cast<double>(occ[s]);
            if (amp == 0.0) break;
            --occ[s];
          }
          if (amp == 0.0) continue;
          bool ok = true;
          for (std::size_t s : cre)
            if (++occ[s] > caps[s]) ok = false;
          if (!ok) continue;
          trip.emplace_back(static_cast<Eigen::Index>(ss.index_of_occupation(occ)), static_cast<Eigen::Index>(src),
                            rho * amp);
        }
      }
    }
    std::size_t k = domains.size();
    bool done = true;
    while (k > 0) {
      --k;
      if (++pos[k] < domains[k].size()) {
        done = false;
        break;
      }
      pos[k] = 0;
    }
    if (done) break;
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

GeneratorSet build_generator(const StateSpace& ss) {
  const CompiledGrammar& cg = ss.compiled();
  if (cg.has_solve())
    throw Error(ErrorKind::SolveInStochasticGrammar, "exact operators need a jump-only grammar");
  const auto n = static_cast<Eigen::Index>(ss.size());
  GeneratorSet gen;
  gen.hhat = SparseMatrix(n, n);
  for (std::size_t r = 0; r < cg.rules.size(); ++r) gen.hhat += build_rule_operator(ss, r);
  gen.hhat.makeCompressed();
  gen.d = Eigen::VectorXd::Zero(n);
  for (Eigen::Index c = 0; c < gen.hhat.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(gen.hhat, c); it; ++it) gen.d[c] += it.value();
  SparseMatrix dm(n, n);
  std::vector<Eigen::Triplet<double>> diag;
  for (Eigen::Index i = 0; i < n; ++i)
    if (gen.d[i] != 0.0) diag.emplace_back(i, i, gen.d[i]);
  dm.setFromTriplets(diag.begin(), diag.end());
  gen.h = gen.hhat - dm;
  gen.h.makeCompressed();
  return gen;
}

// -------------------------------------------------------------- evolution

namespace {

constexpr Eigen::Index kDenseBelow = 200;

void check_distribution(const GeneratorSet& gen, const Eigen::VectorXd& p0) {
  if (p0.size() != gen.h.cols()) throw Error(ErrorKind::InvalidArgument, "distribution has the wrong dimension");
}

}  // namespace

Eigen::VectorXd evolve_master(const GeneratorSet& gen, const Eigen::VectorXd& p0, double t) {
  check_distribution(gen, p0);
  if (t < 0.0) throw Error(ErrorKind::InvalidArgument, "negative evolution time");
  const double lambda = gen.d.size() ? gen.d.maxCoeff() : 0.0;
  if (t == 0.0 || lambda <= 0.0) return p0;
  const double lt = lambda * t;
  const bool dense = gen.h.rows() < kDenseBelow;
  Eigen::MatrixXd hd;
  if (dense) hd = Eigen::MatrixXd(gen.h);
  auto step = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    if (dense) return v + (hd * v) / lambda;
    return v + (gen.h * v) / lambda;
  };
  Eigen::VectorXd v = p0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(p0.size());
  double cum = 0.0;
  const double log_lt = std::log(lt);
  const auto max_k = static_cast<std::size_t>(lt + 60.0 * std::sqrt(lt) + 200.0);
  for (std::size_t k = 0;; ++k) {
    const double w = std::exp(-lt + static_cast<double>(k) * log_lt - std::lgamma(static_cast<double>(k) + 1.0));
    acc += w * v;
    cum += w;
    if ((static_cast<double>(k) >= lt && 1.0 - cum < 1e-10) || k >= max_k) break;
    v = step(v);
  }
  for (Eigen::Index i = 0; i < acc.size(); ++i)
    if (acc[i] < 0.0) acc[i] = 0.0;
  const double s = acc.sum();
  if (s > 0.0) acc /= s;
  return acc;
}

Eigen::VectorXd evolve_discrete_exact(const GeneratorSet& gen, const Eigen::VectorXd& p0, std::size_t s) {
  check_distribution(gen, p0);
  Eigen::VectorXd v = p0;
  for (std::size_t k = 0; k < s; ++k) {
    v = gen.hhat * v;
    const double z = v.sum();
    if (!(z > std::numeric_limits<double>::min()))
      throw Error(ErrorKind::ZeroNormalizer, "all probability mass absorbed after " + std::to_string(k + 1) + " steps");
    v /= z;  // the final normalization absorbs every intermediate scale
  }
  const double z = v.sum();
  if (!(z > 0.0)) throw Error(ErrorKind::ZeroNormalizer, "initial distribution has no mass");
  return v / z;
}

Eigen::VectorXd evolve_embedded(const GeneratorSet& gen, const Eigen::VectorXd& p0, std::size_t s) {
  check_distribution(gen, p0);
  Eigen::VectorXd v = p0;
  for (std::size_t k = 0; k < s; ++k) {
    Eigen::VectorXd scaled = Eigen::VectorXd::Zero(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (gen.d[i] > 0.0) scaled[i] = v[i] / gen.d[i];
    v = gen.hhat * scaled;
  }
  const double z = v.sum();
  if (!(z > 0.0)) throw Error(ErrorKind::ZeroNormalizer, "every embedded path is absorbed");
  return v / z;
}

Eigen::VectorXd evolve_conditioned(const GeneratorSet& gen, const Eigen::VectorXd& p0, double t, std::size_t s) {
  check_distribution(gen, p0);
  if (t <= 0.0) throw Error(ErrorKind::InvalidArgument, "conditioning needs a positive time");
  const std::size_t blocks = s + 1;
  // Augmented generator: -D on the diagonal blocks, hhat on the subdiagonal.
  auto apply = [&](const std::vector<Eigen::VectorXd>& x) {
    std::vector<Eigen::VectorXd> y(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
      y[b] = -gen.d.cwiseProduct(x[b]);
      if (b > 0) y[b] += gen.hhat * x[b - 1];
    }
    return y;
  };
  const double norm = 2.0 * (gen.d.size() ? gen.d.maxCoeff() : 0.0);
  const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(norm * t / 0.5)));
  const double tau = t / static_cast<double>(pieces);
  std::vector<Eigen::VectorXd> x(blocks, Eigen::VectorXd::Zero(p0.size()));
  x[0] = p0;
  for (std::size_t piece = 0; piece < pieces; ++piece) {
    std::vector<Eigen::VectorXd> acc = x, term = x;
    for (std::size_t k = 1; k < 400; ++k) {
      term = apply(term);
      bool converged = k > s;
      for (std::size_t b = 0; b < blocks; ++b) {
        term[b] *= tau / static_cast<double>(k);
        acc[b] += term[b];
        const double tn = term[b].lpNorm<1>(), an = acc[b].lpNorm<1>();
        if (tn > 1e-18 * an) converged = false;
      }
      if (converged) break;
    }
    x = std::move(acc);
  }
  Eigen::VectorXd out = x[s];
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out[i] < 0.0) out[i] = 0.0;
  const double z = out.sum();
  if (!(z > 0.0)) throw Error(ErrorKind::ZeroNormalizer, "no path fires exactly " + std::to_string(s) + " times");
  return out / z;
}

std::string matrix_triplets(const SparseMatrix& m) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) os << it.row() << " " << it.col() << " " << it.value() << "\n";
  return os.str();
}

}  // namespace dg
