#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dg/compiled.hpp"
#include "dg/dtmc.hpp"

namespace dg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Truncated single-mode ladder operators on |0>..|n_max>.
struct LadderMatrices {
  int n_max = 1;
  Eigen::MatrixXd creation;      // ones on the first subdiagonal
  Eigen::MatrixXd annihilation;  // m at (m-1, m)
  Eigen::MatrixXd number;        // creation * annihilation
};
LadderMatrices ladder_matrices(int n_max);

/// [a, a^] written as I + N Q(N) with Q interpolated on N's eigenvalues.
struct CommutatorReport {
  int n_max = 1;
  std::vector<std::string> q_exact;  // monomial coefficients, lowest order first
  std::vector<double> q;
  int degree = 0;                    // -1 for the zero polynomial
  double residual = 0.0;             // Frobenius norm, evaluated in double
  bool exact_residual_zero = false;  // the same residual in rational arithmetic
  Eigen::MatrixXd commutator;
  double boundary_deviation = 0.0;   // [a,a^] at the cap minus 1
};
CommutatorReport commutator_q(int n_max);
std::string commutator_table(const CommutatorReport& r);

struct StateBounds {
  std::optional<std::int64_t> cap;              // applied to unbounded types
  std::map<std::string, std::int64_t> type_caps;  // per-type override
  std::size_t limit = 2'000'000;
};

/// Every copy-number function over the grammar's ground terms within caps,
/// indexed in mixed radix (first slot varies fastest).
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(std::shared_ptr<const CompiledGrammar> cg, std::vector<GroundTerm> slots,
             std::vector<std::int64_t> caps);

  std::size_t size() const { return size_; }
  const std::vector<GroundTerm>& slots() const { return slots_; }
  const std::vector<std::int64_t>& caps() const { return caps_; }
  std::optional<std::size_t> slot_of(const GroundTerm& t) const;
  const CompiledGrammar& compiled() const { return *cg_; }

  std::vector<std::int64_t> occupation(std::size_t index) const;
  std::size_t index_of_occupation(const std::vector<std::int64_t>& occ) const;
  PoolState state(std::size_t index) const;
  /// nullopt when the pool holds a term outside the space or above a cap.
  std::optional<std::size_t> index_of(const PoolState& p) const;

  Eigen::VectorXd point_mass(const PoolState& p) const;
  Distribution to_distribution(const Eigen::VectorXd& v) const;
  Eigen::VectorXd from_distribution(const Distribution& d) const;
  std::string describe(std::size_t index) const;

 private:
  std::shared_ptr<const CompiledGrammar> cg_;
  std::vector<GroundTerm> slots_;
  std::vector<std::int64_t> caps_;
  std::vector<std::size_t> stride_;
  std::map<GroundTerm, std::size_t> slot_index_;
  std::size_t size_ = 0;
};

/// Throws InfiniteSpace, StateSpaceTooLarge.
StateSpace enumerate_states(std::shared_ptr<const CompiledGrammar> cg, const StateBounds& bounds = {});

/// O_r: sum over every assignment of the rule's variables of rho times the
/// creation product times the annihilation product. Entry (target, source).
SparseMatrix build_rule_operator(const StateSpace& ss, std::size_t rule_index);

struct GeneratorSet {
  SparseMatrix hhat;
  Eigen::VectorXd d;  // diagonal of D
  SparseMatrix h;     // hhat - D
};
GeneratorSet build_generator(const StateSpace& ss);

/// exp(tH) p0 by uniformization with Poisson tail below 1e-10.
Eigen::VectorXd evolve_master(const GeneratorSet& gen, const Eigen::VectorXd& p0, double t);

/// hhat^s p0 normalized once. Throws ZeroNormalizer.
Eigen::VectorXd evolve_discrete_exact(const GeneratorSet& gen, const Eigen::VectorXd& p0, std::size_t s);

/// Embedded jump chain: s steps of the column-normalized hhat; mass that
/// reaches an absorbing state is dropped and the rest renormalized.
Eigen::VectorXd evolve_embedded(const GeneratorSet& gen, const Eigen::VectorXd& p0, std::size_t s);

/// Distribution at time t restricted to paths with exactly s firings,
/// normalized. Evaluated through the block-bidiagonal augmented generator.
Eigen::VectorXd evolve_conditioned(const GeneratorSet& gen, const Eigen::VectorXd& p0, double t, std::size_t s);

/// Coordinate triplets, one `row col value` per line, column-major order.
std::string matrix_triplets(const SparseMatrix& m);

}  // namespace dg
