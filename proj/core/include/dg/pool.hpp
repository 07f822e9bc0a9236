#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dg/grammar.hpp"
#include "dg/rate.hpp"

namespace dg {

/// Per-type facts the pool needs to enforce its invariants.
struct PoolSchema {
  std::vector<std::string> names;
  std::vector<std::optional<std::int64_t>> caps;
  std::vector<std::vector<bool>> oid_slots;
  std::int64_t total_guard = 10'000'000;

  static std::shared_ptr<const PoolSchema> from(const Grammar& g, std::int64_t total_guard = 10'000'000);
};

/// Multiset of grounded terms with an OID counter. Copies share storage
/// until one of them is modified.
class PoolState {
 public:
  using Counts = std::map<GroundTerm, std::int64_t>;

  PoolState();
  explicit PoolState(std::shared_ptr<const PoolSchema> schema);

  std::int64_t copy_number(const GroundTerm& t) const;
  const Counts& counts() const { return *counts_; }
  std::int64_t next_oid() const { return next_oid_; }
  std::int64_t total() const { return total_; }
  bool empty() const { return counts_->empty(); }
  const std::shared_ptr<const PoolSchema>& schema() const { return schema_; }

  /// Adds copies; throws CapExceeded or PoolCapGuardExceeded.
  void add(const GroundTerm& t, std::int64_t n = 1);
  /// Removes copies; throws InsufficientCopies.
  void remove(const GroundTerm& t, std::int64_t n = 1);
  void set_next_oid(std::int64_t v) { next_oid_ = v; }

  /// k consecutive fresh ids starting at next_oid, and the advanced state.
  std::pair<std::vector<std::int64_t>, PoolState> fresh_oids(std::int64_t k) const;

  /// Iteration range over the terms of one type.
  std::pair<Counts::const_iterator, Counts::const_iterator> type_range(std::uint32_t type) const;

  friend bool operator==(const PoolState& a, const PoolState& b) {
    return a.next_oid_ == b.next_oid_ && *a.counts_ == *b.counts_;
  }
  /// Copy numbers only, ignoring the OID counter.
  bool same_counts(const PoolState& other) const { return *counts_ == *other.counts_; }

 private:
  Counts& mutable_counts();

  std::shared_ptr<const PoolSchema> schema_;
  std::shared_ptr<Counts> counts_;
  std::int64_t next_oid_ = 0;
  std::int64_t total_ = 0;
};

struct Event {
  double time = 0.0;
  std::int64_t step = 0;
  std::size_t rule_index = 0;
  std::string rule;
  Substitution theta;
  std::vector<GroundTerm> consumed;
  std::vector<GroundTerm> produced;
};

/// Persistent update: the input pool is left untouched.
PoolState apply_event(const PoolState& p, const Event& e);
void apply_event_in_place(PoolState& p, const Event& e);

/// Pool described by the grammar's `init` declaration.
PoolState initial_pool(const Grammar& g, std::shared_ptr<const PoolSchema> schema = nullptr);

/// `next_oid N` followed by one `term count` line per entry.
std::string serialize_pool(const Grammar& g, const PoolState& p);
PoolState parse_pool(const Grammar& g, const std::string& text,
                     std::shared_ptr<const PoolSchema> schema = nullptr);
/// Parses one ground term in rendered form, e.g. `Cell(3, 'A', nil)`.
GroundTerm parse_ground_term(const Grammar& g, const std::string& text);

/// Single-line descriptor `{A(1):2, B:1}` used in distribution output.
std::string describe_pool(const Grammar& g, const PoolState& p);

}  // namespace dg
