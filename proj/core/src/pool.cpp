#include "dg/pool.hpp"

#include <sstream>

#include "dg/parser.hpp"

namespace dg {

std::shared_ptr<const PoolSchema> PoolSchema::from(const Grammar& g, std::int64_t total_guard) {
  auto s = std::make_shared<PoolSchema>();
  s->total_guard = total_guard;
  for (const auto& t : g.types) {
    s->names.push_back(t.name);
    s->caps.push_back(t.max_copy);
    std::vector<bool> oid;
    for (std::size_t i = 0; i < t.signature.size(); ++i)
      oid.push_back(g.slot_space(t, i).kind == SpaceKind::Oid);
    s->oid_slots.push_back(std::move(oid));
  }
  return s;
}

PoolState::PoolState() : counts_(std::make_shared<Counts>()) {}

PoolState::PoolState(std::shared_ptr<const PoolSchema> schema)
    : schema_(std::move(schema)), counts_(std::make_shared<Counts>()) {}

std::int64_t PoolState::copy_number(const GroundTerm& t) const {
  auto it = counts_->find(t);
  return it == counts_->end() ? 0 : it->second;
}

PoolState::Counts& PoolState::mutable_counts() {
  if (counts_.use_count() > 1) counts_ = std::make_shared<Counts>(*counts_);
  return *counts_;
}

void PoolState::add(const GroundTerm& t, std::int64_t n) {
  if (n <= 0) return;
  std::optional<std::int64_t> cap;
  if (schema_ && t.type < schema_->caps.size()) cap = schema_->caps[t.type];
  const std::int64_t have = copy_number(t);
  if (cap && have + n > *cap) {
    const std::string name = schema_->names[t.type];
    throw Error(ErrorKind::CapExceeded,
                "adding " + std::to_string(n) + " cop" + (n == 1 ? "y" : "ies") + " of a " + name +
                    " term would exceed its cap of " + std::to_string(*cap));
  }
  const std::int64_t guard = schema_ ? schema_->total_guard : 10'000'000;
  if (total_ + n > guard)
    throw Error(ErrorKind::PoolCapGuardExceeded,
                "pool total would exceed the guard of " + std::to_string(guard) + " terms");
  mutable_counts()[t] = have + n;
  total_ += n;
  if (schema_ && t.type < schema_->oid_slots.size()) {
    const auto& oid = schema_->oid_slots[t.type];
    for (std::size_t i = 0; i < t.args.size() && i < oid.size(); ++i)
      if (oid[i] && t.args[i].is_integer() && t.args[i].as_integer() >= next_oid_)
        next_oid_ = t.args[i].as_integer() + 1;
  }
}

void PoolState::remove(const GroundTerm& t, std::int64_t n) {
  if (n <= 0) return;
  const std::int64_t have = copy_number(t);
  if (have < n)
    throw Error(ErrorKind::InsufficientCopies,
                "need " + std::to_string(n) + " cop" + (n == 1 ? "y" : "ies") + ", pool has " +
                    std::to_string(have));
  auto& c = mutable_counts();
  if (have == n)
    c.erase(t);
  else
    c[t] = have - n;
  total_ -= n;
}

std::pair<std::vector<std::int64_t>, PoolState> PoolState::fresh_oids(std::int64_t k) const {
  std::vector<std::int64_t> ids;
  for (std::int64_t i = 0; i < k; ++i) ids.push_back(next_oid_ + i);
  PoolState out = *this;
  out.next_oid_ = next_oid_ + std::max<std::int64_t>(k, 0);
  return {std::move(ids), std::move(out)};
}

std::pair<PoolState::Counts::const_iterator, PoolState::Counts::const_iterator> PoolState::type_range(
    std::uint32_t type) const {
  GroundTerm lo{type, {}};
  GroundTerm hi{type + 1, {}};
  return {counts_->lower_bound(lo), counts_->lower_bound(hi)};
}

void apply_event_in_place(PoolState& p, const Event& e) {
  // consume everything first so that multiplicities are checked together
  std::map<GroundTerm, std::int64_t> need;
  for (const auto& t : e.consumed) ++need[t];
  for (const auto& [t, n] : need)
    if (p.copy_number(t) < n)
      throw Error(ErrorKind::InsufficientCopies,
                  "event of rule '" + e.rule + "' consumes " + std::to_string(n) + " copies of a term, pool has " +
                      std::to_string(p.copy_number(t)));
  for (const auto& [t, n] : need) p.remove(t, n);
  for (const auto& t : e.produced) p.add(t, 1);
}

PoolState apply_event(const PoolState& p, const Event& e) {
  PoolState out = p;
  apply_event_in_place(out, e);
  return out;
}

PoolState initial_pool(const Grammar& g, std::shared_ptr<const PoolSchema> schema) {
  PoolState p(schema ? std::move(schema) : PoolSchema::from(g));
  for (const auto& e : g.initial) {
    auto idx = g.type_index(e.term.type);
    if (!idx) throw Error(ErrorKind::UnknownIdentifier, "unknown type '" + e.term.type + "' in init");
    GroundTerm t{*idx, {}};
    for (const auto& a : e.term.args) t.args.push_back(a.value);
    p.add(t, e.count);
  }
  return p;
}

std::string describe_pool(const Grammar& g, const PoolState& p) {
  std::string s = "{";
  bool first = true;
  for (const auto& [t, n] : p.counts()) {
    s += (first ? "" : ", ") + render_ground(g, t) + ":" + std::to_string(n);
    first = false;
  }
  return s + "}";
}

std::string serialize_pool(const Grammar& g, const PoolState& p) {
  std::ostringstream os;
  os << "next_oid " << p.next_oid() << "\n";
  for (const auto& [t, n] : p.counts()) os << render_ground(g, t) << " " << n << "\n";
  return os.str();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Value parse_slot_value(const Space& slot, const std::string& tok) {
  if (tok == "nil" && slot.kind == SpaceKind::Oid) return Value::integer(kNilOid);
  if (tok.size() >= 2 && tok.front() == '\'' && tok.back() == '\'') {
    const std::string v = tok.substr(1, tok.size() - 2);
    for (std::size_t i = 0; i < slot.values.size(); ++i)
      if (slot.values[i] == v) return Value::integer(static_cast<std::int64_t>(i));
    throw Error(ErrorKind::InvalidConstant, "'" + v + "' is not a value of " + slot.name);
  }
  Number n = Number::parse(tok);
  if (slot.kind == SpaceKind::Real) return Value::real(n.to_double());
  if (!n.is_integer()) throw Error(ErrorKind::InvalidConstant, "expected an integer, got " + tok);
  return Value::integer(n.to_integer());
}

}  // namespace

GroundTerm parse_ground_term(const Grammar& g, const std::string& text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  const std::string name = trim(open == std::string::npos ? s : s.substr(0, open));
  auto idx = g.type_index(name);
  if (!idx) throw Error(ErrorKind::UnknownIdentifier, "unknown type '" + name + "'");
  const TypeDecl& decl = g.types[*idx];
  GroundTerm t{*idx, {}};
  if (open != std::string::npos) {
    const auto close = s.rfind(')');
    if (close == std::string::npos || close < open)
      throw Error(ErrorKind::Syntax, "unclosed argument list in '" + s + "'");
    std::string body = s.substr(open + 1, close - open - 1);
    std::vector<std::string> parts;
    std::string cur;
    bool quoted = false;
    for (char c : body) {
      if (c == '\'') quoted = !quoted;
      if (c == ',' && !quoted) {
        parts.push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty() || !parts.empty()) parts.push_back(trim(cur));
    if (parts.size() != decl.signature.size())
      throw Error(ErrorKind::ArityMismatch, name + " takes " + std::to_string(decl.signature.size()) + " argument(s)");
    for (std::size_t i = 0; i < parts.size(); ++i) {
      Value v = parse_slot_value(g.slot_space(decl, i), parts[i]);
      if (!g.slot_space(decl, i).contains(v))
        throw Error(ErrorKind::InvalidConstant, "value " + parts[i] + " outside space " + decl.signature[i]);
      t.args.push_back(v);
    }
  } else if (!decl.signature.empty()) {
    throw Error(ErrorKind::ArityMismatch, name + " takes " + std::to_string(decl.signature.size()) + " argument(s)");
  }
  return t;
}

PoolState parse_pool(const Grammar& g, const std::string& text, std::shared_ptr<const PoolSchema> schema) {
  PoolState p(schema ? std::move(schema) : PoolSchema::from(g));
  std::istringstream in(text);
  std::string line;
  std::int64_t next_oid = -1;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("next_oid", 0) == 0) {
      next_oid = std::stoll(trim(line.substr(8)));
      continue;
    }
    const auto sp = line.find_last_of(" \t");
    if (sp == std::string::npos) throw Error(ErrorKind::Syntax, "pool line without a count: " + line);
    const std::int64_t count = std::stoll(line.substr(sp + 1));
    p.add(parse_ground_term(g, line.substr(0, sp)), count);
  }
  if (next_oid >= 0) {
    if (next_oid < p.next_oid())
      throw Error(ErrorKind::InvalidConstant, "next_oid must exceed every OID in the pool");
    p.set_next_oid(next_oid);
  }
  return p;
}

}  // namespace dg
