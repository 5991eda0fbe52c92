#include "compsyn/dfa.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <utility>

namespace compsyn {

namespace {

// Interned structural copy of the formula tree so derivative results can be
// deduplicated by node id.
struct Node {
  FOp op;
  int atom = -1;
  int a = -1;
  int b = -1;
};

using Term = std::vector<int>;  // conjunction of node ids, sorted
using Dnf = std::vector<Term>;  // disjunction of terms, sorted; {} = false, {{}} = true

class Builder {
 public:
  int intern(FOp op, int atom, int a, int b) {
    const auto key = std::make_tuple(op, atom, a, b);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    nodes_.push_back({op, atom, a, b});
    const int id = static_cast<int>(nodes_.size()) - 1;
    memo_.emplace(key, id);
    return id;
  }

  int from(const Formula& f) {
    switch (f.op) {
      case FOp::True: return intern(FOp::True, -1, -1, -1);
      case FOp::False: return intern(FOp::False, -1, -1, -1);
      case FOp::Atom: return intern(FOp::Atom, f.atom, -1, -1);
      case FOp::NotAtom: return intern(FOp::NotAtom, f.atom, -1, -1);
      case FOp::And: return intern(FOp::And, -1, from(*f.lhs), from(*f.rhs));
      case FOp::Or: return intern(FOp::Or, -1, from(*f.lhs), from(*f.rhs));
      case FOp::Next: return intern(FOp::Next, -1, from(*f.lhs), -1);
      case FOp::Until: return intern(FOp::Until, -1, from(*f.lhs), from(*f.rhs));
    }
    throw std::logic_error("unreachable");
  }

  const Node& node(int id) const { return nodes_[id]; }

 private:
  std::vector<Node> nodes_;
  std::map<std::tuple<FOp, int, int, int>, int> memo_;
};

Dnf dnf_false() { return {}; }
Dnf dnf_true() { return {Term{}}; }
bool is_false(const Dnf& d) { return d.empty(); }
bool is_true(const Dnf& d) { return d.size() == 1 && d[0].empty(); }

bool term_subset(const Term& small, const Term& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

// Sort terms, drop duplicates and any term subsumed by a smaller one.
Dnf canonize(Dnf d) {
  std::sort(d.begin(), d.end(), [](const Term& x, const Term& y) {
    if (x.size() != y.size()) return x.size() < y.size();
    return x < y;
  });
  Dnf out;
  for (auto& t : d) {
    bool absorbed = false;
    for (const auto& kept : out)
      if (term_subset(kept, t)) {
        absorbed = true;
        break;
      }
    if (!absorbed) out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Dnf dnf_or(const Dnf& x, const Dnf& y) {
  Dnf all = x;
  all.insert(all.end(), y.begin(), y.end());
  return canonize(std::move(all));
}

Dnf dnf_and(const Dnf& x, const Dnf& y) {
  Dnf all;
  for (const auto& tx : x)
    for (const auto& ty : y) {
      Term t = tx;
      t.insert(t.end(), ty.begin(), ty.end());
      std::sort(t.begin(), t.end());
      t.erase(std::unique(t.begin(), t.end()), t.end());
      all.push_back(std::move(t));
    }
  return canonize(std::move(all));
}

// Obligation of a node as a disjunction of conjunctions of temporal literals.
Dnf dnf_of(const Builder& b, int id) {
  const Node& n = b.node(id);
  switch (n.op) {
    case FOp::True: return dnf_true();
    case FOp::False: return dnf_false();
    case FOp::Atom:
    case FOp::NotAtom:
    case FOp::Next:
    case FOp::Until: return {Term{id}};
    case FOp::And: return dnf_and(dnf_of(b, n.a), dnf_of(b, n.b));
    case FOp::Or: return dnf_or(dnf_of(b, n.a), dnf_of(b, n.b));
  }
  throw std::logic_error("unreachable");
}

// One-letter derivative: the obligation that remains after reading `letter`.
Dnf deriv(const Builder& b, int id, std::uint32_t letter) {
  const Node& n = b.node(id);
  switch (n.op) {
    case FOp::True: return dnf_true();
    case FOp::False: return dnf_false();
    case FOp::Atom: return ((letter >> n.atom) & 1u) ? dnf_true() : dnf_false();
    case FOp::NotAtom: return ((letter >> n.atom) & 1u) ? dnf_false() : dnf_true();
    case FOp::And: return dnf_and(deriv(b, n.a, letter), deriv(b, n.b, letter));
    case FOp::Or: return dnf_or(deriv(b, n.a, letter), deriv(b, n.b, letter));
    case FOp::Next: return dnf_of(b, n.a);
    case FOp::Until:
      return dnf_or(deriv(b, n.b, letter), dnf_and(deriv(b, n.a, letter), Dnf{Term{id}}));
  }
  throw std::logic_error("unreachable");
}

Dnf deriv_state(const Builder& b, const Dnf& state, std::uint32_t letter) {
  Dnf out = dnf_false();
  for (const auto& term : state) {
    Dnf acc = dnf_true();
    for (int lit : term) {
      acc = dnf_and(acc, deriv(b, lit, letter));
      if (is_false(acc)) break;
    }
    out = dnf_or(out, acc);
    if (is_true(out)) break;
  }
  return out;
}

}  // namespace

std::vector<int> CoSafetyDFA::live_states_at(int d) const {
  std::vector<int> out;
  for (int q = 0; q < n_states; ++q)
    if (depth[q] == d) out.push_back(q);
  return out;
}

CoSafetyDFA to_dfa(const Formula& f, int horizon, int n_atoms) {
  if (horizon < 0) throw std::invalid_argument("to_dfa: horizon must be >= 0");
  if (n_atoms < 0 || n_atoms > 20)
    throw std::invalid_argument("to_dfa: atom count out of range");

  Builder b;
  const int root = b.from(f);
  const Dnf init = dnf_of(b, root);
  const int n_letters = 1 << n_atoms;

  // Levelled subset-free state space: states discovered at level d are only
  // merged with states at the same level.
  std::vector<Dnf> states;            // live states in discovery order
  std::vector<int> state_depth;
  std::vector<std::vector<int>> raw;  // transitions with -1 accept, -2 reject
  constexpr int kAccept = -1;
  constexpr int kReject = -2;

  int initial_code;
  if (is_true(init)) {
    initial_code = kAccept;
  } else if (is_false(init)) {
    initial_code = kReject;
  } else {
    states.push_back(init);
    state_depth.push_back(0);
    initial_code = 0;
  }

  std::size_t frontier_begin = 0;
  for (int level = 0; level <= horizon; ++level) {
    const std::size_t frontier_end = states.size();
    std::map<Dnf, int> next_ids;
    for (std::size_t s = frontier_begin; s < frontier_end; ++s) {
      raw.emplace_back(n_letters, kReject);
      for (int letter = 0; letter < n_letters; ++letter) {
        Dnf nxt = deriv_state(b, states[s], static_cast<std::uint32_t>(letter));
        int code;
        if (is_true(nxt)) {
          code = kAccept;
        } else if (is_false(nxt) || level == horizon) {
          // Beyond the last letter no obligation can still be met.
          code = kReject;
        } else {
          auto it = next_ids.find(nxt);
          if (it != next_ids.end()) {
            code = it->second;
          } else {
            states.push_back(nxt);
            state_depth.push_back(level + 1);
            code = static_cast<int>(states.size()) - 1;
            next_ids.emplace(std::move(nxt), code);
          }
        }
        raw[s][letter] = code;
      }
      if (states.size() > 200000)
        throw std::invalid_argument("to_dfa: state budget exceeded");
    }
    frontier_begin = frontier_end;
  }

  CoSafetyDFA dfa;
  dfa.horizon = horizon;
  dfa.n_atoms = n_atoms;
  dfa.n_letters = n_letters;
  const int n_live = static_cast<int>(states.size());
  dfa.n_states = n_live + 2;
  dfa.accept_state = n_live;
  dfa.reject_state = n_live + 1;
  dfa.initial = initial_code == kAccept   ? dfa.accept_state
                : initial_code == kReject ? dfa.reject_state
                                          : initial_code;
  dfa.depth.assign(dfa.n_states, -1);
  for (int q = 0; q < n_live; ++q) dfa.depth[q] = state_depth[q];
  dfa.delta.assign(dfa.n_states, std::vector<int>(n_letters, 0));
  auto decode = [&](int code) {
    if (code == kAccept) return dfa.accept_state;
    if (code == kReject) return dfa.reject_state;
    return code;
  };
  for (int q = 0; q < n_live; ++q)
    for (int letter = 0; letter < n_letters; ++letter)
      dfa.delta[q][letter] = decode(raw[q][letter]);
  for (int letter = 0; letter < n_letters; ++letter) {
    dfa.delta[dfa.accept_state][letter] = dfa.accept_state;
    dfa.delta[dfa.reject_state][letter] = dfa.reject_state;
  }
  return dfa;
}

bool dfa_accepts(const CoSafetyDFA& dfa, const std::vector<std::uint32_t>& word) {
  int q = dfa.initial;
  for (std::uint32_t letter : word) {
    if (letter >= static_cast<std::uint32_t>(dfa.n_letters))
      throw std::invalid_argument("dfa_accepts: letter out of range");
    q = dfa.step(q, letter);
  }
  return q == dfa.accept_state;
}

}  // namespace compsyn
