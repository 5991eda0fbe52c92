#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace compsyn {

/// Syntax-restricted co-safe LTL over finite-word satisfaction:
///   phi := p | !p | phi & phi | phi | phi | X phi | phi U phi
/// Negation applies to atoms only. F phi and bounded G[0,k] phi are parser
/// sugar (F phi = true U phi; G[0,k] expands through nested X).
struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

enum class FOp { True, False, Atom, NotAtom, And, Or, Next, Until };

struct Formula {
  FOp op;
  int atom = -1;     // Atom/NotAtom
  FormulaPtr lhs;    // And/Or/Until left, Next child
  FormulaPtr rhs;    // And/Or/Until right

  static FormulaPtr mk_true();
  static FormulaPtr mk_false();
  static FormulaPtr atom_(int i);
  static FormulaPtr natom(int i);
  static FormulaPtr conj(FormulaPtr a, FormulaPtr b);
  static FormulaPtr disj(FormulaPtr a, FormulaPtr b);
  static FormulaPtr next(FormulaPtr a);
  static FormulaPtr until(FormulaPtr a, FormulaPtr b);
};

std::string to_string(const Formula& f, const std::vector<std::string>& atom_names);

struct ParsedSpec {
  FormulaPtr formula;
  std::vector<std::string> atoms;  // index = atom id
};

/// Parses the scLTL surface syntax. Precedence: ! > X > & > | > U, with U
/// right-associative. When `declared_atoms` is given, unknown identifiers are
/// an error; otherwise atoms are collected in order of first occurrence.
/// Throws std::invalid_argument with a position-anchored message.
ParsedSpec parse_scltl(const std::string& text,
                       const std::optional<std::vector<std::string>>& declared_atoms = {});

/// Letters are atom bitmasks. Strong finite-word semantics:
/// atoms/X require the position to exist; U requires a witness position.
bool word_satisfies(const Formula& f, const std::vector<std::uint32_t>& word);

}  // namespace compsyn
