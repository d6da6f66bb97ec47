// Finitely presented difference fields over Q.  Generators are free
// (transformally transcendental, materialized at every shift) or affine-bound
// by sigma(a) = alpha*a + beta with alpha, beta over strictly earlier
// generators (materialized at shift 0 only).
#pragma once

#include <set>
#include <string>
#include <vector>

#include "dfield/exact.hpp"

namespace dfield {

// Elements are canonical rational functions in the materialized variables.
using Element = RatFunc;

struct GeneratorSpec {
  enum class Kind { Free, Affine };
  std::string name;
  Kind kind = Kind::Free;
  RatFunc linear;    // alpha
  RatFunc constant;  // beta
  int id = 0;        // declaration index, stable across sub-presentations
  bool is_free() const { return kind == Kind::Free; }
};

class Presentation {
 public:
  Presentation() = default;
  // Unchecked construction; call validate() for diagnostics.
  static Presentation from_specs(std::vector<GeneratorSpec> specs);

  // Checked extension; throws std::invalid_argument with the diagnostic.
  int add_free(const std::string& name);
  int add_affine(const std::string& name, const RatFunc& alpha, const RatFunc& beta);
  Presentation with_free(const std::string& name) const;
  Presentation with_affine(const std::string& name, const RatFunc& alpha, const RatFunc& beta) const;

  std::vector<std::string> validate() const;
  bool valid() const { return validate().empty(); }

  const std::vector<GeneratorSpec>& generators() const { return gens_; }
  const GeneratorSpec& spec(int id) const;
  const GeneratorSpec* find(const std::string& name) const;
  bool has(int id) const;
  int id_of(const std::string& name) const;
  int next_id() const { return next_id_; }
  bool all_free() const;

  Element gen(const std::string& name, int shift = 0) const;
  Element var(int id, int shift = 0) const;
  VarNamer namer() const;
  std::string str(const Element& x) const { return x.str(namer()); }

  // True if every variable of x is materializable here.
  bool contains(const Element& x) const;
  // Sub-presentation on the given generator ids (ids kept).
  Presentation restrict_to(const std::set<int>& ids) const;

  Element sigma(const Element& x, int k = 1) const;
  Element wp(const Element& x) const { return sigma(x, 1) - x; }
  bool is_fixed(const Element& x) const { return sigma(x, 1) == x; }

  // Shift window of a free generator inside x: (min, max); nullopt if absent.
  static std::optional<std::pair<int, int>> shift_window(const Element& x, int gen);

 private:
  RatFunc image(VarId v, int dir) const;
  std::vector<GeneratorSpec> gens_;
  int next_id_ = 0;
};

}  // namespace dfield
