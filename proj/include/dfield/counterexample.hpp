// Reconstruction of the 4-amalgamation counterexample: a free base with
// certified avoided equations, torsor closure steps, the twisted pair, the
// height-4 additive equation built from them, and its refutation chain.
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dfield/amalgamation.hpp"
#include "dfield/systems.hpp"

namespace dfield {

struct CounterexampleBase {
  Presentation presentation;  // single free generator g
  AvoidedRegistry registry;
};
CounterexampleBase build_base();

class ClosureRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClosureStep {
  Presentation presentation;  // p with the new generator
  AvoidedRegistry registry;   // re-certified over it
  int generator = -1;         // sigma(t) = t + f
};
// Throws ClosureRejected when f is outside p or some family loses its certificate.
ClosureStep closure_step(const Presentation& p, const AvoidedRegistry& registry, const Element& f,
                         const std::string& name = "");

// Adjoins a1 with sigma(a1) = g*a1 + g and a2 with sigma(a2) = (1/g)*a2 + 1/g.
Presentation adjoin_twisted_pair(const Presentation& p, const AvoidedRegistry& registry);

struct NoTorsorCheck {
  std::string which;
  Presentation field;  // the sub-presentation generated by the base and a_i
  CertifyResult certificate;
  SolveResult bounded;
};
NoTorsorCheck verify_no_torsor_over_twisted(const Presentation& p, const AvoidedRegistry& registry,
                                            const std::string& which, const SearchBounds& b = {6, 4, 2});

// wp(a1*a2) == a1 + a2 + 1, exactly.
bool verify_product_identity(const Presentation& p);

struct Height4Instance {
  SystemModel model;  // blocks {a1}, {a2}, {a3}, {a4} over the base
  AdditiveEquation equation;
  std::map<std::pair<int, int>, Element> c;  // (i<j) -> torsor element over corner {i,j}
  std::map<std::pair<int, int>, Element> torsor_target;  // (i<j) -> wp(c_ij)
  std::vector<std::string> checks;
};
// Requires a1, a2 and a generator t with sigma(t) = t + 1 in p.  With
// `realize_a2` every block instead carries sigma(a) = a + 1, which makes the
// pairwise torsors realizable in-field (the control variant).
Height4Instance build_height4_instance(const Presentation& p, bool realize_a2 = false);

struct ChainStep {
  std::string name;
  bool ok = false;
  std::vector<std::string> facts;
};

struct CounterexampleReport {
  std::vector<std::string> presentations;
  std::vector<std::string> identities;
  std::vector<std::string> bounded;
  std::vector<ChainStep> chain;
  std::vector<Certificate> certificates;
  std::vector<std::string> closure_steps;
  std::string verdict;  // "refuted with certificate chain", "decomposable", or "Unknown: ..."
  bool refuted() const { return verdict == "refuted with certificate chain"; }
};

CounterexampleReport refute_ff_decomposition(const Height4Instance& inst, const AvoidedRegistry& registry,
                                             const SearchBounds& b = {4, 3, 2});

// Witness-driven ff decomposition in which base torsors the recursion asks
// for are supplied by closure steps.  A blocked query outside the base ends
// the run; `blocked` then holds it together with its certificate.
struct ClosureRun {
  std::optional<Decomposition> decomposition;
  SystemModel model;  // with every closure generator adjoined
  std::vector<std::string> closure_steps;
  std::optional<WitnessUnavailable> blocked;
  std::optional<CertifyResult> blocked_certificate;
};
ClosureRun ff_decompose_with_closure(const SystemModel& m, const AdditiveEquation& eq, const AvoidedRegistry* registry,
                                     const SearchBounds& b, std::uint64_t seed = 1, int max_steps = 8);

// Whole pipeline from the free base.
CounterexampleReport verify_counterexample(const SearchBounds& b = {4, 3, 2}, bool control = false);

}  // namespace dfield
