// Acceptance run: one PASS/FAIL line per criterion, each checked against its
// wall-clock limit.  Exit status is the number of failures.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "character_oracle.hpp"
#include "dfield/cli.hpp"
#include "planted.hpp"
#include "random_elements.hpp"

using namespace dfield;
using namespace dfield::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<Outcome()> run;
};

bool contains(const std::vector<std::string>& xs, const std::string& s) {
  return std::find(xs.begin(), xs.end(), s) != xs.end();
}

std::vector<VarId> vars_of(const Presentation& p, int window = 1) {
  std::vector<VarId> vs;
  for (const auto& s : p.generators()) {
    if (s.is_free())
      for (int k = -window; k <= window; ++k) vs.push_back({s.id, k});
    else
      vs.push_back({s.id, 0});
  }
  return vs;
}

// Coefficients c1..cn of prod (X - r_k), leading coefficient 1 omitted.
std::vector<Element> monic_coefficients(const std::vector<Element>& roots) {
  std::vector<Element> poly{Element(1)};  // poly[k] = coefficient of X^(deg - k)
  for (const auto& r : roots) {
    std::vector<Element> next(poly.size() + 1);
    for (size_t k = 0; k < poly.size(); ++k) {
      next[k] += poly[k];
      next[k + 1] -= poly[k] * r;
    }
    poly = next;
  }
  return {poly.begin() + 1, poly.end()};
}

Outcome product_identity() {
  Outcome o;
  Presentation p;
  p.add_free("g");
  Element g = p.gen("g");
  p.add_affine("a1", g, g);
  p.add_affine("a2", g.inverse(), g.inverse());
  Element a1 = p.gen("a1"), a2 = p.gen("a2");
  o.require(p.wp(a1 * a2) == a1 + a2 + Element(1), "wp(a1*a2) differs from a1 + a2 + 1");
  o.require(verify_product_identity(p), "verify_product_identity rejected the pair");
  o.detail = o.ok ? "wp(a1*a2) = a1 + a2 + 1" : o.detail;
  return o;
}

Outcome decomposition_suite() {
  Outcome o;
  std::mt19937_64 rng(20261018);
  int passed = 0, total = 0;
  for (int n : {3, 4, 5}) {
    SystemModel m = free_singletons(n);
    GenericPoints pts(static_cast<std::uint64_t>(n));
    for (int k = 0; k < 50; ++k) {
      AdditiveEquation eq = assemble_planted(m, planted_family(m, rng));
      ++total;
      ValidationReport r = validate_decomposition(m, eq, decompose(m, eq, pts));
      if (r.ok) ++passed;
      o.require(r.ok, "height " + std::to_string(n) + " case " + std::to_string(k) + ": " +
                          (r.diagnostics.empty() ? "" : r.diagnostics.front()));
    }
  }
  if (o.ok) o.detail = std::to_string(passed) + "/" + std::to_string(total) + " valid";
  return o;
}

Outcome automorphism_laws() {
  Outcome o;
  Presentation p;
  p.add_free("g");
  Element g = p.gen("g");
  p.add_affine("a", g, g);
  p.add_affine("t", Element(1), g);
  auto vs = vars_of(p);
  std::mt19937_64 rng(303);
  for (int i = 0; i < 200; ++i) {
    Element x = random_ratfunc(rng, vs), y = random_ratfunc(rng, vs);
    o.require(p.sigma(x * y) == p.sigma(x) * p.sigma(y), "sigma(xy) at pair " + std::to_string(i));
    o.require(p.sigma(x + y) == p.sigma(x) + p.sigma(y), "sigma(x+y) at pair " + std::to_string(i));
    o.require(p.sigma(p.sigma(x), -1) == x && p.sigma(p.sigma(y, -1)) == y, "inverse at pair " + std::to_string(i));
  }
  if (o.ok) o.detail = "200 pairs over g, a, t";
  return o;
}

Outcome free_base_decisions() {
  Outcome o;
  Presentation e0;
  e0.add_free("g");
  Element g = e0.gen("g");
  std::vector<std::pair<std::string, SasEquation>> unsolvable;
  for (long z : {-3L, -2L, -1L, 1L, 2L, 3L})
    unsolvable.push_back({"s(x)/x = g^" + std::to_string(z), MultiplicativeSAS{g, z}});
  unsolvable.push_back({"s(x) - g*x = g", TwistedSAS{g, g}});
  unsolvable.push_back({"s(x) - (1/g)*x = 1/g", TwistedSAS{g.inverse(), g.inverse()}});
  for (const auto& [name, eq] : unsolvable) {
    Decision d = decide_free_base(e0, eq);
    const auto* u = std::get_if<Unsolvable>(&d);
    o.require(u != nullptr, name + " not decided unsolvable");
    if (!u) continue;
    std::string why;
    o.require(replay_certificate(e0, eq, nullptr, u->certificate, &why), name + " replay: " + why);
  }
  SasEquation sol = TwistedSAS{RatFunc(1), e0.gen("g", 1) - g};
  Decision d = decide_free_base(e0, sol);
  const auto* s = std::get_if<Solvable>(&d);
  o.require(s && s->witness == g && satisfies(e0, sol, s->witness), "s(x) - x = g[1] - g lacks witness g");
  if (o.ok) o.detail = "8 unsolvable with replayed certificates, witness g";
  return o;
}

Outcome twisted_torsor() {
  Outcome o;
  CounterexampleBase b = build_base();
  Presentation p = adjoin_twisted_pair(b.presentation, b.registry);
  NoTorsorCheck c = verify_no_torsor_over_twisted(p, b.registry, "a1", {6, 4, 2});
  const auto* cert = std::get_if<Certificate>(&c.certificate);
  o.require(cert != nullptr, "no certificate for T[a1]");
  if (!cert) return o;
  auto derived = cert->derived_equations();
  o.require(contains(derived, "s(y)/y = g^(m-n), n-m > 1"), "missing g-power case equation");
  o.require(contains(derived, "s(y) - (1/g)*y = 1/g"), "missing twisted case equation");
  SasEquation eq = TwistedSAS{RatFunc(1), c.field.gen("a1")};
  o.require(replay_certificate(c.field, eq, &b.registry, *cert), "certificate replay failed");
  o.require(std::holds_alternative<NoSolutionWithinBounds>(c.bounded), "bounded search at D=6, W=4 did not report NoSolution");
  if (o.ok) {
    const auto& nb = std::get<NoSolutionWithinBounds>(c.bounded);
    o.detail = "certificate over " + field_str(c.field) + ", " + std::to_string(nb.candidates) +
               " denominators searched at D=6, W=4";
  }
  return o;
}

Outcome counterexample_pipeline() {
  Outcome o;
  CounterexampleReport r = verify_counterexample({4, 3, 2}, false);
  o.require(r.refuted(), "verdict: " + r.verdict);
  o.require(!r.certificates.empty(), "no certificates in the chain");
  for (const auto& s : r.chain) o.require(s.ok, "chain step failed: " + s.name);
  CounterexampleReport ctl = verify_counterexample({4, 3, 2}, true);
  o.require(ctl.verdict == "decomposable", "control verdict: " + ctl.verdict);
  if (o.ok) o.detail = "refuted (" + std::to_string(r.chain.size()) + " chain steps), control decomposable";
  return o;
}

Outcome character_oracle() {
  Outcome o;
  SystemModel m = unit_torsors(4);
  std::mt19937_64 rng(1729);
  int consistent = 0;
  for (int k = 0; k < 100; ++k) {
    CharacterInstance inst = random_character_instance(m, rng);
    bool ours = std::holds_alternative<Extended>(extend_character(inst.table, inst.queries));
    o.require(ours == brute_force_consistent(inst), "instance " + std::to_string(k) + " disagrees with the oracle");
    consistent += ours;
  }
  if (o.ok) o.detail = "100/100 agree, " + std::to_string(consistent) + " consistent";
  return o;
}

Outcome three_amalgamation() {
  Outcome o;
  Presentation e0;
  e0.add_free("g");
  Element g = e0.gen("g");
  CertifyResult cr = certify_unsolvable(e0, TwistedSAS{Element(1), g}, nullptr);
  const auto* cert = std::get_if<Certificate>(&cr);
  o.require(cert != nullptr, "T[g] not certified");
  if (!cert) return o;
  auto cv = [](long n, long d) { return CircleValue(make_rat(n, d)); };
  o.require(build_3amalg_obstruction(e0, g, nullptr, cert, cv(1, 3), cv(2, 3), cv(1, 3)).solvable,
            "(1/3, 2/3, 1/3) not solvable");
  auto bad = build_3amalg_obstruction(e0, g, nullptr, cert, cv(1, 2), cv(0, 1), cv(1, 3));
  o.require(!bad.solvable && bad.obstruction, "(1/2, 0, 1/3) has no obstruction");
  std::mt19937_64 rng(33);
  for (int k = 0; k < 50; ++k) {
    CircleValue r12 = cv(static_cast<long>(rng() % 12), 12), r13 = cv(static_cast<long>(rng() % 12), 12),
                r23 = cv(static_cast<long>(rng() % 12), 12);
    auto inst = build_3amalg_obstruction(e0, g, nullptr, cert, r12, r13, r23);
    o.require(inst.solvable == (r12 + r23 == r13), "random triple " + std::to_string(k));
    o.require(inst.solvable != inst.obstruction.has_value(), "obstruction flag mismatch " + std::to_string(k));
  }
  if (o.ok) o.detail = "fixed triples and 50 random triples";
  return o;
}

Outcome descent() {
  Outcome o;
  Presentation p;
  p.add_free("g");
  Element g = p.gen("g");
  p.add_affine("a", g, g);
  auto vs = vars_of(p);
  std::mt19937_64 rng(909);
  auto moving = [&] {
    for (;;) {
      Element x = random_ratfunc(rng, vs);
      if (!x.is_zero() && !p.is_fixed(x)) return x;
    }
  };
  // Linear: roots x + q_k with rational q_k summing to zero solve s(x) - x = e2
  // when x does; with e1 != 1 a single root is used.
  for (int k = 0; k < 50; ++k) {
    Element x = random_ratfunc(rng, vs);
    Element e1 = k % 2 ? moving() : Element(1);
    Element e2 = p.sigma(x) - e1 * x;
    std::vector<Element> roots{x};
    if (e1 == Element(1)) {
      int deg = 2 + k % 3;
      roots.clear();
      Rat sum;
      for (int i = 0; i + 1 < deg; ++i) {
        Rat q = small_rat(rng);
        sum += q;
        roots.push_back(x + Element(q));
      }
      roots.push_back(x - Element(sum));
    }
    Element got = descent_linear(p, monic_coefficients(roots), e1, e2);
    o.require(p.sigma(got) - e1 * got == e2, "linear scenario " + std::to_string(k));
  }
  // Multiplicative: roots q_k * y^z with s(y) = e y; c_j picks up e^(z j).
  for (int k = 0; k < 50; ++k) {
    Element y = moving();
    Element e = p.sigma(y) / y;
    long z = 1 + k % 2;
    Element x = y.pow(static_cast<int>(z));
    std::vector<Element> roots;
    for (int i = 0; i < 1 + k % 3; ++i) roots.push_back(x * Element(Rat(1 + i)));
    Element c = descent_multiplicative(p, monic_coefficients(roots), e, z);
    bool ok = false;
    for (long j = 1; j <= 3 && !ok; ++j) ok = p.sigma(c) == e.pow(static_cast<int>(z * j)) * c;
    o.require(ok && !c.is_zero(), "multiplicative scenario " + std::to_string(k));
  }
  // Violated: one root is off by a non-constant.
  int raised = 0;
  for (int k = 0; k < 10; ++k) {
    Element x = random_ratfunc(rng, vs);
    try {
      if (k % 2 == 0) {
        descent_linear(p, monic_coefficients({x, x + g}), Element(1), p.sigma(x) - x);
      } else {
        Element y = moving();
        descent_multiplicative(p, monic_coefficients({y, y + Element(1)}), p.sigma(y) / y, 1);
      }
    } catch (const std::runtime_error& e) {
      raised += std::string(e.what()) == "descent hypothesis violated";
    }
  }
  o.require(raised == 10, std::to_string(raised) + "/10 inconsistent scenarios raised");
  if (o.ok) o.detail = "50 linear, 50 multiplicative, 10/10 violations raised";
  return o;
}

Outcome witness_decomposition() {
  Outcome o;
  CounterexampleBase b = build_base();
  ClosureStep t = closure_step(b.presentation, b.registry, RatFunc(1), "t");
  std::mt19937_64 rng(4040);
  int solved = 0, steps = 0;
  for (int n : {3, 4}) {
    std::vector<BlockSpec> blocks;
    for (int i = 1; i <= n; ++i)
      blocks.push_back({BlockGenerator::affine("s" + std::to_string(i), RatFunc(1), RatFunc(1))});
    SystemModel m = build_system(t.presentation, blocks);
    for (int k = 0; k < 10; ++k) {
      AdditiveEquation eq = assemble_planted(m, planted_fixed_family(m, rng));
      ClosureRun run = ff_decompose_with_closure(m, eq, &t.registry, {3, 0, 1});
      std::string tag = "height " + std::to_string(n) + " case " + std::to_string(k);
      o.require(run.decomposition.has_value(), tag + " not decomposed");
      if (!run.decomposition) continue;
      o.require(validate_decomposition(run.model, eq, *run.decomposition).ok, tag + " invalid");
      for (const auto& [ij, x] : run.decomposition->c) o.require(run.model.full.is_fixed(x), tag + " not fixed");
      steps += static_cast<int>(run.closure_steps.size());
      ++solved;
    }
  }
  // A base torsor the recursion asks for is closed on demand.
  std::vector<BlockSpec> blocks;
  for (int i = 1; i <= 3; ++i)
    blocks.push_back({BlockGenerator::affine("s" + std::to_string(i), RatFunc(1), RatFunc(1))});
  SystemModel bare = build_system(b.presentation, blocks);
  Element s1 = bare.full.gen("s1"), s2 = bare.full.gen("s2"), s3 = bare.full.gen("s3");
  AdditiveEquation diff{{(s2 - s3) * Element(2), (s3 - s1) * Element(2), (s1 - s2) * Element(2)}};
  ClosureRun closed = ff_decompose_with_closure(bare, diff, &b.registry, {3, 1, 1});
  o.require(closed.decomposition && !closed.closure_steps.empty() &&
                validate_decomposition(closed.model, diff, *closed.decomposition).ok,
            "on-demand closure instance failed");

  Presentation p = adjoin_twisted_pair(t.presentation, t.registry);
  Height4Instance inst = build_height4_instance(p);
  ClosureRun run = ff_decompose_with_closure(inst.model, inst.equation, &t.registry, {2, 1, 1});
  o.require(!run.decomposition && run.blocked, "height-4 instance was not blocked");
  std::string blocked = run.blocked ? run.blocked->what() : "";
  o.require(blocked.find("T[") != std::string::npos, "blocked query names no torsor");
  o.require(run.blocked_certificate && std::holds_alternative<Certificate>(*run.blocked_certificate),
            "blocked torsor is not certified");
  if (o.ok)
    o.detail = std::to_string(solved) + "/20 planted valid and fixed (" + std::to_string(steps) +
               " closure steps over Q(g, t)); " + blocked;
  return o;
}

Outcome reproducibility() {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> jobs{
      {"solve-sas", "gen g free;\ngen t affine linear=1 const=1;\nequation linear=1 const=1;\n"},
      {"decompose",
       "blocks 3; gen g free; gen x1 free in 1; gen x2 free in 2; gen x3 free in 3;\n"
       "summand x3*g + x2; summand -x3*g + x1^2; summand -x2 - x1^2;\n"},
      {"ff-decompose",
       "blocks 3; gen s1 affine linear=1 const=1 in 1; gen s2 affine linear=1 const=1 in 2;\n"
       "gen s3 affine linear=1 const=1 in 3;\n"
       "summand 2*(s2 - s3); summand 2*(s3 - s1); summand 2*(s1 - s2);\n"},
      {"character",
       "gen t affine linear=1 const=1; gen r affine linear=1 const=1;\n"
       "entry r - t value=1/4; query (r - t)/3; query r^2 - 2*r*t + t^2;\n"},
      {"amalg-check", "gen g free;\nregistry;\namalg a=g r12=1/2 r13=0 r23=1/3;\n"},
      {"verify-counterexample", ""},
  };
  for (const auto& [cmd, input] : jobs) {
    JobOptions opts;
    opts.seed = 17;
    opts.witnesses = cmd == "ff-decompose";
    if (cmd == "verify-counterexample") {
      opts.degree = 2;
      opts.window = 1;
    }
    std::string a = run_job(cmd, input, opts).report.dump(2), b2 = run_job(cmd, input, opts).report.dump(2);
    o.require(a == b2, cmd + " reports differ");
  }
  if (o.ok) o.detail = std::to_string(jobs.size()) + " commands byte-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "product identity", 1, product_identity},
      {2, "planted decompositions", 30, decomposition_suite},
      {3, "automorphism laws", 10, automorphism_laws},
      {4, "free-base decisions", 5, free_base_decisions},
      {5, "twisted-pair torsor refutation", 60, twisted_torsor},
      {6, "counterexample pipeline and control", 300, counterexample_pipeline},
      {7, "character oracle equivalence", 20, character_oracle},
      {8, "3-amalgamation obstruction", 5, three_amalgamation},
      {9, "descent transformations", 10, descent},
      {10, "witness-driven ff-decomposition", 60, witness_decomposition},
      {11, "reproducibility", 300, reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && s > c.limit_s) {
      o.ok = false;
      std::ostringstream os;
      os << "over the " << c.limit_s << " s limit";
      o.detail = os.str();
    }
    failures += !o.ok;
    std::printf("%s %2d %-38s %8.2fs  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name.c_str(), s, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
