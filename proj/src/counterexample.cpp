#include "dfield/counterexample.hpp"

#include <algorithm>
#include <stdexcept>

namespace dfield {

namespace {

std::string pair_str(int i, int j) { return std::to_string(i) + std::to_string(j); }

Presentation restrict_by_name(const Presentation& p, const std::vector<std::string>& drop) {
  std::set<int> keep;
  for (const auto& g : p.generators())
    if (std::find(drop.begin(), drop.end(), g.name) == drop.end()) keep.insert(g.id);
  return p.restrict_to(keep);
}

std::string fresh_name(const Presentation& p, const std::string& stem) {
  if (!p.find(stem)) return stem;
  for (int k = 2;; ++k)
    if (!p.find(stem + std::to_string(k))) return stem + std::to_string(k);
}

bool same_generators(const Presentation& a, const Presentation& b) {
  if (a.generators().size() != b.generators().size()) return false;
  for (const auto& g : a.generators())
    if (!b.has(g.id) || b.spec(g.id).name != g.name) return false;
  return true;
}

}  // namespace

CounterexampleBase build_base() {
  Presentation e0;
  e0.add_free("g");
  Element g = e0.gen("g");
  AvoidedRegistry reg{e0, g, {}};
  std::vector<std::pair<std::string, SasEquation>> fams{
      {"s(x)/x = g^z", MultiplicativeFamily{g, ExponentSet::all_nonzero()}},
      {"s(x) - g*x = g", TwistedSAS{g, g}},
      {"s(x) - (1/g)*x = 1/g", TwistedSAS{g.inverse(), g.inverse()}},
  };
  for (auto& [name, eq] : fams) {
    CertifyResult r = certify_unsolvable(e0, eq, nullptr);
    if (!std::holds_alternative<Certificate>(r))
      throw std::logic_error("base family '" + name + "' not certified: " + std::get<Unknown>(r).reason);
    reg.entries.push_back({name, eq, std::get<Certificate>(r)});
  }
  // The family is certified for all z at once; spot-check single exponents.
  for (long z : {1L, -1L, 2L, -2L, 3L, -3L})
    if (!std::holds_alternative<Unsolvable>(decide_free_base(e0, MultiplicativeSAS{g, z})))
      throw std::logic_error("s(x)/x = g^" + std::to_string(z) + " is not refuted over the base");
  return {e0, reg};
}

ClosureStep closure_step(const Presentation& p, const AvoidedRegistry& registry, const Element& f,
                         const std::string& name) {
  if (!p.contains(f)) throw ClosureRejected("closure step: " + p.str(f) + " is not in " + field_str(p));
  ClosureStep out;
  out.presentation = p.with_affine(name.empty() ? fresh_name(p, "t") : name, RatFunc(1), f);
  out.generator = out.presentation.next_id() - 1;
  Element t = out.presentation.var(out.generator);
  if (!satisfies(out.presentation, TwistedSAS{RatFunc(1), f}, t))
    throw std::logic_error("closure generator does not solve its torsor");
  out.registry = registry;
  out.registry.presentation = out.presentation;
  for (auto& e : out.registry.entries) {
    CertifyResult r = certify_unsolvable(out.presentation, e.equation, &registry);
    if (const auto* u = std::get_if<Unknown>(&r))
      throw ClosureRejected("closure step rejected: '" + e.name + "' over " + field_str(out.presentation) + ": " +
                            u->reason);
    e.certificate = std::get<Certificate>(r);
  }
  return out;
}

Presentation adjoin_twisted_pair(const Presentation& p, const AvoidedRegistry& registry) {
  if (!same_generators(p, registry.presentation))
    throw std::invalid_argument("registry is not certified over " + field_str(p));
  Element g = p.gen("g");
  Presentation q = p.with_affine("a1", g, g);
  q.add_affine("a2", g.inverse(), g.inverse());
  return q;
}

NoTorsorCheck verify_no_torsor_over_twisted(const Presentation& p, const AvoidedRegistry& registry,
                                            const std::string& which, const SearchBounds& b) {
  std::set<int> keep;
  for (const auto& g : registry.presentation.generators()) keep.insert(g.id);
  keep.insert(p.id_of(which));
  Presentation field = p.restrict_to(keep);
  TwistedSAS eq{RatFunc(1), field.gen(which)};
  return {which, field, certify_unsolvable(field, eq, &registry), solve_twisted_bounded(field, eq, b)};
}

bool verify_product_identity(const Presentation& p) {
  Element a1 = p.gen("a1"), a2 = p.gen("a2");
  return p.wp(a1 * a2) == a1 + a2 + RatFunc(1);
}

Height4Instance build_height4_instance(const Presentation& p, bool realize_a2) {
  const GeneratorSpec* ts = p.find("t");
  if (!ts || ts->is_free() || ts->linear != RatFunc(1) || ts->constant != RatFunc(1))
    throw std::invalid_argument("height-4 instance needs t with s(t) = t + 1");
  if (!p.find("a1") || !p.find("a2")) throw std::invalid_argument("height-4 instance needs the twisted pair");
  Presentation base = restrict_by_name(p, {"a1", "a2"});
  Element g = base.gen("g");
  std::vector<BlockSpec> blocks;
  for (int i = 1; i <= 4; ++i) {
    std::string name = "a" + std::to_string(i);
    if (realize_a2)
      blocks.push_back({BlockGenerator::affine(name, RatFunc(1), RatFunc(1))});
    else if (i == 1)
      blocks.push_back({BlockGenerator::affine(name, g, g)});
    else
      blocks.push_back({BlockGenerator::affine(name, g.inverse(), g.inverse())});
  }
  Height4Instance inst;
  inst.model = build_system(base, blocks);
  SystemModel& m = inst.model;
  auto a = [&](int i) { return m.full.gen("a" + std::to_string(i)); };
  Element t = m.full.gen("t");
  for (int i = 1; i <= 4; ++i)
    for (int j = i + 1; j <= 4; ++j) inst.torsor_target[{i, j}] = i == 1 ? a(i) + a(j) : a(i) - a(j);
  for (const auto& [ij, target] : inst.torsor_target) {
    auto [i, j] = ij;
    if (i == 1 && !realize_a2) {
      inst.c[ij] = a(1) * a(j) - t;
    } else {
      int id = attach_generator(m, "c" + pair_str(i, j), index_bit(i) | index_bit(j), RatFunc(1), target);
      inst.c[ij] = m.full.var(id);
    }
  }
  auto c = [&](int i, int j) { return inst.c.at({i, j}); };
  Element f123 = c(1, 2) - c(1, 3) - c(2, 3);
  Element f124 = -c(1, 2) + c(2, 4) + c(1, 4);
  Element f134 = c(1, 3) - c(3, 4) - c(1, 4);
  Element f234 = c(2, 3) - c(2, 4) + c(3, 4);
  inst.equation.summands = {f234, f134, f124, f123};

  auto require = [&](bool ok, const std::string& what) {
    if (!ok) throw std::logic_error("construction error: " + what);
    inst.checks.push_back(what);
  };
  for (const auto& [ij, target] : inst.torsor_target)
    require(m.full.wp(inst.c.at(ij)) == target,
            "wp(c" + pair_str(ij.first, ij.second) + ") = " + m.full.str(target));
  const char* names[] = {"f234", "f134", "f124", "f123"};
  for (int i = 0; i < 4; ++i)
    require(m.full.is_fixed(inst.equation.summands[static_cast<size_t>(i)]), std::string(names[i]) + " is fixed");
  require((f123 + f124 + f134 + f234).is_zero(), "f123 + f124 + f134 + f234 = 0");
  auto diag = validate_equation(m, inst.equation);
  require(diag.empty(), "each summand lies in its facet" + (diag.empty() ? "" : ": " + diag.front()));
  return inst;
}

namespace {

ChainStep d_equations(const Height4Instance& inst, SystemModel& formal, std::map<std::pair<int, int>, Element>& d) {
  ChainStep s{"d-equations", true, {}};
  std::map<std::pair<int, int>, Element> e;
  for (const auto& [ij, c] : inst.c) {
    auto [i, j] = ij;
    int id = attach_generator(formal, "e" + pair_str(i, j), index_bit(i) | index_bit(j), RatFunc(1), RatFunc(0));
    e[ij] = formal.full.var(id);
    d[ij] = c - e[ij];
    bool ok = formal.in_corner(d[ij], index_bit(i) | index_bit(j)) &&
              formal.full.wp(d[ij]) == inst.torsor_target.at(ij);
    s.ok = s.ok && ok;
    s.facts.push_back("d" + pair_str(i, j) + " = c" + pair_str(i, j) + " - e" + pair_str(i, j) + " in corner " +
                      index_set_str(index_bit(i) | index_bit(j)) + ", wp(d" + pair_str(i, j) +
                      ") = " + formal.full.str(inst.torsor_target.at(ij)) + (ok ? "" : " FAILED"));
  }
  // The facet summand over {1,2,3} minus its e-combination is the d-combination.
  Element lhs = d[{1, 2}] - d[{1, 3}] - d[{2, 3}];
  Element rhs = inst.equation.summands[3] - (e[{1, 2}] - e[{1, 3}] - e[{2, 3}]);
  bool ok = lhs == rhs;
  s.ok = s.ok && ok;
  s.facts.push_back(std::string("d12 - d13 - d23 = f123 - (e12 - e13 - e23)") + (ok ? "" : " FAILED") +
                    "; under f123 = e12 - e13 - e23 it reads d12 - d13 - d23 = 0");
  return s;
}

ChainStep decomposition_step(const Height4Instance& inst) {
  ChainStep s{"decompose d12 - d13 - d23 = 0", true, {}};
  const SystemModel& m = inst.model;
  std::vector<std::string> v = m.validate();
  s.ok = v.empty();
  s.facts.push_back(v.empty() ? "blocks a1, a2, a3 are independent over the base" : "system invalid: " + v.front());
  // Exercise the decomposition on a probe relation of the same shape.
  SystemModel sub = m;
  sub.n = 3;
  for (auto& [id, w] : sub.labels)
    if (w & index_bit(4)) w = full_set(3);  // unused by the probe
  Element a1 = m.full.gen("a1"), a2 = m.full.gen("a2"), a3 = m.full.gen("a3"), g = m.full.gen("g");
  Element d12 = a1 * a1 + a2 * g, d13 = a1 * a1 - a3, d23 = a2 * g + a3;
  AdditiveEquation probe{{-d23, -d13, d12}};
  GenericPoints pts(7);
  try {
    Decomposition c = decompose(sub, probe, pts);
    Element g1 = c.at(3, 2), g2 = c.at(3, 1);  // the two pieces of the {1,2} summand
    bool ok = validate_decomposition(sub, probe, c).ok && sub.in_corner(g1, index_bit(1)) &&
              sub.in_corner(g2, index_bit(2));
    s.ok = s.ok && ok;
    s.facts.push_back("probe d12 = " + m.full.str(d12) + " splits as " + m.full.str(g1) + " + " + m.full.str(g2) +
                      (ok ? "" : " FAILED"));
  } catch (const std::exception& e) {
    s.ok = false;
    s.facts.push_back(std::string("probe decomposition failed: ") + e.what());
  }
  s.facts.push_back("hence d12 = g1 + g2 with g1 over a1 and g2 over a2, and wp(g1) + wp(g2) = wp(d12) = " +
                    m.full.str(inst.torsor_target.at({1, 2})));
  return s;
}

ChainStep block_split(const Height4Instance& inst) {
  ChainStep s{"block split", true, {}};
  const SystemModel& m = inst.model;
  std::set<int> c1 = m.corner_ids(index_bit(1)), c2 = m.corner_ids(index_bit(2)), both;
  std::set_intersection(c1.begin(), c1.end(), c2.begin(), c2.end(), std::inserter(both, both.end()));
  s.ok = both == m.corner_ids(0);
  s.facts.push_back("wp(g1) - a1 lies over a1, a2 - wp(g2) lies over a2; they are equal");
  s.facts.push_back(std::string("corner {1} and corner {2} meet in the base") + (s.ok ? "" : " FAILED"));
  s.facts.push_back("so wp(g1) = a1 + q and wp(g2) = a2 - q for some q in the base");
  return s;
}

}  // namespace

CounterexampleReport refute_ff_decomposition(const Height4Instance& inst, const AvoidedRegistry& registry,
                                             const SearchBounds& b) {
  CounterexampleReport r;
  const SystemModel& m = inst.model;
  r.identities = inst.checks;
  bool bounded_found = false;
  FfSearchResult fr = ff_decompose_bounded(m, inst.equation, b);
  std::string bstr = "D=" + std::to_string(b.degree) + ", W=" + std::to_string(b.window);
  if (const auto* dec = std::get_if<Decomposition>(&fr)) {
    bounded_found = validate_decomposition(m, inst.equation, *dec).ok;
    r.bounded.push_back("ff_decompose_bounded " + bstr + ": decomposition found" +
                        (bounded_found ? "" : " but it does not validate"));
  } else {
    const auto& nf = std::get<NotFoundWithinBounds>(fr);
    std::string sizes;
    for (const auto& [ij, k] : nf.span_sizes)
      sizes += (sizes.empty() ? "" : ", ") + pair_str(ij.first, ij.second) + ":" + std::to_string(k);
    r.bounded.push_back("ff_decompose_bounded " + bstr + ": NotFoundWithinBounds (fixed span sizes " + sizes + ")");
  }

  SystemModel formal = m;
  std::map<std::pair<int, int>, Element> d;
  r.chain.push_back(d_equations(inst, formal, d));
  r.chain.push_back(decomposition_step(inst));
  r.chain.push_back(block_split(inst));

  // Certify both base-shifted torsors for sample shifts q; the derived
  // equations must not depend on q.
  ChainStep cert{"certify base-shifted torsors", true, {}};
  Element g = m.full.gen("g"), t = m.full.gen("t");
  std::vector<Element> qs{RatFunc(0), RatFunc(1), g, t, m.full.gen("g", 1) - g * t};
  for (int blk : {1, 2}) {
    Presentation field = m.corner(index_bit(blk));
    Element a = field.gen("a" + std::to_string(blk));
    std::optional<std::vector<std::string>> first;
    for (const auto& q : qs) {
      Element target = blk == 1 ? a + q : a - q;
      CertifyResult cr = certify_unsolvable(field, TwistedSAS{RatFunc(1), target}, &registry);
      std::string head = "s(x) - x = " + field.str(target) + " over " + field_str(field);
      if (const auto* u = std::get_if<Unknown>(&cr)) {
        cert.ok = false;
        cert.facts.push_back(head + ": Unknown (" + u->reason + ")");
        break;
      }
      const Certificate& c = std::get<Certificate>(cr);
      bool registered = std::any_of(c.steps.begin(), c.steps.end(), [](const CertStep& st) { return st.rule == "registry"; });
      std::vector<std::string> derived = c.derived_equations();
      if (!first) {
        first = derived;
        std::string list;
        for (const auto& x : derived) list += (list.empty() ? "" : "; ") + x;
        cert.facts.push_back(head + ": certificate, derived " + list);
        r.certificates.push_back(c);
      }
      bool same = derived == *first;
      cert.ok = cert.ok && registered && same && replay_certificate(field, TwistedSAS{RatFunc(1), target}, &registry, c);
      if (!registered || !same) cert.facts.push_back(head + ": certificate differs from the q = 0 case");
    }
  }
  r.chain.push_back(cert);

  bool chain_ok = std::all_of(r.chain.begin(), r.chain.end(), [](const ChainStep& s) { return s.ok; });
  if (bounded_found)
    r.verdict = "decomposable";
  else if (chain_ok)
    r.verdict = "refuted with certificate chain";
  else {
    auto bad = std::find_if(r.chain.begin(), r.chain.end(), [](const ChainStep& s) { return !s.ok; });
    r.verdict = "Unknown: chain step '" + bad->name + "' failed";
  }
  return r;
}

ClosureRun ff_decompose_with_closure(const SystemModel& m, const AdditiveEquation& eq, const AvoidedRegistry* registry,
                                     const SearchBounds& b, std::uint64_t seed, int max_steps) {
  ClosureRun run;
  run.model = m;
  std::optional<AvoidedRegistry> reg;
  if (registry) reg = *registry;
  std::vector<std::pair<int, Element>> closures;  // generator, torsor target
  for (;;) {
    TorsorWitnessOracle bounded = bounded_search_oracle(run.model, b);
    const SystemModel& model = run.model;
    TorsorWitnessOracle oracle = [&](const Element& target, IndexSet w) -> std::optional<Element> {
      for (const auto& [id, f] : closures)
        if (f == target && (model.label(id) & ~w) == 0) return model.full.var(id);
      return bounded(target, w);
    };
    GenericPoints pts(seed);
    try {
      run.decomposition = ff_decompose_with_witnesses(run.model, eq, oracle, pts);
      return run;
    } catch (const WitnessUnavailable& wu) {
      // Base targets are closed over the base, which serves every corner.
      if (run.model.support(wu.target) != 0 || static_cast<int>(closures.size()) >= max_steps) {
        run.blocked = wu;
        run.blocked_certificate =
            certify_unsolvable(run.model.corner(wu.corner), TwistedSAS{RatFunc(1), wu.target}, reg ? &*reg : nullptr);
        return run;
      }
      std::string name = fresh_name(run.model.full, "t");
      if (reg) {
        ClosureStep cs = closure_step(run.model.corner(0), *reg, wu.target, name);
        reg = cs.registry;
      }
      int id = attach_generator(run.model, name, 0, RatFunc(1), wu.target);
      closures.push_back({id, wu.target});
      run.closure_steps.push_back("s(" + name + ") = " + run.model.full.str(run.model.full.var(id) + wu.target));
    }
  }
}

CounterexampleReport verify_counterexample(const SearchBounds& b, bool control) {
  CounterexampleBase base = build_base();
  ClosureStep cs = closure_step(base.presentation, base.registry, RatFunc(1), "t");
  Presentation p = adjoin_twisted_pair(cs.presentation, cs.registry);
  Height4Instance inst = build_height4_instance(p, control);
  CounterexampleReport r = refute_ff_decomposition(inst, cs.registry, b);
  r.presentations = {field_str(base.presentation), field_str(cs.presentation), field_str(p),
                     field_str(inst.model.full)};
  r.closure_steps.push_back("s(t) = t + 1");
  Element a1 = p.gen("a1"), a2 = p.gen("a2"), t = p.gen("t");
  std::vector<std::string> head;
  bool product = verify_product_identity(p);
  head.push_back(std::string("wp(a1*a2) = a1 + a2 + 1: ") + (product ? "holds" : "FAILS"));
  bool shifted = p.wp(a1 * a2 - t) == a1 + a2;
  head.push_back(std::string("wp(a1*a2 - t) = a1 + a2: ") + (shifted ? "holds" : "FAILS"));
  r.identities.insert(r.identities.begin(), head.begin(), head.end());
  if (!product || !shifted) r.verdict = "Unknown: product identity failed";
  return r;
}

}  // namespace dfield
