#include <algorithm>

#include "dfield/cli.hpp"

namespace dfield {

const std::vector<std::string> kCommands{"solve-sas", "solve-mult",  "decompose",  "ff-decompose", "character",
                                         "hyperplane", "amalg-check", "nsas-check", "closure-step",
                                         "verify-counterexample"};

namespace {

// Input errors; reported with exit code 2.
class InputError : public std::invalid_argument {
 public:
  InputError(const std::string& m, std::optional<SourcePos> p = std::nullopt)
      : std::invalid_argument(m), pos(p) {}
  std::optional<SourcePos> pos;
};

struct Context {
  Context(const JobOptions& o, Document d, const SearchBounds& b) : opts(o), doc(std::move(d)), bounds(b) {}
  const JobOptions& opts;
  Document doc;
  SearchBounds bounds;
  Json out = Json::object();
  std::string verdict;
  bool decided = true;

  const Presentation& p() const { return doc.model.full; }
  std::string str(const Element& x) const { return p().str(x); }
};

Json cert_json(const Certificate& c) {
  Json steps = Json::array();
  for (const auto& s : c.steps) {
    Json j;
    j["rule"] = s.rule;
    j["field"] = s.field;
    j["equation"] = s.equation;
    j["detail"] = s.detail;
    j["derived"] = s.derived;
    j["children"] = s.children;
    steps.push_back(j);
  }
  Json j;
  j["steps"] = steps;
  j["derived_equations"] = c.derived_equations();
  return j;
}

Json bounds_json(const SearchBounds& b) {
  Json j;
  j["degree"] = b.degree;
  j["window"] = b.window;
  j["den_factors"] = b.den_factors;
  return j;
}

Rat angle_of(const Element& x, const Statement& s) {
  if (!x.is_constant()) throw InputError("character value must be a rational constant", s.pos);
  return x.constant_value();
}

long integer_of(const Element& x, const Statement& s) {
  if (!x.is_constant() || x.constant_value().get_den() != 1 || !x.constant_value().get_num().fits_slong_p())
    throw InputError("'" + s.keyword + "' expects an integer", s.pos);
  return x.constant_value().get_num().get_si();
}

const Statement& exactly_one(const Context& c, const std::string& kw) {
  auto xs = c.doc.all(kw);
  if (xs.size() != 1) throw InputError("expected exactly one '" + kw + "' statement, found " + std::to_string(xs.size()));
  return *xs.front();
}

const Element& value_of(const Statement& s) {
  if (!s.value) throw InputError("'" + s.keyword + "' needs an expression", s.pos);
  return *s.value;
}

const Element& required_arg(const Statement& s, const std::string& k) {
  const Element* x = s.arg(k);
  if (!x) throw InputError("'" + s.keyword + "' needs " + k + "=", s.pos);
  return *x;
}

std::vector<Element> values(const Context& c, const std::string& kw) {
  std::vector<Element> xs;
  for (const Statement* s : c.doc.all(kw)) xs.push_back(value_of(*s));
  return xs;
}

// Registry over the leading generators: g (free) and then every torsor
// generator whose shift lies in the field built so far, each added as a
// closure step.
std::optional<AvoidedRegistry> document_registry(const Context& c, std::vector<std::string>* steps = nullptr) {
  if (!c.doc.first("registry")) return std::nullopt;
  const auto& gens = c.p().generators();
  if (gens.empty() || gens.front().name != "g" || !gens.front().is_free() || gens.front().id != 0)
    throw InputError("registry needs the free generator g declared first");
  CounterexampleBase base = build_base();
  Presentation cur = base.presentation;
  AvoidedRegistry reg = base.registry;
  for (size_t k = 1; k < gens.size(); ++k) {
    const GeneratorSpec& g = gens[k];
    if (g.is_free() || g.linear != RatFunc(1) || !cur.contains(g.constant) || c.doc.model.label(g.id) != 0) break;
    ClosureStep s = closure_step(cur, reg, g.constant, g.name);
    if (s.generator != g.id) break;
    cur = s.presentation;
    reg = s.registry;
    if (steps) steps->push_back("s(" + g.name + ") = " + cur.str(cur.var(g.id) + g.constant));
  }
  return reg;
}

Json registry_json(const AvoidedRegistry& reg) {
  Json j;
  j["field"] = field_str(reg.presentation);
  Json fams = Json::array();
  for (const auto& e : reg.entries) {
    Json f;
    f["name"] = e.name;
    f["equation"] = equation_str(reg.presentation, e.equation);
    f["certificate"] = cert_json(e.certificate);
    fams.push_back(f);
  }
  j["families"] = fams;
  return j;
}

Json decomposition_json(const Context& c, const Decomposition& d) {
  Json arr = Json::array();
  for (const auto& [ij, x] : d.c) {
    Json e;
    e["i"] = ij.first;
    e["j"] = ij.second;
    e["value"] = c.str(x);
    arr.push_back(e);
  }
  return arr;
}

Json report_json(const ValidationReport& r) {
  Json j;
  j["ok"] = r.ok;
  j["diagnostics"] = r.diagnostics;
  return j;
}

Json obstruction_json(const Presentation& p, const Obstruction& o) {
  Json j;
  std::vector<std::string> els, rel;
  for (const auto& x : o.elements) els.push_back(p.str(x));
  for (const auto& z : o.relation) rel.push_back(z.get_str());
  j["elements"] = els;
  j["relation"] = rel;
  j["angle_sum"] = o.angle_sum.get_str();
  j["text"] = o.str(p);
  return j;
}

AdditiveEquation equation_of(const Context& c) {
  AdditiveEquation eq{values(c, "summand")};
  if (c.doc.model.n < 2) throw InputError("a system needs at least two blocks");
  if (eq.height() != c.doc.model.n)
    throw InputError("expected " + std::to_string(c.doc.model.n) + " summands, found " + std::to_string(eq.height()));
  auto diag = validate_equation(c.doc.model, eq);
  if (!diag.empty()) throw InputError("invalid equation: " + diag.front());
  return eq;
}

// ---- commands ------------------------------------------------------------------

void solve_sas(Context& c) {
  const Statement& s = exactly_one(c, "equation");
  TwistedSAS eq{required_arg(s, "linear"), required_arg(s, "const")};
  if (eq.e1.is_zero()) throw InputError("linear coefficient must be nonzero", s.pos);
  c.out["equation"] = equation_str(c.p(), eq);
  c.out["bounds"] = bounds_json(c.bounds);
  SolveResult r = solve_twisted_bounded(c.p(), eq, c.bounds);
  if (const auto* x = std::get_if<Solution>(&r)) {
    c.verdict = "Solution";
    c.out["solution"] = c.str(x->x);
    c.out["verified"] = satisfies(c.p(), eq, x->x);
    return;
  }
  c.out["bounded"] = {{"verdict", "NoSolutionWithinBounds"},
                      {"candidates", std::get<NoSolutionWithinBounds>(r).candidates}};
  if (c.p().all_free()) {
    Decision d = decide_free_base(c.p(), eq);
    if (const auto* w = std::get_if<Solvable>(&d)) {
      c.verdict = "Solution";
      c.out["solution"] = c.str(w->witness);
      c.out["verified"] = satisfies(c.p(), eq, w->witness);
    } else if (const auto* u = std::get_if<Unsolvable>(&d)) {
      c.verdict = "Unsolvable";
      c.out["certificate"] = cert_json(u->certificate);
    } else {
      c.verdict = "Unknown";
      c.out["reason"] = std::get<Undecided>(d).reason;
      c.decided = false;
    }
    return;
  }
  std::optional<AvoidedRegistry> reg = document_registry(c);
  CertifyResult cr = certify_unsolvable(c.p(), eq, reg ? &*reg : nullptr);
  if (const auto* cert = std::get_if<Certificate>(&cr)) {
    c.verdict = "Unsolvable";
    c.out["certificate"] = cert_json(*cert);
    if (reg) c.out["registry"] = registry_json(*reg);
  } else {
    c.verdict = "NoSolutionWithinBounds";
    c.out["reason"] = std::get<Unknown>(cr).reason;
    c.decided = false;
  }
}

void solve_mult(Context& c) {
  const Statement& s = exactly_one(c, "equation");
  const Element& e = required_arg(s, "base");
  long z = 1;
  if (const Element* zx = s.arg("exponent")) z = integer_of(*zx, s);
  if (e.is_zero() || z == 0) throw InputError("base must be nonzero and exponent nonzero", s.pos);
  MultiplicativeSAS eq{e, z};
  c.out["equation"] = equation_str(c.p(), eq);
  c.out["bounds"] = bounds_json(c.bounds);
  SolveResult r = solve_multiplicative_bounded(c.p(), eq, c.bounds);
  if (const auto* x = std::get_if<Solution>(&r)) {
    c.verdict = "Solution";
    c.out["solution"] = c.str(x->x);
    c.out["verified"] = satisfies(c.p(), eq, x->x);
  } else if (const auto* u = std::get_if<Unsolvable>(&r)) {
    c.verdict = "Unsolvable";
    c.out["certificate"] = cert_json(u->certificate);
  } else {
    std::optional<AvoidedRegistry> reg = document_registry(c);
    CertifyResult cr = certify_unsolvable(c.p(), eq, reg ? &*reg : nullptr);
    if (const auto* cert = std::get_if<Certificate>(&cr)) {
      c.verdict = "Unsolvable";
      c.out["certificate"] = cert_json(*cert);
    } else {
      c.verdict = "NoSolutionWithinBounds";
      c.out["candidates"] = std::get<NoSolutionWithinBounds>(r).candidates;
      c.out["reason"] = std::get<Unknown>(cr).reason;
      c.decided = false;
    }
  }
}

void decompose_cmd(Context& c) {
  AdditiveEquation eq = equation_of(c);
  GenericPoints pts(c.opts.seed);
  Decomposition d;
  try {
    d = decompose(c.doc.model, eq, pts);
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const std::invalid_argument*>(&e)) throw;
    c.verdict = "Unknown";
    c.out["reason"] = e.what();
    c.decided = false;
    return;
  }
  c.verdict = "Decomposition";
  c.out["decomposition"] = decomposition_json(c, d);
  c.out["validation"] = report_json(validate_decomposition(c.doc.model, eq, d));
}

void ff_decompose_cmd(Context& c) {
  AdditiveEquation eq = equation_of(c);
  if (!is_ff(c.doc.model, eq)) throw InputError("summands must be fixed");
  c.out["bounds"] = bounds_json(c.bounds);
  if (c.opts.witnesses) {
    std::optional<AvoidedRegistry> reg = document_registry(c);
    ClosureRun run = ff_decompose_with_closure(c.doc.model, eq, reg ? &*reg : nullptr, c.bounds, c.opts.seed);
    c.out["closure_steps"] = run.closure_steps;
    if (run.decomposition) {
      c.verdict = "Decomposition";
      Context shown(c.opts, c.doc, c.bounds);
      shown.doc.model = run.model;
      c.out["decomposition"] = decomposition_json(shown, *run.decomposition);
      c.out["validation"] = report_json(validate_decomposition(run.model, eq, *run.decomposition));
    } else {
      c.verdict = "WitnessUnavailable";
      c.decided = false;
      c.out["blocked"] = {{"target", run.model.full.str(run.blocked->target)},
                          {"corner", index_set_str(run.blocked->corner)}};
      if (run.blocked_certificate) {
        if (const auto* cert = std::get_if<Certificate>(&*run.blocked_certificate))
          c.out["blocked_certificate"] = cert_json(*cert);
        else
          c.out["blocked_certificate"] = {{"unknown", std::get<Unknown>(*run.blocked_certificate).reason}};
      }
    }
    return;
  }
  FfSearchResult r = ff_decompose_bounded(c.doc.model, eq, c.bounds);
  if (const auto* d = std::get_if<Decomposition>(&r)) {
    c.verdict = "Decomposition";
    c.out["decomposition"] = decomposition_json(c, *d);
    c.out["validation"] = report_json(validate_decomposition(c.doc.model, eq, *d));
  } else {
    c.verdict = "NotFoundWithinBounds";
    c.decided = false;
    Json sizes = Json::array();
    for (const auto& [ij, k] : std::get<NotFoundWithinBounds>(r).span_sizes)
      sizes.push_back({{"i", ij.first}, {"j", ij.second}, {"fixed_elements", k}});
    c.out["span_sizes"] = sizes;
  }
}

void character_cmd(Context& c) {
  CharacterTable t{c.p(), {}};
  for (const Statement* s : c.doc.all("entry"))
    t.entries.push_back({value_of(*s), CircleValue(angle_of(required_arg(*s, "value"), *s))});
  std::vector<CharacterQuery> qs;
  for (const Statement* s : c.doc.all("query")) {
    CharacterQuery q{value_of(*s), std::nullopt};
    if (const Element* v = s->arg("value")) q.desired = CircleValue(angle_of(*v, *s));
    qs.push_back(q);
  }
  ExtendResult r = extend_character(t, qs);
  if (const auto* o = std::get_if<Obstruction>(&r)) {
    c.verdict = "Obstruction";
    c.out["obstruction"] = obstruction_json(c.p(), *o);
    return;
  }
  const auto& ext = std::get<Extended>(r);
  c.verdict = "Consistent";
  static const char* kinds[] = {"Assigned", "Forced", "Constrained", "Free"};
  Json outs = Json::array();
  for (size_t i = 0; i < qs.size(); ++i) {
    const QueryOutcome& q = ext.outcomes[i];
    Json j;
    j["element"] = c.str(qs[i].element);
    j["kind"] = kinds[static_cast<int>(q.kind)];
    j["value"] = q.value.angle().get_str();
    if (q.kind == QueryOutcome::Kind::Constrained) j["choices"] = q.choices.get_str();
    outs.push_back(j);
  }
  c.out["outcomes"] = outs;
}

void hyperplane_cmd(Context& c) {
  std::vector<Element> xs = values(c, "element");
  long m = integer_of(value_of(exactly_one(c, "height")), exactly_one(c, "height"));
  if (m < 1 || m > 1000) throw InputError("height must lie in 1..1000");
  auto w = hyperplane_search(xs, static_cast<int>(m), values(c, "span"));
  if (!w) {
    c.verdict = "None";
    return;
  }
  c.verdict = "Hyperplane";
  c.out["z"] = w->z;
  c.out["b"] = c.str(w->b);
}

void amalg_check(Context& c) {
  if (const Statement* s = c.doc.first("amalg")) {
    const Element& a = required_arg(*s, "a");
    CircleValue r12(angle_of(required_arg(*s, "r12"), *s)), r13(angle_of(required_arg(*s, "r13"), *s)),
        r23(angle_of(required_arg(*s, "r23"), *s));
    std::optional<AvoidedRegistry> reg = document_registry(c);
    CertifyResult cr = certify_unsolvable(c.p(), TwistedSAS{RatFunc(1), a}, reg ? &*reg : nullptr);
    if (const auto* u = std::get_if<Unknown>(&cr)) {
      c.verdict = "Unknown";
      c.out["reason"] = "no certificate for T[" + c.str(a) + "]: " + u->reason;
      c.decided = false;
      return;
    }
    const Certificate& cert = std::get<Certificate>(cr);
    ThreeAmalgInstance inst = build_3amalg_obstruction(c.p(), a, reg ? &*reg : nullptr, &cert, r12, r13, r23);
    c.out["certificate"] = cert_json(cert);
    Json tab = Json::array();
    for (const auto& e : inst.table.entries)
      tab.push_back({{"element", inst.presentation.str(e.element)}, {"value", e.value.angle().get_str()}});
    c.out["table"] = tab;
    c.verdict = inst.solvable ? "Solvable" : "Obstruction";
    if (inst.obstruction) c.out["obstruction"] = obstruction_json(inst.presentation, *inst.obstruction);
    return;
  }
  AdditiveEquation eq = equation_of(c);
  const Statement& ks = exactly_one(c, "distinguished");
  long k = integer_of(value_of(ks), ks);
  if (k < 1 || k > eq.height()) throw InputError("distinguished index out of range", ks.pos);
  c.out["bounds"] = bounds_json(c.bounds);
  auto r = build_failing_instance(c.doc.model, eq, static_cast<int>(k), c.bounds);
  if (const auto* ref = std::get_if<Refused>(&r)) {
    c.verdict = "Refused";
    c.out["reason"] = ref->reason;
    if (ref->combination) c.out["decomposition"] = decomposition_json(c, *ref->combination);
    return;
  }
  const auto& f = std::get<FailingInstance>(r);
  c.verdict = "FailingInstance";
  Json tabs = Json::array();
  for (const auto& t : f.facet_tables) {
    Json tab = Json::array();
    for (const auto& e : t.entries) tab.push_back({{"element", c.str(e.element)}, {"value", e.value.angle().get_str()}});
    tabs.push_back(tab);
  }
  c.out["facet_tables"] = tabs;
  c.out["obstruction"] = obstruction_json(c.p(), f.obstruction);
}

void nsas_check(Context& c) {
  const Statement& bt = exactly_one(c, "btilde");
  ValidationReport r =
      check_n_sas_witness(c.doc.model, value_of(bt), values(c, "summand"), values(c, "rewrite"), values(c, "witness"));
  c.verdict = r.ok ? "Valid" : "Invalid";
  c.out["validation"] = report_json(r);
}

bool same_generators_as(const Presentation& a, const Presentation& b) {
  if (a.generators().size() != b.generators().size()) return false;
  for (const auto& g : a.generators())
    if (!b.has(g.id) || b.spec(g.id).name != g.name) return false;
  return true;
}

void closure_cmd(Context& c) {
  if (!c.doc.first("registry")) c.doc.statements.push_back({"registry", {}, std::nullopt, {}});
  std::vector<std::string> steps;
  std::optional<AvoidedRegistry> reg = document_registry(c, &steps);
  if (!same_generators_as(reg->presentation, c.p()))
    throw InputError("closure steps need a base of g and torsor generators only");
  Presentation cur = reg->presentation;
  for (const Statement* s : c.doc.all("torsor")) {
    try {
      ClosureStep cs = closure_step(cur, *reg, value_of(*s));
      steps.push_back("s(" + cs.presentation.spec(cs.generator).name + ") = " +
                      cs.presentation.str(cs.presentation.var(cs.generator) + value_of(*s)));
      cur = cs.presentation;
      reg = cs.registry;
    } catch (const ClosureRejected& e) {
      c.verdict = "Rejected";
      c.out["reason"] = e.what();
      c.out["closure_steps"] = steps;
      return;
    }
  }
  c.verdict = "Closed";
  c.out["closure_steps"] = steps;
  Document d;
  d.model.full = cur;
  for (const auto& g : cur.generators()) d.model.labels[g.id] = 0;
  c.out["presentation"] = print_document(d);
  c.out["registry"] = registry_json(*reg);
}

void counterexample_cmd(Context& c) {
  CounterexampleBase base = build_base();
  c.out["bounds"] = bounds_json(c.bounds);
  c.out["control"] = c.opts.control;
  c.out["base_registry"] = registry_json(base.registry);
  CounterexampleReport r = verify_counterexample(c.bounds, c.opts.control);
  c.out["presentations"] = r.presentations;
  c.out["closure_steps"] = r.closure_steps;
  c.out["identities"] = r.identities;
  c.out["bounded"] = r.bounded;
  Json chain = Json::array();
  for (const auto& s : r.chain) chain.push_back({{"step", s.name}, {"ok", s.ok}, {"facts", s.facts}});
  c.out["chain"] = chain;
  Json certs = Json::array();
  for (const auto& cert : r.certificates) certs.push_back(cert_json(cert));
  c.out["certificates"] = certs;
  c.verdict = r.verdict;
  c.decided = r.verdict.rfind("Unknown", 0) != 0;
}

}  // namespace

JobResult run_job(const std::string& command, const std::string& input, const JobOptions& opts) {
  JobResult res;
  Json& rep = res.report;
  rep["schema_version"] = 1;
  rep["command"] = command;
  rep["seed"] = opts.seed;
  try {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
      throw InputError("unknown command '" + command + "'");
    bool cx = command == "verify-counterexample";
    SearchBounds b{opts.degree.value_or(cx ? 4 : 6), opts.window.value_or(cx ? 3 : 4), opts.den_factors};
    if (b.degree < 0 || b.window < 0 || b.den_factors < 0) throw InputError("bounds must be nonnegative");
    Context c(opts, parse_document(input), b);
    std::vector<std::string> mv = c.doc.model.validate();
    if (!mv.empty()) throw InputError("invalid system: " + mv.front());
    if (command == "solve-sas") solve_sas(c);
    else if (command == "solve-mult") solve_mult(c);
    else if (command == "decompose") decompose_cmd(c);
    else if (command == "ff-decompose") ff_decompose_cmd(c);
    else if (command == "character") character_cmd(c);
    else if (command == "hyperplane") hyperplane_cmd(c);
    else if (command == "amalg-check") amalg_check(c);
    else if (command == "nsas-check") nsas_check(c);
    else if (command == "closure-step") closure_cmd(c);
    else counterexample_cmd(c);
    rep["verdict"] = c.verdict;
    for (auto& [k, v] : c.out.items()) rep[k] = v;
    res.summary = command + ": " + c.verdict;
    res.exit_code = opts.require_decision && !c.decided ? 3 : 0;
  } catch (const ParseError& e) {
    rep["verdict"] = "InputError";
    rep["error"] = {{"message", e.message}, {"line", e.pos.line}, {"column", e.pos.col}};
    res.summary = command + ": input error at line " + std::to_string(e.pos.line) + ", column " +
                  std::to_string(e.pos.col) + ": " + e.message;
    res.exit_code = 2;
  } catch (const InputError& e) {
    rep["verdict"] = "InputError";
    rep["error"] = {{"message", e.what()}};
    if (e.pos) {
      rep["error"]["line"] = e.pos->line;
      rep["error"]["column"] = e.pos->col;
    }
    res.summary = command + ": input error: " + e.what();
    res.exit_code = 2;
  } catch (const std::invalid_argument& e) {
    rep["verdict"] = "InputError";
    rep["error"] = {{"message", e.what()}};
    res.summary = command + ": input error: " + e.what();
    res.exit_code = 2;
  }
  return res;
}

}  // namespace dfield
