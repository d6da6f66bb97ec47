#include <string>

#include "doctest.h"
#include "dfield/cli.hpp"

using namespace dfield;

namespace {

const char* kTorsorField = "gen g free;\ngen t affine linear=1 const=1;\n";

const char* kDecompose = R"(blocks 3;
gen g free;
gen x1 free in 1;
gen x2 free in 2;
gen x3 free in 3;
let c12 = x3*g; let c13 = x2 + g[1]; let c23 = x1^2;
summand c12 + c13;
summand -c12 + c23;
summand -c13 - c23;
)";

const char* kUnitTorsors3 = R"(blocks 3;
gen t affine linear=1 const=1;
gen s1 affine linear=1 const=1 in 1;
gen s2 affine linear=1 const=1 in 2;
gen s3 affine linear=1 const=1 in 3;
)";

const char* kCharacter = R"(gen t affine linear=1 const=1;
gen r affine linear=1 const=1;
gen q affine linear=1 const=1;
let u = r - t; let v = q - t;
entry u value=1/4;
entry v value=1/3;
query u + v;
query u/2;
query u*v;
)";

JobResult run(const std::string& cmd, const std::string& input, JobOptions o = {}) { return run_job(cmd, input, o); }

}  // namespace

TEST_CASE("document parsing") {
  Document d = parse_document("gen g free; gen a1 affine linear=g const=g;");
  const Presentation& p = d.model.full;
  REQUIRE(p.generators().size() == 2);
  CHECK(d.model.n == 0);
  CHECK(parse_expression("s(a1,1) - g*a1 - g", p).is_zero());
  CHECK(parse_expression("s(g) - g[1]", p).is_zero());
  CHECK(parse_expression("a1[2] - s(s(a1))", p).is_zero());
  CHECK(parse_expression("(g^2 - 1)/(g - 1)", p) == parse_expression("g + 1", p));
  CHECK(parse_expression("-2^2", p) == Element(-4));

  Document pair = parse_document("gen g free; gen a1 affine linear=g const=g; gen a2 affine linear=1/g const=1/g;");
  CHECK(parse_expression("wp(a1*a2) - (a1 + a2 + 1)", pair.model.full).is_zero());

  Document sys = parse_document(kUnitTorsors3);
  CHECK(sys.model.n == 3);
  CHECK(sys.model.label(sys.model.full.find("s2")->id) == index_bit(2));
  CHECK(parse_document("gen g free; gen x free in {2,4};").model.n == 4);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_document("gen g free;\ngen h free;\nequation g[ ;");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.pos.line == 3);
    CHECK(e.pos.col == 13);
    CHECK(std::string(e.what()).rfind("line 3, column 13:", 0) == 0);
  }
  try {
    parse_document("gen g free;\nequation linear=1 const=h;");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.message == "unknown generator 'h'");
    CHECK(e.pos.line == 2);
    CHECK(e.pos.col == 25);
  }
  CHECK_THROWS_AS(parse_document("gen g free; let x = g/(g - g);"), ParseError);
  CHECK_THROWS_AS(parse_document("gen g free; gen g free;"), ParseError);
  CHECK_THROWS_AS(parse_document("gen s free;"), ParseError);
  CHECK_THROWS_AS(parse_document("frobnicate 1;"), ParseError);
  CHECK_THROWS_AS(parse_document("gen g free; equation linear=1 linear=2;"), ParseError);
  // The rule of a labelled generator must stay inside its corner.
  CHECK_THROWS_AS(parse_document("blocks 2; gen x free in 1; gen y affine linear=1 const=x in 2;"), ParseError);
  CHECK(parse_document("blocks 1; gen x free in 2;").model.n == 2);
  CHECK_THROWS_AS(parse_document("gen g free; gen a affine linear=0;"), ParseError);
}

TEST_CASE("printed documents parse back") {
  for (const char* text : {kDecompose, kUnitTorsors3, kCharacter}) {
    Document d = parse_document(text);
    std::string printed = print_document(d);
    Document e = parse_document(printed);
    CHECK(print_document(e) == printed);
    CHECK(e.model.n == d.model.n);
    CHECK(e.model.labels == d.model.labels);
    CHECK(e.statements == d.statements);
    REQUIRE(e.model.full.generators().size() == d.model.full.generators().size());
    for (const auto& g : d.model.full.generators()) {
      const GeneratorSpec* h = e.model.full.find(g.name);
      REQUIRE(h);
      CHECK(h->id == g.id);
      CHECK(h->linear == g.linear);
      CHECK(h->constant == g.constant);
    }
  }
}

TEST_CASE("solve-sas and solve-mult") {
  JobResult r = run("solve-sas", std::string(kTorsorField) + "equation linear=1 const=1;");
  CHECK(r.exit_code == 0);
  CHECK(r.report["verdict"] == "Solution");
  CHECK(r.report["solution"] == "t");
  CHECK(r.report["verified"] == true);
  CHECK(r.summary == "solve-sas: Solution");

  r = run("solve-sas", "gen g free;\nequation linear=g const=1;");
  CHECK(r.report["verdict"] == "Unsolvable");
  CHECK(r.exit_code == 0);

  r = run("solve-sas", "gen g free;\nregistry;\nequation linear=g const=g;");
  CHECK(r.report["verdict"] == "Unsolvable");

  r = run("solve-mult", "gen g free;\nequation base=g exponent=2;");
  CHECK(r.report["verdict"] == "Unsolvable");
  r = run("solve-mult", "gen g free;\nequation base=g[1]/g exponent=1;");
  CHECK(r.report["verdict"] == "Solution");
}

TEST_CASE("system commands") {
  JobResult r = run("decompose", kDecompose);
  REQUIRE(r.report["verdict"] == "Decomposition");
  CHECK(r.report["validation"]["ok"] == true);

  std::string ff = std::string(kUnitTorsors3) +
                   "let c12 = (s3 - t)^2; let c13 = s2 - t; let c23 = 3*(s1 - t);\n"
                   "summand c12 + c13; summand -c12 + c23; summand -c13 - c23;\n";
  r = run("ff-decompose", ff);
  REQUIRE(r.report["verdict"] == "Decomposition");
  CHECK(r.report["validation"]["ok"] == true);

  std::string bare = "blocks 3;\n"
                     "gen s1 affine linear=1 const=1 in 1;\n"
                     "gen s2 affine linear=1 const=1 in 2;\n"
                     "gen s3 affine linear=1 const=1 in 3;\n"
                     "summand 2*(s2 - s3); summand 2*(s3 - s1); summand 2*(s1 - s2);\n";
  r = run("ff-decompose", bare);
  CHECK(r.report["verdict"] == "NotFoundWithinBounds");
  JobOptions w;
  w.witnesses = true;
  r = run("ff-decompose", bare, w);
  REQUIRE(r.report["verdict"] == "Decomposition");
  CHECK(r.report["validation"]["ok"] == true);
  CHECK(r.report["closure_steps"].size() == 1);

  std::string ns = "blocks 2;\n"
                   "gen t affine linear=1 const=1;\n"
                   "gen s1 affine linear=1 const=1 in 1;\n"
                   "gen s2 affine linear=1 const=1 in 2;\n"
                   "btilde s1 + s2; summand s2; summand s1; rewrite s2; rewrite s1;\n";
  r = run("nsas-check", ns + "witness (s2^2 - s2)/2; witness (s1^2 - s1)/2;");
  CHECK(r.report["verdict"] == "Valid");
  r = run("nsas-check", ns + "witness (s2^2 - s2)/2 + t; witness (s1^2 - s1)/2;");
  CHECK(r.report["verdict"] == "Invalid");
}

TEST_CASE("character, hyperplane and amalgamation commands") {
  JobResult r = run("character", kCharacter);
  REQUIRE(r.report["verdict"] == "Consistent");
  const Json& out = r.report["outcomes"];
  REQUIRE(out.size() == 3);
  CHECK(out[0]["kind"] == "Forced");
  CHECK(out[0]["value"] == "7/12");
  CHECK(out[1]["kind"] == "Constrained");
  CHECK(out[1]["choices"] == "2");
  CHECK(out[2]["kind"] == "Free");

  r = run("character", "gen t affine linear=1 const=1;\ngen r affine linear=1 const=1;\n"
                       "entry r - t value=1/4;\nentry 2*(r - t) value=0;\n");
  REQUIRE(r.report["verdict"] == "Obstruction");
  CHECK(r.report["obstruction"]["angle_sum"] == "1/2");
  CHECK(run("character", "gen u free;\nentry u value=1/4;").exit_code == 2);

  r = run("hyperplane", "gen u free;\nelement u; element 2*u + 3;\nspan 1;\nheight 3;");
  REQUIRE(r.report["verdict"] == "Hyperplane");
  CHECK(r.report["z"] == Json::array({2, -1}));
  CHECK(run("hyperplane", "gen u free;\nelement u; element 2*u + 3;\nspan 1;\nheight 1;").report["verdict"] == "None");

  r = run("amalg-check", "gen g free;\nregistry;\namalg a=g r12=1/3 r13=1/3 r23=1/3;");
  CHECK(r.report["verdict"] == "Obstruction");
  r = run("amalg-check", "gen g free;\nregistry;\namalg a=g r12=1/3 r13=1/2 r23=1/6;");
  CHECK(r.report["verdict"] == "Solvable");

  JobOptions small;
  small.degree = 2;
  small.window = 0;
  r = run("amalg-check",
          std::string(kUnitTorsors3) + "summand 0; summand -(s1 - t)^3; summand (s1 - t)^3;\ndistinguished 3;", small);
  REQUIRE(r.report["verdict"] == "FailingInstance");
  CHECK(r.report["obstruction"]["angle_sum"] == "1/2");
}

TEST_CASE("closure-step command") {
  JobResult r = run("closure-step", "gen g free;\ntorsor 1;\ntorsor g;");
  REQUIRE(r.report["verdict"] == "Closed");
  CHECK(r.report["closure_steps"] == Json::array({"s(t) = t + 1", "s(t2) = g + t2"}));
  Document d = parse_document(r.report["presentation"].get<std::string>());
  CHECK(d.model.full.generators().size() == 3);

  r = run("closure-step", "gen g free;\ngen h free;\ntorsor 1;");
  CHECK(r.exit_code == 2);
}

TEST_CASE("verify-counterexample") {
  JobOptions o;
  o.degree = 2;
  o.window = 1;
  JobResult r = run("verify-counterexample", "", o);
  CHECK(r.exit_code == 0);
  CHECK(r.report["verdict"] == "refuted with certificate chain");
  CHECK(r.report["certificates"].size() == 2);
  for (const auto& s : r.report["chain"]) CHECK(s["ok"] == true);
  o.control = true;
  r = run("verify-counterexample", "", o);
  CHECK(r.report["verdict"] == "decomposable");
}

TEST_CASE("exit codes and reproducibility") {
  JobResult r = run("solve-sas", "gen g free;\nequation linear=g const=1 ;\nfoo");
  CHECK(r.exit_code == 2);
  CHECK(r.report["verdict"] == "InputError");
  CHECK(r.report["error"]["line"] == 3);
  CHECK(run("no-such-command", "").exit_code == 2);
  CHECK(run("solve-sas", "gen g free;").exit_code == 2);

  std::string bare = "blocks 3;\n"
                     "gen s1 affine linear=1 const=1 in 1;\n"
                     "gen s2 affine linear=1 const=1 in 2;\n"
                     "gen s3 affine linear=1 const=1 in 3;\n"
                     "summand 2*(s2 - s3); summand 2*(s3 - s1); summand 2*(s1 - s2);\n";
  JobOptions req;
  req.require_decision = true;
  req.degree = 2;
  req.window = 1;
  std::string open = "gen g free; gen t affine linear=1 const=g; equation linear=1 const=t;";
  r = run("solve-sas", open, req);
  CHECK(r.exit_code == 3);
  CHECK(r.report["verdict"] == "NoSolutionWithinBounds");
  req.require_decision = false;
  CHECK(run("solve-sas", open, req).exit_code == 0);
  req = {};
  req.require_decision = true;
  CHECK(run("ff-decompose", bare, req).exit_code == 3);
  CHECK(run("ff-decompose", bare).exit_code == 0);

  for (std::uint64_t seed : {1u, 7u}) {
    JobOptions o;
    o.seed = seed;
    CHECK(run("decompose", kDecompose, o).report.dump() == run("decompose", kDecompose, o).report.dump());
    CHECK(run("character", kCharacter, o).report.dump() == run("character", kCharacter, o).report.dump());
  }
  for (const auto& cmd : kCommands) CHECK(run(cmd, "gen g free; gen g free;").exit_code == 2);
}
