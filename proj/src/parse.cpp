#include <algorithm>
#include <cctype>
#include <set>

#include "dfield/cli.hpp"

namespace dfield {

ParseError::ParseError(SourcePos p, const std::string& m)
    : std::invalid_argument("line " + std::to_string(p.line) + ", column " + std::to_string(p.col) + ": " + m),
      pos(p),
      message(m) {}

const Element* Statement::arg(const std::string& name) const {
  for (const auto& [k, v] : args)
    if (k == name) return &v;
  return nullptr;
}

std::vector<const Statement*> Document::all(const std::string& keyword) const {
  std::vector<const Statement*> out;
  for (const auto& s : statements)
    if (s.keyword == keyword) out.push_back(&s);
  return out;
}

const Statement* Document::first(const std::string& keyword) const {
  for (const auto& s : statements)
    if (s.keyword == keyword) return &s;
  return nullptr;
}

namespace {

enum class Tok { Int, Name, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  SourcePos pos;
  size_t i = 0;
  auto advance = [&](size_t k) {
    for (size_t e = i + k; i < e; ++i) {
      if (s[i] == '\n') {
        ++pos.line;
        pos.col = 1;
      } else {
        ++pos.col;
      }
    }
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
    } else if (c == '#') {
      size_t e = s.find('\n', i);
      advance((e == std::string::npos ? s.size() : e) - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t e = i;
      while (e < s.size() && std::isdigit(static_cast<unsigned char>(s[e]))) ++e;
      out.push_back({Tok::Int, s.substr(i, e - i), pos});
      advance(e - i);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t e = i;
      while (e < s.size() && (std::isalnum(static_cast<unsigned char>(s[e])) || s[e] == '_')) ++e;
      out.push_back({Tok::Name, s.substr(i, e - i), pos});
      advance(e - i);
    } else if (std::string("+-*/^()[],;={}").find(c) != std::string::npos) {
      out.push_back({Tok::Punct, std::string(1, c), pos});
      advance(1);
    } else {
      throw ParseError(pos, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", pos});
  return out;
}

const std::set<std::string> kKeywords{"equation", "summand", "entry",   "query",   "element",
                                      "span",     "height",  "amalg",   "distinguished", "btilde",
                                      "rewrite",  "witness", "torsor",  "registry"};

class Parser {
 public:
  Parser(std::vector<Token> toks, const Presentation* fixed) : t_(std::move(toks)), fixed_(fixed) {}

  Document document() {
    while (peek().kind != Tok::End) statement();
    int n = declared_n_;
    for (const auto& [id, w] : doc_.model.labels)
      for (int i = 1; i <= 31; ++i)
        if (w & index_bit(i)) n = std::max(n, i);
    doc_.model.n = n;
    for (const auto& [id, w] : doc_.model.labels)
      if (w & ~full_set(n)) throw ParseError(gen_pos_.at(id), "label outside the declared blocks");
    return std::move(doc_);
  }

  Element expression_only() {
    Element x = expr();
    if (peek().kind != Tok::End) throw ParseError(peek().pos, "unexpected '" + peek().text + "' after expression");
    return x;
  }

 private:
  std::vector<Token> t_;
  size_t i_ = 0;
  const Presentation* fixed_;
  Document doc_;
  int declared_n_ = 0;
  std::map<int, SourcePos> gen_pos_;

  const Presentation& pres() const { return fixed_ ? *fixed_ : doc_.model.full; }
  const Token& peek(size_t k = 0) const { return t_[std::min(i_ + k, t_.size() - 1)]; }
  bool at(const std::string& p) const { return peek().kind == Tok::Punct && peek().text == p; }
  Token take() { return t_[i_ < t_.size() - 1 ? i_++ : i_]; }
  static std::string describe(const Token& t) { return t.kind == Tok::End ? "end of input" : "'" + t.text + "'"; }
  void expect(const std::string& p) {
    if (!at(p)) throw ParseError(peek().pos, "expected '" + p + "', found " + describe(peek()));
    take();
  }
  std::string name() {
    if (peek().kind != Tok::Name) throw ParseError(peek().pos, "expected a name, found " + describe(peek()));
    return take().text;
  }
  long integer() {
    bool neg = false;
    if (at("-")) {
      take();
      neg = true;
    }
    if (peek().kind != Tok::Int) throw ParseError(peek().pos, "expected an integer, found " + describe(peek()));
    Token t = take();
    Int v(t.text);
    if (!v.fits_slong_p()) throw ParseError(t.pos, "integer out of range");
    return neg ? -v.get_si() : v.get_si();
  }

  void statement() {
    Token kw = peek();
    std::string k = name();
    if (k == "gen") return gen(kw.pos);
    if (k == "blocks") {
      long n = integer();
      if (n < 0 || n > 31) throw ParseError(kw.pos, "between 0 and 31 blocks are supported");
      declared_n_ = static_cast<int>(n);
      expect(";");
      return;
    }
    if (k == "let") {
      Token nt = peek();
      std::string nm = name();
      if (pres().find(nm) || find_let(nm)) throw ParseError(nt.pos, "name '" + nm + "' is already defined");
      expect("=");
      Element v = expr();
      expect(";");
      doc_.lets.push_back({nm, v});
      return;
    }
    if (!kKeywords.count(k)) throw ParseError(kw.pos, "unknown statement '" + k + "'");
    Statement s{k, kw.pos, std::nullopt, {}};
    if (!at(";") && !(peek().kind == Tok::Name && peek(1).kind == Tok::Punct && peek(1).text == "=")) s.value = expr();
    while (!at(";")) {
      Token at_tok = peek();
      std::string key = name();
      expect("=");
      if (s.arg(key)) throw ParseError(at_tok.pos, "duplicate argument '" + key + "'");
      s.args.push_back({key, expr()});
    }
    expect(";");
    doc_.statements.push_back(std::move(s));
  }

  IndexSet label() {
    if (!at("{")) {
      long i = integer();
      if (i < 1 || i > 31) throw ParseError(peek().pos, "block index must lie in 1..31");
      return index_bit(static_cast<int>(i));
    }
    take();
    IndexSet w = 0;
    while (!at("}")) {
      long i = integer();
      if (i < 1 || i > 31) throw ParseError(peek().pos, "block index must lie in 1..31");
      w |= index_bit(static_cast<int>(i));
      if (!at("}")) expect(",");
    }
    take();
    return w;
  }

  void gen(SourcePos pos) {
    Token nt = peek();
    std::string nm = name();
    if (pres().find(nm) || find_let(nm) || nm == "s" || nm == "wp")
      throw ParseError(nt.pos, "name '" + nm + "' is already defined or reserved");
    Token kt = peek();
    std::string kind = name();
    Element alpha(1), beta(0);
    if (kind == "affine") {
      while (peek().kind == Tok::Name && (peek().text == "linear" || peek().text == "const")) {
        std::string key = take().text;
        expect("=");
        (key == "linear" ? alpha : beta) = expr();
      }
    } else if (kind != "free") {
      throw ParseError(kt.pos, "expected 'free' or 'affine', found " + describe(kt));
    }
    IndexSet w = 0;
    if (peek().kind == Tok::Name && peek().text == "in") {
      take();
      w = label();
    }
    expect(";");
    SystemModel& m = doc_.model;
    if (kind == "affine") {
      for (const Element* x : {&alpha, &beta})
        if ((m.support(*x) & ~w) != 0)
          throw ParseError(pos, "rule of '" + nm + "' leaves corner " + index_set_str(w));
    }
    try {
      int id = kind == "free" ? m.full.add_free(nm) : m.full.add_affine(nm, alpha, beta);
      m.labels[id] = w;
      gen_pos_[id] = pos;
    } catch (const std::invalid_argument& e) {
      throw ParseError(pos, e.what());
    }
  }

  const Element* find_let(const std::string& nm) const {
    for (const auto& [k, v] : doc_.lets)
      if (k == nm) return &v;
    return nullptr;
  }

  Element expr() {
    Element x = term();
    while (at("+") || at("-")) {
      bool plus = take().text == "+";
      Element y = term();
      x = plus ? x + y : x - y;
    }
    return x;
  }
  Element term() {
    Element x = unary();
    while (at("*") || at("/")) {
      Token op = take();
      Element y = unary();
      if (op.text == "*") {
        x = x * y;
      } else {
        if (y.is_zero()) throw ParseError(op.pos, "division by zero");
        x = x / y;
      }
    }
    return x;
  }
  Element unary() {
    if (at("-")) {
      take();
      return -unary();
    }
    return power();
  }
  Element power() {
    Element x = atom();
    if (at("^")) {
      Token op = take();
      long k = integer();
      if (k < 0 && x.is_zero()) throw ParseError(op.pos, "division by zero");
      if (k > 1000 || k < -1000) throw ParseError(op.pos, "exponent out of range");
      x = x.pow(static_cast<int>(k));
    }
    return x;
  }
  Element atom() {
    Token t = peek();
    if (t.kind == Tok::Int) {
      take();
      return Element(Rat(Int(t.text)));
    }
    if (at("(")) {
      take();
      Element x = expr();
      expect(")");
      return x;
    }
    if (t.kind != Tok::Name) throw ParseError(t.pos, "expected an expression, found " + describe(t));
    take();
    bool call = at("(");
    if (call && (t.text == "s" || t.text == "wp") && !pres().find(t.text)) {
      take();
      Element x = expr();
      long k = 1;
      if (t.text == "s" && at(",")) {
        take();
        k = integer();
      }
      expect(")");
      if (k > 1000 || k < -1000) throw ParseError(t.pos, "shift out of range");
      return t.text == "s" ? pres().sigma(x, static_cast<int>(k)) : pres().wp(x);
    }
    if (const Element* v = find_let(t.text)) {
      if (at("[")) throw ParseError(peek().pos, "shift applies to free generators only");
      return *v;
    }
    const GeneratorSpec* g = pres().find(t.text);
    if (!g) throw ParseError(t.pos, "unknown generator '" + t.text + "'");
    if (at("[")) {
      take();
      long k = integer();
      expect("]");
      if (!g->is_free()) return pres().sigma(pres().var(g->id), static_cast<int>(k));
      return pres().var(g->id, static_cast<int>(k));
    }
    return pres().var(g->id);
  }
};

}  // namespace

Document parse_document(const std::string& text) { return Parser(tokenize(text), nullptr).document(); }

Element parse_expression(const std::string& text, const Presentation& p) {
  return Parser(tokenize(text), &p).expression_only();
}

std::string print_document(const Document& d) {
  const SystemModel& m = d.model;
  const Presentation& p = m.full;
  std::string out;
  if (m.n > 0) out += "blocks " + std::to_string(m.n) + ";\n";
  for (const auto& g : p.generators()) {
    out += "gen " + g.name;
    if (g.is_free())
      out += " free";
    else
      out += " affine linear=" + p.str(g.linear) + " const=" + p.str(g.constant);
    auto it = m.labels.find(g.id);
    if (it != m.labels.end() && it->second != 0) out += " in " + index_set_str(it->second);
    out += ";\n";
  }
  for (const auto& [k, v] : d.lets) out += "let " + k + " = " + p.str(v) + ";\n";
  for (const auto& s : d.statements) {
    out += s.keyword;
    if (s.value) out += " " + p.str(*s.value);
    for (const auto& [k, v] : s.args) out += " " + k + "=" + p.str(v);
    out += ";\n";
  }
  return out;
}

}  // namespace dfield
