#include "dfield/difference.hpp"

#include <algorithm>
#include <stdexcept>

namespace dfield {

Presentation Presentation::from_specs(std::vector<GeneratorSpec> specs) {
  Presentation p;
  p.gens_ = std::move(specs);
  for (const auto& g : p.gens_) p.next_id_ = std::max(p.next_id_, g.id + 1);
  return p;
}

namespace {
std::string spec_diagnostic(const Presentation& p, const GeneratorSpec& g) {
  if (g.is_free()) return {};
  if (g.linear.is_zero()) return "generator '" + g.name + "': linear part zero";
  for (const RatFunc* part : {&g.linear, &g.constant})
    for (VarId v : part->variables()) {
      if (!p.has(v.gen)) return "generator '" + g.name + "': rule mentions an unknown generator";
      const auto& dep = p.spec(v.gen);
      if (v.gen >= g.id)
        return "generator '" + g.name + "': stratification violated, rule mentions '" + dep.name +
               "' which is not declared earlier";
      if (!dep.is_free() && v.shift != 0)
        return "generator '" + g.name + "': rule mentions a shifted bound generator '" + dep.name + "'";
    }
  return {};
}
}  // namespace

std::vector<std::string> Presentation::validate() const {
  std::vector<std::string> out;
  std::set<std::string> names;
  std::set<int> ids;
  for (const auto& g : gens_) {
    if (g.name.empty()) out.push_back("generator with empty name");
    if (!names.insert(g.name).second) out.push_back("generator '" + g.name + "': duplicate name");
    if (!ids.insert(g.id).second) out.push_back("generator '" + g.name + "': duplicate id");
    auto d = spec_diagnostic(*this, g);
    if (!d.empty()) out.push_back(d);
  }
  return out;
}

int Presentation::add_free(const std::string& name) {
  GeneratorSpec g;
  g.name = name;
  g.id = next_id_;
  if (find(name)) throw std::invalid_argument("generator '" + name + "': duplicate name");
  gens_.push_back(g);
  return next_id_++;
}

int Presentation::add_affine(const std::string& name, const RatFunc& alpha, const RatFunc& beta) {
  GeneratorSpec g;
  g.name = name;
  g.kind = GeneratorSpec::Kind::Affine;
  g.linear = alpha;
  g.constant = beta;
  g.id = next_id_;
  if (find(name)) throw std::invalid_argument("generator '" + name + "': duplicate name");
  auto d = spec_diagnostic(*this, g);
  if (!d.empty()) throw std::invalid_argument(d);
  gens_.push_back(g);
  return next_id_++;
}

Presentation Presentation::with_free(const std::string& name) const {
  Presentation p = *this;
  p.add_free(name);
  return p;
}

Presentation Presentation::with_affine(const std::string& name, const RatFunc& alpha,
                                       const RatFunc& beta) const {
  Presentation p = *this;
  p.add_affine(name, alpha, beta);
  return p;
}

const GeneratorSpec& Presentation::spec(int id) const {
  for (const auto& g : gens_)
    if (g.id == id) return g;
  throw std::out_of_range("unknown generator id " + std::to_string(id));
}

const GeneratorSpec* Presentation::find(const std::string& name) const {
  for (const auto& g : gens_)
    if (g.name == name) return &g;
  return nullptr;
}

bool Presentation::has(int id) const {
  return std::any_of(gens_.begin(), gens_.end(), [id](const auto& g) { return g.id == id; });
}

int Presentation::id_of(const std::string& name) const {
  const auto* g = find(name);
  if (!g) throw std::invalid_argument("unknown generator '" + name + "'");
  return g->id;
}

bool Presentation::all_free() const {
  return std::all_of(gens_.begin(), gens_.end(), [](const auto& g) { return g.is_free(); });
}

Element Presentation::var(int id, int shift) const {
  const auto& g = spec(id);
  if (!g.is_free() && shift != 0) return sigma(RatFunc::var({id, 0}), shift);
  return RatFunc::var({id, shift});
}

Element Presentation::gen(const std::string& name, int shift) const { return var(id_of(name), shift); }

VarNamer Presentation::namer() const {
  return [this](VarId v) {
    std::string s;
    if (has(v.gen)) s = spec(v.gen).name;
    else s = "?" + std::to_string(v.gen);
    if (v.shift != 0) s += "[" + std::to_string(v.shift) + "]";
    return s;
  };
}

bool Presentation::contains(const Element& x) const {
  for (VarId v : x.variables()) {
    if (!has(v.gen)) return false;
    if (!spec(v.gen).is_free() && v.shift != 0) return false;
  }
  return true;
}

Presentation Presentation::restrict_to(const std::set<int>& ids) const {
  std::vector<GeneratorSpec> kept;
  for (const auto& g : gens_)
    if (ids.count(g.id)) kept.push_back(g);
  Presentation p = from_specs(std::move(kept));
  p.next_id_ = next_id_;
  return p;
}

RatFunc Presentation::image(VarId v, int dir) const {
  const auto& g = spec(v.gen);
  if (g.is_free()) return RatFunc::var({v.gen, v.shift + dir});
  if (v.shift != 0) throw std::logic_error("bound generator '" + g.name + "' materialized at a shift");
  RatFunc a = RatFunc::var(v);
  if (dir > 0) return g.linear * a + g.constant;
  return (a - sigma(g.constant, -1)) / sigma(g.linear, -1);
}

Element Presentation::sigma(const Element& x, int k) const {
  if (k == 0 || x.is_constant()) return x;
  const auto vars = x.variables();
  bool free_only = std::all_of(vars.begin(), vars.end(), [this](VarId v) { return spec(v.gen).is_free(); });
  if (free_only) {
    // Shifting every index preserves the monomial order, so the form stays canonical.
    auto f = [k](VarId v) { return VarId{v.gen, v.shift + k}; };
    return x.rename_monotone(f);
  }
  const int dir = k > 0 ? 1 : -1;
  Element y = x;
  for (int step = 0; step < std::abs(k); ++step) {
    std::map<VarId, RatFunc> images;
    for (VarId v : y.variables()) images.emplace(v, image(v, dir));
    y = y.substitute(images);
  }
  return y;
}

std::optional<std::pair<int, int>> Presentation::shift_window(const Element& x, int gen) {
  std::optional<std::pair<int, int>> w;
  for (VarId v : x.variables()) {
    if (v.gen != gen) continue;
    if (!w) w = std::make_pair(v.shift, v.shift);
    w->first = std::min(w->first, v.shift);
    w->second = std::max(w->second, v.shift);
  }
  return w;
}

}  // namespace dfield
