// Text documents describing presentations, systems and the inputs of each
// command, and the command runner behind the dfield tool.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfield/counterexample.hpp"
#include "json.hpp"

namespace dfield {

struct SourcePos {
  int line = 1, col = 1;
};

class ParseError : public std::invalid_argument {
 public:
  ParseError(SourcePos pos, const std::string& message);
  SourcePos pos;
  std::string message;  // without the position prefix
};

// keyword [expr] [name=expr ...];
struct Statement {
  std::string keyword;
  SourcePos pos;
  std::optional<Element> value;
  std::vector<std::pair<std::string, Element>> args;
  const Element* arg(const std::string& name) const;
  friend bool operator==(const Statement& a, const Statement& b) {
    return a.keyword == b.keyword && a.value == b.value && a.args == b.args;
  }
};

// Generators carry the block labels of a system; n is the number of blocks
// (0 when the document declares none).
struct Document {
  SystemModel model;
  std::vector<std::pair<std::string, Element>> lets;
  std::vector<Statement> statements;
  std::vector<const Statement*> all(const std::string& keyword) const;
  const Statement* first(const std::string& keyword) const;
};

Document parse_document(const std::string& text);
Element parse_expression(const std::string& text, const Presentation& p);
std::string print_document(const Document& d);

using Json = nlohmann::ordered_json;

struct JobOptions {
  std::optional<int> degree, window;
  int den_factors = 2;
  std::uint64_t seed = 1;
  bool require_decision = false;
  bool control = false;    // verify-counterexample: run the decomposable variant
  bool witnesses = false;  // ff-decompose: witness-driven recursion with closure steps
};

struct JobResult {
  int exit_code = 0;  // 0 completed, 2 input error, 3 no decision under --require-decision
  Json report;
  std::string summary;
};

extern const std::vector<std::string> kCommands;
JobResult run_job(const std::string& command, const std::string& input, const JobOptions& opts);

}  // namespace dfield
