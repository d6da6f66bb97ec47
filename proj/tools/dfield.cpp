// dfield COMMAND [INPUT] [--bounds-degree N] [--bounds-window W] [--seed S]
//        [--require-decision] [--out PATH]
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dfield/cli.hpp"

namespace {

bool read_input(const std::string& path, std::string& text) {
  std::stringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
  } else {
    std::ifstream in(path);
    if (!in) return false;
    ss << in.rdbuf();
  }
  text = ss.str();
  return true;
}

// Write to a sibling temporary, then rename over the target.
bool write_atomically(const std::string& path, const std::string& data) {
  std::filesystem::path target(path), tmp(path + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << data;
    if (!out.flush()) return false;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  return !ec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact difference-field engine: twisted sigma-AS equations, decompositions, characters"};
  std::string command, input_path, out_path;
  dfield::JobOptions opts;
  int degree = -1, window = -1;
  app.add_option("command", command, "one of: solve-sas, solve-mult, decompose, ff-decompose, character, "
                                     "hyperplane, amalg-check, nsas-check, closure-step, verify-counterexample")
      ->required();
  app.add_option("input", input_path, "input document, '-' for standard input");
  app.add_option("--bounds-degree", degree, "ansatz degree bound")->check(CLI::NonNegativeNumber);
  app.add_option("--bounds-window", window, "shift window of free generators")->check(CLI::NonNegativeNumber);
  app.add_option("--den-factors", opts.den_factors, "denominator factors per ansatz candidate")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", opts.seed, "seed for generic points");
  app.add_flag("--require-decision", opts.require_decision, "exit 3 when no definite answer is reached");
  app.add_flag("--control", opts.control, "verify-counterexample: run the decomposable control variant");
  app.add_flag("--witnesses", opts.witnesses, "ff-decompose: witness-driven recursion with closure steps");
  app.add_option("--out", out_path, "write the JSON report here instead of standard output");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (degree >= 0) opts.degree = degree;
  if (window >= 0) opts.window = window;

  std::string text;
  if (!input_path.empty() && !read_input(input_path, text)) {
    std::cerr << "cannot read " << input_path << "\n";
    return 2;
  }
  dfield::JobResult r = dfield::run_job(command, text, opts);
  std::string doc = r.report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << doc;
    std::cerr << r.summary << "\n";
  } else {
    if (!write_atomically(out_path, doc)) {
      std::cerr << "cannot write " << out_path << "\n";
      return 2;
    }
    std::cout << r.summary << "\n";
  }
  return r.exit_code;
}
