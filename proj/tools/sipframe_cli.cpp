// sipframe: run a problem spec and write a JSON or CSV report.
//
//   sipframe certify --spec specs/l32_projector.json --oracle
//   sipframe sample --spec specs/rkbs_subsampled.json --format csv --out errors.csv
//
// Exit codes: 0 the task ran (verdicts are in the report), 1 the spec or the
// command line is invalid, 2 a numerical routine failed.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "sipframe/cli_io.hpp"

namespace io = sipframe::io;

namespace {

struct Flags {
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  bool oracle = false;
  int oracle_resolution = 60;
  int threads = 1;
  std::string format = "json";
  std::string out;
  bool timing = false;
};

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw io::SchemaError("--spec", "cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int execute(io::Task task, const Flags &f) {
  io::json j;
  try {
    j = io::json::parse(read_file(f.spec_path));
  } catch (const io::json::parse_error &e) {
    throw io::SchemaError("spec", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw io::SchemaError("spec", "expected a JSON object");
  }
  if (!j.contains("task")) {
    j["task"] = io::to_string(task);
  }
  io::ProblemSpec spec = io::parse_spec(j);
  if (spec.task != task) {
    throw io::SchemaError("task", "spec is for '" + io::to_string(spec.task) +
                                      "' but the subcommand is '" + io::to_string(task) + "'");
  }
  if (f.seed) {
    spec.seed = *f.seed;
  }
  if (f.restarts) {
    spec.restarts = *f.restarts;
  }
  if (f.oracle && spec.oracle_resolution == 0) {
    spec.oracle_resolution = f.oracle_resolution;
  }
  spec.threads = f.threads;

  const auto start = std::chrono::steady_clock::now();
  io::Report report = io::run(spec);
  if (f.timing) {
    report.body["timing_ms"] = std::chrono::duration<double, std::milli>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
  }
  const std::string text = f.format == "csv" ? io::emit_csv(report) : io::emit_json(report);
  if (f.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(f.out, std::ios::binary);
    if (!out || !(out << text)) {
      std::cerr << "error: cannot write '" << f.out << "'\n";
      return static_cast<int>(io::ExitCode::Numerical);
    }
  }
  return static_cast<int>(io::ExitCode::Ok);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Frame certification in finite-dimensional semi-inner-product spaces"};
  app.set_version_flag("--version", std::string(sipframe::kVersion));
  app.require_subcommand(1);
  Flags flags;

  const io::Task tasks[] = {io::Task::Axioms, io::Task::Certify, io::Task::Reconstruct,
                            io::Task::Perturb, io::Task::Sample};
  const char *help[] = {
      "check the semi-inner-product axioms on random draws",
      "certify frame and K-frame bounds",
      "compare atomic system, K-frame and dual-family reconstruction",
      "check the perturbation premise and conclusion",
      "sample and reconstruct in a discrete RKBS",
  };
  for (int i = 0; i < 5; ++i) {
    CLI::App *sub = app.add_subcommand(io::to_string(tasks[i]), help[i]);
    sub->add_option("--spec", flags.spec_path, "problem spec (JSON)")->required();
    sub->add_option("--seed", flags.seed, "override the spec seed");
    sub->add_option("--restarts", flags.restarts, "optimizer restarts")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--oracle", flags.oracle, "force the grid oracle");
    sub->add_option("--oracle-resolution", flags.oracle_resolution,
                    "grid resolution used with --oracle")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threads", flags.threads, "worker threads for restarts")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", flags.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", flags.out, "write the report here instead of stdout");
    sub->add_flag("--timing", flags.timing, "add wall-clock time to the report");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return static_cast<int>(io::ExitCode::Validation);
  }

  io::Task task = io::Task::Certify;
  for (int i = 0; i < 5; ++i) {
    if (app.got_subcommand(io::to_string(tasks[i]))) {
      task = tasks[i];
    }
  }
  try {
    return execute(task, flags);
  } catch (const sipframe::NumericalFailure &e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return static_cast<int>(io::ExitCode::Numerical);
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(io::ExitCode::Validation);
  } catch (const std::exception &e) {
    std::cerr << "internal failure: " << e.what() << "\n";
    return static_cast<int>(io::ExitCode::Numerical);
  }
}
