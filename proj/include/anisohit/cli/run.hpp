#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "anisohit/cli/config.hpp"
#include "anisohit/cli/pipelines.hpp"
#include "anisohit/cli/report.hpp"
#include "anisohit/error.hpp"

namespace anisohit::cli {

enum ExitCode : int { kPass = 0, kSomeFail = 1, kConfigError = 2, kNumericalError = 3 };

struct RunOptions {
  std::string pipeline;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

// Loads the config, runs one pipeline and writes <out>/<pipeline>.csv (and
// <pipeline>-data.csv when the pipeline emits plot data).
inline int run(const RunOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    auto cfg = load_config(opt.config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.out) cfg.out = *opt.out;
    const auto result = run_pipeline(opt.pipeline, cfg);
    const std::filesystem::path dir(cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
    emit_csv(result.rows, dir / (opt.pipeline + ".csv"));
    if (!result.data.empty()) write_atomic(dir / (opt.pipeline + "-data.csv"), result.data);
    for (const auto& r : result.rows)
      log << (r.pass() ? "PASS " : "FAIL ") << r.experiment << " [" << r.params << "] observed "
          << format_value(r.observed) << " reference " << format_value(r.reference) << " " << format_tolerance(r)
          << "\n";
    return all_pass(result.rows) ? kPass : kSomeFail;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const InsufficientResolution& e) {
    err << "insufficient resolution: " << e.what() << "\n";
    return kNumericalError;
  } catch (const KernelError& e) {
    err << "kernel error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace anisohit::cli
