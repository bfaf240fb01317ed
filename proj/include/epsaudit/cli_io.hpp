#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "epsaudit/epsilon_core.hpp"
#include "epsaudit/goodness_of_fit.hpp"
#include "epsaudit/landscape.hpp"
#include "epsaudit/loss_model.hpp"
#include "epsaudit/mechanism_audit.hpp"
#include "epsaudit/simulation.hpp"

namespace epsaudit {

inline constexpr const char* kToolName = "epsaudit";
inline constexpr const char* kToolVersion = "0.1.0";

// One model instance in an ensemble/landscape manifest.
struct ManifestEntry {
  std::string model_id;
  std::string train_path;
  std::string pop_path;
  double utility = 0.0;
  std::map<std::string, std::string> tags;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

// Reads a loss CSV. Header decides the interpretation:
//   loss                      one precomputed loss per row
//   prediction,label          binary predictions, losses computed here
//   p_0,...,p_{C-1},label     multi-class predictions (label = class index)
// Any NaN/inf row is a hard parse error; silently skipping rows would bias
// the audit.
LossSet parse_loss_file(const std::filesystem::path& path, LossRole role,
                        bool clip_predictions = true);

// CSV manifest: model_id,train_loss_path,pop_loss_path,utility,tags with
// tags as semicolon-separated key=value pairs. Relative loss paths resolve
// against the manifest's directory.
Manifest parse_manifest(const std::filesystem::path& path);

// Strategy points table: id,utility,eps_star_mean,eps_star_min,eps_star_max,tags
std::vector<StrategyPoint> parse_points_file(
    const std::filesystem::path& path);

// Whole-file atomic write (temp file + rename).
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

std::string loss_file_csv(std::span<const double> values);

// Report serializers (all carry a provenance block: tool, version, command,
// config echo, inputs).
std::string audit_report_json(const EpsilonStarResult& result,
                              const AuditConfig& config,
                              const std::string& train_name,
                              const std::string& pop_name);
std::string simulation_csv(const SimResult& result);
std::string simulation_summary_json(const SimResult& result);
std::string simulation_svg(const SimResult& result);
std::string mechanism_report_json(const MechanismReport& report,
                                  const std::vector<std::string>& model_ids,
                                  std::size_t grid_size,
                                  const std::string& manifest_name);

// Entry point behind the epsaudit binary. Exit codes: 0 success, 2 input
// error (flags, files, formats), 3 numerical/degenerate error.
int cli_main(int argc, const char* const* argv);

}  // namespace epsaudit
