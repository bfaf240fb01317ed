#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace epsaudit {

// One privacy-mitigation strategy's outcome: utility against epsilon*
// statistics over repeated model instances.
struct StrategyPoint {
  std::string id;
  double utility = 0.0;  // AUROC or accuracy; caller-defined
  double eps_star_mean = 0.0;
  double eps_star_min = 0.0;
  double eps_star_max = 0.0;
  std::map<std::string, std::string> tags;
};

enum class FrontierObjective { mean_eps, max_eps };

struct Frontier {
  std::vector<std::string> dominance_set;  // Pareto-nondominated ids
  std::vector<std::string> hull_set;       // upper-left convex hull vertices
};

// Nondominated set (maximize utility, minimize epsilon*) plus the convex hull
// of that set. Both are reported: points strictly between hull vertices are
// still nondominated, so neither set alone tells the whole story.
Frontier pareto_frontier(std::span<const StrategyPoint> points,
                         FrontierObjective objective =
                             FrontierObjective::mean_eps);

// Gaussian-kernel KDE with the Silverman bandwidth 1.06 sigma n^{-1/5},
// evaluated on the given grid.
std::vector<double> kde_marginal(std::span<const double> values,
                                 std::span<const double> grid);

struct MarginalCurve {
  std::string category;  // e.g. "dp" / "baseline"
  std::string axis;      // "utility" or "epsilon_star"
  std::vector<double> grid;
  std::vector<double> density;
};

// Marginal densities per strategy category (split on presence of the
// dp_epsilon tag) for both axes. Categories with fewer than two points or
// zero spread are skipped.
std::vector<MarginalCurve> compute_marginals(
    std::span<const StrategyPoint> points, std::size_t grid_points = 201);

enum class LandscapeFormat { json, csv, svg };

LandscapeFormat parse_landscape_format(const std::string& name);

// Serializes the landscape. JSON carries everything (schema_version 1);
// CSV is the flat point table; SVG is a minimal static rendering with
// min-max error bars and the hull polyline.
std::string emit_landscape(std::span<const StrategyPoint> points,
                           const Frontier& frontier,
                           std::span<const MarginalCurve> marginals,
                           LandscapeFormat format);

// Inverse of the JSON emitter (points only; used for round-trips).
std::vector<StrategyPoint> parse_landscape_json(const std::string& text);

}  // namespace epsaudit
