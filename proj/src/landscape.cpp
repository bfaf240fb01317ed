#include "epsaudit/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "epsaudit/errors.hpp"
#include "epsaudit/numerics.hpp"

namespace epsaudit {

namespace {

double eps_of(const StrategyPoint& p, FrontierObjective objective) {
  return objective == FrontierObjective::mean_eps ? p.eps_star_mean
                                                  : p.eps_star_max;
}

struct Xy {
  double eps;
  double util;
  std::size_t index;
};

double cross(const Xy& o, const Xy& a, const Xy& b) {
  return (a.eps - o.eps) * (b.util - o.util) -
         (a.util - o.util) * (b.eps - o.eps);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Frontier pareto_frontier(std::span<const StrategyPoint> points,
                         FrontierObjective objective) {
  if (points.empty()) throw DomainError("frontier needs at least one point");
  for (const auto& p : points) {
    if (!std::isfinite(p.utility) || !std::isfinite(eps_of(p, objective))) {
      throw DomainError("utilities and epsilon* values must be finite");
    }
    if (!(p.eps_star_min <= p.eps_star_mean &&
          p.eps_star_mean <= p.eps_star_max) ||
        p.eps_star_min < 0.0) {
      throw DomainError("epsilon* statistics out of order for point " + p.id);
    }
  }

  std::vector<Xy> xs;
  xs.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    xs.push_back(Xy{eps_of(points[i], objective), points[i].utility, i});
  }
  // Sort by eps ascending, utility descending; ties broken by id so output
  // does not depend on input ordering.
  std::stable_sort(xs.begin(), xs.end(), [&](const Xy& a, const Xy& b) {
    if (a.eps != b.eps) return a.eps < b.eps;
    if (a.util != b.util) return a.util > b.util;
    return points[a.index].id < points[b.index].id;
  });

  Frontier frontier;
  std::vector<Xy> survivors;
  double best_util = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < xs.size()) {
    std::size_t j = i;
    while (j < xs.size() && xs[j].eps == xs[i].eps) ++j;
    const double group_max = xs[i].util;  // group is sorted utility-first
    if (group_max > best_util) {
      for (std::size_t k = i; k < j && xs[k].util == group_max; ++k) {
        frontier.dominance_set.push_back(points[xs[k].index].id);
        survivors.push_back(xs[k]);
      }
      best_util = group_max;
    }
    i = j;
  }

  // Upper hull over the distinct survivor coordinates.
  std::vector<Xy> geom;
  for (const Xy& p : survivors) {
    if (geom.empty() || geom.back().eps != p.eps || geom.back().util != p.util) {
      geom.push_back(p);
    }
  }
  std::vector<Xy> hull;
  for (const Xy& p : geom) {
    while (hull.size() >= 2 &&
           cross(hull[hull.size() - 2], hull.back(), p) >= 0.0) {
      hull.pop_back();
    }
    hull.push_back(p);
  }
  for (const Xy& h : hull) {
    // Every survivor sharing the vertex coordinate belongs to the hull set.
    for (const Xy& s : survivors) {
      if (s.eps == h.eps && s.util == h.util) {
        frontier.hull_set.push_back(points[s.index].id);
      }
    }
  }
  return frontier;
}

std::vector<double> kde_marginal(std::span<const double> values,
                                 std::span<const double> grid) {
  if (values.size() < 2) {
    throw DegenerateSampleError("KDE needs at least two values");
  }
  const double sigma = sample_std(values);
  if (!(sigma > 0.0)) {
    throw DegenerateSampleError("KDE needs values with positive spread");
  }
  const double n = static_cast<double>(values.size());
  const double h = 1.06 * sigma * std::pow(n, -0.2);
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  std::vector<double> density;
  density.reserve(grid.size());
  for (double g : grid) {
    double acc = 0.0;
    for (double x : values) {
      const double z = (g - x) / h;
      acc += std::exp(-0.5 * z * z);
    }
    density.push_back(acc * inv_sqrt_2pi / (n * h));
  }
  return density;
}

std::vector<MarginalCurve> compute_marginals(
    std::span<const StrategyPoint> points, std::size_t grid_points) {
  struct Axis {
    const char* name;
    double (*get)(const StrategyPoint&);
  };
  static constexpr Axis axes[2] = {
      {"utility", [](const StrategyPoint& p) { return p.utility; }},
      {"epsilon_star", [](const StrategyPoint& p) { return p.eps_star_mean; }}};

  std::vector<MarginalCurve> curves;
  for (const char* category : {"dp", "baseline"}) {
    std::vector<const StrategyPoint*> members;
    for (const auto& p : points) {
      const bool is_dp = p.tags.count("dp_epsilon") > 0;
      if (is_dp == (std::string(category) == "dp")) members.push_back(&p);
    }
    if (members.size() < 2) continue;
    for (const Axis& axis : axes) {
      std::vector<double> values;
      values.reserve(members.size());
      for (const auto* p : members) values.push_back(axis.get(*p));
      const double sigma = sample_std(values);
      if (!(sigma > 0.0)) continue;
      const double h =
          1.06 * sigma * std::pow(static_cast<double>(values.size()), -0.2);
      const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
      const double lo = *lo_it - 3.0 * h;
      const double hi = *hi_it + 3.0 * h;
      MarginalCurve curve;
      curve.category = category;
      curve.axis = axis.name;
      curve.grid.reserve(grid_points);
      for (std::size_t i = 0; i < grid_points; ++i) {
        curve.grid.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                      static_cast<double>(grid_points - 1));
      }
      curve.density = kde_marginal(values, curve.grid);
      curves.push_back(std::move(curve));
    }
  }
  return curves;
}

LandscapeFormat parse_landscape_format(const std::string& name) {
  if (name == "json") return LandscapeFormat::json;
  if (name == "csv") return LandscapeFormat::csv;
  if (name == "svg") return LandscapeFormat::svg;
  throw UnknownFormatError("unknown landscape format: " + name);
}

namespace {

nlohmann::json point_to_json(const StrategyPoint& p) {
  nlohmann::json j;
  j["id"] = p.id;
  j["utility"] = p.utility;
  j["eps_star_mean"] = p.eps_star_mean;
  j["eps_star_min"] = p.eps_star_min;
  j["eps_star_max"] = p.eps_star_max;
  j["tags"] = p.tags;
  return j;
}

std::string emit_json(std::span<const StrategyPoint> points,
                      const Frontier& frontier,
                      std::span<const MarginalCurve> marginals) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["points"] = nlohmann::json::array();
  for (const auto& p : points) doc["points"].push_back(point_to_json(p));
  doc["frontier"]["dominance_set"] = frontier.dominance_set;
  doc["frontier"]["hull_set"] = frontier.hull_set;
  doc["marginals"] = nlohmann::json::array();
  for (const auto& m : marginals) {
    nlohmann::json jm;
    jm["category"] = m.category;
    jm["axis"] = m.axis;
    jm["grid"] = m.grid;
    jm["density"] = m.density;
    doc["marginals"].push_back(jm);
  }
  return doc.dump(2) + "\n";
}

std::string emit_csv(std::span<const StrategyPoint> points,
                     const Frontier& frontier) {
  auto contains = [](const std::vector<std::string>& ids,
                     const std::string& id) {
    return std::find(ids.begin(), ids.end(), id) != ids.end();
  };
  std::string out =
      "id,utility,eps_star_mean,eps_star_min,eps_star_max,nondominated,"
      "on_hull,tags\n";
  for (const auto& p : points) {
    std::string tags;
    for (const auto& [k, v] : p.tags) {
      if (!tags.empty()) tags += ';';
      tags += k + "=" + v;
    }
    out += p.id + ',' + format_double(p.utility) + ',' +
           format_double(p.eps_star_mean) + ',' +
           format_double(p.eps_star_min) + ',' +
           format_double(p.eps_star_max) + ',' +
           (contains(frontier.dominance_set, p.id) ? "1" : "0") + ',' +
           (contains(frontier.hull_set, p.id) ? "1" : "0") + ',' + tags + '\n';
  }
  return out;
}

std::string emit_svg(std::span<const StrategyPoint> points,
                     const Frontier& frontier) {
  constexpr double w = 640.0, hgt = 480.0, pad = 50.0;
  double eps_lo = 1e300, eps_hi = -1e300, ut_lo = 1e300, ut_hi = -1e300;
  for (const auto& p : points) {
    eps_lo = std::min(eps_lo, p.eps_star_min);
    eps_hi = std::max(eps_hi, p.eps_star_max);
    ut_lo = std::min(ut_lo, p.utility);
    ut_hi = std::max(ut_hi, p.utility);
  }
  if (eps_hi <= eps_lo) eps_hi = eps_lo + 1.0;
  if (ut_hi <= ut_lo) ut_hi = ut_lo + 1.0;
  auto sx = [&](double eps) {
    return pad + (eps - eps_lo) / (eps_hi - eps_lo) * (w - 2 * pad);
  };
  auto sy = [&](double ut) {
    return hgt - pad - (ut - ut_lo) / (ut_hi - ut_lo) * (hgt - 2 * pad);
  };
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" "
                "height=\"%g\">\n",
                w, hgt);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                "stroke=\"black\"/>\n",
                pad, hgt - pad, w - pad, hgt - pad);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                "stroke=\"black\"/>\n",
                pad, pad, pad, hgt - pad);
  out += buf;
  // Hull polyline across the hull vertices ordered by epsilon.
  std::vector<const StrategyPoint*> hull_pts;
  for (const auto& id : frontier.hull_set) {
    for (const auto& p : points) {
      if (p.id == id) hull_pts.push_back(&p);
    }
  }
  std::sort(hull_pts.begin(), hull_pts.end(),
            [](const StrategyPoint* a, const StrategyPoint* b) {
              return a->eps_star_mean < b->eps_star_mean;
            });
  if (hull_pts.size() >= 2) {
    out += "<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"";
    for (const auto* p : hull_pts) {
      std::snprintf(buf, sizeof(buf), "%g,%g ", sx(p->eps_star_mean),
                    sy(p->utility));
      out += buf;
    }
    out += "\"/>\n";
  }
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                  "stroke=\"#999\"/>\n",
                  sx(p.eps_star_min), sy(p.utility), sx(p.eps_star_max),
                  sy(p.utility));
    out += buf;
    const bool dp = p.tags.count("dp_epsilon") > 0;
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%g\" cy=\"%g\" r=\"4\" fill=\"%s\"/>\n",
                  sx(p.eps_star_mean), sy(p.utility),
                  dp ? "#2ca02c" : "#d62728");
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

std::string emit_landscape(std::span<const StrategyPoint> points,
                           const Frontier& frontier,
                           std::span<const MarginalCurve> marginals,
                           LandscapeFormat format) {
  switch (format) {
    case LandscapeFormat::json:
      return emit_json(points, frontier, marginals);
    case LandscapeFormat::csv:
      return emit_csv(points, frontier);
    case LandscapeFormat::svg:
      return emit_svg(points, frontier);
  }
  throw UnknownFormatError("unknown landscape format");
}

std::vector<StrategyPoint> parse_landscape_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid landscape JSON: ") + e.what());
  }
  std::vector<StrategyPoint> points;
  if (!doc.contains("points")) throw ParseError("landscape JSON lacks points");
  for (const auto& j : doc["points"]) {
    StrategyPoint p;
    p.id = j.at("id").get<std::string>();
    p.utility = j.at("utility").get<double>();
    p.eps_star_mean = j.at("eps_star_mean").get<double>();
    p.eps_star_min = j.at("eps_star_min").get<double>();
    p.eps_star_max = j.at("eps_star_max").get<double>();
    if (j.contains("tags")) {
      p.tags = j.at("tags").get<std::map<std::string, std::string>>();
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace epsaudit
