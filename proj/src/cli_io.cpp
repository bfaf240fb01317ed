#include "epsaudit/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "epsaudit/errors.hpp"
#include "epsaudit/numerics.hpp"
#include "epsaudit/rng.hpp"

namespace epsaudit {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // Trim surrounding whitespace.
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_strict_double(const std::string& token, std::size_t line_no) {
  if (token.empty()) {
    throw ParseError("empty numeric field on line " + std::to_string(line_no));
  }
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) {
    throw ParseError("malformed number '" + token + "' on line " +
                     std::to_string(line_no));
  }
  if (!std::isfinite(v)) {
    throw ParseError("non-finite value '" + token + "' on line " +
                     std::to_string(line_no) +
                     "; NaN/inf rows are rejected rather than skipped");
  }
  return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("file is empty: " + path.string());
  return lines;
}

std::map<std::string, std::string> parse_tags(const std::string& text,
                                              std::size_t line_no) {
  std::map<std::string, std::string> tags;
  if (text.empty()) return tags;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto pos = item.find('=');
    if (pos == std::string::npos) {
      throw ParseError("tag '" + item + "' on line " + std::to_string(line_no) +
                       " is not key=value");
    }
    tags[item.substr(0, pos)] = item.substr(pos + 1);
  }
  return tags;
}

}  // namespace

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

LossSet parse_loss_file(const std::filesystem::path& path, LossRole role,
                        bool clip_predictions) {
  const auto lines = read_lines(path);
  const auto header = split_csv_line(lines[0]);
  LossSet set;
  set.role = role;
  set.source_id = path.filename().string();

  if (header.size() == 1 && header[0] == "loss") {
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto fields = split_csv_line(lines[i]);
      if (fields.size() != 1) {
        throw ParseError("expected one loss column on line " +
                         std::to_string(i + 1));
      }
      set.values.push_back(parse_strict_double(fields[0], i + 1));
    }
  } else if (header.size() == 2 && header[0] == "prediction" &&
             header[1] == "label") {
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto fields = split_csv_line(lines[i]);
      if (fields.size() != 2) {
        throw ParseError("expected prediction,label on line " +
                         std::to_string(i + 1));
      }
      const double f = parse_strict_double(fields[0], i + 1);
      const double y = parse_strict_double(fields[1], i + 1);
      if (y != 0.0 && y != 1.0) {
        throw ParseError("binary label must be 0 or 1 on line " +
                         std::to_string(i + 1));
      }
      const auto record = clip_prediction(
          PredictionRecord{{f}, {static_cast<int>(y)}}, clip_predictions);
      set.values.push_back(binary_loss(record));
    }
  } else if (header.size() >= 2 && header[0] == "p_0" &&
             header.back() == "label") {
    const std::size_t classes = header.size() - 1;
    for (std::size_t c = 0; c < classes; ++c) {
      if (header[c] != "p_" + std::to_string(c)) {
        throw ParseError("prediction columns must be named p_0..p_" +
                         std::to_string(classes - 1));
      }
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto fields = split_csv_line(lines[i]);
      if (fields.size() != classes + 1) {
        throw ParseError("wrong column count on line " + std::to_string(i + 1));
      }
      PredictionRecord record;
      for (std::size_t c = 0; c < classes; ++c) {
        record.prediction.push_back(parse_strict_double(fields[c], i + 1));
      }
      const double y = parse_strict_double(fields[classes], i + 1);
      const auto label = static_cast<std::size_t>(y);
      if (y != std::floor(y) || label >= classes) {
        throw ParseError("label must be a class index on line " +
                         std::to_string(i + 1));
      }
      record.label.assign(classes, 0);
      record.label[label] = 1;
      set.values.push_back(
          multiclass_loss(clip_prediction(std::move(record), clip_predictions)));
    }
  } else {
    throw ParseError(
        "unrecognized loss file header; expected 'loss', 'prediction,label' "
        "or 'p_0,...,label' in " + path.string());
  }
  if (set.values.empty()) {
    throw ParseError("no data rows in " + path.string());
  }
  return set;
}

Manifest parse_manifest(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const auto header = split_csv_line(lines[0]);
  const std::vector<std::string> expected = {
      "model_id", "train_loss_path", "pop_loss_path", "utility", "tags"};
  if (std::vector<std::string>(header.begin(), header.end()) != expected) {
    throw ParseError(
        "manifest header must be model_id,train_loss_path,pop_loss_path,"
        "utility,tags");
  }
  const auto dir = path.parent_path();
  auto resolve = [&dir](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (dir / fp).string();
  };
  Manifest manifest;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 5) {
      throw ParseError("manifest line " + std::to_string(i + 1) +
                       " must have 5 fields");
    }
    ManifestEntry entry;
    entry.model_id = fields[0];
    entry.train_path = resolve(fields[1]);
    entry.pop_path = resolve(fields[2]);
    entry.utility = parse_strict_double(fields[3], i + 1);
    entry.tags = parse_tags(fields[4], i + 1);
    for (const auto& prior : manifest.entries) {
      if (prior.model_id == entry.model_id) {
        throw ParseError("duplicate model_id '" + entry.model_id + "'");
      }
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) throw ParseError("manifest has no entries");
  return manifest;
}

std::vector<StrategyPoint> parse_points_file(
    const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const auto header = split_csv_line(lines[0]);
  const std::vector<std::string> expected = {
      "id", "utility", "eps_star_mean", "eps_star_min", "eps_star_max",
      "tags"};
  if (std::vector<std::string>(header.begin(), header.end()) != expected) {
    throw ParseError(
        "points header must be id,utility,eps_star_mean,eps_star_min,"
        "eps_star_max,tags");
  }
  std::vector<StrategyPoint> points;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 6) {
      throw ParseError("points line " + std::to_string(i + 1) +
                       " must have 6 fields");
    }
    StrategyPoint p;
    p.id = fields[0];
    p.utility = parse_strict_double(fields[1], i + 1);
    p.eps_star_mean = parse_strict_double(fields[2], i + 1);
    p.eps_star_min = parse_strict_double(fields[3], i + 1);
    p.eps_star_max = parse_strict_double(fields[4], i + 1);
    p.tags = parse_tags(fields[5], i + 1);
    points.push_back(std::move(p));
  }
  if (points.empty()) throw ParseError("points file has no rows");
  return points;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write file: " + tmp);
    out << content;
    if (!out) throw ParseError("short write to: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string loss_file_csv(std::span<const double> values) {
  std::string out = "loss\n";
  for (double v : values) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report serializers
// ---------------------------------------------------------------------------

namespace {

nlohmann::json provenance_block(const std::string& command,
                                const nlohmann::json& config,
                                const nlohmann::json& inputs) {
  nlohmann::json p;
  p["tool"] = kToolName;
  p["version"] = kToolVersion;
  p["command"] = command;
  p["config"] = config;
  p["inputs"] = inputs;
  return p;
}

nlohmann::json result_block(const EpsilonStarResult& r) {
  nlohmann::json j;
  j["epsilon_star"] = r.epsilon_star;
  j["delta"] = r.delta;
  j["method"] = to_string(r.method);
  j["argmax_branch"] = to_string(r.argmax_branch);
  j["argmax_t"] = r.argmax_t;
  j["clamp_window"] = {r.clamp_lo, r.clamp_hi};
  j["pairs_total"] = r.pairs_total;
  j["pairs_discarded"] = r.pairs_discarded;
  return j;
}

nlohmann::json audit_config_json(const AuditConfig& c) {
  nlohmann::json j;
  if (c.delta.has_value()) {
    j["delta"] = *c.delta;
  } else {
    j["delta"] = "auto";
  }
  j["method"] = to_string(c.method);
  j["grid_size"] = c.grid_size;
  j["alpha_shift"] = c.alpha_shift;
  j["clip_predictions"] = c.clip_predictions;
  j["seed"] = c.seed;
  return j;
}

}  // namespace

std::string audit_report_json(const EpsilonStarResult& result,
                              const AuditConfig& config,
                              const std::string& train_name,
                              const std::string& pop_name) {
  nlohmann::json doc;
  doc["provenance"] = provenance_block(
      "audit", audit_config_json(config),
      nlohmann::json{{"train", train_name}, {"pop", pop_name}});
  doc["result"] = result_block(result);
  return doc.dump(2) + "\n";
}

std::string simulation_csv(const SimResult& result) {
  std::string out = "d,n,method,repeat,epsilon_star\n";
  char line[128];
  for (const SimRow& row : result.rows) {
    std::snprintf(line, sizeof(line), "%d,%zu,%s,%d,%.17g\n", row.d, row.n,
                  to_string(row.method).c_str(), row.repeat, row.epsilon_star);
    out += line;
  }
  return out;
}

std::string simulation_summary_json(const SimResult& result) {
  const SimConfig& c = result.config;
  nlohmann::json config;
  config["k1"] = c.k1;
  config["theta1"] = c.theta1;
  config["d_values"] = c.d_values;
  config["n_values"] = c.n_values;
  config["repeats"] = c.repeats;
  config["delta"] = c.delta;
  config["seed"] = c.seed;
  config["alpha_shift"] = c.alpha_shift;
  config["max_grid"] = c.max_grid;

  nlohmann::json doc;
  doc["provenance"] =
      provenance_block("simulate", config, nlohmann::json::object());
  doc["note"] =
      "ecdf grid per cell is min(max_grid, 200 n) thresholds";
  doc["aggregates"] = nlohmann::json::array();
  for (const auto& a : result.aggregates()) {
    nlohmann::json ja;
    ja["d"] = a.d;
    ja["n"] = a.n;
    ja["method"] = to_string(a.method);
    ja["mean_epsilon_star"] = a.mean_eps;
    ja["std_epsilon_star"] = a.std_eps;
    ja["values"] = a.values;
    doc["aggregates"].push_back(ja);
  }
  return doc.dump(2) + "\n";
}

std::string simulation_svg(const SimResult& result) {
  // One panel per d: mean +- std bars across n for the three methods.
  const auto aggs = result.aggregates();
  const auto& ds = result.config.d_values;
  const auto& ns = result.config.n_values;
  constexpr double panel_w = 220.0, panel_h = 220.0, pad = 40.0;
  const double width = pad + ds.size() * panel_w + pad;
  const double height = pad + panel_h + pad;
  double eps_hi = 0.0;
  for (const auto& a : aggs) eps_hi = std::max(eps_hi, a.mean_eps + a.std_eps);
  if (eps_hi <= 0.0) eps_hi = 1.0;

  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" "
                "height=\"%g\">\n",
                width, height);
  out += buf;
  const char* colors[3] = {"#333333", "#d62728", "#1f77b4"};
  const SimMethod methods[3] = {SimMethod::true_cdf, SimMethod::ecdf,
                                SimMethod::parametric};
  for (std::size_t di = 0; di < ds.size(); ++di) {
    const double x0 = pad + di * panel_w;
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" "
                  "fill=\"none\" stroke=\"#ccc\"/>\n",
                  x0, pad, panel_w - 20.0, panel_h);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"12\">d=%d</text>\n",
                  x0 + 4.0, pad - 6.0, ds[di]);
    out += buf;
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
      for (std::size_t mi = 0; mi < 3; ++mi) {
        const SimAggregate* a = nullptr;
        for (const auto& cand : aggs) {
          if (cand.d == ds[di] && cand.n == ns[ni] && cand.method == methods[mi]) {
            a = &cand;
            break;
          }
        }
        if (!a) continue;
        const double gx = x0 + 20.0 +
                          (panel_w - 60.0) * static_cast<double>(ni) /
                              std::max<std::size_t>(ns.size() - 1, 1) +
                          6.0 * static_cast<double>(mi);
        auto gy = [&](double eps) {
          return pad + panel_h - panel_h * std::min(eps, eps_hi) / eps_hi;
        };
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                      "stroke=\"%s\"/>\n",
                      gx, gy(std::max(0.0, a->mean_eps - a->std_eps)), gx,
                      gy(a->mean_eps + a->std_eps), colors[mi]);
        out += buf;
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%g\" cy=\"%g\" r=\"3\" fill=\"%s\"/>\n",
                      gx, gy(a->mean_eps), colors[mi]);
        out += buf;
      }
    }
  }
  out += "</svg>\n";
  return out;
}

std::string mechanism_report_json(const MechanismReport& report,
                                  const std::vector<std::string>& model_ids,
                                  std::size_t grid_size,
                                  const std::string& manifest_name) {
  nlohmann::json config;
  config["delta"] = report.delta;
  config["grid_size"] = grid_size;
  nlohmann::json doc;
  doc["provenance"] = provenance_block(
      "mechanism", config, nlohmann::json{{"manifest", manifest_name}});
  doc["epsilon_bar"] = report.epsilon_bar;
  doc["jensen_bound"] = report.jensen_bound;
  doc["jensen_holds"] = report.jensen_holds;
  doc["per_model"] = nlohmann::json::array();
  for (std::size_t i = 0; i < report.per_model_eps.size(); ++i) {
    doc["per_model"].push_back(
        {{"model_id", i < model_ids.size() ? model_ids[i] : std::to_string(i)},
         {"epsilon_star", report.per_model_eps[i]}});
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {

std::filesystem::path default_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("EPSAUDIT_OUT_DIR")) return env;
  return ".";
}

std::optional<double> parse_delta_flag(const std::string& text) {
  if (text == "auto") return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ParseError("--delta must be a number or 'auto'");
  }
  if (!(v >= 0.0 && v < 1.0)) {
    throw DomainError("delta must lie in [0, 1)");
  }
  return v;
}

EpsilonMethod parse_method_flag(const std::string& text) {
  if (text == "parametric") return EpsilonMethod::parametric;
  if (text == "ecdf") return EpsilonMethod::ecdf;
  if (text == "discrete") return EpsilonMethod::discrete;
  throw ParseError("--method must be parametric, ecdf or discrete");
}

// Endpoint-concentrated log-spaced grid shared by all ensemble rows.
std::vector<double> mechanism_t_grid(double delta, std::size_t size) {
  const double edge = std::max(delta, 1e-9);
  std::vector<double> grid;
  grid.reserve(size);
  const double log_edge = std::log(edge);
  const double span = std::log(0.5) - log_edge;
  for (std::size_t i = 0; i < size; ++i) {
    const double x =
        static_cast<double>(i) / static_cast<double>(size - 1);
    const double t = x <= 0.5
                         ? std::exp(log_edge + (x / 0.5) * span)
                         : 1.0 - std::exp(log_edge + ((1.0 - x) / 0.5) * span);
    grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

struct AuditFlags {
  std::string train_path, pop_path, delta_text = "auto";
  std::string method_text = "parametric";
  std::size_t grid_size = 2'000'000;
  double alpha = 1.0;
  bool no_clip = false;
  bool expect_losses = false;
  bool expect_predictions = false;
  std::uint64_t seed = 0;
  std::string out_path;
};

int run_audit(const AuditFlags& flags) {
  AuditConfig config;
  LossSet train, pop;
  try {
    config.delta = parse_delta_flag(flags.delta_text);
    config.method = parse_method_flag(flags.method_text);
    config.grid_size = flags.grid_size;
    config.alpha_shift = flags.alpha;
    config.clip_predictions = !flags.no_clip;
    config.seed = flags.seed;
    if (flags.expect_losses && flags.expect_predictions) {
      throw ParseError("--losses and --predictions are mutually exclusive");
    }
    auto check_kind = [&](const std::filesystem::path& p) {
      std::ifstream in(p);
      std::string header;
      std::getline(in, header);
      if (!header.empty() && header.back() == '\r') header.pop_back();
      const bool is_losses = header == "loss";
      if (flags.expect_losses && !is_losses) {
        throw ParseError(p.string() + " does not hold precomputed losses");
      }
      if (flags.expect_predictions && is_losses) {
        throw ParseError(p.string() + " holds losses, not predictions");
      }
    };
    check_kind(flags.train_path);
    check_kind(flags.pop_path);
    train = parse_loss_file(flags.train_path, LossRole::training,
                            config.clip_predictions);
    pop = parse_loss_file(flags.pop_path, LossRole::population,
                          config.clip_predictions);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  EpsilonStarResult result;
  try {
    result = epsilon_star_audit(train, pop, config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  const std::string report = audit_report_json(
      result, config, std::filesystem::path(flags.train_path).filename().string(),
      std::filesystem::path(flags.pop_path).filename().string());
  try {
    if (flags.out_path.empty()) {
      std::fputs(report.c_str(), stdout);
    } else {
      write_text_atomic(flags.out_path, report);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

struct SimulateFlags {
  double k1 = 2.0, theta1 = 5.0;
  std::vector<int> d_list = {0, 1, 2, 3};
  std::vector<std::size_t> n_list = {1000, 10000, 100000};
  int repeats = 10;
  std::string delta_text = "1e-5";
  std::uint64_t seed = 0;
  std::string out_dir;
  bool svg = false;
  std::string scatter_path;
};

int run_simulate(const SimulateFlags& flags) {
  SimConfig cfg;
  std::filesystem::path dir;
  try {
    cfg.k1 = flags.k1;
    cfg.theta1 = flags.theta1;
    cfg.d_values = flags.d_list;
    cfg.n_values = flags.n_list;
    cfg.repeats = flags.repeats;
    const auto delta = parse_delta_flag(flags.delta_text);
    if (!delta.has_value()) throw ParseError("simulate needs a numeric delta");
    cfg.delta = *delta;
    cfg.seed = flags.seed;
    cfg.validate();
    dir = default_out_dir(flags.out_dir);
    std::filesystem::create_directories(dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  SimResult result;
  std::vector<ScatterRow> scatter;
  try {
    result = run_shift_experiment(cfg);
    if (!flags.scatter_path.empty()) {
      const int d_max =
          *std::max_element(cfg.d_values.begin(), cfg.d_values.end());
      const auto f_tr =
          FittedDistribution::gamma(GammaParams{cfg.k1, cfg.theta1});
      const auto f_pop = FittedDistribution::gamma(
          GammaParams{cfg.k1 + static_cast<double>(d_max), cfg.theta1});
      scatter = boundary_scatter(f_pop, f_tr, cfg.delta, 100000);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  try {
    write_text_atomic(dir / "sim_results.csv", simulation_csv(result));
    write_text_atomic(dir / "sim_summary.json",
                      simulation_summary_json(result));
    if (flags.svg) {
      write_text_atomic(dir / "sim_means.svg", simulation_svg(result));
    }
    if (!flags.scatter_path.empty()) {
      std::string csv = "mean_rate,m1,m2\n";
      char line[128];
      for (const auto& row : scatter) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", row.mean_rate,
                      row.m1, row.m2);
        csv += line;
      }
      write_text_atomic(flags.scatter_path, csv);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

struct MechanismFlags {
  std::string manifest_path, delta_text = "auto";
  std::size_t grid_size = 10000;
  double alpha = 1.0;
  std::string out_path;
};

int run_mechanism(const MechanismFlags& flags) {
  Manifest manifest;
  std::optional<double> delta_flag;
  std::vector<LossSet> trains, pops;
  try {
    delta_flag = parse_delta_flag(flags.delta_text);
    manifest = parse_manifest(flags.manifest_path);
    for (const auto& entry : manifest.entries) {
      trains.push_back(parse_loss_file(entry.train_path, LossRole::training));
      pops.push_back(parse_loss_file(entry.pop_path, LossRole::population));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  MechanismReport report;
  try {
    double delta;
    if (delta_flag.has_value()) {
      delta = *delta_flag;
    } else {
      // Auto delta from the largest training set in the ensemble.
      std::size_t n_max = 0;
      for (const auto& t : trains) n_max = std::max(n_max, t.values.size());
      AuditConfig tmp;
      delta = resolve_delta(tmp, n_max);
    }
    EnsembleRates ensemble;
    ensemble.t_grid = mechanism_t_grid(delta, flags.grid_size);
    for (std::size_t i = 0; i < trains.size(); ++i) {
      const auto [ttr, tpp] = transform_losses(trains[i], pops[i], flags.alpha);
      const auto f_tr = FittedDistribution::normal(fit_normal(ttr.values));
      const auto f_pop = FittedDistribution::normal(fit_normal(tpp.values));
      std::vector<double> row;
      row.reserve(ensemble.t_grid.size());
      const bool identical = f_pop.same_parameters(f_tr);
      for (double t : ensemble.t_grid) {
        row.push_back(identical ? 1.0 - t : f_tr.sf(f_pop.quantile(t)));
      }
      ensemble.per_model_fnr.push_back(std::move(row));
    }
    report = audit_mechanism(ensemble, delta);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  std::vector<std::string> ids;
  for (const auto& e : manifest.entries) ids.push_back(e.model_id);
  const std::string doc = mechanism_report_json(
      report, ids, flags.grid_size,
      std::filesystem::path(flags.manifest_path).filename().string());
  try {
    if (flags.out_path.empty()) {
      std::fputs(doc.c_str(), stdout);
    } else {
      write_text_atomic(flags.out_path, doc);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

struct KsfitFlags {
  std::string losses_path;
  std::vector<int> components = {1, 2, 3, 4, 5};
  std::vector<std::size_t> samples = {100, 500, 1000};
  std::uint64_t seed = 0;
  std::string out_path;
};

int run_ksfit(const KsfitFlags& flags) {
  LossSet losses;
  try {
    losses = parse_loss_file(flags.losses_path, LossRole::training);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  std::vector<FitQualityReport> reports;
  try {
    reports = gmm_fit_quality_sweep(losses.values, flags.components,
                                    flags.samples, flags.seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  try {
    const std::string csv = fit_quality_csv(reports);
    if (flags.out_path.empty()) {
      std::fputs(csv.c_str(), stdout);
    } else {
      write_text_atomic(flags.out_path, csv);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

struct LandscapeFlags {
  std::string points_path, manifest_path;
  std::string delta_text = "auto";
  std::string method_text = "parametric";
  std::string frontier_on = "mean";
  std::string formats = "json,csv,svg";
  std::string group_by = "strategy";
  std::string out_dir;
};

int run_landscape(const LandscapeFlags& flags) {
  std::vector<StrategyPoint> points;
  std::filesystem::path dir;
  FrontierObjective objective = FrontierObjective::mean_eps;
  std::vector<LandscapeFormat> formats;
  Manifest manifest;
  std::vector<LossSet> trains, pops;
  AuditConfig config;
  try {
    if (flags.points_path.empty() == flags.manifest_path.empty()) {
      throw ParseError("give exactly one of --points or --manifest");
    }
    if (flags.frontier_on == "mean") {
      objective = FrontierObjective::mean_eps;
    } else if (flags.frontier_on == "max") {
      objective = FrontierObjective::max_eps;
    } else {
      throw ParseError("--frontier-on must be mean or max");
    }
    std::stringstream ss(flags.formats);
    std::string fmt;
    while (std::getline(ss, fmt, ',')) {
      formats.push_back(parse_landscape_format(fmt));
    }
    if (formats.empty()) throw ParseError("no output formats requested");
    dir = default_out_dir(flags.out_dir);
    std::filesystem::create_directories(dir);
    if (!flags.points_path.empty()) {
      points = parse_points_file(flags.points_path);
    } else {
      config.delta = parse_delta_flag(flags.delta_text);
      config.method = parse_method_flag(flags.method_text);
      manifest = parse_manifest(flags.manifest_path);
      for (const auto& entry : manifest.entries) {
        trains.push_back(parse_loss_file(entry.train_path, LossRole::training));
        pops.push_back(parse_loss_file(entry.pop_path, LossRole::population));
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  Frontier frontier;
  std::vector<MarginalCurve> marginals;
  try {
    if (points.empty()) {
      // Audit each manifest entry, then aggregate per strategy group.
      struct Group {
        std::vector<double> eps;
        std::vector<double> utils;
        std::map<std::string, std::string> tags;
      };
      std::map<std::string, Group> groups;
      for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& entry = manifest.entries[i];
        const double eps =
            epsilon_star_audit(trains[i], pops[i], config).epsilon_star;
        const auto it = entry.tags.find(flags.group_by);
        const std::string key =
            it != entry.tags.end() ? it->second : entry.model_id;
        auto& group = groups[key];
        group.eps.push_back(eps);
        group.utils.push_back(entry.utility);
        if (group.tags.empty()) group.tags = entry.tags;
      }
      for (const auto& [key, group] : groups) {
        StrategyPoint p;
        p.id = key;
        p.utility = mean(group.utils);
        p.eps_star_mean = mean(group.eps);
        p.eps_star_min = *std::min_element(group.eps.begin(), group.eps.end());
        p.eps_star_max = *std::max_element(group.eps.begin(), group.eps.end());
        p.tags = group.tags;
        points.push_back(std::move(p));
      }
    }
    frontier = pareto_frontier(points, objective);
    marginals = compute_marginals(points);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  try {
    for (LandscapeFormat fmt : formats) {
      const char* name = fmt == LandscapeFormat::json  ? "landscape.json"
                         : fmt == LandscapeFormat::csv ? "landscape.csv"
                                                       : "landscape.svg";
      write_text_atomic(dir / name,
                        emit_landscape(points, frontier, marginals, fmt));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"black-box empirical privacy auditing toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  AuditFlags audit_flags;
  auto* audit = app.add_subcommand(
      "audit", "epsilon* for one train/population loss file pair");
  audit->add_option("--train", audit_flags.train_path, "training loss CSV")
      ->required();
  audit->add_option("--pop", audit_flags.pop_path, "population loss CSV")
      ->required();
  audit->add_option("--delta", audit_flags.delta_text,
                    "delta in [0,1) or 'auto' (= 1/(n ln n))");
  audit->add_option("--method", audit_flags.method_text,
                    "parametric | ecdf | discrete");
  audit->add_option("--grid-size", audit_flags.grid_size,
                    "threshold grid size for ecdf/discrete");
  audit->add_option("--alpha", audit_flags.alpha, "transform shift alpha");
  audit->add_flag("--no-clip", audit_flags.no_clip,
                  "do not clip saturated predictions");
  audit->add_flag("--losses", audit_flags.expect_losses,
                  "expect precomputed losses");
  audit->add_flag("--predictions", audit_flags.expect_predictions,
                  "expect prediction files");
  audit->add_option("--seed", audit_flags.seed, "seed echoed in provenance");
  audit->add_option("--out", audit_flags.out_path,
                    "report path (stdout if omitted)");

  SimulateFlags sim_flags;
  auto* simulate = app.add_subcommand(
      "simulate", "known-Gamma Monte-Carlo validation of the estimators");
  simulate->add_option("--k1", sim_flags.k1, "training gamma shape");
  simulate->add_option("--theta1", sim_flags.theta1, "gamma scale");
  simulate->add_option("--d-list", sim_flags.d_list, "shape shifts")
      ->delimiter(',');
  simulate->add_option("--n-list", sim_flags.n_list, "sample sizes")
      ->delimiter(',');
  simulate->add_option("--repeats", sim_flags.repeats, "repeats per cell");
  simulate->add_option("--delta", sim_flags.delta_text, "delta in [0,1)");
  simulate->add_option("--seed", sim_flags.seed, "master seed");
  simulate->add_option("--out-dir", sim_flags.out_dir,
                       "output directory (or $EPSAUDIT_OUT_DIR)");
  simulate->add_flag("--svg", sim_flags.svg, "also write sim_means.svg");
  simulate->add_option("--scatter", sim_flags.scatter_path,
                       "write boundary-ratio scatter CSV for the largest d");

  MechanismFlags mech_flags;
  auto* mechanism = app.add_subcommand(
      "mechanism", "mechanism-level bound over a manifest of loss pairs");
  mechanism->add_option("--manifest", mech_flags.manifest_path, "manifest CSV")
      ->required();
  mechanism->add_option("--delta", mech_flags.delta_text,
                        "delta in [0,1) or 'auto'");
  mechanism->add_option("--grid-size", mech_flags.grid_size,
                        "shared FPR grid size");
  mechanism->add_option("--alpha", mech_flags.alpha, "transform shift alpha");
  mechanism->add_option("--out", mech_flags.out_path,
                        "report path (stdout if omitted)");

  KsfitFlags ksfit_flags;
  auto* ksfit = app.add_subcommand(
      "ksfit", "GMM goodness-of-fit sweep on a loss file");
  ksfit->add_option("--losses", ksfit_flags.losses_path, "loss CSV")
      ->required();
  ksfit->add_option("--components", ksfit_flags.components,
                    "component counts")
      ->delimiter(',');
  ksfit->add_option("--samples", ksfit_flags.samples, "hold-out sizes")
      ->delimiter(',');
  ksfit->add_option("--seed", ksfit_flags.seed, "master seed");
  ksfit->add_option("--out", ksfit_flags.out_path,
                    "CSV path (stdout if omitted)");

  LandscapeFlags land_flags;
  auto* landscape = app.add_subcommand(
      "landscape", "privacy-utility landscape with Pareto frontier");
  landscape->add_option("--points", land_flags.points_path,
                        "precomputed strategy points CSV");
  landscape->add_option("--manifest", land_flags.manifest_path,
                        "manifest CSV; entries are audited and grouped");
  landscape->add_option("--delta", land_flags.delta_text,
                        "delta for manifest audits");
  landscape->add_option("--method", land_flags.method_text,
                        "estimator for manifest audits");
  landscape->add_option("--frontier-on", land_flags.frontier_on,
                        "mean | max epsilon* per strategy");
  landscape->add_option("--format", land_flags.formats,
                        "comma list of json,csv,svg");
  landscape->add_option("--group-by", land_flags.group_by,
                        "tag key that names the strategy group");
  landscape->add_option("--out-dir", land_flags.out_dir,
                        "output directory (or $EPSAUDIT_OUT_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (audit->parsed()) return run_audit(audit_flags);
  if (simulate->parsed()) return run_simulate(sim_flags);
  if (mechanism->parsed()) return run_mechanism(mech_flags);
  if (ksfit->parsed()) return run_ksfit(ksfit_flags);
  if (landscape->parsed()) return run_landscape(land_flags);
  return 2;
}

}  // namespace epsaudit
