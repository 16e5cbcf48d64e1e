#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "orthoboot/error.hpp"
#include "orthoboot/harness.hpp"

namespace orthoboot {

namespace {

using nlohmann::json;

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string interval(double lo, double hi) { return "(" + fixed(lo) + "," + fixed(hi) + ")"; }

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

// Stable field order shared by the delimited and structured formats.
const char* const kFields[] = {
    "n", "q", "replicates", "bootstrap", "avg_post_mean", "emp_freq_mean", "avg_post_var_times_n",
    "emp_freq_var_times_n", "avg_sandwich_times_n", "avg_cred_lo", "avg_cred_hi", "freq_lo",
    "freq_hi", "coverage_pct", "rejected_draw_total"};

std::vector<std::string> field_values(const AggregateReport& r) {
  return {std::to_string(r.n),
          std::to_string(r.q),
          std::to_string(r.replicates),
          std::to_string(r.bootstrap),
          exact(r.avg_post_mean),
          exact(r.emp_freq_mean),
          exact(r.avg_post_var_times_n),
          exact(r.emp_freq_var_times_n),
          exact(r.avg_sandwich_times_n),
          exact(r.avg_cred_lo),
          exact(r.avg_cred_hi),
          exact(r.freq_lo),
          exact(r.freq_hi),
          exact(r.coverage_pct),
          std::to_string(r.rejected_draw_total)};
}

json to_json(const AggregateReport& r) {
  json j = json::object();
  j["n"] = r.n;
  j["q"] = r.q;
  j["replicates"] = r.replicates;
  j["bootstrap"] = r.bootstrap;
  j["avg_post_mean"] = r.avg_post_mean;
  j["emp_freq_mean"] = r.emp_freq_mean;
  j["avg_post_var_times_n"] = r.avg_post_var_times_n;
  j["emp_freq_var_times_n"] = r.emp_freq_var_times_n;
  j["avg_sandwich_times_n"] = r.avg_sandwich_times_n;
  j["avg_cred_interval"] = {r.avg_cred_lo, r.avg_cred_hi};
  j["freq_interval"] = {r.freq_lo, r.freq_hi};
  j["coverage_pct"] = r.coverage_pct;
  j["rejected_draw_total"] = r.rejected_draw_total;
  return j;
}

AggregateReport from_json(const json& j) {
  AggregateReport r;
  r.n = j.at("n").get<std::size_t>();
  r.q = j.at("q").get<std::size_t>();
  r.replicates = j.at("replicates").get<std::size_t>();
  r.bootstrap = j.at("bootstrap").get<std::size_t>();
  r.avg_post_mean = j.at("avg_post_mean").get<double>();
  r.emp_freq_mean = j.at("emp_freq_mean").get<double>();
  r.avg_post_var_times_n = j.at("avg_post_var_times_n").get<double>();
  r.emp_freq_var_times_n = j.at("emp_freq_var_times_n").get<double>();
  r.avg_sandwich_times_n = j.at("avg_sandwich_times_n").get<double>();
  r.avg_cred_lo = j.at("avg_cred_interval").at(0).get<double>();
  r.avg_cred_hi = j.at("avg_cred_interval").at(1).get<double>();
  r.freq_lo = j.at("freq_interval").at(0).get<double>();
  r.freq_hi = j.at("freq_interval").at(1).get<double>();
  r.coverage_pct = j.at("coverage_pct").get<double>();
  r.rejected_draw_total = j.at("rejected_draw_total").get<std::size_t>();
  return r;
}

void require_finite(const AggregateReport& r) {
  for (double v : {r.avg_post_mean, r.emp_freq_mean, r.avg_post_var_times_n, r.emp_freq_var_times_n,
                   r.avg_sandwich_times_n, r.avg_cred_lo, r.avg_cred_hi, r.freq_lo, r.freq_hi,
                   r.coverage_pct}) {
    if (!std::isfinite(v)) throw InvalidArgument("emit_report: report has non-finite entries");
  }
}

void write_text_table(std::span<const AggregateReport> reports, std::ostream& out) {
  constexpr std::size_t kLabel = 40;
  constexpr std::size_t kColumn = 14;
  out << pad_right("", kLabel);
  for (const auto& r : reports) out << pad_left("n=" + std::to_string(r.n), kColumn);
  out << '\n';

  auto row = [&](const char* label, auto cell) {
    out << pad_right(label, kLabel);
    for (const auto& r : reports) out << pad_left(cell(r), kColumn);
    out << '\n';
  };
  row("Average of the Posterior Means", [](const auto& r) { return fixed(r.avg_post_mean); });
  row("Empirical Frequentist Mean", [](const auto& r) { return fixed(r.emp_freq_mean); });
  row("Average of Posterior Variances (x n)", [](const auto& r) { return fixed(r.avg_post_var_times_n); });
  row("Empirical Frequentist Variance (x n)", [](const auto& r) { return fixed(r.emp_freq_var_times_n); });
  row("Average Sandwich Estimate", [](const auto& r) { return fixed(r.avg_sandwich_times_n); });
  row("Average Bayesian credible interval",
      [](const auto& r) { return interval(r.avg_cred_lo, r.avg_cred_hi); });
  row("Frequentist confidence interval", [](const auto& r) { return interval(r.freq_lo, r.freq_hi); });
  row("Posterior Coverage", [](const auto& r) { return fixed(r.coverage_pct); });
  row("Rejected bootstrap draws", [](const auto& r) { return std::to_string(r.rejected_draw_total); });
}

void write_delimited(std::span<const AggregateReport> reports, std::ostream& out) {
  bool first = true;
  for (const char* f : kFields) {
    out << (first ? "" : ",") << f;
    first = false;
  }
  out << '\n';
  for (const auto& r : reports) {
    first = true;
    for (const auto& v : field_values(r)) {
      out << (first ? "" : ",") << v;
      first = false;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Configuration

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

ForestConfig parse_forest(const json& j) {
  if (!j.is_object()) throw ConfigError("config key 'forest' must be an object");
  ForestConfig f;
  for (const auto& [key, value] : j.items()) {
    if (key == "num_trees") f.num_trees = get_as<std::size_t>(value, "forest.num_trees");
    else if (key == "subsample_exponent") f.subsample_exponent = get_as<double>(value, "forest.subsample_exponent");
    else if (key == "min_leaf") f.min_leaf = get_as<std::size_t>(value, "forest.min_leaf");
    else if (key == "max_features") {
      if (value.is_string()) {
        if (value.get<std::string>() != "all") throw ConfigError("forest.max_features must be an integer or \"all\"");
        f.max_features = ForestConfig::kAllFeatures;
      } else if (value.is_null()) {
        f.max_features.reset();
      } else {
        f.max_features = get_as<std::size_t>(value, "forest.max_features");
      }
    } else if (key == "threads") f.threads = get_as<std::size_t>(value, "forest.threads");
    else throw ConfigError("unknown config key 'forest." + key + "'");
  }
  return f;
}

}  // namespace

std::string_view to_string(ReportFormat format) noexcept {
  switch (format) {
    case ReportFormat::text_table: return "text";
    case ReportFormat::delimited: return "csv";
    case ReportFormat::structured: return "json";
  }
  return "unknown";
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "text" || name == "text-table") return ReportFormat::text_table;
  if (name == "csv" || name == "delimited") return ReportFormat::delimited;
  if (name == "json" || name == "structured") return ReportFormat::structured;
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

void emit_reports(std::span<const AggregateReport> reports, ReportFormat format, std::ostream& out) {
  for (const auto& r : reports) require_finite(r);
  switch (format) {
    case ReportFormat::text_table:
      write_text_table(reports, out);
      return;
    case ReportFormat::delimited:
      write_delimited(reports, out);
      return;
    case ReportFormat::structured: {
      if (reports.size() == 1) {
        out << to_json(reports[0]).dump(2) << '\n';
      } else {
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(to_json(r));
        out << arr.dump(2) << '\n';
      }
      return;
    }
  }
}

void emit_report(const AggregateReport& report, ReportFormat format, std::ostream& out) {
  emit_reports(std::span<const AggregateReport>(&report, 1), format, out);
}

void emit_report(const AggregateReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ostringstream buffer;
  emit_report(report, format, buffer);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << buffer.str();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void emit_sweep(std::span<const SweepCell> cells, ReportFormat format, std::ostream& out) {
  for (const auto& c : cells) require_finite(c.report);
  switch (format) {
    case ReportFormat::text_table: {
      out << pad_right("q", 6) << pad_right("n", 8) << pad_right("(theta_F,theta_B)", 20)
          << pad_right("(V_F,V_B,Sigma)", 22) << "Coverage\n";
      for (const auto& c : cells) {
        const auto& r = c.report;
        out << pad_right(std::to_string(c.q), 6) << pad_right(std::to_string(c.n), 8)
            << pad_right("(" + fixed(r.emp_freq_mean) + "," + fixed(r.avg_post_mean) + ")", 20)
            << pad_right("(" + fixed(r.emp_freq_var_times_n) + "," + fixed(r.avg_post_var_times_n) + "," +
                             fixed(r.avg_sandwich_times_n) + ")",
                         22)
            << fixed(r.coverage_pct) << '\n';
      }
      return;
    }
    case ReportFormat::delimited: {
      std::vector<AggregateReport> reports;
      for (const auto& c : cells) reports.push_back(c.report);
      write_delimited(reports, out);
      return;
    }
    case ReportFormat::structured: {
      json arr = json::array();
      for (const auto& c : cells) arr.push_back(to_json(c.report));
      out << arr.dump(2) << '\n';
      return;
    }
  }
}

AggregateReport parse_report_json(std::string_view text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw IoError(std::string("cannot parse report: ") + e.what());
  }
}

ExperimentConfig parse_config_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "dgp") cfg.dgp = parse_dgp_kind(get_as<std::string>(value, "dgp"));
    else if (key == "q") cfg.q = get_as<std::size_t>(value, "q");
    else if (key == "theta0") cfg.theta0 = get_as<double>(value, "theta0");
    else if (key == "score") {
      try {
        cfg.score = parse_score_kind(get_as<std::string>(value, "score"));
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "learner") cfg.learner = parse_learner_kind(get_as<std::string>(value, "learner"));
    else if (key == "forest") cfg.forest = parse_forest(value);
    else if (key == "bandwidth") {
      if (value.is_string() && value.get<std::string>() == "auto") cfg.bandwidth.reset();
      else cfg.bandwidth = get_as<double>(value, "bandwidth");
    } else if (key == "clamp_epsilon") cfg.clamp_epsilon = get_as<double>(value, "clamp_epsilon");
    else if (key == "n") cfg.n = get_as<std::size_t>(value, "n");
    else if (key == "replicates") cfg.replicates = get_as<std::size_t>(value, "replicates");
    else if (key == "bootstrap") cfg.bootstrap = get_as<std::size_t>(value, "bootstrap");
    else if (key == "level") cfg.level = get_as<double>(value, "level");
    else if (key == "scheme") {
      try {
        cfg.scheme = parse_weight_scheme(get_as<std::string>(value, "scheme"));
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "master_seed") cfg.master_seed = get_as<std::uint64_t>(value, "master_seed");
    else if (key == "threads") cfg.threads = get_as<std::size_t>(value, "threads");
    else if (key == "bootstrap_threads") cfg.bootstrap_threads = get_as<std::size_t>(value, "bootstrap_threads");
    else if (key == "output_path") cfg.output_path = get_as<std::string>(value, "output_path");
    else if (key == "draws_dir") cfg.draws_dir = get_as<std::string>(value, "draws_dir");
    else throw ConfigError("unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json forest = {{"num_trees", cfg.forest.num_trees},
                 {"subsample_exponent", cfg.forest.subsample_exponent},
                 {"min_leaf", cfg.forest.min_leaf},
                 {"threads", cfg.forest.threads}};
  if (!cfg.forest.max_features) forest["max_features"] = nullptr;
  else if (*cfg.forest.max_features == ForestConfig::kAllFeatures) forest["max_features"] = "all";
  else forest["max_features"] = *cfg.forest.max_features;

  json j = {{"dgp", to_string(cfg.dgp)},
            {"q", cfg.q},
            {"theta0", cfg.theta0},
            {"score", to_string(cfg.score)},
            {"learner", to_string(cfg.learner)},
            {"forest", forest},
            {"clamp_epsilon", cfg.clamp_epsilon},
            {"n", cfg.n},
            {"replicates", cfg.replicates},
            {"bootstrap", cfg.bootstrap},
            {"level", cfg.level},
            {"scheme", to_string(cfg.scheme)},
            {"master_seed", cfg.master_seed},
            {"threads", cfg.threads},
            {"bootstrap_threads", cfg.bootstrap_threads},
            {"output_path", cfg.output_path},
            {"draws_dir", cfg.draws_dir}};
  if (cfg.bandwidth) j["bandwidth"] = *cfg.bandwidth;
  else j["bandwidth"] = "auto";
  return j.dump(2);
}

}  // namespace orthoboot
