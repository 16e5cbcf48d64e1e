#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "orthoboot/error.hpp"
#include "orthoboot/harness.hpp"

using namespace orthoboot;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n = 200;
  cfg.replicates = 6;
  cfg.bootstrap = 60;
  cfg.forest.num_trees = 30;
  cfg.threads = 1;
  cfg.master_seed = 77;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

AggregateReport sample_report() {
  AggregateReport r;
  r.n = 500;
  r.q = 5;
  r.replicates = 200;
  r.bootstrap = 500;
  r.avg_post_mean = 3.0191234567890123;
  r.emp_freq_mean = 3.02;
  r.avg_post_var_times_n = 5.1;
  r.emp_freq_var_times_n = 4.9;
  r.avg_sandwich_times_n = 5.05;
  r.avg_cred_lo = 2.82;
  r.avg_cred_hi = 3.21;
  r.freq_lo = 2.83;
  r.freq_hi = 3.2;
  r.coverage_pct = 94.5;
  r.rejected_draw_total = 0;
  return r;
}

}  // namespace

TEST_CASE("configuration validation") {
  auto bad = [](auto mutate) {
    ExperimentConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  };
  CHECK_NOTHROW(ExperimentConfig{}.validate());
  bad([](ExperimentConfig& c) { c.learner = LearnerKind::kernel; });
  bad([](ExperimentConfig& c) {
    c.dgp = DgpKind::kernel_model;
    c.score = ScoreKind::aipw;
  });
  bad([](ExperimentConfig& c) { c.q = 4; });
  bad([](ExperimentConfig& c) { c.replicates = 0; });
  bad([](ExperimentConfig& c) { c.bootstrap = 1; });
  bad([](ExperimentConfig& c) { c.level = 1.0; });
  bad([](ExperimentConfig& c) { c.bandwidth = -1.0; });
  bad([](ExperimentConfig& c) { c.forest.num_trees = 0; });
  CHECK_THROWS_AS(parse_dgp_kind("iv"), ConfigError);
  CHECK_THROWS_AS(parse_learner_kind("boosting"), ConfigError);
}

TEST_CASE("true nuisance recovers theta0 on a large sample") {
  ExperimentConfig cfg;
  cfg.learner = LearnerKind::truth;
  cfg.n = 100000;
  cfg.replicates = 1;
  cfg.bootstrap = 20;
  auto r = run_experiment(cfg);
  CHECK(std::abs(r.avg_post_mean - 3.0) < 0.03);
  CHECK(r.emp_freq_var_times_n == 0.0);  // one replicate
}

TEST_CASE("aggregation of hand-made replicates") {
  std::vector<ReplicateResult> rs(3);
  rs[0] = {.post_mean = 1.0, .post_var = 0.01, .theta_hat = 1.0, .sandwich = 2.0, .cred_lo = 0.0, .cred_hi = 2.0, .freq_lo = 0.5, .freq_hi = 1.5, .covers = true, .rejected = 1};
  rs[1] = {.post_mean = 2.0, .post_var = 0.02, .theta_hat = 2.0, .sandwich = 4.0, .cred_lo = 1.0, .cred_hi = 3.0, .freq_lo = 1.5, .freq_hi = 2.5, .covers = false, .rejected = 0};
  rs[2] = {.post_mean = 3.0, .post_var = 0.03, .theta_hat = 4.0, .sandwich = 6.0, .cred_lo = 2.0, .cred_hi = 4.0, .freq_lo = 3.5, .freq_hi = 4.5, .covers = true, .rejected = 2};
  auto a = aggregate(rs, 100, 5, 10);
  CHECK(a.avg_post_mean == doctest::Approx(2.0));
  CHECK(a.emp_freq_mean == doctest::Approx(7.0 / 3.0));
  // theta_hat deviations -4/3, -1/3, 5/3: sum of squares 42/9, over R - 1 = 2
  CHECK(a.emp_freq_var_times_n == doctest::Approx(100.0 * 42.0 / 18.0));
  CHECK(a.avg_post_var_times_n == doctest::Approx(2.0));
  CHECK(a.avg_sandwich_times_n == doctest::Approx(4.0));
  CHECK(a.avg_cred_lo == doctest::Approx(1.0));
  CHECK(a.avg_cred_hi == doctest::Approx(3.0));
  CHECK(a.freq_lo == doctest::Approx(11.0 / 6.0));
  CHECK(a.freq_hi == doctest::Approx(17.0 / 6.0));
  CHECK(a.coverage_pct == doctest::Approx(200.0 / 3.0));
  CHECK(a.rejected_draw_total == 3);
  CHECK(a.replicates == 3);
  CHECK_THROWS_AS(aggregate(std::span<const ReplicateResult>{}, 1, 1, 1), InvalidArgument);
}

TEST_CASE("replicate order and thread count do not matter") {
  auto cfg = small_config();
  const auto serial = run_experiment(cfg);
  cfg.threads = 3;
  cfg.bootstrap_threads = 2;
  CHECK(run_experiment(cfg) == serial);

  std::vector<ReplicateResult> rs(cfg.replicates);
  for (std::size_t r = cfg.replicates; r-- > 0;) rs[r] = run_replicate(cfg, r);
  CHECK(aggregate(rs, cfg.n, cfg.q, cfg.bootstrap) == serial);

  cfg.master_seed += 1;
  CHECK_FALSE(run_experiment(cfg) == serial);
}

TEST_CASE("every configuration runs end to end") {
  auto cfg = small_config();
  cfg.replicates = 2;
  cfg.score = ScoreKind::aipw;
  CHECK(std::isfinite(run_experiment(cfg).avg_post_mean));
  cfg.score = ScoreKind::naive;
  CHECK(std::isfinite(run_experiment(cfg).avg_post_mean));
  cfg.score = ScoreKind::partialled_out;
  cfg.scheme = WeightScheme::multinomial;
  CHECK(std::isfinite(run_experiment(cfg).avg_post_mean));
  cfg.scheme = WeightScheme::dirichlet;
  cfg.dgp = DgpKind::kernel_model;
  cfg.learner = LearnerKind::kernel;
  auto k = run_experiment(cfg);
  CHECK(k.q == 1);
  CHECK(std::isfinite(k.avg_post_mean));
}

TEST_CASE("text table carries every summary row") {
  std::ostringstream out;
  emit_report(sample_report(), ReportFormat::text_table, out);
  const auto text = out.str();
  for (const char* label :
       {"Average of the Posterior Means", "Empirical Frequentist Mean", "Average of Posterior Variances (x n)",
        "Empirical Frequentist Variance (x n)", "Average Sandwich Estimate", "Average Bayesian credible interval",
        "Frequentist confidence interval", "Posterior Coverage"}) {
    CHECK(text.find(label) != std::string::npos);
  }
  CHECK(text.find("Average of the Posterior Means") < text.find("Posterior Coverage"));
}

TEST_CASE("structured records round trip") {
  const auto r = sample_report();
  std::ostringstream out;
  emit_report(r, ReportFormat::structured, out);
  CHECK(parse_report_json(out.str()) == r);
  CHECK_THROWS(parse_report_json("{\"n\": 1}"));
}

TEST_CASE("delimited output") {
  const auto r = sample_report();
  std::ostringstream a, b;
  emit_report(r, ReportFormat::delimited, a);
  emit_report(r, ReportFormat::delimited, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("n,q,replicates,bootstrap,avg_post_mean,", 0) == 0);
  char exact[32];
  std::snprintf(exact, sizeof exact, "%.17g", r.avg_post_mean);
  CHECK(a.str().find(exact) != std::string::npos);

  std::vector<AggregateReport> two{r, r};
  std::ostringstream many;
  emit_reports(two, ReportFormat::delimited, many);
  const auto s = many.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);

  auto bad = r;
  bad.avg_post_mean = NAN;
  std::ostringstream sink;
  CHECK_THROWS(emit_report(bad, ReportFormat::delimited, sink));
}

TEST_CASE("report files") {
  TempDir dir("orthoboot_report_files");
  const auto r = sample_report();
  emit_report(r, ReportFormat::structured, dir.path / "r.json");
  CHECK(parse_report_json(slurp(dir.path / "r.json")) == r);
  CHECK_THROWS_AS(emit_report(r, ReportFormat::delimited, fs::path("/nonexistent/dir/out.csv")), IoError);
}

TEST_CASE("identical seeds give byte-identical files") {
  TempDir dir("orthoboot_determinism");
  auto cfg = small_config();
  cfg.replicates = 3;
  cfg.draws_dir = (dir.path / "a").string();
  emit_report(run_experiment(cfg), ReportFormat::delimited, dir.path / "a.csv");
  cfg.threads = 4;
  cfg.draws_dir = (dir.path / "b").string();
  emit_report(run_experiment(cfg), ReportFormat::delimited, dir.path / "b.csv");
  CHECK(slurp(dir.path / "a.csv") == slurp(dir.path / "b.csv"));
  for (const char* f : {"draws_r0000.txt", "draws_r0001.txt", "draws_r0002.txt"}) {
    REQUIRE(fs::exists(dir.path / "a" / f));
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  }
  const auto draws = slurp(dir.path / "a" / "draws_r0000.txt");
  CHECK(std::count(draws.begin(), draws.end(), '\n') == static_cast<long>(cfg.bootstrap));
}

TEST_CASE("a failing replicate is named") {
  TempDir dir("orthoboot_replicate_error");
  auto cfg = small_config();
  cfg.replicates = 3;
  cfg.draws_dir = dir.path.string();
  fs::create_directories(dir.path / "draws_r0001.txt");
  try {
    run_experiment(cfg);
    FAIL("expected a replicate failure");
  } catch (const ReplicateError& e) {
    CHECK(e.replicate() == 1);
    CHECK(e.category() == ErrorCategory::io);
  }
}

TEST_CASE("config parsing") {
  auto cfg = parse_config_json(R"({
    "dgp": "kernel_model", "learner": "kernel", "bandwidth": 0.4, "n": 300,
    "replicates": 7, "bootstrap": 90, "master_seed": 5, "scheme": "multinomial"
  })");
  CHECK(cfg.dgp == DgpKind::kernel_model);
  CHECK(cfg.learner == LearnerKind::kernel);
  CHECK(cfg.bandwidth == 0.4);
  CHECK(cfg.n == 300);
  CHECK(cfg.scheme == WeightScheme::multinomial);

  auto forest = parse_config_json(R"({"forest": {"num_trees": 50, "max_features": "all", "min_leaf": 3}, "bandwidth": "auto"})");
  CHECK(forest.forest.num_trees == 50);
  CHECK(forest.forest.max_features == ForestConfig::kAllFeatures);
  CHECK_FALSE(forest.bandwidth.has_value());

  CHECK_THROWS_AS(parse_config_json(R"({"replicate": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"forest": {"trees": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"n": "many"})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"score": "ipw"})"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"learner": "kernel"})"), ConfigError);
  CHECK_THROWS_AS(load_config(fs::path("/nonexistent/cfg.json")), IoError);
}

TEST_CASE("config round trip") {
  ExperimentConfig cfg;
  cfg.dgp = DgpKind::plm;
  cfg.q = 8;
  cfg.score = ScoreKind::aipw;
  cfg.forest.num_trees = 17;
  cfg.forest.max_features = 4;
  cfg.bandwidth = 0.25;
  cfg.master_seed = 123456789012345ULL;
  cfg.output_path = "out.csv";
  const auto back = parse_config_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK(back.forest.max_features == 4);
  CHECK(back.master_seed == cfg.master_seed);
}

TEST_CASE("dimension sweep") {
  auto cfg = small_config();
  cfg.replicates = 2;
  const std::vector<std::size_t> qs{5, 7}, ns{100, 150};
  auto cells = run_dimension_sweep(cfg, qs, ns);
  REQUIRE(cells.size() == 4);
  CHECK(cells[1].q == 5);
  CHECK(cells[1].n == 150);
  CHECK(cells[2].report.q == 7);
  std::ostringstream out;
  emit_sweep(cells, ReportFormat::text_table, out);
  CHECK(out.str().find("(theta_F,theta_B)") != std::string::npos);
  cfg.dgp = DgpKind::kernel_model;
  cfg.learner = LearnerKind::kernel;
  CHECK_THROWS_AS(run_dimension_sweep(cfg, qs, ns), ConfigError);
}

TEST_CASE("format names") {
  CHECK(parse_report_format("text") == ReportFormat::text_table);
  CHECK(parse_report_format("delimited") == ReportFormat::delimited);
  CHECK(parse_report_format("json") == ReportFormat::structured);
  CHECK_THROWS(parse_report_format("xml"));
}
