#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/sweep.hpp"

using namespace lnadapt;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("lnadapt_sweep_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Small enough to run in seconds: two systems, two sizes, two seeds.
ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.source = {3, 0.0, 70};
  cfg.target = {5, 0.2, 70};
  cfg.sizes = {2, 3};
  cfg.systems = {System::ol, System::ol_lrpd_ln};
  cfg.rep_seeds = {1, 2};
  cfg.rank = 2;
  cfg.adapt_updates = 4;
  cfg.sd_train.epochs = 1;
  cfg.adapt_train.epochs = 2;
  return cfg;
}

}  // namespace

TEST_CASE("system names and tokens round-trip") {
  for (System s : {System::sd, System::ol, System::ol_full_ln, System::ol_lrpd_ln}) {
    CHECK(system_from_token(system_token(s)) == s);
    CHECK(system_from_token(system_display_name(s)) == s);
  }
  CHECK(system_display_name(System::ol_full_ln) == "OL+Full-LN");
  CHECK(system_token(System::ol_lrpd_ln) == "lrpd-ln");
  CHECK_THROWS_AS(system_from_token("bogus"), ConfigError);
}

TEST_CASE("config write then parse reproduces every field") {
  fs::path dir = temp_dir("roundtrip");
  ExperimentConfig cfg = ExperimentConfig::tough_desk();
  cfg.rank = 7;
  cfg.adapt_updates = 900;
  cfg.min_frames = 20;
  cfg.max_frames = 30;
  cfg.sd_train.learning_rate = 0.25;
  cfg.adapt_train.patience = 17;
  std::string path = (dir / "cfg.ini").string();
  write_experiment_config(cfg, path);
  ExperimentConfig back = parse_experiment_config(path);
  CHECK(back.source.seed == cfg.source.seed);
  CHECK(back.target.seed == cfg.target.seed);
  CHECK(back.target.distance == cfg.target.distance);
  CHECK(back.source.n_utts == cfg.source.n_utts);
  CHECK(back.sizes == cfg.sizes);
  CHECK(back.systems == cfg.systems);
  CHECK(back.rep_seeds == cfg.rep_seeds);
  CHECK(back.rank == cfg.rank);
  CHECK(back.min_frames == cfg.min_frames);
  CHECK(back.max_frames == cfg.max_frames);
  CHECK(back.adapt_updates == cfg.adapt_updates);
  CHECK(back.sd_train.learning_rate == cfg.sd_train.learning_rate);
  CHECK(back.sd_train.epochs == cfg.sd_train.epochs);
  CHECK(back.adapt_train.patience == cfg.adapt_train.patience);
  CHECK(back.adapt_train.lr_decay == cfg.adapt_train.lr_decay);
  fs::remove_all(dir);
}

TEST_CASE("config writer is byte-stable") {
  fs::path dir = temp_dir("stable");
  ExperimentConfig cfg = ExperimentConfig::easy_desk();
  write_experiment_config(cfg, (dir / "a.ini").string());
  write_experiment_config(cfg, (dir / "b.ini").string());
  CHECK(read_file(dir / "a.ini") == read_file(dir / "b.ini"));
  fs::remove_all(dir);
}

TEST_CASE("config validation rejects malformed grids") {
  ExperimentConfig cfg = tiny_config();
  cfg.sizes = {10, 10};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.sizes.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.systems.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.rep_seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.rank = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.adapt_updates = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.max_frames = cfg.min_frames - 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config parser reports unknown keys and sections") {
  fs::path dir = temp_dir("badcfg");
  {
    std::ofstream out(dir / "unknown_key.ini");
    out << "[sweep]\nwibble = 3\n";
  }
  CHECK_THROWS_AS(parse_experiment_config((dir / "unknown_key.ini").string()), ConfigError);
  {
    std::ofstream out(dir / "bad_section.ini");
    out << "[nonsense]\nx = 1\n";
  }
  CHECK_THROWS_AS(parse_experiment_config((dir / "bad_section.ini").string()), ConfigError);
  {
    std::ofstream out(dir / "bad_line.ini");
    out << "[sweep]\nno equals sign here\n";
  }
  CHECK_THROWS_AS(parse_experiment_config((dir / "bad_line.ini").string()), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config((dir / "missing.ini").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("sweep produces one row per grid cell and medians per system-size") {
  ExperimentConfig cfg = tiny_config();
  SweepResult res = run_sweep(cfg, "");
  CHECK(res.rows.size() == 2 * 2 * 2);  // systems x sizes x seeds
  for (System sys : cfg.systems) {
    for (int size : cfg.sizes) {
      REQUIRE(res.medians.count({sys, size}) == 1);
      int n = 0;
      for (const SweepRow& row : res.rows) {
        if (row.system == sys && row.n_adapt == size) ++n;
      }
      CHECK(n == 2);
    }
  }
}

TEST_CASE("median over an even seed count averages the middle pair") {
  ExperimentConfig cfg = tiny_config();
  SweepResult res = run_sweep(cfg, "");
  for (System sys : cfg.systems) {
    for (int size : cfg.sizes) {
      std::vector<double> v;
      for (const SweepRow& row : res.rows) {
        if (row.system == sys && row.n_adapt == size) v.push_back(row.metrics.overall_mse);
      }
      REQUIRE(v.size() == 2);
      double expect = 0.5 * (v[0] + v[1]);
      CHECK(res.median_mse(sys, size) == doctest::Approx(expect).epsilon(1e-15));
    }
  }
}

TEST_CASE("trend checks appear only when their systems are present") {
  ExperimentConfig cfg = tiny_config();
  SweepResult res = run_sweep(cfg, "");
  // No SD and no Full-LN in the tiny grid: no applicable trend check.
  CHECK(res.checks.empty());
  CHECK(res.all_pass);
}

TEST_CASE("sweep reruns are byte-identical including csv and summary") {
  ExperimentConfig cfg = tiny_config();
  fs::path a = temp_dir("det_a");
  fs::path b = temp_dir("det_b");
  run_sweep(cfg, a.string());
  run_sweep(cfg, b.string());
  CHECK(read_file(a / "sweep.csv") == read_file(b / "sweep.csv"));
  CHECK(read_file(a / "summary.md") == read_file(b / "summary.md"));
  CHECK(read_file(a / "sweep.csv").size() > 0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("threaded sweep matches the single-threaded result exactly") {
  ExperimentConfig cfg = tiny_config();
  SweepResult one = run_sweep(cfg, "", 1);
  SweepResult four = run_sweep(cfg, "", 4);
  REQUIRE(one.rows.size() == four.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].system == four.rows[i].system);
    CHECK(one.rows[i].n_adapt == four.rows[i].n_adapt);
    CHECK(one.rows[i].metrics.overall_mse == four.rows[i].metrics.overall_mse);
    CHECK(one.rows[i].metrics.mcd == four.rows[i].metrics.mcd);
  }
}

TEST_CASE("sweep refuses a target corpus too small for the largest size") {
  ExperimentConfig cfg = tiny_config();
  cfg.sizes = {2, 40};  // needs 40 + 41 utterances, target only has 70
  CHECK_THROWS_AS(run_sweep(cfg, ""), ConfigError);
}

TEST_CASE("csv rows carry the display names and all metric columns") {
  ExperimentConfig cfg = tiny_config();
  fs::path dir = temp_dir("csv");
  run_sweep(cfg, dir.string());
  std::ifstream in(dir / "sweep.csv");
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "system,n_adapt,seed,mcd,f0_rmse,uv_err,mse,n_frames");
  std::string line;
  int rows = 0;
  bool saw_lrpd = false;
  while (std::getline(in, line)) {
    ++rows;
    if (line.rfind("OL+LRPD-LN,", 0) == 0) saw_lrpd = true;
  }
  CHECK(rows == 8);
  CHECK(saw_lrpd);
  fs::remove_all(dir);
}
