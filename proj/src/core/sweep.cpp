#include "sweep.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "log.hpp"
#include "textio.hpp"

namespace fs = std::filesystem;

namespace lnadapt {

namespace {

struct Cell {
  System system;
  int size;
  std::size_t rep_index;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::map<std::string, std::map<std::string, std::string>> parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string line, section;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("bad config line in " + path + ": " + line);
    }
    sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return sections;
}

void apply_train_section(const std::map<std::string, std::string>& kv, TrainConfig& cfg) {
  for (const auto& [k, v] : kv) {
    if (k == "lr") cfg.learning_rate = std::stod(v);
    else if (k == "epochs") cfg.epochs = std::stoi(v);
    else if (k == "decay") cfg.lr_decay = std::stod(v);
    else if (k == "patience") cfg.patience = std::stoi(v);
    else if (k == "clip") cfg.clip_norm = std::stod(v);
    else throw ConfigError("unknown train config key: " + k);
  }
}

}  // namespace

const std::string& system_display_name(System s) {
  static const std::map<System, std::string> names = {
      {System::sd, "SD"},
      {System::ol, "OL"},
      {System::ol_full_ln, "OL+Full-LN"},
      {System::ol_lrpd_ln, "OL+LRPD-LN"}};
  return names.at(s);
}

const std::string& system_token(System s) {
  static const std::map<System, std::string> tokens = {{System::sd, "sd"},
                                                       {System::ol, "ol"},
                                                       {System::ol_full_ln, "full-ln"},
                                                       {System::ol_lrpd_ln, "lrpd-ln"}};
  return tokens.at(s);
}

System system_from_token(const std::string& token) {
  for (System s : {System::sd, System::ol, System::ol_full_ln, System::ol_lrpd_ln}) {
    if (system_token(s) == token || system_display_name(s) == token) return s;
  }
  throw ConfigError("unknown system: " + token);
}

void ExperimentConfig::validate() const {
  if (sizes.empty()) throw ConfigError("sweep needs at least one adaptation size");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw ConfigError("adaptation sizes must be strictly increasing");
    }
  }
  if (systems.empty()) throw ConfigError("sweep needs at least one system");
  if (rep_seeds.empty()) throw ConfigError("sweep needs at least one repetition seed");
  if (rank < 1) throw ConfigError("lrpd rank must be >= 1");
  if (min_frames < 2 || max_frames < min_frames) {
    throw ConfigError("bad sweep utterance frame bounds");
  }
  if (adapt_updates < 1) throw ConfigError("adapt_updates must be >= 1");
  sd_train.validate();
  adapt_train.validate();
}

ExperimentConfig ExperimentConfig::easy_desk() {
  ExperimentConfig cfg;
  cfg.target.distance = 0.2;
  return cfg;
}

ExperimentConfig ExperimentConfig::tough_desk() {
  ExperimentConfig cfg;
  cfg.target.distance = 0.8;
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  auto sections = parse_ini(path);
  ExperimentConfig cfg;
  for (const auto& [section, kv] : sections) {
    if (section == "source" || section == "target") {
      SpeakerConfig& spk = section == "source" ? cfg.source : cfg.target;
      for (const auto& [k, v] : kv) {
        if (k == "seed") spk.seed = std::stoull(v);
        else if (k == "distance") spk.distance = std::stod(v);
        else if (k == "n_utts") spk.n_utts = std::stoi(v);
        else throw ConfigError("unknown key in [" + section + "]: " + k);
      }
    } else if (section == "sweep") {
      for (const auto& [k, v] : kv) {
        if (k == "sizes") {
          cfg.sizes.clear();
          for (const auto& tok : split_on(v, ',')) cfg.sizes.push_back(std::stoi(tok));
        } else if (k == "systems") {
          cfg.systems.clear();
          for (const auto& tok : split_on(v, ',')) {
            cfg.systems.push_back(system_from_token(tok));
          }
        } else if (k == "seeds") {
          cfg.rep_seeds.clear();
          for (const auto& tok : split_on(v, ',')) cfg.rep_seeds.push_back(std::stoull(tok));
        } else if (k == "rank") {
          cfg.rank = std::stoull(v);
        } else if (k == "min_frames") {
          cfg.min_frames = std::stoi(v);
        } else if (k == "max_frames") {
          cfg.max_frames = std::stoi(v);
        } else if (k == "adapt_updates") {
          cfg.adapt_updates = std::stoi(v);
        } else {
          throw ConfigError("unknown key in [sweep]: " + k);
        }
      }
    } else if (section == "train_sd") {
      apply_train_section(kv, cfg.sd_train);
    } else if (section == "adapt") {
      apply_train_section(kv, cfg.adapt_train);
    } else {
      throw ConfigError("unknown config section: [" + section + "]");
    }
  }
  cfg.validate();
  return cfg;
}

void write_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config: " + path);
  out << "[source]\n"
      << "seed = " << cfg.source.seed << "\n"
      << "distance = " << fmt_g17(cfg.source.distance) << "\n"
      << "n_utts = " << cfg.source.n_utts << "\n\n";
  out << "[target]\n"
      << "seed = " << cfg.target.seed << "\n"
      << "distance = " << fmt_g17(cfg.target.distance) << "\n"
      << "n_utts = " << cfg.target.n_utts << "\n\n";
  out << "[sweep]\nsizes = ";
  for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
    out << (i ? ", " : "") << cfg.sizes[i];
  }
  out << "\nsystems = ";
  for (std::size_t i = 0; i < cfg.systems.size(); ++i) {
    out << (i ? ", " : "") << system_token(cfg.systems[i]);
  }
  out << "\nseeds = ";
  for (std::size_t i = 0; i < cfg.rep_seeds.size(); ++i) {
    out << (i ? ", " : "") << cfg.rep_seeds[i];
  }
  out << "\nrank = " << cfg.rank << "\n"
      << "min_frames = " << cfg.min_frames << "\n"
      << "max_frames = " << cfg.max_frames << "\n"
      << "adapt_updates = " << cfg.adapt_updates << "\n\n";
  auto dump_train = [&](const char* name, const TrainConfig& t) {
    out << "[" << name << "]\n"
        << "lr = " << fmt_g17(t.learning_rate) << "\n"
        << "epochs = " << t.epochs << "\n"
        << "decay = " << fmt_g17(t.lr_decay) << "\n"
        << "patience = " << t.patience << "\n"
        << "clip = " << fmt_g17(t.clip_norm) << "\n\n";
  };
  dump_train("train_sd", cfg.sd_train);
  dump_train("adapt", cfg.adapt_train);
  out.close();
  if (!out) throw IoError("config write failed: " + path);
}

double SweepResult::median_mse(System s, int size) const {
  return medians.at({s, size}).overall_mse;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  cfg.validate();
  int largest = cfg.sizes.back();
  if (cfg.target.n_utts < largest + 41) {
    throw ConfigError("target n_utts too small for the largest adaptation size");
  }

  log_info("sweep: generating source corpus (" + std::to_string(cfg.source.n_utts) +
           " utterances)");
  CorpusGenConfig gen;
  gen.min_frames = cfg.min_frames;
  gen.max_frames = cfg.max_frames;
  SpeakerSpec source_spk = make_speaker(cfg.source.seed, cfg.source.distance);
  Corpus source_corpus = synthesize_corpus(source_spk, cfg.source.n_utts,
                                           mix_seed(cfg.source.seed, 0xc51ULL), gen);
  log_info("sweep: training source SD model");
  TrainConfig src_cfg = cfg.sd_train;
  src_cfg.seed = mix_seed(cfg.source.seed, 0x5dULL);
  auto [source_model, source_rec] =
      train_sd(model_config_for(source_corpus), source_corpus, src_cfg);
  log_info("sweep: source model selected epoch " + std::to_string(source_rec.selected_epoch));

  SpeakerSpec target_spk = make_speaker(cfg.target.seed, cfg.target.distance);
  std::vector<Corpus> target_corpora;
  target_corpora.reserve(cfg.rep_seeds.size());
  for (std::uint64_t rep : cfg.rep_seeds) {
    target_corpora.push_back(synthesize_corpus(
        target_spk, cfg.target.n_utts, mix_seed(cfg.target.seed, 0x7a0 + rep), gen));
  }

  std::vector<Cell> cells;
  for (System sys : cfg.systems) {
    for (int size : cfg.sizes) {
      for (std::size_t r = 0; r < cfg.rep_seeds.size(); ++r) {
        cells.push_back({sys, size, r});
      }
    }
  }

  std::vector<MetricsReport> results(cells.size());
  InsertionPolicy policy = InsertionPolicy::default_policy(source_model.cfg);

  auto run_cell = [&](const Cell& cell) {
    const Corpus& corpus = target_corpora[cell.rep_index];
    std::uint64_t rep = cfg.rep_seeds[cell.rep_index];
    std::uint64_t cell_seed =
        mix_seed(rep, 1000 * static_cast<std::uint64_t>(cell.size) +
                          static_cast<std::uint64_t>(cell.system));
    MultiTaskModel model;
    if (cell.system == System::sd) {
      TrainConfig t = cfg.sd_train;
      t.seed = cell_seed;
      // No target-side system may select on the target validation split; it
      // is reserved for reporting. The source model keeps validation
      // selection because its held-out data is source-side.
      t.select_on_valid = false;
      model = train_sd(model_config_for(corpus), corpus, t, cell.size).first;
    } else {
      TrainConfig t = cfg.adapt_train;
      t.seed = cell_seed;
      t.epochs = std::max(1, cfg.adapt_updates / cell.size);
      std::optional<AdapterKind> kind;
      if (cell.system == System::ol_full_ln) kind = AdapterKind::full_kind();
      if (cell.system == System::ol_lrpd_ln) kind = AdapterKind::lrpd_kind(cfg.rank);
      model = adapt(source_model, corpus, kind, policy, t, cell.size).first;
    }
    return evaluate(model, corpus, Split::valid);
  };

  int n_threads = std::max(1, threads);
  if (n_threads == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      log_debug("sweep: cell " + system_token(cells[i].system) + " size " +
                std::to_string(cells[i].size) + " rep " +
                std::to_string(cells[i].rep_index));
      results[i] = run_cell(cells[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) break;
        results[i] = run_cell(cells[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SweepResult res;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    res.rows.push_back(
        {cells[i].system, cells[i].size, cfg.rep_seeds[cells[i].rep_index], results[i]});
  }

  for (System sys : cfg.systems) {
    for (int size : cfg.sizes) {
      std::vector<double> mses, mcds, f0s, uvs;
      long frames = 0;
      for (const SweepRow& row : res.rows) {
        if (row.system != sys || row.n_adapt != size) continue;
        mses.push_back(row.metrics.overall_mse);
        mcds.push_back(row.metrics.mcd);
        f0s.push_back(row.metrics.f0_rmse);
        uvs.push_back(row.metrics.uv_error);
        frames += row.metrics.n_frames;
      }
      MetricsReport med;
      med.overall_mse = median(mses);
      med.mcd = median(mcds);
      med.f0_rmse = median(f0s);
      med.uv_error = median(uvs);
      med.n_frames = frames;
      res.medians[{sys, size}] = med;
    }
  }

  auto has = [&](System s) {
    return std::find(cfg.systems.begin(), cfg.systems.end(), s) != cfg.systems.end();
  };
  int smallest = cfg.sizes.front();
  if (has(System::sd) && (has(System::ol) || has(System::ol_full_ln) ||
                          has(System::ol_lrpd_ln))) {
    TrendCheck c;
    c.name = "adaptation_beats_sd";
    c.pass = true;
    for (int size : cfg.sizes) {
      double sd = res.median_mse(System::sd, size);
      for (System sys : {System::ol, System::ol_full_ln, System::ol_lrpd_ln}) {
        if (!has(sys)) continue;
        double v = res.median_mse(sys, size);
        if (!(v < sd)) {
          c.pass = false;
          c.detail += system_display_name(sys) + "@" + std::to_string(size) + " " +
                      fmt_g9(v) + " !< SD " + fmt_g9(sd) + "; ";
        }
      }
    }
    if (c.pass) c.detail = "every adaptation method beats SD at every size";
    res.checks.push_back(c);
  }
  if (has(System::ol) && has(System::ol_full_ln) && cfg.sizes.size() >= 2) {
    TrendCheck c;
    c.name = "ol_gap_grows";
    double gap_small = res.median_mse(System::ol, smallest) -
                       res.median_mse(System::ol_full_ln, smallest);
    double gap_large =
        res.median_mse(System::ol, largest) - res.median_mse(System::ol_full_ln, largest);
    c.pass = gap_large > gap_small;
    c.detail = "OL - OL+Full-LN gap: " + fmt_g9(gap_small) + " at n=" +
               std::to_string(smallest) + ", " + fmt_g9(gap_large) + " at n=" +
               std::to_string(largest);
    res.checks.push_back(c);
  }
  if (has(System::ol_full_ln) && has(System::ol_lrpd_ln) && cfg.sizes.size() >= 2) {
    TrendCheck c;
    c.name = "lrpd_stable_when_limited";
    double lrpd_small = res.median_mse(System::ol_lrpd_ln, smallest);
    double full_small = res.median_mse(System::ol_full_ln, smallest);
    double lrpd_large = res.median_mse(System::ol_lrpd_ln, largest);
    double full_large = res.median_mse(System::ol_full_ln, largest);
    c.pass = lrpd_small <= full_small && full_large <= lrpd_large;
    c.detail = "n=" + std::to_string(smallest) + ": LRPD " + fmt_g9(lrpd_small) +
               " vs Full " + fmt_g9(full_small) + "; n=" + std::to_string(largest) +
               ": Full " + fmt_g9(full_large) + " vs LRPD " + fmt_g9(lrpd_large);
    res.checks.push_back(c);
  }
  for (const TrendCheck& c : res.checks) res.all_pass = res.all_pass && c.pass;

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "sweep.csv");
    if (!csv) throw IoError("cannot write sweep.csv in " + out_dir);
    csv << "system,n_adapt,seed,mcd,f0_rmse,uv_err,mse,n_frames\n";
    for (const SweepRow& row : res.rows) {
      csv << system_display_name(row.system) << "," << row.n_adapt << "," << row.seed << ","
          << fmt_g9(row.metrics.mcd) << "," << fmt_g9(row.metrics.f0_rmse) << ","
          << fmt_g9(row.metrics.uv_error) << "," << fmt_g9(row.metrics.overall_mse) << ","
          << row.metrics.n_frames << "\n";
    }
    csv.close();
    if (!csv) throw IoError("sweep.csv write failed");

    std::ofstream md(fs::path(out_dir) / "summary.md");
    if (!md) throw IoError("cannot write summary.md in " + out_dir);
    md << "# Adaptation sweep summary\n\n";
    md << "Source speaker: seed " << cfg.source.seed << ", distance "
       << fmt_g9(cfg.source.distance) << ". Target speaker: seed " << cfg.target.seed
       << ", distance " << fmt_g9(cfg.target.distance) << ". Medians over "
       << cfg.rep_seeds.size() << " seeds, validation split.\n\n";
    auto table = [&](const std::string& title, auto metric) {
      md << "## " << title << "\n\n| system |";
      for (int size : cfg.sizes) md << " n=" << size << " |";
      md << "\n|---|";
      for (std::size_t i = 0; i < cfg.sizes.size(); ++i) md << "---|";
      md << "\n";
      for (System sys : cfg.systems) {
        md << "| " << system_display_name(sys) << " |";
        for (int size : cfg.sizes) {
          md << " " << fmt_g9(metric(res.medians.at({sys, size}))) << " |";
        }
        md << "\n";
      }
      md << "\n";
    };
    table("Overall MSE (normalized space)",
          [](const MetricsReport& m) { return m.overall_mse; });
    table("MCD (dB)", [](const MetricsReport& m) { return m.mcd; });
    table("F0 RMSE (Hz)", [](const MetricsReport& m) { return m.f0_rmse; });
    table("U/V error", [](const MetricsReport& m) { return m.uv_error; });
    md << "## Trend checks\n\n";
    for (const TrendCheck& c : res.checks) {
      md << "- " << (c.pass ? "PASS" : "FAIL") << " " << c.name << ": " << c.detail << "\n";
    }
    md.close();
    if (!md) throw IoError("summary.md write failed");
  }
  return res;
}

}  // namespace lnadapt
