// lnadapt command line: scripts corpus generation, SD training, adaptation,
// evaluation and the full experiment sweep through the shared-library C API.

#include <cstdio>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "lnadapt/lnadapt.h"

namespace {

int fail(lna_status status) {
  std::fprintf(stderr, "error (%s): %s\n", lna_status_name(status), lna_last_error());
  return 1;
}

struct TrainFlags {
  lna_train_config cfg;

  void attach(CLI::App* cmd, bool adapt_defaults) {
    if (adapt_defaults) {
      lna_train_config_adapt_default(&cfg);
    } else {
      lna_train_config_sd_default(&cfg);
    }
    cmd->add_option("--lr", cfg.learning_rate, "learning rate");
    cmd->add_option("--epochs", cfg.epochs, "training epochs");
    cmd->add_option("--decay", cfg.lr_decay, "per-epoch learning-rate decay");
    cmd->add_option("--patience", cfg.patience, "early-stopping patience (epochs)");
    cmd->add_option("--clip", cfg.clip_norm, "global L2 gradient clip");
    cmd->add_option("--seed", cfg.seed, "training seed");
  }
};

class CorpusHandle {
 public:
  lna_status open(const std::string& dir) { return lna_corpus_open(dir.c_str(), &c_); }
  ~CorpusHandle() { lna_corpus_close(c_); }
  lna_corpus* get() const { return c_; }

 private:
  lna_corpus* c_ = nullptr;
};

class ModelHandle {
 public:
  lna_status open(const std::string& path) { return lna_model_open(path.c_str(), &m_); }
  ~ModelHandle() { lna_model_close(m_); }
  lna_model* get() const { return m_; }

 private:
  lna_model* m_ = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear-network / LRPD adapter speaker adaptation toolkit"};
  app.require_subcommand(1);

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic speaker corpus");
  std::uint64_t gen_seed = 1;
  double gen_distance = 0.0;
  int gen_n_utts = 160;
  std::uint64_t gen_corpus_seed = 1;
  std::string gen_out;
  bool gen_force = false;
  gen->add_option("--seed", gen_seed, "speaker seed");
  gen->add_option("--distance", gen_distance, "speaker distance from the base teacher [0,1]");
  gen->add_option("--n-utts", gen_n_utts, "total utterances (incl. 40 valid + 20 test)");
  gen->add_option("--corpus-seed", gen_corpus_seed, "corpus draw seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_flag("--force", gen_force, "overwrite a non-empty output directory");

  // train-sd
  auto* tsd = app.add_subcommand("train-sd", "train a speaker-dependent model");
  std::string tsd_corpus, tsd_out, tsd_record;
  int tsd_n_train = -1;
  TrainFlags tsd_flags;
  tsd->add_option("--corpus", tsd_corpus, "corpus directory")->required();
  tsd->add_option("--out", tsd_out, "output model file (.ltm)")->required();
  tsd->add_option("--record", tsd_record, "per-epoch loss CSV");
  tsd->add_option("--n-train", tsd_n_train, "limit training utterances");
  tsd_flags.attach(tsd, false);

  // adapt
  auto* ada = app.add_subcommand("adapt", "adapt a source model to a target corpus");
  std::string ada_source, ada_corpus, ada_out, ada_record, ada_method = "lrpd-ln";
  int ada_rank = 10;
  int ada_n_adapt = -1;
  TrainFlags ada_flags;
  ada->add_option("--source", ada_source, "source model file")->required();
  ada->add_option("--corpus", ada_corpus, "target corpus directory")->required();
  ada->add_option("--method", ada_method, "ol, full-ln or lrpd-ln")
      ->check(CLI::IsMember({"ol", "full-ln", "lrpd-ln"}));
  ada->add_option("--rank", ada_rank, "LRPD rank r");
  ada->add_option("--n-adapt", ada_n_adapt, "number of adaptation utterances");
  ada->add_option("--out", ada_out, "output model file")->required();
  ada->add_option("--record", ada_record, "per-epoch loss CSV");
  ada_flags.attach(ada, true);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a model on a corpus split");
  std::string ev_model, ev_corpus, ev_split = "valid", ev_csv, ev_label = "model";
  int ev_n_adapt = 0;
  ev->add_option("--model", ev_model, "model file")->required();
  ev->add_option("--corpus", ev_corpus, "corpus directory")->required();
  ev->add_option("--split", ev_split, "train, valid or test");
  ev->add_option("--csv", ev_csv, "CSV file to append the row to");
  ev->add_option("--label", ev_label, "system label for the CSV row");
  ev->add_option("--n-adapt", ev_n_adapt, "n_adapt column for the CSV row");

  // sweep
  auto* sw = app.add_subcommand("sweep", "run the full experiment grid");
  std::string sw_config, sw_out, sw_default;
  int sw_threads = 1;
  sw->add_option("--config", sw_config, "experiment config file");
  sw->add_option("--out", sw_out, "report output directory");
  sw->add_option("--threads", sw_threads, "parallel grid cells");
  sw->add_option("--write-default-config", sw_default,
                 "write the built-in easy/tough config to --out and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (gen->parsed()) {
    lna_status s = lna_corpus_generate(gen_seed, gen_distance, gen_n_utts, gen_corpus_seed,
                                       gen_out.c_str(), gen_force ? 1 : 0);
    if (s != LNA_OK) return fail(s);
    CorpusHandle c;
    if (c.open(gen_out) != LNA_OK) return fail(LNA_ERR_IO);
    int tr = 0, va = 0, te = 0;
    lna_corpus_splits(c.get(), &tr, &va, &te);
    std::printf("corpus %s: train=%d valid=%d test=%d\n", gen_out.c_str(), tr, va, te);
    return 0;
  }

  if (tsd->parsed()) {
    CorpusHandle c;
    lna_status s = c.open(tsd_corpus);
    if (s != LNA_OK) return fail(s);
    s = lna_train_sd(c.get(), &tsd_flags.cfg, tsd_n_train, tsd_out.c_str(),
                     tsd_record.empty() ? nullptr : tsd_record.c_str());
    if (s != LNA_OK) return fail(s);
    std::printf("wrote %s\n", tsd_out.c_str());
    return 0;
  }

  if (ada->parsed()) {
    CorpusHandle c;
    lna_status s = c.open(ada_corpus);
    if (s != LNA_OK) return fail(s);
    lna_method method = LNA_METHOD_OL;
    if (ada_method == "full-ln") method = LNA_METHOD_FULL_LN;
    if (ada_method == "lrpd-ln") method = LNA_METHOD_LRPD_LN;
    s = lna_adapt(ada_source.c_str(), c.get(), method, ada_rank, ada_n_adapt,
                  &ada_flags.cfg, ada_out.c_str(),
                  ada_record.empty() ? nullptr : ada_record.c_str());
    if (s != LNA_OK) return fail(s);
    std::printf("wrote %s\n", ada_out.c_str());
    return 0;
  }

  if (ev->parsed()) {
    CorpusHandle c;
    lna_status s = c.open(ev_corpus);
    if (s != LNA_OK) return fail(s);
    ModelHandle m;
    s = m.open(ev_model);
    if (s != LNA_OK) return fail(s);
    lna_metrics metrics{};
    s = lna_evaluate(m.get(), c.get(), ev_split.c_str(), &metrics);
    if (s != LNA_OK) return fail(s);
    char row[256];
    std::snprintf(row, sizeof row, "%s,%d,%.9g,%.9g,%.9g,%.9g,%ld", ev_label.c_str(),
                  ev_n_adapt, metrics.mcd_db, metrics.f0_rmse_hz, metrics.uv_error,
                  metrics.overall_mse, metrics.n_frames);
    const char* header = "system,n_adapt,mcd,f0_rmse,uv_err,mse,n_frames";
    std::printf("%s\n%s\n", header, row);
    if (!ev_csv.empty()) {
      bool need_header = true;
      {
        std::ifstream probe(ev_csv);
        need_header = !probe.good() || probe.peek() == std::ifstream::traits_type::eof();
      }
      std::ofstream out(ev_csv, std::ios::app);
      if (!out) {
        std::fprintf(stderr, "error: cannot append to %s\n", ev_csv.c_str());
        return 1;
      }
      if (need_header) out << header << "\n";
      out << row << "\n";
    }
    return 0;
  }

  if (sw->parsed()) {
    if (!sw_default.empty()) {
      if (sw_out.empty()) {
        std::fprintf(stderr, "error: --write-default-config requires --out\n");
        return 2;
      }
      lna_status s = lna_sweep_write_default_config(sw_default.c_str(), sw_out.c_str());
      if (s != LNA_OK) return fail(s);
      std::printf("wrote %s\n", sw_out.c_str());
      return 0;
    }
    if (sw_config.empty() || sw_out.empty()) {
      std::fprintf(stderr, "error: sweep requires --config and --out\n");
      return 2;
    }
    int trends_ok = 0;
    lna_status s = lna_sweep_run(sw_config.c_str(), sw_out.c_str(), sw_threads, &trends_ok);
    if (s != LNA_OK) return fail(s);
    std::printf("sweep report written to %s (trend checks: %s)\n", sw_out.c_str(),
                trends_ok ? "PASS" : "FAIL");
    return trends_ok ? 0 : 1;
  }

  return 2;
}
