#include "lnadapt/lnadapt.h"

#include <cstring>
#include <filesystem>
#include <string>

#include "core/corpus.hpp"
#include "core/log.hpp"
#include "core/model.hpp"
#include "core/sweep.hpp"
#include "core/training.hpp"

namespace fs = std::filesystem;
using namespace lnadapt;

struct lna_model {
  MultiTaskModel model;
};

struct lna_corpus {
  Corpus corpus;
};

namespace {

thread_local std::string g_last_error;

lna_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_arg: return LNA_ERR_INVALID_ARG;
    case ErrorCode::shape: return LNA_ERR_SHAPE;
    case ErrorCode::config: return LNA_ERR_CONFIG;
    case ErrorCode::state: return LNA_ERR_STATE;
    case ErrorCode::numeric: return LNA_ERR_NUMERIC;
    case ErrorCode::io: return LNA_ERR_IO;
    case ErrorCode::data: return LNA_ERR_DATA;
    case ErrorCode::internal: return LNA_ERR_INTERNAL;
  }
  return LNA_ERR_INTERNAL;
}

template <typename Fn>
lna_status guarded(Fn&& fn) {
  try {
    fn();
    return LNA_OK;
  } catch (const LnError& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LNA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LNA_ERR_INTERNAL;
  }
}

lna_status invalid(const char* msg) {
  g_last_error = msg;
  return LNA_ERR_INVALID_ARG;
}

TrainConfig from_c(const lna_train_config* cfg, bool adapt_defaults) {
  TrainConfig t = adapt_defaults ? TrainConfig::adapt_default() : TrainConfig::sd_default();
  if (cfg) {
    t.learning_rate = cfg->learning_rate;
    t.epochs = cfg->epochs;
    t.lr_decay = cfg->lr_decay;
    t.seed = cfg->seed;
    t.patience = cfg->patience;
    t.clip_norm = cfg->clip_norm;
  }
  return t;
}

Split split_from_name(const char* name) {
  std::string s(name);
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split: " + s + " (expected train, valid or test)");
}

void verify_trunk_unchanged(const MultiTaskModel& source, MultiTaskModel& adapted) {
  auto& src = const_cast<MultiTaskModel&>(source);
  std::map<std::string, Matrix*> src_blocks;
  for (const ParamBlock& b : src.param_blocks()) src_blocks[b.name] = b.tensor;
  for (const ParamBlock& b : adapted.param_blocks()) {
    if (b.name.rfind("trunk.", 0) != 0) continue;
    auto it = src_blocks.find(b.name);
    if (it == src_blocks.end() || !(*it->second == *b.tensor)) {
      throw LnError(ErrorCode::internal,
                    "trunk block " + b.name + " changed during adaptation");
    }
  }
}

}  // namespace

extern "C" {

const char* lna_last_error(void) { return g_last_error.c_str(); }

const char* lna_status_name(lna_status status) {
  switch (status) {
    case LNA_OK: return "ok";
    case LNA_ERR_INVALID_ARG: return "invalid argument";
    case LNA_ERR_SHAPE: return "shape error";
    case LNA_ERR_CONFIG: return "config error";
    case LNA_ERR_STATE: return "state error";
    case LNA_ERR_NUMERIC: return "numeric error";
    case LNA_ERR_IO: return "io error";
    case LNA_ERR_DATA: return "data error";
    case LNA_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

void lna_train_config_sd_default(lna_train_config* cfg) {
  if (!cfg) return;
  TrainConfig t = TrainConfig::sd_default();
  *cfg = {t.learning_rate, t.epochs, t.lr_decay, t.seed, t.patience, t.clip_norm};
}

void lna_train_config_adapt_default(lna_train_config* cfg) {
  if (!cfg) return;
  TrainConfig t = TrainConfig::adapt_default();
  *cfg = {t.learning_rate, t.epochs, t.lr_decay, t.seed, t.patience, t.clip_norm};
}

lna_status lna_corpus_generate(uint64_t speaker_seed, double distance, int n_utts,
                               uint64_t corpus_seed, const char* out_dir, int force) {
  if (!out_dir) return invalid("out_dir is NULL");
  return guarded([&] {
    fs::path dir(out_dir);
    if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
      throw StateError("output directory " + std::string(out_dir) +
                       " is not empty (use force to overwrite)");
    }
    SpeakerSpec spk = make_speaker(speaker_seed, distance);
    Corpus c = synthesize_corpus(spk, n_utts, corpus_seed);
    save_corpus(c, out_dir);
    log_info("wrote corpus with " + std::to_string(c.utterances.size()) +
             " utterances to " + out_dir);
  });
}

lna_status lna_corpus_open(const char* dir, lna_corpus** out) {
  if (!dir || !out) return invalid("corpus_open: NULL argument");
  return guarded([&] { *out = new lna_corpus{load_corpus(dir)}; });
}

void lna_corpus_close(lna_corpus* corpus) { delete corpus; }

lna_status lna_corpus_splits(const lna_corpus* corpus, int* n_train, int* n_valid,
                             int* n_test) {
  if (!corpus) return invalid("corpus is NULL");
  if (n_train) *n_train = corpus->corpus.manifest.splits.train;
  if (n_valid) *n_valid = corpus->corpus.manifest.splits.valid;
  if (n_test) *n_test = corpus->corpus.manifest.splits.test;
  return LNA_OK;
}

lna_status lna_model_open(const char* path, lna_model** out) {
  if (!path || !out) return invalid("model_open: NULL argument");
  return guarded([&] { *out = new lna_model{load_model(path)}; });
}

void lna_model_close(lna_model* model) { delete model; }

lna_status lna_train_sd(const lna_corpus* corpus, const lna_train_config* cfg,
                        int n_train, const char* model_out, const char* record_csv_out) {
  if (!corpus || !model_out) return invalid("train_sd: NULL argument");
  return guarded([&] {
    TrainConfig t = from_c(cfg, false);
    auto [model, rec] = train_sd(model_config_for(corpus->corpus), corpus->corpus, t,
                                 n_train);
    save_model(model, model_out);
    if (record_csv_out) rec.write_csv(record_csv_out);
    log_info("train-sd: selected epoch " + std::to_string(rec.selected_epoch) +
             ", valid loss " + std::to_string(rec.valid_loss[rec.selected_epoch]));
  });
}

lna_status lna_adapt(const char* source_model_path, const lna_corpus* target,
                     lna_method method, int rank, int n_adapt,
                     const lna_train_config* cfg, const char* model_out,
                     const char* record_csv_out) {
  if (!source_model_path || !target || !model_out) {
    return invalid("adapt: NULL argument");
  }
  return guarded([&] {
    MultiTaskModel source = load_model(source_model_path);
    TrainConfig t = from_c(cfg, true);
    std::optional<AdapterKind> kind;
    if (method == LNA_METHOD_FULL_LN) kind = AdapterKind::full_kind();
    if (method == LNA_METHOD_LRPD_LN) {
      if (rank < 1) throw ConfigError("lrpd rank must be >= 1");
      kind = AdapterKind::lrpd_kind(static_cast<std::size_t>(rank));
    }
    InsertionPolicy policy = InsertionPolicy::default_policy(source.cfg);
    if (kind) {
      for (std::size_t s : policy.slots) {
        std::size_t width = source.slot_width(s);
        log_info("adapter at slot " + std::to_string(s) + ": " +
                 std::to_string(param_count(*kind, width)) + " parameters (k=" +
                 std::to_string(width) + ")");
      }
    }
    auto [model, rec] = adapt(source, target->corpus, kind, policy, t, n_adapt);
    verify_trunk_unchanged(source, model);
    save_model(model, model_out);
    if (record_csv_out) rec.write_csv(record_csv_out);
    log_info("adapt: selected epoch " + std::to_string(rec.selected_epoch));
  });
}

lna_status lna_evaluate(const lna_model* model, const lna_corpus* corpus,
                        const char* split, lna_metrics* out) {
  if (!model || !corpus || !split || !out) return invalid("evaluate: NULL argument");
  return guarded([&] {
    MetricsReport r = evaluate(model->model, corpus->corpus, split_from_name(split));
    *out = {r.mcd, r.f0_rmse, r.uv_error, r.overall_mse, r.n_frames};
  });
}

lna_status lna_adapter_param_count(lna_method method, int k, int rank, long long* out) {
  if (!out) return invalid("param_count: out is NULL");
  if (k < 1) return invalid("param_count: k must be >= 1");
  if (method == LNA_METHOD_OL) return invalid("param_count: OL has no adapter");
  return guarded([&] {
    AdapterKind kind = method == LNA_METHOD_FULL_LN
                           ? AdapterKind::full_kind()
                           : AdapterKind::lrpd_kind(static_cast<std::size_t>(rank));
    *out = static_cast<long long>(param_count(kind, static_cast<std::size_t>(k)));
  });
}

lna_status lna_sweep_run(const char* config_path, const char* out_dir, int threads,
                         int* trends_ok) {
  if (!config_path || !out_dir) return invalid("sweep_run: NULL argument");
  return guarded([&] {
    ExperimentConfig cfg = parse_experiment_config(config_path);
    SweepResult res = run_sweep(cfg, out_dir, threads);
    if (trends_ok) *trends_ok = res.all_pass ? 1 : 0;
  });
}

lna_status lna_sweep_write_default_config(const char* which, const char* path) {
  if (!which || !path) return invalid("write_default_config: NULL argument");
  return guarded([&] {
    std::string w(which);
    if (w == "easy") {
      write_experiment_config(ExperimentConfig::easy_desk(), path);
    } else if (w == "tough") {
      write_experiment_config(ExperimentConfig::tough_desk(), path);
    } else {
      throw ConfigError("unknown default config: " + w + " (expected easy or tough)");
    }
  });
}

}  // extern "C"
