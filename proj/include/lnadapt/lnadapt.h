/* lnadapt: linear-network and LRPD adapter based speaker adaptation for
 * multi-task sequence regression models.
 *
 * C API over the C++ core. All functions return lna_status; on failure a
 * human-readable message is available from lna_last_error() (thread-local).
 */
#ifndef LNADAPT_H
#define LNADAPT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lna_status {
  LNA_OK = 0,
  LNA_ERR_INVALID_ARG = 1,
  LNA_ERR_SHAPE = 2,
  LNA_ERR_CONFIG = 3,
  LNA_ERR_STATE = 4,
  LNA_ERR_NUMERIC = 5,
  LNA_ERR_IO = 6,
  LNA_ERR_DATA = 7,
  LNA_ERR_INTERNAL = 8
} lna_status;

/* Message for the most recent failure on this thread. */
const char* lna_last_error(void);
const char* lna_status_name(lna_status status);

typedef struct lna_model lna_model;
typedef struct lna_corpus lna_corpus;

typedef enum lna_method {
  LNA_METHOD_OL = 0,
  LNA_METHOD_FULL_LN = 1,
  LNA_METHOD_LRPD_LN = 2
} lna_method;

typedef struct lna_metrics {
  double mcd_db;
  double f0_rmse_hz;
  double uv_error;
  double overall_mse;
  long n_frames;
} lna_metrics;

typedef struct lna_train_config {
  double learning_rate;
  int epochs;
  double lr_decay;
  uint64_t seed;
  int patience;
  double clip_norm;
} lna_train_config;

/* Defaults for speaker-dependent training / adaptation respectively. */
void lna_train_config_sd_default(lna_train_config* cfg);
void lna_train_config_adapt_default(lna_train_config* cfg);

/* ---- corpus ---- */

/* Generates a synthetic speaker corpus into out_dir (manifest + utt/<id>.bin).
 * Refuses a non-empty existing directory unless force is nonzero. */
lna_status lna_corpus_generate(uint64_t speaker_seed, double distance, int n_utts,
                               uint64_t corpus_seed, const char* out_dir, int force);

lna_status lna_corpus_open(const char* dir, lna_corpus** out);
void lna_corpus_close(lna_corpus* corpus);
lna_status lna_corpus_splits(const lna_corpus* corpus, int* n_train, int* n_valid,
                             int* n_test);

/* ---- models ---- */

lna_status lna_model_open(const char* path, lna_model** out);
void lna_model_close(lna_model* model);

/* Trains a speaker-dependent model on the corpus train split (limited to the
 * first n_train utterances when n_train >= 0). Writes the model to
 * model_out and, when record_csv_out is non-NULL, the per-epoch record. */
lna_status lna_train_sd(const lna_corpus* corpus, const lna_train_config* cfg,
                        int n_train, const char* model_out, const char* record_csv_out);

/* Adapts a source model to the target corpus. rank is used by
 * LNA_METHOD_LRPD_LN only. The trunk of the written model is verified
 * bit-identical to the source before the file is written. */
lna_status lna_adapt(const char* source_model_path, const lna_corpus* target,
                     lna_method method, int rank, int n_adapt,
                     const lna_train_config* cfg, const char* model_out,
                     const char* record_csv_out);

/* split: "train", "valid" or "test". */
lna_status lna_evaluate(const lna_model* model, const lna_corpus* corpus,
                        const char* split, lna_metrics* out);

/* Parameter accounting for one adapter of width k:
 * full = k^2, lrpd = k(2r+1). */
lna_status lna_adapter_param_count(lna_method method, int k, int rank, long long* out);

/* ---- experiment sweep ---- */

/* Runs the experiment grid described by the config file and writes
 * sweep.csv and summary.md into out_dir. *trends_ok (optional) is set to 1
 * when every trend check passed. */
lna_status lna_sweep_run(const char* config_path, const char* out_dir, int threads,
                         int* trends_ok);

/* Writes the built-in default experiment config ("easy" or "tough"). */
lna_status lna_sweep_write_default_config(const char* which, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* LNADAPT_H */
