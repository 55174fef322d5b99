#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace lnadapt {

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 60;
  int batch = 1;  // utterances per update
  double lr_decay = 0.98;
  std::uint64_t seed = 1;
  int patience = 10;
  double clip_norm = 5.0;
  // SD training holds out the validation split for model selection and early
  // stopping. Adaptation assumes no held-out speaker data: it fits all the
  // adaptation utterances and selects on training loss, so an over-sized
  // adapter is allowed to overfit when data is scarce.
  bool select_on_valid = true;

  static TrainConfig sd_default() { return {}; }
  static TrainConfig adapt_default() {
    TrainConfig c;
    c.learning_rate = 0.03;
    c.epochs = 120;
    c.lr_decay = 0.997;
    c.patience = 40;
    c.select_on_valid = false;
    return c;
  }
  void validate() const;
};

struct TrainRecord {
  // Index 0 is the untrained model; entry e the state after epoch e.
  std::vector<double> train_loss;
  std::vector<double> valid_loss;
  int selected_epoch = 0;

  void write_csv(const std::string& path) const;
};

// loss = mean over streams of MSE over all frames and dims; grads are the
// exact derivatives of that loss wrt the predictions.
std::pair<double, StreamSeqs> mse_loss(const StreamSeqs& preds, const StreamSeqs& targets);

// p <- p - lr * g for masked-true blocks; everything else left untouched.
void sgd_step(MultiTaskModel& m, const GradMap& grads, const std::set<std::string>& mask,
              double lr);

ModelConfig model_config_for(const Corpus& corpus);

std::pair<MultiTaskModel, TrainRecord> train_sd(const ModelConfig& cfg, const Corpus& corpus,
                                                const TrainConfig& tcfg,
                                                int n_train_limit = -1);

// kind = nullopt selects OL mode (heads only); otherwise adapters are
// inserted per `policy` and trained together with the heads. The trunk is
// never touched.
std::pair<MultiTaskModel, TrainRecord> adapt(const MultiTaskModel& source,
                                             const Corpus& target,
                                             std::optional<AdapterKind> kind,
                                             const InsertionPolicy& policy,
                                             const TrainConfig& tcfg, int n_adapt = -1);

MetricsReport evaluate(const MultiTaskModel& m, const Corpus& corpus, Split split);

}  // namespace lnadapt
