#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "textio.hpp"

namespace lnadapt {

namespace {

// Pooled across a whole split: mean over streams of (sum sq / count).
struct MseAccum {
  std::array<double, kNumStreams> ss{};
  std::array<double, kNumStreams> count{};

  void add(const StreamSeqs& preds, const StreamSeqs& targets) {
    for (Stream s : kAllStreams) {
      const Sequence& p = preds[sidx(s)];
      const Sequence& t = targets[sidx(s)];
      if (!p.same_shape(t)) {
        throw ShapeError("mse: shape mismatch in stream " + stream_name(s));
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        double d = p.data()[i] - t.data()[i];
        ss[sidx(s)] += d * d;
      }
      count[sidx(s)] += static_cast<double>(p.size());
    }
  }

  double value() const {
    double total = 0.0;
    for (int s = 0; s < kNumStreams; ++s) {
      total += count[s] > 0 ? ss[s] / count[s] : 0.0;
    }
    return total / kNumStreams;
  }
};

struct TrainData {
  std::vector<Utterance> train;  // normalized
  std::vector<Utterance> valid;  // normalized
  // Cached activation entering the boundary slot (frozen-trunk modes only).
  std::vector<Sequence> train_prefix;
  std::vector<Sequence> valid_prefix;
  bool use_prefix = false;
  std::size_t boundary = 0;
};

double validation_loss(const MultiTaskModel& m, const TrainData& d) {
  MseAccum acc;
  for (std::size_t i = 0; i < d.valid.size(); ++i) {
    StreamSeqs preds =
        d.use_prefix ? forward_from(m, d.valid_prefix[i], d.boundary)
                     : model_forward(m, d.valid[i].inputs);
    acc.add(preds, d.valid[i].targets);
  }
  return acc.value();
}

double masked_sq_norm(const GradMap& grads, const std::set<std::string>& mask) {
  double s = 0.0;
  for (const auto& [name, g] : grads) {
    if (!mask.count(name)) continue;
    for (double v : g.vec()) s += v * v;
  }
  return s;
}

TrainRecord run_training(MultiTaskModel& m, TrainData& d, const std::set<std::string>& mask,
                         const TrainConfig& cfg) {
  TrainRecord rec;
  // Epoch 0: the untrained model.
  {
    MseAccum acc;
    for (std::size_t i = 0; i < d.train.size(); ++i) {
      StreamSeqs preds = d.use_prefix ? forward_from(m, d.train_prefix[i], d.boundary)
                                      : model_forward(m, d.train[i].inputs);
      acc.add(preds, d.train[i].targets);
    }
    rec.train_loss.push_back(acc.value());
    rec.valid_loss.push_back(validation_loss(m, d));
  }
  if (!std::isfinite(rec.valid_loss[0])) {
    throw NumericError("non-finite validation loss before training");
  }

  MultiTaskModel best = m;
  double best_score = cfg.select_on_valid ? rec.valid_loss[0] : rec.train_loss[0];
  int since_best = 0;
  double lr = cfg.learning_rate;

  std::vector<std::size_t> order(d.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, 0x50000 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = shuffle_rng.below(i);
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const Utterance& u = d.train[idx];
      ForwardTrace trace;
      StreamSeqs preds;
      if (d.use_prefix) {
        preds = forward_from(m, d.train_prefix[idx], d.boundary, &trace);
      } else {
        preds = model_forward(m, u.inputs, &trace);
      }
      auto [loss, out_grads] = mse_loss(preds, u.targets);
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch));
      }
      loss_sum += loss;
      GradMap grads = model_backward(m, trace, out_grads);
      double norm = std::sqrt(masked_sq_norm(grads, mask));
      double step_lr = lr;
      if (cfg.clip_norm > 0 && norm > cfg.clip_norm) {
        step_lr = lr * cfg.clip_norm / norm;
      }
      sgd_step(m, grads, mask, step_lr);
    }
    double train_loss = d.train.empty() ? 0.0 : loss_sum / d.train.size();
    double valid = validation_loss(m, d);
    if (!std::isfinite(valid)) {
      throw NumericError("training diverged: non-finite validation loss at epoch " +
                         std::to_string(epoch));
    }
    rec.train_loss.push_back(train_loss);
    rec.valid_loss.push_back(valid);
    double score = cfg.select_on_valid ? valid : train_loss;
    if (score < best_score) {
      best_score = score;
      best = m;
      rec.selected_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) break;
    }
    lr *= cfg.lr_decay;
  }
  m = best;
  return rec;
}

TrainData prepare_data(const Corpus& corpus, const NormStats& stats, int n_train_limit) {
  TrainData d;
  auto train = corpus.split(Split::train);
  auto valid = corpus.split(Split::valid);
  if (train.empty() || valid.empty()) {
    throw ConfigError("training needs non-empty train and validation splits");
  }
  std::size_t n_train = train.size();
  if (n_train_limit >= 0) {
    if (static_cast<std::size_t>(n_train_limit) > train.size()) {
      throw ConfigError("requested " + std::to_string(n_train_limit) +
                        " train utterances, corpus has " + std::to_string(train.size()));
    }
    n_train = static_cast<std::size_t>(n_train_limit);
    if (n_train == 0) throw ConfigError("training subset must be non-empty");
  }
  for (std::size_t i = 0; i < n_train; ++i) d.train.push_back(normalize(*train[i], stats));
  for (const Utterance* u : valid) d.valid.push_back(normalize(*u, stats));
  return d;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw ConfigError("lr_decay must be in (0, 1]");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (batch != 1) throw ConfigError("only batch = 1 (per-utterance SGD) is supported");
}

void TrainRecord::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write train record: " + path);
  out << "epoch,train_loss,valid_loss\n";
  for (std::size_t e = 0; e < train_loss.size(); ++e) {
    out << e << "," << fmt_g9(train_loss[e]) << "," << fmt_g9(valid_loss[e]) << "\n";
  }
  out.close();
  if (!out) throw IoError("train record write failed: " + path);
}

std::pair<double, StreamSeqs> mse_loss(const StreamSeqs& preds, const StreamSeqs& targets) {
  double loss = 0.0;
  StreamSeqs grads;
  for (Stream s : kAllStreams) {
    const Sequence& p = preds[sidx(s)];
    const Sequence& t = targets[sidx(s)];
    if (!p.same_shape(t)) {
      throw ShapeError("mse_loss: shape mismatch in stream " + stream_name(s));
    }
    Sequence g(p.rows(), p.cols());
    double ss = 0.0;
    double n = static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      double diff = p.data()[i] - t.data()[i];
      ss += diff * diff;
      g.data()[i] = 2.0 * diff / (n * kNumStreams);
    }
    loss += n > 0 ? ss / n : 0.0;
    grads[sidx(s)] = std::move(g);
  }
  return {loss / kNumStreams, grads};
}

void sgd_step(MultiTaskModel& m, const GradMap& grads, const std::set<std::string>& mask,
              double lr) {
  for (const ParamBlock& b : m.param_blocks()) {
    if (!mask.count(b.name)) continue;
    auto it = grads.find(b.name);
    if (it == grads.end()) continue;
    const Matrix& g = it->second;
    if (!g.same_shape(*b.tensor)) {
      throw ShapeError("sgd_step: gradient shape mismatch for " + b.name);
    }
    for (double v : g.vec()) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in block " + b.name);
    }
    double* p = b.tensor->data();
    const double* gp = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) p[i] -= lr * gp[i];
  }
}

ModelConfig model_config_for(const Corpus& corpus) {
  ModelConfig cfg = ModelConfig::desk_default();
  cfg.input_dim = corpus.manifest.input_dim;
  cfg.head_dims = corpus.manifest.stream_dims;
  return cfg;
}

std::pair<MultiTaskModel, TrainRecord> train_sd(const ModelConfig& cfg, const Corpus& corpus,
                                                const TrainConfig& tcfg, int n_train_limit) {
  tcfg.validate();
  if (cfg.input_dim != corpus.manifest.input_dim) {
    throw ConfigError("model input_dim does not match corpus");
  }
  for (Stream s : kAllStreams) {
    if (cfg.head_dims[sidx(s)] != corpus.manifest.stream_dims[sidx(s)]) {
      throw ConfigError("model head dims do not match corpus stream " + stream_name(s));
    }
  }
  MultiTaskModel m = build_model(cfg, tcfg.seed);
  m.stats = corpus.manifest.stats;
  TrainData d = prepare_data(corpus, corpus.manifest.stats, n_train_limit);
  auto mask = trainable_mask(m, TrainMode::sd);
  TrainRecord rec = run_training(m, d, mask, tcfg);
  return {std::move(m), std::move(rec)};
}

std::pair<MultiTaskModel, TrainRecord> adapt(const MultiTaskModel& source,
                                             const Corpus& target,
                                             std::optional<AdapterKind> kind,
                                             const InsertionPolicy& policy,
                                             const TrainConfig& tcfg, int n_adapt) {
  tcfg.validate();
  if (source.has_adapters()) {
    throw StateError("adapt: source model already carries adapters");
  }
  MultiTaskModel m = source;
  m.stats = target.manifest.stats;
  TrainMode mode = TrainMode::ol;
  std::size_t boundary = m.blstm.size();  // activation entering the last slot
  if (kind) {
    insert_adapters(m, policy, *kind, tcfg.seed);
    mode = TrainMode::ol_plus_adapters;
    boundary = *std::min_element(policy.slots.begin(), policy.slots.end());
  }
  TrainData d = prepare_data(target, target.manifest.stats, n_adapt);
  d.use_prefix = true;
  d.boundary = boundary;
  d.train_prefix.reserve(d.train.size());
  for (const Utterance& u : d.train) {
    d.train_prefix.push_back(prefix_activation(m, u.inputs, boundary));
  }
  d.valid_prefix.reserve(d.valid.size());
  for (const Utterance& u : d.valid) {
    d.valid_prefix.push_back(prefix_activation(m, u.inputs, boundary));
  }
  auto mask = trainable_mask(m, mode);
  TrainRecord rec = run_training(m, d, mask, tcfg);
  return {std::move(m), std::move(rec)};
}

MetricsReport evaluate(const MultiTaskModel& m, const Corpus& corpus, Split split) {
  auto utts = corpus.split(split);
  if (utts.empty()) throw ConfigError("evaluate: split is empty");
  const NormStats& stats = corpus.manifest.stats;

  MseAccum mse_acc;
  double mcd_weighted = 0.0;
  double f0_ss = 0.0;
  long f0_n = 0;
  long uv_wrong = 0;
  long n_frames = 0;

  for (const Utterance* u : utts) {
    Sequence xn = apply_norm(u->inputs, stats.input);
    StreamSeqs preds_n = model_forward(m, xn);
    StreamSeqs targets_n;
    for (Stream s : kAllStreams) {
      targets_n[sidx(s)] = apply_norm(u->targets[sidx(s)], stats.streams[sidx(s)]);
    }
    mse_acc.add(preds_n, targets_n);

    StreamSeqs preds = denormalize(preds_n, stats);
    long n = static_cast<long>(u->inputs.rows());
    n_frames += n;
    mcd_weighted += mcd(u->targets[sidx(Stream::mcep)], preds[sidx(Stream::mcep)]) * n;

    const Sequence& hyp_uv = preds[sidx(Stream::uv)];
    std::vector<int> hyp_flags(u->uv_flags.size());
    for (std::size_t t = 0; t < hyp_flags.size(); ++t) {
      hyp_flags[t] = hyp_uv(t, 0) > 0.5 ? 1 : 0;
      if (hyp_flags[t] != u->uv_flags[t]) ++uv_wrong;
    }
    const Sequence& ref_lf0 = u->targets[sidx(Stream::lf0)];
    const Sequence& hyp_lf0 = preds[sidx(Stream::lf0)];
    for (std::size_t t = 0; t < hyp_flags.size(); ++t) {
      if (!u->uv_flags[t] || !hyp_flags[t]) continue;
      double diff = std::exp(ref_lf0(t, 0)) - std::exp(hyp_lf0(t, 0));
      f0_ss += diff * diff;
      ++f0_n;
    }
  }

  MetricsReport r;
  r.n_frames = n_frames;
  r.overall_mse = mse_acc.value();
  r.mcd = n_frames > 0 ? mcd_weighted / static_cast<double>(n_frames) : 0.0;
  r.f0_defined = f0_n > 0;
  r.f0_rmse = f0_n > 0 ? std::sqrt(f0_ss / static_cast<double>(f0_n)) : 0.0;
  r.uv_error = n_frames > 0 ? static_cast<double>(uv_wrong) / n_frames : 0.0;
  return r;
}

}  // namespace lnadapt
