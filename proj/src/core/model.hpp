#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adapters.hpp"
#include "dense.hpp"
#include "lstm.hpp"
#include "norm.hpp"
#include "streams.hpp"

namespace lnadapt {

struct ModelConfig {
  std::size_t input_dim = 24;
  std::size_t dense_width = 32;
  std::vector<std::size_t> blstm_widths = {32, 32};
  StreamDims head_dims = {12, 3, 4, 1};

  static ModelConfig desk_default() { return {}; }
  static ModelConfig full_scale() {
    return {753, 1024, {1024, 1024, 1024}, {60, 3, 11, 1}};
  }
};

// Trunk: dense (tanh) -> BLSTM stack. Adapter slots sit at every inter-layer
// boundary: slot 0 after the dense layer, slot i after blstm[i-1]. Slot L
// (L = number of BLSTM layers) feeds the four linear heads.
struct MultiTaskModel {
  ModelConfig cfg;
  DenseLayer dense;
  std::vector<BlstmLayer> blstm;
  std::vector<std::optional<Adapter>> slots;
  std::array<DenseLayer, kNumStreams> heads;
  std::optional<NormStats> stats;  // stats the model was trained under

  std::size_t n_slots() const { return blstm.size() + 1; }
  std::size_t slot_width(std::size_t i) const {
    return i == 0 ? cfg.dense_width : cfg.blstm_widths[i - 1];
  }
  std::size_t trunk_out_dim() const { return slot_width(blstm.size()); }
  bool has_adapters() const;

  // All blocks in a fixed deterministic order: trunk, slots, heads.
  std::vector<ParamBlock> param_blocks();
  std::size_t total_param_count() const;
};

enum class TrainMode { sd, ol, ol_plus_adapters };

// Set of adapter slot indices.
struct InsertionPolicy {
  std::vector<std::size_t> slots;

  static InsertionPolicy after_dense() { return {{0}}; }
  static InsertionPolicy between_blstm(std::size_t i) { return {{i + 1}}; }
  // Default placement: before the last hidden layer and before the
  // output layer.
  static InsertionPolicy default_policy(const ModelConfig& cfg) {
    std::size_t L = cfg.blstm_widths.size();
    return {{L - 1, L}};
  }
  void validate(const ModelConfig& cfg) const;
};

struct ForwardTrace {
  std::size_t boundary = 0;  // first slot index covered by this trace
  bool has_dense = false;    // trace includes the dense stage (full forward)
  Sequence dense_in, dense_out;
  // Indexed by absolute slot/stage number; entries below `boundary` unused.
  std::vector<Sequence> slot_in;    // activation entering slot s
  std::vector<Sequence> slot_out;   // after the adapter at slot s (or pass-through)
  std::vector<BlstmCache> caches;   // caches[i] for blstm[i]
  StreamSeqs head_out;
};

MultiTaskModel build_model(const ModelConfig& cfg, std::uint64_t seed);

StreamSeqs model_forward(const MultiTaskModel& m, const Sequence& x,
                         ForwardTrace* trace = nullptr);

// Activation entering slot `boundary` (trunk only; slots below must be empty
// or are applied as encountered).
Sequence prefix_activation(const MultiTaskModel& m, const Sequence& x,
                           std::size_t boundary);

// Resume a forward pass from a cached activation at slot `boundary`.
StreamSeqs forward_from(const MultiTaskModel& m, const Sequence& act,
                        std::size_t boundary, ForwardTrace* trace = nullptr);

// Backprop the per-stream output gradients down to the trace boundary
// (through the dense layer too when the trace covers it).
GradMap model_backward(const MultiTaskModel& m, const ForwardTrace& trace,
                       const StreamSeqs& head_grads);

void insert_adapters(MultiTaskModel& m, const InsertionPolicy& policy, AdapterKind kind,
                     std::uint64_t seed);

std::set<std::string> trainable_mask(MultiTaskModel& m, TrainMode mode);

void save_model(MultiTaskModel& m, const std::string& path);
MultiTaskModel load_model(const std::string& path);

}  // namespace lnadapt
