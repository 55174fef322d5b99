#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"
#include "norm.hpp"
#include "streams.hpp"

namespace lnadapt {

// A seeded stand-in for a human speaker: a frozen teacher network plus
// per-stream affine warps. `distance` scales the deviation from the shared
// base teacher; distance 0 reproduces the base teacher exactly.
struct SpeakerSpec {
  std::uint64_t seed = 0;
  double distance = 0.0;
  MultiTaskModel teacher;
  // Per-stream output warps: y <- scale * y + offset.
  std::array<double, kNumStreams> warp_scale{1.0, 1.0, 1.0, 1.0};
  std::array<double, kNumStreams> warp_offset{0.0, 0.0, 0.0, 0.0};
};

struct Utterance {
  std::string id;
  Sequence inputs;                 // binary-like dims + numeric dims
  StreamSeqs targets;              // {mcep, lf0, bap, uv}
  std::vector<int> uv_flags;       // 1 = voiced
};

struct SplitSizes {
  int train = 0;
  int valid = 40;
  int test = 20;
};

enum class Split { train, valid, test };

struct CorpusManifest {
  std::uint64_t speaker_seed = 0;
  double speaker_distance = 0.0;
  std::uint64_t corpus_seed = 0;
  SplitSizes splits;
  std::size_t input_dim = 0;
  StreamDims stream_dims{};
  NormStats stats;
  std::vector<std::string> utterance_ids;  // train, then valid, then test
};

struct Corpus {
  CorpusManifest manifest;
  std::vector<Utterance> utterances;  // same order as manifest.utterance_ids

  std::vector<const Utterance*> split(Split s) const;
  int split_size(Split s) const;
};

// Desk-scale generation parameters.
struct CorpusGenConfig {
  std::size_t n_binary_dims = 20;
  std::size_t n_numeric_dims = 4;
  StreamDims stream_dims = {12, 3, 4, 1};  // lf0: static + delta + delta-delta
  int min_frames = 40;
  int max_frames = 80;
  double observation_noise = 0.01;
  int valid_size = 40;
  int test_size = 20;
};

SpeakerSpec make_speaker(std::uint64_t seed, double distance);

Corpus synthesize_corpus(const SpeakerSpec& spk, int n_utts, std::uint64_t seed,
                         const CorpusGenConfig& gen = {});

// Linear interpolation of F0 over unvoiced gaps; leading/trailing unvoiced
// runs are held at the nearest voiced value.
std::vector<double> interpolate_f0(const std::vector<double>& lf0,
                                   const std::vector<int>& uv_flags);

NormStats compute_norm_stats(const std::vector<const Utterance*>& train_split,
                             std::vector<std::string>* warnings = nullptr);

Utterance normalize(const Utterance& u, const NormStats& stats);
StreamSeqs denormalize(const StreamSeqs& streams, const NormStats& stats);

void save_corpus(const Corpus& c, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace lnadapt
