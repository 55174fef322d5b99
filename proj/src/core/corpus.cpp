#include "corpus.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "binio.hpp"
#include "textio.hpp"

namespace fs = std::filesystem;

namespace lnadapt {

namespace {

constexpr std::uint64_t kBaseTeacherSeed = 0x7ea43e5ULL;
constexpr char kUttMagic[8] = {'L', 'N', 'A', 'D', 'P', 'T', 'U', '1'};
constexpr double kStdFloor = 1e-6;

// Teacher topology family mirrors the student model, one BLSTM deep. The
// lf0 head produces the static value only; deltas are appended afterwards.
ModelConfig teacher_config(const CorpusGenConfig& gen) {
  ModelConfig cfg;
  cfg.input_dim = gen.n_binary_dims + gen.n_numeric_dims;
  cfg.dense_width = 32;
  cfg.blstm_widths = {32};
  cfg.head_dims = {gen.stream_dims[sidx(Stream::mcep)], 1,
                   gen.stream_dims[sidx(Stream::bap)], 1};
  return cfg;
}

std::vector<double> deltas(const std::vector<double>& x) {
  std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (n == 1) break;
    if (t == 0) {
      d[t] = x[1] - x[0];
    } else if (t + 1 == n) {
      d[t] = x[t] - x[t - 1];
    } else {
      d[t] = 0.5 * (x[t + 1] - x[t - 1]);
    }
  }
  return d;
}

void accumulate(const Sequence& x, std::vector<double>& sum, std::vector<double>& sumsq,
                std::size_t& count) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      sum[c] += x(r, c);
      sumsq[c] += x(r, c) * x(r, c);
    }
  }
  count += x.rows();
}

DimStats finalize_stats(const std::vector<double>& sum, const std::vector<double>& sumsq,
                        std::size_t count, const std::string& what,
                        std::vector<std::string>* warnings) {
  DimStats s;
  s.mean.resize(sum.size());
  s.stdv.resize(sum.size());
  for (std::size_t c = 0; c < sum.size(); ++c) {
    double mean = sum[c] / static_cast<double>(count);
    double var = sumsq[c] / static_cast<double>(count) - mean * mean;
    double sd = var > 0.0 ? std::sqrt(var) : 0.0;
    if (sd < kStdFloor) {
      sd = kStdFloor;
      if (warnings) {
        warnings->push_back("constant dimension " + std::to_string(c) + " in " + what +
                            "; std floored");
      }
    }
    s.mean[c] = mean;
    s.stdv[c] = sd;
  }
  return s;
}

}  // namespace

std::vector<const Utterance*> Corpus::split(Split s) const {
  std::size_t begin = 0, count = 0;
  switch (s) {
    case Split::train:
      begin = 0;
      count = static_cast<std::size_t>(manifest.splits.train);
      break;
    case Split::valid:
      begin = static_cast<std::size_t>(manifest.splits.train);
      count = static_cast<std::size_t>(manifest.splits.valid);
      break;
    case Split::test:
      begin = static_cast<std::size_t>(manifest.splits.train + manifest.splits.valid);
      count = static_cast<std::size_t>(manifest.splits.test);
      break;
  }
  std::vector<const Utterance*> out;
  out.reserve(count);
  for (std::size_t i = begin; i < begin + count; ++i) out.push_back(&utterances[i]);
  return out;
}

int Corpus::split_size(Split s) const {
  switch (s) {
    case Split::train: return manifest.splits.train;
    case Split::valid: return manifest.splits.valid;
    case Split::test: return manifest.splits.test;
  }
  return 0;
}

SpeakerSpec make_speaker(std::uint64_t seed, double distance) {
  if (!(distance >= 0.0 && distance <= 1.0)) {
    throw ConfigError("speaker distance must be in [0, 1], got " + std::to_string(distance));
  }
  CorpusGenConfig gen;
  SpeakerSpec spk;
  spk.seed = seed;
  spk.distance = distance;
  spk.teacher = build_model(teacher_config(gen), kBaseTeacherSeed);
  // Shared base calibration: plausible log F0 level around 180 Hz.
  spk.teacher.heads[sidx(Stream::lf0)].b(0, 0) += std::log(180.0);

  // Distance-scaled seeded perturbation. The draw sequence is fixed, so
  // distance 0 reproduces the base teacher exactly and discrepancy grows
  // linearly in distance for a given seed. Two components:
  //
  //  1. A hidden-space mix M = I + amp * (low-rank + small dense part)
  //     folded into the head weights (W_head <- W_head * M). Speaker
  //     identity mostly lives in a few directions of the shared hidden
  //     space, with a faint diffuse residual. The amplitude saturates in
  //     distance (tanh): mixing keeps growing but never fully scrambles the
  //     shared hidden space, so a frozen shared trunk stays useful even for
  //     far-away speakers.
  //  2. A small dense jitter on every block: residual idiosyncrasy no
  //     hidden-space transform can fully explain.
  Rng rng(mix_seed(seed, 0x5eedULL));
  const std::size_t k = spk.teacher.trunk_out_dim();
  const double mix_amp = std::tanh(3.0 * distance) / 3.0;
  Matrix mix = Matrix::identity(k);
  const int mix_rank = 3;
  for (int r = 0; r < mix_rank; ++r) {
    std::vector<double> u(k), v(k);
    double un = 0.0, vn = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      u[i] = rng.normal();
      v[i] = rng.normal();
      un += u[i] * u[i];
      vn += v[i] * v[i];
    }
    un = std::sqrt(un);
    vn = std::sqrt(vn);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        mix(i, j) += mix_amp * 1.2 * (u[i] / un) * (v[j] / vn);
      }
    }
  }
  double dense_scale = mix_amp * 0.6 / std::sqrt(static_cast<double>(k));
  for (double& v : mix.vec()) v += dense_scale * rng.normal();
  for (Stream s : kAllStreams) {
    DenseLayer& head = spk.teacher.heads[sidx(s)];
    head.W = matmul(head.W, mix);
  }
  for (const ParamBlock& b : spk.teacher.param_blocks()) {
    double scale = 0.1 / std::sqrt(static_cast<double>(b.tensor->cols()));
    for (double& v : b.tensor->vec()) v += distance * scale * rng.normal();
  }
  // Gender-like pitch shift plus small spectral warps.
  double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  spk.warp_scale[sidx(Stream::lf0)] = 1.0 + sign * 0.3 * distance;
  spk.warp_scale[sidx(Stream::mcep)] = 1.0 + 0.1 * distance * rng.normal();
  spk.warp_offset[sidx(Stream::mcep)] = 0.05 * distance * rng.normal();
  spk.warp_scale[sidx(Stream::bap)] = 1.0 + 0.1 * distance * rng.normal();
  spk.warp_offset[sidx(Stream::bap)] = 0.05 * distance * rng.normal();
  return spk;
}

std::vector<double> interpolate_f0(const std::vector<double>& lf0,
                                   const std::vector<int>& uv_flags) {
  if (lf0.size() != uv_flags.size()) {
    throw ShapeError("interpolate_f0: lf0 and uv lengths differ");
  }
  std::vector<std::size_t> voiced;
  for (std::size_t t = 0; t < uv_flags.size(); ++t) {
    if (uv_flags[t]) voiced.push_back(t);
  }
  if (voiced.empty()) throw DataError("interpolate_f0: utterance has no voiced frame");
  std::vector<double> out(lf0.size());
  for (std::size_t t = 0; t < lf0.size(); ++t) {
    if (uv_flags[t]) {
      out[t] = lf0[t];
      continue;
    }
    if (t < voiced.front()) {
      out[t] = lf0[voiced.front()];
    } else if (t > voiced.back()) {
      out[t] = lf0[voiced.back()];
    } else {
      std::size_t j = 0;
      while (voiced[j + 1] < t) ++j;
      std::size_t lo = voiced[j];
      std::size_t hi = voiced[j + 1];
      double w = static_cast<double>(t - lo) / static_cast<double>(hi - lo);
      out[t] = lf0[lo] + w * (lf0[hi] - lf0[lo]);
    }
  }
  return out;
}

Corpus synthesize_corpus(const SpeakerSpec& spk, int n_utts, std::uint64_t seed,
                         const CorpusGenConfig& gen) {
  int reserved = gen.valid_size + gen.test_size;
  if (n_utts <= reserved) {
    throw ConfigError("n_utts = " + std::to_string(n_utts) + " too small; need > " +
                      std::to_string(reserved) + " for the valid/test splits");
  }
  std::size_t lf0_dim = gen.stream_dims[sidx(Stream::lf0)];
  if (lf0_dim != 1 && lf0_dim != 3) {
    throw ConfigError("lf0 stream dim must be 1 (static) or 3 (static+deltas)");
  }
  if (gen.stream_dims[sidx(Stream::uv)] != 1) {
    throw ConfigError("uv stream dim must be 1");
  }
  std::size_t input_dim = gen.n_binary_dims + gen.n_numeric_dims;
  if (spk.teacher.cfg.input_dim != input_dim) {
    throw ConfigError("generation config input dims do not match the teacher topology");
  }

  Corpus c;
  c.manifest.speaker_seed = spk.seed;
  c.manifest.speaker_distance = spk.distance;
  c.manifest.corpus_seed = seed;
  c.manifest.splits = {n_utts - reserved, gen.valid_size, gen.test_size};
  c.manifest.input_dim = input_dim;
  c.manifest.stream_dims = gen.stream_dims;

  Rng rng(mix_seed(seed, 0xc0a905ULL));
  for (int u = 0; u < n_utts; ++u) {
    Utterance utt;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "u%05d", u);
    utt.id = idbuf;
    int n = gen.min_frames + static_cast<int>(rng.below(
                static_cast<std::uint64_t>(gen.max_frames - gen.min_frames + 1)));

    utt.inputs = Sequence(n, input_dim);
    for (std::size_t d = 0; d < gen.n_binary_dims; ++d) {
      for (int t = 0; t < n; ++t) utt.inputs(t, d) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    for (std::size_t d = 0; d < gen.n_numeric_dims; ++d) {
      double prev = 0.0;
      for (int t = 0; t < n; ++t) {
        prev = 0.8 * prev + 0.6 * rng.normal();
        utt.inputs(t, gen.n_binary_dims + d) = prev;
      }
    }

    // Voiced/unvoiced segment process: geometric runs, voiced mean length
    // 12 frames, unvoiced mean 8.
    utt.uv_flags.resize(n);
    bool voiced = rng.bernoulli(0.6);
    int n_voiced = 0;
    for (int t = 0; t < n; ++t) {
      utt.uv_flags[t] = voiced ? 1 : 0;
      n_voiced += voiced ? 1 : 0;
      double stay = voiced ? (1.0 - 1.0 / 12.0) : (1.0 - 1.0 / 8.0);
      if (!rng.bernoulli(stay)) voiced = !voiced;
    }
    if (n_voiced == 0) utt.uv_flags[n / 2] = 1;

    StreamSeqs raw = model_forward(spk.teacher, utt.inputs);
    auto warp = [&](Stream s, Sequence& y) {
      double sc = spk.warp_scale[sidx(s)];
      double of = spk.warp_offset[sidx(s)];
      for (double& v : y.vec()) v = sc * v + of;
    };
    Sequence mcep = raw[sidx(Stream::mcep)];
    Sequence bap = raw[sidx(Stream::bap)];
    warp(Stream::mcep, mcep);
    warp(Stream::bap, bap);

    std::vector<double> lf0_static(n);
    for (int t = 0; t < n; ++t) {
      lf0_static[t] = spk.warp_scale[sidx(Stream::lf0)] * raw[sidx(Stream::lf0)](t, 0) +
                      spk.warp_offset[sidx(Stream::lf0)];
    }
    lf0_static = interpolate_f0(lf0_static, utt.uv_flags);

    // Observation noise on the continuous streams only; uv stays exact.
    // Far-away speakers come with noisier observations, so the irreducible
    // error floor rises with distance for every system, including ones
    // trained from scratch on the target data.
    double noise = gen.observation_noise * (1.0 + 2.5 * spk.distance);
    for (double& v : mcep.vec()) v += noise * rng.normal();
    for (double& v : bap.vec()) v += noise * rng.normal();
    for (double& v : lf0_static) v += noise * rng.normal();

    Sequence lf0(n, lf0_dim);
    for (int t = 0; t < n; ++t) lf0(t, 0) = lf0_static[t];
    if (lf0_dim == 3) {
      std::vector<double> d1 = deltas(lf0_static);
      std::vector<double> d2 = deltas(d1);
      for (int t = 0; t < n; ++t) {
        lf0(t, 1) = d1[t];
        lf0(t, 2) = d2[t];
      }
    }
    Sequence uvseq(n, 1);
    for (int t = 0; t < n; ++t) uvseq(t, 0) = static_cast<double>(utt.uv_flags[t]);

    utt.targets[sidx(Stream::mcep)] = std::move(mcep);
    utt.targets[sidx(Stream::lf0)] = std::move(lf0);
    utt.targets[sidx(Stream::bap)] = std::move(bap);
    utt.targets[sidx(Stream::uv)] = std::move(uvseq);
    c.utterances.push_back(std::move(utt));
  }
  for (const Utterance& u : c.utterances) c.manifest.utterance_ids.push_back(u.id);
  c.manifest.stats = compute_norm_stats(c.split(Split::train));
  return c;
}

NormStats compute_norm_stats(const std::vector<const Utterance*>& train_split,
                             std::vector<std::string>* warnings) {
  if (train_split.empty()) throw ConfigError("compute_norm_stats: empty train split");
  NormStats stats;
  std::size_t in_dim = train_split.front()->inputs.cols();
  std::vector<double> isum(in_dim, 0.0), isq(in_dim, 0.0);
  std::size_t icount = 0;
  for (const Utterance* u : train_split) accumulate(u->inputs, isum, isq, icount);
  stats.input = finalize_stats(isum, isq, icount, "inputs", warnings);
  for (Stream s : kAllStreams) {
    std::size_t dim = train_split.front()->targets[sidx(s)].cols();
    std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
    std::size_t count = 0;
    for (const Utterance* u : train_split) accumulate(u->targets[sidx(s)], sum, sq, count);
    stats.streams[sidx(s)] = finalize_stats(sum, sq, count, stream_name(s), warnings);
  }
  return stats;
}

Utterance normalize(const Utterance& u, const NormStats& stats) {
  Utterance out;
  out.id = u.id;
  out.uv_flags = u.uv_flags;
  out.inputs = apply_norm(u.inputs, stats.input);
  for (Stream s : kAllStreams) {
    out.targets[sidx(s)] = apply_norm(u.targets[sidx(s)], stats.streams[sidx(s)]);
  }
  return out;
}

StreamSeqs denormalize(const StreamSeqs& streams, const NormStats& stats) {
  StreamSeqs out;
  for (Stream s : kAllStreams) {
    out[sidx(s)] = apply_denorm(streams[sidx(s)], stats.streams[sidx(s)]);
  }
  return out;
}

void save_corpus(const Corpus& c, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "utt");
  std::ofstream mf(fs::path(dir) / "manifest");
  if (!mf) throw IoError("cannot write manifest in " + dir);
  mf << "lnadapt-corpus-v1\n";
  mf << "speaker_seed = " << c.manifest.speaker_seed << "\n";
  mf << "speaker_distance = " << fmt_g17(c.manifest.speaker_distance) << "\n";
  mf << "corpus_seed = " << c.manifest.corpus_seed << "\n";
  mf << "train = " << c.manifest.splits.train << "\n";
  mf << "valid = " << c.manifest.splits.valid << "\n";
  mf << "test = " << c.manifest.splits.test << "\n";
  mf << "input_dim = " << c.manifest.input_dim << "\n";
  for (Stream s : kAllStreams) {
    mf << "dim_" << stream_name(s) << " = " << c.manifest.stream_dims[sidx(s)] << "\n";
  }
  auto write_stats = [&](const std::string& key, const DimStats& st) {
    mf << "stats." << key << ".mean =";
    for (double v : st.mean) mf << " " << fmt_g17(v);
    mf << "\n";
    mf << "stats." << key << ".std =";
    for (double v : st.stdv) mf << " " << fmt_g17(v);
    mf << "\n";
  };
  write_stats("input", c.manifest.stats.input);
  for (Stream s : kAllStreams) {
    write_stats(stream_name(s), c.manifest.stats.streams[sidx(s)]);
  }
  for (const std::string& id : c.manifest.utterance_ids) mf << "utt = " << id << "\n";
  mf.close();
  if (!mf) throw IoError("manifest write failed in " + dir);

  for (const Utterance& u : c.utterances) {
    BinWriter w((fs::path(dir) / "utt" / (u.id + ".bin")).string());
    w.raw(kUttMagic, 8);
    std::uint32_t n = static_cast<std::uint32_t>(u.inputs.rows());
    w.u32(n);
    w.u32(static_cast<std::uint32_t>(u.inputs.cols()));
    for (Stream s : kAllStreams) {
      w.u32(static_cast<std::uint32_t>(u.targets[sidx(s)].cols()));
    }
    w.f64_array(u.inputs.data(), u.inputs.size());
    for (Stream s : kAllStreams) {
      w.f64_array(u.targets[sidx(s)].data(), u.targets[sidx(s)].size());
    }
    for (int f : u.uv_flags) w.u8(static_cast<std::uint8_t>(f));
    w.close();
  }
}

Corpus load_corpus(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest");
  if (!mf) throw IoError("missing manifest in " + dir);
  Corpus c;
  std::string line;
  if (!std::getline(mf, line) || trim(line) != "lnadapt-corpus-v1") {
    throw IoError("bad manifest header in " + dir);
  }
  std::map<std::string, std::string> kv;
  while (std::getline(mf, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw IoError("bad manifest line: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "utt") {
      c.manifest.utterance_ids.push_back(val);
    } else {
      kv[key] = val;
    }
  }
  auto need = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw IoError("manifest missing key: " + k);
    return it->second;
  };
  c.manifest.speaker_seed = std::stoull(need("speaker_seed"));
  c.manifest.speaker_distance = std::stod(need("speaker_distance"));
  c.manifest.corpus_seed = std::stoull(need("corpus_seed"));
  c.manifest.splits.train = std::stoi(need("train"));
  c.manifest.splits.valid = std::stoi(need("valid"));
  c.manifest.splits.test = std::stoi(need("test"));
  c.manifest.input_dim = std::stoull(need("input_dim"));
  for (Stream s : kAllStreams) {
    c.manifest.stream_dims[sidx(s)] = std::stoull(need("dim_" + stream_name(s)));
  }
  auto read_stats = [&](const std::string& key) {
    DimStats st;
    for (const std::string& tok : split_ws(need("stats." + key + ".mean"))) {
      st.mean.push_back(std::stod(tok));
    }
    for (const std::string& tok : split_ws(need("stats." + key + ".std"))) {
      st.stdv.push_back(std::stod(tok));
    }
    return st;
  };
  c.manifest.stats.input = read_stats("input");
  for (Stream s : kAllStreams) {
    c.manifest.stats.streams[sidx(s)] = read_stats(stream_name(s));
  }
  std::size_t expected = static_cast<std::size_t>(
      c.manifest.splits.train + c.manifest.splits.valid + c.manifest.splits.test);
  if (c.manifest.utterance_ids.size() != expected) {
    throw IoError("manifest lists " + std::to_string(c.manifest.utterance_ids.size()) +
                  " utterances, splits need " + std::to_string(expected));
  }

  for (const std::string& id : c.manifest.utterance_ids) {
    fs::path p = fs::path(dir) / "utt" / (id + ".bin");
    if (!fs::exists(p)) throw IoError("missing utterance file for id " + id);
    BinReader r(p.string());
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kUttMagic, 8) != 0) {
      throw IoError("bad utterance magic for id " + id);
    }
    Utterance u;
    u.id = id;
    std::uint32_t n = r.u32();
    std::uint32_t in_dim = r.u32();
    StreamDims dims;
    for (Stream s : kAllStreams) dims[sidx(s)] = r.u32();
    u.inputs = Sequence(n, in_dim);
    r.f64_array(u.inputs.data(), u.inputs.size());
    for (Stream s : kAllStreams) {
      u.targets[sidx(s)] = Sequence(n, dims[sidx(s)]);
      r.f64_array(u.targets[sidx(s)].data(), u.targets[sidx(s)].size());
    }
    u.uv_flags.resize(n);
    for (std::uint32_t t = 0; t < n; ++t) u.uv_flags[t] = r.u8();
    c.utterances.push_back(std::move(u));
  }
  return c;
}

}  // namespace lnadapt
