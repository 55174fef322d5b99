#include "model.hpp"

#include <algorithm>

#include "binio.hpp"

namespace lnadapt {

namespace {

constexpr char kMagic[8] = {'L', 'N', 'A', 'D', 'P', 'T', 'M', '1'};

void validate_config(const ModelConfig& cfg) {
  if (cfg.input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (cfg.dense_width < 2) throw ConfigError("dense_width must be >= 2");
  if (cfg.blstm_widths.empty()) throw ConfigError("at least one BLSTM layer required");
  for (std::size_t w : cfg.blstm_widths) {
    if (w < 2) throw ConfigError("BLSTM width must be >= 2, got " + std::to_string(w));
    if (w % 2 != 0) throw ConfigError("BLSTM width must be even, got " + std::to_string(w));
  }
  for (Stream s : kAllStreams) {
    if (cfg.head_dims[sidx(s)] < 1) {
      throw ConfigError("head dim for " + stream_name(s) + " must be >= 1");
    }
  }
}

void write_dim_stats(BinWriter& w, const DimStats& s) {
  w.u64(s.mean.size());
  w.f64_array(s.mean.data(), s.mean.size());
  w.f64_array(s.stdv.data(), s.stdv.size());
}

DimStats read_dim_stats(BinReader& r) {
  DimStats s;
  std::size_t n = r.u64();
  s.mean.resize(n);
  s.stdv.resize(n);
  r.f64_array(s.mean.data(), n);
  r.f64_array(s.stdv.data(), n);
  return s;
}

}  // namespace

bool MultiTaskModel::has_adapters() const {
  return std::any_of(slots.begin(), slots.end(),
                     [](const auto& s) { return s.has_value(); });
}

std::vector<ParamBlock> MultiTaskModel::param_blocks() {
  std::vector<ParamBlock> blocks = dense.param_blocks("trunk.dense");
  for (std::size_t i = 0; i < blstm.size(); ++i) {
    auto bb = blstm[i].param_blocks("trunk.blstm" + std::to_string(i));
    blocks.insert(blocks.end(), bb.begin(), bb.end());
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) continue;
    auto ab = adapter_param_blocks(*slots[i], "slot" + std::to_string(i));
    blocks.insert(blocks.end(), ab.begin(), ab.end());
  }
  for (Stream s : kAllStreams) {
    auto hb = heads[sidx(s)].param_blocks("head." + stream_name(s));
    blocks.insert(blocks.end(), hb.begin(), hb.end());
  }
  return blocks;
}

std::size_t MultiTaskModel::total_param_count() const {
  auto& self = const_cast<MultiTaskModel&>(*this);
  std::size_t n = 0;
  for (const ParamBlock& b : self.param_blocks()) n += b.tensor->size();
  return n;
}

void InsertionPolicy::validate(const ModelConfig& cfg) const {
  std::size_t n_slots = cfg.blstm_widths.size() + 1;
  std::set<std::size_t> seen;
  if (slots.empty()) throw ConfigError("insertion policy must name at least one slot");
  for (std::size_t s : slots) {
    if (s >= n_slots) {
      throw ConfigError("insertion slot " + std::to_string(s) + " out of range (trunk has " +
                        std::to_string(n_slots) + " slots)");
    }
    if (!seen.insert(s).second) {
      throw ConfigError("duplicate insertion slot " + std::to_string(s));
    }
  }
}

MultiTaskModel build_model(const ModelConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  MultiTaskModel m;
  m.cfg = cfg;
  Rng rng(mix_seed(seed, 0x6d6f64));
  m.dense = make_dense(cfg.dense_width, cfg.input_dim, Activation::tanh_act, rng);
  std::size_t in = cfg.dense_width;
  for (std::size_t w : cfg.blstm_widths) {
    m.blstm.push_back(make_blstm(w, in, rng));
    in = w;
  }
  m.slots.assign(cfg.blstm_widths.size() + 1, std::nullopt);
  for (Stream s : kAllStreams) {
    m.heads[sidx(s)] = make_dense(cfg.head_dims[sidx(s)], in, Activation::linear, rng);
  }
  return m;
}

Sequence prefix_activation(const MultiTaskModel& m, const Sequence& x,
                           std::size_t boundary) {
  if (boundary >= m.n_slots()) throw ConfigError("prefix boundary out of range");
  Sequence act = dense_forward(m.dense, x);
  for (std::size_t s = 0; s < boundary; ++s) {
    if (m.slots[s]) act = adapter_forward(*m.slots[s], act);
    act = blstm_forward(m.blstm[s], act, nullptr);
  }
  return act;
}

StreamSeqs forward_from(const MultiTaskModel& m, const Sequence& act,
                        std::size_t boundary, ForwardTrace* trace) {
  const std::size_t L = m.blstm.size();
  ForwardTrace local;
  ForwardTrace& t = trace ? *trace : local;
  if (!t.has_dense) t.boundary = boundary;
  t.slot_in.resize(L + 1);
  t.slot_out.resize(L + 1);
  t.caches.resize(L);

  Sequence cur = act;
  for (std::size_t s = boundary; s <= L; ++s) {
    t.slot_in[s] = cur;
    if (m.slots[s]) cur = adapter_forward(*m.slots[s], cur);
    t.slot_out[s] = cur;
    if (s < L) cur = blstm_forward(m.blstm[s], cur, &t.caches[s]);
  }
  for (Stream s : kAllStreams) {
    t.head_out[sidx(s)] = dense_forward(m.heads[sidx(s)], cur);
  }
  return t.head_out;
}

StreamSeqs model_forward(const MultiTaskModel& m, const Sequence& x, ForwardTrace* trace) {
  if (x.rows() > 0 && x.cols() != m.cfg.input_dim) {
    throw ShapeError("model_forward: input width " + std::to_string(x.cols()) +
                     " != configured " + std::to_string(m.cfg.input_dim));
  }
  ForwardTrace local;
  ForwardTrace& t = trace ? *trace : local;
  t.has_dense = true;
  t.boundary = 0;
  t.dense_in = x;
  t.dense_out = dense_forward(m.dense, x);
  return forward_from(m, t.dense_out, 0, &t);
}

GradMap model_backward(const MultiTaskModel& m, const ForwardTrace& t,
                       const StreamSeqs& head_grads) {
  const std::size_t L = m.blstm.size();
  GradMap g;
  const Sequence& final_act = t.slot_out[L];
  Sequence gact(final_act.rows(), final_act.cols());
  for (Stream s : kAllStreams) {
    Sequence gi = dense_backward(m.heads[sidx(s)], final_act, t.head_out[sidx(s)],
                                 head_grads[sidx(s)], g, "head." + stream_name(s));
    add_inplace(gact, gi);
  }
  for (std::size_t s = L + 1; s-- > t.boundary;) {
    if (m.slots[s]) {
      gact = adapter_backward(*m.slots[s], t.slot_in[s], gact, g,
                              "slot" + std::to_string(s));
    }
    if (s > t.boundary) {
      gact = blstm_backward(m.blstm[s - 1], t.slot_out[s - 1], t.caches[s - 1], gact, g,
                            "trunk.blstm" + std::to_string(s - 1));
    }
  }
  if (t.has_dense) {
    dense_backward(m.dense, t.dense_in, t.dense_out, gact, g, "trunk.dense");
  }
  return g;
}

void insert_adapters(MultiTaskModel& m, const InsertionPolicy& policy, AdapterKind kind,
                     std::uint64_t seed) {
  policy.validate(m.cfg);
  for (std::size_t s : policy.slots) {
    if (m.slots[s]) {
      throw StateError("slot " + std::to_string(s) + " already holds an adapter");
    }
  }
  for (std::size_t s : policy.slots) {
    Adapter a = init_adapter(kind, m.slot_width(s), mix_seed(seed, s));
    if (adapter_dim(a) != m.slot_width(s)) {
      throw LnError(ErrorCode::internal, "adapter width does not match slot width");
    }
    m.slots[s] = std::move(a);
  }
}

std::set<std::string> trainable_mask(MultiTaskModel& m, TrainMode mode) {
  std::set<std::string> mask;
  if (mode == TrainMode::ol_plus_adapters && !m.has_adapters()) {
    throw ConfigError("ol_plus_adapters mode requires at least one inserted adapter");
  }
  for (const ParamBlock& b : m.param_blocks()) {
    bool on = false;
    switch (mode) {
      case TrainMode::sd:
        on = true;
        break;
      case TrainMode::ol:
        on = b.name.rfind("head.", 0) == 0;
        break;
      case TrainMode::ol_plus_adapters:
        on = b.name.rfind("head.", 0) == 0 || b.name.rfind("slot", 0) == 0;
        break;
    }
    if (on) mask.insert(b.name);
  }
  return mask;
}

void save_model(MultiTaskModel& m, const std::string& path) {
  BinWriter w(path);
  w.raw(kMagic, 8);
  w.u64(m.cfg.input_dim);
  w.u64(m.cfg.dense_width);
  w.u64(m.cfg.blstm_widths.size());
  for (std::size_t v : m.cfg.blstm_widths) w.u64(v);
  for (Stream s : kAllStreams) w.u64(m.cfg.head_dims[sidx(s)]);
  w.u8(m.stats ? 1 : 0);
  if (m.stats) {
    write_dim_stats(w, m.stats->input);
    for (Stream s : kAllStreams) write_dim_stats(w, m.stats->streams[sidx(s)]);
  }
  w.u64(m.slots.size());
  for (const auto& slot : m.slots) {
    if (!slot) {
      w.u8(0);
    } else if (std::holds_alternative<FullLnAdapter>(*slot)) {
      w.u8(1);
    } else {
      w.u8(2);
      w.u64(std::get<LrpdAdapter>(*slot).rank());
    }
  }
  auto blocks = m.param_blocks();
  w.u64(blocks.size());
  for (const ParamBlock& b : blocks) {
    w.str(b.name);
    w.u64(b.tensor->rows());
    w.u64(b.tensor->cols());
    w.f64_array(b.tensor->data(), b.tensor->size());
  }
  w.close();
}

MultiTaskModel load_model(const std::string& path) {
  BinReader r(path);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("not a model file (bad magic): " + path);
  }
  ModelConfig cfg;
  cfg.input_dim = r.u64();
  cfg.dense_width = r.u64();
  cfg.blstm_widths.resize(r.u64());
  for (std::size_t& v : cfg.blstm_widths) v = r.u64();
  for (Stream s : kAllStreams) cfg.head_dims[sidx(s)] = r.u64();

  MultiTaskModel m = build_model(cfg, 0);
  if (r.u8()) {
    NormStats st;
    st.input = read_dim_stats(r);
    for (Stream s : kAllStreams) st.streams[sidx(s)] = read_dim_stats(r);
    m.stats = st;
  }
  std::size_t n_slots = r.u64();
  if (n_slots != m.n_slots()) {
    throw IoError("parse error in " + path + ": slot count mismatch");
  }
  for (std::size_t s = 0; s < n_slots; ++s) {
    std::uint8_t kind = r.u8();
    if (kind == 0) continue;
    if (kind == 1) {
      m.slots[s] = init_adapter(AdapterKind::full_kind(), m.slot_width(s), 0);
    } else if (kind == 2) {
      std::size_t rank = r.u64();
      m.slots[s] = init_adapter(AdapterKind::lrpd_kind(rank), m.slot_width(s), 0);
    } else {
      throw IoError("parse error in " + path + " at byte " +
                    std::to_string(r.offset() - 1) + ": bad adapter kind");
    }
  }

  auto blocks = m.param_blocks();
  std::map<std::string, Matrix*> by_name;
  for (const ParamBlock& b : blocks) by_name[b.name] = b.tensor;
  std::size_t n_blocks = r.u64();
  if (n_blocks != blocks.size()) {
    throw IoError("parse error in " + path + ": block count mismatch");
  }
  for (std::size_t i = 0; i < n_blocks; ++i) {
    std::string name = r.str();
    std::size_t rows = r.u64();
    std::size_t cols = r.u64();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw IoError("unknown block in " + path + ": " + name);
    if (it->second->rows() != rows || it->second->cols() != cols) {
      throw IoError("block shape mismatch in " + path + ": " + name);
    }
    r.f64_array(it->second->data(), rows * cols);
  }
  return m;
}

}  // namespace lnadapt
