#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/corpus.hpp"

using namespace lnadapt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* stem) {
  fs::path p = fs::temp_directory_path() / (std::string("lnadapt_corpus_") + stem);
  fs::remove_all(p);
  return p;
}

double teacher_param_distance(const SpeakerSpec& a, const SpeakerSpec& b) {
  auto& ma = const_cast<MultiTaskModel&>(a.teacher);
  auto& mb = const_cast<MultiTaskModel&>(b.teacher);
  auto ba = ma.param_blocks();
  auto bb = mb.param_blocks();
  double ss = 0.0;
  for (std::size_t i = 0; i < ba.size(); ++i) {
    for (std::size_t j = 0; j < ba[i].tensor->size(); ++j) {
      double d = ba[i].tensor->data()[j] - bb[i].tensor->data()[j];
      ss += d * d;
    }
  }
  return std::sqrt(ss);
}

}  // namespace

TEST_CASE("f0 interpolation matches the worked example") {
  // Voiced anchors at t=0 (5.0) and t=4 (6.0), unvoiced gap between:
  // the gap is filled linearly.
  std::vector<double> lf0 = {5.0, 0.0, 0.0, 0.0, 6.0};
  std::vector<int> uv = {1, 0, 0, 0, 1};
  std::vector<double> out = interpolate_f0(lf0, uv);
  REQUIRE(out.size() == 5);
  CHECK(out[0] == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(5.25).epsilon(1e-15));
  CHECK(out[2] == doctest::Approx(5.5).epsilon(1e-15));
  CHECK(out[3] == doctest::Approx(5.75).epsilon(1e-15));
  CHECK(out[4] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("f0 interpolation holds boundary values") {
  std::vector<double> lf0 = {0.0, 4.0, 0.0};
  std::vector<int> uv = {0, 1, 0};
  std::vector<double> out = interpolate_f0(lf0, uv);
  CHECK(out[0] == 4.0);
  CHECK(out[1] == 4.0);
  CHECK(out[2] == 4.0);
}

TEST_CASE("f0 interpolation on an all-unvoiced utterance is a data error") {
  std::vector<double> lf0 = {1.0, 2.0};
  std::vector<int> uv = {0, 0};
  CHECK_THROWS_AS(interpolate_f0(lf0, uv), DataError);
}

TEST_CASE("speakers are deterministic and distance scales teacher deviation") {
  SpeakerSpec base = make_speaker(3, 0.0);
  SpeakerSpec again = make_speaker(3, 0.0);
  CHECK(teacher_param_distance(base, again) == 0.0);

  SpeakerSpec near = make_speaker(3, 0.2);
  SpeakerSpec far = make_speaker(3, 0.8);
  double dn = teacher_param_distance(base, near);
  double df = teacher_param_distance(base, far);
  CHECK(dn > 0.0);
  // Same seed, larger distance: the same perturbation direction scaled up.
  CHECK(df > 2.0 * dn);

  // Distance 0 speakers share the base teacher regardless of seed.
  SpeakerSpec other = make_speaker(99, 0.0);
  CHECK(teacher_param_distance(base, other) == 0.0);
}

TEST_CASE("synthesized corpus has the requested shape and splits") {
  SpeakerSpec spk = make_speaker(5, 0.3);
  Corpus c = synthesize_corpus(spk, 80, 7);
  CHECK(c.utterances.size() == 80);
  CHECK(c.manifest.splits.train == 20);
  CHECK(c.manifest.splits.valid == 40);
  CHECK(c.manifest.splits.test == 20);
  CHECK(c.split(Split::train).size() == 20);
  CHECK(c.manifest.input_dim == 24);
  CHECK(c.manifest.stream_dims[sidx(Stream::mcep)] == 12);
  CHECK(c.manifest.stream_dims[sidx(Stream::lf0)] == 3);

  for (const Utterance& u : c.utterances) {
    CHECK(u.inputs.rows() >= 40);
    CHECK(u.inputs.rows() <= 80);
    CHECK(u.inputs.cols() == 24);
    CHECK(u.uv_flags.size() == u.inputs.rows());
    // First 20 input dims are binary indicators.
    for (std::size_t t = 0; t < u.inputs.rows(); ++t) {
      for (std::size_t d = 0; d < 20; ++d) {
        double v = u.inputs(t, d);
        CHECK((v == 0.0 || v == 1.0));
      }
      double uvv = u.targets[sidx(Stream::uv)](t, 0);
      CHECK((uvv == 0.0 || uvv == 1.0));
      CHECK(uvv == static_cast<double>(u.uv_flags[t]));
    }
  }
}

TEST_CASE("voiced fraction lands in a speech-like range") {
  SpeakerSpec spk = make_speaker(11, 0.1);
  Corpus c = synthesize_corpus(spk, 80, 13);
  std::size_t voiced = 0, total = 0;
  for (const Utterance& u : c.utterances) {
    for (int f : u.uv_flags) voiced += static_cast<std::size_t>(f);
    total += u.uv_flags.size();
  }
  double frac = static_cast<double>(voiced) / static_cast<double>(total);
  CHECK(frac > 0.4);
  CHECK(frac < 0.8);
}

TEST_CASE("corpus generation is deterministic in its seeds") {
  SpeakerSpec spk = make_speaker(21, 0.4);
  Corpus a = synthesize_corpus(spk, 65, 3);
  Corpus b = synthesize_corpus(spk, 65, 3);
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].inputs == b.utterances[i].inputs);
    for (Stream s : kAllStreams)
      CHECK(a.utterances[i].targets[sidx(s)] == b.utterances[i].targets[sidx(s)]);
  }
  Corpus c = synthesize_corpus(spk, 65, 4);
  CHECK(!(a.utterances[0].inputs == c.utterances[0].inputs));
}

TEST_CASE("normalization stats come from the train split only") {
  SpeakerSpec spk = make_speaker(31, 0.2);
  Corpus c = synthesize_corpus(spk, 70, 5);
  NormStats direct = compute_norm_stats(c.split(Split::train));
  CHECK(c.manifest.stats == direct);

  // Leakage sentinel: recomputing with the test split included must move
  // the stats.
  std::vector<const Utterance*> leaky = c.split(Split::train);
  for (const Utterance* u : c.split(Split::test)) leaky.push_back(u);
  NormStats with_test = compute_norm_stats(leaky);
  CHECK(!(with_test == direct));
}

TEST_CASE("normalize then denormalize round-trips targets") {
  SpeakerSpec spk = make_speaker(41, 0.2);
  Corpus c = synthesize_corpus(spk, 62, 6);
  const Utterance& u = c.utterances[0];
  Utterance n = normalize(u, c.manifest.stats);
  StreamSeqs back = denormalize(n.targets, c.manifest.stats);
  for (Stream s : kAllStreams) {
    REQUIRE(back[sidx(s)].same_shape(u.targets[sidx(s)]));
    for (std::size_t i = 0; i < back[sidx(s)].size(); ++i) {
      CHECK(back[sidx(s)].data()[i] ==
            doctest::Approx(u.targets[sidx(s)].data()[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("normalized train split is zero-mean unit-variance per dim") {
  SpeakerSpec spk = make_speaker(51, 0.3);
  Corpus c = synthesize_corpus(spk, 70, 8);
  std::size_t dim = c.manifest.input_dim;
  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  std::size_t n = 0;
  for (const Utterance* u : c.split(Split::train)) {
    Utterance nu = normalize(*u, c.manifest.stats);
    for (std::size_t t = 0; t < nu.inputs.rows(); ++t) {
      for (std::size_t d = 0; d < dim; ++d) {
        sum[d] += nu.inputs(t, d);
        sq[d] += nu.inputs(t, d) * nu.inputs(t, d);
      }
    }
    n += nu.inputs.rows();
  }
  for (std::size_t d = 0; d < dim; ++d) {
    double mean = sum[d] / n;
    double var = sq[d] / n - mean * mean;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("lf0 deltas are consistent with the static track") {
  SpeakerSpec spk = make_speaker(61, 0.1);
  Corpus c = synthesize_corpus(spk, 61, 9);
  const Utterance& u = c.utterances[0];
  const Sequence& lf0 = u.targets[sidx(Stream::lf0)];
  REQUIRE(lf0.cols() == 3);
  // Interior delta is the centered difference of the static track.
  for (std::size_t t = 1; t + 1 < lf0.rows(); ++t) {
    double d = 0.5 * (lf0(t + 1, 0) - lf0(t - 1, 0));
    CHECK(lf0(t, 1) == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("distance-scaled lf0 warp shifts the voiced f0 distribution") {
  SpeakerSpec base = make_speaker(7, 0.0);
  SpeakerSpec far = make_speaker(7, 0.9);
  CHECK(base.warp_scale[sidx(Stream::lf0)] == doctest::Approx(1.0));
  CHECK(std::abs(far.warp_scale[sidx(Stream::lf0)] - 1.0) > 1e-3);
}

TEST_CASE("save/load round-trips a corpus exactly") {
  SpeakerSpec spk = make_speaker(71, 0.25);
  Corpus c = synthesize_corpus(spk, 63, 10);
  fs::path dir = temp_dir("roundtrip");
  save_corpus(c, dir.string());
  Corpus r = load_corpus(dir.string());
  CHECK(r.manifest.speaker_seed == c.manifest.speaker_seed);
  CHECK(r.manifest.speaker_distance == c.manifest.speaker_distance);
  CHECK(r.manifest.stats == c.manifest.stats);
  REQUIRE(r.utterances.size() == c.utterances.size());
  for (std::size_t i = 0; i < r.utterances.size(); ++i) {
    CHECK(r.utterances[i].id == c.utterances[i].id);
    CHECK(r.utterances[i].inputs == c.utterances[i].inputs);
    CHECK(r.utterances[i].uv_flags == c.utterances[i].uv_flags);
    for (Stream s : kAllStreams)
      CHECK(r.utterances[i].targets[sidx(s)] == c.utterances[i].targets[sidx(s)]);
  }
  fs::remove_all(dir);
}

TEST_CASE("loading a corpus with a missing utterance file names the id") {
  SpeakerSpec spk = make_speaker(81, 0.2);
  Corpus c = synthesize_corpus(spk, 61, 11);
  fs::path dir = temp_dir("missing");
  save_corpus(c, dir.string());
  fs::remove(dir / "utt" / (c.utterances[3].id + ".bin"));
  try {
    load_corpus(dir.string());
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(c.utterances[3].id) != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("synthesize rejects too few utterances for the fixed splits") {
  SpeakerSpec spk = make_speaker(91, 0.2);
  CHECK_THROWS_AS(synthesize_corpus(spk, 60, 12), ConfigError);
  CHECK_NOTHROW(synthesize_corpus(spk, 61, 12));
}
