#include "catp.hpp"

#include <limits>

#include "doctest.h"
#include "error.hpp"
#include "model.hpp"
#include "ops.hpp"
#include "test_util.hpp"

using namespace vcore;
using vcore::testing::random_array;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ModelConfig tiny_config(MaskMode mask = MaskMode::kBlockCausal,
                        SummaryPosition pos = SummaryPosition::kTerminal) {
  ModelConfig mc;
  mc.catp.frames = 4;
  mc.catp.spatial_tokens = 2;
  mc.catp.layers = 2;
  mc.catp.heads = 2;
  mc.catp.feature_dim = 8;
  mc.catp.llm_dim = 8;
  mc.catp.patches = 3;
  mc.catp.mask_mode = mask;
  mc.catp.summary_position = pos;
  return mc;
}

bool allowed(const DenseArray& mask, std::size_t i, std::size_t j) {
  return mask.at(i, j) == 0.0;
}

}  // namespace

TEST_CASE("temporal_index on the stated positions") {
  // terminal summary, T=4, K=4: S = 17
  CHECK(catp::temporal_index(0, 4, 17, SummaryPosition::kTerminal) == 0);
  CHECK(catp::temporal_index(5, 4, 17, SummaryPosition::kTerminal) == 1);
  // terminal summary at i = T*K with T=16, K=16 gets the dedicated slot T
  CHECK(catp::temporal_index(256, 16, 257, SummaryPosition::kTerminal) == 16);
  CHECK_THROWS_AS(catp::temporal_index(17, 4, 17, SummaryPosition::kTerminal), ValidationError);
}

TEST_CASE("prepended summary reports slot 0 but sorts before every frame") {
  const std::size_t s = 9;  // T=4, K=2, prepend
  CHECK(catp::temporal_index(0, 2, s, SummaryPosition::kPrepend) == 0);
  CHECK(catp::temporal_group(0, 2, s, SummaryPosition::kPrepend) == -1);
  CHECK(catp::temporal_index(1, 2, s, SummaryPosition::kPrepend) == 0);
  CHECK(catp::temporal_index(8, 2, s, SummaryPosition::kPrepend) == 3);
}

TEST_CASE("build_mask: T=2 K=1 with terminal summary is lower-triangular") {
  ModelConfig mc = tiny_config();
  mc.catp.frames = 2;
  mc.catp.spatial_tokens = 1;
  const DenseArray mask = catp::build_mask(mc);
  const bool expect[3][3] = {{true, false, false}, {true, true, false}, {true, true, true}};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(allowed(mask, i, j) == expect[i][j]);
  }
}

TEST_CASE("build_mask: T=2 K=2 with terminal summary") {
  ModelConfig mc = tiny_config();
  mc.catp.frames = 2;
  mc.catp.spatial_tokens = 2;
  const DenseArray mask = catp::build_mask(mc);
  const bool expect[5][5] = {{1, 1, 0, 0, 0},
                             {1, 1, 0, 0, 0},
                             {1, 1, 1, 1, 0},
                             {1, 1, 1, 1, 0},
                             {1, 1, 1, 1, 1}};
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(allowed(mask, i, j) == expect[i][j]);
  }
}

TEST_CASE("bidirectional mask allows everything") {
  ModelConfig mc = tiny_config(MaskMode::kBidirectional);
  const DenseArray mask = catp::build_mask(mc);
  for (std::size_t i = 0; i < mask.size(); ++i) CHECK(mask[i] == 0.0);
}

TEST_CASE("mask agrees with the slot-ordering predicate for all small shapes") {
  for (std::size_t frames = 1; frames <= 4; ++frames) {
    for (std::size_t k = 1; k <= 4; ++k) {
      for (SummaryPosition pos :
           {SummaryPosition::kTerminal, SummaryPosition::kPrepend, SummaryPosition::kNone}) {
        ModelConfig mc = tiny_config(MaskMode::kBlockCausal, pos);
        mc.catp.frames = frames;
        mc.catp.spatial_tokens = k;
        mc.catp.heads = 1;
        mc.catp.feature_dim = 8;
        const DenseArray mask = catp::build_mask(mc);
        const std::size_t s = mc.seq_len();
        for (std::size_t i = 0; i < s; ++i) {
          for (std::size_t j = 0; j < s; ++j) {
            const bool expect = catp::temporal_group(i, k, s, pos) >=
                                catp::temporal_group(j, k, s, pos);
            CHECK(allowed(mask, i, j) == expect);
            if (i == j) CHECK(allowed(mask, i, j));  // diagonal always open
          }
        }
        // intra-frame symmetry among the first frame's tokens
        const std::size_t off = pos == SummaryPosition::kPrepend ? 1 : 0;
        for (std::size_t a = 0; a < k; ++a) {
          for (std::size_t b = 0; b < k; ++b) {
            CHECK(allowed(mask, off + a, off + b));
          }
        }
      }
    }
  }
}

TEST_CASE("mask dump format") {
  ModelConfig mc = tiny_config();
  mc.catp.frames = 2;
  mc.catp.spatial_tokens = 1;
  const std::string dump = catp::render_mask(mc);
  CHECK(dump == "T=2 K=1 summary=terminal mode=block_causal\n100\n110\n111\n");
}

TEST_CASE("assemble_sequence layouts") {
  ModelConfig mc = tiny_config();
  mc.catp.frames = 2;
  mc.catp.spatial_tokens = 1;
  ParameterStore store;
  Rng rng(1);
  catp::register_params(store, mc, rng);
  DenseArray block = DenseArray::matrix(2, 8);
  for (std::size_t j = 0; j < 8; ++j) {
    block.at(0, j) = 1.0 + static_cast<double>(j);
    block.at(1, j) = -2.0;
  }

  SUBCASE("terminal puts the learnable query last") {
    Tape tape(&store);
    Var h = catp::assemble_sequence(tape, tape.constant(block), mc);
    const DenseArray& v = tape.val(h);
    CHECK(v.rows() == 3);
    CHECK(v.at(0, 0) == 1.0);
    CHECK(v.at(1, 0) == -2.0);
    const DenseArray& q = store.value(catp::kSummaryQuery);
    for (std::size_t j = 0; j < 8; ++j) CHECK(v.at(2, j) == q[j]);
  }

  SUBCASE("prepend puts it first") {
    mc.catp.summary_position = SummaryPosition::kPrepend;
    Tape tape(&store);
    Var h = catp::assemble_sequence(tape, tape.constant(block), mc);
    const DenseArray& q = store.value(catp::kSummaryQuery);
    for (std::size_t j = 0; j < 8; ++j) CHECK(tape.val(h).at(0, j) == q[j]);
    CHECK(tape.val(h).at(1, 0) == 1.0);
  }

  SUBCASE("none keeps the frame tokens only") {
    mc.catp.summary_position = SummaryPosition::kNone;
    Tape tape(&store);
    Var h = catp::assemble_sequence(tape, tape.constant(block), mc);
    CHECK(tape.val(h).rows() == 2);
  }

  SUBCASE("avgpool fills the slot with the mean frame token") {
    ModelConfig pooled = mc;
    pooled.catp.summary_agg = SummaryAgg::kAvgPool;
    ParameterStore store2;
    Rng rng2(2);
    catp::register_params(store2, pooled, rng2);
    Tape tape(&store2);
    Var h = catp::assemble_sequence(tape, tape.constant(block), pooled);
    for (std::size_t j = 0; j < 8; ++j) {
      const double mean = (block.at(0, j) + block.at(1, j)) / 2.0;
      CHECK(tape.val(h).at(2, j) == doctest::Approx(mean).epsilon(1e-15));
    }
  }

  SUBCASE("avgpool with prepend is a configuration error") {
    ModelConfig bad = mc;
    bad.catp.summary_position = SummaryPosition::kPrepend;
    bad.catp.summary_agg = SummaryAgg::kAvgPool;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
  }
}

TEST_CASE("positions: zero tables are the identity, reserved rows are summary-only") {
  ModelConfig mc = tiny_config();
  ParameterStore store;
  Rng rng(3);
  catp::register_params(store, mc, rng);

  const std::size_t s = mc.seq_len();
  Rng data_rng(4);
  DenseArray h_in = random_array({s, mc.catp.feature_dim}, data_rng);

  SUBCASE("zero tables") {
    store.value(catp::kPosTemporal).fill(0.0);
    store.value(catp::kPosSpatial).fill(0.0);
    Tape tape(&store);
    Var x0 = catp::add_positions(tape, tape.constant(h_in), mc);
    CHECK(ops::max_abs_diff(tape.val(x0), h_in) == 0.0);
  }

  SUBCASE("frame token i' = 5 with K = 2 receives E_temp[2] + E_spat[1]") {
    Tape tape(&store);
    Var x0 = catp::add_positions(tape, tape.constant(h_in), mc);
    const DenseArray& et = store.value(catp::kPosTemporal);
    const DenseArray& es = store.value(catp::kPosSpatial);
    for (std::size_t j = 0; j < mc.catp.feature_dim; ++j) {
      const double expect = h_in.at(5, j) + et.at(2, j) + es.at(1, j);
      CHECK(tape.val(x0).at(5, j) == doctest::Approx(expect).epsilon(1e-15));
    }
  }

  SUBCASE("only the summary row reads the reserved table rows") {
    // zeroing the reserved rows must change nothing except the summary row
    Tape t1(&store);
    const DenseArray before = t1.val(catp::add_positions(t1, t1.constant(h_in), mc));
    store.value(catp::kPosTemporal)
        .at(mc.catp.frames, 0) += 11.0;
    store.value(catp::kPosSpatial).at(mc.tokens_per_frame(), 1) += 7.0;
    Tape t2(&store);
    const DenseArray after = t2.val(catp::add_positions(t2, t2.constant(h_in), mc));
    for (std::size_t i = 0; i + 1 < s; ++i) {
      for (std::size_t j = 0; j < mc.catp.feature_dim; ++j) {
        CHECK(before.at(i, j) == after.at(i, j));
      }
    }
    CHECK(after.at(s - 1, 0) - before.at(s - 1, 0) == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(after.at(s - 1, 1) - before.at(s - 1, 1) == doctest::Approx(7.0).epsilon(1e-12));
  }
}

TEST_CASE("linear mode with identity projection reproduces X0") {
  ModelConfig mc = tiny_config();
  mc.catp.temporal_mode = TemporalMode::kLinear;
  mc.catp.summary_position = SummaryPosition::kNone;
  ParameterStore store;
  Rng rng(5);
  catp::register_params(store, mc, rng);
  DenseArray& w = store.value(catp::kProjWeight);
  w.fill(0.0);
  for (std::size_t i = 0; i < mc.catp.feature_dim; ++i) w.at(i, i) = 1.0;
  store.value(catp::kProjBias).fill(0.0);

  Rng data_rng(6);
  DenseArray x0 = random_array({mc.seq_len(), mc.catp.feature_dim}, data_rng);
  Tape tape(&store);
  Var z = catp::forward(tape, tape.constant(x0), mc, catp::build_mask(mc));
  CHECK(ops::max_abs_diff(tape.val(z), x0) == 0.0);
}

TEST_CASE("single-token sequence: causal and bidirectional are bit-identical") {
  ModelConfig base = tiny_config();
  base.catp.frames = 1;
  base.catp.spatial_tokens = 1;
  base.catp.patches = 2;
  base.catp.summary_position = SummaryPosition::kNone;

  ModelConfig bi = base;
  bi.catp.mask_mode = MaskMode::kBidirectional;

  Model causal(base, 99);
  Model open(bi, 99);
  Rng rng(7);
  DenseArray frames = random_array({1, base.catp.patches, base.catp.feature_dim}, rng);
  CHECK(ops::max_abs_diff(causal.project(frames), open.project(frames)) == 0.0);
}

TEST_CASE("extract_global slots") {
  ModelConfig mc = tiny_config();
  ParameterStore store;
  Rng rng(8);
  catp::register_params(store, mc, rng);
  Rng data_rng(9);
  DenseArray z = random_array({mc.seq_len(), mc.catp.llm_dim}, data_rng);

  Tape tape(&store);
  Var zv = tape.constant(z);

  Var last = catp::extract_global(tape, zv, mc);
  for (std::size_t j = 0; j < mc.catp.llm_dim; ++j) {
    CHECK(tape.val(last).at(0, j) == z.at(mc.seq_len() - 1, j));
  }

  ModelConfig pre = mc;
  pre.catp.summary_position = SummaryPosition::kPrepend;
  Var first = catp::extract_global(tape, zv, pre);
  for (std::size_t j = 0; j < mc.catp.llm_dim; ++j) {
    CHECK(tape.val(first).at(0, j) == z.at(0, j));
  }

  ModelConfig none = mc;
  none.catp.summary_position = SummaryPosition::kNone;
  DenseArray z2 = random_array({none.seq_len(), none.catp.llm_dim}, data_rng);
  Var zv2 = tape.constant(z2);
  Var mean = catp::extract_global(tape, zv2, none);
  for (std::size_t j = 0; j < none.catp.llm_dim; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < none.seq_len(); ++i) acc += z2.at(i, j);
    CHECK(tape.val(mean).at(0, j) ==
          doctest::Approx(acc / static_cast<double>(none.seq_len())).epsilon(1e-12));
  }
}

TEST_CASE("zero temporal leakage is bit-exact under the block-causal mask") {
  ModelConfig mc = tiny_config();
  Model model(mc, 42);
  Rng rng(10);
  DenseArray frames = random_array({mc.catp.frames, mc.catp.patches, mc.catp.feature_dim}, rng);
  const DenseArray baseline = model.project(frames);

  const std::size_t per = mc.catp.patches * mc.catp.feature_dim;
  for (std::size_t t = 1; t < mc.catp.frames; ++t) {
    DenseArray shifted = frames;
    for (std::size_t i = 0; i < per; ++i) shifted[t * per + i] += 3.0;
    const DenseArray moved = model.project(shifted);
    // every row of frames < t unchanged, bitwise
    for (std::size_t r = 0; r < t * mc.tokens_per_frame(); ++r) {
      for (std::size_t j = 0; j < mc.catp.llm_dim; ++j) {
        CHECK(moved.at(r, j) == baseline.at(r, j));
      }
    }
  }
}

TEST_CASE("bidirectional attention leaks future frames into the past") {
  ModelConfig mc = tiny_config(MaskMode::kBidirectional);
  const std::size_t per = mc.catp.patches * mc.catp.feature_dim;
  std::size_t leaked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Model model(mc, seed);
    Rng rng(mix_seed(seed, 77));
    DenseArray frames =
        random_array({mc.catp.frames, mc.catp.patches, mc.catp.feature_dim}, rng);
    const DenseArray baseline = model.project(frames);
    DenseArray shifted = frames;
    for (std::size_t i = 0; i < per; ++i) {
      shifted[(mc.catp.frames - 1) * per + i] += 1.0;
    }
    const DenseArray moved = model.project(shifted);
    double dev = 0.0;
    for (std::size_t r = 0; r < mc.tokens_per_frame(); ++r) {
      for (std::size_t j = 0; j < mc.catp.llm_dim; ++j) {
        dev = std::max(dev, std::fabs(moved.at(r, j) - baseline.at(r, j)));
      }
    }
    if (dev > 1e-6) ++leaked;
  }
  CHECK(leaked == 20);
}

TEST_CASE("prepended summary is starved under the causal mask") {
  ModelConfig mc = tiny_config(MaskMode::kBlockCausal, SummaryPosition::kPrepend);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Model model(mc, seed);
    Rng rng(mix_seed(seed, 123));
    DenseArray frames =
        random_array({mc.catp.frames, mc.catp.patches, mc.catp.feature_dim}, rng);
    DenseArray other =
        random_array({mc.catp.frames, mc.catp.patches, mc.catp.feature_dim}, rng);
    const DenseArray a = model.project(frames);
    const DenseArray b = model.project(other);
    for (std::size_t j = 0; j < mc.catp.llm_dim; ++j) {
      CHECK(a.at(0, j) == b.at(0, j));
    }
  }
}

TEST_CASE("terminal summary reads every frame") {
  ModelConfig mc = tiny_config();
  const std::size_t per = mc.catp.patches * mc.catp.feature_dim;
  const std::size_t last = mc.seq_len() - 1;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Model model(mc, seed);
    Rng rng(mix_seed(seed, 321));
    DenseArray frames =
        random_array({mc.catp.frames, mc.catp.patches, mc.catp.feature_dim}, rng);
    const DenseArray baseline = model.project(frames);
    for (std::size_t t = 0; t < mc.catp.frames; ++t) {
      DenseArray shifted = frames;
      for (std::size_t i = 0; i < per; ++i) shifted[t * per + i] += 1.0;
      const DenseArray moved = model.project(shifted);
      double dev = 0.0;
      for (std::size_t j = 0; j < mc.catp.llm_dim; ++j) {
        dev = std::max(dev, std::fabs(moved.at(last, j) - baseline.at(last, j)));
      }
      CHECK(dev > 0.0);
    }
  }
}
