#include "lsa.hpp"

#include "doctest.h"
#include "error.hpp"
#include "model_init.hpp"
#include "ops.hpp"
#include "test_util.hpp"

using namespace vcore;
using vcore::testing::random_array;

namespace {

CatpConfig small_config() {
  CatpConfig cfg;
  cfg.frames = 3;
  cfg.spatial_tokens = 4;
  cfg.feature_dim = 8;
  cfg.llm_dim = 8;
  cfg.patches = 6;
  cfg.heads = 2;
  cfg.layers = 1;
  return cfg;
}

ParameterStore lsa_store(const CatpConfig& cfg, std::uint64_t seed) {
  ParameterStore store;
  Rng rng(seed);
  lsa::register_params(store, cfg, rng);
  return store;
}

}  // namespace

TEST_CASE("identical patch rows collapse to their shared value projection") {
  const CatpConfig cfg = small_config();
  ParameterStore store = lsa_store(cfg, 1);
  Rng rng(2);
  DenseArray row = random_array({1, cfg.feature_dim}, rng);
  DenseArray patches = DenseArray::matrix(cfg.patches, cfg.feature_dim);
  for (std::size_t p = 0; p < cfg.patches; ++p) {
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) patches.at(p, j) = row.at(0, j);
  }

  Tape tape(&store);
  Var h = lsa::aggregate_frame(tape, tape.constant(patches), cfg);
  const DenseArray expected = ops::matmul(row, store.value(lsa::kWValue));
  for (std::size_t k = 0; k < cfg.spatial_tokens; ++k) {
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
      CHECK(tape.val(h).at(k, j) == doctest::Approx(expected.at(0, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero query projection gives uniform attention, i.e. the mean-pool oracle") {
  const CatpConfig cfg = small_config();
  ParameterStore store = lsa_store(cfg, 3);
  store.value(lsa::kWQuery).fill(0.0);
  Rng rng(4);
  DenseArray patches = random_array({cfg.patches, cfg.feature_dim}, rng);

  Tape tape(&store);
  Var h = lsa::aggregate_frame(tape, tape.constant(patches), cfg);
  const DenseArray pooled = ops::matmul(ops::mean_rows(patches), store.value(lsa::kWValue));
  for (std::size_t k = 0; k < cfg.spatial_tokens; ++k) {
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
      CHECK(std::fabs(tape.val(h).at(k, j) - pooled.at(0, j)) <= 1e-12);
    }
  }
}

TEST_CASE("patch permutation leaves the aggregate bit-identical") {
  const CatpConfig cfg = small_config();
  ParameterStore store = lsa_store(cfg, 5);
  Rng rng(6);
  DenseArray patches = random_array({cfg.patches, cfg.feature_dim}, rng);
  DenseArray permuted = DenseArray::matrix(cfg.patches, cfg.feature_dim);
  const std::size_t perm[] = {3, 0, 5, 1, 4, 2};
  for (std::size_t p = 0; p < cfg.patches; ++p) {
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
      permuted.at(p, j) = patches.at(perm[p], j);
    }
  }

  Tape t1(&store), t2(&store);
  Var a = lsa::aggregate_frame(t1, t1.constant(patches), cfg);
  Var b = lsa::aggregate_frame(t2, t2.constant(permuted), cfg);
  CHECK(ops::max_abs_diff(t1.val(a), t2.val(b)) == 0.0);
}

TEST_CASE("mean pool examples") {
  ParameterStore store;
  Tape tape(&store);
  Var m = lsa::mean_pool_frame(tape, tape.constant(DenseArray::matrix(2, 2, {0, 2, 2, 0})));
  CHECK(tape.val(m).at(0, 0) == 1.0);
  CHECK(tape.val(m).at(0, 1) == 1.0);

  Var single = lsa::mean_pool_frame(tape, tape.constant(DenseArray::matrix(1, 2, {7, -3})));
  CHECK(tape.val(single).at(0, 0) == 7.0);
  CHECK(tape.val(single).at(0, 1) == -3.0);

  Var cols = lsa::mean_pool_frame(tape, tape.constant(DenseArray::matrix(3, 2, {1, 1, 2, 2, 3, 3})));
  CHECK(tape.val(cols).at(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("aggregate_video keeps frame order and locality") {
  ModelConfig mc;
  mc.catp = small_config();
  ParameterStore store = lsa_store(mc.catp, 7);
  Rng rng(8);
  DenseArray clip = random_array({mc.catp.frames, mc.catp.patches, mc.catp.feature_dim}, rng);

  Tape tape(&store);
  Var video = lsa::aggregate_video(tape, clip, mc);
  CHECK(tape.val(video).rows() == mc.catp.frames * mc.catp.spatial_tokens);

  // single-frame application agrees with the per-frame op
  Tape tf(&store);
  Var lone = lsa::aggregate_frame(tf, tf.constant(clip.plane(1)), mc.catp);
  const std::size_t k = mc.catp.spatial_tokens;
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t j = 0; j < mc.catp.feature_dim; ++j) {
      CHECK(tape.val(video).at(k + r, j) == tf.val(lone).at(r, j));
    }
  }

  // perturbing frame 2 leaves slices 0 and 1 bit-identical
  DenseArray shifted = clip;
  const std::size_t per = mc.catp.patches * mc.catp.feature_dim;
  for (std::size_t i = 0; i < per; ++i) shifted[2 * per + i] += 1.0;
  Tape tp(&store);
  Var moved = lsa::aggregate_video(tp, shifted, mc);
  for (std::size_t r = 0; r < 2 * k; ++r) {
    for (std::size_t j = 0; j < mc.catp.feature_dim; ++j) {
      CHECK(tp.val(moved).at(r, j) == tape.val(video).at(r, j));
    }
  }

  // mean-pool mode yields one token per frame
  ModelConfig pooled = mc;
  pooled.spatial_mode = SpatialMode::kMeanPool;
  Tape tm(&store);
  Var mp = lsa::aggregate_video(tm, clip, pooled);
  CHECK(tm.val(mp).rows() == mc.catp.frames);
}

TEST_CASE("random init separates the query outputs") {
  const CatpConfig cfg = small_config();
  ParameterStore store = lsa_store(cfg, 11);
  Rng rng(12);
  std::size_t distinct = 0;
  for (std::size_t trial = 0; trial < 20; ++trial) {
    DenseArray patches = random_array({cfg.patches, cfg.feature_dim}, rng);
    Tape tape(&store);
    const DenseArray& h = tape.val(lsa::aggregate_frame(tape, tape.constant(patches), cfg));
    double spread = 0.0;
    for (std::size_t a = 0; a < cfg.spatial_tokens; ++a) {
      for (std::size_t b = a + 1; b < cfg.spatial_tokens; ++b) {
        for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
          spread = std::max(spread, std::fabs(h.at(a, j) - h.at(b, j)));
        }
      }
    }
    if (spread > 1e-9) ++distinct;
  }
  CHECK(distinct == 20);
}

TEST_CASE("aggregate_frame rejects mismatched widths") {
  const CatpConfig cfg = small_config();
  ParameterStore store = lsa_store(cfg, 13);
  Tape tape(&store);
  Var bad = tape.constant(DenseArray::matrix(4, cfg.feature_dim + 1));
  CHECK_THROWS_AS(lsa::aggregate_frame(tape, bad, cfg), ValidationError);
}
