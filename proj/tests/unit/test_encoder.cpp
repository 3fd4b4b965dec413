#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ceilkit/encoder.hpp"
#include "ceilkit/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ceilkit;
using testutil::random_matrix;

namespace {

Vocabulary small_vocab() {
  const Corpus c = make_corpus({"hello world", "is a test"}, {});
  return Vocabulary::build(c, 1, {"is", "."});
}

EncoderParams random_params(std::uint64_t seed, std::size_t v, int d, int r, EncoderMode mode) {
  std::mt19937_64 rng(seed);
  EncoderParams p;
  p.embed = random_matrix(rng, static_cast<Eigen::Index>(v), d);
  p.proj = random_matrix(rng, r, d);
  p.mask_bias = random_matrix(rng, r, 1).col(0);
  p.mode = mode;
  return p;
}

}  // namespace

TEST_CASE("prompt template parsing and application") {
  const Vocabulary v = small_vocab();
  const TokenId hello = v.id("hello");

  const auto t1 = PromptTemplate::parse("[X] is [MASK] .");
  const auto out1 = apply_template(t1, v, std::vector<TokenId>{hello});
  CHECK(out1.ids == std::vector<TokenId>{hello, v.id("is"), Vocabulary::kMask, v.id(".")});
  CHECK(out1.mask_position == 2);

  const auto t2 = PromptTemplate::parse("[MASK] [X] .");
  const TokenId a = v.id("a"), b = v.id("test");
  const auto out2 = apply_template(t2, v, std::vector<TokenId>{a, b});
  CHECK(out2.ids == std::vector<TokenId>{Vocabulary::kMask, a, b, v.id(".")});
  CHECK(out2.mask_position == 0);

  const auto t3 = PromptTemplate::parse("[X] [MASK] .");
  const auto out3 = apply_template(t3, v, std::vector<TokenId>{});
  CHECK(out3.ids == std::vector<TokenId>{Vocabulary::kMask, v.id(".")});
  CHECK(out3.mask_position == 0);
}

TEST_CASE("prompt template round-trips and rejects bad patterns") {
  for (const char* text : {"[X] is [MASK] .", "[MASK] [X] .", "This topic is about [MASK] : [X]"}) {
    const auto t = PromptTemplate::parse(text);
    CHECK(PromptTemplate::parse(t.str()) == t);
  }
  CHECK(PromptTemplate::parse("[X] Is [MASK]").literals() == std::vector<std::string>{"is"});
  CHECK_THROWS_AS(PromptTemplate::parse("[X] [X] [MASK]"), ConfigError);
  CHECK_THROWS_AS(PromptTemplate::parse("[X] only"), ConfigError);
  CHECK_THROWS_AS(PromptTemplate::parse("[MASK] [MASK] [X]"), ConfigError);
}

TEST_CASE("encode special cases") {
  EncoderDims dims{10, 4, 3};
  EncoderParams p = init_params(1, dims, EncoderMode::MeanPool);
  p.embed.setZero();
  const std::vector<TokenId> prompted = {2, 3, 4};
  CHECK(encode(p, prompted).isZero(0.0));

  p.mode = EncoderMode::MaskSlot;
  p.mask_bias << 0.3, -0.2, 1.5;
  const Vector h = encode(p, prompted);
  for (int i = 0; i < 3; ++i) CHECK(h(i) == std::tanh(p.mask_bias(i)));

  EncoderParams q = init_params(2, dims, EncoderMode::MeanPool);
  const Vector single = encode(q, std::vector<TokenId>{5});
  const Vector expect = q.proj * q.embed.row(5).transpose();
  CHECK((single - expect).norm() < 1e-15);

  CHECK_THROWS_AS(encode(q, std::vector<TokenId>{}), ContractError);
  // Out-of-range ids fall back to UNK.
  CHECK(encode(q, std::vector<TokenId>{99}) == encode(q, std::vector<TokenId>{Vocabulary::kUnk}));
}

TEST_CASE("encode is exactly permutation invariant and mask-slot outputs stay in (-1, 1)") {
  std::mt19937_64 rng(4);
  const EncoderParams p = random_params(8, 20, 6, 5, EncoderMode::MaskSlot);
  EncoderParams mp = p;
  mp.mode = EncoderMode::MeanPool;
  std::uniform_int_distribution<TokenId> tok(0, 19);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TokenId> ids(1 + static_cast<std::size_t>(trial % 9));
    for (auto& t : ids) t = tok(rng);
    auto perm = ids;
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK(encode(mp, ids) == encode(mp, perm));
    const Vector h = encode(p, ids);
    CHECK(encode(p, perm) == h);
    CHECK(h.allFinite());
    CHECK(h.cwiseAbs().maxCoeff() < 1.0);
  }
}

TEST_CASE("encode_batch preserves order and builds augmented pairs") {
  SynthParams sp;
  sp.k = 2;
  sp.n_per_cluster = 4;
  Corpus c = synth_corpus(sp);
  const Vocabulary v = build_vocabulary(c, 1);
  assign_token_ids(c, v);
  const BoundTemplate tmpl(PromptTemplate::parse("[X] [MASK]"), v);
  const EncoderParams p = init_params(3, EncoderDims{v.size(), 5, 4}, EncoderMode::MeanPool);

  const Matrix one = encode_batch(p, c, std::vector<int>{2}, tmpl);
  REQUIRE(one.rows() == 1);
  CHECK(one.row(0).transpose() == encode(p, tmpl.apply(c.documents[2].tokens).ids));

  const Matrix fwd = encode_batch(p, c, std::vector<int>{0, 1, 2, 3}, tmpl);
  const Matrix rev = encode_batch(p, c, std::vector<int>{3, 2, 1, 0}, tmpl);
  for (int i = 0; i < 4; ++i) CHECK(fwd.row(i) == rev.row(3 - i));

  AugmentParams aug;
  aug.seed = 5;
  const auto inputs = make_inputs(c, std::vector<int>{1, 3, 5}, tmpl, &aug);
  REQUIRE(inputs.size() == 6);
  CHECK(inputs[2].doc_id == 3);
  CHECK(inputs[3].doc_id == 3);
  CHECK(encode_batch(p, c, std::vector<int>{1, 3, 5}, tmpl, &aug).rows() == 6);
  CHECK_THROWS_AS(make_inputs(c, std::vector<int>{100}, tmpl), ContractError);
}

TEST_CASE("vocab_logits and softmax") {
  EncoderParams p = random_params(5, 12, 4, 3, EncoderMode::MaskSlot);
  const Vector zero = Vector::Zero(3);
  const Vector probs = softmax(vocab_logits(p, zero));
  for (Eigen::Index i = 0; i < probs.size(); ++i) CHECK(probs(i) == doctest::Approx(1.0 / 12).epsilon(1e-15));

  const Vector h = Vector::Constant(3, 0.4);
  const Vector base = vocab_logits(p, h);
  EncoderParams scaled = p;
  scaled.embed.row(7) *= 2.0;
  const Vector after = vocab_logits(scaled, h);
  CHECK(after(7) == doctest::Approx(2.0 * base(7)).epsilon(1e-14));
  for (int t = 0; t < 12; ++t) {
    if (t != 7) CHECK(after(t) == base(t));
  }

  const Vector shifted = (base.array() + 3.0).matrix();
  CHECK((softmax(shifted) - softmax(base)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(softmax(base).sum() - 1.0) < 1e-12);

  p.mode = EncoderMode::MeanPool;
  CHECK_THROWS_AS(vocab_logits(p, h), ContractError);
}

TEST_CASE("init_params determinism, range and bias") {
  const EncoderDims dims{30, 8, 6};
  const EncoderParams a = init_params(17, dims, EncoderMode::MeanPool);
  const EncoderParams b = init_params(17, dims, EncoderMode::MeanPool);
  const EncoderParams c = init_params(18, dims, EncoderMode::MeanPool);
  CHECK(a.embed == b.embed);
  CHECK(a.proj == b.proj);
  CHECK(a.mask_bias.isZero(0.0));
  CHECK(a.mask_bias.size() == 6);
  CHECK(a.embed != c.embed);
  CHECK(a.embed.cwiseAbs().maxCoeff() <= 0.5 / 8);
  CHECK(a.proj.cwiseAbs().maxCoeff() <= 0.5 / 8);
  CHECK_THROWS_AS(init_params(1, EncoderDims{30, 0, 6}, EncoderMode::MeanPool), ConfigError);
  CHECK_THROWS_AS(init_params(1, EncoderDims{30, 4, 0}, EncoderMode::MeanPool), ConfigError);
}

TEST_CASE("encoder gradients match central differences") {
  for (EncoderMode mode : {EncoderMode::MeanPool, EncoderMode::MaskSlot}) {
    CAPTURE(to_string(mode));
    const EncoderParams p = random_params(21, 9, 4, 3, mode);
    std::mt19937_64 rng(2);
    const std::vector<EncoderInput> inputs = {{{2, 3, 3, 5}, 0}, {{0, 8}, 1}, {{7}, 2}};
    const Matrix w = random_matrix(rng, 3, 3);

    auto objective = [&](const EncoderParams& q) {
      return (forward_batch(q, inputs).reps.array() * w.array()).sum();
    };
    EncoderGrad grad = EncoderGrad::zeros_like(p);
    backward_batch(p, forward_batch(p, inputs), w, grad);

    auto check_block = [&](auto member, const Matrix& analytic) {
      const Eigen::Index rows = (p.*member).rows(), cols = (p.*member).cols();
      auto f = [&](const std::vector<double>& x) {
        EncoderParams q = p;
        q.*member = testutil::unflatten(x, rows, cols);
        return objective(q);
      };
      const auto numeric = oracle::numeric_gradient(f, testutil::flatten(Matrix(p.*member)));
      CHECK(oracle::max_relative_error(testutil::flatten(analytic), numeric) < 1e-4);
    };
    check_block(&EncoderParams::embed, grad.embed);
    check_block(&EncoderParams::proj, grad.proj);

    auto fb = [&](const std::vector<double>& x) {
      EncoderParams q = p;
      q.mask_bias = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
      return objective(q);
    };
    const auto numeric_b = oracle::numeric_gradient(fb, testutil::flatten(p.mask_bias));
    CHECK(oracle::max_relative_error(testutil::flatten(grad.mask_bias), numeric_b) < 1e-4);
  }
}

TEST_CASE("precomputed base replaces the token context") {
  std::istringstream in("2 3\n1 0 0\n0 2 0.5\n");
  auto base = std::make_shared<const PrecomputedBase>(PrecomputedBase::read(in));
  EncoderParams p = init_params(4, EncoderDims{5, 3, 2}, EncoderMode::MeanPool);
  p.base = base;
  const Vector h = encode(p, EncoderInput{{2, 3}, 1});
  CHECK((h - p.proj * base->vectors.row(1).transpose()).norm() < 1e-15);
  CHECK_THROWS_AS(encode(p, EncoderInput{{2}, 5}), DataError);

  std::ostringstream out;
  base->write(out);
  std::istringstream again(out.str());
  CHECK(PrecomputedBase::read(again).vectors == base->vectors);

  std::istringstream bad("2 3\n1 0\n");
  CHECK_THROWS_AS(PrecomputedBase::read(bad), DataError);
  std::istringstream nan_row("1 2\nnan 1\n");
  CHECK_THROWS_AS(PrecomputedBase::read(nan_row), DataError);
}

TEST_CASE("encoder binary block round-trips bit-exactly") {
  EncoderParams p = random_params(33, 11, 5, 4, EncoderMode::MaskSlot);
  std::ostringstream out(std::ios::binary);
  write_encoder(out, p);
  std::istringstream in(out.str(), std::ios::binary);
  const EncoderParams q = read_encoder(in);
  CHECK(q.embed == p.embed);
  CHECK(q.proj == p.proj);
  CHECK(q.mask_bias == p.mask_bias);
  CHECK(q.mode == p.mode);

  std::string bytes = out.str();
  bytes.resize(bytes.size() / 2);
  std::istringstream truncated(bytes, std::ios::binary);
  CHECK_THROWS_AS(read_encoder(truncated), DataError);
}

TEST_CASE("sgd_step applies params -= lr * grad") {
  EncoderParams p = random_params(3, 6, 2, 2, EncoderMode::MeanPool);
  const EncoderParams before = p;
  EncoderGrad g = EncoderGrad::zeros_like(p);
  g.embed.setConstant(1.0);
  g.proj.setConstant(-2.0);
  g.mask_bias.setConstant(0.5);
  sgd_step(p, g, 0.1);
  CHECK((p.embed - (before.embed.array() - 0.1).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((p.proj - (before.proj.array() + 0.2).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((p.mask_bias - (before.mask_bias.array() - 0.05).matrix()).cwiseAbs().maxCoeff() < 1e-15);
}
