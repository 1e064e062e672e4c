#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bleubound/errors.hpp"
#include "bleubound/text.hpp"
#include "oracle.hpp"

using namespace bleubound;

TEST(Vocab, FirstOccurrenceOrder) {
  const Vocab v = build_vocab({"a b", "b c"});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v.id("a"), 0u);
  EXPECT_EQ(v.id("b"), 1u);
  EXPECT_EQ(v.id("c"), 2u);
}

TEST(Vocab, EmptyAndDuplicates) {
  EXPECT_EQ(build_vocab({}).size(), 0u);
  const Vocab v = build_vocab({"x x x"});
  EXPECT_EQ(v.size(), 1u);
  EXPECT_EQ(v.token(0), "x");
  EXPECT_THROW(v.token(1), IdOutOfRange);
}

TEST(Encode, Basic) {
  const Vocab v = build_vocab({"a b"});
  EXPECT_EQ(encode("a b a", v), (TokenSeq{0, 1, 0}));
  EXPECT_TRUE(encode("", v).empty());
}

TEST(Encode, UnknownTokenNamesTheToken) {
  const Vocab v = build_vocab({"a"});
  try {
    encode("z", v);
    FAIL() << "expected UnknownToken";
  } catch (const UnknownToken& e) {
    EXPECT_EQ(e.token(), "z");
  }
}

TEST(Encode, TabsAndRepeatedSpaces) {
  const auto parts = split_tokens("a  b\tc ");
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[2], "c");
}

TEST(Encode, DecodeRoundTrip) {
  Rng rng(11);
  const Vocab v = build_vocab({"w0 w1 w2 w3 w4 w5"});
  for (int trial = 0; trial < 200; ++trial) {
    const TokenSeq s = oracle::random_seq(rng, 1 + rng.below(10), v.size());
    EXPECT_EQ(encode(decode(s, v), v), s);
  }
}

TEST(OneHot, Examples) {
  const Matrix a = to_onehot(TokenSeq{0}, 2).dense();
  EXPECT_EQ(a, (Matrix{{1, 0}}));
  const Matrix b = to_onehot(TokenSeq{1, 0}, 2).dense();
  EXPECT_EQ(b, (Matrix{{0, 1}, {1, 0}}));
  EXPECT_THROW(to_onehot(TokenSeq{2}, 2), IdOutOfRange);
}

TEST(OneHot, RowsHaveOneNonzero) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t v = 2 + rng.below(9);
    const Matrix m = to_onehot(oracle::random_seq(rng, 1 + rng.below(8), v), v).dense();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double sum = 0.0;
      int nonzero = 0;
      for (double x : m.row(r)) {
        sum += x;
        nonzero += x != 0.0;
      }
      EXPECT_EQ(sum, 1.0);
      EXPECT_EQ(nonzero, 1);
    }
  }
}

TEST(Softmax, Examples) {
  const DistMatrix u = softmax_rows(Matrix{{0, 0}});
  EXPECT_DOUBLE_EQ(u.prob(0, 0), 0.5);
  for (double c : {-50.0, 0.0, 3.5, 700.0}) {
    const DistMatrix p = softmax_rows(Matrix{{c, c + std::log(3.0)}});
    EXPECT_NEAR(p.prob(0, 0), 0.25, 1e-12);
    EXPECT_NEAR(p.prob(0, 1), 0.75, 1e-12);
  }
  const DistMatrix big = softmax_rows(Matrix{{1000, 0}});
  EXPECT_NEAR(big.prob(0, 0), 1.0, 1e-15);
  EXPECT_GE(big.prob(0, 1), 0.0);
  EXPECT_LT(big.prob(0, 1), 1e-300);
}

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(softmax_rows(Matrix{{0, NAN}}), NonFiniteInput);
  EXPECT_THROW(softmax_rows(Matrix{{INFINITY, 0}}), NonFiniteInput);
  EXPECT_THROW(softmax_rows(Matrix{{-INFINITY, 0}}), NonFiniteInput);
}

TEST(Softmax, RowSumsAndShiftInvariance) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix z = oracle::random_logits(rng, 1 + rng.below(6), 2 + rng.below(40), 5.0);
    const DistMatrix p = softmax_rows(z);
    Matrix shifted = z;
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const double c = 10.0 * rng.normal();
      for (double& x : shifted.row(r)) x += c;
    }
    const DistMatrix q = softmax_rows(shifted);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      double sum = 0.0;
      for (std::size_t j = 0; j < z.cols(); ++j) {
        sum += p.prob(r, j);
        EXPECT_NEAR(p.prob(r, j), q.prob(r, j), 1e-12);
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Argmax, Examples) {
  EXPECT_EQ(argmax_decode(DistMatrix::from_probs(Matrix{{0.2, 0.8}})), (TokenSeq{1}));
  EXPECT_EQ(argmax_decode(DistMatrix::from_probs(Matrix{{0.5, 0.5}})), (TokenSeq{0}));
  EXPECT_EQ(argmax_decode(DistMatrix::from_probs(Matrix{{0.1, 0.9}, {0.9, 0.1}})), (TokenSeq{1, 0}));
}

TEST(Argmax, SoftmaxIsMonotone) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix z = oracle::random_logits(rng, 1 + rng.below(6), 2 + rng.below(20));
    EXPECT_EQ(argmax_decode(softmax_rows(z)), argmax_rows(z));
  }
}

TEST(DistMatrix, FromProbsValidates) {
  EXPECT_THROW(DistMatrix::from_probs(Matrix{{0.5, 0.6}}), InvalidConfig);
  EXPECT_THROW(DistMatrix::from_probs(Matrix{{1.5, -0.5}}), InvalidConfig);
  const DistMatrix d = DistMatrix::degenerate(TokenSeq{1, 0}, 3);
  EXPECT_EQ(d.probs(), (Matrix{{0, 1, 0}, {1, 0, 0}}));
}

TEST(Files, ReadLinesStripsCarriageReturns) {
  const auto path = std::filesystem::temp_directory_path() / "bleubound_text_test.txt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "a b\r\nc\n";
  }
  const auto lines = read_lines(path);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "a b");
  EXPECT_EQ(lines[1], "c");
  std::filesystem::remove(path);
  EXPECT_THROW(read_lines(path), IoError);
}

TEST(Files, VocabRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "bleubound_vocab_test.txt";
  const Vocab v = build_vocab({"the cat sat", "on the mat"});
  save_vocab(v, path);
  const Vocab back = load_vocab(path);
  EXPECT_EQ(back.tokens(), v.tokens());
  {
    std::ofstream out(path);
    out << "a\nb\na\n";
  }
  EXPECT_THROW(load_vocab(path), InvalidConfig);
  std::filesystem::remove(path);
}
