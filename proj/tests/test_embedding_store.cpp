#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <random>
#include <sstream>

#include "test_util.hpp"

namespace kfc {
namespace {

using testing::TempDir;

std::string kfce_bytes(std::uint32_t n, std::uint32_t d, const std::vector<float>& values,
                       const char* magic = "KFCE", std::uint32_t version = 1) {
  std::string out(magic, 4);
  auto put = [&](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  };
  put(version);
  put(n);
  put(d);
  for (float f : values) put(std::bit_cast<std::uint32_t>(f));
  return out;
}

TEST(LoadEmbeddings, ReadsRowMajorPayload) {
  TempDir dir;
  testing::write_text(dir / "e.kfce", kfce_bytes(3, 2, {1, 2, 3, 4, 5, 6}));
  const EmbeddingMatrix m = load_embeddings(dir / "e.kfce");
  EXPECT_EQ(m.n_frames(), 3u);
  EXPECT_EQ(m.dim(), 2u);
  EXPECT_FALSE(m.normalized());
  EXPECT_EQ(m.row(1)[0], 3.0);
  EXPECT_EQ(m.row(2)[1], 6.0);
}

TEST(LoadEmbeddings, RejectsBadMagicAndVersion) {
  TempDir dir;
  testing::write_text(dir / "a", kfce_bytes(1, 1, {1}, "XXXX"));
  testing::write_text(dir / "b", kfce_bytes(1, 1, {1}, "KFCE", 2));
  testing::write_text(dir / "c", "KFC");
  for (const char* name : {"a", "b", "c"}) {
    try {
      load_embeddings(dir / name);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::MalformedHeader) << name;
    }
  }
}

TEST(LoadEmbeddings, RejectsTruncatedPayloadAndZeroDims) {
  TempDir dir;
  std::string bytes = kfce_bytes(2, 2, {1, 2, 3, 4});
  bytes.resize(bytes.size() - 1);
  testing::write_text(dir / "t", bytes);
  testing::write_text(dir / "z", kfce_bytes(0, 4, {}));
  try {
    load_embeddings(dir / "t");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TruncatedPayload);
  }
  try {
    load_embeddings(dir / "z");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimZero);
  }
}

TEST(WriteEmbeddings, SizeArithmeticAndRoundTrip) {
  TempDir dir;
  write_embeddings(EmbeddingMatrix(1, 1, {0.5}), dir / "one");
  EXPECT_EQ(std::filesystem::file_size(dir / "one"), 20u);

  std::mt19937_64 rng(7);
  std::normal_distribution<float> g;
  std::vector<double> values(16 * 8);
  for (double& v : values) v = g(rng);
  const EmbeddingMatrix m(16, 8, values);
  write_embeddings(m, dir / "m");
  const EmbeddingMatrix back = load_embeddings(dir / "m");
  ASSERT_EQ(back.data().size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.data()[i]), std::bit_cast<std::uint64_t>(values[i]));
  }
  const std::string first = testing::read_text(dir / "m");
  write_embeddings(back, dir / "m2");
  EXPECT_EQ(first, testing::read_text(dir / "m2"));
}

TEST(WriteEmbeddings, EmptyMatrixIsDimZero) {
  try {
    detail::write_kfce("unused", 0, 3, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimZero);
  }
  EXPECT_THROW(EmbeddingMatrix(0, 3, {}), Error);
}

TEST(Query, RequiresSingleRow) {
  TempDir dir;
  testing::write_text(dir / "q", kfce_bytes(2, 1, {1, 2}));
  EXPECT_THROW(load_query(dir / "q"), Error);
  write_query(QueryVector({0.25, -1.5}), dir / "q1");
  EXPECT_EQ(load_query(dir / "q1"), QueryVector({0.25, -1.5}));
}

TEST(NormalizeRows, ThreeFourFive) {
  const EmbeddingMatrix m = normalize_rows(EmbeddingMatrix(2, 2, {3, 4, 1, 0}));
  EXPECT_TRUE(m.normalized());
  EXPECT_DOUBLE_EQ(m.row(0)[0], 0.6);
  EXPECT_DOUBLE_EQ(m.row(0)[1], 0.8);
  EXPECT_EQ(m.row(1)[0], 1.0);
  EXPECT_EQ(m.row(1)[1], 0.0);
}

TEST(NormalizeRows, ZeroRowReportsIndex) {
  try {
    normalize_rows(EmbeddingMatrix(3, 2, {1, 0, 0, 0, 0, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroRow);
    EXPECT_EQ(e.detail(), 1);
  }
  try {
    normalize_rows(EmbeddingMatrix(1, 2, {0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.detail(), 0);
  }
}

TEST(NormalizeRows, IdempotentAndCosineBounded) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(12 * 5);
    for (double& x : v) x = g(rng) * 10;
    const EmbeddingMatrix once = normalize_rows(EmbeddingMatrix(12, 5, v));
    const EmbeddingMatrix twice = normalize_rows(once);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(once.data()[i], twice.data()[i], 1e-12);
    for (std::size_t i = 0; i < 12; ++i) {
      EXPECT_NEAR(dot(once.row(i), once.row(i)), 1.0, kNormTolerance);
      for (std::size_t j = 0; j < 12; ++j) {
        const double c = dot(once.row(i), once.row(j));
        EXPECT_LE(c, 1.0 + 1e-9);
        EXPECT_GE(c, -1.0 - 1e-9);
      }
    }
  }
}

TEST(Captions, ParsesRecords) {
  std::istringstream in("{\"index\":0,\"text\":\"a dog\"}\n{\"index\":5,\"text\":\"a car\"}\n");
  const CaptionSet c = parse_captions(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.at(0), "a dog");
  EXPECT_EQ(c.at(5), "a car");
}

TEST(Captions, EmptyFileIsEmptySet) {
  std::istringstream in("");
  EXPECT_TRUE(parse_captions(in).empty());
  std::istringstream blank("\n  \n");
  EXPECT_TRUE(parse_captions(blank).empty());
}

TEST(Captions, ErrorCases) {
  auto code_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_captions(in);
    } catch (const Error& e) {
      return std::make_pair(e.code(), e.detail().value_or(-1));
    }
    return std::make_pair(Errc::InvalidSpec, std::int64_t{-99});
  };
  EXPECT_EQ(code_of("{\"index\":3,\"text\":\"a\"}\n{\"index\":3,\"text\":\"b\"}\n"),
            std::make_pair(Errc::DuplicateIndex, std::int64_t{3}));
  EXPECT_EQ(code_of("{\"index\":1,\"text\":\"a\"}\nnot json\n"),
            std::make_pair(Errc::MalformedLine, std::int64_t{2}));
  EXPECT_EQ(code_of("{\"index\":\"1\",\"text\":\"a\"}\n"),
            std::make_pair(Errc::MalformedLine, std::int64_t{1}));
  EXPECT_EQ(code_of("{\"index\":-2,\"text\":\"a\"}\n"),
            std::make_pair(Errc::NegativeIndex, std::int64_t{-2}));
  EXPECT_EQ(code_of("{\"index\":0,\"text\":\"" + std::string(513, 'x') + "\"}\n"),
            std::make_pair(Errc::MalformedLine, std::int64_t{1}));
}

TEST(Captions, TextIsVerbatimThroughFiles) {
  TempDir dir;
  const CaptionSet c{{2, "a very long caption that goes well beyond fifteen words of text, kept "
                         "exactly as written é"},
                     {9, "x"}};
  write_captions(c, dir / "c.jsonl");
  EXPECT_EQ(load_captions(dir / "c.jsonl"), c);
  EXPECT_NO_THROW(check_captions(c, 10));
  EXPECT_THROW(check_captions(c, 9), Error);
}

}  // namespace
}  // namespace kfc
