/*!
 *  Copyright (c) 2026 by Contributors
 * \file vocab_test.cc
 */
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "gramdash/vocab.h"

namespace gramdash {
namespace {

std::string JsonlLine(int id, std::string_view bytes, bool eos = false) {
  return "{\"id\":" + std::to_string(id) + ",\"bytes_b64\":\"" + Base64Encode(bytes) +
         "\",\"eos\":" + (eos ? "true" : "false") + "}\n";
}

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kIo;
}

TEST(ParseVocab, FiveLineJsonl) {
  std::string text;
  for (int i = 0; i < 4; ++i) text += JsonlLine(i, std::string(1, static_cast<char>('a' + i)));
  text += JsonlLine(4, "", true);
  Vocabulary v = ParseVocab(text, VocabFormat::kJsonl);
  EXPECT_EQ(v.size(), 5);
  EXPECT_EQ(v.eos_id(), 4);
  EXPECT_EQ(v.token(2), "c");
}

TEST(ParseVocab, DuplicateId) {
  std::string text = JsonlLine(3, "a") + JsonlLine(3, "b") + JsonlLine(0, "", true);
  EXPECT_EQ(KindOf([&] { ParseVocab(text, VocabFormat::kJsonl); }), ErrorKind::kDuplicateId);
}

TEST(ParseVocab, MissingEos) {
  std::string text = JsonlLine(0, "a") + JsonlLine(1, "b");
  EXPECT_EQ(KindOf([&] { ParseVocab(text, VocabFormat::kJsonl); }), ErrorKind::kMissingEos);
}

TEST(ParseVocab, MalformedLines) {
  EXPECT_EQ(KindOf([] { ParseVocab("{\"id\":0}\n", VocabFormat::kJsonl); }), ErrorKind::kMalformedLine);
  EXPECT_EQ(KindOf([] { ParseVocab("not json\n", VocabFormat::kJsonl); }), ErrorKind::kMalformedLine);
  EXPECT_EQ(KindOf([] { ParseVocab("0 a\n", VocabFormat::kTsv); }), ErrorKind::kMalformedLine);
  EXPECT_EQ(KindOf([] { ParseVocab("0\t\\xZZ\n1\t\teos\n", VocabFormat::kTsv); }),
            ErrorKind::kMalformedLine);
  EXPECT_EQ(KindOf([] { ParseVocab("0\t\t\n1\t\teos\n", VocabFormat::kTsv); }), ErrorKind::kMalformedLine);
  EXPECT_EQ(KindOf([] { ParseVocab("5\ta\n0\t\teos\n", VocabFormat::kTsv); }), ErrorKind::kMalformedLine);
}

TEST(ParseVocab, TsvEscapes) {
  Vocabulary v = ParseVocab("0\t\\x00\\xff\n1\t\\t\\n\\\\\n2\t\teos\n", VocabFormat::kTsv);
  EXPECT_EQ(v.token(0), std::string("\x00\xff", 2));
  EXPECT_EQ(v.token(1), "\t\n\\");
  EXPECT_EQ(v.eos_id(), 2);
}

TEST(SerializeVocab, RoundTripsBothFormats) {
  Vocabulary v = SyntheticVocab(300, 3);
  for (auto format : {VocabFormat::kJsonl, VocabFormat::kTsv}) {
    EXPECT_EQ(ParseVocab(SerializeVocab(v, format), format), v);
  }
}

TEST(LoadVocab, FileAndFormatDetection) {
  auto path = std::filesystem::temp_directory_path() / "gramdash_vocab_test.tsv";
  {
    std::ofstream out(path);
    out << SerializeVocab(SyntheticVocab(50, 1), VocabFormat::kTsv);
  }
  EXPECT_EQ(VocabFormatFromPath(path.string()), VocabFormat::kTsv);
  EXPECT_EQ(VocabFormatFromPath("v.jsonl"), VocabFormat::kJsonl);
  EXPECT_EQ(LoadVocab(path.string(), VocabFormat::kTsv), SyntheticVocab(50, 1));
  std::filesystem::remove(path);
  EXPECT_EQ(KindOf([&] { LoadVocab(path.string(), VocabFormat::kTsv); }), ErrorKind::kIo);
}

TEST(Base64, KnownValuesAndRoundTrip) {
  EXPECT_EQ(Base64Encode("foobar"), "Zm9vYmFy");
  EXPECT_EQ(Base64Encode("fo"), "Zm8=");
  EXPECT_EQ(Base64Decode("Zm9vYg=="), "foob");
  EXPECT_THROW(Base64Decode("Zm9v!"), Error);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    std::string s;
    for (size_t n = rng() % 20; s.size() < n;) s += static_cast<char>(rng() & 0xff);
    EXPECT_EQ(Base64Decode(Base64Encode(s)), s);
  }
}

TEST(Vocabulary, SortedOrderAndLcp) {
  Vocabulary v({"b", "ab", "", "abc", "a"}, 2);
  const auto& sorted = v.sorted_ids();
  ASSERT_EQ(sorted, (std::vector<int32_t>{4, 1, 3, 0}));
  EXPECT_EQ(v.sorted_lcp(), (std::vector<int32_t>{0, 1, 2, 0}));
}

TEST(Vocabulary, Validation) {
  EXPECT_EQ(KindOf([] { Vocabulary({"a", "b"}, 5); }), ErrorKind::kMissingEos);
  EXPECT_EQ(KindOf([] { Vocabulary({"a", "", ""}, 2); }), ErrorKind::kMalformedLine);
}

TEST(SyntheticVocab, DeterministicAndComplete) {
  Vocabulary a = SyntheticVocab(500, 7), b = SyntheticVocab(500, 7);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 500);
  EXPECT_EQ(a.eos_id(), 499);
  for (int c = 0x20; c < 0x7f; ++c) {
    EXPECT_NE(std::find(a.tokens().begin(), a.tokens().end(), std::string(1, static_cast<char>(c))),
              a.tokens().end());
  }
  EXPECT_NE(SyntheticVocab(500, 8), a);
}

TEST(TokenMask, SerializeKnownBits) {
  TokenMask m(8, false);
  m.Set(0);
  m.Set(3);
  EXPECT_EQ(m.Serialize(), "09");
  EXPECT_EQ(TokenMask::Deserialize("09", 8), m);
}

TEST(TokenMask, DefaultAllowed) {
  TokenMask m(8, true);
  EXPECT_EQ(m.Count(), 8);
  EXPECT_EQ(m.Serialize(), "ff");
  TokenMask odd(11, true);
  EXPECT_EQ(odd.Serialize(), "ff07");
}

TEST(TokenMask, ClearDecrementsOnce) {
  TokenMask m(8, true);
  m.Clear(5);
  EXPECT_EQ(m.Count(), 7);
  m.Clear(5);
  EXPECT_EQ(m.Count(), 7);
  m.Set(5);
  m.Set(5);
  EXPECT_EQ(m.Count(), 8);
}

TEST(TokenMask, Errors) {
  TokenMask m(8, false);
  EXPECT_EQ(KindOf([&] { m.Set(8); }), ErrorKind::kIndexOutOfRange);
  EXPECT_EQ(KindOf([&] { m.Test(-1); }), ErrorKind::kIndexOutOfRange);
  EXPECT_EQ(KindOf([] { TokenMask::Deserialize("0", 8); }), ErrorKind::kMalformedLine);
  EXPECT_EQ(KindOf([] { TokenMask::Deserialize("zz", 8); }), ErrorKind::kMalformedLine);
  // Bits beyond the size must be clear.
  EXPECT_EQ(KindOf([] { TokenMask::Deserialize("ff", 4); }), ErrorKind::kMalformedLine);
}

TEST(TokenMask, RandomRoundTripAndMerge) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int32_t n = 1 + static_cast<int32_t>(rng() % 300);
    TokenMask a(n, false), b(n, false);
    std::vector<bool> ref(n, false);
    for (int i = 0; i < n / 3; ++i) {
      int32_t x = static_cast<int32_t>(rng() % n), y = static_cast<int32_t>(rng() % n);
      a.Set(x);
      b.Set(y);
      ref[x] = ref[y] = true;
    }
    EXPECT_EQ(TokenMask::Deserialize(a.Serialize(), n), a);
    EXPECT_EQ(a.Serialize().size(), static_cast<size_t>((n + 7) / 8 * 2));
    a.Merge(b);
    int32_t count = 0;
    for (int32_t i = 0; i < n; ++i) {
      EXPECT_EQ(a.Test(i), ref[i]);
      count += ref[i];
    }
    EXPECT_EQ(a.Count(), count);
    EXPECT_EQ(static_cast<int32_t>(a.AllowedIds().size()), count);
  }
}

}  // namespace
}  // namespace gramdash
