/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/vocab.h
 * \brief Token vocabularies and token masks.
 */
#ifndef GRAMDASH_VOCAB_H_
#define GRAMDASH_VOCAB_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gramdash/error.h"

namespace gramdash {

/*!
 * \brief Token id to raw byte string table with one end-of-sequence token.
 *
 * Tokens are raw bytes and need not be valid UTF-8. The EOS token has an empty byte string; every
 * other token is non-empty.
 */
class Vocabulary {
 public:
  Vocabulary() = default;
  /*! \throws Error(kMissingEos), Error(kMalformedLine) for an empty non-EOS token. */
  Vocabulary(std::vector<std::string> tokens, int32_t eos_id);

  int32_t size() const { return static_cast<int32_t>(tokens_.size()); }
  int32_t eos_id() const { return eos_id_; }
  const std::string& token(int32_t id) const { return tokens_[id]; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /*! \brief Non-EOS token ids in lexicographic byte order. */
  const std::vector<int32_t>& sorted_ids() const { return sorted_; }
  /*! \brief lcp[i]: common prefix length of sorted_ids()[i] and its predecessor (0 for i = 0). */
  const std::vector<int32_t>& sorted_lcp() const { return lcp_; }

  friend bool operator==(const Vocabulary& lhs, const Vocabulary& rhs) {
    return lhs.tokens_ == rhs.tokens_ && lhs.eos_id_ == rhs.eos_id_;
  }

 private:
  std::vector<std::string> tokens_;
  int32_t eos_id_ = 0;
  std::vector<int32_t> sorted_;
  std::vector<int32_t> lcp_;
};

enum class VocabFormat { kJsonl, kTsv };

/*!
 * \brief Loads a vocabulary file.
 *
 * jsonl: one object per line, `{"id":N,"bytes_b64":"...","eos":bool}`.
 * tsv: `id<TAB>escaped-bytes<TAB>flags`, where escapes are `\xNN`, `\\`, `\t`, `\n`, `\r` and the
 * flags field is empty or `eos`.
 * \throws Error(kDuplicateId), Error(kMissingEos), Error(kMalformedLine), Error(kIo).
 */
Vocabulary LoadVocab(const std::string& path, VocabFormat format);
Vocabulary ParseVocab(std::string_view text, VocabFormat format);
/*! \brief Format from the file extension: `.tsv` or jsonl otherwise. */
VocabFormat VocabFormatFromPath(std::string_view path);
std::string SerializeVocab(const Vocabulary& vocab, VocabFormat format);

std::string Base64Encode(std::string_view bytes);
/*! \throws Error(kMalformedLine) on invalid input. */
std::string Base64Decode(std::string_view text);

/*!
 * \brief Seeded synthetic vocabulary: every printable ASCII byte, common words, JSON and
 * tool-call fragments, digit runs and multi-byte UTF-8 chunks. The EOS token is the last id.
 */
Vocabulary SyntheticVocab(int32_t size, uint64_t seed);

/*! \brief Allow-bitmap over token ids. */
class TokenMask {
 public:
  TokenMask() = default;
  TokenMask(int32_t size, bool allowed);

  int32_t size() const { return size_; }
  /*! \throws Error(kIndexOutOfRange). */
  void Set(int32_t id);
  void Clear(int32_t id);
  bool Test(int32_t id) const;
  int32_t Count() const { return count_; }
  /*! \brief Bitwise or with a mask of the same size. */
  void Merge(const TokenMask& other);
  std::vector<int32_t> AllowedIds() const;

  const std::vector<uint64_t>& words() const { return words_; }

  /*!
   * \brief Lowercase hex of the bitmap bytes. Byte i holds ids 8i..8i+7 with id 8i in its least
   * significant bit; the string has ceil(size/8) bytes.
   */
  std::string Serialize() const;
  /*! \throws Error(kMalformedLine). */
  static TokenMask Deserialize(std::string_view hex, int32_t size);

  friend bool operator==(const TokenMask& lhs, const TokenMask& rhs) {
    return lhs.size_ == rhs.size_ && lhs.words_ == rhs.words_;
  }

 private:
  void CheckIndex(int32_t id) const;

  int32_t size_ = 0;
  int32_t count_ = 0;
  std::vector<uint64_t> words_;
};

}  // namespace gramdash

#endif  // GRAMDASH_VOCAB_H_
