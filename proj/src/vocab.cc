/*!
 *  Copyright (c) 2026 by Contributors
 * \file vocab.cc
 */
#include "gramdash/vocab.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

namespace gramdash {

Vocabulary::Vocabulary(std::vector<std::string> tokens, int32_t eos_id)
    : tokens_(std::move(tokens)), eos_id_(eos_id) {
  if (eos_id_ < 0 || eos_id_ >= size()) throw Error(ErrorKind::kMissingEos, "no EOS token");
  if (!tokens_[eos_id_].empty()) {
    throw Error(ErrorKind::kMalformedLine, "EOS token must have no bytes");
  }
  for (int32_t id = 0; id < size(); ++id) {
    if (id != eos_id_) {
      if (tokens_[id].empty()) {
        throw Error(ErrorKind::kMalformedLine, "token " + std::to_string(id) + " is empty");
      }
      sorted_.push_back(id);
    }
  }
  std::sort(sorted_.begin(), sorted_.end(), [&](int32_t a, int32_t b) {
    return tokens_[a] != tokens_[b] ? tokens_[a] < tokens_[b] : a < b;
  });
  lcp_.assign(sorted_.size(), 0);
  for (size_t i = 1; i < sorted_.size(); ++i) {
    const std::string& a = tokens_[sorted_[i - 1]];
    const std::string& b = tokens_[sorted_[i]];
    auto mismatch = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
    lcp_[i] = static_cast<int32_t>(mismatch.first - a.begin());
  }
}

/****************** Base64 ******************/

namespace {

constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::string Base64Encode(std::string_view bytes) {
  std::string out;
  size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    uint32_t v = (static_cast<uint8_t>(bytes[i]) << 16) | (static_cast<uint8_t>(bytes[i + 1]) << 8) |
                 static_cast<uint8_t>(bytes[i + 2]);
    for (int shift = 18; shift >= 0; shift -= 6) out += kBase64Alphabet[(v >> shift) & 63];
  }
  if (i + 1 == bytes.size()) {
    uint32_t v = static_cast<uint8_t>(bytes[i]) << 16;
    out += kBase64Alphabet[(v >> 18) & 63];
    out += kBase64Alphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    uint32_t v = (static_cast<uint8_t>(bytes[i]) << 16) | (static_cast<uint8_t>(bytes[i + 1]) << 8);
    out += kBase64Alphabet[(v >> 18) & 63];
    out += kBase64Alphabet[(v >> 12) & 63];
    out += kBase64Alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::string Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorKind::kMalformedLine, "base64 length");
  std::string out;
  for (size_t i = 0; i < text.size(); i += 4) {
    uint32_t v = 0;
    int pad = 0;
    for (size_t j = 0; j < 4; ++j) {
      char c = text[i + j];
      v <<= 6;
      if (c == '=' && i + 4 == text.size() && j >= 2) {
        ++pad;
        continue;
      }
      auto pos = kBase64Alphabet.find(c);
      if (pos == std::string_view::npos || pad > 0) {
        throw Error(ErrorKind::kMalformedLine, "base64 character");
      }
      v |= static_cast<uint32_t>(pos);
    }
    out += static_cast<char>((v >> 16) & 0xff);
    if (pad < 2) out += static_cast<char>((v >> 8) & 0xff);
    if (pad < 1) out += static_cast<char>(v & 0xff);
  }
  return out;
}

/****************** Loading ******************/

namespace {

std::string MalformedAt(size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::string UnescapeTsv(std::string_view s, size_t line) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i >= s.size()) throw Error(ErrorKind::kMalformedLine, MalformedAt(line, "dangling \\"));
    switch (s[i]) {
      case '\\':
        out += '\\';
        break;
      case 't':
        out += '\t';
        break;
      case 'n':
        out += '\n';
        break;
      case 'r':
        out += '\r';
        break;
      case 'x': {
        if (i + 2 >= s.size()) {
          throw Error(ErrorKind::kMalformedLine, MalformedAt(line, "short \\x escape"));
        }
        std::string hex(s.substr(i + 1, 2));
        if (hex.size() != 2 || !std::isxdigit(static_cast<unsigned char>(hex[0])) ||
            !std::isxdigit(static_cast<unsigned char>(hex[1]))) {
          throw Error(ErrorKind::kMalformedLine, MalformedAt(line, "bad \\x escape"));
        }
        out += static_cast<char>(std::stoi(hex, nullptr, 16));
        i += 2;
        break;
      }
      default:
        throw Error(ErrorKind::kMalformedLine, MalformedAt(line, "unknown escape"));
    }
  }
  return out;
}

std::string EscapeTsv(std::string_view s) {
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (char c : s) {
    auto b = static_cast<uint8_t>(c);
    if (c == '\\') {
      out += "\\\\";
    } else if (c == '\t') {
      out += "\\t";
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\r') {
      out += "\\r";
    } else if (b < 0x20 || b >= 0x7f) {
      out += "\\x";
      out += kHex[b >> 4];
      out += kHex[b & 15];
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

Vocabulary ParseVocab(std::string_view text, VocabFormat format) {
  std::vector<std::pair<int64_t, std::string>> entries;
  std::set<int64_t> ids;
  int64_t eos = -1;
  size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    int64_t id = 0;
    std::string bytes;
    bool is_eos = false;
    if (format == VocabFormat::kJsonl) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
        id = j.at("id").get<int64_t>();
        bytes = Base64Decode(j.at("bytes_b64").get<std::string>());
        is_eos = j.value("eos", false);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::kMalformedLine, MalformedAt(line_no, e.what()));
      } catch (const Error&) {
        throw Error(ErrorKind::kMalformedLine, MalformedAt(line_no, "invalid base64"));
      }
    } else {
      auto tab1 = line.find('\t');
      if (tab1 == std::string::npos) {
        throw Error(ErrorKind::kMalformedLine, MalformedAt(line_no, "missing tab"));
      }
      auto tab2 = line.find('\t', tab1 + 1);
      std::string id_text = line.substr(0, tab1);
      std::string escaped =
          line.substr(tab1 + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab1 - 1);
      std::string flags = tab2 == std::string::npos ? "" : line.substr(tab2 + 1);
      try {
        size_t used = 0;
        id = std::stoll(id_text, &used);
        if (used != id_text.size()) throw std::invalid_argument("id");
      } catch (const std::exception&) {
        throw Error(ErrorKind::kMalformedLine, MalformedAt(line_no, "bad id"));
      }
      bytes = UnescapeTsv(escaped, line_no);
      if (flags == "eos") {
        is_eos = true;
      } else if (!flags.empty()) {
        throw Error(ErrorKind::kMalformedLine, MalformedAt(line_no, "unknown flag " + flags));
      }
    }
    if (id < 0) throw Error(ErrorKind::kMalformedLine, MalformedAt(line_no, "negative id"));
    if (!ids.insert(id).second) throw Error(ErrorKind::kDuplicateId, std::to_string(id));
    if (is_eos) {
      if (eos >= 0) throw Error(ErrorKind::kMalformedLine, MalformedAt(line_no, "second EOS"));
      if (!bytes.empty()) {
        throw Error(ErrorKind::kMalformedLine, MalformedAt(line_no, "EOS token has bytes"));
      }
      eos = id;
    } else if (bytes.empty()) {
      throw Error(ErrorKind::kMalformedLine, MalformedAt(line_no, "empty token"));
    }
    entries.emplace_back(id, std::move(bytes));
  }
  if (eos < 0) throw Error(ErrorKind::kMissingEos, "no token is marked eos");
  std::vector<std::string> tokens(entries.size());
  for (auto& [id, bytes] : entries) {
    if (id >= static_cast<int64_t>(entries.size())) {
      throw Error(ErrorKind::kMalformedLine, "ids are not dense: " + std::to_string(id));
    }
    tokens[id] = std::move(bytes);
  }
  return Vocabulary(std::move(tokens), static_cast<int32_t>(eos));
}

Vocabulary LoadVocab(const std::string& path, VocabFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseVocab(buffer.str(), format);
}

VocabFormat VocabFormatFromPath(std::string_view path) {
  return path.ends_with(".tsv") ? VocabFormat::kTsv : VocabFormat::kJsonl;
}

std::string SerializeVocab(const Vocabulary& vocab, VocabFormat format) {
  std::string out;
  for (int32_t id = 0; id < vocab.size(); ++id) {
    const bool eos = id == vocab.eos_id();
    if (format == VocabFormat::kJsonl) {
      nlohmann::json j = {{"id", id}, {"bytes_b64", Base64Encode(vocab.token(id))}, {"eos", eos}};
      out += j.dump() + "\n";
    } else {
      out += std::to_string(id) + "\t" + EscapeTsv(vocab.token(id)) + "\t" + (eos ? "eos" : "") +
             "\n";
    }
  }
  return out;
}

/****************** Synthetic vocabulary ******************/

Vocabulary SyntheticVocab(int32_t size, uint64_t seed) {
  static const char* kFixed[] = {
      // JSON and punctuation fragments.
      "{\"", "\":", "\":\"", "\",\"", "\"}", "\",", "\"", "{}", "[]", "[\"", "\"]", "},", "}]",
      "}}", "]}", "\":[", "\":{", "\":\"\"", ",\"", "true", "false", "null", "\\\"", "\\\\",
      "\\n", "\"\"", "  ", "\n", "\n\n", "\t", ", ", ": ", "\": ",
      // Numbers.
      "0", "00", "10", "12", "42", "100", "123", "2024", "-1", "-", ".", ".5", "3.14", "0.0",
      "999", "1,", "2]", "7}",
      // Tool-call and channel markers, whole and split.
      "<function=", "</function>", "<function=get_weather>", "</", "function", "function>",
      "<|channel|>", "<|message|>", "<|end|>", "<|return|>", "<|call|>", "<|", "|>", "<|end",
      "analysis", "final", "commentary", " to=functions.", "functions.", " to=", "=", "get_",
      "weather", "_", "tool_", "get_weather", "search", "city", "San", " Francisco",
      "San Francisco", "OK", " I", " will", " call", " a", " tool", ".", " <", "<", ">", "><",
      // Multi-byte UTF-8 chunks, some deliberately partial.
      "\xc3\xa9", "\xc3\xbc", "\xe4\xb8\xad\xe6\x96\x87", "\xe2\x82\xac", "\xf0\x9f\x98\x80",
      "\xe4\xb8", "\xad", "\xc3", "\xa9\xc3",
  };
  static const char* kWords[] = {
      "the", "and", "to", "of", "in", "is", "it", "for", "on", "with", "as", "at", "by", "from",
      "name", "value", "id", "type", "items", "text", "query", "date", "time", "user", "data",
      "list", "count", "unit", "limit", "location", "price", "email", "status", "result", "hello",
      "world", "ab", "abc", "ba", "aa", "bb", "xy", "yes", "no", "if", "then", "else", "while",
      "add", "sub", "mul", "div", "sum", "max", "min", "key", "map", "set", "get", "put",
  };

  std::mt19937_64 rng(seed);
  std::vector<std::string> tokens;
  std::set<std::string> seen;
  auto add = [&](std::string t) {
    if (static_cast<int32_t>(tokens.size()) >= size - 1) return;
    if (!t.empty() && seen.insert(t).second) tokens.push_back(std::move(t));
  };
  for (int b = 0x20; b < 0x7f; ++b) add(std::string(1, static_cast<char>(b)));
  for (const char* t : kFixed) add(t);
  for (const char* w : kWords) {
    add(w);
    add(std::string(" ") + w);
    add(std::string("\"") + w);
    add(std::string(w) + "\"");
  }
  constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";
  constexpr std::string_view kDigits = "0123456789";
  constexpr std::string_view kPunct = "\"{}[],:<>/|=_-";
  for (int guard = 0; static_cast<int32_t>(tokens.size()) < size - 1 && guard < 100000; ++guard) {
    std::string t;
    switch (rng() % 5) {
      case 0:
      case 1: {
        size_t len = 2 + rng() % 5;
        for (size_t i = 0; i < len; ++i) t += kLetters[rng() % kLetters.size()];
        break;
      }
      case 2: {
        size_t len = 2 + rng() % 3;
        for (size_t i = 0; i < len; ++i) t += kDigits[rng() % kDigits.size()];
        break;
      }
      case 3: {
        t += kPunct[rng() % kPunct.size()];
        t += kLetters[rng() % kLetters.size()];
        if (rng() % 2) t += kPunct[rng() % kPunct.size()];
        break;
      }
      default: {
        t += kWords[rng() % std::size(kWords)];
        t += kPunct[rng() % kPunct.size()];
        break;
      }
    }
    add(std::move(t));
  }
  tokens.emplace_back();
  const auto eos = static_cast<int32_t>(tokens.size()) - 1;
  return Vocabulary(std::move(tokens), eos);
}

/****************** TokenMask ******************/

TokenMask::TokenMask(int32_t size, bool allowed)
    : size_(size), words_((static_cast<size_t>(size) + 63) / 64, 0) {
  if (allowed) {
    for (int32_t i = 0; i < size; ++i) words_[i >> 6] |= uint64_t{1} << (i & 63);
    count_ = size;
  }
}

void TokenMask::CheckIndex(int32_t id) const {
  if (id < 0 || id >= size_) {
    throw Error(ErrorKind::kIndexOutOfRange,
                std::to_string(id) + " not in [0, " + std::to_string(size_) + ")");
  }
}

void TokenMask::Set(int32_t id) {
  CheckIndex(id);
  uint64_t bit = uint64_t{1} << (id & 63);
  if (!(words_[id >> 6] & bit)) {
    words_[id >> 6] |= bit;
    ++count_;
  }
}

void TokenMask::Clear(int32_t id) {
  CheckIndex(id);
  uint64_t bit = uint64_t{1} << (id & 63);
  if (words_[id >> 6] & bit) {
    words_[id >> 6] &= ~bit;
    --count_;
  }
}

bool TokenMask::Test(int32_t id) const {
  CheckIndex(id);
  return (words_[id >> 6] >> (id & 63)) & 1;
}

void TokenMask::Merge(const TokenMask& other) {
  count_ = 0;
  for (size_t i = 0; i < words_.size(); ++i) {
    words_[i] |= other.words_[i];
    count_ += std::popcount(words_[i]);
  }
}

std::vector<int32_t> TokenMask::AllowedIds() const {
  std::vector<int32_t> out;
  for (size_t w = 0; w < words_.size(); ++w) {
    for (uint64_t bits = words_[w]; bits; bits &= bits - 1) {
      out.push_back(static_cast<int32_t>(w * 64 + std::countr_zero(bits)));
    }
  }
  return out;
}

std::string TokenMask::Serialize() const {
  static const char* kHex = "0123456789abcdef";
  std::string out;
  const size_t bytes = (static_cast<size_t>(size_) + 7) / 8;
  for (size_t i = 0; i < bytes; ++i) {
    auto byte = static_cast<uint8_t>(words_[i / 8] >> (8 * (i % 8)));
    out += kHex[byte >> 4];
    out += kHex[byte & 15];
  }
  return out;
}

TokenMask TokenMask::Deserialize(std::string_view hex, int32_t size) {
  TokenMask mask(size, false);
  if (hex.size() != 2 * ((static_cast<size_t>(size) + 7) / 8)) {
    throw Error(ErrorKind::kMalformedLine, "mask length");
  }
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw Error(ErrorKind::kMalformedLine, "mask digit");
  };
  for (size_t i = 0; i < hex.size() / 2; ++i) {
    int byte = nibble(hex[2 * i]) * 16 + nibble(hex[2 * i + 1]);
    for (int bit = 0; bit < 8; ++bit) {
      if ((byte >> bit) & 1) {
        const auto id = static_cast<int32_t>(8 * i + bit);
        if (id >= size) throw Error(ErrorKind::kMalformedLine, "bit beyond mask size");
        mask.Set(id);
      }
    }
  }
  return mask;
}

}  // namespace gramdash
