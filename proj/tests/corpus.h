/*!
 *  Copyright (c) 2026 by Contributors
 * \file corpus.h
 * \brief Grammar corpus shared by the property and acceptance tests.
 */
#ifndef GRAMDASH_TESTS_CORPUS_H_
#define GRAMDASH_TESTS_CORPUS_H_

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gramdash/grammar.h"
#include "gramdash/tool_grammar.h"
#include "gramdash/vocab.h"

namespace gramdash::testing {

struct CorpusGrammar {
  std::string name;
  Grammar grammar;
  /*! \brief Four bytes that exercise the grammar, for exhaustive short-string checks. */
  std::string alphabet;
  /*! \brief Samples a valid sentence (printable ASCII) used to steer random decodes; may be empty. */
  std::function<std::string(std::mt19937_64&)> sample;
};

const std::vector<CorpusGrammar>& Corpus();

/*! \brief The JSON-lite grammar of the corpus. */
Grammar JsonLite();

/*! \brief Greedy longest-match tokenization of `text` (EOS excluded). */
std::vector<int32_t> Tokenize(const Vocabulary& vocab, std::string_view text);

/*! \brief Every string over `alphabet` of length at most `max_length`, shortest first. */
std::vector<std::string> AllStrings(const std::string& alphabet, int max_length);

}  // namespace gramdash::testing

#endif  // GRAMDASH_TESTS_CORPUS_H_
