/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/tool_grammar.h
 * \brief Grammars for JSON-schema subsets and tag-dispatched tool calling.
 */
#ifndef GRAMDASH_TOOL_GRAMMAR_H_
#define GRAMDASH_TOOL_GRAMMAR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gramdash/grammar.h"

namespace gramdash {

/*!
 * \brief Schema subset. Objects list required properties in their fixed output order; enums
 * hold JSON literal texts (for instance `"celsius"` including the quotes, or `3`).
 */
struct SchemaNode {
  enum class Kind { kObject, kStr, kNum, kInt, kBool, kEnum, kArray };

  Kind kind = Kind::kStr;
  std::vector<std::pair<std::string, SchemaNode>> properties;
  std::optional<int64_t> min_length, max_length;
  std::vector<std::string> enum_values;
  std::shared_ptr<SchemaNode> items;
  std::optional<int64_t> min_items, max_items;

  static SchemaNode Object(std::vector<std::pair<std::string, SchemaNode>> properties);
  static SchemaNode Str(std::optional<int64_t> min_length = {},
                        std::optional<int64_t> max_length = {});
  static SchemaNode Num();
  static SchemaNode Int();
  static SchemaNode Bool();
  static SchemaNode Enum(std::vector<std::string> values);
  static SchemaNode Array(SchemaNode items, std::optional<int64_t> min_items = {},
                          std::optional<int64_t> max_items = {});

  friend bool operator==(const SchemaNode& lhs, const SchemaNode& rhs);
};

struct ToolSpec {
  std::string name;
  SchemaNode params;

  friend bool operator==(const ToolSpec&, const ToolSpec&) = default;
};

/*!
 * \brief Parses a JSON schema document (as text) restricted to type object/string/number/
 * integer/boolean/array, enum, properties, minLength, maxLength, minItems, maxItems.
 * Every listed property is treated as required. `required`, `description` and `title` are
 * ignored. \throws Error(kUnsupportedKeyword), Error(kInvalidGrammar) for inconsistent bounds.
 */
SchemaNode ParseSchema(const std::string& json_text);
std::string SchemaToJson(const SchemaNode& schema);

/*!
 * \brief Grammar accepting exactly the JSON texts valid under the schema: fixed property order,
 * no insignificant whitespace. Strings hold any byte except `"` and `\`, or the escapes `\"` and
 * `\\`; numbers are `-?[0-9]+(\.[0-9]+)?`.
 */
Grammar SchemaToGrammar(const SchemaNode& schema);

enum class ToolFormat { kLlama, kHarmonyLite };

/*!
 * \brief Tool-calling grammar.
 *
 * llama: free text in which `<function=NAME>` starts a call whose arguments follow the tool's
 * schema and end with `</function>`.
 * harmony_lite: free text with channel headers `<|channel|>analysis<|message|>` and
 * `<|channel|>final<|message|>`, each followed by free text up to `<|end|>`, and tool headers
 * `<|channel|>commentary to=functions.NAME<|message|>` followed by arguments and `<|call|>`; the
 * output ends with `<|return|>`.
 * \throws Error(kNoTools), Error(kDuplicateToolName).
 */
Grammar BuildToolDispatch(const std::vector<ToolSpec>& tools, ToolFormat format);

/*! \brief Deterministic synthetic tools with 1 to 6 parameters drawn from shared archetypes. */
std::vector<ToolSpec> GenToolPool(int32_t n, uint64_t seed);

/*! \brief JSON array of {name, params}. */
std::vector<ToolSpec> ParseToolSpecs(const std::string& json_text);
std::string ToolSpecsToJson(const std::vector<ToolSpec>& tools);

/*! \brief A random JSON text conforming to the schema. */
std::string SampleJson(const SchemaNode& schema, std::mt19937_64& rng);

}  // namespace gramdash

#endif  // GRAMDASH_TOOL_GRAMMAR_H_
