/*!
 *  Copyright (c) 2026 by Contributors
 * \file tool_grammar.cc
 */
#include "gramdash/tool_grammar.h"

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <set>

namespace gramdash {

using OrderedJson = nlohmann::ordered_json;

SchemaNode SchemaNode::Object(std::vector<std::pair<std::string, SchemaNode>> properties) {
  SchemaNode n;
  n.kind = Kind::kObject;
  n.properties = std::move(properties);
  return n;
}

SchemaNode SchemaNode::Str(std::optional<int64_t> min_length, std::optional<int64_t> max_length) {
  SchemaNode n;
  n.kind = Kind::kStr;
  n.min_length = min_length;
  n.max_length = max_length;
  return n;
}

SchemaNode SchemaNode::Num() {
  SchemaNode n;
  n.kind = Kind::kNum;
  return n;
}

SchemaNode SchemaNode::Int() {
  SchemaNode n;
  n.kind = Kind::kInt;
  return n;
}

SchemaNode SchemaNode::Bool() {
  SchemaNode n;
  n.kind = Kind::kBool;
  return n;
}

SchemaNode SchemaNode::Enum(std::vector<std::string> values) {
  SchemaNode n;
  n.kind = Kind::kEnum;
  n.enum_values = std::move(values);
  return n;
}

SchemaNode SchemaNode::Array(SchemaNode items, std::optional<int64_t> min_items,
                             std::optional<int64_t> max_items) {
  SchemaNode n;
  n.kind = Kind::kArray;
  n.items = std::make_shared<SchemaNode>(std::move(items));
  n.min_items = min_items;
  n.max_items = max_items;
  return n;
}

bool operator==(const SchemaNode& lhs, const SchemaNode& rhs) {
  if (lhs.kind != rhs.kind || lhs.properties != rhs.properties ||
      lhs.min_length != rhs.min_length || lhs.max_length != rhs.max_length ||
      lhs.enum_values != rhs.enum_values || lhs.min_items != rhs.min_items ||
      lhs.max_items != rhs.max_items) {
    return false;
  }
  if (!lhs.items || !rhs.items) return lhs.items == rhs.items;
  return *lhs.items == *rhs.items;
}

/****************** JSON schema text ******************/

namespace {

void CheckBounds(std::optional<int64_t> lo, std::optional<int64_t> hi, const char* what) {
  if ((lo && *lo < 0) || (hi && *hi < 0)) {
    throw Error(ErrorKind::kInvalidGrammar, std::string("negative ") + what);
  }
  if (lo && hi && *lo > *hi) {
    throw Error(ErrorKind::kInvalidGrammar, std::string("inconsistent ") + what + " bounds");
  }
}

std::optional<int64_t> OptionalCount(const OrderedJson& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return j.at(key).get<int64_t>();
}

SchemaNode FromJson(const OrderedJson& j) {
  static const std::set<std::string> kKnown = {
      "type",      "properties", "required", "enum",     "minLength", "maxLength",
      "items",     "minItems",   "maxItems", "description", "title",
  };
  if (!j.is_object()) throw Error(ErrorKind::kUnsupportedKeyword, "schema must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.count(key)) throw Error(ErrorKind::kUnsupportedKeyword, key);
  }
  if (j.contains("enum")) {
    std::vector<std::string> values;
    for (const auto& v : j.at("enum")) values.push_back(v.dump());
    if (values.empty()) throw Error(ErrorKind::kInvalidGrammar, "empty enum");
    return SchemaNode::Enum(std::move(values));
  }
  if (!j.contains("type")) throw Error(ErrorKind::kUnsupportedKeyword, "missing type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "object") {
    std::vector<std::pair<std::string, SchemaNode>> props;
    if (j.contains("properties")) {
      for (const auto& [name, sub] : j.at("properties").items()) {
        props.emplace_back(name, FromJson(sub));
      }
    }
    return SchemaNode::Object(std::move(props));
  }
  if (type == "string") {
    auto lo = OptionalCount(j, "minLength"), hi = OptionalCount(j, "maxLength");
    CheckBounds(lo, hi, "length");
    return SchemaNode::Str(lo, hi);
  }
  if (type == "number") return SchemaNode::Num();
  if (type == "integer") return SchemaNode::Int();
  if (type == "boolean") return SchemaNode::Bool();
  if (type == "array") {
    if (!j.contains("items")) throw Error(ErrorKind::kUnsupportedKeyword, "array without items");
    auto lo = OptionalCount(j, "minItems"), hi = OptionalCount(j, "maxItems");
    CheckBounds(lo, hi, "item");
    return SchemaNode::Array(FromJson(j.at("items")), lo, hi);
  }
  throw Error(ErrorKind::kUnsupportedKeyword, "type " + type);
}

OrderedJson ToJson(const SchemaNode& s) {
  OrderedJson j = OrderedJson::object();
  switch (s.kind) {
    case SchemaNode::Kind::kObject: {
      j["type"] = "object";
      OrderedJson props = OrderedJson::object();
      for (const auto& [name, sub] : s.properties) props[name] = ToJson(sub);
      j["properties"] = props;
      break;
    }
    case SchemaNode::Kind::kStr:
      j["type"] = "string";
      if (s.min_length) j["minLength"] = *s.min_length;
      if (s.max_length) j["maxLength"] = *s.max_length;
      break;
    case SchemaNode::Kind::kNum:
      j["type"] = "number";
      break;
    case SchemaNode::Kind::kInt:
      j["type"] = "integer";
      break;
    case SchemaNode::Kind::kBool:
      j["type"] = "boolean";
      break;
    case SchemaNode::Kind::kEnum: {
      OrderedJson values = OrderedJson::array();
      for (const auto& v : s.enum_values) values.push_back(OrderedJson::parse(v));
      j["enum"] = values;
      break;
    }
    case SchemaNode::Kind::kArray:
      j["type"] = "array";
      j["items"] = ToJson(*s.items);
      if (s.min_items) j["minItems"] = *s.min_items;
      if (s.max_items) j["maxItems"] = *s.max_items;
      break;
  }
  return j;
}

}  // namespace

SchemaNode ParseSchema(const std::string& json_text) {
  try {
    return FromJson(OrderedJson::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kUnsupportedKeyword, e.what());
  }
}

std::string SchemaToJson(const SchemaNode& schema) { return ToJson(schema).dump(); }

/****************** Schema -> grammar ******************/

namespace {

std::string Sanitize(std::string_view name) {
  std::string out;
  for (char c : name) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  }
  return out.empty() ? "_" : out;
}

ExprPtr Lit(std::string s) { return RuleExpr::Bytes(std::move(s)); }

class SchemaBuilder {
 public:
  ExprPtr Build(const SchemaNode& s, const std::string& prefix) {
    switch (s.kind) {
      case SchemaNode::Kind::kStr:
        if (!s.min_length && !s.max_length) return Common("string");
        CheckBounds(s.min_length, s.max_length, "length");
        Common("char");
        return Define(prefix, RuleExpr::Sequence(
                                  {Lit("\""),
                                   RuleExpr::Repeat(RuleExpr::Ref("char"), s.min_length.value_or(0),
                                                    s.max_length.value_or(kUnbounded)),
                                   Lit("\"")}
                              ));
      case SchemaNode::Kind::kNum:
        return Common("number");
      case SchemaNode::Kind::kInt:
        return Common("integer");
      case SchemaNode::Kind::kBool:
        return Common("boolean");
      case SchemaNode::Kind::kEnum: {
        if (s.enum_values.empty()) throw Error(ErrorKind::kInvalidGrammar, "empty enum");
        std::vector<ExprPtr> alts;
        for (const auto& v : s.enum_values) alts.push_back(Lit(v));
        return alts.size() == 1 ? alts.front() : RuleExpr::Choice(std::move(alts));
      }
      case SchemaNode::Kind::kArray:
        return BuildArray(s, prefix);
      case SchemaNode::Kind::kObject:
        return BuildObject(s, prefix);
    }
    throw Error(ErrorKind::kUnsupportedKeyword, "schema kind");
  }

  ExprPtr Define(const std::string& name, ExprPtr body) {
    if (!names_.insert(name).second) {
      throw Error(ErrorKind::kInvalidGrammar, "rule name clash: " + name);
    }
    rules_.push_back({name, std::move(body)});
    return RuleExpr::Ref(name);
  }

  std::vector<Rule> TakeRules() { return std::move(rules_); }

 private:
  ExprPtr Common(const std::string& name) {
    if (names_.count(name)) return RuleExpr::Ref(name);
    if (name == "char") {
      Define("char", RuleExpr::Choice({RuleExpr::CharClass({{'"', '"'}, {'\\', '\\'}}, true),
                                       RuleExpr::Sequence({Lit("\\"), RuleExpr::CharClass(
                                                                          {{'"', '"'}, {'\\', '\\'}}
                                                                      )})}));
    } else if (name == "string") {
      Common("char");
      Define("string", RuleExpr::Sequence({Lit("\""), RuleExpr::Repeat(RuleExpr::Ref("char"), 0,
                                                                         kUnbounded),
                                           Lit("\"")}));
    } else if (name == "digits") {
      Define("digits", RuleExpr::Repeat(RuleExpr::CharClass({{'0', '9'}}), 1, kUnbounded));
    } else if (name == "integer") {
      Common("digits");
      Define("integer", RuleExpr::Sequence({RuleExpr::Choice({Lit("-"), RuleExpr::Empty()}),
                                            RuleExpr::Ref("digits")}));
    } else if (name == "number") {
      Common("digits");
      Define("number",
             RuleExpr::Sequence({RuleExpr::Choice({Lit("-"), RuleExpr::Empty()}),
                                 RuleExpr::Ref("digits"),
                                 RuleExpr::Choice({RuleExpr::Sequence({Lit("."), RuleExpr::Ref(
                                                                                     "digits"
                                                                                 )}),
                                                   RuleExpr::Empty()})}));
    } else if (name == "boolean") {
      Define("boolean", RuleExpr::Choice({Lit("true"), Lit("false")}));
    }
    return RuleExpr::Ref(name);
  }

  ExprPtr BuildArray(const SchemaNode& s, const std::string& prefix) {
    CheckBounds(s.min_items, s.max_items, "item");
    const int64_t lo = s.min_items.value_or(0);
    const std::optional<int64_t> hi = s.max_items;
    if (hi && *hi == 0) return Define(prefix, Lit("[]"));
    ExprPtr item = Build(*s.items, prefix + "_item");
    ExprPtr more = RuleExpr::Repeat(RuleExpr::Sequence({Lit(","), item}), std::max<int64_t>(lo - 1, 0),
                                    hi ? *hi - 1 : kUnbounded);
    ExprPtr list = RuleExpr::Sequence({item, more});
    if (lo == 0) list = RuleExpr::Choice({list, RuleExpr::Empty()});
    return Define(prefix, RuleExpr::Sequence({Lit("["), list, Lit("]")}));
  }

  ExprPtr BuildObject(const SchemaNode& s, const std::string& prefix) {
    std::vector<ExprPtr> items{Lit("{")};
    for (size_t i = 0; i < s.properties.size(); ++i) {
      const auto& [name, sub] = s.properties[i];
      OrderedJson key = name;
      items.push_back(Lit((i ? "," : "") + key.dump() + ":"));
      items.push_back(Build(sub, prefix + "_" + Sanitize(name)));
    }
    items.push_back(Lit("}"));
    return Define(prefix, RuleExpr::Sequence(std::move(items)));
  }

  std::vector<Rule> rules_;
  std::set<std::string> names_;
};

}  // namespace

Grammar SchemaToGrammar(const SchemaNode& schema) {
  SchemaBuilder builder;
  ExprPtr top = builder.Build(schema, "value");
  builder.Define("root", top);
  auto rules = builder.TakeRules();
  // Keep the root first so that printed grammars read top-down.
  std::rotate(rules.begin(), rules.end() - 1, rules.end());
  return Grammar(std::move(rules), "root");
}

Grammar BuildToolDispatch(const std::vector<ToolSpec>& tools, ToolFormat format) {
  if (tools.empty()) throw Error(ErrorKind::kNoTools, "at least one tool is required");
  std::set<std::string> names;
  for (const auto& t : tools) {
    if (t.name.empty()) throw Error(ErrorKind::kInvalidGrammar, "empty tool name");
    if (!names.insert(t.name).second) throw Error(ErrorKind::kDuplicateToolName, t.name);
  }
  SchemaBuilder builder;
  TagDispatchSpec spec;
  if (format == ToolFormat::kHarmonyLite) {
    TagDispatchSpec text;
    text.stop_strs = {"<|end|>"};
    text.loop_after_dispatch = false;
    builder.Define("free_text", RuleExpr::TagDispatch(text));
    spec.pairs.emplace_back("<|channel|>analysis<|message|>", "free_text");
    spec.pairs.emplace_back("<|channel|>final<|message|>", "free_text");
    spec.stop_strs = {"<|return|>"};
  }
  for (const auto& t : tools) {
    const std::string id = Sanitize(t.name);
    ExprPtr args = builder.Build(t.params, id + "_args");
    const bool llama = format == ToolFormat::kLlama;
    builder.Define("call_" + id,
                   RuleExpr::Sequence({args, Lit(llama ? "</function>" : "<|call|>")}));
    spec.pairs.emplace_back(
        llama ? "<function=" + t.name + ">"
              : "<|channel|>commentary to=functions." + t.name + "<|message|>",
        "call_" + id
    );
  }
  builder.Define("root", RuleExpr::TagDispatch(std::move(spec)));
  auto rules = builder.TakeRules();
  std::rotate(rules.begin(), rules.end() - 1, rules.end());
  Grammar g(std::move(rules), "root");
  ThrowIfInvalid(g);
  return g;
}

/****************** Synthetic tools ******************/

namespace {

std::vector<std::pair<std::string, SchemaNode>> Archetypes() {
  using S = SchemaNode;
  return {
      {"city", S::Str()},
      {"location", S::Str(1, 64)},
      {"unit", S::Enum({"\"celsius\"", "\"fahrenheit\""})},
      {"limit", S::Int()},
      {"count", S::Int()},
      {"query", S::Str(1, 128)},
      {"verbose", S::Bool()},
      {"tags", S::Array(S::Str(), 0, 5)},
      {"price", S::Num()},
      {"date", S::Str(10, 10)},
      {"ids", S::Array(S::Int(), 1, 3)},
      {"name", S::Str(0, 40)},
      {"lang", S::Enum({"\"en\"", "\"fr\"", "\"de\""})},
      {"page", S::Int()},
      {"include_archived", S::Bool()},
      {"coordinates", S::Object({{"lat", S::Num()}, {"lon", S::Num()}})},
      {"filter", S::Object({{"field", S::Str()}, {"value", S::Str()}})},
      {"sort", S::Enum({"\"asc\"", "\"desc\""})},
      {"amount", S::Num()},
      {"user_id", S::Int()},
      {"description", S::Str(0, 200)},
      {"priority", S::Enum({"\"low\"", "\"medium\"", "\"high\""})},
      {"recipients", S::Array(S::Str(3, 64), 1, 10)},
      {"text", S::Str()},
  };
}

}  // namespace

std::vector<ToolSpec> GenToolPool(int32_t n, uint64_t seed) {
  static const char* kVerbs[] = {"get", "search", "create", "update", "delete", "list",
                                 "send", "find", "book", "convert", "check", "fetch"};
  static const char* kNouns[] = {"weather", "flights", "hotel", "user", "order", "invoice",
                                 "email", "event", "stock", "news", "route", "file",
                                 "ticket", "recipe", "song", "account"};
  const auto archetypes = Archetypes();
  std::mt19937_64 rng(seed);
  std::vector<ToolSpec> out;
  std::set<std::string> names;
  for (int32_t i = 0; i < n; ++i) {
    std::string name = std::string(kVerbs[rng() % std::size(kVerbs)]) + "_" +
                       kNouns[rng() % std::size(kNouns)];
    if (!names.insert(name).second) {
      name += "_" + std::to_string(i);
      names.insert(name);
    }
    const size_t params = 1 + rng() % 6;
    std::vector<size_t> chosen;
    while (chosen.size() < params) {
      size_t pick = rng() % archetypes.size();
      if (std::find(chosen.begin(), chosen.end(), pick) == chosen.end()) chosen.push_back(pick);
    }
    std::vector<std::pair<std::string, SchemaNode>> props;
    for (size_t pick : chosen) props.push_back(archetypes[pick]);
    out.push_back({name, SchemaNode::Object(std::move(props))});
  }
  return out;
}

std::vector<ToolSpec> ParseToolSpecs(const std::string& json_text) {
  OrderedJson j;
  try {
    j = OrderedJson::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kUnsupportedKeyword, e.what());
  }
  if (!j.is_array()) throw Error(ErrorKind::kUnsupportedKeyword, "tool file must be an array");
  std::vector<ToolSpec> out;
  for (const auto& t : j) {
    out.push_back({t.at("name").get<std::string>(), FromJson(t.at("params"))});
  }
  return out;
}

std::string ToolSpecsToJson(const std::vector<ToolSpec>& tools) {
  OrderedJson j = OrderedJson::array();
  for (const auto& t : tools) j.push_back({{"name", t.name}, {"params", ToJson(t.params)}});
  return j.dump(2);
}

/****************** Sampling ******************/

std::string SampleJson(const SchemaNode& s, std::mt19937_64& rng) {
  constexpr std::string_view kChars = "abcdefghijklmnopqrstuvwxyzABC XYZ0123456789_-.,:{}[]";
  auto digits = [&](size_t max_len) {
    std::string d;
    size_t len = 1 + rng() % max_len;
    for (size_t i = 0; i < len; ++i) d += static_cast<char>('0' + rng() % 10);
    return d;
  };
  switch (s.kind) {
    case SchemaNode::Kind::kStr: {
      int64_t lo = s.min_length.value_or(0);
      int64_t hi = s.max_length.value_or(lo + 12);
      hi = std::min(hi, lo + 24);
      int64_t len = lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(hi - lo + 1));
      std::string out = "\"";
      for (int64_t i = 0; i < len; ++i) {
        switch (rng() % 16) {
          case 0:
            out += "\\\"";
            break;
          case 1:
            out += "\\\\";
            break;
          default:
            out += kChars[rng() % kChars.size()];
        }
      }
      return out + "\"";
    }
    case SchemaNode::Kind::kNum: {
      std::string out = rng() % 4 == 0 ? "-" : "";
      out += digits(4);
      if (rng() % 2) out += "." + digits(3);
      return out;
    }
    case SchemaNode::Kind::kInt:
      return (rng() % 4 == 0 ? "-" : "") + digits(5);
    case SchemaNode::Kind::kBool:
      return rng() % 2 ? "true" : "false";
    case SchemaNode::Kind::kEnum:
      return s.enum_values[rng() % s.enum_values.size()];
    case SchemaNode::Kind::kArray: {
      int64_t lo = s.min_items.value_or(0);
      int64_t hi = std::min(s.max_items.value_or(lo + 4), lo + 4);
      int64_t n = lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(hi - lo + 1));
      std::string out = "[";
      for (int64_t i = 0; i < n; ++i) out += (i ? "," : "") + SampleJson(*s.items, rng);
      return out + "]";
    }
    case SchemaNode::Kind::kObject: {
      std::string out = "{";
      for (size_t i = 0; i < s.properties.size(); ++i) {
        OrderedJson key = s.properties[i].first;
        out += (i ? "," : "") + key.dump() + ":" + SampleJson(s.properties[i].second, rng);
      }
      return out + "}";
    }
  }
  return "";
}

}  // namespace gramdash
