/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/error.h
 * \brief Error type shared by every module.
 */
#ifndef GRAMDASH_ERROR_H_
#define GRAMDASH_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace gramdash {

enum class ErrorKind {
  kSyntaxError,
  kUnknownRule,
  kNullableRepetitionBody,
  kInvalidGrammar,
  kDuplicateTag,
  kEmptyTag,
  kSubGrammarReject,
  kInvalidMarker,
  kNotScannable,
  kDuplicateId,
  kMissingEos,
  kMalformedLine,
  kIndexOutOfRange,
  kUnsupportedKeyword,
  kDuplicateToolName,
  kNoTools,
  kInvalidPrefix,
  kUnhashedReference,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/*! \brief Syntax error carrying a 1-based source location. */
class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, const std::string& message)
      : Error(
            ErrorKind::kSyntaxError,
            std::to_string(line) + ":" + std::to_string(column) + ": " + message
        ),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace gramdash

#endif  // GRAMDASH_ERROR_H_
