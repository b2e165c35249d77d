#ifndef REWEAVE_ERROR_H
#define REWEAVE_ERROR_H

#include <stdexcept>
#include <string>

namespace reweave {

// Broad classes of failure. The command line tool maps these onto exit codes.
enum class ErrorKind {
  kInvalidArgument,  // caller passed something outside an operation's domain
  kConfig,           // experiment configuration does not validate
  kData,             // input files or derived data are unusable
  kRuntime,          // a numerical procedure failed (divergence, LP trouble)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the file parsers; carries the 1-based line (and column when
// known) at which parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column = 0)
      : Error(ErrorKind::kData, Format(what, line, column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string Format(const std::string& what, int line, int column) {
    std::string out = "line " + std::to_string(line);
    if (column > 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  int line_;
  int column_;
};

}  // namespace reweave

#endif  // REWEAVE_ERROR_H
