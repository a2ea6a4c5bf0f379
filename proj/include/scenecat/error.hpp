#pragma once

#include <stdexcept>
#include <string>

namespace scenecat {

/// Precondition or contract violation in a library call.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data. Carries the offending source and
/// 1-based record number (0 when the problem is not tied to a record).
class DataError : public std::runtime_error {
 public:
  DataError(std::string source, std::size_t record, const std::string& what)
      : std::runtime_error(Format(source, record, what)),
        source_(std::move(source)),
        record_(record) {}

  const std::string& source() const { return source_; }
  std::size_t record() const { return record_; }

 private:
  static std::string Format(const std::string& source, std::size_t record,
                            const std::string& what) {
    std::string msg = source;
    if (record > 0) msg += ":" + std::to_string(record);
    return msg + ": " + what;
  }

  std::string source_;
  std::size_t record_;
};

}  // namespace scenecat
