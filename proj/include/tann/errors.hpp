#pragma once

#include <stdexcept>
#include <string>

namespace tann {

// Exit-code category attached to every library error.
enum class ErrorKind {
  usage,  // bad arguments, bad config, unreadable paths
  data    // malformed or inconsistent input data
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define TANN_DEFINE_ERROR(Name, Kind)                                      \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

TANN_DEFINE_ERROR(IoError, usage)
TANN_DEFINE_ERROR(ArgumentError, usage)
TANN_DEFINE_ERROR(ConfigError, usage)
TANN_DEFINE_ERROR(FormatError, data)
TANN_DEFINE_ERROR(MismatchError, data)
TANN_DEFINE_ERROR(EmptyVocabularyError, data)
TANN_DEFINE_ERROR(ShapeError, data)
TANN_DEFINE_ERROR(GroupError, data)
TANN_DEFINE_ERROR(KeyMismatchError, data)
TANN_DEFINE_ERROR(WordNotCandidateError, data)
TANN_DEFINE_ERROR(DegenerateError, data)

#undef TANN_DEFINE_ERROR

}  // namespace tann
