#pragma once

#include <stdexcept>
#include <string>

namespace qax {

// Base for every error raised by the library. `path` locates the offending
// element (a JSON path, a file, a qa id) when one exists.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, std::string path = {})
      : std::runtime_error(path.empty() ? what : what + " at " + path),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

#define QAX_DEFINE_ERROR(Name)      \
  class Name : public Error {       \
   public:                          \
    using Error::Error;             \
  }

// squad_format
QAX_DEFINE_ERROR(MalformedSyntax);
QAX_DEFINE_ERROR(SchemaViolation);
QAX_DEFINE_ERROR(InvariantViolation);

// text
QAX_DEFINE_ERROR(IndexOutOfRange);

// providers
QAX_DEFINE_ERROR(ProviderUnavailable);
QAX_DEFINE_ERROR(ProviderRejected);
QAX_DEFINE_ERROR(EmptyInput);
QAX_DEFINE_ERROR(DimensionMismatch);
QAX_DEFINE_ERROR(ZeroVector);
// Transport failure, 429 or 5xx: the retry loop may try again.
QAX_DEFINE_ERROR(ProviderTransient);

// aligner
QAX_DEFINE_ERROR(EmptyContext);
QAX_DEFINE_ERROR(NoFeasibleWindow);

// pipeline
QAX_DEFINE_ERROR(ChecksumMismatch);
QAX_DEFINE_ERROR(PipelineInterrupted);

// metrics
QAX_DEFINE_ERROR(UnknownQaId);

QAX_DEFINE_ERROR(InvalidArgument);

#undef QAX_DEFINE_ERROR

}  // namespace qax
