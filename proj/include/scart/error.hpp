#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scart {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SCART_DEFINE_ERROR(Name)                    \
    class Name : public Error {                     \
    public:                                         \
        using Error::Error;                         \
    }

SCART_DEFINE_ERROR(OutOfOrderSample);
SCART_DEFINE_ERROR(NonFiniteSample);
SCART_DEFINE_ERROR(UnknownTopic);
SCART_DEFINE_ERROR(RemapConflict);
SCART_DEFINE_ERROR(RemapCycle);
SCART_DEFINE_ERROR(UnknownSensor);
SCART_DEFINE_ERROR(InvalidArgument);
SCART_DEFINE_ERROR(MissingSensor);
SCART_DEFINE_ERROR(WindowOutOfRange);
SCART_DEFINE_ERROR(AlreadyAttacked);
SCART_DEFINE_ERROR(SchemaError);
SCART_DEFINE_ERROR(IoFailure);
SCART_DEFINE_ERROR(TooShort);
SCART_DEFINE_ERROR(EmptyCohort);
SCART_DEFINE_ERROR(DetectorFailure);

#undef SCART_DEFINE_ERROR

// Parse failure in a text input; line is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, const std::string& what)
        : Error(source + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
          source_(std::move(source)),
          line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

}  // namespace scart
