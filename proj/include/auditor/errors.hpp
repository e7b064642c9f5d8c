#pragma once

#include <stdexcept>
#include <string>

namespace auditor {

/// Broad failure class; the CLI maps it to a process exit code.
enum class ErrorKind {
    Usage = 1,
    Data = 2,
    Remote = 3,
};

class AuditorError : public std::runtime_error {
public:
    AuditorError(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define AUDITOR_DATA_ERROR(Name)                                              \
    class Name : public AuditorError {                                        \
    public:                                                                   \
        explicit Name(const std::string& what)                                \
            : AuditorError(ErrorKind::Data, #Name ": " + what) {}             \
    }

AUDITOR_DATA_ERROR(MalformedBundle);
AUDITOR_DATA_ERROR(UnknownEntity);
AUDITOR_DATA_ERROR(SchemaViolation);
AUDITOR_DATA_ERROR(DuplicateName);
AUDITOR_DATA_ERROR(InvalidScore);
AUDITOR_DATA_ERROR(UnknownDataset);
AUDITOR_DATA_ERROR(KeyMismatch);
AUDITOR_DATA_ERROR(EmptyMatrix);
AUDITOR_DATA_ERROR(IoFailure);

#undef AUDITOR_DATA_ERROR

class UnknownCombiner : public AuditorError {
public:
    explicit UnknownCombiner(const std::string& name)
        : AuditorError(ErrorKind::Usage, "UnknownCombiner: " + name) {}
};

class UsageError : public AuditorError {
public:
    explicit UsageError(const std::string& what) : AuditorError(ErrorKind::Usage, what) {}
};

class ServiceUnavailable : public AuditorError {
public:
    explicit ServiceUnavailable(const std::string& what)
        : AuditorError(ErrorKind::Remote, "ServiceUnavailable: " + what) {}
};

int exit_code_for(ErrorKind kind) noexcept;

}  // namespace auditor
