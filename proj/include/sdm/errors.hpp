#ifndef SDM_ERRORS_HPP
#define SDM_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdm {

/// Stable error taxonomy. The numeric values travel across rank boundaries
/// when a collective turns one rank's failure into a job-wide failure, so
/// they must stay dense and append-only.
enum class ErrorKind : std::uint32_t {
    None = 0,
    Validation,
    Conflict,
    NotFound,
    Lifecycle,
    State,
    Bounds,
    Io,
    CatalogCorrupt,
    HistoryCorrupt,
    Collective,
    Usage,
    VerifyMismatch,
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct ConflictError : Error {
    explicit ConflictError(const std::string& m) : Error(ErrorKind::Conflict, m) {}
};
struct NotFoundError : Error {
    explicit NotFoundError(const std::string& m) : Error(ErrorKind::NotFound, m) {}
};
struct LifecycleError : Error {
    explicit LifecycleError(const std::string& m) : Error(ErrorKind::Lifecycle, m) {}
};
struct StateError : Error {
    explicit StateError(const std::string& m) : Error(ErrorKind::State, m) {}
};
struct BoundsError : Error {
    explicit BoundsError(const std::string& m) : Error(ErrorKind::Bounds, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};
struct CatalogCorruptError : Error {
    explicit CatalogCorruptError(const std::string& m) : Error(ErrorKind::CatalogCorrupt, m) {}
};
struct HistoryCorruptError : Error {
    explicit HistoryCorruptError(const std::string& m) : Error(ErrorKind::HistoryCorrupt, m) {}
};
struct CollectiveError : Error {
    explicit CollectiveError(const std::string& m) : Error(ErrorKind::Collective, m) {}
};
struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error(ErrorKind::Usage, m) {}
};
struct VerifyMismatchError : Error {
    explicit VerifyMismatchError(const std::string& m) : Error(ErrorKind::VerifyMismatch, m) {}
};
struct InternalError : Error {
    explicit InternalError(const std::string& m) : Error(ErrorKind::Internal, m) {}
};

/// Rebuild the typed exception that matches `kind`. Used when a failure is
/// re-raised on ranks other than the one that hit it.
[[noreturn]] void throw_error(ErrorKind kind, const std::string& what);

const char* error_kind_name(ErrorKind kind);

} // namespace sdm

#endif
