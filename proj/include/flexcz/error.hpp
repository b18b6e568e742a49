#ifndef FLEXCZ_ERROR_HPP_
#define FLEXCZ_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace flexcz
{

/// Error categories. The CLI maps these onto process exit codes.
enum class ErrorKind
{
    dimension,          // mismatched sizes in an API call
    schema,             // malformed input document
    infeasible,         // empty feasible set
    unbounded,          // unbounded LP or coordinate
    numerical,          // solver breakdown or bounds bug (d_m < 0)
    row_cap,            // Fourier-Motzkin blow-up
};

inline const char* to_string(ErrorKind k)
{
    switch (k)
    {
        case ErrorKind::dimension: return "dimension";
        case ErrorKind::schema: return "schema";
        case ErrorKind::infeasible: return "infeasible";
        case ErrorKind::unbounded: return "unbounded";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::row_cap: return "row_cap";
    }
    return "unknown";
}

class Error : public std::runtime_error
{
    public:
        Error(ErrorKind kind, const std::string& what)
            : std::runtime_error(what), kind_(kind)
        {
        }

        ErrorKind kind() const noexcept { return kind_; }

    private:
        ErrorKind kind_;
};

class DimensionError : public Error
{
    public:
        explicit DimensionError(const std::string& what) : Error(ErrorKind::dimension, what) {}
};

class SchemaError : public Error
{
    public:
        explicit SchemaError(const std::string& what) : Error(ErrorKind::schema, what) {}
};

class InfeasibleError : public Error
{
    public:
        explicit InfeasibleError(const std::string& what) : Error(ErrorKind::infeasible, what) {}
};

class UnboundedError : public Error
{
    public:
        explicit UnboundedError(const std::string& what) : Error(ErrorKind::unbounded, what) {}
};

class NumericalError : public Error
{
    public:
        explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Raised by halfspace intersection when the halfspace misses the interval
/// hull of the current generators (d_m < 0).
class EmptyIntersectionError : public NumericalError
{
    public:
        explicit EmptyIntersectionError(const std::string& what) : NumericalError(what) {}
};

class RowCapError : public Error
{
    public:
        explicit RowCapError(const std::string& what) : Error(ErrorKind::row_cap, what) {}
};

} // namespace flexcz

#endif
