#ifndef KOSTANT_ERROR_HPP
#define KOSTANT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace kostant
{

// Stable, machine-readable failure codes. The string form is part of the
// report schema and must not change between versions.
enum class error_code {
    arity_mismatch,
    order_mismatch,
    index_out_of_range,
    invalid_spec,
    undefined_on_axes,
    nonzero_constant_term,
    quadrature_failure,
    degree_overflow,
    not_closed,
    unsolvable_factor,
    precondition_violated,
    postcondition_violated,
    evaluation_failure,
    parse_error,
    schema_error,
    model_error,
    residual_exceeded,
};

constexpr std::string_view to_string(error_code c) noexcept
{
    switch (c) {
        case error_code::arity_mismatch:
            return "ARITY_MISMATCH";
        case error_code::order_mismatch:
            return "ORDER_MISMATCH";
        case error_code::index_out_of_range:
            return "INDEX_OUT_OF_RANGE";
        case error_code::invalid_spec:
            return "INVALID_SPEC";
        case error_code::undefined_on_axes:
            return "UNDEFINED_ON_AXES";
        case error_code::nonzero_constant_term:
            return "NONZERO_CONSTANT_TERM";
        case error_code::quadrature_failure:
            return "QUADRATURE_FAILURE";
        case error_code::degree_overflow:
            return "DEGREE_OVERFLOW";
        case error_code::not_closed:
            return "NOT_CLOSED";
        case error_code::unsolvable_factor:
            return "UNSOLVABLE_FACTOR";
        case error_code::precondition_violated:
            return "PRECONDITION_VIOLATED";
        case error_code::postcondition_violated:
            return "POSTCONDITION_VIOLATED";
        case error_code::evaluation_failure:
            return "EVALUATION_FAILURE";
        case error_code::parse_error:
            return "PARSE_ERROR";
        case error_code::schema_error:
            return "SCHEMA_ERROR";
        case error_code::model_error:
            return "MODEL_ERROR";
        case error_code::residual_exceeded:
            return "RESIDUAL_EXCEEDED";
    }
    return "UNKNOWN";
}

class error : public std::runtime_error
{
public:
    error(error_code code, const std::string &what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] error_code code() const noexcept
    {
        return code_;
    }

private:
    error_code code_;
};

} // namespace kostant

#endif
