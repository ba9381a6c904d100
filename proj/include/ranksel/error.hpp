#pragma once

#include <stdexcept>
#include <string>

namespace ranksel {

/// Input data rejected by a validity check (non-finite values, bad shapes, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A caller broke a documented precondition (length mismatch, bad index).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A numerical routine could not produce a usable result.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw ContractViolation(msg);
}

inline void reject_if(bool cond, const std::string& msg)
{
    if (cond) throw InvalidInput(msg);
}

} // namespace detail
} // namespace ranksel
