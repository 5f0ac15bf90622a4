#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qswitch
{
    // Bad user input: malformed config, out-of-range parameter, unknown name.
    // The CLI maps this to exit code 1.
    class ValidationError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // A precondition or invariant of an operation was broken at runtime.
    // The CLI maps this to exit code 2.
    class ContractViolation : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };

    // The requested slack leaves the capacity region.
    class InfeasibleEpsilon : public ValidationError
    {
    public:
        using ValidationError::ValidationError;
    };

    // select_T0 would need a period longer than the configured cap.
    class PeriodCapExceeded : public ValidationError
    {
    public:
        PeriodCapExceeded(std::int64_t required, std::int64_t cap)
            : ValidationError("required period T0 = " + std::to_string(required) +
                              " exceeds cap " + std::to_string(cap)),
              required_(required), cap_(cap)
        {
        }
        std::int64_t required() const noexcept { return required_; }
        std::int64_t cap() const noexcept { return cap_; }

    private:
        std::int64_t required_;
        std::int64_t cap_;
    };

    class InsufficientTrace : public ValidationError
    {
    public:
        using ValidationError::ValidationError;
    };

    // A simulation run stopped on a contract violation.
    class RunAborted : public ContractViolation
    {
    public:
        RunAborted(std::int64_t slot, const std::string& cause)
            : ContractViolation("run aborted at slot " + std::to_string(slot) + ": " + cause),
              slot_(slot)
        {
        }
        std::int64_t slot() const noexcept { return slot_; }

    private:
        std::int64_t slot_;
    };
}
