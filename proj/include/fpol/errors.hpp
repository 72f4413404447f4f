#ifndef FPOL_ERRORS_HPP
#define FPOL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fpol {

// Failure of a numerical procedure (root finding, quadrature, inversion).
// Carries the name of the failing operation so the CLI can report it on
// stderr and exit with code 2.
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string operation, const std::string& message)
        : std::runtime_error(operation + ": " + message),
          operation_(std::move(operation)) {}

    const std::string& operation() const noexcept { return operation_; }

private:
    std::string operation_;
};

} // namespace fpol

#endif
