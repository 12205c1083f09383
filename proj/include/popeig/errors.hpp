#pragma once

#include <stdexcept>
#include <string>

namespace popeig {

// Error taxonomy: input errors are caller mistakes (bad model, bad file),
// numerical errors are solver failures on structurally valid input.
// The CLI maps them to distinct exit codes.

class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class InputError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace popeig
