#pragma once

#include <stdexcept>
#include <string>

namespace zfmaser {

/// Bad argument, malformed file or schema violation. The CLI maps this to exit code 1.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Q-circle diameters that do not describe a realizable reflection locus.
class InvalidGeometry : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// tau_isc < tau_f, which would push the triplet yield above one.
class InconsistentLifetimes : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Base for failures of a numerical method on otherwise valid input (CLI exit code 2).
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Step size underflow or step budget exhausted inside the ODE integrator.
class IntegrationFailure : public NumericalFailure {
public:
    IntegrationFailure(const std::string& what, double last_good_time)
        : NumericalFailure(what), last_good_time_(last_good_time) {}

    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

/// A fit model produced a non-finite prediction.
class ModelEvaluationError : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

/// No spectral line stands out of the noise floor of a burst segment.
class NoOscillation : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

}  // namespace zfmaser
