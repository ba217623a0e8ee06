#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvldp {

template <typename Scalar>
using StateT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Coordinates of a state (or a V*-vector) in the basis of the owning space.
using State = StateT<double>;

/// Rejected input: bad dimensions, malformed configuration, violated preconditions.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A time stepper produced a non-finite state or tripped its stability guard.
class BlowUp : public std::runtime_error {
public:
    BlowUp(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw InvalidInput(message);
    }
}

}  // namespace mvldp
