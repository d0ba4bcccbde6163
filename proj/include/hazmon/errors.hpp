#pragma once

#include <stdexcept>
#include <string>

namespace hazmon {

// routing instance cannot be served within any vehicle budget
class InfeasibleInstance : public std::runtime_error {
public:
    explicit InfeasibleInstance(const std::string& what) : std::runtime_error(what) {}
};

// exact solver called above its enumeration size caps
class InstanceTooLarge : public std::runtime_error {
public:
    explicit InstanceTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// turn rate or curvature requested where the speed is numerically zero
class DegenerateVelocity : public std::runtime_error {
public:
    explicit DegenerateVelocity(const std::string& what) : std::runtime_error(what) {}
};

// trajectory optimizer initial guess violates the budget beyond tolerance
class InfeasibleInit : public std::runtime_error {
public:
    explicit InfeasibleInit(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hazmon
