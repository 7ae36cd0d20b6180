#pragma once

#include <stdexcept>
#include <string>

namespace dcflex {

// No eligible voltage-source node is left to define the DC bus voltage.
class BusCollapse : public std::runtime_error {
public:
    explicit BusCollapse(const std::string& what) : std::runtime_error(what) {}
};

// A curve-shift command reached a node that cannot act on it.
class CommandRejected : public std::runtime_error {
public:
    explicit CommandRejected(const std::string& what) : std::runtime_error(what) {}
};

// Structural problem in a scenario file: malformed JSON, missing or
// mistyped field. Unknown keys are reported as violations instead.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dcflex
