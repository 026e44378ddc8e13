#pragma once

#include <stdexcept>
#include <string>

namespace autodetect {

// Base for every data/model failure raised by the library. The CLI maps
// these to exit code 2; usage errors never derive from it.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace autodetect
