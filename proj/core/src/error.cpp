#include "robarb/error.hpp"

namespace robarb {

Error::Error(std::string context, const std::string& what)
    : std::runtime_error(context + ": " + what), context_(std::move(context)) {}

CflError::CflError(std::string context, const std::string& what, long required_steps)
    : Error(std::move(context), what), required_steps_(required_steps) {}

} // namespace robarb
