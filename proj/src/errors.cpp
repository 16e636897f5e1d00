#include "dragkit/errors.hpp"

namespace dragkit {

namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::string message = "validation failed";
  for (const auto& v : violations) message += "\n  - " + v;
  return message;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace dragkit
