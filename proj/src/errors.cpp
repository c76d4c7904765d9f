#include "qkm/errors.hpp"

namespace qkm {

void fail_validation(const std::string& message) { throw ValidationError(message); }

}  // namespace qkm
