#include "milr/errors.hpp"

namespace milr {

int exit_code(const Error& e) { return static_cast<int>(e.kind()); }

}  // namespace milr
