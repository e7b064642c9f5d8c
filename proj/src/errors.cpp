#include "auditor/errors.hpp"

namespace auditor {

int exit_code_for(ErrorKind kind) noexcept
{
    return static_cast<int>(kind);
}

}  // namespace auditor
