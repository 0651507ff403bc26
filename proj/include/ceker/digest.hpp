#pragma once

#include <string>
#include <string_view>

namespace ceker {

// SHA-256 hex digest (lowercase, 64 chars). Backed by OpenSSL's EVP API;
// the test suite cross-checks it against an independent reference
// implementation.
std::string sha256_hex(std::string_view bytes);

} // namespace ceker
