#pragma once

#include <stdexcept>
#include <string>

namespace beatrisk {

/// Every recoverable failure in the library surfaces as this type. The
/// message is a single line so the CLI can forward it verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace beatrisk
