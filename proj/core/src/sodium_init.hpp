#pragma once

#include <sodium.h>

#include <stdexcept>

namespace rfp::detail {

inline void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium failed to initialise");
    return true;
  }();
  (void)ready;
}

}  // namespace rfp::detail
