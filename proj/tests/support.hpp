#pragma once

#include <doctest.h>

#include <functional>

#include "cdfag/error.hpp"

/// Code of the cdfag::Error raised by `fn`; fails the test if none is thrown.
inline cdfag::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const cdfag::Error& e) {
    return e.code();
  }
  FAIL("expected a cdfag::Error");
  return cdfag::ErrorCode::IoError;
}
