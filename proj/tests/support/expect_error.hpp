#pragma once

#include <gtest/gtest.h>

#include "rpft/error.hpp"

namespace rpft::testing {

/// Runs `f` and returns the code of the rpft::Error it throws.
template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an rpft::Error";
  return ErrorCode::InvalidArgument;
}

}  // namespace rpft::testing
