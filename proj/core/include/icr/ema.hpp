#pragma once

#include <cstdint>
#include <vector>

#include "icr/container.hpp"

namespace icr {

inline constexpr double kDefaultEmaAlpha = 0.999;

/// Flat model parameters plus the number of EMA steps applied so far.
struct ParamVector {
  std::vector<double> values;
  std::uint64_t step = 0;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// teacher <- alpha * teacher + (1 - alpha) * student, step + 1.
ParamVector ema_update(const ParamVector& teacher, const ParamVector& student,
                       double alpha = kDefaultEmaAlpha);

/// Value after k updates toward a fixed student: t * a^k + s * (1 - a^k).
double ema_closed_form(double teacher, double student, double alpha, std::uint64_t k);

/// Stored as one f32 array "params"; the step count goes in attrs.step.
void put_params(Container& c, const ParamVector& p);
ParamVector params_from_container(const Container& c);

}  // namespace icr
