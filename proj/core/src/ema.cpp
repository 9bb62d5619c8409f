#include "icr/ema.hpp"

#include <cmath>
#include <string>

namespace icr {

ParamVector ema_update(const ParamVector& teacher, const ParamVector& student, double alpha) {
  if (teacher.values.size() != student.values.size()) {
    throw ShapeError("ema_update: teacher has " + std::to_string(teacher.values.size()) +
                     " parameters, student has " + std::to_string(student.values.size()));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("ema_update: alpha must lie in [0, 1]");
  ParamVector out;
  out.step = teacher.step + 1;
  out.values.resize(teacher.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = alpha * teacher.values[i] + (1.0 - alpha) * student.values[i];
  }
  return out;
}

double ema_closed_form(double teacher, double student, double alpha, std::uint64_t k) {
  const double ak = std::pow(alpha, static_cast<double>(k));
  return teacher * ak + student * (1.0 - ak);
}

void put_params(Container& c, const ParamVector& p) {
  std::vector<float> values(p.values.begin(), p.values.end());
  c.put_vector("params", std::move(values));
  c.attrs["step"] = p.step;
}

ParamVector params_from_container(const Container& c) {
  ParamVector p;
  const auto values = c.vector_f32("params");
  p.values.assign(values.begin(), values.end());
  for (double v : p.values) {
    if (!std::isfinite(v)) throw InvalidArgument("array 'params' has non-finite entries");
  }
  p.step = c.attrs.value("step", std::uint64_t{0});
  return p;
}

}  // namespace icr
