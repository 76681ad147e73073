#include "fdtr/model.hpp"

#include <fmt/format.h>

namespace fdtr {

ResponseCurve model_predict(const LinearModel& model, const DesignVector& x) {
  const std::size_t dim = model.dimension();
  if (x.size() != dim || model.center.size() != dim)
    throw Error(ErrorKind::Dimension,
                fmt::format("model_predict: model is {}-dimensional, x has {}",
                            dim, x.size()));
  std::vector<double> dx(dim);
  for (std::size_t d = 0; d < dim; ++d) dx[d] = x[d] - model.center[d];

  ResponseCurve out = model.center_response;
  for (std::size_t j = 0; j < out.size(); ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) acc += model.jacobian(j, d) * dx[d];
    out.r_db[j] += acc;
  }
  return out;
}

}  // namespace fdtr
