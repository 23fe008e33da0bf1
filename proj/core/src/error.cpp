#include "fundus/error.hpp"

namespace fundus {

DecodeError::DecodeError(const std::string& what, std::size_t offset)
    : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

ShapeError::ShapeError(const std::string& layer, const std::string& what)
    : Error(layer + ": " + what), layer_(layer) {}

MetricError::MetricError(const std::string& metric, const std::string& what)
    : Error(metric + " undefined: " + what), metric_(metric) {}

}  // namespace fundus
