#include "rdtf/errors.hpp"

#include <sstream>

namespace rdtf {

namespace {

std::string spd_message(std::size_t node, double ev) {
  std::ostringstream msg;
  msg << "metric not positive definite at node " << node << " (smallest eigenvalue " << ev << ")";
  return msg.str();
}

std::string cfl_message(double requested, double suggested) {
  std::ostringstream msg;
  msg << "time step " << requested << " exceeds the stability limit; use dt <= " << suggested;
  return msg.str();
}

}  // namespace

SpdError::SpdError(std::size_t node, double smallest_eigenvalue)
    : Error(spd_message(node, smallest_eigenvalue)), node_(node), eigenvalue_(smallest_eigenvalue) {}

CflError::CflError(double requested, double suggested)
    : Error(cfl_message(requested, suggested)), suggested_(suggested) {}

}  // namespace rdtf
