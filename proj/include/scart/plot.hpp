#pragma once

#include <string>

#include "scart/dataset.hpp"

namespace scart {

// Top-down ground-truth path (x east, y north) with the attack window drawn in red.
std::string trajectory_svg(const LabeledRun& run);

// Navigator-side values of one sensor over time against the simulator-side values.
std::string sensor_svg(const LabeledRun& run, const SensorId& sensor);

}  // namespace scart
