#pragma once

#include <string>

#include <json.hpp>

#include "wishart/mle.hpp"
#include "wishart/pathstats.hpp"
#include "wishart/sim.hpp"
#include "wishart/types.hpp"

namespace wishart {

using Json = nlohmann::ordered_json;

// Matrices serialize as row-major nested arrays; all floats keep 17 significant
// digits so a written file reproduces the in-memory values exactly.
Json mat_to_json(const Mat& m);
Mat mat_from_json(const Json& j);

Json spec_to_json(const WishartSpec& spec);
WishartSpec spec_from_json(const Json& j);

Json stats_to_json(const PathStats& stats);
Json estimate_to_json(const Estimate& est);

// Header "t, X_11, X_12, ..., X_dd", one row per grid node, 17 significant digits.
void write_path_csv(const std::string& file, const SamplePath& path);
SamplePath read_path_csv(const std::string& file);

std::string format_double(double v);

}  // namespace wishart
