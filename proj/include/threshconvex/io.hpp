#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "threshconvex/arrangements.hpp"
#include "threshconvex/network.hpp"
#include "threshconvex/solver.hpp"
#include "threshconvex/ste.hpp"

namespace threshconvex {

// JSON codecs. Doubles survive round trips exactly (shortest-representation
// printing).
nlohmann::json to_json(const ThresholdNetwork& net);
ThresholdNetwork network_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ConvexSolution& sol);
ConvexSolution solution_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SteConfig& cfg);
SteConfig ste_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainTrace& trace);
TrainTrace trace_from_json(const nlohmann::json& j);

// Arrangement text format: header "n P layer", then P lines of n '0'/'1'
// characters (one pattern per line). Witnesses go to an optional CSV
// sidecar: "pattern,w_0,...,w_{d-1}" per row.
std::string arrangement_to_text(const ArrangementMatrix& arr);
ArrangementMatrix arrangement_from_text(const std::string& text);
std::string witnesses_to_csv(const ArrangementMatrix& arr);
void attach_witnesses_from_csv(ArrangementMatrix& arr, const std::string& csv);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace threshconvex
