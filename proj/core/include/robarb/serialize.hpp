#pragma once

#include "robarb/grid.hpp"
#include "robarb/hjb.hpp"
#include "robarb/portfolio.hpp"
#include "robarb/sde.hpp"
#include "robarb/uncertainty.hpp"
#include "robarb/volstab.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace robarb {

using json = nlohmann::json;

// 17 significant digits, round-trip exact.
std::string format_double(double v);

json to_json(const Vec& v);
Vec vec_from_json(const json& j);

json to_json(const GridSpec& g);
GridSpec grid_spec_from_json(const json& j);
json to_json(const SimConfig& c);
json to_json(const SolverStats& s);
json to_json(const ConditionReport& r);
json to_json(const SufficiencyResult& r);
json to_json(const PolicyField& p);
json to_json(const ResidualReport& r);
json to_json(const ContainmentEstimate& e);
json to_json(const TrendReport& r);
json to_json(const WealthLedger& l);
json to_json(const GameValue& g);
json to_json(const SaddleReport& r);
json to_json(const OracleResult& r);
json to_json(const PathBundle& b); // summary only

// Header `<stem>.json` plus `<stem>_slice_<k>.csv` per retained level, one
// row per node (row-major, last axis fastest) with indices, log-coordinates
// and value. Returns the header path.
std::filesystem::path write_grid_function(const GridFunction& f, const std::filesystem::path& dir,
                                          const std::string& stem);
GridFunction read_grid_function(const std::filesystem::path& header);

// One CSV per quantity (row = path, column = observation).
void write_path_csv(const PathBundle& b, const std::filesystem::path& dir, const std::string& stem);

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_json(const std::filesystem::path& file, const json& j);

} // namespace robarb
