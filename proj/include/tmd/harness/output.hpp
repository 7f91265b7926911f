#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmd/dynamics.hpp"
#include "tmd/types.hpp"

namespace tmd::harness {

/// Trajectory CSV: step,time,x_0..x_{n-1},residual_target,residual_natural,lyapunov.
/// Doubles carry 17 significant digits; lyapunov cells are empty when unset.
std::string trajectory_csv(const RunRecord& record);

/// Generic numeric table with a header row, same number formatting.
std::string table_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

nlohmann::json to_json(const Vector& v);

/// Creates parent directories as needed and replaces the file.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace tmd::harness
