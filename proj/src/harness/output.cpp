#include "tmd/harness/output.hpp"

#include <filesystem>
#include <fstream>

#include "tmd/harness/config.hpp"

namespace tmd::harness {

std::string trajectory_csv(const RunRecord& record) {
  const Eigen::Index dim = record.samples.empty() ? 0 : record.samples.front().x.size();
  std::string out = "step,time";
  for (Eigen::Index i = 0; i < dim; ++i) out += ",x_" + std::to_string(i);
  out += ",residual_target,residual_natural,lyapunov\n";
  for (const Sample& s : record.samples) {
    out += std::to_string(s.step);
    out += ',' + format_double(s.time);
    for (Eigen::Index i = 0; i < dim; ++i) out += ',' + format_double(s.x[i]);
    out += ',' + format_double(s.target_residual);
    out += ',' + format_double(s.natural_residual);
    out += ',';
    if (s.lyapunov) out += format_double(*s.lyapunov);
    out += '\n';
  }
  return out;
}

std::string table_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw Error("table row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace tmd::harness
