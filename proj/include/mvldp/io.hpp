#pragma once

#include "mvldp/dynamics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mvldp::io {

/// Shortest decimal string that round-trips to the same double; "inf",
/// "-inf" and "nan" for non-finite values.
std::string format_number(double value);

/// In-memory CSV: provenance comment, header row, data rows.
class CsvTable {
public:
    CsvTable(std::string provenance, std::vector<std::string> columns);

    void add_row(const std::vector<std::string>& cells);
    void add_row(const std::vector<double>& values);

    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::string provenance_;
    std::size_t columns_;
    std::string body_;
};

/// Columns "t, x_0, ..., x_{d-1}" for every node of a trajectory.
CsvTable trajectory_table(const std::string& provenance, const Trajectory& path);

/// Columns "t, phi_0, ..." with one row per step at its left node.
CsvTable control_table(const std::string& provenance, const Control& control);

/// Writes `lines` (already serialized JSON objects) one per line.
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace mvldp::io
