#include "mvldp/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mvldp::io {

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) {
        throw std::runtime_error("format_number: conversion failed");
    }
    return std::string(buf.data(), ptr);
}

namespace {

std::string join(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            out.push_back(',');
        }
        out += cells[i];
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
}

}  // namespace

CsvTable::CsvTable(std::string provenance, std::vector<std::string> columns)
    : provenance_(std::move(provenance)), columns_(columns.size()), body_(join(columns) + "\n") {}

void CsvTable::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) {
        throw std::logic_error("csv row width does not match header");
    }
    body_ += join(cells);
    body_.push_back('\n');
}

void CsvTable::add_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) {
        cells.push_back(format_number(v));
    }
    add_row(cells);
}

std::string CsvTable::str() const { return "# " + provenance_ + "\n" + body_; }

void CsvTable::write(const std::filesystem::path& path) const { write_file(path, str()); }

CsvTable trajectory_table(const std::string& provenance, const Trajectory& path) {
    std::vector<std::string> columns{"t"};
    for (Eigen::Index j = 0; j < path.states.rows(); ++j) {
        columns.push_back("x_" + std::to_string(j));
    }
    CsvTable table(provenance, columns);
    std::vector<double> row(columns.size());
    for (Eigen::Index i = 0; i < path.states.cols(); ++i) {
        row[0] = path.grid.time(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < path.states.rows(); ++j) {
            row[static_cast<std::size_t>(j) + 1] = path.states(j, i);
        }
        table.add_row(row);
    }
    return table;
}

CsvTable control_table(const std::string& provenance, const Control& control) {
    std::vector<std::string> columns{"t"};
    for (Eigen::Index j = 0; j < control.rank(); ++j) {
        columns.push_back("phi_" + std::to_string(j));
    }
    CsvTable table(provenance, columns);
    std::vector<double> row(columns.size());
    for (std::size_t i = 0; i < control.grid().steps(); ++i) {
        row[0] = control.grid().time(i);
        for (Eigen::Index j = 0; j < control.rank(); ++j) {
            row[static_cast<std::size_t>(j) + 1] = control.values()(static_cast<Eigen::Index>(i), j);
        }
        table.add_row(row);
    }
    return table;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::string content;
    for (const auto& line : lines) {
        content += line;
        content.push_back('\n');
    }
    write_file(path, content);
}

}  // namespace mvldp::io
