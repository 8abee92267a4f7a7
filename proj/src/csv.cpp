#include "singheat/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace singheat {

namespace {

std::string fmt12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    return os;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const SpaceTimeGrid& grid,
                          const std::vector<double>* times) {
    auto os = open_out(path);
    os << "t";
    for (std::size_t i = 0; i < grid.nx(); ++i) os << ",x_" << (i + 1);
    os << "\n";
    for (std::size_t n = 0; n <= traj.nt(); ++n) {
        const double t = times ? (*times)[n] : grid.t(n);
        os << fmt12(t);
        for (double v : traj.row(n)) os << "," << fmt12(v);
        os << "\n";
    }
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    auto os = open_out(path);
    for (std::size_t j = 0; j < header.size(); ++j)
        os << (j ? "," : "") << header[j];
    os << "\n";
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j)
            os << (j ? "," : "") << fmt12(row[j]);
        os << "\n";
    }
}

void write_dat(const std::string& path, const std::vector<std::vector<double>>& rows) {
    auto os = open_out(path);
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j)
            os << (j ? " " : "") << fmt12(row[j]);
        os << "\n";
    }
}

std::vector<double> read_column_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open file: " + path);
    std::vector<double> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        double v;
        if (ls >> v) out.push_back(v);
    }
    return out;
}

}  // namespace singheat
