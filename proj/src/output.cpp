#include "rvmlab/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rvmlab {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_branch_csv(const std::string& path, const EquilibriumBranch& branch) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "K,residual,phi_inf,a_inf,min_phi,jac_cond,stop_reason\n";
    for (size_t i = 0; i < branch.entries.size(); ++i) {
        const BranchEntry& e = branch.entries[i];
        out << fmt17(e.K) << ',' << fmt17(e.residual_norm) << ',' << fmt17(e.phi_inf_norm) << ','
            << fmt17(e.a_inf_norm) << ',' << fmt17(e.min_phi) << ','
            << fmt17(e.jacobian_condition_estimate) << ','
            << (i + 1 == branch.entries.size() ? branch.stop_reason : "") << '\n';
    }
}

void write_fields_csv(const std::string& path, const MeridianGrid& grid,
                      const FieldPair& fields) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "r,z,phi,a_phi\n";
    for (int j = 0; j < grid.n_z; ++j)
        for (int i = 0; i < grid.n_r; ++i) {
            int k = grid.idx(i, j);
            out << fmt17(grid.r(i)) << ',' << fmt17(grid.z(j)) << ',' << fmt17(fields.phi[k])
                << ',' << fmt17(fields.a_phi[k]) << '\n';
        }
}

FieldPair read_fields_csv(const std::string& path, const MeridianGrid& grid) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);   // header
    FieldPair f = FieldPair::zero(grid);
    int k = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (k >= grid.n_nodes()) throw std::runtime_error(path + ": too many rows");
        std::stringstream ss(line);
        std::string cell;
        double vals[4];
        for (int c = 0; c < 4; ++c) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error(path + ": short row");
            vals[c] = std::stod(cell);
        }
        f.phi[k] = vals[2];
        f.a_phi[k] = vals[3];
        ++k;
    }
    if (k != grid.n_nodes()) throw std::runtime_error(path + ": row count does not match grid");
    return f;
}

void write_stability_csv(const std::string& path, const std::vector<StabilityReport>& reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "K,q_lower_min,q_upper_min,margin,verdict\n";
    for (const StabilityReport& r : reports) {
        out << fmt17(r.K) << ',' << fmt17(r.q_lower_min) << ',' << fmt17(r.q_upper_min) << ','
            << fmt17(r.margin.total) << ',' << to_string(r.verdict) << '\n';
    }
}

std::string fields_filename(double K) {
    std::ostringstream ss;
    ss << "fields_K" << fmt17(K) << ".csv";
    return ss.str();
}

}  // namespace rvmlab
