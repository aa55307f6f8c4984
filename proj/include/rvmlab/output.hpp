#ifndef RVMLAB_OUTPUT_HPP
#define RVMLAB_OUTPUT_HPP

#include <string>
#include <vector>

#include "rvmlab/geometry.hpp"
#include "rvmlab/solver.hpp"
#include "rvmlab/stability.hpp"

namespace rvmlab {

// 17 significant digits, locale-independent; round-trips exactly
std::string fmt17(double v);

void write_branch_csv(const std::string& path, const EquilibriumBranch& branch);
void write_fields_csv(const std::string& path, const MeridianGrid& grid, const FieldPair& fields);
FieldPair read_fields_csv(const std::string& path, const MeridianGrid& grid);
void write_stability_csv(const std::string& path, const std::vector<StabilityReport>& reports);

std::string fields_filename(double K);

}  // namespace rvmlab

#endif
