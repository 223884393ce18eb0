#pragma once

#include <string>

#include "json.hpp"
#include "slaglab/grid.hpp"
#include "slaglab/operators.hpp"
#include "slaglab/rank.hpp"
#include "slaglab/solver.hpp"
#include "slaglab/viscosity.hpp"

namespace slaglab::cli {

using json = nlohmann::ordered_json;

json to_json(const SolveReport& r);
json to_json(const ProbeReport& r);
json to_json(const RankReport& r);
json to_json(const MinPrincipleReport& r, int n_dims);
json to_json(const SplitReport& r);
json to_json(const Hom2Audit& r);
json to_json(const ViscosityReport& r);
json to_json(const Node& node, int n_dims);

/// Field summary: geometry plus min/max of the values.
json describe(const GridField& f);

/// 2-D slice of a field: the whole field in 2-D, otherwise the plane
/// axis = value (nearest node). `spec` is "x=0", "y=0.5", "z=-1", or empty
/// for the central z plane.
struct Slice {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  ///< row-major
};
Slice slice_of(const GridField& f, const std::string& spec);

void write_csv(const std::string& path, const Slice& s);
/// 8-bit binary PGM, min → 0 and max → 255.
void write_pgm(const std::string& path, const Slice& s);

}  // namespace slaglab::cli
