#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qvi/fem.hpp"
#include "qvi/mesh.hpp"

namespace qvi {

/// Legacy ASCII VTK unstructured grid with per-triangle cell data.
void write_vtk(const std::string& path, const TriMesh& mesh,
               const std::vector<std::pair<std::string, const CellField*>>& scalars,
               const std::vector<std::pair<std::string, const CellVecField*>>& vectors);

} // namespace qvi
