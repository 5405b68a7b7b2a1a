#include "qvi/vtk.hpp"

#include <fstream>

#include "qvi/csv.hpp"
#include "qvi/errors.hpp"

namespace qvi {

void write_vtk(const std::string& path, const TriMesh& mesh,
               const std::vector<std::pair<std::string, const CellField*>>& scalars,
               const std::vector<std::pair<std::string, const CellVecField*>>& vectors) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path);
    os << "# vtk DataFile Version 3.0\nqvi-fem fields\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.n_vertices() << " double\n";
    for (const auto& v : mesh.vertices) os << format_g17(v.x) << " " << format_g17(v.y) << " 0\n";
    os << "CELLS " << mesh.n_triangles() << " " << 4 * mesh.n_triangles() << "\n";
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    os << "CELL_TYPES " << mesh.n_triangles() << "\n";
    for (int t = 0; t < mesh.n_triangles(); ++t) os << "5\n";
    if (scalars.empty() && vectors.empty()) return;
    os << "CELL_DATA " << mesh.n_triangles() << "\n";
    for (const auto& [name, field] : scalars) {
        os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int t = 0; t < mesh.n_triangles(); ++t) os << format_g17(field->values[t]) << "\n";
    }
    for (const auto& [name, field] : vectors) {
        os << "VECTORS " << name << " double\n";
        for (int t = 0; t < mesh.n_triangles(); ++t)
            os << format_g17(field->values(t, 0)) << " " << format_g17(field->values(t, 1)) << " 0\n";
    }
    if (!os) throw IoError("write failed: " + path);
}

} // namespace qvi
