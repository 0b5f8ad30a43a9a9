#include "costa/mesh.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace costa {

double GridMesh::signed_area(int e) const
{
    const auto& t = elements[static_cast<std::size_t>(e)];
    const Point2& a = nodes[static_cast<std::size_t>(t[0])];
    const Point2& b = nodes[static_cast<std::size_t>(t[1])];
    const Point2& c = nodes[static_cast<std::size_t>(t[2])];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

bool GridMesh::is_boundary(int node) const
{
    return std::binary_search(boundary_nodes.begin(), boundary_nodes.end(), node);
}

GridMesh build_grid_mesh(int nx, int ny)
{
    if (nx < 1 || ny < 1) {
        throw std::invalid_argument("build_grid_mesh: element counts must be positive, got " +
                                    std::to_string(nx) + "x" + std::to_string(ny));
    }

    GridMesh mesh;
    mesh.nx = nx;
    mesh.ny = ny;
    mesh.nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            mesh.nodes.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny});
            if (i == 0 || j == 0 || i == nx || j == ny) {
                mesh.boundary_nodes.push_back(mesh.node_index(i, j));
            }
        }
    }

    mesh.elements.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int n00 = mesh.node_index(i, j);
            const int n10 = mesh.node_index(i + 1, j);
            const int n11 = mesh.node_index(i + 1, j + 1);
            const int n01 = mesh.node_index(i, j + 1);
            mesh.elements.push_back({n00, n10, n11});
            mesh.elements.push_back({n00, n11, n01});
        }
    }
    return mesh;
}

DofMap::DofMap(const GridMesh& mesh) : total_(dofs_per_node * mesh.node_count())
{
    std::vector<bool> fixed(static_cast<std::size_t>(total_), false);
    for (int n : mesh.boundary_nodes) {
        for (int c = 0; c < dofs_per_node; ++c) {
            fixed[static_cast<std::size_t>(dof(n, c))] = true;
        }
    }
    for (int d = 0; d < total_; ++d) {
        (fixed[static_cast<std::size_t>(d)] ? boundary_ : interior_).push_back(d);
    }
    index_slots();
}

DofMap::DofMap(int total_dofs, std::vector<int> boundary_dofs) : total_(total_dofs)
{
    if (total_dofs < 0) {
        throw std::invalid_argument("DofMap: negative DOF count");
    }
    std::sort(boundary_dofs.begin(), boundary_dofs.end());
    boundary_dofs.erase(std::unique(boundary_dofs.begin(), boundary_dofs.end()), boundary_dofs.end());
    for (int d : boundary_dofs) {
        if (d < 0 || d >= total_dofs) {
            throw std::invalid_argument("DofMap: boundary DOF " + std::to_string(d) + " out of range");
        }
    }
    boundary_ = std::move(boundary_dofs);
    for (int d = 0; d < total_; ++d) {
        if (!std::binary_search(boundary_.begin(), boundary_.end(), d)) {
            interior_.push_back(d);
        }
    }
    index_slots();
}

void DofMap::index_slots()
{
    interior_slot_.assign(static_cast<std::size_t>(total_), -1);
    boundary_slot_.assign(static_cast<std::size_t>(total_), -1);
    for (std::size_t s = 0; s < interior_.size(); ++s) {
        interior_slot_[static_cast<std::size_t>(interior_[s])] = static_cast<int>(s);
    }
    for (std::size_t s = 0; s < boundary_.size(); ++s) {
        boundary_slot_[static_cast<std::size_t>(boundary_[s])] = static_cast<int>(s);
    }
}

}  // namespace costa
