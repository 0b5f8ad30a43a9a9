#pragma once

/**
 * @file mesh.hpp
 * @brief Structured triangulations of the unit square and their DOF layout.
 *
 * Nodes are numbered lexicographically, x fastest: node (i, j) has index
 * j*(nx+1) + i. Every grid cell is split along its lower-left to upper-right
 * diagonal into two counter-clockwise triangles.
 */

#include <array>
#include <cstddef>
#include <vector>

namespace costa {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

using Triangle = std::array<int, 3>;

struct GridMesh {
    int nx = 0;
    int ny = 0;
    std::vector<Point2> nodes;
    std::vector<Triangle> elements;
    std::vector<int> boundary_nodes;  ///< sorted ascending

    int node_index(int i, int j) const { return j * (nx + 1) + i; }
    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }

    /// Signed area of element e (positive for counter-clockwise ordering).
    double signed_area(int e) const;
    bool is_boundary(int node) const;
};

/// Throws std::invalid_argument when nx or ny is not positive.
GridMesh build_grid_mesh(int nx, int ny);

/**
 * Interleaved displacement DOFs: node n owns DOFs 2n (x) and 2n+1 (y).
 * Interior and boundary DOFs are both kept in ascending global order.
 */
class DofMap {
public:
    static constexpr int dofs_per_node = 2;

    DofMap() = default;
    explicit DofMap(const GridMesh& mesh);

    /// Builds a map from an explicit boundary DOF list (used for synthetic systems).
    DofMap(int total_dofs, std::vector<int> boundary_dofs);

    static int dof(int node, int component) { return dofs_per_node * node + component; }

    int total() const { return total_; }
    int interior_count() const { return static_cast<int>(interior_.size()); }
    int boundary_count() const { return static_cast<int>(boundary_.size()); }

    const std::vector<int>& interior_dofs() const { return interior_; }
    const std::vector<int>& boundary_dofs() const { return boundary_; }

    /// Position of a global DOF inside interior_dofs(), or -1.
    int interior_slot(int dof) const { return interior_slot_[static_cast<std::size_t>(dof)]; }
    /// Position of a global DOF inside boundary_dofs(), or -1.
    int boundary_slot(int dof) const { return boundary_slot_[static_cast<std::size_t>(dof)]; }

private:
    void index_slots();

    int total_ = 0;
    std::vector<int> interior_;
    std::vector<int> boundary_;
    std::vector<int> interior_slot_;
    std::vector<int> boundary_slot_;
};

}  // namespace costa
