use std::collections::HashMap;

use super::coarse::{BoundaryTag, CoarseMesh};
use super::triangle::{dist, Triangle};
use crate::{Error, Point, Result};

/// An element of the two-level mesh: either an unrefined coarse element
/// (`depth == 0`) or a red-refinement subcell of its `parent`.
#[derive(Clone, Copy, Debug)]
pub struct Leaf {
    pub triangle: Triangle,
    pub parent: usize,
    pub depth: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary(BoundaryTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// A face of the skeleton. Interior faces are the full common segment of
/// exactly two leaves; `normal` points from `minus` to `plus` (outward on the
/// boundary).
#[derive(Clone, Copy, Debug)]
pub struct Face {
    pub endpoints: [Point; 2],
    pub kind: FaceKind,
    pub minus: usize,
    pub plus: Option<usize>,
    pub normal: Point,
    pub length: f64,
}

impl Face {
    pub fn point_at(&self, s: f64) -> Point {
        let [a, b] = self.endpoints;
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }
}

/// Coarse mesh whose elements are replaced by their depth-`marks[i]` red
/// refinement. Leaves are stored grouped by parent, each group in the nested
/// child order of [`CoarseMesh::refine_red`].
#[derive(Clone, Debug)]
pub struct TwoLevelMesh {
    coarse: CoarseMesh,
    marks: Vec<u32>,
    max_depth: u32,
    leaves: Vec<Leaf>,
    leaf_offsets: Vec<usize>,
    faces: Vec<Face>,
    leaf_face_offsets: Vec<usize>,
    leaf_face_list: Vec<(usize, Side)>,
    hanging_nodes: usize,
    fine: CoarseMesh,
}

/// Integer barycentric coordinates scaled by `2^depth`.
type Bary = [i64; 3];

impl TwoLevelMesh {
    pub fn build(coarse: CoarseMesh, marks: &[u32], max_depth: u32) -> Result<Self> {
        if marks.len() != coarse.num_elements() {
            return Err(Error::DimensionMismatch {
                expected: coarse.num_elements(),
                actual: marks.len(),
            });
        }
        if let Some((i, d)) = marks.iter().enumerate().find(|(_, &d)| d > max_depth) {
            return Err(Error::InvalidArgument(format!(
                "element {i} marked with depth {d} above the maximum {max_depth}"
            )));
        }
        if max_depth > 12 {
            return Err(Error::InvalidArgument(format!(
                "refinement depth {max_depth} is too large"
            )));
        }

        let mut leaves = Vec::new();
        let mut leaf_offsets = vec![0];
        let mut faces = Vec::new();
        // Per coarse local edge: segments (s0, s1, leaf) along the edge
        // parametrised from local vertex e to e + 1.
        let mut edge_segments: Vec<[Vec<(f64, f64, usize)>; 3]> = Vec::new();

        for (c, &depth) in marks.iter().enumerate() {
            let parent = coarse.triangle(c);
            let first = leaves.len();
            let local = refine_bary(depth);
            let n = 1i64 << depth;
            let to_point = |b: Bary| -> Point {
                let v = parent.vertices;
                let s = n as f64;
                [
                    (b[0] as f64 * v[0][0] + b[1] as f64 * v[1][0] + b[2] as f64 * v[2][0]) / s,
                    (b[0] as f64 * v[0][1] + b[1] as f64 * v[1][1] + b[2] as f64 * v[2][1]) / s,
                ]
            };
            for tri in &local {
                leaves.push(Leaf {
                    triangle: Triangle::new(to_point(tri[0]), to_point(tri[1]), to_point(tri[2])),
                    parent: c,
                    depth,
                });
            }

            let mut local_edges: HashMap<(Bary, Bary), Vec<usize>> = HashMap::new();
            for (j, tri) in local.iter().enumerate() {
                for e in 0..3 {
                    let (p, q) = (tri[e], tri[(e + 1) % 3]);
                    let key = if p < q { (p, q) } else { (q, p) };
                    local_edges.entry(key).or_default().push(first + j);
                }
            }
            let mut segments: [Vec<(f64, f64, usize)>; 3] = Default::default();
            let mut keys: Vec<_> = local_edges.keys().copied().collect();
            keys.sort_unstable();
            for key in keys {
                let owners = &local_edges[&key];
                let (p, q) = key;
                match owners.as_slice() {
                    &[a, b] => faces.push(oriented_face(
                        [to_point(p), to_point(q)],
                        FaceKind::Interior,
                        a,
                        Some(b),
                        &leaves,
                    )),
                    &[a] => {
                        let e = (0..3)
                            .find(|&e| p[(e + 2) % 3] == 0 && q[(e + 2) % 3] == 0)
                            .expect("unshared subcell edge lies on the parent boundary");
                        let s0 = p[(e + 1) % 3] as f64 / n as f64;
                        let s1 = q[(e + 1) % 3] as f64 / n as f64;
                        segments[e].push((s0.min(s1), s0.max(s1), a));
                    }
                    _ => unreachable!("red refinement is conforming"),
                }
            }
            edge_segments.push(segments);
            leaf_offsets.push(leaves.len());
        }

        let mut hanging_nodes = 0;
        for (eid, edge) in coarse.edges().iter().enumerate() {
            // Segments of each adjacent coarse element in the edge's canonical
            // parametrisation (from `vertices[0]` to `vertices[1]`).
            let sides: Vec<Vec<(f64, f64, usize)>> = edge
                .triangles
                .iter()
                .flatten()
                .map(|&t| {
                    let tri = coarse.triangles()[t];
                    let e = (0..3)
                        .find(|&e| coarse.triangle_edges(t)[e] == eid)
                        .expect("edge belongs to its triangle");
                    let forward = tri[e] == edge.vertices[0];
                    let mut segs: Vec<_> = edge_segments[t][e]
                        .iter()
                        .map(|&(s0, s1, leaf)| {
                            if forward {
                                (s0, s1, leaf)
                            } else {
                                (1.0 - s1, 1.0 - s0, leaf)
                            }
                        })
                        .collect();
                    segs.sort_by(|a, b| a.0.total_cmp(&b.0));
                    segs
                })
                .collect();
            let a = coarse.vertices()[edge.vertices[0]];
            let b = coarse.vertices()[edge.vertices[1]];
            let at = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            match (edge.tag, sides.as_slice()) {
                (Some(tag), [segs]) => {
                    for &(s0, s1, leaf) in segs {
                        faces.push(oriented_face(
                            [at(s0), at(s1)],
                            FaceKind::Boundary(tag),
                            leaf,
                            None,
                            &leaves,
                        ));
                    }
                }
                (None, [left, right]) => {
                    hanging_nodes += left.len().abs_diff(right.len());
                    let (mut i, mut j) = (0, 0);
                    while i < left.len() && j < right.len() {
                        let lo = left[i].0.max(right[j].0);
                        let hi = left[i].1.min(right[j].1);
                        if hi > lo {
                            faces.push(oriented_face(
                                [at(lo), at(hi)],
                                FaceKind::Interior,
                                left[i].2,
                                Some(right[j].2),
                                &leaves,
                            ));
                        }
                        if left[i].1 <= right[j].1 {
                            i += 1;
                        } else {
                            j += 1;
                        }
                    }
                }
                _ => unreachable!("mesh edges have one or two triangles"),
            }
        }

        let mut counts = vec![0usize; leaves.len() + 1];
        for f in &faces {
            counts[f.minus + 1] += 1;
            if let Some(p) = f.plus {
                counts[p + 1] += 1;
            }
        }
        for i in 0..leaves.len() {
            counts[i + 1] += counts[i];
        }
        let leaf_face_offsets = counts.clone();
        let mut fill = counts;
        let mut leaf_face_list = vec![(0, Side::Minus); leaf_face_offsets[leaves.len()]];
        for (id, f) in faces.iter().enumerate() {
            leaf_face_list[fill[f.minus]] = (id, Side::Minus);
            fill[f.minus] += 1;
            if let Some(p) = f.plus {
                leaf_face_list[fill[p]] = (id, Side::Plus);
                fill[p] += 1;
            }
        }

        let mut fine = coarse.clone();
        for _ in 0..max_depth {
            fine = fine.refine_red();
        }

        Ok(Self {
            coarse,
            marks: marks.to_vec(),
            max_depth,
            leaves,
            leaf_offsets,
            faces,
            leaf_face_offsets,
            leaf_face_list,
            hanging_nodes,
            fine,
        })
    }

    /// Every coarse element refined to the same depth.
    pub fn uniform(coarse: CoarseMesh, depth: u32) -> Result<Self> {
        let marks = vec![depth; coarse.num_elements()];
        Self::build(coarse, &marks, depth)
    }

    pub fn coarse(&self) -> &CoarseMesh {
        &self.coarse
    }

    pub fn marks(&self) -> &[u32] {
        &self.marks
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf indices inside coarse element `c`.
    pub fn leaves_of(&self, c: usize) -> std::ops::Range<usize> {
        self.leaf_offsets[c]..self.leaf_offsets[c + 1]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Faces adjacent to `leaf`, with the side the leaf occupies.
    pub fn faces_of(&self, leaf: usize) -> &[(usize, Side)] {
        &self.leaf_face_list[self.leaf_face_offsets[leaf]..self.leaf_face_offsets[leaf + 1]]
    }

    /// Leaves that are unrefined coarse elements (`S_H`).
    pub fn unrefined_leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.leaves.len()).filter(|&i| self.leaves[i].depth == 0)
    }

    /// Leaves that are proper subcells (`S_h`).
    pub fn subcells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.leaves.len()).filter(|&i| self.leaves[i].depth > 0)
    }

    pub fn hanging_node_count(&self) -> usize {
        self.hanging_nodes
    }

    pub fn min_leaf_diameter(&self) -> f64 {
        self.leaves
            .iter()
            .map(|l| l.triangle.diameter())
            .fold(f64::INFINITY, f64::min)
    }

    /// Conforming uniform refinement `T_h` of depth `max_depth`.
    pub fn fine_mesh(&self) -> &CoarseMesh {
        &self.fine
    }

    /// Leaf covering fine cell `f` of [`Self::fine_mesh`].
    pub fn leaf_of_fine_cell(&self, f: usize) -> usize {
        let per_coarse = 1usize << (2 * self.max_depth);
        let c = f / per_coarse;
        let local = f % per_coarse;
        let shift = 2 * (self.max_depth - self.marks[c]);
        self.leaf_offsets[c] + (local >> shift)
    }

    /// A leaf containing `x` (up to a small tolerance), if any.
    pub fn locate(&self, x: Point) -> Option<usize> {
        let c = (0..self.coarse.num_elements()).find(|&c| self.coarse.triangle(c).contains(x, 1e-12))?;
        self.leaves_of(c).find(|&l| self.leaves[l].triangle.contains(x, 1e-12))
    }

    /// Smallest admissible weak quasi-uniformity constant: the largest ratio
    /// of maximal to minimal subcell diameter inside one refined coarse
    /// element, or 1 when nothing is refined.
    pub fn weak_quasi_uniformity_ratio(&self) -> f64 {
        (0..self.coarse.num_elements())
            .filter(|&c| self.marks[c] > 0)
            .map(|c| {
                let d = self.leaves_of(c).map(|l| self.leaves[l].triangle.diameter());
                let (lo, hi) = d.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
                hi / lo
            })
            .fold(1.0, f64::max)
    }
}

/// Red refinement of the reference triangle to `depth`, in integer
/// barycentric coordinates scaled by `2^depth`.
fn refine_bary(depth: u32) -> Vec<[Bary; 3]> {
    let n = 1i64 << depth;
    let mut tris = vec![[[n, 0, 0], [0, n, 0], [0, 0, n]]];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(4 * tris.len());
        for [a, b, c] in tris {
            let mid = |p: Bary, q: Bary| [(p[0] + q[0]) / 2, (p[1] + q[1]) / 2, (p[2] + q[2]) / 2];
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        tris = next;
    }
    tris
}

fn oriented_face(
    endpoints: [Point; 2],
    kind: FaceKind,
    minus: usize,
    plus: Option<usize>,
    leaves: &[Leaf],
) -> Face {
    let [a, b] = endpoints;
    let length = dist(a, b);
    let mut normal = [(b[1] - a[1]) / length, -(b[0] - a[0]) / length];
    let centroid = leaves[minus].triangle.centroid();
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    if normal[0] * (mid[0] - centroid[0]) + normal[1] * (mid[1] - centroid[1]) < 0.0 {
        normal = [-normal[0], -normal[1]];
    }
    Face {
        endpoints,
        kind,
        minus,
        plus,
        normal,
        length,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_mesh;
    use approx::assert_relative_eq;

    fn level1() -> CoarseMesh {
        build_unit_square_mesh(1).unwrap()
    }

    #[test]
    fn unmarked_mesh_is_the_coarse_mesh() {
        let m = TwoLevelMesh::build(level1(), &[0, 0, 0, 0], 0).unwrap();
        assert_eq!(m.num_leaves(), 4);
        assert_eq!(m.hanging_node_count(), 0);
        assert_eq!(m.faces().len(), 8);
        assert_eq!(m.subcells().count(), 0);
    }

    #[test]
    fn single_marked_triangle() {
        let m = TwoLevelMesh::build(level1(), &[1, 0, 0, 0], 1).unwrap();
        assert_eq!(m.num_leaves(), 7);
        assert_eq!(m.unrefined_leaves().count(), 3);
        assert_eq!(m.subcells().count(), 4);
        // two coarse interior edges of element 0 carry one hanging node each
        assert_eq!(m.hanging_node_count(), 2);
        // interior: 3 inside element 0, 2 + 2 split, 2 coarse; boundary: 2 + 3
        let interior = m.faces().iter().filter(|f| f.plus.is_some()).count();
        let boundary = m.faces().len() - interior;
        assert_eq!(interior, 9);
        assert_eq!(boundary, 5);
    }

    #[test]
    fn uniform_marks_are_conforming() {
        for d in 0..3 {
            let m = TwoLevelMesh::uniform(build_unit_square_mesh(2).unwrap(), d).unwrap();
            assert_eq!(m.num_leaves(), 16 * 4usize.pow(d));
            assert_eq!(m.hanging_node_count(), 0);
        }
    }

    #[test]
    fn rejects_depth_above_maximum() {
        assert!(TwoLevelMesh::build(level1(), &[2, 0, 0, 0], 1).is_err());
        assert!(TwoLevelMesh::build(level1(), &[0, 0, 0], 1).is_err());
    }

    #[test]
    fn face_lengths_match_leaf_perimeters() {
        let m = TwoLevelMesh::build(build_unit_square_mesh(2).unwrap(), &[
            2, 0, 1, 0, 0, 0, 0, 3, 1, 1, 0, 0, 2, 0, 0, 0,
        ], 3)
        .unwrap();
        for (l, leaf) in m.leaves().iter().enumerate() {
            let perimeter: f64 = (0..3)
                .map(|e| dist(leaf.triangle.vertices[e], leaf.triangle.vertices[(e + 1) % 3]))
                .sum();
            let faces: f64 = m.faces_of(l).iter().map(|&(f, _)| m.faces()[f].length).sum();
            assert_relative_eq!(faces, perimeter, max_relative = 1e-12);
        }
    }

    #[test]
    fn quasi_uniformity_is_one_for_red_refinement() {
        let m = TwoLevelMesh::build(level1(), &[2, 0, 1, 0], 2).unwrap();
        assert_relative_eq!(m.weak_quasi_uniformity_ratio(), 1.0, epsilon = 1e-14);
        let none = TwoLevelMesh::build(level1(), &[0; 4], 0).unwrap();
        assert_eq!(none.weak_quasi_uniformity_ratio(), 1.0);
    }
}
