use std::collections::HashMap;

use super::triangle::{midpoint, Triangle};
use crate::{Error, Point, Result};

/// Tag identifying the boundary segment an edge lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryTag(pub u32);

impl BoundaryTag {
    /// `x₂ = 0` of the unit square.
    pub const BOTTOM: BoundaryTag = BoundaryTag(0);
    /// `x₁ = 1`.
    pub const RIGHT: BoundaryTag = BoundaryTag(1);
    /// `x₂ = 1`.
    pub const TOP: BoundaryTag = BoundaryTag(2);
    /// `x₁ = 0`.
    pub const LEFT: BoundaryTag = BoundaryTag(3);

    /// Outward normal of the corresponding unit-square side.
    pub fn unit_square_normal(self) -> Option<Point> {
        match self {
            Self::BOTTOM => Some([0.0, -1.0]),
            Self::RIGHT => Some([1.0, 0.0]),
            Self::TOP => Some([0.0, 1.0]),
            Self::LEFT => Some([-1.0, 0.0]),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshEdge {
    /// Endpoint vertex indices, ascending.
    pub vertices: [usize; 2],
    /// Adjacent triangles; the second is `None` on the boundary.
    pub triangles: [Option<usize>; 2],
    pub tag: Option<BoundaryTag>,
}

/// A geometrically conforming triangulation with counterclockwise triangles.
#[derive(Clone, Debug)]
pub struct CoarseMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<MeshEdge>,
    /// Local edge `e` of a triangle joins its vertices `e` and `(e + 1) % 3`.
    triangle_edges: Vec<[usize; 3]>,
    level: u32,
}

impl CoarseMesh {
    /// Builds a mesh from raw connectivity. Boundary edges are tagged by
    /// `tag_of(a, b)` on their endpoint coordinates.
    pub fn from_triangles(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        level: u32,
        tag_of: impl Fn(Point, Point) -> BoundaryTag,
    ) -> Result<Self> {
        let boundary = boundary_pairs(&triangles)?;
        let tags = boundary
            .into_iter()
            .map(|(a, b)| ((a, b), tag_of(vertices[a], vertices[b])))
            .collect();
        Self::from_parts(vertices, triangles, level, &tags)
    }

    fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        level: u32,
        tags: &HashMap<(usize, usize), BoundaryTag>,
    ) -> Result<Self> {
        for (i, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {i} references a missing vertex"
                )));
            }
            let t = Triangle::new(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if t.signed_area() <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {i} is not counterclockwise or degenerate"
                )));
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<MeshEdge> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (i, tri) in triangles.iter().enumerate() {
            let mut local = [0; 3];
            for e in 0..3 {
                let key = sorted(tri[e], tri[(e + 1) % 3]);
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(MeshEdge {
                        vertices: [key.0, key.1],
                        triangles: [None, None],
                        tag: None,
                    });
                    edges.len() - 1
                });
                let edge = &mut edges[id];
                match edge.triangles {
                    [None, _] => edge.triangles[0] = Some(i),
                    [Some(_), None] => edge.triangles[1] = Some(i),
                    _ => {
                        return Err(Error::InvalidMesh(format!(
                            "edge ({}, {}) is shared by more than two triangles",
                            key.0, key.1
                        )))
                    }
                }
                local[e] = id;
            }
            triangle_edges.push(local);
        }
        for edge in &mut edges {
            if edge.triangles[1].is_none() {
                let key = (edge.vertices[0], edge.vertices[1]);
                edge.tag = Some(*tags.get(&key).ok_or_else(|| {
                    Error::InvalidMesh(format!("boundary edge {key:?} has no tag"))
                })?);
            }
        }
        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            level,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    pub fn triangle_edges(&self, element: usize) -> [usize; 3] {
        self.triangle_edges[element]
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle(&self, element: usize) -> Triangle {
        let [a, b, c] = self.triangles[element];
        Triangle::new(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Largest element diameter `H`.
    pub fn max_diameter(&self) -> f64 {
        (0..self.num_elements())
            .map(|i| self.triangle(i).diameter())
            .fold(0.0, f64::max)
    }

    /// Red (edge-midpoint) refinement. The children of triangle `i` are the
    /// triangles `4i..4i+4`, ordered as in [`Triangle::red_children`].
    pub fn refine_red(&self) -> CoarseMesh {
        let mut vertices = self.vertices.clone();
        let mut mid_of_edge = Vec::with_capacity(self.edges.len());
        for edge in &self.edges {
            let [a, b] = edge.vertices;
            vertices.push(midpoint(self.vertices[a], self.vertices[b]));
            mid_of_edge.push(vertices.len() - 1);
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (i, &[a, b, c]) in self.triangles.iter().enumerate() {
            let [eab, ebc, eca] = self.triangle_edges[i];
            let (ab, bc, ca) = (mid_of_edge[eab], mid_of_edge[ebc], mid_of_edge[eca]);
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut tags = HashMap::new();
        for (id, edge) in self.edges.iter().enumerate() {
            if let Some(tag) = edge.tag {
                let [a, b] = edge.vertices;
                let m = mid_of_edge[id];
                tags.insert(sorted(a, m), tag);
                tags.insert(sorted(m, b), tag);
            }
        }
        Self::from_parts(vertices, triangles, self.level + 1, &tags)
            .expect("red refinement of a valid mesh is valid")
    }
}

/// The unit square split by both diagonals (four triangles around the
/// centre), red-refined `level - 1` times.
pub fn build_unit_square_mesh(level: u32) -> Result<CoarseMesh> {
    if level < 1 {
        return Err(Error::InvalidArgument(format!(
            "mesh level must be at least 1, got {level}"
        )));
    }
    let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
    let triangles = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
    let mut mesh = CoarseMesh::from_triangles(vertices, triangles, 1, unit_square_tag)?;
    for _ in 1..level {
        mesh = mesh.refine_red();
    }
    Ok(mesh)
}

/// Side of the unit square containing the segment `a`–`b`.
pub fn unit_square_tag(a: Point, b: Point) -> BoundaryTag {
    let m = midpoint(a, b);
    let d = [m[1], 1.0 - m[0], 1.0 - m[1], m[0]];
    let side = (0..4)
        .min_by(|&i, &j| d[i].total_cmp(&d[j]))
        .unwrap_or(0);
    BoundaryTag(side as u32)
}

fn sorted(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn boundary_pairs(triangles: &[[usize; 3]]) -> Result<Vec<(usize, usize)>> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in triangles {
        for e in 0..3 {
            *count.entry(sorted(tri[e], tri[(e + 1) % 3])).or_default() += 1;
        }
    }
    let mut pairs: Vec<_> = count
        .into_iter()
        .filter(|&(_, c)| c == 1)
        .map(|(k, _)| k)
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}
