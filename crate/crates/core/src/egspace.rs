//! The enriched space `V^k_{ℓ,m} = (P_k(T_H) ∩ C) + P_ℓ(T_H) + P_m(T_{H|h})`
//! represented by a redundant generating system.
//!
//! Coefficients are laid out as `[CG nodal dofs | P_ℓ modal dofs per coarse
//! element | P_m modal dofs per leaf]`. Every generator restricted to a leaf
//! is a polynomial of degree at most `k`, so the space embeds exactly into
//! the broken modal space `P_k` on the leaves, and from there into `P_k` on
//! the conforming fine mesh.

use std::fmt;

use crate::mesh::{Triangle, TwoLevelMesh};
use crate::polybasis::{cell_rule, dim, ReferenceBasis};
use crate::{par, Error, Point, Result};

/// Polynomial degrees `k` (continuous part), `ℓ` (coarse broken part) and
/// `m` (subcell broken part); `None` stands for an absent component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Degrees {
    pub k: usize,
    pub l: Option<usize>,
    pub m: Option<usize>,
}

impl Degrees {
    /// Integer form with `-1` for absent components; requires
    /// `1 ≤ k ≤ 2` and `-1 ≤ m ≤ ℓ ≤ k`.
    pub fn new(k: i32, l: i32, m: i32) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::InvalidDegrees(format!("k must be 1 or 2, got {k}")));
        }
        if !(-1 <= m && m <= l && l <= k) {
            return Err(Error::InvalidDegrees(format!(
                "need -1 <= m <= l <= k, got k={k}, l={l}, m={m}"
            )));
        }
        let opt = |d: i32| (d >= 0).then_some(d as usize);
        Ok(Self {
            k: k as usize,
            l: opt(l),
            m: opt(m),
        })
    }

    pub fn l_int(&self) -> i32 {
        self.l.map_or(-1, |d| d as i32)
    }

    pub fn m_int(&self) -> i32 {
        self.m.map_or(-1, |d| d as i32)
    }

    /// Number of local functions of the CG, `ℓ` and `m` components.
    pub fn local_dims(&self) -> (usize, usize, usize) {
        (
            dim(self.k),
            self.l.map_or(0, dim),
            self.m.map_or(0, dim),
        )
    }
}

impl fmt::Display for Degrees {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V^{}_{{{},{}}}", self.k, self.l_int(), self.m_int())
    }
}

/// Broken polynomial field in the orthonormal modal basis, cell-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BrokenField {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl BrokenField {
    pub fn zeros(degree: usize, cells: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; cells * dim(degree)],
        }
    }

    pub fn num_cells(&self) -> usize {
        self.coeffs.len() / dim(self.degree)
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        let n = dim(self.degree);
        &self.coeffs[c * n..(c + 1) * n]
    }

    /// Value at physical point `x` of `cell`, whose geometry is `triangle`.
    pub fn evaluate(&self, cell: usize, triangle: &Triangle, x: Point) -> f64 {
        let basis = ReferenceBasis::modal(self.degree).expect("supported degree");
        let mut phi = [0.0; 6];
        basis.eval_into(triangle.inverse_map(x), &mut phi);
        self.cell(cell).iter().zip(&phi).map(|(c, p)| c * p).sum()
    }
}

/// The enriched Galerkin space over a two-level mesh.
#[derive(Clone, Debug)]
pub struct EgSpace {
    mesh: TwoLevelMesh,
    degrees: Degrees,
    lagrange: ReferenceBasis,
    modal_k: ReferenceBasis,
    n_cg: usize,
    offset_l: usize,
    offset_m: usize,
    size: usize,
    cg_dofs: Vec<[usize; 6]>,
    /// Per leaf, `dim P_k × (dk + dl)` row-major: modal coefficients on the
    /// leaf of the parent's CG and `ℓ` generators. The `m` generators of a
    /// leaf are its first `dm` modal functions and need no table.
    embeddings: Vec<f64>,
}

impl EgSpace {
    pub fn new(mesh: TwoLevelMesh, degrees: Degrees) -> Result<Self> {
        let (dk, dl, dm) = degrees.local_dims();
        let coarse = mesh.coarse();
        let nv = coarse.vertices().len();
        let n_cg = if degrees.k == 1 {
            nv
        } else {
            nv + coarse.edges().len()
        };
        let cg_dofs: Vec<[usize; 6]> = (0..coarse.num_elements())
            .map(|c| {
                let tri = coarse.triangles()[c];
                let edges = coarse.triangle_edges(c);
                let mut d = [0; 6];
                d[..3].copy_from_slice(&tri);
                if degrees.k == 2 {
                    for e in 0..3 {
                        d[3 + e] = nv + edges[e];
                    }
                }
                d
            })
            .collect();
        let offset_l = n_cg;
        let offset_m = offset_l + coarse.num_elements() * dl;
        let size = offset_m + mesh.num_leaves() * dm;

        let lagrange = ReferenceBasis::lagrange(degrees.k)?;
        let modal_k = ReferenceBasis::modal(degrees.k)?;
        let modal_l = degrees.l.map(ReferenceBasis::modal).transpose()?;
        let rule = cell_rule(2 * degrees.k as u32)?;
        let tab = modal_k.tabulate(rule);
        let nk = dk;
        let ncols = dk + dl;

        let mut embeddings = vec![0.0; mesh.num_leaves() * nk * ncols];
        let leaves = mesh.leaves();
        par::for_each_chunk_mut(&mut embeddings, nk * ncols, |leaf, block| {
            let l = &leaves[leaf];
            let parent = coarse.triangle(l.parent);
            let mut g = [0.0; 12];
            for (q, (xi, w)) in rule.iter().enumerate() {
                let eta = parent.inverse_map(l.triangle.map(*xi));
                lagrange.eval_into(eta, &mut g[..dk]);
                if let Some(b) = &modal_l {
                    b.eval_into(eta, &mut g[dk..dk + dl]);
                }
                let phi = tab.values_at(q);
                for j in 0..nk {
                    for (col, gv) in g[..ncols].iter().enumerate() {
                        block[j * ncols + col] += w * gv * phi[j];
                    }
                }
            }
        });

        Ok(Self {
            mesh,
            degrees,
            lagrange,
            modal_k,
            n_cg,
            offset_l,
            offset_m,
            size,
            cg_dofs,
            embeddings,
        })
    }

    pub fn mesh(&self) -> &TwoLevelMesh {
        &self.mesh
    }

    pub fn degrees(&self) -> Degrees {
        self.degrees
    }

    /// Size of the generating system.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_cg(&self) -> usize {
        self.n_cg
    }

    /// Global CG dofs of coarse element `c`, in Lagrange node order.
    pub fn cg_dofs(&self, c: usize) -> &[usize] {
        &self.cg_dofs[c][..dim(self.degrees.k)]
    }

    /// Global `ℓ` dofs of coarse element `c`.
    pub fn l_dofs(&self, c: usize) -> std::ops::Range<usize> {
        let (_, dl, _) = self.degrees.local_dims();
        self.offset_l + c * dl..self.offset_l + (c + 1) * dl
    }

    /// Global `m` dofs of `leaf`.
    pub fn m_dofs(&self, leaf: usize) -> std::ops::Range<usize> {
        let (_, _, dm) = self.degrees.local_dims();
        self.offset_m + leaf * dm..self.offset_m + (leaf + 1) * dm
    }

    pub fn cg_range(&self) -> std::ops::Range<usize> {
        0..self.n_cg
    }

    pub fn l_range(&self) -> std::ops::Range<usize> {
        self.offset_l..self.offset_m
    }

    pub fn m_range(&self) -> std::ops::Range<usize> {
        self.offset_m..self.size
    }

    /// Global indices of the generators supported on `leaf`, in the local
    /// order `[CG | ℓ | m]` used by [`Self::leaf_embedding`].
    pub fn leaf_generators(&self, leaf: usize) -> Vec<usize> {
        let parent = self.mesh.leaves()[leaf].parent;
        let mut g: Vec<usize> = self.cg_dofs(parent).to_vec();
        g.extend(self.l_dofs(parent));
        g.extend(self.m_dofs(leaf));
        g
    }

    /// Modal `P_k` coefficients on `leaf` of the parent's CG and `ℓ`
    /// generators: `dim P_k` rows of `dk + dl` entries.
    pub fn leaf_embedding(&self, leaf: usize) -> &[f64] {
        let (dk, dl, _) = self.degrees.local_dims();
        let n = dk * (dk + dl);
        &self.embeddings[leaf * n..(leaf + 1) * n]
    }

    /// Modal basis of degree `k` used for leaf fields.
    pub fn leaf_basis(&self) -> ReferenceBasis {
        self.modal_k
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                actual: coeffs.len(),
            });
        }
        Ok(())
    }

    /// Modal `P_k` coefficients of the field on `leaf`.
    pub fn leaf_coefficients(&self, coeffs: &[f64], leaf: usize, out: &mut [f64]) {
        let (dk, dl, dm) = self.degrees.local_dims();
        let ncols = dk + dl;
        let parent = self.mesh.leaves()[leaf].parent;
        let e = self.leaf_embedding(leaf);
        let mut local = [0.0; 12];
        for (slot, &g) in self.cg_dofs(parent).iter().enumerate() {
            local[slot] = coeffs[g];
        }
        for (slot, g) in self.l_dofs(parent).enumerate() {
            local[dk + slot] = coeffs[g];
        }
        for (j, o) in out.iter_mut().enumerate().take(dk) {
            *o = (0..ncols).map(|c| e[j * ncols + c] * local[c]).sum();
        }
        for (j, g) in self.m_dofs(leaf).enumerate().take(dm) {
            out[j] += coeffs[g];
        }
    }

    /// Exact representation in the broken `P_k` space on the leaves.
    pub fn embed_leaves(&self, coeffs: &[f64]) -> Result<BrokenField> {
        self.check_len(coeffs)?;
        let k = self.degrees.k;
        let mut field = BrokenField::zeros(k, self.mesh.num_leaves());
        par::for_each_chunk_mut(&mut field.coeffs, dim(k), |leaf, out| {
            self.leaf_coefficients(coeffs, leaf, out);
        });
        Ok(field)
    }

    /// Exact representation in the broken `P_k` space on the conforming
    /// fine mesh.
    pub fn embed(&self, coeffs: &[f64]) -> Result<BrokenField> {
        let on_leaves = self.embed_leaves(coeffs)?;
        let k = self.degrees.k;
        let fine = self.mesh.fine_mesh();
        let rule = cell_rule(2 * k as u32)?;
        let tab = self.modal_k.tabulate(rule);
        let n = dim(k);
        let mut field = BrokenField::zeros(k, fine.num_elements());
        par::for_each_chunk_mut(&mut field.coeffs, n, |f, out| {
            let leaf = self.mesh.leaf_of_fine_cell(f);
            let ltri = self.mesh.leaves()[leaf].triangle;
            let ftri = fine.triangle(f);
            let u = on_leaves.cell(leaf);
            let mut psi = [0.0; 6];
            for (q, (xi, w)) in rule.iter().enumerate() {
                self.modal_k.eval_into(ltri.inverse_map(ftri.map(*xi)), &mut psi[..n]);
                let val: f64 = u.iter().zip(&psi).map(|(a, b)| a * b).sum();
                for (j, o) in out.iter_mut().enumerate() {
                    *o += w * val * tab.values_at(q)[j];
                }
            }
        });
        Ok(field)
    }

    /// Values of all generators supported on `leaf` at physical point `x`,
    /// evaluated directly from their defining bases.
    pub fn generator_values(&self, leaf: usize, x: Point) -> Result<Vec<(usize, f64)>> {
        let l = &self.mesh.leaves()[leaf];
        if !l.triangle.contains(x, 1e-10) {
            return Err(Error::PointOutsideElement {
                element: leaf,
                x: x[0],
                y: x[1],
            });
        }
        let parent = self.mesh.coarse().triangle(l.parent);
        let eta = parent.inverse_map(x);
        let mut out = Vec::new();
        let cg = self.lagrange.eval(eta);
        out.extend(self.cg_dofs(l.parent).iter().copied().zip(cg));
        if let Some(dl) = self.degrees.l {
            let v = ReferenceBasis::modal(dl)?.eval(eta);
            out.extend(self.l_dofs(l.parent).zip(v));
        }
        if let Some(dm) = self.degrees.m {
            let v = ReferenceBasis::modal(dm)?.eval(l.triangle.inverse_map(x));
            out.extend(self.m_dofs(leaf).zip(v));
        }
        Ok(out)
    }

    /// Value of the field at `x` inside `leaf`, summing generator values.
    pub fn evaluate(&self, coeffs: &[f64], leaf: usize, x: Point) -> Result<f64> {
        self.check_len(coeffs)?;
        Ok(self
            .generator_values(leaf, x)?
            .into_iter()
            .map(|(g, v)| coeffs[g] * v)
            .sum())
    }

    /// Coefficients of the constant function 1 (all CG nodal values one).
    pub fn constant_one(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.size];
        c[..self.n_cg].fill(1.0);
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_mesh;

    fn space(level: u32, marks: &[u32], depth: u32, k: i32, l: i32, m: i32) -> EgSpace {
        let coarse = build_unit_square_mesh(level).unwrap();
        let mesh = TwoLevelMesh::build(coarse, marks, depth).unwrap();
        EgSpace::new(mesh, Degrees::new(k, l, m).unwrap()).unwrap()
    }

    #[test]
    fn degree_constraints() {
        assert!(Degrees::new(0, 0, 0).is_err());
        assert!(Degrees::new(3, 0, 0).is_err());
        assert!(Degrees::new(1, 0, 1).is_err());
        assert!(Degrees::new(1, 2, 0).is_err());
        assert!(Degrees::new(2, 1, -2).is_err());
        assert_eq!(Degrees::new(2, 1, 0).unwrap().to_string(), "V^2_{1,0}");
    }

    #[test]
    fn generating_system_sizes() {
        assert_eq!(space(1, &[0; 4], 0, 1, 0, 0).size(), 13);
        assert_eq!(space(1, &[0; 4], 0, 1, -1, -1).size(), 5);
        // P2 CG: 5 vertices + 8 edges; 4 coarse P1; 7 leaves P0
        assert_eq!(space(1, &[1, 0, 0, 0], 1, 2, 1, 0).size(), 13 + 12 + 7);
    }

    #[test]
    fn embedding_of_zero_and_one() {
        let s = space(2, &[1, 0, 2, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2], 2, 2, 1, 1);
        let zero = s.embed(&vec![0.0; s.size()]).unwrap();
        assert!(zero.coeffs.iter().all(|&c| c == 0.0));
        let one = s.embed_leaves(&s.constant_one()).unwrap();
        let fine = s.embed(&s.constant_one()).unwrap();
        for (leaf, l) in s.mesh().leaves().iter().enumerate() {
            let v = one.evaluate(leaf, &l.triangle, l.triangle.centroid());
            assert!((v - 1.0).abs() < 1e-13);
        }
        let fm = s.mesh().fine_mesh();
        for f in 0..fm.num_elements() {
            let t = fm.triangle(f);
            assert!((fine.evaluate(f, &t, t.vertices[0]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hat_function_values() {
        let s = space(1, &[0; 4], 0, 1, -1, -1);
        let mut c = vec![0.0; s.size()];
        c[4] = 1.0; // centre vertex
        let v = s.evaluate(&c, 0, [0.5, 0.5]).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(s.evaluate(&c, 0, [0.0, 0.0]).unwrap().abs() < 1e-14);
        assert!(s.evaluate(&c, 0, [1.0, 0.0]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn evaluate_rejects_points_outside() {
        let s = space(1, &[0; 4], 0, 1, 0, 0);
        let c = s.constant_one();
        assert!(matches!(
            s.evaluate(&c, 0, [0.5, 0.9]),
            Err(Error::PointOutsideElement { .. })
        ));
        assert!(matches!(
            s.evaluate(&c[..3], 0, [0.5, 0.1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
