use nalgebra::DMatrix;

use crate::egspace::EgSpace;
use crate::linalg::{conjugate_gradient, norm, pseudo_inverse, CgOptions, CgStats, CsrMatrix};
use crate::{par, Error, Result};

const PINV_CUTOFF: f64 = 1e-12;
/// Largest local dimension, `dim P_2`.
const MAX_LOCAL: usize = 6;

/// Per coarse element data of the condensed mass system.
#[derive(Clone, Debug)]
struct CoarseBlock {
    /// Pseudo-inverse of the `ℓ–ℓ` block after subcell elimination.
    s_ll_pinv: DMatrix<f64>,
    /// `ℓ–CG` coupling after subcell elimination.
    s_lc: DMatrix<f64>,
}

/// Mass solver by static condensation.
///
/// The subcell block is diagonal (`2|L|` per leaf) and is eliminated
/// exactly; the coarse `ℓ` block is local to each coarse element and is
/// eliminated with a pseudo-inverse. What remains is a sparse semidefinite
/// system in the continuous unknowns, solved by Jacobi-preconditioned CG.
#[derive(Clone, Debug)]
pub(crate) struct CondensedMass {
    blocks: Vec<CoarseBlock>,
    schur: CsrMatrix,
    inv_diag: Vec<f64>,
    /// The Schur complement vanishes identically (`ℓ = k`).
    trivial: bool,
}

impl CondensedMass {
    pub(crate) fn new(space: &EgSpace) -> Self {
        let (dk, dl, dm) = space.degrees().local_dims();
        let n = dk + dl;
        let mesh = space.mesh();
        let coarse = mesh.coarse();
        let local: Vec<(DMatrix<f64>, CoarseBlock)> = par::map_indexed(coarse.num_elements(), |c| {
            let mut s = DMatrix::<f64>::zeros(n, n);
            for leaf in mesh.leaves_of(c) {
                let e = space.leaf_embedding(leaf);
                let scale = mesh.leaves()[leaf].triangle.det_jacobian();
                for r in dm..dk {
                    let row = &e[r * n..(r + 1) * n];
                    for i in 0..n {
                        for j in 0..n {
                            s[(i, j)] += scale * row[i] * row[j];
                        }
                    }
                }
            }
            let s_cc = s.view((0, 0), (dk, dk)).into_owned();
            let s_lc = s.view((dk, 0), (dl, dk)).into_owned();
            let s_ll = s.view((dk, dk), (dl, dl)).into_owned();
            let s_ll_pinv = pseudo_inverse(&s_ll, PINV_CUTOFF * s.amax().max(f64::MIN_POSITIVE));
            let t = &s_cc - s_lc.transpose() * &s_ll_pinv * &s_lc;
            (t, CoarseBlock { s_ll_pinv, s_lc })
        });
        let n_cg = space.num_cg();
        let mut triplets = Vec::with_capacity(local.len() * dk * dk);
        let mut scale = 0.0f64;
        let mut blocks = Vec::with_capacity(local.len());
        for (c, (t, block)) in local.into_iter().enumerate() {
            let dofs = space.cg_dofs(c);
            for i in 0..dk {
                for j in 0..dk {
                    triplets.push((dofs[i], dofs[j], t[(i, j)]));
                }
            }
            scale = scale.max(coarse.triangle(c).det_jacobian());
            blocks.push(block);
        }
        let schur = CsrMatrix::from_triplets(n_cg, n_cg, triplets);
        let diag = schur.diagonal();
        let max_diag = diag.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let trivial = max_diag <= 1e-12 * scale;
        let inv_diag = diag
            .iter()
            .map(|&d| if d > 1e-14 * max_diag { 1.0 / d } else { 0.0 })
            .collect();
        Self {
            blocks,
            schur,
            inv_diag,
            trivial,
        }
    }

    /// Solves `M x = r`. On entry the CG block of `x` is used as the
    /// starting guess of the iteration.
    pub(crate) fn solve(&self, space: &EgSpace, r: &[f64], x: &mut [f64], opts: CgOptions) -> Result<CgStats> {
        if r.len() != space.size() || x.len() != space.size() {
            return Err(Error::DimensionMismatch {
                expected: space.size(),
                actual: if r.len() != space.size() { r.len() } else { x.len() },
            });
        }
        let (dk, dl, dm) = space.degrees().local_dims();
        let n = dk + dl;
        let mesh = space.mesh();
        let n_coarse = mesh.coarse().num_elements();
        let n_cg = space.num_cg();

        // Eliminate the subcell unknowns: per coarse element the CG part of
        // the modified right-hand side followed by the modified ℓ part.
        let mut reduced = vec![0.0; n_coarse * n];
        par::for_each_chunk_mut(&mut reduced, n, |c, buf| {
            let (rc, rl) = buf.split_at_mut(dk);
            for (v, g) in rl.iter_mut().zip(space.l_dofs(c)) {
                *v = r[g];
            }
            for leaf in mesh.leaves_of(c) {
                let e = space.leaf_embedding(leaf);
                for (j, g) in space.m_dofs(leaf).enumerate() {
                    let row = &e[j * n..(j + 1) * n];
                    for (v, a) in rc.iter_mut().zip(&row[..dk]) {
                        *v -= a * r[g];
                    }
                    for (v, a) in rl.iter_mut().zip(&row[dk..]) {
                        *v -= a * r[g];
                    }
                }
            }
            if dl > 0 {
                let b = &self.blocks[c];
                let mut z = [0.0; MAX_LOCAL];
                for i in 0..dl {
                    z[i] = (0..dl).map(|j| b.s_ll_pinv[(i, j)] * rl[j]).sum();
                }
                for (i, v) in rc.iter_mut().enumerate() {
                    *v -= (0..dl).map(|j| b.s_lc[(j, i)] * z[j]).sum::<f64>();
                }
            }
        });
        let mut rhs = r[..n_cg].to_vec();
        for c in 0..n_coarse {
            for (&g, v) in space.cg_dofs(c).iter().zip(&reduced[c * n..c * n + dk]) {
                rhs[g] += v;
            }
        }

        let opts = CgOptions {
            abs_tol: opts.abs_tol.max(opts.rel_tol * norm(r)),
            ..opts
        };
        let stats = if self.trivial {
            x[..n_cg].fill(0.0);
            CgStats {
                iterations: 0,
                relative_residual: 0.0,
            }
        } else {
            conjugate_gradient(
                |v, out| self.schur.mul_vec_into(v, out),
                Some(&self.inv_diag),
                &rhs,
                &mut x[..n_cg],
                opts,
            )?
        };

        // Back substitution: first the ℓ unknowns, then leaf by leaf the
        // subcell unknowns.
        let (xc, rest) = x.split_at_mut(n_cg);
        let (xl, xm) = rest.split_at_mut(space.m_range().start - n_cg);
        let local = |c: usize| {
            let mut y = [0.0; 2 * MAX_LOCAL];
            for (v, &g) in y.iter_mut().zip(space.cg_dofs(c)) {
                *v = xc[g];
            }
            y
        };
        if dl > 0 {
            par::for_each_chunk_mut(xl, dl, |c, out| {
                let b = &self.blocks[c];
                let y = local(c);
                let rl = &reduced[c * n + dk..(c + 1) * n];
                let mut t = [0.0; MAX_LOCAL];
                for (j, v) in t[..dl].iter_mut().enumerate() {
                    *v = rl[j] - (0..dk).map(|i| b.s_lc[(j, i)] * y[i]).sum::<f64>();
                }
                for (i, v) in out.iter_mut().enumerate() {
                    *v = (0..dl).map(|j| b.s_ll_pinv[(i, j)] * t[j]).sum();
                }
            });
        }
        let xl: &[f64] = xl;
        if dm > 0 {
            let m0 = space.m_range().start;
            par::for_each_chunk_mut(xm, dm, |leaf, out| {
                let c = mesh.leaves()[leaf].parent;
                let mut y = local(c);
                y[dk..n].copy_from_slice(&xl[c * dl..(c + 1) * dl]);
                let e = space.leaf_embedding(leaf);
                let s = mesh.leaves()[leaf].triangle.det_jacobian();
                for (j, v) in out.iter_mut().enumerate() {
                    let row = &e[j * n..(j + 1) * n];
                    let p: f64 = row.iter().zip(&y[..n]).map(|(a, b)| a * b).sum();
                    *v = r[m0 + leaf * dm + j] / s - p;
                }
            });
        }
        Ok(stats)
    }
}

