//! L² projections, nodal interpolation and the EG initial projection
//! `π v = I_H v + Π_{ℓ,m}(v − I_H v)`.

use nalgebra::DMatrix;

use crate::egspace::{BrokenField, EgSpace};
use crate::linalg::pseudo_inverse;
use crate::mesh::{CoarseMesh, Triangle};
use crate::polybasis::{cell_rule, dim, error_exactness, ReferenceBasis};
use crate::{par, Error, Point, Result};

/// Relative singular-value cutoff of the local Gram solves.
const GRAM_CUTOFF: f64 = 1e-12;

/// Per-cell L² projection of `v` onto broken `P_degree` over `cells`, using a
/// quadrature rule of the given exactness for the inner products.
pub fn l2_project_broken<F>(
    cells: &[Triangle],
    degree: usize,
    v: F,
    exactness: u32,
) -> Result<BrokenField>
where
    F: Fn(Point) -> f64 + Sync,
{
    let basis = ReferenceBasis::modal(degree)?;
    let rule = cell_rule(exactness)?;
    let tab = basis.tabulate(rule);
    let n = dim(degree);
    let mut field = BrokenField::zeros(degree, cells.len());
    par::for_each_chunk_mut(&mut field.coeffs, n, |c, out| {
        for (q, (xi, w)) in rule.iter().enumerate() {
            let val = v(cells[c].map(*xi));
            for (o, phi) in out.iter_mut().zip(tab.values_at(q)) {
                *o += w * val * phi;
            }
        }
    });
    Ok(field)
}

/// Nodal interpolant in `P_k(T_H) ∩ C(Ω)`: values at the vertices followed
/// by values at the edge midpoints (for `k = 2`).
pub fn interpolate_cg<F>(coarse: &CoarseMesh, k: usize, v: F) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64,
{
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidDegrees(format!("k must be 1 or 2, got {k}")));
    }
    let mut values: Vec<f64> = coarse.vertices().iter().map(|&p| v(p)).collect();
    if k == 2 {
        values.extend(coarse.edges().iter().map(|e| {
            let [a, b] = e.vertices.map(|i| coarse.vertices()[i]);
            v([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
        }));
    }
    Ok(values)
}

/// L² projection onto `P_ℓ(T_H) + P_m(T_{H|h})`, localised to each coarse
/// element. `v(c, x)` is the function on coarse element `c`; this allows
/// integrands that are only piecewise smooth with respect to `T_H`.
///
/// Returns a full coefficient vector of `space` with a zero CG block. On each
/// coarse element `K` the subcell part `W = P_m` (orthonormal per leaf) is
/// eliminated first; the remaining `ℓ` coefficients solve the Gram system of
/// `(I − Π_W) P_ℓ(K)` by pseudo-inverse, which covers the redundant cases.
pub fn l2_project_sum_with<F>(space: &EgSpace, v: F, exactness: u32) -> Result<Vec<f64>>
where
    F: Fn(usize, Point) -> f64 + Sync,
{
    let degrees = space.degrees();
    let (dk, dl, dm) = degrees.local_dims();
    let mut coeffs = vec![0.0; space.size()];
    if dl == 0 && dm == 0 {
        return Ok(coeffs);
    }
    let mesh = space.mesh();
    let coarse = mesh.coarse();
    let rule = cell_rule(exactness)?;
    let modal_m = degrees.m.map(ReferenceBasis::modal).transpose()?;
    let modal_l = degrees.l.map(ReferenceBasis::modal).transpose()?;
    let tab_m = modal_m.map(|b| b.tabulate(rule));
    let ncols = dk + dl;

    let local: Vec<(Vec<f64>, Vec<f64>)> = par::map_indexed(coarse.num_elements(), |c| {
        let parent = coarse.triangle(c);
        let leaves = mesh.leaves_of(c);
        let mut w_all = vec![0.0; leaves.len() * dm];
        let mut b = vec![0.0; dl];
        let mut g = [0.0; 6];
        for (slot, leaf) in leaves.clone().enumerate() {
            let tri = mesh.leaves()[leaf].triangle;
            let jac = tri.det_jacobian();
            let vals: Vec<f64> = rule.points.iter().map(|xi| v(c, tri.map(*xi))).collect();
            let w = &mut w_all[slot * dm..(slot + 1) * dm];
            if let Some(tab) = &tab_m {
                for (q, wq) in rule.weights.iter().enumerate() {
                    for (j, phi) in tab.values_at(q).iter().enumerate() {
                        w[j] += wq * vals[q] * phi;
                    }
                }
            }
            if let Some(bl) = &modal_l {
                for (q, (xi, wq)) in rule.iter().enumerate() {
                    let proj: f64 = tab_m
                        .as_ref()
                        .map_or(0.0, |tab| w.iter().zip(tab.values_at(q)).map(|(a, p)| a * p).sum());
                    bl.eval_into(parent.inverse_map(tri.map(*xi)), &mut g[..dl]);
                    for i in 0..dl {
                        b[i] += wq * jac * (vals[q] - proj) * g[i];
                    }
                }
            }
        }
        if dl == 0 {
            return (Vec::new(), w_all);
        }
        // Gram of (I − Π_W) g_i: ⟨g_i, g_j⟩ − ⟨Π_W g_i, Π_W g_j⟩.
        let mut gram = DMatrix::identity(dl, dl) * parent.det_jacobian();
        for leaf in leaves.clone() {
            let e = space.leaf_embedding(leaf);
            let jac = mesh.leaves()[leaf].triangle.det_jacobian();
            for i in 0..dl {
                for j in 0..dl {
                    let s: f64 = (0..dm)
                        .map(|r| e[r * ncols + dk + i] * e[r * ncols + dk + j])
                        .sum();
                    gram[(i, j)] -= jac * s;
                }
            }
        }
        let pinv = pseudo_inverse(&gram, GRAM_CUTOFF * parent.det_jacobian());
        let alpha: Vec<f64> = (0..dl)
            .map(|i| (0..dl).map(|j| pinv[(i, j)] * b[j]).sum())
            .collect();
        for (slot, leaf) in leaves.enumerate() {
            let e = space.leaf_embedding(leaf);
            for r in 0..dm {
                let p: f64 = (0..dl).map(|i| e[r * ncols + dk + i] * alpha[i]).sum();
                w_all[slot * dm + r] -= p;
            }
        }
        (alpha, w_all)
    });

    for (c, (alpha, w)) in local.into_iter().enumerate() {
        for (g, a) in space.l_dofs(c).zip(alpha) {
            coeffs[g] = a;
        }
        let leaves = mesh.leaves_of(c);
        for (slot, leaf) in leaves.enumerate() {
            for (g, x) in space.m_dofs(leaf).zip(&w[slot * dm..(slot + 1) * dm]) {
                coeffs[g] = *x;
            }
        }
    }
    Ok(coeffs)
}

/// [`l2_project_sum_with`] for a globally defined function.
pub fn l2_project_sum<F>(space: &EgSpace, v: F, exactness: u32) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64 + Sync,
{
    l2_project_sum_with(space, |_, x| v(x), exactness)
}

/// EG projection of continuous initial data: the CG block is the nodal
/// interpolant, the broken blocks are the sum-space projection of the
/// interpolation residual. The residual is evaluated pointwise with the
/// interpolant taken exactly from its Lagrange representation.
pub fn eg_project_initial<F>(space: &EgSpace, v: F) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64 + Sync,
{
    let k = space.degrees().k;
    let coarse = space.mesh().coarse();
    let nodal = interpolate_cg(coarse, k, &v)?;
    let lagrange = ReferenceBasis::lagrange(k)?;
    let residual = |c: usize, x: Point| {
        let mut phi = [0.0; 6];
        let n = lagrange.dim();
        lagrange.eval_into(coarse.triangle(c).inverse_map(x), &mut phi[..n]);
        let interp: f64 = space
            .cg_dofs(c)
            .iter()
            .zip(&phi[..n])
            .map(|(&g, p)| nodal[g] * p)
            .sum();
        v(x) - interp
    };
    let mut coeffs = l2_project_sum_with(space, residual, error_exactness(k))?;
    coeffs[..nodal.len()].copy_from_slice(&nodal);
    Ok(coeffs)
}

/// L² projection onto piecewise constants on the leaves, stored in the `m`
/// block. Used for bound-preserving initial data.
pub fn l2_project_leaf_constants<F>(space: &EgSpace, v: F, exactness: u32) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64 + Sync,
{
    if space.degrees().m.is_none() {
        return Err(Error::InvalidDegrees(
            "piecewise-constant projection needs m >= 0".into(),
        ));
    }
    let cells: Vec<Triangle> = space.mesh().leaves().iter().map(|l| l.triangle).collect();
    let p0 = l2_project_broken(&cells, 0, v, exactness)?;
    let mut coeffs = vec![0.0; space.size()];
    for (leaf, c) in p0.coeffs.iter().enumerate() {
        coeffs[space.m_dofs(leaf).start] = *c;
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::egspace::Degrees;
    use crate::mesh::{build_unit_square_mesh, TwoLevelMesh};

    fn cells(level: u32) -> Vec<Triangle> {
        let m = build_unit_square_mesh(level).unwrap();
        (0..m.num_elements()).map(|i| m.triangle(i)).collect()
    }

    #[test]
    fn p0_of_linear_is_centroid_value() {
        let cells = cells(2);
        let p = l2_project_broken(&cells, 0, |x| x[0], 4).unwrap();
        for (c, t) in cells.iter().enumerate() {
            let v = p.evaluate(c, t, t.centroid());
            assert!((v - t.centroid()[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn broken_projection_reproduces_polynomials() {
        let cells = cells(2);
        let f = |x: Point| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1] - x[1] * x[1];
        let p = l2_project_broken(&cells, 2, f, 6).unwrap();
        for (c, t) in cells.iter().enumerate() {
            for xi in [[0.1, 0.2], [0.7, 0.1]] {
                let x = t.map(xi);
                assert!((p.evaluate(c, t, x) - f(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_of_constant() {
        let m = build_unit_square_mesh(2).unwrap();
        for k in 1..=2 {
            let v = interpolate_cg(&m, k, |_| 3.5).unwrap();
            assert!(v.iter().all(|&x| x == 3.5));
        }
    }

    #[test]
    fn projection_onto_empty_enrichment_is_interpolation() {
        let mesh = TwoLevelMesh::uniform(build_unit_square_mesh(2).unwrap(), 0).unwrap();
        let space = EgSpace::new(mesh, Degrees::new(2, -1, -1).unwrap()).unwrap();
        let f = |x: Point| (3.0 * x[0]).sin() + x[1];
        let c = eg_project_initial(&space, f).unwrap();
        let nodal = interpolate_cg(space.mesh().coarse(), 2, f).unwrap();
        assert_eq!(c, nodal);
    }

    #[test]
    fn leaf_constants_need_subcell_component() {
        let mesh = TwoLevelMesh::uniform(build_unit_square_mesh(1).unwrap(), 0).unwrap();
        let space = EgSpace::new(mesh, Degrees::new(1, -1, -1).unwrap()).unwrap();
        assert!(l2_project_leaf_constants(&space, |_| 1.0, 4).is_err());
    }
}
