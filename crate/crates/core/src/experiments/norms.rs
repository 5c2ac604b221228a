use crate::egspace::EgSpace;
use crate::polybasis::{cell_rule, dim, error_exactness};
use crate::{par, Point, Result};

/// `‖U − u‖_{L²(Ω)}` by quadrature of exactness `2k + 4` on every cell of
/// the fine mesh `T_h`.
pub fn l2_error<F>(space: &EgSpace, coeffs: &[f64], exact: F) -> Result<f64>
where
    F: Fn(Point) -> f64 + Sync,
{
    let k = space.degrees().k;
    let leaf_field = space.embed_leaves(coeffs)?;
    let mesh = space.mesh();
    let fine = mesh.fine_mesh();
    let rule = cell_rule(error_exactness(k))?;
    let basis = space.leaf_basis();
    let n = dim(k);
    let parts = par::map_indexed(fine.num_elements(), |f| {
        let tri = fine.triangle(f);
        let leaf = mesh.leaf_of_fine_cell(f);
        let ltri = mesh.leaves()[leaf].triangle;
        let u = leaf_field.cell(leaf);
        let mut psi = [0.0; 6];
        let mut s = 0.0;
        for (xi, w) in rule.iter() {
            let x = tri.map(*xi);
            basis.eval_into(ltri.inverse_map(x), &mut psi[..n]);
            let val: f64 = u.iter().zip(&psi).map(|(a, b)| a * b).sum();
            s += w * (val - exact(x)).powi(2);
        }
        s * tri.det_jacobian()
    });
    Ok(parts.iter().sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::egspace::Degrees;
    use crate::mesh::{build_unit_square_mesh, TwoLevelMesh};
    use crate::projection::eg_project_initial;

    fn space(k: i32, l: i32, m: i32) -> EgSpace {
        let mesh = TwoLevelMesh::uniform(build_unit_square_mesh(2).unwrap(), 1).unwrap();
        EgSpace::new(mesh, Degrees::new(k, l, m).unwrap()).unwrap()
    }

    #[test]
    fn zero_against_constant_and_linear() {
        let s = space(1, 0, 0);
        let zero = vec![0.0; s.size()];
        assert!((l2_error(&s, &zero, |_| 1.0).unwrap() - 1.0).abs() < 1e-14);
        let expected = 1.0 / 3f64.sqrt();
        assert!((l2_error(&s, &zero, |x| x[0]).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn projection_of_continuous_quadratic_is_exact() {
        let s = space(2, 1, 1);
        let u = |x: Point| 1.0 + x[0] - 2.0 * x[1] * x[1] + x[0] * x[1];
        let c = eg_project_initial(&s, u).unwrap();
        assert!(l2_error(&s, &c, u).unwrap() < 1e-12);
    }
}
