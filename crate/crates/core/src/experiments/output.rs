use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::egspace::EgSpace;
use crate::polybasis::dim;
use crate::Result;

/// One sample of a cross-section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossSample {
    pub s: f64,
    pub u_num: f64,
    pub u_exact: f64,
}

pub fn write_cross_section<W: Write>(samples: &[CrossSample], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_cross_section(samples: &[CrossSample], path: &Path) -> Result<()> {
    write_cross_section(samples, std::fs::File::create(path)?)
}

/// Legacy ASCII VTK unstructured grid of the fine mesh `T_h`. Every cell has
/// its own three points so that the discontinuous field is sampled without
/// averaging: `u` holds the vertex values of the cell polynomial, the cell
/// field `u_mean` its mean value.
pub fn write_vtk<W: Write>(space: &EgSpace, coeffs: &[f64], mut w: W) -> Result<()> {
    let leaf_field = space.embed_leaves(coeffs)?;
    let mesh = space.mesh();
    let fine = mesh.fine_mesh();
    let basis = space.leaf_basis();
    let n = dim(space.degrees().k);
    let nf = fine.num_elements();
    let mut values = Vec::with_capacity(3 * nf);
    let mut means = Vec::with_capacity(nf);
    let mut psi = [0.0; 6];
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "enriched Galerkin solution, {}", space.degrees())?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * nf)?;
    for f in 0..nf {
        let tri = fine.triangle(f);
        let leaf = mesh.leaf_of_fine_cell(f);
        let ltri = mesh.leaves()[leaf].triangle;
        let u = leaf_field.cell(leaf);
        let mut sum = 0.0;
        for p in tri.vertices {
            writeln!(w, "{} {} 0", p[0], p[1])?;
            basis.eval_into(ltri.inverse_map(p), &mut psi[..n]);
            let v: f64 = u.iter().zip(&psi).map(|(a, b)| a * b).sum();
            values.push(v);
        }
        // Mean over the fine cell: average of the values at edge midpoints
        // is exact for quadratics.
        for i in 0..3 {
            let (a, b) = (tri.vertices[i], tri.vertices[(i + 1) % 3]);
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            basis.eval_into(ltri.inverse_map(mid), &mut psi[..n]);
            sum += u.iter().zip(&psi).map(|(a, b)| a * b).sum::<f64>();
        }
        means.push(sum / 3.0);
    }
    writeln!(w, "CELLS {} {}", nf, 4 * nf)?;
    for f in 0..nf {
        writeln!(w, "3 {} {} {}", 3 * f, 3 * f + 1, 3 * f + 2)?;
    }
    writeln!(w, "CELL_TYPES {nf}")?;
    for _ in 0..nf {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", 3 * nf)?;
    writeln!(w, "SCALARS u double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in &values {
        writeln!(w, "{v}")?;
    }
    writeln!(w, "CELL_DATA {nf}")?;
    writeln!(w, "SCALARS u_mean double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in &means {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_vtk(space: &EgSpace, coeffs: &[f64], path: &Path) -> Result<()> {
    write_vtk(space, coeffs, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::egspace::Degrees;
    use crate::mesh::{build_unit_square_mesh, TwoLevelMesh};
    use crate::projection::eg_project_initial;

    #[test]
    fn vtk_layout_and_values() {
        let mesh = TwoLevelMesh::uniform(build_unit_square_mesh(1).unwrap(), 1).unwrap();
        let space = EgSpace::new(mesh, Degrees::new(2, 1, 0).unwrap()).unwrap();
        let c = eg_project_initial(&space, |x| x[0] * x[0] + x[1]).unwrap();
        let mut buf = Vec::new();
        write_vtk(&space, &c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("POINTS 48 double"));
        assert!(text.contains("CELLS 16 64"));
        let lines: Vec<&str> = text.lines().collect();
        let pts = lines.iter().position(|l| l.starts_with("POINTS")).unwrap();
        let data = lines.iter().position(|l| l.starts_with("POINT_DATA")).unwrap();
        for i in 0..48 {
            let p: Vec<f64> = lines[pts + 1 + i].split(' ').map(|s| s.parse().unwrap()).collect();
            let v: f64 = lines[data + 3 + i].parse().unwrap();
            assert!((v - (p[0] * p[0] + p[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_section_csv() {
        let samples = [CrossSample {
            s: 0.0,
            u_num: 1.5,
            u_exact: 1.0,
        }];
        let mut buf = Vec::new();
        write_cross_section(&samples, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "s,u_num,u_exact\n0.0,1.5,1.0\n");
    }
}
