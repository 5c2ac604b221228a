use std::sync::OnceLock;

use super::flux::upwind_flux;
use super::mass::CondensedMass;
use super::problem::{InflowCondition, ProblemSpec};
use crate::egspace::EgSpace;
use crate::linalg::{solve_semidefinite, CgOptions, CgStats, CsrMatrix};
use crate::mesh::FaceKind;
use crate::polybasis::{cell_rule, dim, edge_rule, solver_exactness, Tabulation};
use crate::{par, Error, Point, Result};

/// Role of a boundary quadrature point, fixed from the sign of `a·ν` at
/// `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointRole {
    Outflow,
    Dirichlet,
    Flux,
}

/// Inflow/outflow classification of every boundary face quadrature point.
/// For problems with a steady velocity it also holds `a` sampled at the
/// quadrature points.
#[derive(Clone, Debug)]
pub struct BoundaryClassification {
    /// `roles[face * nq + q]`; interior faces are marked outflow and unused.
    roles: Vec<PointRole>,
    nq: usize,
    steady: Option<VelocitySamples>,
}

#[derive(Clone, Debug)]
struct VelocitySamples {
    /// `a` in reference coordinates, `Jᵀ⁻¹`-transformed, per cell point.
    cell: Vec<[f64; 2]>,
    /// `a·ν` per face point.
    face: Vec<f64>,
}

impl BoundaryClassification {
    pub fn role(&self, face: usize, q: usize) -> PointRole {
        self.roles[face * self.nq + q]
    }

    /// Number of quadrature points on the inflow boundary.
    pub fn inflow_points(&self) -> usize {
        self.roles.iter().filter(|r| **r != PointRole::Outflow).count()
    }
}

/// Quadrature data of one leaf.
#[derive(Clone, Debug)]
struct CellCache {
    points: Vec<Point>,
    det: f64,
    inv_t: [[f64; 2]; 2],
}

/// Quadrature data of one face: physical points, scaled weights and the
/// modal basis of both adjacent leaves at each point.
#[derive(Clone, Debug)]
struct FaceCache {
    points: Vec<Point>,
    weights: Vec<f64>,
    psi_minus: Vec<f64>,
    psi_plus: Vec<f64>,
}

/// Summary of a field evaluated at the cell quadrature points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldStats {
    pub l2_norm: f64,
    pub min: f64,
    pub max: f64,
}

/// Discretisation of the advection operator on an [`EgSpace`]: quadrature
/// caches, the mass operator and its solver.
#[derive(Debug)]
pub struct DiscreteOperator {
    space: EgSpace,
    nk: usize,
    cell_tab: Tabulation,
    cell_weights: Vec<f64>,
    cells: Vec<CellCache>,
    faces: Vec<FaceCache>,
    condensed: CondensedMass,
    mass: OnceLock<CsrMatrix>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl DiscreteOperator {
    pub fn new(space: EgSpace) -> Result<Self> {
        let k = space.degrees().k;
        let nk = dim(k);
        let basis = space.leaf_basis();
        let crule = cell_rule(solver_exactness(k))?;
        let erule = edge_rule(solver_exactness(k))?;
        let mesh = space.mesh();
        let cells = par::map_indexed(mesh.num_leaves(), |leaf| {
            let tri = mesh.leaves()[leaf].triangle;
            CellCache {
                points: crule.points.iter().map(|xi| tri.map(*xi)).collect(),
                det: tri.det_jacobian(),
                inv_t: tri.inverse_transpose_jacobian(),
            }
        });
        let faces = par::map_indexed(mesh.faces().len(), |f| {
            let face = &mesh.faces()[f];
            let points: Vec<Point> = erule.points.iter().map(|s| face.point_at(s[0])).collect();
            let tabulate = |leaf: usize| {
                let tri = mesh.leaves()[leaf].triangle;
                let mut out = vec![0.0; points.len() * nk];
                for (q, x) in points.iter().enumerate() {
                    basis.eval_into(tri.inverse_map(*x), &mut out[q * nk..(q + 1) * nk]);
                }
                out
            };
            FaceCache {
                weights: erule.weights.iter().map(|w| w * face.length).collect(),
                psi_minus: tabulate(face.minus),
                psi_plus: face.plus.map(tabulate).unwrap_or_default(),
                points,
            }
        });
        Ok(Self {
            nk,
            cell_tab: basis.tabulate(crule),
            cell_weights: crule.weights.clone(),
            cells,
            faces,
            condensed: CondensedMass::new(&space),
            mass: OnceLock::new(),
            space,
        })
    }

    pub fn space(&self) -> &EgSpace {
        &self.space
    }

    /// Number of quadrature points per face.
    pub fn face_points(&self) -> usize {
        self.faces.first().map_or(0, |f| f.points.len())
    }

    /// Assembled mass matrix `M_ij = ∫ φ_i φ_j` over the generating system.
    pub fn mass_matrix(&self) -> &CsrMatrix {
        self.mass.get_or_init(|| {
            let space = &self.space;
            let (dk, dl, dm) = space.degrees().local_dims();
            let n = dk + dl;
            let locals = par::map_indexed(space.mesh().num_leaves(), |leaf| {
                let gens = space.leaf_generators(leaf);
                let e = space.leaf_embedding(leaf);
                let s = self.cells[leaf].det;
                // Column j of the full leaf embedding as a modal vector.
                let column = |j: usize| -> Vec<f64> {
                    if j < n {
                        (0..dk).map(|r| e[r * n + j]).collect()
                    } else {
                        let mut v = vec![0.0; dk];
                        v[j - n] = 1.0;
                        v
                    }
                };
                let cols: Vec<Vec<f64>> = (0..n + dm).map(column).collect();
                let mut trip = Vec::with_capacity(gens.len() * gens.len());
                for (a, &ga) in gens.iter().enumerate() {
                    for (b, &gb) in gens.iter().enumerate() {
                        let v = s * dot(&cols[a], &cols[b]);
                        if v != 0.0 {
                            trip.push((ga, gb, v));
                        }
                    }
                }
                trip
            });
            let size = space.size();
            CsrMatrix::from_triplets(size, size, locals.into_iter().flatten().collect())
        })
    }

    /// Classifies boundary quadrature points by the sign of `a·ν` at `t = 0`
    /// and validates the flux-condition margin.
    pub fn classify_boundary(&self, problem: &ProblemSpec) -> Result<BoundaryClassification> {
        let nq = self.face_points();
        let mesh = self.space.mesh();
        let mut roles = vec![PointRole::Outflow; mesh.faces().len() * nq];
        for (f, face) in mesh.faces().iter().enumerate() {
            let FaceKind::Boundary(tag) = face.kind else {
                continue;
            };
            for (q, x) in self.faces[f].points.iter().enumerate() {
                let a = (problem.velocity)(0.0, *x);
                let an = a[0] * face.normal[0] + a[1] * face.normal[1];
                if an < 0.0 {
                    roles[f * nq + q] = match problem.inflow_condition(tag) {
                        InflowCondition::Dirichlet(_) => PointRole::Dirichlet,
                        InflowCondition::Flux(_) => {
                            if an > -problem.flux_delta {
                                return Err(Error::BoundaryCondition(format!(
                                    "flux condition needs a·ν ≤ -{} but a·ν = {an:e} at ({}, {})",
                                    problem.flux_delta, x[0], x[1]
                                )));
                            }
                            PointRole::Flux
                        }
                    };
                }
            }
        }
        let steady = problem.steady_velocity.then(|| self.sample_velocity(problem));
        Ok(BoundaryClassification { roles, nq, steady })
    }

    fn sample_velocity(&self, problem: &ProblemSpec) -> VelocitySamples {
        let mesh = self.space.mesh();
        let cell = par::map_indexed(self.cells.len(), |leaf| {
            let cache = &self.cells[leaf];
            let m = cache.inv_t;
            cache
                .points
                .iter()
                .map(|x| {
                    let a = (problem.velocity)(0.0, *x);
                    [a[0] * m[0][0] + a[1] * m[1][0], a[0] * m[0][1] + a[1] * m[1][1]]
                })
                .collect::<Vec<_>>()
        });
        let face = par::map_indexed(self.faces.len(), |f| {
            let normal = mesh.faces()[f].normal;
            self.faces[f]
                .points
                .iter()
                .map(|x| {
                    let a = (problem.velocity)(0.0, *x);
                    a[0] * normal[0] + a[1] * normal[1]
                })
                .collect::<Vec<_>>()
        });
        VelocitySamples {
            cell: cell.concat(),
            face: face.concat(),
        }
    }

    /// Re-checks at time `t` that the classification still matches the sign
    /// of `a·ν` (up to a relative tolerance of `1e-12`).
    pub fn check_inflow(
        &self,
        problem: &ProblemSpec,
        boundary: &BoundaryClassification,
        t: f64,
    ) -> Result<()> {
        let mesh = self.space.mesh();
        for (f, face) in mesh.faces().iter().enumerate() {
            if face.plus.is_some() {
                continue;
            }
            for (q, x) in self.faces[f].points.iter().enumerate() {
                let a = (problem.velocity)(t, *x);
                let an = a[0] * face.normal[0] + a[1] * face.normal[1];
                let tol = 1e-12 * a[0].hypot(a[1]);
                let ok = match boundary.role(f, q) {
                    PointRole::Outflow => an >= -tol,
                    PointRole::Dirichlet => an < tol,
                    PointRole::Flux => an <= -problem.flux_delta + tol,
                };
                if !ok {
                    return Err(Error::BoundaryCondition(format!(
                        "inflow boundary changed at t = {t}: a·ν = {an:e} at ({}, {})",
                        x[0], x[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Modal leaf coefficients of `c`, `nk` per leaf.
    fn leaf_values(&self, c: &[f64]) -> Result<Vec<f64>> {
        Ok(self.space.embed_leaves(c)?.coeffs)
    }

    /// Dual vector `r(c, t)` with `M ċ = r` the semi-discrete system.
    pub fn residual(
        &self,
        problem: &ProblemSpec,
        boundary: &BoundaryClassification,
        t: f64,
        c: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        if out.len() != self.space.size() {
            return Err(Error::DimensionMismatch {
                expected: self.space.size(),
                actual: out.len(),
            });
        }
        let u = self.leaf_values(c)?;
        let leaf_r = self.leaf_residual(problem, boundary, t, &u);
        self.gather(&leaf_r, out);
        Ok(())
    }

    /// Residual tested against the modal leaf basis, `nk` entries per leaf.
    fn leaf_residual(
        &self,
        problem: &ProblemSpec,
        boundary: &BoundaryClassification,
        t: f64,
        u: &[f64],
    ) -> Vec<f64> {
        let nk = self.nk;
        let mesh = self.space.mesh();
        let nq = boundary.nq;
        let ncq = self.cell_weights.len();

        // Face contributions, minus side then plus side.
        let mut face_r = vec![0.0; self.faces.len() * 2 * nk];
        par::for_each_chunk_mut(&mut face_r, 2 * nk, |f, buf| {
            let face = &mesh.faces()[f];
            let cache = &self.faces[f];
            let (rm, rp) = buf.split_at_mut(nk);
            let um = &u[face.minus * nk..(face.minus + 1) * nk];
            for (q, x) in cache.points.iter().enumerate() {
                let w = cache.weights[q];
                let an = match &boundary.steady {
                    Some(v) => v.face[f * nq + q],
                    None => {
                        let a = (problem.velocity)(t, *x);
                        a[0] * face.normal[0] + a[1] * face.normal[1]
                    }
                };
                let psi_m = &cache.psi_minus[q * nk..(q + 1) * nk];
                let vm = dot(um, psi_m);
                match face.plus {
                    Some(p) => {
                        let psi_p = &cache.psi_plus[q * nk..(q + 1) * nk];
                        let vp = dot(&u[p * nk..(p + 1) * nk], psi_p);
                        let flux = w * upwind_flux(an, vm, vp);
                        for j in 0..nk {
                            rm[j] -= flux * psi_m[j];
                            rp[j] += flux * psi_p[j];
                        }
                    }
                    None => {
                        let FaceKind::Boundary(tag) = face.kind else {
                            unreachable!("face without plus side is a boundary face")
                        };
                        let value = match boundary.roles[f * nq + q] {
                            PointRole::Outflow => -vm * an,
                            PointRole::Dirichlet | PointRole::Flux => {
                                match problem.inflow_condition(tag) {
                                    InflowCondition::Dirichlet(g) => g(t, *x) * an.abs(),
                                    InflowCondition::Flux(g) => g(t, *x),
                                }
                            }
                        };
                        for j in 0..nk {
                            rm[j] += w * value * psi_m[j];
                        }
                    }
                }
            }
        });

        let mut leaf_r = vec![0.0; u.len()];
        par::for_each_chunk_mut(&mut leaf_r, nk, |leaf, r| {
            let cell = &self.cells[leaf];
            let ul = &u[leaf * nk..(leaf + 1) * nk];
            for (q, x) in cell.points.iter().enumerate() {
                let w = self.cell_weights[q] * cell.det;
                let f = (problem.source)(t, *x);
                let psi = self.cell_tab.values_at(q);
                let grads = self.cell_tab.grads_at(q);
                let val = dot(ul, psi);
                let ga = match &boundary.steady {
                    Some(v) => v.cell[leaf * ncq + q],
                    None => {
                        let a = (problem.velocity)(t, *x);
                        let m = cell.inv_t;
                        [a[0] * m[0][0] + a[1] * m[1][0], a[0] * m[0][1] + a[1] * m[1][1]]
                    }
                };
                for j in 0..nk {
                    let adg = ga[0] * grads[j][0] + ga[1] * grads[j][1];
                    r[j] += w * (f * psi[j] + val * adg);
                }
            }
            for &(f, side) in mesh.faces_of(leaf) {
                let offset = match side {
                    crate::mesh::Side::Minus => 2 * f * nk,
                    crate::mesh::Side::Plus => (2 * f + 1) * nk,
                };
                let src = &face_r[offset..offset + nk];
                for (o, v) in r.iter_mut().zip(src) {
                    *o += v;
                }
            }
        });
        leaf_r
    }

    /// Applies the transpose of the leaf embedding: `out = Eᵀ leaf_r`.
    fn gather(&self, leaf_r: &[f64], out: &mut [f64]) {
        let space = &self.space;
        let nk = self.nk;
        let (dk, dl, dm) = space.degrees().local_dims();
        let n = dk + dl;
        let mesh = space.mesh();
        let n_coarse = mesh.coarse().num_elements();
        let mut local = vec![0.0; n_coarse * n];
        par::for_each_chunk_mut(&mut local, n, |c, y| {
            for leaf in mesh.leaves_of(c) {
                let e = space.leaf_embedding(leaf);
                let r = &leaf_r[leaf * nk..(leaf + 1) * nk];
                for (j, rj) in r.iter().enumerate() {
                    for (yi, a) in y.iter_mut().zip(&e[j * n..(j + 1) * n]) {
                        *yi += a * rj;
                    }
                }
            }
        });
        let n_cg = space.num_cg();
        out[..n_cg].fill(0.0);
        for c in 0..n_coarse {
            for (&g, v) in space.cg_dofs(c).iter().zip(&local[c * n..c * n + dk]) {
                out[g] += v;
            }
        }
        let (_, rest) = out.split_at_mut(n_cg);
        let (out_l, out_m) = rest.split_at_mut(space.m_range().start - n_cg);
        if dl > 0 {
            par::for_each_chunk_mut(out_l, dl, |c, o| {
                o.copy_from_slice(&local[c * n + dk..(c + 1) * n]);
            });
        }
        if dm > 0 {
            par::for_each_chunk_mut(out_m, dm, |leaf, o| {
                o.copy_from_slice(&leaf_r[leaf * nk..leaf * nk + dm]);
            });
        }
    }

    /// Solves `M x = r` by static condensation; the CG block of `x` is the
    /// initial guess. Returns the statistics of the condensed CG solve.
    pub fn solve_mass_into(&self, r: &[f64], x: &mut [f64]) -> Result<CgStats> {
        self.condensed.solve(&self.space, r, x, CgOptions::default())
    }

    /// Solves `M x = r` starting from zero.
    pub fn solve_mass(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.space.size()];
        self.solve_mass_into(r, &mut x)?;
        Ok(x)
    }

    /// Minimum-norm solution of `M x = r` by unpreconditioned CG on the
    /// assembled matrix. Slower than [`Self::solve_mass`]; the embedded
    /// fields of both agree.
    pub fn solve_mass_full(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(solve_semidefinite(self.mass_matrix(), r, CgOptions::default())?.0)
    }

    /// `½ Σ_F ∫_F |a·ν| [U]²` over all faces, with `[U] = U` on the boundary.
    pub fn upwind_dissipation(&self, problem: &ProblemSpec, t: f64, c: &[f64]) -> Result<f64> {
        let u = self.leaf_values(c)?;
        let nk = self.nk;
        let mesh = self.space.mesh();
        let parts = par::map_indexed(self.faces.len(), |f| {
            let face = &mesh.faces()[f];
            let cache = &self.faces[f];
            let mut s = 0.0;
            for (q, x) in cache.points.iter().enumerate() {
                let a = (problem.velocity)(t, *x);
                let an = a[0] * face.normal[0] + a[1] * face.normal[1];
                let vm = dot(&u[face.minus * nk..(face.minus + 1) * nk], &cache.psi_minus[q * nk..(q + 1) * nk]);
                let vp = face.plus.map_or(0.0, |p| {
                    dot(&u[p * nk..(p + 1) * nk], &cache.psi_plus[q * nk..(q + 1) * nk])
                });
                s += cache.weights[q] * an.abs() * (vm - vp).powi(2);
            }
            s
        });
        Ok(0.5 * parts.iter().sum::<f64>())
    }

    /// L² norm and extrema at cell quadrature points.
    pub fn field_stats(&self, c: &[f64]) -> Result<FieldStats> {
        let u = self.leaf_values(c)?;
        let nk = self.nk;
        let parts = par::map_indexed(self.cells.len(), |leaf| {
            let ul = &u[leaf * nk..(leaf + 1) * nk];
            let sq = self.cells[leaf].det * dot(ul, ul);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for q in 0..self.cell_weights.len() {
                let v = dot(ul, self.cell_tab.values_at(q));
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (sq, lo, hi)
        });
        let (sq, min, max) = parts.into_iter().fold(
            (0.0, f64::INFINITY, f64::NEG_INFINITY),
            |(s, lo, hi), (a, b, c)| (s + a, lo.min(b), hi.max(c)),
        );
        Ok(FieldStats {
            l2_norm: sq.sqrt(),
            min,
            max,
        })
    }

    /// `sup |a(0, x)|` over the cell quadrature points.
    pub fn max_speed(&self, problem: &ProblemSpec) -> f64 {
        par::map_indexed(self.cells.len(), |leaf| {
            self.cells[leaf]
                .points
                .iter()
                .map(|x| {
                    let a = (problem.velocity)(0.0, *x);
                    a[0].hypot(a[1])
                })
                .fold(0.0f64, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max)
    }
}
