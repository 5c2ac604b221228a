use std::sync::OnceLock;

use super::quadrature::CellRule;
use crate::{Error, Point, Result};

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 2;

/// Dimension of `P_p` in two variables.
pub const fn dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

const NUM_MONOMIALS: usize = dim(MAX_DEGREE);
/// Exponents of `1, x, y, x², xy, y²`.
const EXPONENTS: [(u32, u32); NUM_MONOMIALS] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    /// Nodal basis on vertices and edge midpoints.
    Lagrange,
    /// L²-orthonormal, hierarchical in the degree.
    Modal,
}

/// Polynomial basis on the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceBasis {
    kind: BasisKind,
    degree: usize,
}

/// Basis values and reference gradients at the points of a rule.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub dim: usize,
    /// `values[q * dim + i]`.
    pub values: Vec<f64>,
    /// `grads[q * dim + i]`.
    pub grads: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.dim..(q + 1) * self.dim]
    }

    pub fn grads_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.dim..(q + 1) * self.dim]
    }
}

impl ReferenceBasis {
    pub fn lagrange(degree: usize) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::InvalidDegrees(format!(
                "Lagrange degree must be 1 or 2, got {degree}"
            )));
        }
        Ok(Self {
            kind: BasisKind::Lagrange,
            degree,
        })
    }

    pub fn modal(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::InvalidDegrees(format!(
                "modal degree must be at most {MAX_DEGREE}, got {degree}"
            )));
        }
        Ok(Self {
            kind: BasisKind::Modal,
            degree,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        dim(self.degree)
    }

    /// Lagrange nodes: vertices, then midpoints of edges (0,1), (1,2), (2,0).
    pub fn nodes(&self) -> Vec<Point> {
        let mut nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        if self.degree == 2 {
            nodes.extend([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]);
        }
        nodes
    }

    pub fn eval(&self, xi: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(xi, &mut out);
        out
    }

    pub fn eval_grad(&self, xi: Point) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.dim()];
        self.eval_grad_into(xi, &mut out);
        out
    }

    pub fn eval_into(&self, xi: Point, out: &mut [f64]) {
        let [x, y] = xi;
        match self.kind {
            BasisKind::Lagrange => {
                let l = [1.0 - x - y, x, y];
                if self.degree == 1 {
                    out[..3].copy_from_slice(&l);
                } else {
                    for i in 0..3 {
                        out[i] = l[i] * (2.0 * l[i] - 1.0);
                    }
                    out[3] = 4.0 * l[0] * l[1];
                    out[4] = 4.0 * l[1] * l[2];
                    out[5] = 4.0 * l[2] * l[0];
                }
            }
            BasisKind::Modal => {
                let mono = [1.0, x, y, x * x, x * y, y * y];
                let c = modal_coefficients();
                for (i, o) in out.iter_mut().enumerate().take(self.dim()) {
                    *o = (0..=i).map(|j| c[i][j] * mono[j]).sum();
                }
            }
        }
    }

    pub fn eval_grad_into(&self, xi: Point, out: &mut [[f64; 2]]) {
        let [x, y] = xi;
        match self.kind {
            BasisKind::Lagrange => {
                let l = [1.0 - x - y, x, y];
                let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
                if self.degree == 1 {
                    out[..3].copy_from_slice(&dl);
                } else {
                    for i in 0..3 {
                        let s = 4.0 * l[i] - 1.0;
                        out[i] = [s * dl[i][0], s * dl[i][1]];
                    }
                    for (slot, (a, b)) in [(3, (0, 1)), (4, (1, 2)), (5, (2, 0))] {
                        out[slot] = [
                            4.0 * (dl[a][0] * l[b] + l[a] * dl[b][0]),
                            4.0 * (dl[a][1] * l[b] + l[a] * dl[b][1]),
                        ];
                    }
                }
            }
            BasisKind::Modal => {
                let dx = [0.0, 1.0, 0.0, 2.0 * x, y, 0.0];
                let dy = [0.0, 0.0, 1.0, 0.0, x, 2.0 * y];
                let c = modal_coefficients();
                for (i, o) in out.iter_mut().enumerate().take(self.dim()) {
                    *o = [
                        (0..=i).map(|j| c[i][j] * dx[j]).sum(),
                        (0..=i).map(|j| c[i][j] * dy[j]).sum(),
                    ];
                }
            }
        }
    }

    pub fn tabulate(&self, rule: &CellRule) -> Tabulation {
        let dim = self.dim();
        let mut values = vec![0.0; rule.len() * dim];
        let mut grads = vec![[0.0; 2]; rule.len() * dim];
        for (q, p) in rule.points.iter().enumerate() {
            self.eval_into(*p, &mut values[q * dim..(q + 1) * dim]);
            self.eval_grad_into(*p, &mut grads[q * dim..(q + 1) * dim]);
        }
        Tabulation { dim, values, grads }
    }
}

/// Lower-triangular coefficients of the orthonormal modal functions in the
/// monomials `1, x, y, x², xy, y²`, from Gram–Schmidt against the exact
/// moments `∫ xᵃ yᵇ = a! b! / (a + b + 2)!`.
fn modal_coefficients() -> &'static [[f64; NUM_MONOMIALS]; NUM_MONOMIALS] {
    static COEFFS: OnceLock<[[f64; NUM_MONOMIALS]; NUM_MONOMIALS]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let mut gram = [[0.0; NUM_MONOMIALS]; NUM_MONOMIALS];
        for (i, &(ai, bi)) in EXPONENTS.iter().enumerate() {
            for (j, &(aj, bj)) in EXPONENTS.iter().enumerate() {
                let (a, b) = (ai + aj, bi + bj);
                gram[i][j] = fact(a) * fact(b) / fact(a + b + 2);
            }
        }
        let inner = |u: &[f64; NUM_MONOMIALS], v: &[f64; NUM_MONOMIALS]| -> f64 {
            (0..NUM_MONOMIALS)
                .map(|i| (0..NUM_MONOMIALS).map(|j| u[i] * gram[i][j] * v[j]).sum::<f64>())
                .sum()
        };
        let mut basis = [[0.0; NUM_MONOMIALS]; NUM_MONOMIALS];
        for i in 0..NUM_MONOMIALS {
            let mut v = [0.0; NUM_MONOMIALS];
            v[i] = 1.0;
            // two passes of classical Gram–Schmidt
            for _ in 0..2 {
                for prev in basis.iter().take(i) {
                    let p = inner(&v, prev);
                    for j in 0..NUM_MONOMIALS {
                        v[j] -= p * prev[j];
                    }
                }
            }
            let norm = inner(&v, &v).sqrt();
            for x in &mut v {
                *x /= norm;
            }
            basis[i] = v;
        }
        basis
    })
}
