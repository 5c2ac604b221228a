use std::sync::OnceLock;

use crate::{Error, Result};

/// Quadrature on the reference cell of dimension `D`: the unit triangle
/// `(0,0), (1,0), (0,1)` for `D = 2`, the interval `[0, 1]` for `D = 1`.
#[derive(Clone, Debug)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub exactness: u32,
}

pub type CellRule = QuadratureRule<2>;
pub type EdgeRule = QuadratureRule<1>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; D], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

pub const MAX_CELL_EXACTNESS: u32 = 8;
pub const MAX_EDGE_EXACTNESS: u32 = 9;

/// Symmetric triangle rule with positive weights exact to `exactness`.
pub fn cell_rule(exactness: u32) -> Result<&'static CellRule> {
    static RULES: OnceLock<Vec<CellRule>> = OnceLock::new();
    if exactness > MAX_CELL_EXACTNESS {
        return Err(Error::UnsupportedExactness {
            requested: exactness,
            max: MAX_CELL_EXACTNESS,
        });
    }
    let rules = RULES.get_or_init(|| (0..=MAX_CELL_EXACTNESS).map(build_cell_rule).collect());
    Ok(&rules[exactness as usize])
}

/// Gauss–Legendre rule on `[0, 1]` exact to `exactness`.
pub fn edge_rule(exactness: u32) -> Result<&'static EdgeRule> {
    static RULES: OnceLock<Vec<EdgeRule>> = OnceLock::new();
    if exactness > MAX_EDGE_EXACTNESS {
        return Err(Error::UnsupportedExactness {
            requested: exactness,
            max: MAX_EDGE_EXACTNESS,
        });
    }
    let rules = RULES.get_or_init(|| {
        (0..=MAX_EDGE_EXACTNESS)
            .map(|p| {
                let n = (p as usize + 2) / 2;
                let (x, w) = gauss_legendre(n);
                EdgeRule {
                    points: x.iter().map(|&x| [0.5 * (x + 1.0)]).collect(),
                    weights: w.iter().map(|w| 0.5 * w).collect(),
                    exactness: p,
                }
            })
            .collect()
    });
    Ok(&rules[exactness as usize])
}

/// Orbits of barycentric points with per-point weights normalised to unit
/// area.
enum Orbit {
    Centroid(f64),
    /// `(a, a, 1 - 2a)` and permutations.
    Three(f64, f64),
    /// `(a, b, 1 - a - b)` and permutations.
    Six(f64, f64, f64),
}

fn dunavant(degree: u32) -> (u32, Vec<Orbit>) {
    use Orbit::*;
    let s15 = 15f64.sqrt();
    match degree {
        0 | 1 => (1, vec![Centroid(1.0)]),
        2 => (2, vec![Three(1.0 / 6.0, 1.0 / 3.0)]),
        3 | 4 => (
            4,
            vec![
                Three(0.445948490915965, 0.223381589678011),
                Three(0.091576213509771, 0.109951743655322),
            ],
        ),
        5 => (
            5,
            vec![
                Centroid(0.225),
                Three((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0),
                Three((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0),
            ],
        ),
        6 => (
            6,
            vec![
                Three(0.249286745170910, 0.116786275726379),
                Three(0.063089014491502, 0.050844906370207),
                Six(0.053145049844817, 0.310352451033784, 0.082851075618374),
            ],
        ),
        _ => (
            8,
            vec![
                Centroid(0.144315607677787),
                Three(0.459292588292723, 0.095091634267285),
                Three(0.170569307751760, 0.103217370534718),
                Three(0.050547228317031, 0.032458497623198),
                Six(0.008394777409958, 0.263112829634638, 0.027230314174435),
            ],
        ),
    }
}

fn build_cell_rule(exactness: u32) -> CellRule {
    let (degree, orbits) = dunavant(exactness);
    let mut bary: Vec<([f64; 3], f64)> = Vec::new();
    for orbit in orbits {
        match orbit {
            Orbit::Centroid(w) => bary.push(([1.0 / 3.0; 3], w)),
            Orbit::Three(a, w) => {
                let b = 1.0 - 2.0 * a;
                for p in [[a, a, b], [a, b, a], [b, a, a]] {
                    bary.push((p, w));
                }
            }
            Orbit::Six(a, b, w) => {
                let c = 1.0 - a - b;
                for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    bary.push((p, w));
                }
            }
        }
    }
    CellRule {
        points: bary.iter().map(|(p, _)| [p[1], p[2]]).collect(),
        weights: bary.iter().map(|(_, w)| 0.5 * w).collect(),
        exactness: degree.max(exactness),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the three-term recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ over the reference triangle of x^a y^b = a! b! / (a + b + 2)!.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn cell_rules_integrate_monomials() {
        for p in 0..=MAX_CELL_EXACTNESS {
            let rule = cell_rule(p).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert_relative_eq!(rule.weights.iter().sum::<f64>(), 0.5, max_relative = 1e-14);
            for a in 0..=p {
                for b in 0..=(p - a) {
                    let q: f64 = rule
                        .iter()
                        .map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32))
                        .sum();
                    assert_relative_eq!(q, monomial_integral(a, b), max_relative = 1e-13);
                }
            }
        }
    }

    #[test]
    fn edge_rules_integrate_monomials() {
        for p in 0..=MAX_EDGE_EXACTNESS {
            let rule = edge_rule(p).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=p {
                let q: f64 = rule.iter().map(|(x, w)| w * x[0].powi(a as i32)).sum();
                assert_relative_eq!(q, 1.0 / (a as f64 + 1.0), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn small_cases() {
        let one: f64 = cell_rule(1).unwrap().weights.iter().sum();
        assert_relative_eq!(one, 0.5, epsilon = 1e-15);
        let t3: f64 = edge_rule(3).unwrap().iter().map(|(x, w)| w * x[0].powi(3)).sum();
        assert!((t3 - 0.25).abs() < 1e-14);
        // x³y³ with the k = 2 solver rule: 3! 3! / 8! = 1/1120
        let q: f64 = cell_rule(6)
            .unwrap()
            .iter()
            .map(|(x, w)| w * x[0].powi(3) * x[1].powi(3))
            .sum();
        assert_relative_eq!(q, 1.0 / 1120.0, max_relative = 1e-13);
    }

    #[test]
    fn rejects_unsupported_exactness() {
        assert!(cell_rule(9).is_err());
        assert!(edge_rule(10).is_err());
    }
}
