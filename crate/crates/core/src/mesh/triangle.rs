use crate::Point;

/// A straight-edged triangle with its affine reference map
/// `x = v₀ + J ξ` from the unit reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub vertices: [Point; 3],
}

impl Triangle {
    pub fn new(a: Point, b: Point, c: Point) -> Self {
        Self {
            vertices: [a, b, c],
        }
    }

    pub fn signed_area(&self) -> f64 {
        let [a, b, c] = self.vertices;
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Longest edge length.
    pub fn diameter(&self) -> f64 {
        (0..3)
            .map(|e| dist(self.vertices[e], self.vertices[(e + 1) % 3]))
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> Point {
        let [a, b, c] = self.vertices;
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Jacobian of the reference map, `[[∂x/∂ξ, ∂x/∂η], [∂y/∂ξ, ∂y/∂η]]`.
    pub fn jacobian(&self) -> [[f64; 2]; 2] {
        let [a, b, c] = self.vertices;
        [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]]
    }

    /// `det J = 2 · signed area`.
    pub fn det_jacobian(&self) -> f64 {
        2.0 * self.signed_area()
    }

    pub fn map(&self, xi: Point) -> Point {
        let a = self.vertices[0];
        let j = self.jacobian();
        [
            a[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            a[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    pub fn inverse_map(&self, x: Point) -> Point {
        let a = self.vertices[0];
        let j = self.jacobian();
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let dx = [x[0] - a[0], x[1] - a[1]];
        [
            (j[1][1] * dx[0] - j[0][1] * dx[1]) / det,
            (-j[1][0] * dx[0] + j[0][0] * dx[1]) / det,
        ]
    }

    /// `J⁻ᵀ`, mapping reference gradients to physical gradients.
    pub fn inverse_transpose_jacobian(&self) -> [[f64; 2]; 2] {
        let j = self.jacobian();
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ]
    }

    /// Barycentric coordinates of `x`.
    pub fn barycentric(&self, x: Point) -> [f64; 3] {
        let xi = self.inverse_map(x);
        [1.0 - xi[0] - xi[1], xi[0], xi[1]]
    }

    pub fn contains(&self, x: Point, tol: f64) -> bool {
        self.barycentric(x).iter().all(|&b| b >= -tol)
    }

    /// Red refinement: three corner children and the middle child, in the
    /// order `(a, m_ab, m_ca), (m_ab, b, m_bc), (m_ca, m_bc, c), (m_ab, m_bc, m_ca)`.
    pub fn red_children(&self) -> [Triangle; 4] {
        let [a, b, c] = self.vertices;
        let ab = midpoint(a, b);
        let bc = midpoint(b, c);
        let ca = midpoint(c, a);
        [
            Triangle::new(a, ab, ca),
            Triangle::new(ab, b, bc),
            Triangle::new(ca, bc, c),
            Triangle::new(ab, bc, ca),
        ]
    }
}

pub(crate) fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}
