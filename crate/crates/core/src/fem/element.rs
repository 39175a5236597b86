//! Quadratic Lagrange triangle: shape functions, strain-displacement
//! matrices and a three point quadrature rule exact for quadratics.

/// Reference points `(xi, eta)` and weights (reference area 1/2).
pub const QUAD_POINTS: [([f64; 2], f64); 3] = [
    ([1.0 / 6.0, 1.0 / 6.0], 1.0 / 6.0),
    ([2.0 / 3.0, 1.0 / 6.0], 1.0 / 6.0),
    ([1.0 / 6.0, 2.0 / 3.0], 1.0 / 6.0),
];

/// Shape function values at `(xi, eta)`.
pub fn shape(xi: f64, eta: f64) -> [f64; 6] {
    let l = [1.0 - xi - eta, xi, eta];
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Shape function derivatives with respect to `xi` and `eta`.
pub fn shape_grad(xi: f64, eta: f64) -> [[f64; 2]; 6] {
    let l0 = 1.0 - xi - eta;
    [
        [1.0 - 4.0 * l0, 1.0 - 4.0 * l0],
        [4.0 * xi - 1.0, 0.0],
        [0.0, 4.0 * eta - 1.0],
        [4.0 * (l0 - xi), -4.0 * xi],
        [4.0 * eta, 4.0 * xi],
        [-4.0 * eta, 4.0 * (l0 - eta)],
    ]
}

/// Precomputed data at one quadrature point of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadData {
    /// Rows map the 12 local displacements to `(e_xx, e_yy, gamma_xy)`.
    pub b: [[f64; 12]; 3],
    /// Quadrature weight times the Jacobian determinant.
    pub weight: f64,
    pub shape: [f64; 6],
}

/// Strain-displacement data at every quadrature point; local displacement
/// order is `(u_x0, u_y0, u_x1, u_y1, ...)`.
pub fn element_quadrature(coords: &[[f64; 2]; 6]) -> [QuadData; 3] {
    std::array::from_fn(|q| {
        let ([xi, eta], w) = QUAD_POINTS[q];
        let dn = shape_grad(xi, eta);
        let mut jac = [[0.0; 2]; 2];
        for (k, d) in dn.iter().enumerate() {
            for r in 0..2 {
                for c in 0..2 {
                    jac[r][c] += coords[k][r] * d[c];
                }
            }
        }
        // jac[r][c] = d x_r / d xi_c
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        let mut b = [[0.0; 12]; 3];
        for (k, d) in dn.iter().enumerate() {
            let dx = d[0] * inv[0][0] + d[1] * inv[1][0];
            let dy = d[0] * inv[0][1] + d[1] * inv[1][1];
            b[0][2 * k] = dx;
            b[1][2 * k + 1] = dy;
            b[2][2 * k] = dy;
            b[2][2 * k + 1] = dx;
        }
        QuadData {
            b,
            weight: w * det,
            shape: shape(xi, eta),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        for &([x, y], _) in &QUAD_POINTS {
            let n = shape(x, y);
            assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let g = shape_grad(x, y);
            assert!(g.iter().map(|d| d[0]).sum::<f64>().abs() < 1e-14);
            assert!(g.iter().map(|d| d[1]).sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn reproduces_linear_strain_field() {
        let c = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.5], [0.0, 0.5]];
        let q = element_quadrature(&c);
        assert!((q.iter().map(|d| d.weight).sum::<f64>() - 1.0).abs() < 1e-14);
        // u = (0.1 x + 0.2 y, 0.3 x - 0.4 y)
        let mut u = [0.0; 12];
        for k in 0..6 {
            u[2 * k] = 0.1 * c[k][0] + 0.2 * c[k][1];
            u[2 * k + 1] = 0.3 * c[k][0] - 0.4 * c[k][1];
        }
        for d in &q {
            let e: Vec<f64> = d.b.iter().map(|row| row.iter().zip(&u).map(|(a, b)| a * b).sum()).collect();
            assert!((e[0] - 0.1).abs() < 1e-14 && (e[1] + 0.4).abs() < 1e-14 && (e[2] - 0.5).abs() < 1e-14);
        }
    }
}
