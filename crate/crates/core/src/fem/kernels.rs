//! Element kernels written once against [`Scalar`].
//!
//! The same code yields residuals (f64), element Jacobians (duals seeded on
//! the 15 local dofs) and coordinate derivatives (duals seeded on the six
//! vertex coordinates).

use std::sync::OnceLock;

use super::quadrature::TRI7;
use super::space::{p2_grad_coeffs, p2_values, LOCAL_DOFS, P2_LOCAL};
use crate::ad::{Dual, Scalar};

/// Per-element material coefficients of the momentum equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElemCoeffs {
    /// Density times the convective scaling.
    pub rho: f64,
    pub mu: f64,
    /// Linear drag: plate friction γ in the fluid, μ/K in the porous strip.
    pub sigma: f64,
}

/// Area and barycentric gradients of an affine triangle.
pub struct Geom<T> {
    pub area: T,
    pub grad_l: [[T; 2]; 3],
}

pub fn geom<T: Scalar>(x: &[[T; 2]; 3]) -> Geom<T> {
    let two_a = (x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[1][1] - x[0][1]) * (x[2][0] - x[0][0]);
    let inv = T::cst(1.0) / two_a;
    let grad_l = [
        [(x[1][1] - x[2][1]) * inv, (x[2][0] - x[1][0]) * inv],
        [(x[2][1] - x[0][1]) * inv, (x[0][0] - x[2][0]) * inv],
        [(x[0][1] - x[1][1]) * inv, (x[1][0] - x[0][0]) * inv],
    ];
    Geom {
        area: two_a * 0.5,
        grad_l,
    }
}

/// Basis tables at the points of [`TRI7`].
pub struct Tables {
    pub l: [[f64; 3]; 7],
    pub w: [f64; 7],
    pub n: [[f64; P2_LOCAL]; 7],
    pub c: [[[f64; 3]; P2_LOCAL]; 7],
}

pub fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = Tables {
            l: [[0.0; 3]; 7],
            w: [0.0; 7],
            n: [[0.0; P2_LOCAL]; 7],
            c: [[[0.0; 3]; P2_LOCAL]; 7],
        };
        for (q, (l, w)) in TRI7.iter().enumerate() {
            t.l[q] = *l;
            t.w[q] = *w;
            t.n[q] = p2_values(*l);
            t.c[q] = p2_grad_coeffs(*l);
        }
        t
    })
}

/// Gradients of the six P2 basis functions given barycentric gradients.
#[inline]
pub fn basis_gradients<T: Scalar>(grad_l: &[[T; 2]; 3], c: &[[f64; 3]; P2_LOCAL]) -> [[T; 2]; P2_LOCAL] {
    let mut g = [[T::zero(); 2]; P2_LOCAL];
    for k in 0..P2_LOCAL {
        for j in 0..3 {
            let cc = c[k][j];
            if cc != 0.0 {
                g[k][0] += grad_l[j][0] * cc;
                g[k][1] += grad_l[j][1] * cc;
            }
        }
    }
    g
}

/// Velocity and its gradient `du[c][d] = ∂_d u_c` from local velocity dofs
/// (ux in slots 0..6, uy in 6..12).
#[inline]
pub fn velocity_and_gradient<T: Scalar>(
    u: &[T],
    n: &[f64; P2_LOCAL],
    gn: &[[T; 2]; P2_LOCAL],
) -> ([T; 2], [[T; 2]; 2]) {
    let mut uv = [T::zero(); 2];
    let mut du = [[T::zero(); 2]; 2];
    for k in 0..P2_LOCAL {
        for comp in 0..2 {
            let uk = u[comp * P2_LOCAL + k];
            uv[comp] += uk * n[k];
            du[comp][0] += uk * gn[k][0];
            du[comp][1] += uk * gn[k][1];
        }
    }
    (uv, du)
}

/// Weak residual of one element: momentum
/// ∫ ρ(u·∇u)·v + μ∇u:∇v + σ u·v − p ∇·v and continuity −∫ q ∇·u.
pub fn element_residual<T: Scalar>(x: &[[T; 2]; 3], u: &[T; LOCAL_DOFS], c: &ElemCoeffs) -> [T; LOCAL_DOFS] {
    let tab = tables();
    let g = geom(x);
    let mut r = [T::zero(); LOCAL_DOFS];
    for q in 0..7 {
        let w = g.area * tab.w[q];
        let n = &tab.n[q];
        let l = tab.l[q];
        let gn = basis_gradients(&g.grad_l, &tab.c[q]);
        let (uv, du) = velocity_and_gradient(u, n, &gn);
        let p = u[12] * l[0] + u[13] * l[1] + u[14] * l[2];
        let div = du[0][0] + du[1][1];
        for comp in 0..2 {
            let react = (uv[0] * du[comp][0] + uv[1] * du[comp][1]) * c.rho + uv[comp] * c.sigma;
            for k in 0..P2_LOCAL {
                let visc = (du[comp][0] * gn[k][0] + du[comp][1] * gn[k][1]) * c.mu;
                r[comp * P2_LOCAL + k] += (react * n[k] + visc - p * gn[k][comp]) * w;
            }
        }
        for i in 0..3 {
            r[12 + i] -= div * w * l[i];
        }
    }
    r
}

/// Residual and Jacobian `jac[i][j] = ∂r_i/∂u_j`.
pub fn element_jacobian(
    x: &[[f64; 2]; 3],
    u: &[f64; LOCAL_DOFS],
    c: &ElemCoeffs,
) -> ([f64; LOCAL_DOFS], [[f64; LOCAL_DOFS]; LOCAL_DOFS]) {
    let xd = x.map(|p| p.map(Dual::<LOCAL_DOFS>::constant));
    let mut ud = [Dual::<LOCAL_DOFS>::constant(0.0); LOCAL_DOFS];
    for j in 0..LOCAL_DOFS {
        ud[j] = Dual::var(u[j], j);
    }
    let rd = element_residual(&xd, &ud, c);
    (rd.map(|v| v.v), rd.map(|v| v.d))
}

/// Residual derivative with respect to the vertex coordinates,
/// `out[i][2a + d] = ∂r_i/∂x_{a,d}`.
pub fn element_coord_derivative(
    x: &[[f64; 2]; 3],
    u: &[f64; LOCAL_DOFS],
    c: &ElemCoeffs,
) -> [[f64; 6]; LOCAL_DOFS] {
    let mut xd = [[Dual::<6>::constant(0.0); 2]; 3];
    for a in 0..3 {
        for d in 0..2 {
            xd[a][d] = Dual::var(x[a][d], 2 * a + d);
        }
    }
    let ud = u.map(Dual::<6>::constant);
    element_residual(&xd, &ud, c).map(|v| v.d)
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: [[f64; 2]; 3] = [[0.1, 0.0], [1.3, 0.2], [0.4, 0.9]];
    const C: ElemCoeffs = ElemCoeffs {
        rho: 0.7,
        mu: 0.3,
        sigma: 1.1,
    };

    fn state() -> [f64; LOCAL_DOFS] {
        let mut u = [0.0; LOCAL_DOFS];
        for (i, v) in u.iter_mut().enumerate() {
            *v = ((i as f64) * 0.37).sin();
        }
        u
    }

    #[test]
    fn element_jacobian_matches_finite_differences() {
        let u = state();
        let (r0, jac) = element_jacobian(&X, &u, &C);
        assert_eq!(r0, element_residual(&X, &u, &C));
        let h = 1e-6;
        for j in 0..LOCAL_DOFS {
            let (mut up, mut um) = (u, u);
            up[j] += h;
            um[j] -= h;
            let (rp, rm) = (element_residual(&X, &up, &C), element_residual(&X, &um, &C));
            for i in 0..LOCAL_DOFS {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                assert!((fd - jac[i][j]).abs() < 1e-8 * (1.0 + jac[i][j].abs()), "{i},{j}");
            }
        }
    }

    #[test]
    fn coordinate_derivative_matches_finite_differences() {
        let u = state();
        let dx = element_coord_derivative(&X, &u, &C);
        let h = 1e-6;
        for a in 0..3 {
            for d in 0..2 {
                let (mut xp, mut xm) = (X, X);
                xp[a][d] += h;
                xm[a][d] -= h;
                let (rp, rm) = (element_residual(&xp, &u, &C), element_residual(&xm, &u, &C));
                for i in 0..LOCAL_DOFS {
                    let fd = (rp[i] - rm[i]) / (2.0 * h);
                    assert!((fd - dx[i][2 * a + d]).abs() < 1e-7 * (1.0 + fd.abs()));
                }
            }
        }
    }

    #[test]
    fn stokes_element_matrix_is_symmetric() {
        let c = ElemCoeffs { rho: 0.0, ..C };
        let (_, jac) = element_jacobian(&X, &state(), &c);
        for i in 0..LOCAL_DOFS {
            for j in 0..LOCAL_DOFS {
                assert!((jac[i][j] - jac[j][i]).abs() < 1e-13);
            }
        }
    }
}
