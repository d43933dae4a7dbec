//! Bulk integrands `f(x, ξ)`, their gradients and Fenchel conjugates.

use crate::error::{Error, Result};
use crate::geometry::{Grid, Point};

pub type Vec2 = [f64; 2];

/// Symmetric 2×2 matrix stored as `[a11, a12, a22]`.
pub type Sym2 = [f64; 3];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
fn sym_mul(a: &Sym2, v: Vec2) -> Vec2 {
    [a[0] * v[0] + a[1] * v[1], a[1] * v[0] + a[2] * v[1]]
}

fn sym_inv(a: &Sym2) -> Sym2 {
    let det = a[0] * a[2] - a[1] * a[1];
    [a[2] / det, -a[1] / det, a[0] / det]
}

/// Eigenvalues (ascending) of a symmetric matrix.
pub fn sym_eigenvalues(a: &Sym2) -> (f64, f64) {
    let mean = 0.5 * (a[0] + a[2]);
    let rad = (0.5 * (a[0] - a[2])).hypot(a[1]);
    (mean - rad, mean + rad)
}

/// Orientation of the Meyers coefficient relative to the radial direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeyersOrientation {
    /// Eigenvalue `1/K` along `x/|x|`, `K` tangentially.
    RadialSoft,
    /// Eigenvalue `K` along `x/|x|`, `1/K` tangentially.
    RadialStiff,
}

impl MeyersOrientation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "radialSoft" | "radial_soft" | "radial-soft" => Some(MeyersOrientation::RadialSoft),
            "radialStiff" | "radial_stiff" | "radial-stiff" => Some(MeyersOrientation::RadialStiff),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeyersOrientation::RadialSoft => "radialSoft",
            MeyersOrientation::RadialStiff => "radialStiff",
        }
    }

    /// `(a_rad, a_tan)` eigenvalues for ratio `k`.
    pub fn eigenpair(self, k: f64) -> (f64, f64) {
        match self {
            MeyersOrientation::RadialSoft => (1.0 / k, k),
            MeyersOrientation::RadialStiff => (k, 1.0 / k),
        }
    }

    /// Exponent `γ` of the separable solution `r^γ cos θ` of `div(A∇u) = 0`.
    ///
    /// Substituting into the equation gives `γ² a_rad = a_tan`.
    pub fn exponent(self, k: f64) -> f64 {
        let (a_rad, a_tan) = self.eigenpair(k);
        (a_tan / a_rad).sqrt()
    }
}

/// Scalar coefficient `c(x) > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarCoefficient {
    Constant(f64),
    /// `low` on cells with even `floor(x/period) + floor(y/period)`, `high` otherwise.
    Checkerboard { low: f64, high: f64, period: f64 },
}

impl ScalarCoefficient {
    pub fn at(&self, x: Point) -> f64 {
        match *self {
            ScalarCoefficient::Constant(c) => c,
            ScalarCoefficient::Checkerboard { low, high, period } => {
                let k = (x.x / period).floor() as i64 + (x.y / period).floor() as i64;
                if k.rem_euclid(2) == 0 {
                    low
                } else {
                    high
                }
            }
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            ScalarCoefficient::Constant(c) => (c, c),
            ScalarCoefficient::Checkerboard { low, high, .. } => (low.min(high), low.max(high)),
        }
    }
}

/// Symmetric positive definite coefficient `A(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixCoefficient {
    Constant(Sym2),
    Meyers { k: f64, orientation: MeyersOrientation, center: Point },
}

impl MatrixCoefficient {
    pub fn at(&self, x: Point) -> Sym2 {
        match *self {
            MatrixCoefficient::Constant(a) => a,
            MatrixCoefficient::Meyers { k, orientation, center } => {
                let d = x - center;
                let r = d.norm();
                if r == 0.0 {
                    return [1.0, 0.0, 1.0];
                }
                let (nx, ny) = (d.x / r, d.y / r);
                let (a_rad, a_tan) = orientation.eigenpair(k);
                // a_rad n⊗n + a_tan τ⊗τ with τ = (-ny, nx)
                [
                    a_rad * nx * nx + a_tan * ny * ny,
                    (a_rad - a_tan) * nx * ny,
                    a_rad * ny * ny + a_tan * nx * nx,
                ]
            }
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            MatrixCoefficient::Constant(a) => sym_eigenvalues(&a),
            MatrixCoefficient::Meyers { k, .. } => (1.0 / k, k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntegrandKind {
    /// `f = (c(x)/p) |ξ|^p`.
    PPower(ScalarCoefficient),
    /// `f = A(x)ξ·ξ` (always `p = 2`).
    QuadraticMatrix(MatrixCoefficient),
}

/// Bulk energy density with its growth constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrand {
    p: f64,
    kind: IntegrandKind,
}

impl Integrand {
    pub fn p_power(p: f64, coefficient: ScalarCoefficient) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("exponent p must lie in (1, inf), got {p}")));
        }
        let (lo, _) = coefficient.bounds();
        if !(lo > 0.0) {
            return Err(Error::invalid("p-power coefficient must be positive"));
        }
        if let ScalarCoefficient::Checkerboard { period, .. } = coefficient {
            if !(period > 0.0) {
                return Err(Error::invalid("checkerboard period must be positive"));
            }
        }
        Ok(Integrand { p, kind: IntegrandKind::PPower(coefficient) })
    }

    pub fn quadratic(coefficient: MatrixCoefficient) -> Result<Self> {
        match coefficient {
            MatrixCoefficient::Constant(a) => {
                let (lo, _) = sym_eigenvalues(&a);
                if !(lo > 0.0) {
                    return Err(Error::invalid("matrix coefficient must be positive definite"));
                }
            }
            MatrixCoefficient::Meyers { k, .. } => {
                if !(k >= 1.0 && k.is_finite()) {
                    return Err(Error::invalid(format!("Meyers ratio K must be >= 1, got {k}")));
                }
            }
        }
        Ok(Integrand { p: 2.0, kind: IntegrandKind::QuadraticMatrix(coefficient) })
    }

    /// `f = |ξ|²`.
    pub fn dirichlet() -> Self {
        Integrand { p: 2.0, kind: IntegrandKind::PPower(ScalarCoefficient::Constant(2.0)) }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Conjugate exponent `p/(p-1)`.
    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn kind(&self) -> &IntegrandKind {
        &self.kind
    }

    /// Whether the Euler-Lagrange equation is linear.
    pub fn is_linear(&self) -> bool {
        self.p == 2.0
    }

    /// Constant `α` with `α|ξ|^p <= f(x, ξ)`.
    pub fn growth_lower(&self) -> f64 {
        match &self.kind {
            IntegrandKind::PPower(c) => c.bounds().0 / self.p,
            IntegrandKind::QuadraticMatrix(a) => a.bounds().0,
        }
    }

    /// Constant `β` with `f(x, ξ) <= β(|ξ|^p + 1)`.
    pub fn growth_upper(&self) -> f64 {
        match &self.kind {
            IntegrandKind::PPower(c) => c.bounds().1 / self.p,
            IntegrandKind::QuadraticMatrix(a) => a.bounds().1,
        }
    }

    /// The pointwise law at `x`.
    pub fn law_at(&self, x: Point) -> CellLaw {
        match &self.kind {
            IntegrandKind::PPower(c) => CellLaw::Power { p: self.p, c: c.at(x) },
            IntegrandKind::QuadraticMatrix(a) => CellLaw::Matrix(a.at(x)),
        }
    }

    /// Coefficients sampled at every cell center.
    pub fn sample(&self, grid: &Grid) -> Vec<CellLaw> {
        (0..grid.n_cells()).map(|c| self.law_at(grid.cell_center(c))).collect()
    }

    pub fn eval_f(&self, x: Point, xi: Vec2) -> f64 {
        self.law_at(x).f(xi)
    }

    pub fn grad_f(&self, x: Point, xi: Vec2) -> Vec2 {
        self.law_at(x).grad(xi)
    }

    pub fn eval_fstar(&self, x: Point, zeta: Vec2) -> Result<f64> {
        Ok(self.law_at(x).fstar(zeta))
    }

    pub fn grad_fstar(&self, x: Point, zeta: Vec2) -> Result<Vec2> {
        Ok(self.law_at(x).grad_fstar(zeta))
    }

    /// Meyers composite coefficient centered at the origin.
    pub fn meyers(k: f64, orientation: MeyersOrientation) -> Result<Self> {
        meyers_integrand(k, orientation)
    }
}

/// Quadratic integrand `A(x)ξ·ξ` with the Meyers coefficient of ratio `k`.
pub fn meyers_integrand(k: f64, orientation: MeyersOrientation) -> Result<Integrand> {
    Integrand::quadratic(MatrixCoefficient::Meyers { k, orientation, center: Point::default() })
}

/// The integrand frozen at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellLaw {
    Power { p: f64, c: f64 },
    Matrix(Sym2),
}

impl CellLaw {
    #[inline]
    pub fn f(&self, xi: Vec2) -> f64 {
        match *self {
            CellLaw::Power { p, c } => {
                let n2 = dot(xi, xi);
                if p == 2.0 {
                    0.5 * c * n2
                } else if n2 == 0.0 {
                    0.0
                } else {
                    c / p * n2.powf(0.5 * p)
                }
            }
            CellLaw::Matrix(a) => dot(sym_mul(&a, xi), xi),
        }
    }

    #[inline]
    pub fn grad(&self, xi: Vec2) -> Vec2 {
        match *self {
            CellLaw::Power { p, c } => {
                let s = if p == 2.0 {
                    c
                } else {
                    let n2 = dot(xi, xi);
                    if n2 == 0.0 {
                        0.0
                    } else {
                        c * n2.powf(0.5 * (p - 2.0))
                    }
                };
                [s * xi[0], s * xi[1]]
            }
            CellLaw::Matrix(a) => {
                let v = sym_mul(&a, xi);
                [2.0 * v[0], 2.0 * v[1]]
            }
        }
    }

    #[inline]
    pub fn fstar(&self, zeta: Vec2) -> f64 {
        match *self {
            CellLaw::Power { p, c } => {
                let q = p / (p - 1.0);
                let n2 = dot(zeta, zeta);
                if n2 == 0.0 {
                    0.0
                } else {
                    c.powf(1.0 - q) / q * n2.powf(0.5 * q)
                }
            }
            CellLaw::Matrix(a) => 0.25 * dot(sym_mul(&sym_inv(&a), zeta), zeta),
        }
    }

    #[inline]
    pub fn grad_fstar(&self, zeta: Vec2) -> Vec2 {
        match *self {
            CellLaw::Power { p, c } => {
                let q = p / (p - 1.0);
                let n2 = dot(zeta, zeta);
                if n2 == 0.0 {
                    return [0.0, 0.0];
                }
                let s = c.powf(1.0 - q) * n2.powf(0.5 * (q - 2.0));
                [s * zeta[0], s * zeta[1]]
            }
            CellLaw::Matrix(a) => {
                let v = sym_mul(&sym_inv(&a), zeta);
                [0.5 * v[0], 0.5 * v[1]]
            }
        }
    }

    /// Newton metric at `ξ`; for `p != 2` the weight is regularized by `eps`.
    #[inline]
    pub fn hessian(&self, xi: Vec2, eps: f64) -> Sym2 {
        match *self {
            CellLaw::Power { p, c } => {
                if p == 2.0 {
                    return [c, 0.0, c];
                }
                let s2 = eps * eps + dot(xi, xi);
                let w = c * s2.powf(0.5 * (p - 2.0));
                let k = (p - 2.0) / s2;
                [
                    w * (1.0 + k * xi[0] * xi[0]),
                    w * k * xi[0] * xi[1],
                    w * (1.0 + k * xi[1] * xi[1]),
                ]
            }
            CellLaw::Matrix(a) => [2.0 * a[0], 2.0 * a[1], 2.0 * a[2]],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const X: Point = Point::new(0.3, -0.2);

    #[test]
    fn quadratic_examples() {
        let f = Integrand::dirichlet();
        assert_eq!(f.eval_f(X, [1.0, 0.0]), 1.0);
        assert_eq!(f.grad_f(X, [1.0, 0.0]), [2.0, 0.0]);
        assert_eq!(f.eval_f(X, [0.0, 0.0]), 0.0);
        let z = [0.7, -1.1];
        assert!((f.eval_fstar(X, z).unwrap() - dot(z, z) / 4.0).abs() < 1e-15);
        let g = f.grad_fstar(X, z).unwrap();
        assert!((g[0] - 0.35).abs() < 1e-15 && (g[1] + 0.55).abs() < 1e-15);
        assert_eq!(f.eval_fstar(X, [0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let f = Integrand::p_power(1.5, ScalarCoefficient::Constant(1.0)).unwrap();
        let xi = [0.0, 1.0];
        let g = f.grad_f(X, xi);
        let h = 1e-6;
        for k in 0..2 {
            let mut a = xi;
            let mut b = xi;
            a[k] += h;
            b[k] -= h;
            let fd = (f.eval_f(X, a) - f.eval_f(X, b)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6, "component {k}: {fd} vs {}", g[k]);
        }
    }

    // Independent oracle: the supremum in the definition of f*, by grid search
    // along the ray through ζ followed by golden-section refinement.
    fn numeric_conjugate(f: &Integrand, zeta: Vec2) -> f64 {
        let n = norm(zeta);
        if n == 0.0 {
            return 0.0;
        }
        let dir = [zeta[0] / n, zeta[1] / n];
        let phi = |t: f64| t * n - f.eval_f(X, [t * dir[0], t * dir[1]]);
        let mut best = 0.0;
        let mut best_t = 0.0;
        for k in 0..=4000 {
            let t = k as f64 * 0.005;
            let v = phi(t);
            if v > best {
                best = v;
                best_t = t;
            }
        }
        let (mut a, mut b) = ((best_t - 0.005).max(0.0), best_t + 0.005);
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - gr * (b - a);
            let d = a + gr * (b - a);
            if phi(c) > phi(d) {
                b = d;
            } else {
                a = c;
            }
        }
        phi(0.5 * (a + b)).max(best)
    }

    #[test]
    fn closed_form_conjugate_matches_numeric_sup() {
        let f = Integrand::p_power(1.5, ScalarCoefficient::Constant(1.3)).unwrap();
        for zeta in [[0.4, 0.1], [1.0, -0.5], [-0.9, 1.2]] {
            let closed = f.eval_fstar(X, zeta).unwrap();
            let num = numeric_conjugate(&f, zeta);
            assert!((closed - num).abs() < 1e-8 * (1.0 + closed), "{closed} vs {num}");
        }
    }

    #[test]
    fn meyers_examples() {
        let id = meyers_integrand(1.0, MeyersOrientation::RadialSoft).unwrap();
        let CellLaw::Matrix(a) = id.law_at(Point::new(0.4, 0.7)) else { panic!() };
        assert!((a[0] - 1.0).abs() < 1e-15 && a[1].abs() < 1e-15 && (a[2] - 1.0).abs() < 1e-15);
        let m = meyers_integrand(3.0, MeyersOrientation::RadialSoft).unwrap();
        let CellLaw::Matrix(a) = m.law_at(Point::new(1.0, 0.0)) else { panic!() };
        assert!((a[0] - 1.0 / 3.0).abs() < 1e-15 && a[1].abs() < 1e-15 && (a[2] - 3.0).abs() < 1e-15);
        let CellLaw::Matrix(a) = m.law_at(Point::default()) else { panic!() };
        assert_eq!(a, [1.0, 0.0, 1.0]);
        assert_eq!(MeyersOrientation::RadialStiff.exponent(3.0), 1.0 / 3.0);
        assert_eq!(MeyersOrientation::RadialSoft.exponent(3.0), 3.0);
    }

    fn law_strategy() -> impl Strategy<Value = (Integrand, f64)> {
        prop_oneof![
            (0.5f64..4.0).prop_map(|c| (Integrand::p_power(2.0, ScalarCoefficient::Constant(c)).unwrap(), 1e-9)),
            (0.5f64..4.0).prop_map(|c| (Integrand::p_power(1.5, ScalarCoefficient::Constant(c)).unwrap(), 1e-6)),
            (0.5f64..4.0).prop_map(|c| (Integrand::p_power(3.0, ScalarCoefficient::Constant(c)).unwrap(), 1e-6)),
            (1.0f64..5.0, 0u8..2).prop_map(|(k, o)| {
                let o = if o == 0 { MeyersOrientation::RadialSoft } else { MeyersOrientation::RadialStiff };
                (meyers_integrand(k, o).unwrap(), 1e-9)
            }),
        ]
    }

    proptest! {
        #[test]
        fn fenchel_identity_and_inversion(
            (f, tol) in law_strategy(),
            x in (-1.0f64..1.0, -1.0f64..1.0),
            xi in (-3.0f64..3.0, -3.0f64..3.0),
        ) {
            let x = Point::new(x.0, x.1);
            let xi = [xi.0, xi.1];
            let s = f.grad_f(x, xi);
            let lhs = f.eval_f(x, xi) + f.eval_fstar(x, s).unwrap();
            let rhs = dot(xi, s);
            prop_assert!((lhs - rhs).abs() <= tol * (1.0 + rhs.abs()));
            let back = f.grad_fstar(x, s).unwrap();
            prop_assert!((back[0] - xi[0]).abs() <= tol * (1.0 + norm(xi)));
            prop_assert!((back[1] - xi[1]).abs() <= tol * (1.0 + norm(xi)));
        }

        #[test]
        fn growth_sandwich(
            (f, _) in law_strategy(),
            x in (-1.0f64..1.0, -1.0f64..1.0),
            xi in (-3.0f64..3.0, -3.0f64..3.0),
        ) {
            let x = Point::new(x.0, x.1);
            let xi = [xi.0, xi.1];
            let v = f.eval_f(x, xi);
            let np = norm(xi).powf(f.p());
            prop_assert!(f.growth_lower() * np <= v * (1.0 + 1e-12) + 1e-15);
            prop_assert!(v <= f.growth_upper() * (np + 1.0));
        }

        #[test]
        fn meyers_is_unimodular(k in 1.0f64..6.0, x in (-1.0f64..1.0, -1.0f64..1.0)) {
            let p = Point::new(x.0, x.1);
            prop_assume!(p.norm() > 1e-9);
            for o in [MeyersOrientation::RadialSoft, MeyersOrientation::RadialStiff] {
                let a = MatrixCoefficient::Meyers { k, orientation: o, center: Point::default() }.at(p);
                prop_assert!((a[0] * a[2] - a[1] * a[1] - 1.0).abs() < 1e-12 * k * k);
                let (lo, hi) = sym_eigenvalues(&a);
                prop_assert!((lo - 1.0 / k).abs() < 1e-12 * k && (hi - k).abs() < 1e-12 * k);
            }
        }
    }
}
