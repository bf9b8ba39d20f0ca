//! Closed-form reference maps and the special functions behind them.
//!
//! * constant real `mu`: `L_mu` followed by the conformal map from the
//!   resulting ellipse onto the disk, `w = sqrt(k) sn((2K/pi) asin(u); k^2)`;
//! * radial stretch `f(z) = phi(|z|) z/|z|`;
//! * angular reparametrization `f(z) = |z| exp(i psi(arg z))`;
//! * the rational map from the disk onto the exterior of an ellipse.
//!
//! Each reference map is also exposed as an [`Oracle`], the strategy used by
//! `verify` to score a computed [`SolutionMesh`].

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mapping::{max_vertex_error, ErrorReport, RadiusError, SolutionMesh};

const SERIES_EPS: f64 = 1e-16;
const MAX_TERMS: usize = 400;

/// Scores a computed solution against a closed-form reference.
pub trait Oracle: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Exact image of `z`, when the reference is a full map of the disk.
    fn exact(&self, z: Complex64) -> Result<Complex64>;

    /// Error metric reported by `verify`.
    fn error(&self, sol: &SolutionMesh) -> Result<ErrorReport>;
}

/// `theta_2(0, q)` and `theta_3(0, q)`.
pub fn theta2_theta3(q: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("nome must lie in (0,1), got {q}")));
    }
    // theta_2 = 2 q^{1/4} sum q^{n(n+1)},  theta_3 = 1 + 2 sum q^{n^2}
    let mut s2 = 0.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let term = q.powf(nf * (nf + 1.0));
        s2 += term;
        if term < SERIES_EPS * s2 {
            break;
        }
    }
    let mut s3 = 1.0;
    for n in 1..MAX_TERMS {
        let nf = n as f64;
        let term = 2.0 * q.powf(nf * nf);
        s3 += term;
        if term < SERIES_EPS * s3 {
            break;
        }
    }
    Ok((2.0 * q.powf(0.25) * s2, s3))
}

/// Complete elliptic integral of the first kind, `K(m) = pi / (2 AGM(1, sqrt(1-m)))`.
pub fn complete_k(m: f64) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Domain(format!("parameter m must lie in (0,1), got {m}")));
    }
    Ok(agm_k(m))
}

fn agm_k(m: f64) -> f64 {
    agm_k_complement((1.0 - m).sqrt())
}

/// `K` from the complementary modulus `k' = sqrt(1 - m)`, which keeps full
/// precision when `m` is close to one.
pub(crate) fn agm_k_complement(kc: f64) -> f64 {
    let mut a = 1.0;
    let mut b = kc;
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    PI / (a + b)
}

/// Parameters of the ellipse-to-disk map for a real constant `mu` in `(0, 1)`.
///
/// After scaling the image ellipse of `L_mu` to unit foci its semiaxes
/// satisfy `a + b = 1/sqrt(mu)`, so the nome is `q = (a + b)^-4 = mu^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParams {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub theta2: f64,
    pub theta3: f64,
    /// Modulus `k = (theta2/theta3)^2`.
    pub k: f64,
    /// Parameter `m = k^2`.
    pub m: f64,
    /// `K(m) = (pi/2) theta3^2`.
    pub big_k: f64,
}

impl EllipticParams {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::UnsupportedOracle(format!("constant:{mu} (needs real 0 < mu < 1)")));
        }
        let s = 2.0 * mu.sqrt();
        let (a, b) = ((1.0 + mu) / s, (1.0 - mu) / s);
        let q = mu * mu;
        let (theta2, theta3) = theta2_theta3(q)?;
        let k = (theta2 / theta3).powi(2);
        Ok(Self {
            mu,
            a,
            b,
            q,
            theta2,
            theta3,
            k,
            m: k * k,
            big_k: FRAC_PI_2 * theta3 * theta3,
        })
    }

    /// `sn(u; m)` for these parameters.
    pub fn sn(&self, u: Complex64) -> Result<Complex64> {
        let big_kp = complement_k(self.q, self.big_k);
        sn_theta(u, self.q, self.theta2, self.theta3, self.big_k, big_kp)
    }
}

/// `K'` from `q = exp(-pi K'/K)`.
fn complement_k(q: f64, big_k: f64) -> f64 {
    -big_k * q.ln() / PI
}

/// Jacobi `sn(u; m)` for complex `u`, evaluated as a theta quotient.
pub fn jacobi_sn(u: Complex64, m: f64) -> Result<Complex64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Domain(format!("parameter m must lie in (0,1), got {m}")));
    }
    let big_k = agm_k(m);
    let big_kp = agm_k(1.0 - m);
    let q = (-PI * big_kp / big_k).exp();
    let (t2, t3) = theta2_theta3(q)?;
    sn_theta(u, q, t2, t3, big_k, big_kp)
}

fn sn_theta(
    u: Complex64,
    q: f64,
    theta2: f64,
    theta3: f64,
    big_k: f64,
    big_kp: f64,
) -> Result<Complex64> {
    // poles at 2pK + (2r+1) i K'
    let x = u.re / (2.0 * big_k);
    let y = (u.im - big_kp) / (2.0 * big_kp);
    let (dx, dy) = (x - x.round(), y - y.round());
    if dx.hypot(dy) < 1e-8 {
        return Err(Error::Domain(format!("sn has a pole at u = {u}")));
    }

    let zeta = u * (PI / (2.0 * big_k));
    let growth = zeta.im.abs();
    let mut th1 = Complex64::new(0.0, 0.0);
    let mut th4 = Complex64::new(1.0, 0.0);
    let mut sign = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let t1 = sign * q.powf((nf + 0.5) * (nf + 0.5)) * ((2.0 * nf + 1.0) * zeta).sin();
        th1 += 2.0 * t1;
        let mut t4 = Complex64::new(0.0, 0.0);
        if n >= 1 {
            t4 = sign * q.powf(nf * nf) * (2.0 * nf * zeta).cos();
            th4 += 2.0 * t4;
        }
        sign = -sign;
        // terms shrink once q^{2n} e^{2|Im zeta|} < 1
        let past_peak = 2.0 * nf * (-q.ln()) > 2.0 * growth;
        if past_peak
            && t1.norm() <= SERIES_EPS * th1.norm().max(1e-300)
            && t4.norm() <= SERIES_EPS * th4.norm()
        {
            break;
        }
    }
    Ok(theta3 / theta2 * th1 / th4)
}

/// Exact normalized quasiconformal self-map of the disk with constant real
/// Beltrami derivative `mu`.
pub fn exact_constant_map(mu: f64, z: Complex64) -> Result<Complex64> {
    EllipticParams::new(mu)?.map(z)
}

impl EllipticParams {
    /// Evaluates the normalized `mu`-conformal self-map of the disk at `z`.
    pub fn map(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("|z| = {} exceeds 1", z.norm())));
        }
        // ellipse with foci +-1: u = (1+mu)/(2 sqrt mu) * L_mu(z)
        let u = (z + self.mu * z.conj()) / (2.0 * self.mu.sqrt());
        let arg = u.asin() * (2.0 * self.big_k / PI);
        Ok(self.sn(arg)? * self.k.sqrt())
    }
}

/// `phi(r) = (1 - cos 3r) / (1 - cos 3)`.
pub fn radial_phi(r: f64) -> f64 {
    (1.5 * r).sin().powi(2) / 1.5f64.sin().powi(2)
}

/// `r phi'(r) / phi(r) = 3r cot(3r/2)`; tends to 2 at the origin.
pub fn radial_log_derivative(r: f64) -> f64 {
    if r < 1e-8 {
        return 2.0;
    }
    3.0 * r / (1.5 * r).tan()
}

/// `f(z) = phi(|z|) z/|z|`.
pub fn radial_map(z: Complex64) -> Result<Complex64> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::Domain("radial map direction is undefined at z = 0".into()));
    }
    Ok(z * (radial_phi(r) / r))
}

/// Piecewise-linear angle map: slope 1/2 on `[0, pi]`, 3/2 on `[pi, 2 pi]`.
pub fn sectorial_psi(theta: f64) -> f64 {
    if theta <= PI {
        0.5 * theta
    } else {
        FRAC_PI_2 + 1.5 * (theta - PI)
    }
}

pub fn sectorial_psi_prime(theta: f64) -> f64 {
    if theta < PI {
        0.5
    } else {
        1.5
    }
}

/// `f(z) = |z| exp(i psi(arg z))` with `arg z` in `[0, 2 pi)`.
pub fn sectorial_map(z: Complex64) -> Result<Complex64> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::Domain("sectorial map is undefined at z = 0".into()));
    }
    Ok(Complex64::from_polar(r, sectorial_psi(z.arg().rem_euclid(2.0 * PI))))
}

/// `h(z) = ((1+alpha) - (1-alpha) z^2) / (2 alpha z)`: the disk onto the
/// exterior of an ellipse with aspect ratio `alpha`, `0 -> infinity`.
pub fn exterior_map(alpha: f64, z: Complex64) -> Result<Complex64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("aspect ratio must lie in (0,1), got {alpha}")));
    }
    if z.norm() == 0.0 {
        return Err(Error::Domain("exterior map has a pole at z = 0".into()));
    }
    Ok(((1.0 + alpha) - (1.0 - alpha) * z * z) / (2.0 * alpha * z))
}

/// Reference for `mu = 0`: the identity.
#[derive(Debug, Clone, Copy)]
pub struct Identity;

impl Oracle for Identity {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn exact(&self, z: Complex64) -> Result<Complex64> {
        Ok(z)
    }

    fn error(&self, sol: &SolutionMesh) -> Result<ErrorReport> {
        max_vertex_error(sol, Ok)
    }
}

/// Reference for real constant `mu` in `(0, 1)`: maximum vertex error.
#[derive(Debug, Clone, Copy)]
pub struct ConstantOracle {
    params: EllipticParams,
}

impl ConstantOracle {
    pub fn new(mu: f64) -> Result<Self> {
        Ok(Self { params: EllipticParams::new(mu)? })
    }

    pub fn params(&self) -> &EllipticParams {
        &self.params
    }
}

impl Oracle for ConstantOracle {
    fn name(&self) -> &'static str {
        "elliptic"
    }

    fn exact(&self, z: Complex64) -> Result<Complex64> {
        self.params.map(z)
    }

    fn error(&self, sol: &SolutionMesh) -> Result<ErrorReport> {
        max_vertex_error(sol, |z| self.params.map(z))
    }
}

/// Reference for the radial field, scored on the mesh vertices that lie on
/// the real axis.
#[derive(Debug, Clone, Copy)]
pub struct RadialOracle;

impl Oracle for RadialOracle {
    fn name(&self) -> &'static str {
        "radial"
    }

    fn exact(&self, z: Complex64) -> Result<Complex64> {
        radial_map(z)
    }

    fn error(&self, sol: &SolutionMesh) -> Result<ErrorReport> {
        let mesh = sol.mesh();
        let on_axis = |j: i32, k: usize| {
            let im = mesh.vertex(j, k).im;
            im == 0.0 || (im - PI).abs() < 1e-12
        };
        let report = max_vertex_error(sol, radial_map)?;
        let mut profile = Vec::new();
        let mut max = 0.0f64;
        for entry in &report.profile {
            let mut worst: Option<f64> = None;
            for k in 0..mesh.order().n() {
                if !on_axis(entry.j, k) {
                    continue;
                }
                let z = mesh.disk_vertex(entry.j, k).expect("left half");
                let w = sol.w(entry.j, k).expect("left half");
                let e = (w - radial_map(z)?).norm();
                worst = Some(worst.map_or(e, |x: f64| x.max(e)));
            }
            if let Some(e) = worst {
                max = max.max(e);
                profile.push(RadiusError { j: entry.j, radius: entry.radius, max_error: e });
            }
        }
        Ok(ErrorReport { max_error: max, profile })
    }
}

/// Reference for the sectorial field, scored on boundary arguments:
/// `max_k |psi(theta_k) - arg f(e^{i theta_k})|` over the `j = 0` vertices.
#[derive(Debug, Clone, Copy)]
pub struct SectorialOracle;

impl Oracle for SectorialOracle {
    fn name(&self) -> &'static str {
        "sectorial-boundary"
    }

    fn exact(&self, z: Complex64) -> Result<Complex64> {
        sectorial_map(z)
    }

    fn error(&self, sol: &SolutionMesh) -> Result<ErrorReport> {
        let mesh = sol.mesh();
        let mut max = 0.0f64;
        for k in 0..mesh.order().n() {
            let theta = mesh.vertex(0, k).im;
            let w = sol.w(0, k).expect("boundary vertex");
            let diff = (w.arg() - sectorial_psi(theta) + PI).rem_euclid(2.0 * PI) - PI;
            max = max.max(diff.abs());
        }
        Ok(ErrorReport {
            max_error: max,
            profile: vec![RadiusError { j: 0, radius: 1.0, max_error: max }],
        })
    }
}
