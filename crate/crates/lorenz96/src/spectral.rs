//! Closed-form spectral and bifurcation theory at the trivial equilibrium.
//!
//! The Jacobian at `x_F` is circulant, so its spectrum is explicit in the
//! discrete Fourier modes:
//!
//! ```text
//! kappa_j = -1 - 2G (1 - cos(2 pi j / n)) + F f(j,n) + i F g(j,n),
//! f(j,n)  = cos(2 pi j / n) - cos(4 pi j / n),
//! g(j,n)  = -sin(2 pi j / n) - sin(4 pi j / n).
//! ```
//!
//! Everything downstream — Hopf values `F_H = 1/f`, the Hopf-Hopf coincidence
//! condition, the first Lyapunov coefficient and its sign, Hopf lines in the
//! (F,G)-plane — reduces to trigonometry in `l/n`. No numerical eigensolver
//! is involved anywhere in this module.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::trig::{cos_pi_ratio, sin_pi_ratio};

/// Tolerance for exact trigonometric coincidences at rational multiples of pi;
/// true identities evaluate to ~1e-16 noise, near-misses are far larger.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// One circulant eigenmode: index, eigenvalue, and root of unity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenMode {
    pub index: usize,
    pub lambda: Complex64,
    /// `rho_j = exp(-2 pi i j / n)`.
    pub rho: Complex64,
}

/// Whether the periodic orbit born at a Hopf point is unstable or stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criticality {
    /// Positive first Lyapunov coefficient.
    Subcritical,
    /// Negative first Lyapunov coefficient.
    Supercritical,
}

/// A single Hopf bifurcation of the trivial equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub l: usize,
    pub n: usize,
    pub f_h: f64,
    pub omega0: f64,
    pub ell1: f64,
    pub criticality: Criticality,
}

/// Two eigenvalue pairs crossing simultaneously (codimension two).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfHopfPoint {
    pub l1: usize,
    pub l2: usize,
    pub n: usize,
    pub f_hh: f64,
}

/// A bifurcation record produced by [`enumerate_bifurcations`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bifurcation {
    Hopf(HopfPoint),
    HopfHopf(HopfHopfPoint),
}

impl Bifurcation {
    /// Bifurcation value of F.
    pub fn f_value(&self) -> f64 {
        match self {
            Bifurcation::Hopf(h) => h.f_h,
            Bifurcation::HopfHopf(hh) => hh.f_hh,
        }
    }

    /// Number of eigenvalue pairs accounted for by this record.
    pub fn slots(&self) -> usize {
        match self {
            Bifurcation::Hopf(_) => 1,
            Bifurcation::HopfHopf(_) => 2,
        }
    }
}

/// Normal-form coefficients of the truncated Hopf-Hopf amplitude system.
/// These are external inputs (published coefficient sets, such as the n = 12
/// one); nothing in this crate computes them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormCoefficients {
    /// Sign coefficient, +1 or -1.
    pub sigma: i8,
    pub theta: f64,
    pub delta: f64,
    pub big_theta: f64,
    pub big_delta: f64,
}

/// The trigonometric pair `(f, g)` splitting the eigenvalues into real and
/// imaginary parts: `f = cos(2 pi j/n) - cos(4 pi j/n)`,
/// `g = -sin(2 pi j/n) - sin(4 pi j/n)`.
pub fn f_g(j: usize, n: usize) -> (f64, f64) {
    let (p, q) = (j as i64, n as i64);
    (
        cos_pi_ratio(2 * p, q) - cos_pi_ratio(4 * p, q),
        -sin_pi_ratio(2 * p, q) - sin_pi_ratio(4 * p, q),
    )
}

fn check_mode_index(j: usize, n: usize) -> Result<()> {
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    Ok(())
}

/// Validity of an eigenvalue pair for Hopf analysis: `0 < l < n/2`, `l != n/3`.
pub fn is_valid_pair(l: usize, n: usize) -> bool {
    l > 0 && 2 * l < n && 3 * l != n
}

fn check_pair(l: usize, n: usize) -> Result<()> {
    if !is_valid_pair(l, n) {
        return Err(Error::NoCrossing { l, n });
    }
    Ok(())
}

/// Eigenvalue `kappa_j` of the circulant Jacobian at `x_F`; reduces to the
/// original-model eigenvalue `lambda_j` at G = 0.
pub fn eigenvalue(j: usize, cfg: &SystemConfig) -> Result<Complex64> {
    check_mode_index(j, cfg.n)?;
    let (f_j, g_j) = f_g(j, cfg.n);
    let laplace = 1.0 - cos_pi_ratio(2 * j as i64, cfg.n as i64);
    let re = -1.0 - 2.0 * cfg.diffusion * laplace + cfg.forcing * f_j;
    Ok(Complex64::new(re, cfg.forcing * g_j))
}

/// Unit-norm Fourier eigenvector `v_j = (1, rho_j, ..., rho_j^{n-1}) / sqrt(n)`
/// with `rho_j = exp(-2 pi i j / n)`. Valid for every circulant matrix on the
/// ring, independent of F and G.
pub fn eigenvector(j: usize, n: usize) -> Result<Vec<Complex64>> {
    check_mode_index(j, n)?;
    let scale = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|k| {
            let p = 2 * (j as i64) * (k as i64);
            Complex64::new(
                scale * cos_pi_ratio(p, n as i64),
                -scale * sin_pi_ratio(p, n as i64),
            )
        })
        .collect())
}

/// All n eigenmodes of the Jacobian at `x_F`.
pub fn eigenmodes(cfg: &SystemConfig) -> Vec<EigenMode> {
    (0..cfg.n)
        .map(|j| EigenMode {
            index: j,
            lambda: eigenvalue(j, cfg).expect("index in range"),
            rho: Complex64::new(
                cos_pi_ratio(2 * j as i64, cfg.n as i64),
                -sin_pi_ratio(2 * j as i64, cfg.n as i64),
            ),
        })
        .collect()
}

/// Parameter value `F_H(l,n) = 1/f(l,n)` at which the l-th eigenvalue pair
/// crosses the imaginary axis.
pub fn hopf_value(l: usize, n: usize) -> Result<f64> {
    check_pair(l, n)?;
    let (f_l, _) = f_g(l, n);
    Ok(1.0 / f_l)
}

/// Extremes of the Hopf values: positive ones fill `[8/9, F_max]` and negative
/// ones `[F_min, -1/2)`, with both outer bounds attained by an actual pair
/// (`l = 1`, or `l = 2` for n = 7, and `l = floor(n/3) + 1` respectively).
pub fn hopf_value_bounds(n: usize) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::UnsupportedDimension(n));
    }
    let f_max = if n == 7 { 1.0 / f_g(2, 7).0 } else { 1.0 / f_g(1, n).0 };
    let f_min = if n == 4 || n == 6 {
        -0.5
    } else {
        let r = n / 3;
        1.0 / f_g(r + 1, n).0
    };
    Ok((f_min, f_max))
}

/// Absolute value of the imaginary part at the crossing:
/// `omega_0(l,n) = -g(l,n)/f(l,n) = cot(pi l / n)`; strictly positive.
pub fn omega0(l: usize, n: usize) -> Result<f64> {
    check_pair(l, n)?;
    Ok(cos_pi_ratio(l as i64, n as i64) / sin_pi_ratio(l as i64, n as i64))
}

/// Closed-form first Lyapunov coefficient of the Hopf bifurcation for the
/// l-th eigenvalue pair:
///
/// ```text
/// ell_1(l,n) = (4/n) tan(pi l/n) sin^2(3 pi l/n)
///              (5 cos(2 pi l/n) + 8 cos(4 pi l/n) - 2 cos(6 pi l/n) - 8)
///            / (4 cos(2 pi l/n) - 4 cos(4 pi l/n) + 9)
/// ```
pub fn first_lyapunov_coeff(l: usize, n: usize) -> Result<f64> {
    check_pair(l, n)?;
    let (p, q) = (l as i64, n as i64);
    let c1 = cos_pi_ratio(2 * p, q);
    let c2 = cos_pi_ratio(4 * p, q);
    let c3 = cos_pi_ratio(6 * p, q);
    let tangent = sin_pi_ratio(p, q) / cos_pi_ratio(p, q);
    let s3 = sin_pi_ratio(3 * p, q);
    let numerator = 5.0 * c1 + 8.0 * c2 - 2.0 * c3 - 8.0;
    let denominator = 4.0 * c1 - 4.0 * c2 + 9.0;
    Ok(4.0 / n as f64 * tangent * s3 * s3 * numerator / denominator)
}

/// Numerator of the first Lyapunov coefficient as a function of `y = 2 pi l/n`;
/// its unique root on (0, pi) separates sub- from supercritical bifurcations.
pub fn criticality_numerator(y: f64) -> f64 {
    5.0 * y.cos() + 8.0 * (2.0 * y).cos() - 2.0 * (3.0 * y).cos() - 8.0
}

/// The threshold ratio `y_0 / 2 pi ~ 0.08825746`: Hopf points with
/// `l/n` below it are subcritical, above it supercritical.
///
/// `y_0` is found by bisection on (0.4, 0.7) to 1e-12; the bracket is checked
/// at startup against the sign change of the numerator.
pub fn critical_ratio() -> f64 {
    let (mut lo, mut hi) = (0.4, 0.7);
    assert!(
        criticality_numerator(lo) > 0.0 && criticality_numerator(hi) < 0.0,
        "bisection bracket for the criticality root is invalid"
    );
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if criticality_numerator(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / (2.0 * PI)
}

/// Criticality of the Hopf bifurcation for the l-th pair; errors when the
/// first Lyapunov coefficient vanishes.
pub fn criticality(l: usize, n: usize) -> Result<Criticality> {
    let ell1 = first_lyapunov_coeff(l, n)?;
    if ell1 == 0.0 {
        return Err(Error::DegenerateHopf { l, n });
    }
    Ok(if ell1 > 0.0 { Criticality::Subcritical } else { Criticality::Supercritical })
}

/// Whether the pairs `l1` and `l2` cross the imaginary axis simultaneously:
/// `cos(2 pi l1/n) + cos(2 pi l2/n) = 1/2` up to [`COINCIDENCE_TOL`].
pub fn hopf_hopf_check(l1: usize, l2: usize, n: usize) -> bool {
    if l1 == l2 || !is_valid_pair(l1, n) || !is_valid_pair(l2, n) {
        return false;
    }
    let c1 = cos_pi_ratio(2 * l1 as i64, n as i64);
    let c2 = cos_pi_ratio(2 * l2 as i64, n as i64);
    (c1 + c2 - 0.5).abs() <= COINCIDENCE_TOL
}

fn hopf_point(l: usize, n: usize) -> Result<HopfPoint> {
    Ok(HopfPoint {
        l,
        n,
        f_h: hopf_value(l, n)?,
        omega0: omega0(l, n)?,
        ell1: first_lyapunov_coeff(l, n)?,
        criticality: criticality(l, n)?,
    })
}

/// Every Hopf and Hopf-Hopf bifurcation of the trivial equilibrium.
///
/// One record per eigenvalue pair `0 < l < n/2`, `l != n/3`; pairs whose
/// crossing values coincide are merged into a single Hopf-Hopf record.
/// Records are sorted by F ascending within the positive values, followed by
/// the negative values ascending.
pub fn enumerate_bifurcations(n: usize) -> Result<Vec<Bifurcation>> {
    if n < 4 {
        return Err(Error::UnsupportedDimension(n));
    }
    let valid: Vec<usize> = (1..n).filter(|&l| is_valid_pair(l, n)).collect();

    let mut used = vec![false; valid.len()];
    let mut records = Vec::new();
    for (i, &l1) in valid.iter().enumerate() {
        if used[i] {
            continue;
        }
        // At most two pairs can cross simultaneously, so the first match wins.
        let partner = valid
            .iter()
            .enumerate()
            .skip(i + 1)
            .find(|&(k, &l2)| !used[k] && hopf_hopf_check(l1, l2, n));
        match partner {
            Some((k, &l2)) => {
                used[i] = true;
                used[k] = true;
                records.push(Bifurcation::HopfHopf(HopfHopfPoint {
                    l1,
                    l2,
                    n,
                    f_hh: hopf_value(l1, n)?,
                }));
            }
            None => {
                used[i] = true;
                records.push(Bifurcation::Hopf(hopf_point(l1, n)?));
            }
        }
    }

    records.sort_by(|a, b| {
        let (fa, fb) = (a.f_value(), b.f_value());
        (fa < 0.0)
            .cmp(&(fb < 0.0))
            .then(fa.partial_cmp(&fb).expect("finite bifurcation values"))
    });
    Ok(records)
}

/// Index of the first bifurcation encountered when increasing F from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirstBifurcation {
    /// A single maximiser: the first bifurcation is a Hopf point.
    Hopf(usize),
    /// Two indices tie for the maximum: the first bifurcation is Hopf-Hopf.
    HopfHopf(usize, usize),
}

impl FirstBifurcation {
    /// The smallest wave index involved.
    pub fn primary_index(&self) -> usize {
        match *self {
            FirstBifurcation::Hopf(l) => l,
            FirstBifurcation::HopfHopf(l1, l2) => l1.min(l2),
        }
    }
}

/// The wave index `l_1(n) = argmax_{0 < l < n/3} f(l,n)` of the first
/// bifurcation for F > 0. Ties within [`COINCIDENCE_TOL`] (for example n = 12)
/// are reported as a Hopf-Hopf pair rather than broken arbitrarily.
///
/// Satisfies `n/6 <= l_1(n) <= n/4` except for n = 7, where `l_1 = 1`.
pub fn first_bifurcation_index(n: usize) -> Result<FirstBifurcation> {
    if n < 4 {
        return Err(Error::UnsupportedDimension(n));
    }
    let candidates: Vec<usize> = (1..n).filter(|&l| 3 * l < n).collect();
    debug_assert!(!candidates.is_empty());
    let best = candidates
        .iter()
        .copied()
        .max_by(|&a, &b| f_g(a, n).0.partial_cmp(&f_g(b, n).0).expect("finite"))
        .expect("non-empty candidate set");
    let f_best = f_g(best, n).0;
    let tied: Vec<usize> = candidates
        .into_iter()
        .filter(|&l| (f_g(l, n).0 - f_best).abs() <= COINCIDENCE_TOL)
        .collect();
    match tied.as_slice() {
        [l] => Ok(FirstBifurcation::Hopf(*l)),
        [l1, l2] => Ok(FirstBifurcation::HopfHopf(*l1, *l2)),
        _ => unreachable!("at most two pairs can share a crossing value"),
    }
}

/// Limits of the first-bifurcation wave as n grows: the period tends to
/// `T_inf = 2 pi tan(arccos(1/4) / 2)` and the sites-per-wavelength ratio
/// `n / l_1(n)` to `2 pi / arccos(1/4)`.
pub fn asymptotic_limits() -> (f64, f64) {
    let y_top = (0.25f64).acos();
    (2.0 * PI * (0.5 * y_top).tan(), 2.0 * PI / y_top)
}

/// G-value of the Hopf line for pair l at forcing F:
/// `H_l(F,n) = (F f(l,n) - 1) / (2 (1 - cos(2 pi l / n)))`.
///
/// F = 0 is excluded: the critical eigenvalue itself vanishes there.
pub fn hopf_line(l: usize, n: usize, f: f64) -> Result<f64> {
    check_pair(l, n)?;
    if f == 0.0 {
        return Err(Error::ExcludedParameter);
    }
    let (f_l, _) = f_g(l, n);
    let laplace = 1.0 - cos_pi_ratio(2 * l as i64, n as i64);
    Ok((f * f_l - 1.0) / (2.0 * laplace))
}

/// Slopes of the lines tangent to the two Neimark-Sacker curves that emanate
/// from a Hopf-Hopf point: `((1 - delta)/(2 - delta), (1 - theta)/(1 - 2 theta))`.
/// The tangent-line G-value at F is `slope * (F - F_HH)`.
pub fn ns_tangent_slopes(coeffs: &NormalFormCoefficients) -> Result<(f64, f64)> {
    if (coeffs.delta - 2.0).abs() < 1e-12 || (coeffs.theta - 0.5).abs() < 1e-12 {
        return Err(Error::DegenerateUnfolding);
    }
    Ok((
        (1.0 - coeffs.delta) / (2.0 - coeffs.delta),
        (1.0 - coeffs.theta) / (1.0 - 2.0 * coeffs.theta),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `n * ell_1` as a continuous function of the ratio `r = l/n`; the shape
    /// of the coefficient is independent of n up to the 1/n scaling.
    fn lyapunov_coeff_at_ratio(r: f64) -> f64 {
        let y = 2.0 * PI * r;
        let numerator = 5.0 * y.cos() + 8.0 * (2.0 * y).cos() - 2.0 * (3.0 * y).cos() - 8.0;
        let denominator = 4.0 * y.cos() - 4.0 * (2.0 * y).cos() + 9.0;
        4.0 * (PI * r).tan() * (3.0 * PI * r).sin().powi(2) * numerator / denominator
    }

    #[test]
    fn f_g_examples() {
        let (f, g) = f_g(1, 4);
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g, -1.0, epsilon = 1e-15);

        assert_eq!(f_g(0, 9), (0.0, 0.0));

        let (f, _) = f_g(2, 6);
        assert!(f.abs() < 1e-15, "f(n/3, n) must vanish");
    }

    #[test]
    fn eigenvalue_special_indices() {
        let cfg = SystemConfig::new(5, 3.7);
        assert_abs_diff_eq!(eigenvalue(0, &cfg).unwrap().re, -1.0, epsilon = 1e-14);
        assert!(eigenvalue(0, &cfg).unwrap().im.abs() < 1e-14);

        let cfg = SystemConfig::new(8, 2.5);
        let ev = eigenvalue(4, &cfg).unwrap();
        assert_abs_diff_eq!(ev.re, -1.0 - 2.0 * 2.5, epsilon = 1e-13);
        assert!(ev.im.abs() < 1e-13);

        let cfg = SystemConfig::with_diffusion(9, 4.0, 0.7);
        let ev = eigenvalue(3, &cfg).unwrap();
        assert_abs_diff_eq!(ev.re, -1.0 - 3.0 * 0.7, epsilon = 1e-13);
        assert!(ev.im.abs() < 1e-13);

        assert!(eigenvalue(9, &cfg).is_err());
    }

    #[test]
    fn eigenvalues_form_conjugate_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for &n in &[4usize, 5, 9, 16, 31] {
            let cfg =
                SystemConfig::with_diffusion(n, rng.gen_range(-5.0..5.0), rng.gen_range(-0.3..0.5));
            for j in 1..n {
                let a = eigenvalue(j, &cfg).unwrap();
                let b = eigenvalue(n - j, &cfg).unwrap();
                let scale = 1.0 + cfg.forcing.abs() + cfg.diffusion.abs();
                assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-13 * scale);
                assert_abs_diff_eq!(a.im, -b.im, epsilon = 1e-13 * scale);
            }
        }
    }

    #[test]
    fn eigenvalue_trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &n in &[4usize, 7, 12, 25] {
            let cfg =
                SystemConfig::with_diffusion(n, rng.gen_range(-4.0..4.0), rng.gen_range(-0.2..0.4));
            let sum: Complex64 = (0..n).map(|j| eigenvalue(j, &cfg).unwrap()).sum();
            let expected = -(n as f64) * (1.0 + 2.0 * cfg.diffusion);
            assert_abs_diff_eq!(sum.re, expected, epsilon = 1e-10);
            assert!(sum.im.abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvectors_satisfy_residual_and_conjugacy() {
        use crate::model::{equilibrium, jacobian};
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in 4..=16 {
            let cfg =
                SystemConfig::with_diffusion(n, rng.gen_range(-5.0..5.0), rng.gen_range(-0.25..0.5));
            let jac = jacobian(&cfg, &equilibrium(&cfg)).unwrap();
            for j in 0..n {
                let v = eigenvector(j, n).unwrap();
                let lambda = eigenvalue(j, &cfg).unwrap();
                let mut residual: f64 = 0.0;
                for row in 0..n {
                    let mut jv = Complex64::ZERO;
                    for col in 0..n {
                        jv += jac[(row, col)] * v[col];
                    }
                    residual = residual.max((jv - lambda * v[row]).norm());
                }
                assert!(residual < 1e-12, "residual {residual} for j={j}, n={n}");

                let conj = eigenvector((n - j) % n, n).unwrap();
                for k in 0..n {
                    assert_abs_diff_eq!(v[k].re, conj[k].re, epsilon = 1e-13);
                    assert_abs_diff_eq!(v[k].im, -conj[k].im, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn eigenvector_mode_zero_is_uniform() {
        let v = eigenvector(0, 7).unwrap();
        for entry in v {
            assert_abs_diff_eq!(entry.re, 1.0 / (7.0f64).sqrt(), epsilon = 1e-15);
            assert!(entry.im.abs() < 1e-15);
        }
    }

    #[test]
    fn hopf_value_examples() {
        assert_abs_diff_eq!(hopf_value(1, 4).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hopf_value(1, 5).unwrap(), 0.8944272, epsilon = 1e-7);
        assert_abs_diff_eq!(hopf_value(8, 36).unwrap(), 0.898198, epsilon = 1e-6);

        assert!(hopf_value(0, 8).is_err());
        assert!(hopf_value(4, 8).is_err(), "l = n/2 has a real eigenvalue");
        assert!(hopf_value(2, 6).is_err(), "l = n/3 never crosses");
    }

    #[test]
    fn hopf_value_bounds_examples() {
        let (f_min, f_max) = hopf_value_bounds(4).unwrap();
        assert_eq!(f_min, -0.5);
        assert_abs_diff_eq!(f_max, 1.0, epsilon = 1e-15);

        let (_, f_max) = hopf_value_bounds(7).unwrap();
        assert_abs_diff_eq!(f_max, 1.0 / f_g(2, 7).0, epsilon = 1e-15);

        assert!(hopf_value_bounds(3).is_err());
    }

    #[test]
    fn hopf_values_lie_in_the_stated_domain() {
        // The outer bounds are attained (by l = 1 resp. l = r + 1), so the
        // containment is closed there; -1/2 itself is never reached.
        for n in 4..=100 {
            let (f_min, f_max) = hopf_value_bounds(n).unwrap();
            for l in 1..n {
                if !is_valid_pair(l, n) {
                    continue;
                }
                let fh = hopf_value(l, n).unwrap();
                let eps = 1e-12;
                let in_negative = fh >= f_min - eps && fh < -0.5;
                let in_positive = fh >= 8.0 / 9.0 - eps && fh <= f_max + eps;
                assert!(
                    in_negative || in_positive,
                    "F_H({l},{n}) = {fh} outside [{f_min}, -1/2) u [8/9, {f_max}]"
                );
            }
        }
    }

    #[test]
    fn omega0_examples() {
        assert_abs_diff_eq!(omega0(1, 4).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(omega0(1, 5).unwrap(), 1.3763819, epsilon = 1e-7);

        // |Im lambda_{n-l}| at F_H equals omega0 for every valid pair.
        for n in 4..=40 {
            for l in 1..n {
                if !is_valid_pair(l, n) {
                    continue;
                }
                let cfg = SystemConfig::new(n, hopf_value(l, n).unwrap());
                let im = eigenvalue(n - l, &cfg).unwrap().im.abs();
                assert_abs_diff_eq!(im, omega0(l, n).unwrap(), epsilon = 1e-12);
                assert!(omega0(l, n).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn crossing_is_transversal() {
        // d(Re lambda_l)/dF = f(l,n) stays away from zero for valid pairs.
        for n in 4..=100 {
            for l in 1..n {
                if is_valid_pair(l, n) {
                    assert!(f_g(l, n).0.abs() > 1e-3, "f({l},{n}) too close to zero");
                }
            }
        }
    }

    #[test]
    fn first_lyapunov_coeff_examples() {
        // Direct substitution at l/n = 1/4: tan = 1, sin^2 = 1/2,
        // numerator -16, denominator 13.
        assert_abs_diff_eq!(first_lyapunov_coeff(1, 4).unwrap(), -8.0 / 13.0, epsilon = 1e-14);

        // l/n = 1/3 is excluded as a bifurcation, but the formula vanishes there.
        assert!(lyapunov_coeff_at_ratio(1.0 / 3.0).abs() < 1e-12);

        assert!(first_lyapunov_coeff(1, 12).unwrap() > 0.0);
        assert!(first_lyapunov_coeff(2, 12).unwrap() < 0.0);
    }

    #[test]
    fn lyapunov_coeff_changes_sign_once() {
        let ratio = critical_ratio();
        let mut sign_changes = 0;
        let steps = 4000;
        let mut prev = lyapunov_coeff_at_ratio(0.5 / steps as f64);
        for i in 2..steps {
            let r = 0.5 * i as f64 / steps as f64;
            // Skip the touch-zero at 1/3 and the root neighbourhood itself.
            if (r - 1.0 / 3.0).abs() < 2e-3 || (r - ratio).abs() < 2e-3 {
                continue;
            }
            let value = lyapunov_coeff_at_ratio(r);
            if value.signum() != prev.signum() {
                sign_changes += 1;
                assert!(prev > 0.0 && value < 0.0, "sign change must be + to - at {r}");
                assert!((r - ratio).abs() < 5e-3, "sign change at {r} far from {ratio}");
            }
            prev = value;
        }
        assert_eq!(sign_changes, 1);
    }

    #[test]
    fn critical_ratio_matches_published_root() {
        assert_abs_diff_eq!(criticality_numerator(0.0), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(criticality_numerator(PI), -3.0, epsilon = 1e-14);
        let ratio = critical_ratio();
        assert_abs_diff_eq!(ratio * 2.0 * PI, 0.5545380, epsilon = 1e-6);
        assert_abs_diff_eq!(ratio, 0.08825746, epsilon = 1e-7);
    }

    #[test]
    fn criticality_examples() {
        assert_eq!(criticality(1, 12).unwrap(), Criticality::Subcritical);
        assert_eq!(criticality(1, 4).unwrap(), Criticality::Supercritical);

        // Whenever the first bifurcation is a plain Hopf point it is
        // supercritical.
        for n in 4..=100 {
            if let FirstBifurcation::Hopf(l) = first_bifurcation_index(n).unwrap() {
                assert_eq!(
                    criticality(l, n).unwrap(),
                    Criticality::Supercritical,
                    "first Hopf for n = {n} (l = {l})"
                );
            }
        }
    }

    #[test]
    fn hopf_hopf_check_examples() {
        assert!(hopf_hopf_check(2, 3, 12));
        assert_abs_diff_eq!(hopf_value(2, 12).unwrap(), 1.0, epsilon = 1e-12);
        assert!(hopf_hopf_check(1, 3, 10));
        assert_abs_diff_eq!(hopf_value(1, 10).unwrap(), 2.0, epsilon = 1e-12);
        assert!(!hopf_hopf_check(1, 2, 12));

        // Symmetric in the two indices.
        assert_eq!(hopf_hopf_check(3, 2, 12), hopf_hopf_check(2, 3, 12));
        assert_eq!(hopf_hopf_check(3, 1, 10), hopf_hopf_check(1, 3, 10));
    }

    #[test]
    fn enumerate_bifurcations_examples() {
        let records = enumerate_bifurcations(4).unwrap();
        assert_eq!(records.len(), 1);
        match &records[0] {
            Bifurcation::Hopf(h) => {
                assert_eq!(h.l, 1);
                assert_abs_diff_eq!(h.f_h, 1.0, epsilon = 1e-14);
            }
            other => panic!("expected a Hopf record, got {other:?}"),
        }

        let records = enumerate_bifurcations(12).unwrap();
        let hh = records
            .iter()
            .find_map(|r| match r {
                Bifurcation::HopfHopf(hh) => Some(hh),
                _ => None,
            })
            .expect("n = 12 has a Hopf-Hopf point");
        assert_eq!((hh.l1, hh.l2), (2, 3));
        assert_abs_diff_eq!(hh.f_hh, 1.0, epsilon = 1e-12);
        let hopf1 = records
            .iter()
            .find_map(|r| match r {
                Bifurcation::Hopf(h) if h.l == 1 => Some(h),
                _ => None,
            })
            .expect("l = 1 record");
        assert_abs_diff_eq!(hopf1.f_h, 2.732051, epsilon = 1e-6);

        let records = enumerate_bifurcations(10).unwrap();
        let hh = records
            .iter()
            .find_map(|r| match r {
                Bifurcation::HopfHopf(hh) => Some(hh),
                _ => None,
            })
            .expect("n = 10 has a Hopf-Hopf point");
        assert_eq!((hh.l1, hh.l2), (1, 3));
        assert_abs_diff_eq!(hh.f_hh, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn enumerate_bifurcations_slot_count_and_order() {
        for n in 4..=60 {
            let records = enumerate_bifurcations(n).unwrap();
            let slots: usize = records.iter().map(|r| r.slots()).sum();
            let expected = (n + 1) / 2 - 1 - usize::from(n % 3 == 0);
            assert_eq!(slots, expected, "slot count for n = {n}");

            // Positive values ascending, then negative values ascending.
            let positives: Vec<f64> =
                records.iter().map(|r| r.f_value()).filter(|f| *f > 0.0).collect();
            let negatives: Vec<f64> =
                records.iter().map(|r| r.f_value()).filter(|f| *f < 0.0).collect();
            let mut interleaved = positives.clone();
            interleaved.extend(&negatives);
            let actual: Vec<f64> = records.iter().map(|r| r.f_value()).collect();
            assert_eq!(actual, interleaved);
            assert!(positives.windows(2).all(|w| w[0] <= w[1]));
            assert!(negatives.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn first_bifurcation_index_examples() {
        assert_eq!(first_bifurcation_index(7).unwrap(), FirstBifurcation::Hopf(1));
        assert_eq!(first_bifurcation_index(36).unwrap(), FirstBifurcation::Hopf(8));
        assert_eq!(first_bifurcation_index(12).unwrap(), FirstBifurcation::HopfHopf(2, 3));

        // F_H(8,36) < F_H(7,36): the l = 8 wave is born first.
        assert!(hopf_value(8, 36).unwrap() < hopf_value(7, 36).unwrap());
        assert_abs_diff_eq!(hopf_value(7, 36).unwrap(), 0.902474, epsilon = 1e-6);
    }

    #[test]
    fn first_bifurcation_index_bounds() {
        for n in 4..=200 {
            if n == 7 {
                continue;
            }
            let l = first_bifurcation_index(n).unwrap().primary_index() as f64;
            let n_f = n as f64;
            // The Hopf-Hopf tie at n = 12m reports the pair; its smaller
            // member sits exactly at n/6.
            assert!(l >= n_f / 6.0 - 1e-9 && l <= n_f / 4.0 + 1e-9, "l_1({n}) = {l}");
        }
    }

    #[test]
    fn asymptotic_limits_examples() {
        let (t_inf, ratio_inf) = asymptotic_limits();
        assert_abs_diff_eq!(t_inf, 4.867, epsilon = 1e-3);
        assert_abs_diff_eq!(ratio_inf, 4.767, epsilon = 1e-3);

        // 2 pi l_1(n) / n approaches arccos(1/4); the deviation is bounded by
        // one integer step of l_1 and shrinks like 1/n.
        let y_top = (0.25f64).acos();
        for n in 4..=200 {
            if n == 7 {
                continue;
            }
            let l = first_bifurcation_index(n).unwrap().primary_index() as f64;
            let deviation = (2.0 * PI * l / n as f64 - y_top).abs();
            assert!(deviation <= 2.0 * PI / n as f64 + 1e-12, "deviation {deviation} at n = {n}");
        }
    }

    #[test]
    fn hopf_line_examples() {
        for f in [0.3, 1.0, 2.5, -1.7] {
            assert_abs_diff_eq!(hopf_line(2, 12, f).unwrap(), f - 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(hopf_line(3, 12, f).unwrap(), 0.5 * (f - 1.0), epsilon = 1e-12);
        }
        assert_eq!(hopf_line(1, 8, 0.0).unwrap_err(), Error::ExcludedParameter);

        // On the line the critical eigenvalue is purely imaginary.
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..200 {
            let n = rng.gen_range(4..=30);
            let l = rng.gen_range(1..n);
            if !is_valid_pair(l, n) {
                continue;
            }
            let f = rng.gen_range(0.1..4.0);
            let g = hopf_line(l, n, f).unwrap();
            let cfg = SystemConfig::with_diffusion(n, f, g);
            assert!(
                eigenvalue(l, &cfg).unwrap().re.abs() < 1e-12,
                "Re kappa_{l} != 0 on the Hopf line for n = {n}"
            );
        }
    }

    #[test]
    fn ns_tangent_slope_examples() {
        // Published n = 12 coefficient set.
        let coeffs = NormalFormCoefficients {
            sigma: 1,
            theta: 1.414,
            delta: 1.258,
            big_theta: -0.200,
            big_delta: 0.678,
        };
        let (s2, s3) = ns_tangent_slopes(&coeffs).unwrap();
        assert_abs_diff_eq!(s2, -0.3477, epsilon = 1e-3);
        assert_abs_diff_eq!(s3, 0.2265, epsilon = 1e-3);

        let zero = NormalFormCoefficients {
            sigma: 1,
            theta: 0.0,
            delta: 0.0,
            big_theta: 0.0,
            big_delta: 0.0,
        };
        assert_eq!(ns_tangent_slopes(&zero).unwrap(), (0.5, 1.0));

        // The slopes do not reference the quadratic coefficients.
        let mut other = coeffs;
        other.big_theta = 9.0;
        other.big_delta = -9.0;
        assert_eq!(ns_tangent_slopes(&other).unwrap(), ns_tangent_slopes(&coeffs).unwrap());

        let degenerate = NormalFormCoefficients { delta: 2.0, ..coeffs };
        assert_eq!(ns_tangent_slopes(&degenerate).unwrap_err(), Error::DegenerateUnfolding);
    }
}
