//! Characteristic polynomials and root finding.
//!
//! Coefficients are stored descending: `[c_0, c_1, ..., c_n]` represents
//! `c_0 s^n + c_1 s^(n-1) + ... + c_n`. [`char_poly`] always returns a monic
//! vector (`c_0 = 1`).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum simultaneous-iteration sweeps before giving up on refinement.
const MAX_ITER: usize = 500;
/// Per-root relative step size below which iteration stops.
const STEP_TOL: f64 = 1e-13;

/// Coefficients of `det(sI - A)`, descending, via the Faddeev-LeVerrier
/// recursion. Exact for small-integer matrices: every intermediate is an
/// integer and every division lands on one.
pub fn char_poly(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    // Invariant: m = M_k with det(sI - A) = sum c_j s^(n-j), M_1 = I,
    // M_{k+1} = A M_k + c_k I, c_k = -tr(A M_k) / k.
    let mut m = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        let am = a * &m;
        let c = -am.trace() / k as f64;
        coeffs.push(c);
        if k < n {
            m = am;
            for i in 0..n {
                m[(i, i)] += c;
            }
        }
    }
    Ok(coeffs)
}

/// Evaluates the polynomial at `z` by Horner's rule.
pub fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// All roots of the polynomial, sorted by real part then imaginary part.
///
/// Trailing zero coefficients are deflated first, so roots at the origin
/// come out as exact `0.0`. The rest are found by Weierstrass simultaneous
/// iteration; simple roots converge to ~1e-13, clustered multiple roots are
/// only good to about the usual `eps^(1/m)`.
pub fn roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let first = coeffs
        .iter()
        .position(|&c| c != 0.0)
        .ok_or(Error::ZeroPolynomial)?;
    let c = &coeffs[first..];
    let trailing = c.iter().rev().position(|&v| v != 0.0).unwrap();
    let mut out = vec![Complex64::new(0.0, 0.0); trailing];
    let c = &c[..c.len() - trailing];
    let deg = c.len() - 1;
    if deg >= 1 {
        let monic: Vec<f64> = c.iter().map(|&v| v / c[0]).collect();
        if deg == 1 {
            out.push(Complex64::new(-monic[1], 0.0));
        } else {
            out.extend(weierstrass(&monic));
        }
    }
    out.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(out)
}

/// Simultaneous root iteration on a monic polynomial of degree >= 2.
fn weierstrass(monic: &[f64]) -> Vec<Complex64> {
    let deg = monic.len() - 1;
    // All roots lie within the Cauchy bound; spread the starting points on
    // a slowly contracting spiral inside it so no two coincide.
    let radius = 1.0 + monic[1..].iter().fold(0.0, |m, &v| f64::max(m, v.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| seed.powu(k as u32 + 1) * radius)
        .collect();
    let cc: Vec<Complex64> = monic.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let horner = |x: Complex64| cc.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c);

    for _ in 0..MAX_ITER {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // Two iterates collided; nudge apart and retry next sweep.
                z[i] += Complex64::new(1e-12, 1e-12);
                max_step = f64::MAX;
                continue;
            }
            let delta = horner(z[i]) / denom;
            z[i] -= delta;
            max_step = f64::max(max_step, delta.norm() / (1.0 + z[i].norm()));
        }
        if max_step < STEP_TOL {
            break;
        }
    }
    z
}
