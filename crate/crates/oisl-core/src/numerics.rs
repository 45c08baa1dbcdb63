//! Shared numerical routines: bisection root finding, golden-section
//! maximization, and adaptive Simpson quadrature.

/// Errors from the numerical routines.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NumericsError {
    /// The supplied bracket does not enclose a sign change.
    #[error("bracket [{0}, {1}] does not enclose a root")]
    NoBracket(f64, f64),
    /// The quadrature did not reach the requested tolerance.
    #[error("quadrature failed to converge to tolerance {0}")]
    QuadratureDepth(f64),
}

/// Finds `x` in `[lo, hi]` with `f(x) = 0` by bisection.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs. Iterates until the
/// bracket width relative to its midpoint falls below `rel_tol`.
pub fn bisect<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> Result<f64, NumericsError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(NumericsError::NoBracket(lo, hi));
    }
    // 2000 iterations is far beyond what rel_tol ever needs; it guards
    // against pathological tolerances rather than terminating early.
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs() {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Assumes a single local maximum in the interval. Returns `(x_max, f_max)`
/// once the interval has shrunk below `tol_x`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol_x: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol_x {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `abs_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<f64, NumericsError> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_recurse(f, a, b, fa, fb, fm, whole, abs_tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
) -> Result<f64, NumericsError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * abs_tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(NumericsError::QuadratureDepth(abs_tol));
    }
    let half_tol = 0.5 * abs_tol;
    let l = simpson_recurse(f, a, m, fa, fm, flm, left, half_tol, depth - 1)?;
    let r = simpson_recurse(f, m, b, fm, fb, frm, right, half_tol, depth - 1)?;
    Ok(l + r)
}

/// Decibels to linear power ratio: `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to decibels: `10·log10(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Deterministically derives an independent sub-seed from a base seed and a
/// stream index (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bisect_finds_square_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, max_relative = 1e-10);
    }

    #[test]
    fn bisect_rejects_bad_bracket() {
        assert_eq!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9),
            Err(NumericsError::NoBracket(-1.0, 1.0))
        );
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_max(|x| -(x - 1.25) * (x - 1.25) + 3.0, 0.0, 4.0, 1e-10);
        // Near a quadratic maximum the function is flat to within one ULP
        // inside |x − x*| ≲ √ε, so no bracketing method can place x better
        // than ~1e-7 regardless of tol_x.
        assert_relative_eq!(x, 1.25, epsilon = 1e-6);
        assert_relative_eq!(fx, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        // ∫0..2 (3x² + 1) dx = 10
        let v = adaptive_simpson(&|x| 3.0 * x * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 10.0, epsilon = 1e-10);
    }

    #[test]
    fn simpson_handles_steep_weight() {
        // ∫0..1 β·I^(β−1) dI = 1 for the pointing-jitter intensity weight.
        let beta = 15.563025;
        let v = adaptive_simpson(&|x: f64| beta * x.powf(beta - 1.0), 0.0, 1.0, 1e-13).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn simpson_matches_transcendental() {
        // ∫0..π sin x dx = 2
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-11);
    }

    #[test]
    fn db_round_trip() {
        assert_relative_eq!(db_to_linear(3.0103), 2.0, epsilon = 1e-4);
        assert_relative_eq!(linear_to_db(100.0), 20.0, epsilon = 1e-12);
        for db in [-30.0, -2.0, 0.0, 4.8, 17.0] {
            assert_relative_eq!(linear_to_db(db_to_linear(db)), db, epsilon = 1e-12);
        }
    }

    #[test]
    fn derived_seeds_differ_by_stream() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        let c = derive_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(42, 0));
    }
}
