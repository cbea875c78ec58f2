//! Scalar root bracketing shared by the pipeline and the oracle.

/// Bisection on a sign-changing bracket `[lo, hi]`, stopping once the
/// bracket is narrower than `rel_tol · max(|lo|, |hi|)` (or `abs_floor`).
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64, abs_floor: f64) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= (rel_tol * lo.abs().max(hi.abs())).max(abs_floor) || mid <= lo || mid >= hi {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
