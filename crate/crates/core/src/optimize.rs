//! One-dimensional search helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimize a unimodal `f` on `[lo, hi]` by golden-section search. Returns
/// the abscissa once the bracket is narrower than `tol`. The end points are
/// also checked so monotone objectives land exactly on the bound.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    if b - a <= tol {
        return 0.5 * (a + b);
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // bounded so a NaN objective cannot spin forever
    for _ in 0..500 {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    let (f_lo, f_hi) = (f(lo.min(hi)), f(lo.max(hi)));
    if f_lo < fm && f_lo <= f_hi {
        lo.min(hi)
    } else if f_hi < fm {
        lo.max(hi)
    } else {
        mid
    }
}

/// Maximize a unimodal `f` on `[lo, hi]`; returns `(x, f(x))`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> (f64, f64) {
    let x = golden_section_min(|x| -f(x), lo, hi, tol);
    (x, f(x))
}
