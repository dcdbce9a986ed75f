//! One-dimensional maximizers.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Location and value of a maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `1e-10 (hi - lo)`. Both end
/// points are compared against the interior estimate so boundary maxima
/// are returned exactly.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Maximum {
    if hi <= lo {
        return Maximum { argmax: lo, value: f(lo) };
    }
    let tol = 1e-10 * (hi - lo);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
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
    let mut best = if f1 >= f2 {
        Maximum { argmax: x1, value: f1 }
    } else {
        Maximum { argmax: x2, value: f2 }
    };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.value {
            best = Maximum { argmax: x, value: v };
        }
    }
    best
}

/// Midpoint concavity spot check on 17 evenly spaced points of `[lo, hi]`.
pub fn check_concave<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<()> {
    const N: usize = 16;
    let xs: Vec<f64> = (0..=N).map(|i| lo + (hi - lo) * i as f64 / N as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(1.0);
    for i in 1..N {
        let chord = 0.5 * (ys[i - 1] + ys[i + 1]);
        if ys[i] < chord - 1e-9 * scale {
            return Err(Error::NotConcave {
                lo,
                hi,
                detail: format!("f({}) = {} below chord {}", xs[i], ys[i], chord),
            });
        }
    }
    Ok(())
}

/// Maximizes a concave objective; the concavity is spot-checked first.
pub fn maximize_concave<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<Maximum> {
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::precondition("maximize_concave", format!("empty interval [{lo}, {hi}]")));
    }
    check_concave(&f, lo, hi)?;
    Ok(golden_section(f, lo, hi))
}

/// Maximizes a unimodal objective by golden-section search.
pub fn maximize_unimodal<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Maximum {
    golden_section(f, lo, hi)
}

/// Dense scan followed by golden-section refinement around the best grid
/// cell. Used where unimodality is not guaranteed.
pub fn maximize_scan<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> Maximum {
    let points = points.max(3);
    let step = (hi - lo) / (points - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..points {
        let x = if i + 1 == points { hi } else { lo + step * i as f64 };
        let v = f(x);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let refined = golden_section(&f, a, b);
    if refined.value >= best_v {
        refined
    } else {
        let x = if best_i + 1 == points { hi } else { lo + step * best_i as f64 };
        Maximum { argmax: x, value: best_v }
    }
}
