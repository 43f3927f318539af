//! Adaptive Simpson quadrature.

use std::cell::Cell;

use crate::error::{Error, Result};

const EVALUATION_BUDGET: usize = 4_000_000;

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evaluations: &Cell<usize>,
) -> Option<f64> {
    evaluations.set(evaluations.get() + 2);
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if !delta.is_finite() || depth == 0 || evaluations.get() > EVALUATION_BUDGET {
        return None;
    }
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    Some(
        refine(
            f,
            a,
            fa,
            m,
            fm,
            lm,
            flm,
            left,
            0.5 * tol,
            depth - 1,
            evaluations,
        )? + refine(
            f,
            m,
            fm,
            b,
            fb,
            rm,
            frm,
            right,
            0.5 * tol,
            depth - 1,
            evaluations,
        )?,
    )
}

/// `∫_a^b f` to absolute tolerance `tol`, starting from `panels` equal
/// sub-intervals so narrow features are not skipped.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> Result<f64> {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    let evaluations = Cell::new(0);
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == panels { b } else { lo + width };
        let (flo, fhi) = (f(lo), f(hi));
        let (m, fm, whole) = simpson(&f, lo, flo, hi, fhi);
        total += refine(
            &f,
            lo,
            flo,
            hi,
            fhi,
            m,
            fm,
            whole,
            tol / panels as f64,
            48,
            &evaluations,
        )
        .ok_or_else(|| Error::Numerical(format!("quadrature did not converge on [{lo}, {hi}]")))?;
    }
    if !total.is_finite() {
        return Err(Error::Numerical(
            "quadrature produced a non-finite value".into(),
        ));
    }
    Ok(total)
}
