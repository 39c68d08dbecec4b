//! Shared helpers for the integration-test suites: an adaptive Simpson
//! integrator (kept independent of the library's fixed Gauss–Legendre rule)
//! and reference integrands for the special functions.

#![allow(dead_code)]

/// Adaptive Simpson with Richardson acceptance on `[a, b]`; `tol` is absolute.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// ln (n-1)! as a plain sum of logs (no gamma-function machinery).
pub fn ln_factorial_nm1(n: u32) -> f64 {
    (1..n).map(|k| (k as f64).ln()).sum()
}

/// Reference E[ln(1 + μX)], X ~ Gamma(n, 1), by direct integration of the
/// density against ln1p. Good to ~1e-12 relative on n ≤ 128, μ ∈ [1e-3, 1e3].
pub fn gamma_log_moment_oracle(n: u32, mu: f64) -> f64 {
    let nf = n as f64;
    let lf = ln_factorial_nm1(n);
    let upper = nf + 40.0 * nf.sqrt() + 40.0;
    let f = move |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            ((nf - 1.0) * t.ln() - t - lf).exp() * (mu * t).ln_1p()
        }
    };
    // Result magnitude is ~ln(1+μn); aim one decade below the comparison
    // tolerance used by the grid tests rather than machine precision, which
    // keeps the subdivision tree shallow.
    let scale = (mu * nf).ln_1p().max(1e-4);
    adaptive_simpson(&f, 0.0, upper, 1e-10 * scale)
}

/// Reference e^x E_n(x) via the substitution t = e^w in the defining
/// integral: ∫_0^∞ exp(x(1 - e^w) - (n-1)w) dw. The cutoff is chosen so the
/// discarded tail is below e^{-60} of the result.
pub fn exp_int_scaled_oracle(n: u32, x: f64) -> f64 {
    let nf = n as f64;
    let w_from_x = (70.0 / x).ln_1p();
    let w_max = if n > 1 {
        w_from_x.min(62.0 / (nf - 1.0))
    } else {
        w_from_x
    };
    // Result magnitude is ~1/(x+n); one decade below the grid-test tolerance.
    let f = move |w: f64| (x * (1.0 - w.exp()) - (nf - 1.0) * w).exp();
    adaptive_simpson(&f, 0.0, w_max, 1e-11 / (x + nf))
}

/// Relative-error assertion with a readable failure message.
pub fn assert_rel(actual: f64, expected: f64, tol: f64, msg: &str) {
    let denom = expected.abs().max(1e-300);
    let rel = ((actual - expected) / denom).abs();
    assert!(
        rel <= tol,
        "{msg}: actual {actual:.17e}, expected {expected:.17e}, rel err {rel:.3e}"
    );
}
