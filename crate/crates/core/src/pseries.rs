//! Truncated formal power series `a[0] + a[1] v + a[2] v^2 + ...` stored as plain
//! coefficient vectors. Every routine keeps the length of its inputs; coefficients
//! past the end are unknown, not zero.

use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub(crate) fn mul(a: &[C64], b: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![ZERO; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == ZERO {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Multiplicative inverse; requires `a[0] != 0`.
pub(crate) fn inv(a: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![ZERO; len];
    if len == 0 {
        return out;
    }
    let inv0 = ONE / a[0];
    out[0] = inv0;
    for k in 1..len {
        let mut acc = ZERO;
        for j in 1..=k.min(a.len() - 1) {
            acc += a[j] * out[k - j];
        }
        out[k] = -acc * inv0;
    }
    out
}

pub(crate) fn powi(a: &[C64], e: i64, len: usize) -> Vec<C64> {
    let mut base = if e < 0 { inv(a, len) } else { a[..len.min(a.len())].to_vec() };
    base.resize(len, ZERO);
    let mut n = e.unsigned_abs();
    let mut out = vec![ZERO; len];
    if len > 0 {
        out[0] = ONE;
    }
    while n > 0 {
        if n & 1 == 1 {
            out = mul(&out, &base, len);
        }
        n >>= 1;
        if n > 0 {
            base = mul(&base, &base, len);
        }
    }
    out
}

pub(crate) fn derivative(a: &[C64]) -> Vec<C64> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// `log a` for `a[0] != 0`, principal branch on the constant term.
pub(crate) fn log(a: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![ZERO; len];
    if len == 0 {
        return out;
    }
    out[0] = a[0].ln();
    if len == 1 {
        return out;
    }
    // (log a)' = a' / a
    let q = mul(&derivative(a), &inv(a, len - 1), len - 1);
    for k in 1..len {
        out[k] = q[k - 1] / k as f64;
    }
    out
}

pub(crate) fn exp(a: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![ZERO; len];
    if len == 0 {
        return out;
    }
    out[0] = a.first().copied().unwrap_or(ZERO).exp();
    // b' = a' b, so k b_k = sum_{j=1}^{k} j a_j b_{k-j}
    for k in 1..len {
        let mut acc = ZERO;
        for j in 1..=k.min(a.len().saturating_sub(1)) {
            acc += a[j] * out[k - j] * j as f64;
        }
        out[k] = acc / k as f64;
    }
    out
}

/// `outer(inner(v))` for `inner[0] == 0`, by Horner.
pub(crate) fn compose(outer: &[C64], inner: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![ZERO; len];
    for &c in outer.iter().take(len).rev() {
        out = mul(&out, inner, len);
        out[0] += c;
    }
    out
}

/// Compositional inverse `y` with `f(y(v)) = v`; requires `f[0] == 0`, `f[1] != 0`.
/// Newton iteration from the linear seed, with a fixed iteration count.
pub(crate) fn revert(f: &[C64], len: usize) -> Vec<C64> {
    let mut y = vec![ZERO; len];
    if len < 2 {
        return y;
    }
    y[1] = ONE / f[1];
    let df = derivative(f);
    let iters = 2 * (usize::BITS - (len - 1).leading_zeros()) as usize;
    for _ in 0..iters {
        let mut r = compose(f, &y, len);
        r[1] -= ONE;
        let d = compose(&df, &y, len);
        let step = mul(&r, &inv(&d, len), len);
        for (yk, sk) in y.iter_mut().zip(step) {
            *yk -= sk;
        }
        y[0] = ZERO;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn inverse_of_one_minus_v_is_geometric() {
        let a = [c(1.0), c(-1.0)];
        let b = inv(&a, 6);
        assert!(b.iter().all(|&x| (x - ONE).norm() < 1e-15));
    }

    #[test]
    fn exp_log_round_trip() {
        let a = [c(2.0), c(0.3), C64::new(0.1, -0.2), c(0.05)];
        let back = exp(&log(&a, 8), 8);
        for (k, v) in back.iter().enumerate() {
            let want = a.get(k).copied().unwrap_or(ZERO);
            assert!((v - want).norm() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn revert_of_v_over_one_minus_v() {
        // v/(1-v) has inverse v/(1+v)
        let f: Vec<C64> = (0..10).map(|k| if k == 0 { ZERO } else { ONE }).collect();
        let y = revert(&f, 10);
        for (k, v) in y.iter().enumerate().skip(1) {
            let want = if k % 2 == 1 { 1.0 } else { -1.0 };
            assert!((v.re - want).abs() < 1e-13 && v.im.abs() < 1e-13);
        }
    }

    #[test]
    fn negative_power() {
        let a = [c(1.0), c(1.0)];
        let p = powi(&a, -2, 5);
        let want = [1.0, -2.0, 3.0, -4.0, 5.0];
        for (v, w) in p.iter().zip(want) {
            assert!((v.re - w).abs() < 1e-14);
        }
    }
}
