//! Exact Laurent polynomials (finitely many non-zero terms).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::series::{Expansion, Region, Series};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `sum_{k=lo}^{lo+len-1} coeffs[k-lo] w^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentPolynomial {
    pub lo: i32,
    pub coeffs: Vec<C64>,
}

impl LaurentPolynomial {
    pub fn zero() -> Self {
        Self {
            lo: 0,
            coeffs: vec![ZERO],
        }
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    pub fn coeff(&self, k: i32) -> C64 {
        if k < self.lo || k > self.hi() {
            ZERO
        } else {
            self.coeffs[(k - self.lo) as usize]
        }
    }

    /// Terms of `s` in `region`. The region must lie inside the known part of `s`.
    pub fn from_projection(s: &Series, region: Region) -> Self {
        let (lo, hi) = match region {
            Region::NonNegative => (0, s.hi().max(0)),
            Region::Positive => (1, s.hi().max(1)),
            Region::Constant => (0, 0),
            Region::Negative => (s.lo().min(-1), -1),
            Region::NonPositive => (s.lo().min(0), 0),
        };
        debug_assert!(s.is_known(lo) && s.is_known(hi));
        Self {
            lo,
            coeffs: (lo..=hi).map(|k| s.coeff(k)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        Self {
            lo,
            coeffs: (lo..=hi).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        if self.lo == 0 {
            // the constant term drops out instead of becoming a zero w^-1 term
            if self.coeffs.len() == 1 {
                return Self::zero();
            }
            let tail = Self {
                lo: 1,
                coeffs: self.coeffs[1..].to_vec(),
            };
            return tail.derivative();
        }
        Self {
            lo: self.lo - 1,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * (self.lo + i as i32) as f64)
                .collect(),
        }
    }

    /// `w d/dw`.
    pub fn euler(&self) -> Self {
        Self {
            lo: self.lo,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * (self.lo + i as i32) as f64)
                .collect(),
        }
    }

    pub fn evaluate(&self, w: C64) -> C64 {
        let mut acc = ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc * w.powi(self.lo)
    }

    /// The same polynomial as a series with the given tag. The window is widened
    /// as needed so that every term is kept.
    pub fn to_series(&self, tag: Expansion, lo: i32, hi: i32) -> Series {
        let lo = lo.min(self.lo);
        let hi = hi.max(self.hi());
        Series::from_fn(tag, lo, hi, |k| self.coeff(k))
    }

    /// `self * s` on every exponent the truncation of `s` still determines.
    pub fn mul_series(&self, s: &Series) -> Series {
        let (lo, hi) = match s.tag() {
            Expansion::AtInfinity => (s.lo() + self.hi(), s.hi() + self.hi()),
            Expansion::AtOrigin => (s.lo() + self.lo, s.hi() + self.lo),
        };
        Series::from_fn(s.tag(), lo, hi, |k| {
            (self.lo..=self.hi())
                .map(|j| self.coeff(j) * s.coeff(k - j))
                .sum()
        })
    }
}
