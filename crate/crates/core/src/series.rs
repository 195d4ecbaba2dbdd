//! Truncated Laurent series in one complex variable `w`.
//!
//! A series carries a window `[lo, hi]` of stored exponents and an expansion tag.
//! For [`Expansion::AtInfinity`] the coefficients above `hi` are exactly zero and
//! those below `lo` are unknown; [`Expansion::AtOrigin`] is the mirror image.
//! Every operation returns the window on which its result is exact given the
//! windows of its inputs.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::pseries;

/// Default number of retained negative (resp. positive) exponents.
pub const DEFAULT_DEPTH: i32 = 16;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expansion {
    /// Expansion around `w = infinity`; exact above `hi`.
    #[serde(rename = "inf")]
    AtInfinity,
    /// Expansion around `w = 0`; exact below `lo`.
    #[serde(rename = "orig")]
    AtOrigin,
}

impl Expansion {
    pub fn flipped(self) -> Self {
        match self {
            Expansion::AtInfinity => Expansion::AtOrigin,
            Expansion::AtOrigin => Expansion::AtInfinity,
        }
    }
}

/// Index set for [`TruncatedLaurentSeries::project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    NonNegative,
    Positive,
    Constant,
    Negative,
    NonPositive,
}

impl Region {
    pub fn contains(self, k: i32) -> bool {
        match self {
            Region::NonNegative => k >= 0,
            Region::Positive => k > 0,
            Region::Constant => k == 0,
            Region::Negative => k < 0,
            Region::NonPositive => k <= 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("expansion tags differ ({0:?} vs {1:?})")]
    TagMismatch(Expansion, Expansion),
    #[error("series has no non-zero coefficient in its window")]
    Vanishing,
    #[error("{op} needs leading exponent {expected}, found {found}")]
    LeadingExponent {
        op: &'static str,
        expected: i32,
        found: i32,
    },
    #[error("invalid series: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesRepr", into = "SeriesRepr")]
pub struct TruncatedLaurentSeries {
    lo: i32,
    hi: i32,
    tag: Expansion,
    coeffs: Vec<C64>,
}

pub type Series = TruncatedLaurentSeries;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesRepr {
    lo: i32,
    hi: i32,
    tag: Expansion,
    coeffs: Vec<[f64; 2]>,
}

impl TryFrom<SeriesRepr> for TruncatedLaurentSeries {
    type Error = SeriesError;

    fn try_from(r: SeriesRepr) -> Result<Self> {
        if r.hi < r.lo {
            return Err(SeriesError::Invalid(format!("hi {} < lo {}", r.hi, r.lo)));
        }
        let want = (r.hi - r.lo + 1) as usize;
        if r.coeffs.len() != want {
            return Err(SeriesError::Invalid(format!(
                "window [{}, {}] needs {} coefficients, got {}",
                r.lo,
                r.hi,
                want,
                r.coeffs.len()
            )));
        }
        Self::new(r.tag, r.lo, r.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect())
    }
}

impl From<TruncatedLaurentSeries> for SeriesRepr {
    fn from(s: TruncatedLaurentSeries) -> Self {
        SeriesRepr {
            lo: s.lo,
            hi: s.hi,
            tag: s.tag,
            coeffs: s.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl fmt::Debug for TruncatedLaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series[{:?} {}..={}](", self.tag, self.lo, self.hi)?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}", self.lo + i as i32, c)?;
        }
        write!(f, ")")
    }
}

impl TruncatedLaurentSeries {
    /// Series with coefficients for exponents `lo, lo+1, ...`.
    pub fn new(tag: Expansion, lo: i32, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(SeriesError::Invalid("empty window".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SeriesError::Invalid("non-finite coefficient".into()));
        }
        let hi = lo + coeffs.len() as i32 - 1;
        Ok(Self { lo, hi, tag, coeffs })
    }

    pub fn zeros(tag: Expansion, lo: i32, hi: i32) -> Self {
        assert!(hi >= lo, "empty window");
        Self {
            lo,
            hi,
            tag,
            coeffs: vec![ZERO; (hi - lo + 1) as usize],
        }
    }

    pub fn from_fn(tag: Expansion, lo: i32, hi: i32, mut f: impl FnMut(i32) -> C64) -> Self {
        let mut s = Self::zeros(tag, lo, hi);
        for k in lo..=hi {
            s.coeffs[(k - lo) as usize] = f(k);
        }
        s
    }

    /// The identity map `w` on the default-shaped window of the given depth.
    pub fn identity(tag: Expansion, depth: i32) -> Self {
        let (lo, hi) = match tag {
            Expansion::AtInfinity => (-depth, 1),
            Expansion::AtOrigin => (1, depth),
        };
        Self::from_fn(tag, lo, hi, |k| if k == 1 { C64::new(1.0, 0.0) } else { ZERO })
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.hi
    }

    pub fn tag(&self) -> Expansion {
        self.tag
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient of `w^k`; zero outside the window.
    pub fn coeff(&self, k: i32) -> C64 {
        self.get(k).unwrap_or(ZERO)
    }

    /// Coefficient of `w^k` if `k` is in the window.
    pub fn get(&self, k: i32) -> Option<C64> {
        if k < self.lo || k > self.hi {
            None
        } else {
            Some(self.coeffs[(k - self.lo) as usize])
        }
    }

    pub fn set(&mut self, k: i32, c: C64) {
        assert!(k >= self.lo && k <= self.hi, "exponent {k} outside window");
        self.coeffs[(k - self.lo) as usize] = c;
    }

    /// Whether `w^k` is determined: inside the window or on the exact side of it.
    pub fn is_known(&self, k: i32) -> bool {
        match self.tag {
            Expansion::AtInfinity => k >= self.lo,
            Expansion::AtOrigin => k <= self.hi,
        }
    }

    /// Exponent of the first non-zero coefficient counted from the exact end.
    pub fn leading_exponent(&self) -> Option<i32> {
        let (lead, p) = self.view_trimmed().ok()?;
        let _ = p;
        Some(lead)
    }

    // Power-series view: s = w^lead * P(v), v = 1/w at infinity, v = w at the origin.
    fn view(&self) -> (i32, Vec<C64>) {
        match self.tag {
            Expansion::AtInfinity => (self.hi, self.coeffs.iter().rev().copied().collect()),
            Expansion::AtOrigin => (self.lo, self.coeffs.clone()),
        }
    }

    fn view_trimmed(&self) -> Result<(i32, Vec<C64>)> {
        let (lead, p) = self.view();
        let skip = p.iter().take_while(|c| **c == ZERO).count();
        if skip == p.len() {
            return Err(SeriesError::Vanishing);
        }
        let lead = match self.tag {
            Expansion::AtInfinity => lead - skip as i32,
            Expansion::AtOrigin => lead + skip as i32,
        };
        Ok((lead, p[skip..].to_vec()))
    }

    fn from_view(tag: Expansion, lead: i32, p: Vec<C64>) -> Self {
        let n = p.len() as i32;
        match tag {
            Expansion::AtInfinity => Self {
                lo: lead - n + 1,
                hi: lead,
                tag,
                coeffs: p.into_iter().rev().collect(),
            },
            Expansion::AtOrigin => Self {
                lo: lead,
                hi: lead + n - 1,
                tag,
                coeffs: p,
            },
        }
    }

    fn check_tag(&self, other: &Self) -> Result<()> {
        if self.tag != other.tag {
            Err(SeriesError::TagMismatch(self.tag, other.tag))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_tag(other)?;
        let (lo, hi) = match self.tag {
            Expansion::AtInfinity => (self.lo.max(other.lo), self.hi.max(other.hi)),
            Expansion::AtOrigin => (self.lo.min(other.lo), self.hi.min(other.hi)),
        };
        Ok(Self::from_fn(self.tag, lo, hi, |k| self.coeff(k) + other.coeff(k)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
            ..self.clone()
        }
    }

    /// Adds a constant term, widening the window to contain exponent 0 if needed.
    pub fn add_constant(&self, c: C64) -> Self {
        let mut s = self.clone();
        match self.tag {
            Expansion::AtInfinity if self.hi < 0 => s = s.pad_exact(0),
            Expansion::AtOrigin if self.lo > 0 => s = s.pad_exact(0),
            _ => {}
        }
        if s.get(0).is_some() {
            let v = s.coeff(0) + c;
            s.set(0, v);
        }
        s
    }

    /// Extends the window with exact zeros on the exact side up to exponent `k`.
    pub fn pad_exact(&self, k: i32) -> Self {
        let (lo, hi) = match self.tag {
            Expansion::AtInfinity => (self.lo, self.hi.max(k)),
            Expansion::AtOrigin => (self.lo.min(k), self.hi),
        };
        Self::from_fn(self.tag, lo, hi, |j| self.coeff(j))
    }

    /// Narrows the window to `[lo, hi]` intersected with the current one.
    pub fn restrict(&self, lo: i32, hi: i32) -> Self {
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi);
        Self::from_fn(self.tag, lo, hi.max(lo), |k| self.coeff(k))
    }

    /// Multiplication by `w^k`.
    pub fn shift(&self, k: i32) -> Self {
        Self {
            lo: self.lo + k,
            hi: self.hi + k,
            ..self.clone()
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_tag(other)?;
        let (la, pa) = self.view();
        let (lb, pb) = other.view();
        let n = pa.len().min(pb.len());
        Ok(Self::from_view(self.tag, la + lb, pseries::mul(&pa, &pb, n)))
    }

    pub fn powi(&self, n: i32) -> Result<Self> {
        if n >= 0 {
            let (lead, p) = self.view();
            return Ok(Self::from_view(
                self.tag,
                lead * n,
                pseries::powi(&p, n as i64, p.len()),
            ));
        }
        let (lead, p) = self.view_trimmed()?;
        Ok(Self::from_view(self.tag, lead * n, pseries::powi(&p, n as i64, p.len())))
    }

    pub fn recip(&self) -> Result<Self> {
        let (lead, p) = self.view_trimmed()?;
        Ok(Self::from_view(self.tag, -lead, pseries::inv(&p, p.len())))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.recip()?)
    }

    pub fn derivative(&self) -> Self {
        Self::from_fn(self.tag, self.lo - 1, self.hi - 1, |k| {
            self.coeff(k + 1) * (k + 1) as f64
        })
    }

    pub fn evaluate(&self, w: C64) -> C64 {
        let (lead, p) = self.view();
        let v = match self.tag {
            Expansion::AtInfinity => w.inv(),
            Expansion::AtOrigin => w,
        };
        let mut acc = ZERO;
        for c in p.iter().rev() {
            acc = acc * v + c;
        }
        acc * w.powi(lead)
    }

    pub fn project(&self, region: Region) -> Self {
        Self::from_fn(self.tag, self.lo, self.hi, |k| {
            if region.contains(k) {
                self.coeff(k)
            } else {
                ZERO
            }
        })
    }

    /// `outer(inner(w))`; `inner` must have leading exponent 1 and the same tag.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        outer.check_tag(inner)?;
        let (li, pi) = inner.view_trimmed()?;
        if li != 1 {
            return Err(SeriesError::LeadingExponent {
                op: "compose",
                expected: 1,
                found: li,
            });
        }
        let (lo_exp, po) = outer.view();
        let n = po.len().min(pi.len());
        let step_base = match inner.tag {
            Expansion::AtInfinity => pseries::inv(&pi, n),
            Expansion::AtOrigin => pi[..n].to_vec(),
        };
        let mut step = vec![ZERO; n];
        step[1..].copy_from_slice(&step_base[..n - 1]);
        let mut term = pseries::powi(&pi, lo_exp as i64, n);
        let mut out = vec![ZERO; n];
        for (j, &c) in po.iter().enumerate().take(n) {
            if j > 0 {
                term = pseries::mul(&term, &step, n);
            }
            for (o, t) in out.iter_mut().zip(&term) {
                *o += c * t;
            }
        }
        Ok(Self::from_view(outer.tag, lo_exp, out))
    }

    /// Compositional inverse. Leading exponent must be `1` or `-1`; a leading
    /// exponent of `-1` swaps the expansion point.
    pub fn revert(&self) -> Result<Self> {
        let (lead, p) = self.view_trimmed()?;
        match lead {
            1 => {}
            -1 => return self.flip().revert()?.recip(),
            found => {
                return Err(SeriesError::LeadingExponent {
                    op: "revert",
                    expected: 1,
                    found,
                })
            }
        }
        let n = p.len();
        match self.tag {
            Expansion::AtOrigin => {
                let mut f = vec![ZERO; n + 1];
                f[1..].copy_from_slice(&p);
                let y = pseries::revert(&f, n + 1);
                Ok(Self::from_view(self.tag, 1, y[1..].to_vec()))
            }
            Expansion::AtInfinity => {
                // z = s(w)  <=>  1/z = x / P(x) with x = 1/w; revert in x, then invert.
                let mut f = vec![ZERO; n + 1];
                f[1..].copy_from_slice(&pseries::inv(&p, n));
                let y = pseries::revert(&f, n + 1);
                Ok(Self::from_view(self.tag, 1, pseries::inv(&y[1..], n)))
            }
        }
    }

    /// Principal logarithm; the leading exponent must be zero.
    pub fn log(&self) -> Result<Self> {
        let (lead, p) = self.view_trimmed()?;
        if lead != 0 {
            return Err(SeriesError::LeadingExponent {
                op: "log",
                expected: 0,
                found: lead,
            });
        }
        Ok(Self::from_view(self.tag, 0, pseries::log(&p, p.len())))
    }

    /// Exponential; the series must not contain exponents on the growing side of 0.
    pub fn exp(&self) -> Result<Self> {
        let s = match self.tag {
            Expansion::AtInfinity if self.hi < 0 => self.pad_exact(0),
            Expansion::AtOrigin if self.lo > 0 => self.pad_exact(0),
            _ => self.clone(),
        };
        let (lead, p) = s.view();
        let skip = match s.tag {
            Expansion::AtInfinity => lead,
            Expansion::AtOrigin => -lead,
        };
        if skip < 0 {
            return Err(SeriesError::LeadingExponent {
                op: "exp",
                expected: 0,
                found: lead,
            });
        }
        if p[..skip as usize].iter().any(|c| *c != ZERO) {
            return Err(SeriesError::LeadingExponent {
                op: "exp",
                expected: 0,
                found: lead,
            });
        }
        let p = &p[skip as usize..];
        Ok(Self::from_view(s.tag, 0, pseries::exp(p, p.len())))
    }

    /// Principal square root of a series with leading exponent zero.
    pub fn sqrt(&self) -> Result<Self> {
        self.log()?.scale(C64::new(0.5, 0.0)).exp()
    }

    /// Substitution `w -> 1/w`; swaps the expansion tag.
    pub fn flip(&self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
            tag: self.tag.flipped(),
            coeffs: self.coeffs.iter().rev().copied().collect(),
        }
    }

    /// `conj(s(1/conj(w)))`; swaps the expansion tag.
    pub fn conj_flip(&self) -> Self {
        let mut s = self.flip();
        for c in &mut s.coeffs {
            *c = c.conj();
        }
        s
    }

    /// Largest coefficient modulus over the window.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient difference over the intersection of both windows.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_tag(other)?;
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        Ok((lo..=hi)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max))
    }
}
