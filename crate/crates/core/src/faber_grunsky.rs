//! Faber polynomials and Grunsky coefficients of a pair of normalized maps.
//!
//! `g(z) = z/r + b0 + b1/z + ...` lives near infinity and `f(z) = r z + a2 z^2 + ...`
//! near the origin. The Grunsky coefficients are read off logarithms of difference
//! quotients, expanded as two-variable truncated power series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::polynomial::LaurentPolynomial;
use crate::pseries;
use crate::series::{Expansion, Region, Series, SeriesError};

/// Default half-width of a Grunsky table.
pub const DEFAULT_HALF_WIDTH: usize = 8;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrunskyError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid input form: {0}")]
    InvalidForm(String),
    #[error("series window supports {available}, {needed} requested")]
    WindowTooSmall { needed: usize, available: usize },
    #[error("scalings disagree: f'(0) = {r_f}, 1/g'(inf) = {r_g}")]
    InconsistentScaling { r_f: C64, r_g: C64 },
    #[error("log r needs Re r > 0, got r = {0}")]
    BranchCut(C64),
    #[error("mixed-quadrant routes disagree by {0:e}")]
    RouteMismatch(f64),
    #[error("series does not converge at the sample point")]
    Divergent,
}

pub type Result<T> = std::result::Result<T, GrunskyError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaberSet {
    pub n_max: usize,
    /// `phi[n-1]` is `Phi_n`.
    pub phi: Vec<LaurentPolynomial>,
    /// `psi[n-1]` is `Psi_n`; empty when no interior map was supplied.
    pub psi: Vec<LaurentPolynomial>,
}

fn check_lead(s: &Series, tag: Expansion, what: &str) -> Result<()> {
    if s.tag() != tag || s.leading_exponent() != Some(1) {
        return Err(GrunskyError::InvalidForm(format!(
            "{what} must be {tag:?} with leading exponent 1"
        )));
    }
    Ok(())
}

/// Largest `n` for which `Phi_n` is determined by the window of `l`.
pub fn phi_capacity(l: &Series) -> usize {
    (1 - l.lo()).max(0) as usize
}

/// Largest `n` for which `Psi_n` is determined by the window of `lt`.
pub fn psi_capacity(lt: &Series) -> usize {
    (lt.hi() - 1).max(0) as usize
}

/// `Phi_n = (L^n)_{>=0}`.
pub fn faber_phi(l: &Series, n: usize) -> Result<LaurentPolynomial> {
    check_lead(l, Expansion::AtInfinity, "L")?;
    if n > phi_capacity(l) {
        return Err(GrunskyError::WindowTooSmall {
            needed: n,
            available: phi_capacity(l),
        });
    }
    let p = l.restrict(l.lo(), 1).powi(n as i32)?;
    Ok(LaurentPolynomial::from_projection(&p, Region::NonNegative))
}

/// `Psi_n = (Lt^{-n})_{<=0}`.
pub fn faber_psi(lt: &Series, n: usize) -> Result<LaurentPolynomial> {
    check_lead(lt, Expansion::AtOrigin, "Ltilde")?;
    if n > psi_capacity(lt) {
        return Err(GrunskyError::WindowTooSmall {
            needed: n,
            available: psi_capacity(lt),
        });
    }
    let p = lt.restrict(1, lt.hi()).powi(-(n as i32))?;
    Ok(LaurentPolynomial::from_projection(&p, Region::NonPositive))
}

/// `Phi_1..=Phi_{n_max}` by repeated multiplication.
pub fn faber_phi_all(l: &Series, n_max: usize) -> Result<Vec<LaurentPolynomial>> {
    check_lead(l, Expansion::AtInfinity, "L")?;
    if n_max > phi_capacity(l) {
        return Err(GrunskyError::WindowTooSmall {
            needed: n_max,
            available: phi_capacity(l),
        });
    }
    let base = l.restrict(l.lo(), 1);
    let mut out = Vec::with_capacity(n_max);
    let mut p = base.clone();
    for n in 1..=n_max {
        if n > 1 {
            p = p.mul(&base)?;
        }
        out.push(LaurentPolynomial::from_projection(&p, Region::NonNegative));
    }
    Ok(out)
}

/// `Psi_1..=Psi_{n_max}` by repeated multiplication.
pub fn faber_psi_all(lt: &Series, n_max: usize) -> Result<Vec<LaurentPolynomial>> {
    check_lead(lt, Expansion::AtOrigin, "Ltilde")?;
    if n_max > psi_capacity(lt) {
        return Err(GrunskyError::WindowTooSmall {
            needed: n_max,
            available: psi_capacity(lt),
        });
    }
    let base = lt.restrict(1, lt.hi()).recip()?;
    let mut out = Vec::with_capacity(n_max);
    let mut p = base.clone();
    for n in 1..=n_max {
        if n > 1 {
            p = p.mul(&base)?;
        }
        out.push(LaurentPolynomial::from_projection(&p, Region::NonPositive));
    }
    Ok(out)
}

pub fn faber_set(l: &Series, lt: Option<&Series>, n_max: usize) -> Result<FaberSet> {
    Ok(FaberSet {
        n_max,
        phi: faber_phi_all(l, n_max)?,
        psi: match lt {
            Some(lt) => faber_psi_all(lt, n_max)?,
            None => Vec::new(),
        },
    })
}

// Sum of `terms`, failing when the tail has not decayed.
fn summed(terms: &[C64]) -> Result<C64> {
    let head = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let tail = terms[terms.len() * 3 / 4..]
        .iter()
        .map(|t| t.norm())
        .fold(0.0, f64::max);
    if tail > 1e-6 * head {
        return Err(GrunskyError::Divergent);
    }
    Ok(terms.iter().sum())
}

fn series_terms(s: &Series, z: C64) -> Vec<C64> {
    let mut t: Vec<C64> = (s.lo()..=s.hi()).map(|k| s.coeff(k) * z.powi(k)).collect();
    if s.tag() == Expansion::AtInfinity {
        t.reverse();
    }
    t
}

/// Largest mismatch of the two generating identities
/// `w/(w - g(z)) = -sum w Phi_n'(w) z^-n / n` and
/// `f(z)/(w - f(z)) = -sum w Psi_n'(w) z^n / n`, where `g`, `f` are the inverses of
/// `l`, `lt`. `z` is the sample point near infinity, `z_tilde` near the origin.
pub fn faber_generating_check(
    l: &Series,
    lt: Option<&Series>,
    w: C64,
    z: C64,
    z_tilde: C64,
) -> Result<f64> {
    let g = l.revert()?;
    let gz = summed(&series_terms(&g, z))?;
    let phis = faber_phi_all(l, phi_capacity(l))?;
    let terms: Vec<C64> = phis
        .iter()
        .enumerate()
        .map(|(i, p)| -w * p.derivative().evaluate(w) / (i + 1) as f64 * z.powi(-(i as i32 + 1)))
        .collect();
    let mut worst = (w / (w - gz) - summed(&terms)?).norm();
    if let Some(lt) = lt {
        let f = lt.revert()?;
        let fz = summed(&series_terms(&f, z_tilde))?;
        let psis = faber_psi_all(lt, psi_capacity(lt))?;
        let terms: Vec<C64> = psis
            .iter()
            .enumerate()
            .map(|(i, p)| {
                -w * p.derivative().evaluate(w) / (i + 1) as f64 * z_tilde.powi(i as i32 + 1)
            })
            .collect();
        worst = worst.max((fz / (w - fz) - summed(&terms)?).norm());
    }
    Ok(worst)
}

/// Grunsky coefficients `b_{m,n}` for `|m|, |n| <= half_width`. Entries that the
/// inputs do not determine (negative indices for a single exterior map) are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct GrunskyTable {
    pub half_width: usize,
    pub r: C64,
    entries: Vec<Option<C64>>,
    /// Largest disagreement between the two expansions used for the mixed quadrant.
    pub mixed_route_discrepancy: f64,
}

impl GrunskyTable {
    fn empty(half_width: usize, r: C64) -> Self {
        let w = 2 * half_width + 1;
        Self {
            half_width,
            r,
            entries: vec![None; w * w],
            mixed_route_discrepancy: 0.0,
        }
    }

    fn index(&self, m: i32, n: i32) -> Option<usize> {
        let h = self.half_width as i32;
        if m.abs() > h || n.abs() > h {
            return None;
        }
        Some(((m + h) * (2 * h + 1) + (n + h)) as usize)
    }

    fn put(&mut self, m: i32, n: i32, v: C64) {
        let i = self.index(m, n).expect("index in range");
        self.entries[i] = Some(v);
    }

    fn put_sym(&mut self, m: i32, n: i32, v: C64) {
        self.put(m, n, v);
        self.put(n, m, v);
    }

    pub fn get(&self, m: i32, n: i32) -> Option<C64> {
        self.index(m, n).and_then(|i| self.entries[i])
    }

    /// `(m, n, b_{m,n})` for every available entry, row-major in `m` then `n`.
    pub fn iter(&self) -> impl Iterator<Item = (i32, i32, C64)> + '_ {
        let h = self.half_width as i32;
        (-h..=h)
            .flat_map(move |m| (-h..=h).map(move |n| (m, n)))
            .filter_map(|(m, n)| self.get(m, n).map(|v| (m, n, v)))
    }

    /// Largest `|b_mn - b_nm| / max(1, |b_mn|, |b_nm|)`; entries grow geometrically
    /// with the indices, so the absolute gap is dominated by roundoff.
    pub fn max_asymmetry(&self) -> f64 {
        self.iter()
            .filter_map(|(m, n, v)| {
                self.get(n, m).map(|u| (u - v).norm() / u.norm().max(v.norm()).max(1.0))
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `m,n,re,im`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,n,re,im\n");
        for (m, n, v) in self.iter() {
            // adding 0.0 turns -0.0 into 0.0
            let _ = writeln!(s, "{m},{n},{:.16e},{:.16e}", v.re + 0.0, v.im + 0.0);
        }
        s
    }
}

// Two-variable truncated power series: `a[i][j]` is the coefficient of u^i v^j,
// where `i` indexes the inner variable (z1 side) and `j` the outer (z2 side).
type Bivariate = Vec<Vec<C64>>;

fn bi_zero(m: usize) -> Bivariate {
    vec![vec![ZERO; m + 1]; m + 1]
}

fn bi_mul(a: &Bivariate, b: &Bivariate, m: usize) -> Bivariate {
    // each outer coefficient is a univariate series in the inner variable
    let mut out = bi_zero(m);
    let col = |x: &Bivariate, j: usize| -> Vec<C64> { (0..=m).map(|i| x[i][j]).collect() };
    for ja in 0..=m {
        let ca = col(a, ja);
        if ca.iter().all(|c| *c == ZERO) {
            continue;
        }
        for jb in 0..=m - ja {
            let p = pseries::mul(&ca, &col(b, jb), m + 1);
            for i in 0..=m {
                out[i][ja + jb] += p[i];
            }
        }
    }
    out
}

/// `log(1 + x)` for `x` without constant term.
fn bi_log1p(x: &Bivariate, m: usize) -> Bivariate {
    debug_assert!(x[0][0] == ZERO);
    let mut out = bi_zero(m);
    let mut pow = x.clone();
    for k in 1..=2 * m {
        let c = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
        for i in 0..=m {
            for j in 0..=m {
                out[i][j] += pow[i][j] * c;
            }
        }
        if k < 2 * m {
            pow = bi_mul(&pow, x, m);
        }
    }
    out
}

fn principal_log(r: C64) -> Result<C64> {
    if r.re <= 0.0 {
        return Err(GrunskyError::BranchCut(r));
    }
    Ok(r.ln())
}

fn need(needed: usize, available: i32) -> Result<()> {
    let available = available.max(0) as usize;
    if needed > available {
        Err(GrunskyError::WindowTooSmall { needed, available })
    } else {
        Ok(())
    }
}

// Quadrant m, n >= 1 and the edge b_{n,0} from the exterior map alone.
fn fill_exterior(table: &mut GrunskyTable, g: &Series, m: usize) -> Result<()> {
    let c1 = g.coeff(1);
    // beta_k is the coefficient of z^{-k}; beta_{2m-1} is the deepest needed
    need(2 * m - 1, -g.lo())?;
    let mut x = bi_zero(m);
    for a in 1..=m {
        for b in 1..=m {
            x[a][b] = -g.coeff(1 - (a + b) as i32) / c1;
        }
    }
    let l = bi_log1p(&x, m);
    for a in 1..=m {
        for b in 1..=m {
            table.put(a as i32, b as i32, -l[a][b]);
        }
    }
    let edge = g.shift(-1).restrict(g.lo() - 1, 0).scale(ONE / c1).log()?;
    for n in 1..=m as i32 {
        table.put_sym(n, 0, -edge.coeff(-n));
    }
    Ok(())
}

/// Grunsky coefficients of `g` alone (indices `m, n >= 0`).
pub fn grunsky_exterior(g: &Series, half_width: usize) -> Result<GrunskyTable> {
    check_lead(g, Expansion::AtInfinity, "g")?;
    let r = ONE / g.coeff(1);
    let mut table = GrunskyTable::empty(half_width, r);
    table.put(0, 0, -principal_log(r)?);
    fill_exterior(&mut table, g, half_width)?;
    Ok(table)
}

/// Grunsky coefficients of the pair `(f, g)` on `[-M, M]^2`.
pub fn grunsky(f: &Series, g: &Series, half_width: usize) -> Result<GrunskyTable> {
    check_lead(f, Expansion::AtOrigin, "f")?;
    check_lead(g, Expansion::AtInfinity, "g")?;
    let m = half_width;
    let r_f = f.coeff(1);
    let r_g = ONE / g.coeff(1);
    if (r_f - r_g).norm() > 1e-9 * r_f.norm().max(1.0) {
        return Err(GrunskyError::InconsistentScaling { r_f, r_g });
    }
    let log_r = principal_log(r_f)?;
    let mut table = GrunskyTable::empty(m, r_f);
    table.put(0, 0, -log_r);
    fill_exterior(&mut table, g, m)?;

    // log((f(z1) - f(z2))/(z1 - z2)) = -sum_{m,n>=0} b_{-m,-n} z1^m z2^n
    need(2 * m + 1, f.hi())?;
    let mut zq = bi_zero(m);
    for a in 0..=m {
        for b in 0..=m {
            if a + b > 0 {
                zq[a][b] = f.coeff((a + b + 1) as i32) / r_f;
            }
        }
    }
    let l = bi_log1p(&zq, m);
    for a in 0..=m {
        for b in 0..=m {
            if a + b > 0 {
                table.put(-(a as i32), -(b as i32), -l[a][b]);
            }
        }
    }
    // edge consistency with log(f(z)/z) = log r - sum b_{-n,0} z^n
    let edge = f.shift(-1).restrict(0, f.hi() - 1).scale(ONE / r_f).log()?;
    for n in 1..=m {
        let want = -edge.coeff(n as i32);
        let got = table.get(-(n as i32), 0).expect("filled");
        if (want - got).norm() > 1e-9 * want.norm().max(1.0) {
            return Err(GrunskyError::RouteMismatch((want - got).norm()));
        }
    }

    // mixed quadrant, route one: log(1 - f(z2)/g(z1)) = -sum b_{m,-n} z1^-m z2^n
    need(m, 2 - g.lo())?;
    need(m, f.hi())?;
    let inv_g = g.restrict(g.lo(), 1).recip()?;
    let mut x = bi_zero(m);
    for a in 1..=m {
        for b in 1..=m {
            x[a][b] = -inv_g.coeff(-(a as i32)) * f.coeff(b as i32);
        }
    }
    let l1 = bi_log1p(&x, m);
    // route two: log((g(z1) - f(z2))/z1) = -log r - sum_{m>=1,n>=0} b_{m,-n} z1^-m z2^n
    let c1 = g.coeff(1);
    let mut y = bi_zero(m);
    for a in 1..=m {
        y[a][0] = g.coeff(1 - a as i32) / c1;
    }
    for b in 1..=m {
        y[1][b] -= f.coeff(b as i32) / c1;
    }
    let l2 = bi_log1p(&y, m);
    let mut worst = 0.0f64;
    for a in 1..=m {
        for b in 0..=m {
            let v2 = -l2[a][b];
            if b == 0 {
                let edge = table.get(a as i32, 0).expect("filled");
                worst = worst.max((edge - v2).norm() / edge.norm().max(1.0));
                continue;
            }
            let v1 = -l1[a][b];
            worst = worst.max((v1 - v2).norm() / v1.norm().max(1.0));
            table.put_sym(a as i32, -(b as i32), v1);
        }
    }
    table.mixed_route_discrepancy = worst;
    if worst > 1e-9 {
        return Err(GrunskyError::RouteMismatch(worst));
    }
    Ok(table)
}

/// Raw two-variable coefficients, exposed for tests of the expansion machinery.
#[doc(hidden)]
pub fn log1p_bivariate(x: &BTreeMap<(usize, usize), C64>, m: usize) -> BTreeMap<(usize, usize), C64> {
    let mut b = bi_zero(m);
    for (&(i, j), &v) in x {
        b[i][j] = v;
    }
    let l = bi_log1p(&b, m);
    let mut out = BTreeMap::new();
    for (i, row) in l.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != ZERO {
                out.insert((i, j), v);
            }
        }
    }
    out
}
