//! One-variable reductions: the Lax series depend on the times only through a
//! scalar `lambda(t)`, fixed implicitly by a hodograph relation.
//!
//! For dKP the relation is `x + t1 + sum_{n>=2} chi_n(lambda) t_n = R(lambda)` with
//! `chi_n = Phi_n'(U)`; for dToda it is `t0 + sum_{n!=0} xi_n(lambda) t_n = R(lambda)`
//! with `xi_n = sigma Phi_n'(sigma)`, `xi_{-n} = sigma Psi_n'(sigma)`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::faber_grunsky::{
    faber_phi, faber_phi_all, faber_psi, faber_psi_all, grunsky, grunsky_exterior, GrunskyError,
    GrunskyTable,
};
use crate::loewner::{
    integrate_chordal, integrate_interior, integrate_radial, reflect, ClosedForm,
    ConformalFamily, DrivingData, LoewnerError, MonotoneCubic, Orientation,
};
use crate::series::{Expansion, Series, SeriesError};

/// Largest `|n|` allowed in the support of a time vector.
pub const MAX_TIME_INDEX: i32 = 32;

/// Bracket searched for `lambda` on closed-form families when none is given.
pub const DEFAULT_CLOSED_BRACKET: (f64, f64) = (0.0, 10.0);

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const RESIDUAL_TOL: f64 = 1e-12;
const IMAG_TOL: f64 = 1e-10;
const SCAN_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Grunsky(#[from] GrunskyError),
    #[error(transparent)]
    Loewner(#[from] LoewnerError),
    #[error("invalid times: {0}")]
    InvalidTimes(String),
    #[error("no root of the hodograph relation in [{lo}, {hi}] (smallest |residual| {best:e})")]
    NoRoot { lo: f64, hi: f64, best: f64 },
    #[error("hodograph residual at lambda = {lambda} has imaginary part {im:e}; check t_-n = -conj(t_n)")]
    NonRealResidual { lambda: f64, im: f64 },
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, ReductionError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyKind {
    Dkp,
    Dtoda,
}

/// Hierarchy times with finite support.
///
/// dKP: `x` and real `t_n`, `n >= 1`. dToda: real `t0` and complex `t_n`, `n != 0`,
/// with `t_{-n} = -conj(t_n)`; missing negative entries are filled in from that rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeVector {
    kind: HierarchyKind,
    base: f64,
    t: BTreeMap<i32, C64>,
}

impl TimeVector {
    pub fn dkp(x: f64, entries: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut t = BTreeMap::new();
        for (n, v) in entries {
            let n = n as i32;
            if n == 0 || n > MAX_TIME_INDEX {
                return Err(ReductionError::InvalidTimes(format!(
                    "dKP time index {n} must lie in 1..={MAX_TIME_INDEX}"
                )));
            }
            if !v.is_finite() {
                return Err(ReductionError::InvalidTimes(format!("t_{n} is not finite")));
            }
            if t.insert(n, C64::new(v, 0.0)).is_some() {
                return Err(ReductionError::InvalidTimes(format!("t_{n} given twice")));
            }
        }
        if !x.is_finite() {
            return Err(ReductionError::InvalidTimes("x is not finite".into()));
        }
        Ok(Self {
            kind: HierarchyKind::Dkp,
            base: x,
            t,
        })
    }

    pub fn dtoda(t0: f64, entries: impl IntoIterator<Item = (i32, C64)>) -> Result<Self> {
        let mut given = BTreeMap::new();
        for (n, v) in entries {
            if n == 0 || n.abs() > MAX_TIME_INDEX {
                return Err(ReductionError::InvalidTimes(format!(
                    "dToda time index {n} must satisfy 1 <= |n| <= {MAX_TIME_INDEX}"
                )));
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(ReductionError::InvalidTimes(format!("t_{n} is not finite")));
            }
            if given.insert(n, v).is_some() {
                return Err(ReductionError::InvalidTimes(format!("t_{n} given twice")));
            }
        }
        if !t0.is_finite() {
            return Err(ReductionError::InvalidTimes("t0 is not finite".into()));
        }
        let mut t = BTreeMap::new();
        for (&n, &v) in &given {
            let partner = -v.conj();
            match given.get(&-n) {
                Some(&w) if (w - partner).norm() > 1e-12 * v.norm().max(1.0) => {
                    return Err(ReductionError::InvalidTimes(format!(
                        "t_{} = {w} violates t_-n = -conj(t_n) with t_{n} = {v}",
                        -n
                    )));
                }
                _ => {}
            }
            // positive entries are authoritative
            let (p, q) = if n > 0 { (v, partner) } else { (partner, v) };
            t.insert(n.abs(), p);
            t.insert(-n.abs(), q);
        }
        t.retain(|_, v| *v != ZERO);
        Ok(Self {
            kind: HierarchyKind::Dtoda,
            base: t0,
            t,
        })
    }

    pub fn kind(&self) -> HierarchyKind {
        self.kind
    }

    /// `x` for dKP, `t0` for dToda.
    pub fn base(&self) -> f64 {
        self.base
    }

    /// `t_n`; index 0 is `x` (dKP) or `t0` (dToda).
    pub fn get(&self, n: i32) -> C64 {
        if n == 0 {
            C64::new(self.base, 0.0)
        } else {
            self.t.get(&n).copied().unwrap_or(ZERO)
        }
    }

    /// Indices with a non-zero entry, excluding `x`/`t0`.
    pub fn support(&self) -> Vec<i32> {
        self.t.iter().filter(|(_, v)| **v != ZERO).map(|(&n, _)| n).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.t.iter().map(|(&n, &v)| (n, v))
    }

    /// Adds `delta` to `t_n` (no reality check; callers move along constrained pairs).
    pub(crate) fn shifted(&self, n: i32, delta: C64) -> Self {
        let mut out = self.clone();
        if n == 0 {
            out.base += delta.re;
        } else {
            *out.t.entry(n).or_insert(ZERO) += delta;
        }
        out
    }
}

/// Right-hand side `R(lambda)` of the hodograph relation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum RFunction {
    #[default]
    Zero,
    /// Coefficients, constant term first.
    Poly(Vec<f64>),
    /// Rows `[lambda, R]`.
    Table(MonotoneCubic),
}

impl RFunction {
    pub fn value(&self, lambda: f64) -> f64 {
        match self {
            RFunction::Zero => 0.0,
            RFunction::Poly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * lambda + a),
            RFunction::Table(t) => t.eval(lambda),
        }
    }
}

/// Where the Lax series come from.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum LaxSource {
    Closed {
        form: ClosedForm,
        depth: i32,
    },
    /// An integrated family; for dToda without `interior` the interior series is the
    /// reflection of the exterior one.
    Integrated {
        exterior: ConformalFamily,
        interior: Option<ConformalFamily>,
    },
}

impl LaxSource {
    pub fn closed(form: ClosedForm, depth: i32) -> Self {
        LaxSource::Closed { form, depth }
    }

    /// Integrates the Loewner equation from the identity (scaled by `e^phi` for radial
    /// data). The interior family is integrated separately only for relaxed data.
    pub fn integrate(driving: &DrivingData, grid: &[f64], depth: i32, step: f64) -> Result<Self> {
        let l0 = *grid
            .first()
            .ok_or_else(|| LoewnerError::InvalidGrid("empty grid".into()))?;
        match driving {
            DrivingData::Chordal { .. } => {
                let h0 = Series::identity(Expansion::AtInfinity, depth);
                Self::integrate_from(driving, &h0, None, grid, step)
            }
            DrivingData::Radial { relaxed, .. } => {
                let r = driving.scale(l0).exp();
                let g0 = Series::identity(Expansion::AtInfinity, depth).scale(C64::new(r, 0.0));
                let f0 = relaxed.then(|| {
                    Series::identity(Expansion::AtOrigin, depth + 2).scale(C64::new(1.0 / r, 0.0))
                });
                Self::integrate_from(driving, &g0, f0.as_ref(), grid, step)
            }
        }
    }

    /// Integrates from the given maps at the first grid node. `interior` is ignored for
    /// chordal data.
    pub fn integrate_from(
        driving: &DrivingData,
        exterior: &Series,
        interior: Option<&Series>,
        grid: &[f64],
        step: f64,
    ) -> Result<Self> {
        if !driving.is_radial() {
            return Ok(LaxSource::Integrated {
                exterior: integrate_chordal(driving, exterior, grid, step)?,
                interior: None,
            });
        }
        Ok(LaxSource::Integrated {
            exterior: integrate_radial(driving, exterior, grid, step)?,
            interior: interior
                .map(|f0| integrate_interior(driving, f0, grid, step))
                .transpose()?,
        })
    }

    pub fn kind(&self) -> HierarchyKind {
        let radial = match self {
            LaxSource::Closed { form, .. } => form.is_radial(),
            LaxSource::Integrated { exterior, .. } => exterior.orientation == Orientation::ExteriorG,
        };
        if radial {
            HierarchyKind::Dtoda
        } else {
            HierarchyKind::Dkp
        }
    }

    pub fn lambda_range(&self) -> (f64, f64) {
        match self {
            LaxSource::Closed { .. } => DEFAULT_CLOSED_BRACKET,
            LaxSource::Integrated { exterior, .. } => exterior.lambda_range(),
        }
    }

    /// `U(lambda)` for dKP, `sigma(lambda)` for dToda.
    pub fn driving_point(&self, lambda: f64) -> C64 {
        match self {
            LaxSource::Closed { form, .. } => form.driving().point(lambda),
            LaxSource::Integrated { exterior, .. } => exterior.driving.point(lambda),
        }
    }

    /// `L(w, lambda)`: `H` for dKP, `G` for dToda.
    pub fn lax(&self, lambda: f64) -> Result<Series> {
        Ok(match self {
            LaxSource::Closed { form, depth } => form.exterior(lambda, *depth)?,
            LaxSource::Integrated { exterior, .. } => exterior.at(lambda)?,
        })
    }

    /// `Ltilde(w, lambda) = F` for dToda, `None` for dKP.
    pub fn lax_tilde(&self, lambda: f64) -> Result<Option<Series>> {
        if self.kind() == HierarchyKind::Dkp {
            return Ok(None);
        }
        Ok(match self {
            LaxSource::Closed { form, depth } => form.interior(lambda, *depth)?,
            LaxSource::Integrated {
                interior: Some(f), ..
            } => Some(f.at(lambda)?),
            LaxSource::Integrated { exterior, .. } => Some(reflect(&exterior.at(lambda)?)?),
        })
    }

    pub fn provenance(&self) -> String {
        match self {
            LaxSource::Closed { form, depth } => format!("closed form {} (depth {depth})", form.id()),
            LaxSource::Integrated { exterior, interior } => {
                let (a, b) = exterior.lambda_range();
                let what = match exterior.orientation {
                    Orientation::HalfPlaneH => "chordal",
                    _ if interior.is_some() => "radial, interior integrated",
                    _ => "radial, interior reflected",
                };
                format!("integrated {what} family on [{a}, {b}] ({} nodes)", exterior.grid.len())
            }
        }
    }
}

/// `chi_n = Phi_n'(U)` for the dKP Lax series `l`.
pub fn chi(l: &Series, u: f64, n: usize) -> Result<C64> {
    if n == 0 {
        return Err(ReductionError::Unsupported("chi_n needs n >= 1".into()));
    }
    Ok(faber_phi(l, n)?.derivative().evaluate(C64::new(u, 0.0)))
}

/// `xi_n`: `sigma Phi_n'(sigma)` for `n >= 1`, 1 for `n = 0`, `sigma Psi_|n|'(sigma)`
/// for `n <= -1`.
pub fn xi(l: &Series, lt: Option<&Series>, sigma: C64, n: i32) -> Result<C64> {
    match n {
        0 => Ok(ONE),
        n if n > 0 => Ok(sigma * faber_phi(l, n as usize)?.derivative().evaluate(sigma)),
        n => {
            let lt = lt.ok_or_else(|| {
                ReductionError::Unsupported("xi_n with n < 0 needs the interior series".into())
            })?;
            Ok(sigma * faber_psi(lt, n.unsigned_abs() as usize)?.derivative().evaluate(sigma))
        }
    }
}

/// All flow coefficients for indices `lo..=hi` at one `lambda`: `chi_n` (`n >= 1`)
/// for dKP, `xi_n` for dToda.
fn flow_coefficients(
    kind: HierarchyKind,
    l: &Series,
    lt: Option<&Series>,
    point: C64,
    lo: i32,
    hi: i32,
) -> Result<BTreeMap<i32, C64>> {
    let mut out = BTreeMap::new();
    if hi >= 1 {
        for (i, p) in faber_phi_all(l, hi as usize)?.into_iter().enumerate() {
            let d = p.derivative().evaluate(point);
            let v = match kind {
                HierarchyKind::Dkp => d,
                HierarchyKind::Dtoda => point * d,
            };
            out.insert(i as i32 + 1, v);
        }
    }
    if kind == HierarchyKind::Dtoda {
        out.insert(0, ONE);
        if lo <= -1 {
            let lt = lt.ok_or_else(|| {
                ReductionError::Unsupported("xi_n with n < 0 needs the interior series".into())
            })?;
            for (i, p) in faber_psi_all(lt, lo.unsigned_abs() as usize)?.into_iter().enumerate() {
                out.insert(-(i as i32) - 1, point * p.derivative().evaluate(point));
            }
        }
    }
    Ok(out)
}

/// Deliberate corruptions used as negative controls by the verifier.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    #[default]
    None,
    /// Adds a constant to the hodograph root.
    LambdaOffset(f64),
    /// Negates every flow coefficient except `chi_1` / `xi_0` in the hodograph relation.
    FlipXi,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub source: LaxSource,
    pub r: RFunction,
    /// Search interval for `lambda`; defaults to the source's range.
    pub bracket: Option<(f64, f64)>,
    pub control: Control,
}

/// A reduction evaluated at one time vector.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedSolution {
    pub provenance: String,
    pub kind: HierarchyKind,
    pub times: TimeVector,
    pub lambda: f64,
    /// `chi_n` (dKP) or `xi_n` (dToda) at `lambda` over the support of the times.
    pub flow_coefficients: BTreeMap<i32, C64>,
    pub hodograph_residual: f64,
    pub lax: Series,
    pub lax_tilde: Option<Series>,
}

impl Reduction {
    pub fn new(source: LaxSource) -> Self {
        Self {
            source,
            r: RFunction::Zero,
            bracket: None,
            control: Control::None,
        }
    }

    pub fn kind(&self) -> HierarchyKind {
        self.source.kind()
    }

    pub fn bracket(&self) -> (f64, f64) {
        self.bracket.unwrap_or_else(|| self.source.lambda_range())
    }

    fn check_times(&self, t: &TimeVector) -> Result<()> {
        if t.kind() != self.kind() {
            return Err(ReductionError::InvalidTimes(format!(
                "{:?} times given to a {:?} reduction",
                t.kind(),
                self.kind()
            )));
        }
        Ok(())
    }

    /// Flow coefficients at `lambda` for `lo..=hi`.
    pub fn flow_coefficients(&self, lambda: f64, lo: i32, hi: i32) -> Result<BTreeMap<i32, C64>> {
        let l = self.source.lax(lambda)?;
        let lt = if lo < 0 { self.source.lax_tilde(lambda)? } else { None };
        flow_coefficients(
            self.kind(),
            &l,
            lt.as_ref(),
            self.source.driving_point(lambda),
            lo,
            hi,
        )
    }

    /// `(value, scale)` of the hodograph residual, where `scale` bounds the sizes of
    /// the summed terms. For dToda the imaginary part must vanish.
    pub fn hodograph_residual(&self, t: &TimeVector, lambda: f64) -> Result<(f64, f64)> {
        self.check_times(t)?;
        let support = t.support();
        let lo = support.first().copied().unwrap_or(0).min(0);
        let hi = support.last().copied().unwrap_or(0).max(0);
        let coeffs = self.flow_coefficients(lambda, lo, hi)?;
        let sign = if self.control == Control::FlipXi { -1.0 } else { 1.0 };
        let rv = self.r.value(lambda);
        let mut total = C64::new(t.base() - rv, 0.0);
        let mut scale = t.base().abs() + rv.abs();
        for n in support {
            let c = coeffs[&n];
            let s = if self.kind() == HierarchyKind::Dkp && n == 1 { 1.0 } else { sign };
            let term = c * t.get(n) * s;
            total += term;
            scale += term.norm();
        }
        if total.im.abs() > IMAG_TOL * scale.max(1.0) {
            return Err(ReductionError::NonRealResidual {
                lambda,
                im: total.im,
            });
        }
        Ok((total.re, scale))
    }

    /// Root of the hodograph relation, continued from `warm_start` when given.
    pub fn root(&self, t: &TimeVector, warm_start: Option<f64>) -> Result<f64> {
        self.check_times(t)?;
        let f = |l: f64| self.hodograph_residual(t, l);
        find_root(&f, self.bracket(), warm_start)
    }

    /// `lambda(t)`: the hodograph root, shifted when the control asks for it.
    pub fn hodograph_solve(&self, t: &TimeVector, warm_start: Option<f64>) -> Result<f64> {
        Ok(self.apply_control(self.root(t, warm_start)?))
    }

    pub(crate) fn apply_control(&self, root: f64) -> f64 {
        match self.control {
            Control::LambdaOffset(d) => root + d,
            _ => root,
        }
    }

    /// `(L, Ltilde)` at the hodograph root.
    pub fn build_lax(&self, t: &TimeVector, warm_start: Option<f64>) -> Result<(Series, Option<Series>)> {
        let lambda = self.hodograph_solve(t, warm_start)?;
        Ok((self.source.lax(lambda)?, self.source.lax_tilde(lambda)?))
    }

    pub fn solve(&self, t: &TimeVector, warm_start: Option<f64>) -> Result<ReducedSolution> {
        let root = self.root(t, warm_start)?;
        let lambda = self.apply_control(root);
        let support = t.support();
        let lo = support.first().copied().unwrap_or(0).min(0);
        let hi = support.last().copied().unwrap_or(1).max(1);
        let lax = self.source.lax(lambda)?;
        let lax_tilde = self.source.lax_tilde(lambda)?;
        let flow = flow_coefficients(
            self.kind(),
            &lax,
            lax_tilde.as_ref(),
            self.source.driving_point(lambda),
            lo,
            hi,
        )?;
        Ok(ReducedSolution {
            provenance: self.source.provenance(),
            kind: self.kind(),
            times: t.clone(),
            lambda,
            flow_coefficients: flow,
            hodograph_residual: self.hodograph_residual(t, root)?.0.abs(),
            lax,
            lax_tilde,
        })
    }

    /// Grunsky coefficients of the inverse maps at `lambda`: of `k = L^{-1}` for dKP,
    /// of the pair `(Ltilde^{-1}, L^{-1})` for dToda.
    pub fn grunsky_at(&self, lambda: f64, half_width: usize) -> Result<GrunskyTable> {
        let g = self.source.lax(lambda)?.revert()?;
        Ok(match self.source.lax_tilde(lambda)? {
            None => grunsky_exterior(&g, half_width)?,
            Some(lt) => grunsky(&lt.revert()?, &g, half_width)?,
        })
    }
}

type Residual<'a> = dyn Fn(f64) -> Result<(f64, f64)> + 'a;

fn converged(value: f64, scale: f64) -> bool {
    value.abs() <= RESIDUAL_TOL * scale.max(1.0)
}

// Central difference, one-sided at the bracket ends.
fn slope(f: &Residual, x: f64, (a, b): (f64, f64)) -> Result<f64> {
    let h = 1e-7 * x.abs().max(1.0);
    let (lo, hi) = ((x - h).max(a), (x + h).min(b));
    if hi <= lo {
        return Ok(0.0);
    }
    Ok((f(hi)?.0 - f(lo)?.0) / (hi - lo))
}

// Newton from x0, kept inside the bracket. Returns the best converged point.
fn newton(f: &Residual, x0: f64, bracket: (f64, f64)) -> Result<Option<f64>> {
    let (a, b) = bracket;
    let mut x = x0.clamp(a, b);
    let mut extra = 0;
    for _ in 0..60 {
        let (v, scale) = f(x)?;
        if v == 0.0 {
            return Ok(Some(x));
        }
        let d = slope(f, x, bracket)?;
        if d == 0.0 || !d.is_finite() {
            return Ok(None);
        }
        let next = (x - v / d).clamp(a, b);
        let small = (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0);
        if converged(v, scale) {
            extra += 1;
            if small || extra > 3 {
                return Ok(Some(if converged(f(next)?.0, scale) && f(next)?.0.abs() < v.abs() {
                    next
                } else {
                    x
                }));
            }
        } else if small {
            return Ok(None);
        }
        x = next;
    }
    Ok(None)
}

// Newton safeguarded by bisection on a sign-changing interval.
fn bracketed(f: &Residual, mut lo: f64, mut hi: f64, flo: f64) -> Result<f64> {
    let lo_sign = flo.signum();
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, _) = f(x)?;
        if v == 0.0 {
            return Ok(x);
        }
        if v.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let d = slope(f, x, (lo, hi))?;
        let nx = x - v / d;
        x = if d != 0.0 && nx > lo && nx < hi { nx } else { 0.5 * (lo + hi) };
        if (nx - x).abs() == 0.0 && x > lo && x < hi && d != 0.0 && (v / d).abs() <= f64::EPSILON * x.abs() {
            break;
        }
    }
    Ok(x)
}

/// Real root of `f` in `bracket`. Newton from `warm` first; otherwise the bracket is
/// scanned for sign changes and the change nearest `warm` is refined.
fn find_root(f: &Residual, bracket: (f64, f64), warm: Option<f64>) -> Result<f64> {
    let (a, b) = bracket;
    if !(a < b) {
        return Err(ReductionError::Unsupported(format!("empty bracket [{a}, {b}]")));
    }
    if let Some(x0) = warm {
        if let Some(x) = newton(f, x0, bracket)? {
            return Ok(x);
        }
    }
    let xs: Vec<f64> = (0..=SCAN_POINTS)
        .map(|i| a + (b - a) * i as f64 / SCAN_POINTS as f64)
        .collect();
    let vals = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let target = warm.unwrap_or(a);
    let mut best: Option<(f64, f64)> = None;
    for i in 0..SCAN_POINTS {
        let (v0, v1) = (vals[i].0, vals[i + 1].0);
        let hit = if v0 == 0.0 {
            Some(xs[i])
        } else if v0.signum() != v1.signum() {
            Some(bracketed(f, xs[i], xs[i + 1], v0)?)
        } else {
            None
        };
        if let Some(x) = hit {
            let dist = (x - target).abs();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((x, dist));
            }
            if warm.is_none() {
                break;
            }
        }
    }
    if let Some((x, _)) = best {
        let (v, scale) = f(x)?;
        if converged(v, scale) {
            return Ok(x);
        }
        if let Some(x) = newton(f, x, bracket)? {
            return Ok(x);
        }
    }
    // no sign change: try Newton from the sample closest to a root
    let i = (0..vals.len())
        .min_by(|&i, &j| vals[i].0.abs().total_cmp(&vals[j].0.abs()))
        .expect("non-empty scan");
    if let Some(x) = newton(f, xs[i], bracket)? {
        return Ok(x);
    }
    Err(ReductionError::NoRoot {
        lo: a,
        hi: b,
        best: vals[i].0.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::uniform_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn closed(form: ClosedForm) -> Reduction {
        Reduction::new(LaxSource::closed(form, 16))
    }

    #[test]
    fn chi_of_the_chordal_examples() {
        for (u, l) in [(0.0, 0.3), (1.5, 0.7), (-2.0, 1.2)] {
            let h = ClosedForm::ChordalSlit { u }.exterior(l, 16).unwrap();
            assert!((chi(&h, u, 1).unwrap() - ONE).norm() < 1e-12);
            assert!((chi(&h, u, 2).unwrap() - c(2.0 * u, 0.0)).norm() < 1e-12);
            assert!((chi(&h, u, 3).unwrap() - c(3.0 * u * u - 3.0 * l, 0.0)).norm() < 1e-12);
        }
        for l in [0.2, 0.5, 1.1] {
            let h = ClosedForm::ChordalTwoRays.exterior(l, 16).unwrap();
            assert!((chi(&h, 3.0 * l, 2).unwrap() - c(6.0 * l, 0.0)).norm() < 1e-12);
            assert!((chi(&h, 3.0 * l, 3).unwrap() - c(30.0 * l * l, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn xi_of_the_radial_examples() {
        let sigma = C64::from_polar(1.0, 0.7);
        for l in [0.1, 0.6, 1.3] {
            let e = f64::exp(l);
            let cf = ClosedForm::RadialSlit { sigma };
            let g = cf.exterior(l, 16).unwrap();
            let f = cf.interior(l, 16).unwrap().unwrap();
            let x = |n| xi(&g, Some(&f), sigma, n).unwrap();
            assert!((x(1) - sigma * e).norm() < 1e-12);
            assert!((x(-1) + e / sigma).norm() < 1e-12);
            assert!((x(2) - 2.0 * sigma * sigma * e * (3.0 * e - 2.0)).norm() < 1e-11);
            assert!((x(-2) + 2.0 * e * (3.0 * e - 2.0) / (sigma * sigma)).norm() < 1e-11);
            assert_eq!(x(0), ONE);
            let cf = ClosedForm::RadialCardioidLike { sigma };
            let g = cf.exterior(l, 16).unwrap();
            let f = cf.interior(l, 16).unwrap().unwrap();
            let x = |n| xi(&g, Some(&f), sigma, n).unwrap();
            assert!((x(1) - sigma * e).norm() < 1e-12);
            assert!((x(2) - 6.0 * e * e * sigma * sigma).norm() < 1e-11);
            assert!((x(-2) + 6.0 * e * e * sigma.conj() * sigma.conj()).norm() < 1e-11);
            for n in 1..=4 {
                assert!((x(-n) + x(n).conj()).norm() < 1e-10 * x(n).norm().max(1.0), "n={n}");
            }
        }
    }

    #[test]
    fn dtoda_times_fill_negative_entries() {
        let t = TimeVector::dtoda(1.0, [(1, c(0.5, -0.25))]).unwrap();
        assert_eq!(t.get(-1), c(-0.5, -0.25));
        assert_eq!(t.support(), vec![-1, 1]);
        assert!(TimeVector::dtoda(1.0, [(1, c(0.5, 0.0)), (-1, c(0.5, 0.0))]).is_err());
        assert!(TimeVector::dtoda(1.0, [(33, ONE)]).is_err());
        assert!(TimeVector::dkp(0.0, [(0, 1.0)]).is_err());
    }

    #[test]
    fn hodograph_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // dKP, vertical slit: lambda = (x + t1 + 2U t2 + 3U^2 t3)/(3 t3)
        let u = 0.8;
        let red = closed(ClosedForm::ChordalSlit { u });
        for _ in 0..20 {
            let t3: f64 = rng.gen_range(0.2..2.0);
            let want: f64 = rng.gen_range(0.05..5.0);
            let t2: f64 = rng.gen_range(-1.0..1.0);
            let x = want * 3.0 * t3 - 2.0 * u * t2 - 3.0 * u * u * t3;
            let tv = TimeVector::dkp(x, [(2, t2), (3, t3)]).unwrap();
            let got = red.hodograph_solve(&tv, None).unwrap();
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        // dKP, two rays: lambda = -(x + t1)/(6 t2)
        let red = closed(ClosedForm::ChordalTwoRays);
        let tv = TimeVector::dkp(-1.0, [(1, 0.0), (2, 0.5)]).unwrap();
        assert!((red.hodograph_solve(&tv, None).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        // dToda: lambda = log(-t0/(2 Re(t1 sigma)))
        let sigma = C64::from_polar(1.0, -0.4);
        for cf in [ClosedForm::RadialSlit { sigma }, ClosedForm::RadialCardioidLike { sigma }] {
            let red = closed(cf);
            let t1 = c(-0.3, 0.2);
            let a = (t1 * sigma).re;
            let tv = TimeVector::dtoda(1.0, [(1, t1)]).unwrap();
            let want = (-1.0 / (2.0 * a)).ln();
            assert!((red.hodograph_solve(&tv, None).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_hodograph_of_the_cardioid_example() {
        let sigma = C64::from_polar(1.0, 1.1);
        let red = closed(ClosedForm::RadialCardioidLike { sigma });
        let t1 = c(0.4, 0.3) / sigma;
        let t2 = c(0.05, -0.02) / (sigma * sigma);
        let (a, b) = ((t1 * sigma).re, (t2 * sigma * sigma).re);
        let t0 = -(12.0 * b * 4.0 + 2.0 * a * 2.0);
        let tv = TimeVector::dtoda(t0, [(1, t1), (2, t2)]).unwrap();
        let want = ((-a + (a * a - 12.0 * t0 * b).sqrt()) / (12.0 * b)).ln();
        assert!((want - 2f64.ln()).abs() < 1e-12);
        assert!((red.hodograph_solve(&tv, None).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn empty_dtoda_times_solve_t0_equals_r() {
        let mut red = closed(ClosedForm::RadialSlit { sigma: ONE });
        red.r = RFunction::Poly(vec![0.0, 1.0]);
        let tv = TimeVector::dtoda(0.75, []).unwrap();
        assert!((red.hodograph_solve(&tv, None).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn warm_start_selects_nearby_root() {
        // x + t1 + 6 lambda t2 + 30 lambda^2 t3 has two roots
        let red = closed(ClosedForm::ChordalTwoRays);
        let (r1, r2) = (0.5, 2.0);
        // 30 t3 (l - r1)(l - r2) with t3 = 1/30
        let tv = TimeVector::dkp(r1 * r2, [(2, -(r1 + r2) / 6.0), (3, 1.0 / 30.0)]).unwrap();
        assert!((red.hodograph_solve(&tv, Some(1.9)).unwrap() - r2).abs() < 1e-10);
        assert!((red.hodograph_solve(&tv, Some(0.4)).unwrap() - r1).abs() < 1e-10);
        assert!((red.hodograph_solve(&tv, None).unwrap() - r1).abs() < 1e-10);
    }

    #[test]
    fn no_root_and_non_real_residual() {
        let red = closed(ClosedForm::ChordalTwoRays);
        let tv = TimeVector::dkp(1.0, [(2, 1.0)]).unwrap();
        assert!(matches!(
            red.hodograph_solve(&tv, None),
            Err(ReductionError::NoRoot { .. })
        ));
        // a relaxed sigma breaks xi_-n = -conj(xi_n)
        let red = closed(ClosedForm::RadialSlit { sigma: c(1.5, 0.0) });
        let tv = TimeVector::dtoda(1.0, [(1, c(0.0, -0.3))]).unwrap();
        assert!(matches!(
            red.hodograph_solve(&tv, None),
            Err(ReductionError::NonRealResidual { .. })
        ));
    }

    #[test]
    fn build_lax_matches_reduced_formulas() {
        // two rays at lambda = -(x+t1)/(6 t2)
        let red = closed(ClosedForm::ChordalTwoRays);
        let tv = TimeVector::dkp(-1.0, [(2, 0.5)]).unwrap();
        let (l, lt) = red.build_lax(&tv, None).unwrap();
        assert!(lt.is_none());
        let w = c(3.0, 1.0);
        let want = w + 1.0 / (12.0 * 0.5) / (3.0 * 0.5 * w - 1.0);
        assert!((l.evaluate(w) - want).norm() < 1e-10);
        // cardioid: L = -t0/(2 Re(t1 sigma)) (w + 2 sigma + sigma^2/w)
        let sigma = C64::from_polar(1.0, 0.3);
        let red = closed(ClosedForm::RadialCardioidLike { sigma });
        let t1 = c(-0.2, 0.1);
        let tv = TimeVector::dtoda(0.9, [(1, t1)]).unwrap();
        let (l, lt) = red.build_lax(&tv, None).unwrap();
        let k = -0.9 / (2.0 * (t1 * sigma).re);
        assert!((l.evaluate(w) - k * (w + 2.0 * sigma + sigma * sigma / w)).norm() < 1e-10);
        let z = c(0.1, 0.05);
        let want = 1.0 / k * z / ((1.0 + sigma.conj() * z) * (1.0 + sigma.conj() * z));
        assert!((lt.unwrap().evaluate(z) - want).norm() < 1e-10);
    }

    #[test]
    fn vertical_slit_lax_in_closed_form() {
        let red = closed(ClosedForm::ChordalSlit { u: 0.0 });
        let tv = TimeVector::dkp(0.3, [(1, 0.6), (3, 0.5)]).unwrap();
        let sol = red.solve(&tv, None).unwrap();
        let lambda = 0.9 / 1.5;
        assert!((sol.lambda - lambda).abs() < 1e-12);
        let w = c(4.0, 2.0);
        let want = w * (1.0 - 2.0 * lambda / (w * w)).sqrt();
        assert!((sol.lax.evaluate(w) - want).norm() < 1e-10);
        assert!(sol.hodograph_residual < 1e-12);
    }

    #[test]
    fn solving_at_a_grid_node_returns_the_node_map() {
        let d = ClosedForm::ChordalTwoRays.driving();
        let grid = uniform_grid(0.0, 1.0, 0.1);
        let src = LaxSource::integrate(&d, &grid, 16, 1e-3).unwrap();
        let LaxSource::Integrated { exterior, .. } = &src else { unreachable!() };
        let node = exterior.maps[4].clone();
        let red = Reduction::new(src.clone());
        // x + 6 lambda t2 = 0 at lambda = 0.4
        let tv = TimeVector::dkp(-0.4 * 6.0 * 0.5, [(2, 0.5)]).unwrap();
        let lambda = red.hodograph_solve(&tv, None).unwrap();
        assert!((lambda - 0.4).abs() < 1e-6);
        assert_eq!(src.lax(grid[4]).unwrap(), node);
    }

    #[test]
    fn integrated_radial_source_matches_closed_form() {
        let sigma = C64::from_polar(1.0, 2.0);
        let cf = ClosedForm::RadialSlit { sigma };
        let grid = uniform_grid(0.0, 1.0, 0.01);
        let src = LaxSource::integrate(&cf.driving(), &grid, 16, 1e-3).unwrap();
        let l = 0.537;
        let g = src.lax(l).unwrap();
        assert!(g.max_abs_diff(&cf.exterior(l, 16).unwrap()).unwrap() < 1e-6);
        let f = src.lax_tilde(l).unwrap().unwrap();
        assert!(f.max_abs_diff(&cf.interior(l, 16).unwrap().unwrap()).unwrap() < 1e-6);
    }

    #[test]
    fn lambda_offset_control_shifts_root() {
        let mut red = closed(ClosedForm::ChordalTwoRays);
        red.control = Control::LambdaOffset(0.01);
        let tv = TimeVector::dkp(-1.0, [(2, 0.5)]).unwrap();
        assert!((red.hodograph_solve(&tv, None).unwrap() - (1.0 / 3.0 + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn grunsky_tables_of_reductions() {
        let sigma = C64::from_polar(1.0, 0.5);
        let red = closed(ClosedForm::RadialSlit { sigma });
        let tab = red.grunsky_at(0.4, 3).unwrap();
        assert!((tab.get(0, 0).unwrap() + 0.4).norm() < 1e-12);
        assert!(tab.max_asymmetry() < 1e-10);
        let red = closed(ClosedForm::ChordalSlit { u: 0.0 });
        let tab = red.grunsky_at(0.5, 3).unwrap();
        // h = z + lambda/z + ...: b_11 = lambda
        assert!((tab.get(1, 1).unwrap() - 0.5).norm() < 1e-12);
    }
}
