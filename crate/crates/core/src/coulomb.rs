//! Log-gas (normal-matrix eigenvalue) equilibria on a curve.
//!
//! Particles `z_k = gamma(s_k)` carry the energy
//! `E = -2 sum_{i<j} log|z_i - z_j| - (2/hbar) sum_k Re P(z_k)` with
//! `P(z) = sum_{n>=1} t_n z^n` and `hbar = t0 / N`. Equilibria are found by
//! descent in the curve parameters.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::loewner::pchip::Rows;
use crate::loewner::MonotoneCubic;
use crate::reduction::{HierarchyKind, TimeVector};

/// A spacing this many times the median spacing counts as a gap in the support.
pub const GAP_FACTOR: f64 = 8.0;
/// Tolerance on the relative moment discrepancy in [`exterior_map_check`].
pub const MOMENT_TOL: f64 = 0.05;

const INJECTIVITY_SAMPLES: usize = 512;

#[derive(Debug, thiserror::Error)]
pub enum CoulombError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid gas state: {0}")]
    InvalidState(String),
    #[error("potential does not confine the gas: {0}")]
    NonNormalizable(String),
    #[error("support is not a single real segment: {0}")]
    MultiArc(String),
}

pub type Result<T> = std::result::Result<T, CoulombError>;

/// A curve sampled as rows `[s, re, im]`, interpolated componentwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampledRows", into = "SampledRows")]
pub struct SampledCurve {
    rows: Vec<[f64; 3]>,
    arc_length: bool,
    re: MonotoneCubic,
    im: MonotoneCubic,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampledRows {
    points: Rows<3>,
    /// Replace the `s` column by cumulative chord length.
    #[serde(default)]
    arc_length: bool,
}

impl SampledCurve {
    pub fn new(mut rows: Vec<[f64; 3]>, arc_length: bool) -> Result<Self> {
        if rows.len() < 2 {
            return Err(CoulombError::InvalidCurve("a sampled curve needs two points".into()));
        }
        if arc_length {
            let mut acc = 0.0;
            let mut prev = C64::new(rows[0][1], rows[0][2]);
            rows[0][0] = 0.0;
            for r in rows.iter_mut().skip(1) {
                let z = C64::new(r[1], r[2]);
                acc += (z - prev).norm();
                prev = z;
                r[0] = acc;
            }
        }
        let s: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let err = CoulombError::InvalidCurve;
        Ok(Self {
            re: MonotoneCubic::new(s.clone(), rows.iter().map(|r| r[1]).collect()).map_err(err)?,
            im: MonotoneCubic::new(s, rows.iter().map(|r| r[2]).collect()).map_err(err)?,
            rows,
            arc_length,
        })
    }
}

impl TryFrom<SampledRows> for SampledCurve {
    type Error = String;

    fn try_from(r: SampledRows) -> std::result::Result<Self, String> {
        Self::new(r.points.0, r.arc_length).map_err(|e| e.to_string())
    }
}

impl From<SampledCurve> for SampledRows {
    fn from(c: SampledCurve) -> Self {
        SampledRows {
            points: Rows(c.rows),
            arc_length: c.arc_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    /// `gamma(s) = s`.
    RealLine {},
    /// `gamma(s) = origin + s e^{i angle}`, `s >= 0`.
    HalfRay { origin: [f64; 2], angle: f64 },
    /// `gamma(s) = e^{is}`, `from <= s <= to`.
    UnitCircleArc { from: f64, to: f64 },
    Sampled(SampledCurve),
}

impl CurveSpec {
    pub fn domain(&self) -> (f64, f64) {
        match self {
            CurveSpec::RealLine {} => (f64::NEG_INFINITY, f64::INFINITY),
            CurveSpec::HalfRay { .. } => (0.0, f64::INFINITY),
            CurveSpec::UnitCircleArc { from, to } => (*from, *to),
            CurveSpec::Sampled(c) => c.re.domain(),
        }
    }

    /// Whether `s` is arc length.
    pub fn is_arc_length(&self) -> bool {
        match self {
            CurveSpec::Sampled(c) => c.arc_length,
            _ => true,
        }
    }

    pub fn point(&self, s: f64) -> C64 {
        match self {
            CurveSpec::RealLine {} => C64::new(s, 0.0),
            CurveSpec::HalfRay { origin, angle } => {
                C64::new(origin[0], origin[1]) + C64::from_polar(s, *angle)
            }
            CurveSpec::UnitCircleArc { .. } => C64::from_polar(1.0, s),
            CurveSpec::Sampled(c) => C64::new(c.re.eval(s), c.im.eval(s)),
        }
    }

    pub fn tangent(&self, s: f64) -> C64 {
        match self {
            CurveSpec::RealLine {} => C64::new(1.0, 0.0),
            CurveSpec::HalfRay { angle, .. } => C64::from_polar(1.0, *angle),
            CurveSpec::UnitCircleArc { .. } => C64::new(0.0, 1.0) * C64::from_polar(1.0, s),
            CurveSpec::Sampled(c) => C64::new(c.re.derivative(s), c.im.derivative(s)),
        }
    }

    /// `gamma(b) - gamma(a)` without cancellation where the curve allows it.
    fn displacement(&self, a: f64, b: f64) -> C64 {
        match self {
            CurveSpec::RealLine {} => C64::new(b - a, 0.0),
            CurveSpec::HalfRay { angle, .. } => C64::from_polar(b - a, *angle),
            CurveSpec::UnitCircleArc { .. } => {
                let h = 0.5 * (b - a);
                C64::new(0.0, 2.0 * h.sin()) * C64::from_polar(1.0, a + h)
            }
            CurveSpec::Sampled(_) => self.point(b) - self.point(a),
        }
    }

    fn curvature_term(&self, s: f64) -> C64 {
        match self {
            CurveSpec::RealLine {} | CurveSpec::HalfRay { .. } => C64::new(0.0, 0.0),
            CurveSpec::UnitCircleArc { .. } => -C64::from_polar(1.0, s),
            CurveSpec::Sampled(_) => {
                // piecewise cubic: only used to shape descent directions
                let (lo, hi) = self.domain();
                let h = 1e-6 * (hi - lo);
                let (a, b) = ((s - h).max(lo), (s + h).min(hi));
                (self.tangent(b) - self.tangent(a)) / (b - a)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CurveSpec::RealLine {} => Ok(()),
            CurveSpec::HalfRay { origin, angle } => {
                if origin.iter().chain([angle]).all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(CoulombError::InvalidCurve("half-ray data must be finite".into()))
                }
            }
            CurveSpec::UnitCircleArc { from, to } => {
                let len = to - from;
                if len > 0.0 && len < std::f64::consts::TAU {
                    Ok(())
                } else {
                    Err(CoulombError::InvalidCurve(format!(
                        "arc [{from}, {to}] must have length in (0, 2 pi)"
                    )))
                }
            }
            CurveSpec::Sampled(_) => {
                let (lo, hi) = self.domain();
                let n = INJECTIVITY_SAMPLES;
                let pts: Vec<C64> =
                    (0..=n).map(|i| self.point(lo + (hi - lo) * i as f64 / n as f64)).collect();
                let step = pts.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
                for i in 0..pts.len() {
                    for j in i + 2..pts.len() {
                        if (pts[i] - pts[j]).norm() < 1e-3 * step {
                            return Err(CoulombError::InvalidCurve(format!(
                                "curve is not injective: gamma({}) and gamma({}) coincide",
                                lo + (hi - lo) * i as f64 / n as f64,
                                lo + (hi - lo) * j as f64 / n as f64
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Start and direction of every unbounded end.
    fn unbounded_ends(&self) -> Vec<(C64, C64)> {
        match self {
            CurveSpec::RealLine {} => vec![(C64::new(0.0, 0.0), C64::new(1.0, 0.0)), (C64::new(0.0, 0.0), C64::new(-1.0, 0.0))],
            CurveSpec::HalfRay { origin, angle } => {
                vec![(C64::new(origin[0], origin[1]), C64::from_polar(1.0, *angle))]
            }
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GasState {
    /// Sorted curve parameters.
    pub s: Vec<f64>,
    /// dToda-style times: `t0 = hbar N` and the couplings `t_n`, `n >= 1`.
    pub times: TimeVector,
    pub hbar: f64,
    pub seed: u64,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl GasState {
    pub fn new(s: Vec<f64>, times: TimeVector, seed: u64) -> Result<Self> {
        if times.kind() != HierarchyKind::Dtoda {
            return Err(CoulombError::InvalidState("gas couplings use dToda times".into()));
        }
        if s.is_empty() {
            return Err(CoulombError::InvalidState("no particles".into()));
        }
        if !(times.base() > 0.0) {
            return Err(CoulombError::InvalidState(format!("t0 = {} must be positive", times.base())));
        }
        let hbar = times.base() / s.len() as f64;
        let mut s = s;
        s.sort_by(f64::total_cmp);
        Ok(Self { s, times, hbar, seed })
    }

    /// `n` particles equally spaced, with a small seeded jitter, on an interval where the
    /// confining force balances the repulsion.
    pub fn initial(curve: &CurveSpec, times: TimeVector, n: usize, seed: u64) -> Result<Self> {
        curve.validate()?;
        if n == 0 {
            return Err(CoulombError::InvalidState("no particles".into()));
        }
        let (lo, hi) = curve.domain();
        let (a, b) = if lo.is_finite() && hi.is_finite() {
            (lo, hi)
        } else {
            let (deg, c) = times
                .entries()
                .filter(|&(k, v)| k > 0 && v.norm() > 0.0)
                .map(|(k, v)| (k, v.norm()))
                .last()
                .ok_or_else(|| CoulombError::NonNormalizable("no confining coupling".into()))?;
            let len = (times.base() / (deg as f64 * c)).powf(1.0 / deg as f64).max(1e-3);
            if lo.is_finite() {
                (lo, lo + len)
            } else {
                (-len, len)
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = (b - a) / n as f64;
        let s = (0..n)
            .map(|k| a + (k as f64 + 0.5 + rng.gen_range(-0.1..0.1)) * h)
            .collect();
        Self::new(s, times, seed)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn positions(&self, curve: &CurveSpec) -> Vec<C64> {
        self.s.iter().map(|&s| curve.point(s)).collect()
    }

    // P, P', P'' at z.
    fn potential(&self, z: C64) -> (C64, C64, C64) {
        let zero = C64::new(0.0, 0.0);
        let mut out = (zero, zero, zero);
        for (n, t) in self.times.entries().filter(|&(n, _)| n > 0) {
            let nf = n as f64;
            out.0 += t * z.powi(n);
            out.1 += t * nf * z.powi(n - 1);
            if n > 1 {
                out.2 += t * nf * (nf - 1.0) * z.powi(n - 2);
            }
        }
        out
    }

    /// Rejects couplings whose potential does not grow along every unbounded end.
    pub fn check_confining(&self, curve: &CurveSpec) -> Result<()> {
        let couplings: Vec<(i32, C64)> = self.times.entries().filter(|&(n, _)| n > 0).collect();
        for (p, e) in curve.unbounded_ends() {
            // Re P(p + s e) as a polynomial in s
            let deg = couplings.iter().map(|c| c.0).max().unwrap_or(0);
            let mut coef = vec![0.0; deg as usize + 1];
            for &(n, t) in &couplings {
                for k in 0..=n {
                    coef[k as usize] +=
                        (t * binomial(n as u32, k as u32) * p.powi(n - k) * e.powi(k)).re;
                }
            }
            let scale = coef.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let lead = coef
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .find(|(_, c)| c.abs() > 1e-14 * scale.max(1e-300));
            match lead {
                Some((_, &c)) if c < 0.0 => {}
                _ => {
                    return Err(CoulombError::NonNormalizable(format!(
                        "Re P grows without bound along direction {e} from {p}"
                    )))
                }
            }
        }
        Ok(())
    }
}

#[cfg(feature = "parallel")]
fn per_particle<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn per_particle<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

// Fixed summation tree, so totals do not depend on the thread count.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Energy of the configuration; `+inf` when two particles coincide.
pub fn energy(state: &GasState, curve: &CurveSpec) -> f64 {
    let z = state.positions(curve);
    let parts = per_particle(z.len(), |i| {
        let mut acc = -(2.0 / state.hbar) * state.potential(z[i]).0.re;
        for zj in &z[i + 1..] {
            acc -= 2.0 * (z[i] - zj).norm().ln();
        }
        acc
    });
    let e = pairwise_sum(&parts);
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

// E(s') - E(s), summed from the displacements so that it stays accurate when the
// change is far below the rounding error of E itself.
fn energy_change(state: &GasState, curve: &CurveSpec, s: &[f64], t: &[f64]) -> f64 {
    let z: Vec<C64> = s.iter().map(|&x| curve.point(x)).collect();
    let dz: Vec<C64> = s.iter().zip(t).map(|(&a, &b)| curve.displacement(a, b)).collect();
    let couplings: Vec<(i32, C64)> = state.times.entries().filter(|&(n, _)| n > 0).collect();
    let parts = per_particle(z.len(), |i| {
        // P(z + dz) - P(z) = dz sum_k (z + dz)^k z^{n-1-k}
        let w = z[i] + dz[i];
        let mut dp = C64::new(0.0, 0.0);
        for &(n, tn) in &couplings {
            let sum: C64 = (0..n).map(|k| w.powi(k) * z[i].powi(n - 1 - k)).sum();
            dp += tn * sum;
        }
        let mut acc = -(2.0 / state.hbar) * (dp * dz[i]).re;
        for j in i + 1..z.len() {
            let d = z[i] - z[j];
            let dd = dz[i] - dz[j];
            // log|d + dd| - log|d| = log1p(2 Re(dd/d) + |dd/d|^2)/2
            let q = dd / d;
            acc -= (2.0 * q.re + q.norm_sqr()).ln_1p();
        }
        acc
    });
    let de = pairwise_sum(&parts);
    if de.is_nan() {
        f64::INFINITY
    } else {
        de
    }
}

/// `dE/ds_i`.
pub fn gradient(state: &GasState, curve: &CurveSpec) -> Vec<f64> {
    let z = state.positions(curve);
    per_particle(z.len(), |i| {
        let g = curve.tangent(state.s[i]);
        let mut acc = -(2.0 / state.hbar) * (state.potential(z[i]).1 * g).re;
        for (j, zj) in z.iter().enumerate() {
            if j != i {
                acc -= 2.0 * (g / (z[i] - zj)).re;
            }
        }
        acc
    })
}

fn hessian(state: &GasState, curve: &CurveSpec) -> DMatrix<f64> {
    let n = state.len();
    let z = state.positions(curve);
    let g1: Vec<C64> = state.s.iter().map(|&s| curve.tangent(s)).collect();
    let g2: Vec<C64> = state.s.iter().map(|&s| curve.curvature_term(s)).collect();
    let rows = per_particle(n, |i| {
        let (_, p1, p2) = state.potential(z[i]);
        let mut row = vec![0.0; n];
        let mut diag = -(2.0 / state.hbar) * (p2 * g1[i] * g1[i] + p1 * g2[i]).re;
        for j in 0..n {
            if j != i {
                let d = z[i] - z[j];
                diag -= 2.0 * (g2[i] / d - g1[i] * g1[i] / (d * d)).re;
                row[j] = -2.0 * (g1[i] * g1[j] / (d * d)).re;
            }
        }
        row[i] = diag;
        row
    });
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    pub max_iters: usize,
    /// Stop when the largest free component of the gradient drops below this.
    pub tol: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxReport {
    pub state: GasState,
    pub converged: bool,
    pub iterations: usize,
    pub energy: f64,
    pub max_gradient: f64,
    pub initial_energy: f64,
    /// Energy change of every accepted step; all negative.
    pub energy_changes: Vec<f64>,
}

/// Descent with backtracking line search and projection onto the curve domain.
///
/// The direction is the Newton step on the particles not pinned to an end of the
/// domain when the Hessian there is positive definite, and the diagonally scaled
/// gradient otherwise. Every accepted step lowers the energy.
pub fn relax(state: &GasState, curve: &CurveSpec, opts: RelaxOptions) -> Result<RelaxReport> {
    curve.validate()?;
    state.check_confining(curve)?;
    let (lo, hi) = curve.domain();
    if state.s.iter().any(|&s| s < lo || s > hi || !s.is_finite()) {
        return Err(CoulombError::InvalidState("positions outside the curve domain".into()));
    }
    let mut cur = state.clone();
    let mut e = energy(&cur, curve);
    if !e.is_finite() {
        return Err(CoulombError::InvalidState("initial energy is not finite".into()));
    }
    let initial_energy = e;
    let mut energy_changes = Vec::new();
    let n = cur.len();
    let mut iterations = 0;
    let mut max_gradient;
    loop {
        let g = gradient(&cur, curve);
        let free: Vec<usize> = (0..n)
            .filter(|&i| !((cur.s[i] <= lo && g[i] > 0.0) || (cur.s[i] >= hi && g[i] < 0.0)))
            .collect();
        max_gradient = free.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
        if max_gradient < opts.tol || iterations >= opts.max_iters {
            break;
        }
        iterations += 1;
        let h = hessian(&cur, curve);
        let hf = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
        let gf = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
        let newton = hf.clone().cholesky().map(|c| -c.solve(&gf)).filter(|d| d.dot(&gf) < 0.0);
        let dir = newton.unwrap_or_else(|| {
            DVector::from_iterator(
                free.len(),
                free.iter().enumerate().map(|(a, &i)| {
                    let d = hf[(a, a)];
                    -g[i] / if d > 0.0 { d } else { 1.0 }
                }),
            )
        });
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = cur.s.clone();
            for (a, &i) in free.iter().enumerate() {
                trial[i] = (cur.s[i] + alpha * dir[a]).clamp(lo, hi);
            }
            let predicted: f64 = (0..n).map(|i| g[i] * (trial[i] - cur.s[i])).sum();
            let de = energy_change(&cur, curve, &cur.s, &trial);
            if de < 0.0 && de <= 1e-4 * predicted {
                trial.sort_by(f64::total_cmp);
                cur.s = trial;
                energy_changes.push(de);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    e = energy(&cur, curve);
    Ok(RelaxReport {
        converged: max_gradient < opts.tol,
        state: cur,
        iterations,
        energy: e,
        max_gradient,
        initial_energy,
        energy_changes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Support {
    /// Smallest curve parameter.
    pub lo: f64,
    /// Largest curve parameter.
    pub hi: f64,
    /// Set when some spacing exceeds `GAP_FACTOR` times the median spacing.
    pub multi_arc: bool,
}

pub fn support(state: &GasState) -> Support {
    let s = &state.s;
    let mut gaps: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    let widest = gaps.iter().copied().fold(0.0, f64::max);
    let multi_arc = if gaps.len() >= 3 {
        gaps.sort_by(f64::total_cmp);
        widest > GAP_FACTOR * gaps[gaps.len() / 2]
    } else {
        false
    };
    Support {
        lo: s[0],
        hi: s[s.len() - 1],
        multi_arc,
    }
}

/// Reciprocal nearest-neighbour spacing at the midpoints, normalised to unit mass,
/// smoothed by a Gaussian kernel of width `(hi - lo)/sqrt(N)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub nodes: Vec<f64>,
    pub raw: Vec<f64>,
    pub width: f64,
}

impl DensityEstimate {
    pub fn new(state: &GasState) -> Result<Self> {
        let s = &state.s;
        let n = s.len();
        if n < 2 {
            return Err(CoulombError::InvalidState("density needs two particles".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoulombError::InvalidState("coincident particles".into()));
        }
        Ok(Self {
            nodes: s.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
            raw: s.windows(2).map(|w| 1.0 / (n as f64 * (w[1] - w[0]))).collect(),
            width: (s[n - 1] - s[0]) / (n as f64).sqrt(),
        })
    }

    /// The kernel average of `f` over the nodes, centred at `x`.
    pub fn smooth(&self, f: impl Fn(usize, f64) -> f64, x: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &m) in self.nodes.iter().enumerate() {
            let k = (-0.5 * ((x - m) / self.width).powi(2)).exp();
            num += k * f(i, m);
            den += k;
        }
        num / den
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.smooth(|i, _| self.raw[i], x)
    }
}

/// Exterior map of the segment `[alpha, beta]`: `k(p) = r (p + 1/p) + a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Joukowski {
    pub alpha: f64,
    pub beta: f64,
}

impl Joukowski {
    pub fn r(&self) -> f64 {
        0.25 * (self.beta - self.alpha)
    }

    pub fn a(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    /// Inverse map `zeta + sqrt(zeta^2 - 1)`, branch with `|p| >= 1`.
    pub fn p(&self, z: C64) -> C64 {
        let zeta = (2.0 * z - self.alpha - self.beta) / (self.beta - self.alpha);
        let root = (zeta * zeta - 1.0).sqrt();
        let p = zeta + root;
        if p.norm() >= 1.0 {
            p
        } else {
            zeta - root
        }
    }

    pub fn k(&self, p: C64) -> C64 {
        self.r() * (p + 1.0 / p) + self.a()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub k: u32,
    pub empirical: f64,
    pub semicircle: f64,
    /// Difference relative to `(|a| + (beta - alpha)/2)^k`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JoukowskiReport {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub a: f64,
    /// Largest `|k(p(z)) - z|` over the sample points.
    pub identity_error: f64,
    pub moments: Vec<MomentCheck>,
    pub moments_pass: bool,
}

/// Moments of the semicircle law on `[alpha, beta]`.
pub fn semicircle_moment(alpha: f64, beta: f64, k: u32) -> f64 {
    let a = 0.5 * (alpha + beta);
    let rho = 0.5 * (beta - alpha);
    // central moments: E X^{2m} = Catalan(m) (rho/2)^{2m}
    (0..=k)
        .step_by(2)
        .map(|j| {
            let m = j / 2;
            let catalan = binomial(2 * m, m) / (m + 1) as f64;
            binomial(k, j) * a.powi((k - j) as i32) * catalan * (0.5 * rho).powi(j as i32)
        })
        .sum()
}

/// Points off `[alpha, beta]` where the identity `k(p(z)) = z` is tested.
pub fn joukowski_sample_points(alpha: f64, beta: f64) -> Vec<C64> {
    let a = 0.5 * (alpha + beta);
    let rho = 0.5 * (beta - alpha);
    [(1.5, 0.0), (-1.5, 0.0), (0.0, 2.0), (1.0, 1.0), (-3.0, -2.0), (0.3, 0.1), (10.0, 5.0)]
        .iter()
        .map(|&(x, y)| a + rho * C64::new(x, y))
        .collect()
}

/// Checks the relaxed support against the exterior map of a real segment.
pub fn exterior_map_check(state: &GasState, curve: &CurveSpec) -> Result<JoukowskiReport> {
    let sup = support(state);
    if sup.multi_arc {
        return Err(CoulombError::MultiArc("the particle spacing has a gap".into()));
    }
    let z = state.positions(curve);
    let scale = z.iter().fold(1.0f64, |m, w| m.max(w.norm()));
    if z.iter().any(|w| w.im.abs() > 1e-12 * scale) {
        return Err(CoulombError::MultiArc("particles are not on the real axis".into()));
    }
    let x: Vec<f64> = z.iter().map(|w| w.re).collect();
    let (alpha, beta) = (x[0].min(x[x.len() - 1]), x[0].max(x[x.len() - 1]));
    if beta <= alpha {
        return Err(CoulombError::MultiArc("support is a single point".into()));
    }
    let j = Joukowski { alpha, beta };
    let identity_error = joukowski_sample_points(alpha, beta)
        .into_iter()
        .map(|w| (j.k(j.p(w)) - w).norm())
        .fold(0.0, f64::max);
    let norm = j.a().abs() + 0.5 * (beta - alpha);
    let moments: Vec<MomentCheck> = (1..=3)
        .map(|k| {
            let empirical = x.iter().map(|v| v.powi(k as i32)).sum::<f64>() / x.len() as f64;
            let semicircle = semicircle_moment(alpha, beta, k);
            MomentCheck {
                k,
                empirical,
                semicircle,
                error: (empirical - semicircle).abs() / norm.powi(k as i32),
            }
        })
        .collect();
    Ok(JoukowskiReport {
        alpha,
        beta,
        r: j.r(),
        a: j.a(),
        identity_error,
        moments_pass: moments.iter().all(|m| m.error < MOMENT_TOL),
        moments,
    })
}
