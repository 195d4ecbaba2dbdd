//! Finite-difference checks that a reduction solves the dispersionless hierarchies.
//!
//! Every time derivative goes through the hodograph solver: the times are shifted,
//! `lambda` is re-solved by continuation from the unshifted root, and the quantity of
//! interest is rebuilt from the family. For dToda, `t_n` and `t_{-n}` are complex but
//! tied by `t_{-n} = -conj(t_n)`, so only two real directions per pair are available:
//! `D_re` moves `(t_n, t_{-n})` by `(d, -d)` and `D_im` by `(i d, i d)`. Then
//! `d/dt_n = (D_re - i D_im)/2` for either sign of `n`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::faber_grunsky::GrunskyTable;
use crate::polynomial::LaurentPolynomial;
use crate::reduction::{HierarchyKind, Reduction, ReductionError, Result, TimeVector};
use crate::series::{Expansion, Region, Series};

/// Relative finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Tolerance on Lax-equation residuals.
pub const DEFAULT_LAX_TOL: f64 = 1e-4;
/// Tolerance on relative hydrodynamic residuals.
pub const DEFAULT_HYDRO_TOL: f64 = 1e-6;
/// Tolerance on the flow-symmetry discrepancy.
pub const DEFAULT_FLOW_TOL: f64 = 1e-6;
/// Half-width of the Grunsky tables used by the flow-symmetry check.
pub const FLOW_HALF_WIDTH: usize = 3;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Per-coefficient residuals of one equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equation: String,
    pub n: i32,
    /// `(exponent, |residual|)`.
    pub residuals: Vec<(i32, f64)>,
    pub max_residual: f64,
    pub fd_step: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    fn new(equation: String, n: i32, residuals: Vec<(i32, f64)>, fd_step: f64, tolerance: f64) -> Self {
        let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
        Self {
            equation,
            n,
            residuals,
            max_residual,
            fd_step,
            tolerance,
            pass: max_residual < tolerance,
        }
    }
}

/// Quantities that can be finite-differenced.
pub trait Differentiable: Sized {
    /// `a * x + b * y`.
    fn combine(x: &Self, a: C64, y: &Self, b: C64) -> Result<Self>;
}

impl Differentiable for C64 {
    fn combine(x: &Self, a: C64, y: &Self, b: C64) -> Result<Self> {
        Ok(a * x + b * y)
    }
}

impl Differentiable for Series {
    fn combine(x: &Self, a: C64, y: &Self, b: C64) -> Result<Self> {
        Ok(x.scale(a).add(&y.scale(b))?)
    }
}

impl Differentiable for LaurentPolynomial {
    fn combine(x: &Self, a: C64, y: &Self, b: C64) -> Result<Self> {
        Ok(x.scale(a).add(&y.scale(b)))
    }
}

impl Differentiable for Vec<C64> {
    fn combine(x: &Self, a: C64, y: &Self, b: C64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(ReductionError::Unsupported("length mismatch in difference".into()));
        }
        Ok(x.iter().zip(y).map(|(u, v)| a * u + b * v).collect())
    }
}

/// A quantity built from the family at a given `lambda`.
pub type Observable<'a, T> = dyn Fn(f64) -> Result<T> + 'a;

/// Residual magnitudes over every exponent both series determine.
fn compare(a: &Series, b: &Series) -> Result<Vec<(i32, f64)>> {
    if a.tag() != b.tag() {
        return Err(crate::series::SeriesError::TagMismatch(a.tag(), b.tag()).into());
    }
    let (lo, hi) = match a.tag() {
        Expansion::AtInfinity => (a.lo().max(b.lo()), a.hi().max(b.hi())),
        Expansion::AtOrigin => (a.lo().min(b.lo()), a.hi().min(b.hi())),
    };
    Ok((lo..=hi).map(|k| (k, (a.coeff(k) - b.coeff(k)).norm())).collect())
}

pub struct Verifier<'a> {
    pub reduction: &'a Reduction,
    /// Relative step: `t_n` moves by `fd_step * max(1, |t_n|)`.
    pub fd_step: f64,
}

impl<'a> Verifier<'a> {
    pub fn new(reduction: &'a Reduction) -> Self {
        Self {
            reduction,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_step(reduction: &'a Reduction, fd_step: f64) -> Self {
        Self { reduction, fd_step }
    }

    fn kind(&self) -> HierarchyKind {
        self.reduction.kind()
    }

    /// The unshifted hodograph root at `t`.
    pub fn root(&self, t: &TimeVector) -> Result<f64> {
        self.reduction.root(t, None)
    }

    fn step(&self, t: &TimeVector, n: i32) -> f64 {
        self.fd_step * t.get(n).norm().max(1.0)
    }

    fn lambda_at(&self, t: &TimeVector, root: f64) -> Result<f64> {
        self.reduction.hodograph_solve(t, Some(root))
    }

    // Central difference of `f(lambda(t))` along a real direction given as shifts.
    fn directional<T: Differentiable>(
        &self,
        t: &TimeVector,
        root: f64,
        shifts: &[(i32, C64)],
        h: f64,
        f: &Observable<T>,
    ) -> Result<T> {
        let moved = |sign: f64| {
            shifts
                .iter()
                .fold(t.clone(), |acc, &(n, d)| acc.shifted(n, d * (sign * h)))
        };
        let up = f(self.lambda_at(&moved(1.0), root)?)?;
        let down = f(self.lambda_at(&moved(-1.0), root)?)?;
        let s = C64::new(0.5 / h, 0.0);
        T::combine(&up, s, &down, -s)
    }

    /// `d f(lambda(t)) / dt_n` by central differences through the hodograph.
    /// Index 0 is `x` for dKP and `t0` for dToda.
    pub fn time_derivative<T: Differentiable>(
        &self,
        t: &TimeVector,
        root: f64,
        n: i32,
        f: &Observable<T>,
    ) -> Result<T> {
        let h = self.step(t, n);
        let one = C64::new(1.0, 0.0);
        match self.kind() {
            HierarchyKind::Dkp => {
                if n < 0 {
                    return Err(ReductionError::Unsupported(format!("dKP has no time t_{n}")));
                }
                self.directional(t, root, &[(n, one)], h, f)
            }
            HierarchyKind::Dtoda if n == 0 => self.directional(t, root, &[(0, one)], h, f),
            HierarchyKind::Dtoda => {
                let h = self.fd_step * t.get(n).norm().max(t.get(-n).norm()).max(1.0);
                let re = self.directional(t, root, &[(n, one), (-n, -one)], h, f)?;
                let im = self.directional(t, root, &[(n, I), (-n, I)], h, f)?;
                T::combine(&re, C64::new(0.5, 0.0), &im, C64::new(0.0, -0.5))
            }
        }
    }

    /// `{h1, h2} = h1_w h2_x - h1_x h2_w` at `t`.
    pub fn poisson_dkp(
        &self,
        t: &TimeVector,
        h1: &Observable<Series>,
        h2: &Observable<Series>,
    ) -> Result<Series> {
        self.bracket(t, h1, h2, false)
    }

    /// `{h1, h2}_T = w h1_w h2_t0 - w h1_t0 h2_w` at `t`.
    pub fn poisson_dtoda(
        &self,
        t: &TimeVector,
        h1: &Observable<Series>,
        h2: &Observable<Series>,
    ) -> Result<Series> {
        self.bracket(t, h1, h2, true)
    }

    fn bracket(
        &self,
        t: &TimeVector,
        h1: &Observable<Series>,
        h2: &Observable<Series>,
        toda: bool,
    ) -> Result<Series> {
        let root = self.root(t)?;
        let lambda = self.reduction.apply_control(root);
        let (a, b) = (h1(lambda)?, h2(lambda)?);
        let (ax, bx) = (
            self.time_derivative(t, root, 0, h1)?,
            self.time_derivative(t, root, 0, h2)?,
        );
        let (mut aw, mut bw) = (a.derivative(), b.derivative());
        if toda {
            aw = aw.shift(1);
            bw = bw.shift(1);
        }
        Ok(aw.mul(&bx)?.sub(&ax.mul(&bw)?)?)
    }

    // Bracket of a polynomial with a series, using the exact polynomial products.
    fn poly_bracket(
        &self,
        p: &LaurentPolynomial,
        p_t: &LaurentPolynomial,
        s: &Series,
        s_t: &Series,
    ) -> Result<Series> {
        match self.kind() {
            HierarchyKind::Dkp => Ok(p.derivative().mul_series(s_t).sub(&p_t.mul_series(&s.derivative()))?),
            HierarchyKind::Dtoda => {
                let ws = s.derivative().shift(1);
                Ok(p.euler().mul_series(s_t).sub(&p_t.mul_series(&ws))?)
            }
        }
    }

    /// `dL/dt_n - {B_n, L}` with `B_n = (L^n)_{>=0}`, `n >= 1`.
    pub fn lax_residual_dkp(&self, t: &TimeVector, n: i32, tolerance: f64) -> Result<ResidualReport> {
        if self.kind() != HierarchyKind::Dkp || n < 1 {
            return Err(ReductionError::Unsupported(format!("dKP Lax equation needs n >= 1, got {n}")));
        }
        let src = &self.reduction.source;
        let root = self.root(t)?;
        let lambda = self.reduction.apply_control(root);
        let lax = |l: f64| src.lax(l);
        let b = |l: f64| -> Result<LaurentPolynomial> {
            let p = src.lax(l)?.powi(n)?;
            Ok(LaurentPolynomial::from_projection(&p, Region::NonNegative))
        };
        let l = lax(lambda)?;
        let lhs = self.time_derivative(t, root, n, &lax)?;
        let l_x = self.time_derivative(t, root, 0, &lax)?;
        let b_x = self.time_derivative(t, root, 0, &b)?;
        let rhs = self.poly_bracket(&b(lambda)?, &b_x, &l, &l_x)?;
        Ok(ResidualReport::new(
            format!("dKP Lax n={n}"),
            n,
            compare(&lhs, &rhs)?,
            self.fd_step,
            tolerance,
        ))
    }

    /// The Lax equations for `L` and `Ltilde` along `t_n`, `n != 0`. For `n > 0` the
    /// generator is `B_n = (L^n)_{>0} + (L^n)_0/2`, for `n < 0` it is
    /// `Btilde_|n| = (Ltilde^{-|n|})_{<0} + (Ltilde^{-|n|})_0/2`.
    pub fn lax_residual_dtoda(
        &self,
        t: &TimeVector,
        n: i32,
        tolerance: f64,
    ) -> Result<[ResidualReport; 2]> {
        if self.kind() != HierarchyKind::Dtoda || n == 0 {
            return Err(ReductionError::Unsupported(format!("dToda Lax equation needs n != 0, got {n}")));
        }
        let src = &self.reduction.source;
        let root = self.root(t)?;
        let lambda = self.reduction.apply_control(root);
        let lax = |l: f64| src.lax(l);
        let lax_t = |l: f64| -> Result<Series> {
            src.lax_tilde(l)?
                .ok_or_else(|| ReductionError::Unsupported("missing interior series".into()))
        };
        let gen = |l: f64| -> Result<LaurentPolynomial> {
            let (p, strict) = if n > 0 {
                (src.lax(l)?.powi(n)?, Region::Positive)
            } else {
                (lax_t(l)?.powi(n)?, Region::Negative)
            };
            let half = LaurentPolynomial::from_projection(&p, Region::Constant).scale(C64::new(0.5, 0.0));
            Ok(LaurentPolynomial::from_projection(&p, strict).add(&half))
        };
        let b = gen(lambda)?;
        let b_0 = self.time_derivative(t, root, 0, &gen)?;
        let name = if n > 0 { "B" } else { "Btilde" };
        let mut out = Vec::with_capacity(2);
        for (what, f) in [("L", &lax as &Observable<Series>), ("Ltilde", &lax_t)] {
            let s = f(lambda)?;
            let lhs = self.time_derivative(t, root, n, f)?;
            let s_0 = self.time_derivative(t, root, 0, f)?;
            let rhs = self.poly_bracket(&b, &b_0, &s, &s_0)?;
            out.push(ResidualReport::new(
                format!("dToda Lax {what} with {name} n={n}"),
                n,
                compare(&lhs, &rhs)?,
                self.fd_step,
                tolerance,
            ));
        }
        let [a, b]: [ResidualReport; 2] = out.try_into().expect("two reports");
        Ok([a, b])
    }

    /// `|dlambda/dt_n - c_n dlambda/dt_ref| / (|lhs| + |rhs| + 1e-300)` with
    /// `c_n = chi_n`, `t_ref = t1` for dKP and `c_n = xi_n`, `t_ref = t0` for dToda.
    pub fn hydro_residual(&self, t: &TimeVector, n: i32) -> Result<f64> {
        let root = self.root(t)?;
        let lambda = self.reduction.apply_control(root);
        let id = |l: f64| Ok(C64::new(l, 0.0));
        let (reference, lo, hi) = match self.kind() {
            HierarchyKind::Dkp => {
                if n < 1 {
                    return Err(ReductionError::Unsupported(format!("dKP flow index {n} < 1")));
                }
                (1, 1, n)
            }
            HierarchyKind::Dtoda => (0, n.min(0), n.max(0)),
        };
        let c = self.reduction.flow_coefficients(lambda, lo, hi)?[&n];
        let lhs = self.time_derivative(t, root, n, &id)?;
        let rhs = c * self.time_derivative(t, root, reference, &id)?;
        Ok((lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1e-300))
    }

    /// Second derivatives of the free energy read off a Grunsky table:
    /// `-mn b_mn` (dKP); `-|mn| b_mn`, `|m| b_m0`, `-2 b_00` (dToda).
    pub fn free_energy_hessian(kind: HierarchyKind, table: &GrunskyTable, m: i32, n: i32) -> Option<C64> {
        let b = table.get(m, n)?;
        Some(match kind {
            HierarchyKind::Dkp => -(m * n) as f64 * b,
            HierarchyKind::Dtoda => match (m, n) {
                (0, 0) => -2.0 * b,
                (m, 0) | (0, m) => m.abs() as f64 * b,
                (m, n) => -(m * n).abs() as f64 * b,
            },
        })
    }

    fn index_range(&self, max_index: i32) -> Vec<i32> {
        match self.kind() {
            HierarchyKind::Dkp => (1..=max_index).collect(),
            HierarchyKind::Dtoda => (-max_index..=max_index).collect(),
        }
    }

    /// `d/dt_k` of every free-energy second derivative with indices up to `max_index`.
    pub fn flow_tensor(&self, t: &TimeVector, max_index: i32) -> Result<BTreeMap<(i32, i32, i32), C64>> {
        let kind = self.kind();
        let idx = self.index_range(max_index);
        let half = FLOW_HALF_WIDTH.max(max_index as usize);
        let hess = |l: f64| -> Result<Vec<C64>> {
            let table = self.reduction.grunsky_at(l, half)?;
            idx.iter()
                .flat_map(|&m| idx.iter().map(move |&n| (m, n)))
                .map(|(m, n)| {
                    Self::free_energy_hessian(kind, &table, m, n).ok_or_else(|| {
                        ReductionError::Unsupported(format!("Grunsky entry ({m}, {n}) unavailable"))
                    })
                })
                .collect()
        };
        let root = self.root(t)?;
        let mut out = BTreeMap::new();
        for &k in &idx {
            // dKP t1 and x enter only through x + t1, so k = 1 covers both
            let d = self.time_derivative(t, root, k, &hess)?;
            let mut it = d.into_iter();
            for &m in &idx {
                for &n in &idx {
                    out.insert((m, n, k), it.next().expect("sized"));
                }
            }
        }
        Ok(out)
    }

    fn discrepancy(tensor: &BTreeMap<(i32, i32, i32), C64>, (m, n, k): (i32, i32, i32)) -> f64 {
        let perms = [(m, n, k), (m, k, n), (n, m, k), (n, k, m), (k, m, n), (k, n, m)];
        let vals: Vec<C64> = perms.iter().map(|p| tensor[p]).collect();
        let scale = vals.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let mut worst = 0.0f64;
        for a in &vals {
            for b in &vals {
                worst = worst.max((a - b).norm());
            }
        }
        worst / scale
    }

    /// Largest pairwise difference of `d_{t_k} F_mn` over the permutations of
    /// `(m, n, k)`, relative to `max(1, max |value|)`.
    pub fn grunsky_flow_symmetry(&self, t: &TimeVector, triple: (i32, i32, i32)) -> Result<f64> {
        let max_index = triple.0.abs().max(triple.1.abs()).max(triple.2.abs()).max(1);
        let tensor = self.flow_tensor(t, max_index)?;
        if !tensor.contains_key(&triple) {
            return Err(ReductionError::Unsupported(format!("triple {triple:?} out of range")));
        }
        Ok(Self::discrepancy(&tensor, triple))
    }

    /// Worst flow-symmetry discrepancy over all triples with indices up to `max_index`.
    pub fn grunsky_flow_symmetry_all(&self, t: &TimeVector, max_index: i32) -> Result<(f64, (i32, i32, i32))> {
        let tensor = self.flow_tensor(t, max_index)?;
        let mut worst = (0.0, (0, 0, 0));
        for &key in tensor.keys() {
            let d = Self::discrepancy(&tensor, key);
            if d > worst.0 {
                worst = (d, key);
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::{uniform_grid, ClosedForm};
    use crate::reduction::{Control, LaxSource};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn closed(form: ClosedForm) -> Reduction {
        Reduction::new(LaxSource::closed(form, 16))
    }

    fn slit_times() -> TimeVector {
        // lambda = (x + t1 + 2U t2 + 3U^2 t3)/(3 t3) = 0.3 with U = 0.5
        TimeVector::dkp(0.45 - 0.5 - 0.375, [(1, 0.0), (2, 0.5), (3, 0.5)]).unwrap()
    }

    fn toda_times(sigma: C64) -> TimeVector {
        scaled_toda_times(sigma, 10.0)
    }

    fn scaled_toda_times(sigma: C64, s: f64) -> TimeVector {
        // lambda = log(-t0/(2 Re(t1 sigma))) = log 1.5, plus a small t2
        let t1 = c(-0.5, 0.2) * s / sigma;
        TimeVector::dtoda(1.5 * s, [(1, t1), (2, c(0.002, 0.001) * s)]).unwrap()
    }

    #[test]
    fn lax_equations_hold_on_the_chordal_reductions() {
        let red = closed(ClosedForm::ChordalSlit { u: 0.5 });
        let v = Verifier::new(&red);
        let t = slit_times();
        for n in 1..=3 {
            let rep = v.lax_residual_dkp(&t, n, DEFAULT_LAX_TOL).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        assert!(v.lax_residual_dkp(&t, 1, 1e-9).unwrap().pass);
        let red = closed(ClosedForm::ChordalTwoRays);
        let v = Verifier::new(&red);
        let t = TimeVector::dkp(-1.0, [(2, 0.5), (3, 0.01)]).unwrap();
        for n in 1..=3 {
            assert!(v.lax_residual_dkp(&t, n, DEFAULT_LAX_TOL).unwrap().pass);
        }
    }

    #[test]
    fn lax_equations_hold_on_the_radial_reductions() {
        let sigma = C64::from_polar(1.0, 0.9);
        for cf in [ClosedForm::RadialSlit { sigma }, ClosedForm::RadialCardioidLike { sigma }] {
            let red = closed(cf);
            let v = Verifier::new(&red);
            let t = toda_times(sigma);
            for n in [1, 2, -1, -2] {
                for rep in v.lax_residual_dtoda(&t, n, DEFAULT_LAX_TOL).unwrap() {
                    assert!(rep.pass, "{} {rep:?}", cf.id());
                }
            }
        }
    }

    #[test]
    fn lambda_offset_breaks_the_lax_equations() {
        let mut red = closed(ClosedForm::ChordalTwoRays);
        red.control = Control::LambdaOffset(0.01);
        let v = Verifier::new(&red);
        let t = TimeVector::dkp(-1.0, [(2, 0.5)]).unwrap();
        assert!(v.lax_residual_dkp(&t, 2, DEFAULT_LAX_TOL).unwrap().max_residual > 1e-2);
        let sigma = C64::from_polar(1.0, 0.9);
        let mut red = closed(ClosedForm::RadialSlit { sigma });
        red.control = Control::LambdaOffset(0.01);
        let v = Verifier::new(&red);
        let worst = v
            .lax_residual_dtoda(&scaled_toda_times(sigma, 1.0), 1, DEFAULT_LAX_TOL)
            .unwrap()
            .iter()
            .map(|r| r.max_residual)
            .fold(0.0, f64::max);
        assert!(worst > 1e-2, "{worst}");
    }

    #[test]
    fn flipped_flow_sign_breaks_the_hydrodynamic_equation() {
        let mut red = closed(ClosedForm::ChordalTwoRays);
        let t = TimeVector::dkp(1.0, [(2, 0.5)]).unwrap();
        red.control = Control::FlipXi;
        let v = Verifier::new(&red);
        assert!(v.hydro_residual(&t, 2).unwrap() > 1e-2);
        assert!(!v.lax_residual_dkp(&t, 2, DEFAULT_LAX_TOL).unwrap().pass);
    }

    #[test]
    fn hydrodynamic_equations() {
        let red = closed(ClosedForm::ChordalTwoRays);
        let v = Verifier::new(&red);
        let t = TimeVector::dkp(-1.0, [(1, 0.0), (2, 0.5)]).unwrap();
        assert!(v.hydro_residual(&t, 2).unwrap() < 1e-6);
        assert_eq!(v.hydro_residual(&t, 1).unwrap(), 0.0);
        let sigma = C64::from_polar(1.0, 0.0);
        let red = closed(ClosedForm::RadialSlit { sigma });
        let v = Verifier::new(&red);
        let t = TimeVector::dtoda(1.0, [(1, c(-0.2, 0.0))]).unwrap();
        for n in [1, -1, 2, -2] {
            assert!(v.hydro_residual(&t, n).unwrap() < 1e-6, "n={n}");
        }
        assert_eq!(v.hydro_residual(&t, 0).unwrap(), 0.0);
    }

    #[test]
    fn bracket_identities() {
        let red = closed(ClosedForm::ChordalSlit { u: 0.5 });
        let v = Verifier::new(&red);
        let t = slit_times();
        let src = &red.source;
        let lax = |l: f64| src.lax(l);
        let w = |_: f64| Ok(Series::identity(Expansion::AtInfinity, 16));
        let l_x = v.time_derivative(&t, v.root(&t).unwrap(), 0, &lax).unwrap();
        assert!(v.poisson_dkp(&t, &w, &lax).unwrap().max_abs_diff(&l_x).unwrap() < 1e-12);
        assert!(v.poisson_dkp(&t, &lax, &lax).unwrap().max_abs() < 1e-9);
        let sq = |l: f64| Ok(src.lax(l)?.powi(2)?.scale(c(0.5, 0.0)));
        let ab = v.poisson_dkp(&t, &lax, &sq).unwrap();
        let ba = v.poisson_dkp(&t, &sq, &lax).unwrap();
        assert!(ab.add(&ba).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn toda_bracket_of_w_is_the_t0_derivative() {
        let sigma = C64::from_polar(1.0, 0.9);
        let red = closed(ClosedForm::RadialCardioidLike { sigma });
        let v = Verifier::new(&red);
        let t = toda_times(sigma);
        let lax = |l: f64| red.source.lax(l);
        let w = |_: f64| Ok(Series::identity(Expansion::AtInfinity, 16));
        let l_0 = v.time_derivative(&t, v.root(&t).unwrap(), 0, &lax).unwrap();
        let want = l_0.shift(1);
        let got = v.poisson_dtoda(&t, &w, &lax).unwrap();
        assert!(got.max_abs_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn fd_error_is_second_order() {
        let sigma = C64::from_polar(1.0, 0.9);
        let red = closed(ClosedForm::RadialSlit { sigma });
        let t = toda_times(sigma);
        let r = |h: f64| {
            Verifier::with_step(&red, h)
                .lax_residual_dtoda(&t, 2, 1.0)
                .unwrap()[0]
                .max_residual
        };
        let ratio = r(4e-3) / r(2e-3);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn flow_symmetry_on_closed_reductions() {
        let red = closed(ClosedForm::ChordalSlit { u: 0.5 });
        let v = Verifier::new(&red);
        let t = slit_times();
        assert!(v.grunsky_flow_symmetry(&t, (1, 2, 3)).unwrap() < 1e-6);
        let sigma = C64::from_polar(1.0, 0.9);
        let red = closed(ClosedForm::RadialSlit { sigma });
        let v = Verifier::new(&red);
        let (worst, at) = v.grunsky_flow_symmetry_all(&toda_times(sigma), 2).unwrap();
        assert!(worst < 1e-6, "{worst} at {at:?}");
        assert!(v.grunsky_flow_symmetry(&toda_times(sigma), (1, 1, 2)).unwrap() < 1e-6);
    }

    #[test]
    fn trivial_flow_gives_zero_derivatives() {
        // U = 0: chi_2 = 0, so lambda does not depend on t2
        let red = closed(ClosedForm::ChordalSlit { u: 0.0 });
        let v = Verifier::new(&red);
        let t = TimeVector::dkp(1.0, [(3, 0.5)]).unwrap();
        let tensor = v.flow_tensor(&t, 2).unwrap();
        for m in 1..=2 {
            for n in 1..=2 {
                assert!(tensor[&(m, n, 2)].norm() < 1e-9);
            }
        }
    }

    #[test]
    fn integrated_family_passes_the_same_checks() {
        let sigma = C64::from_polar(1.0, 0.9);
        let cf = ClosedForm::RadialSlit { sigma };
        let grid = uniform_grid(0.0, 1.0, 0.01);
        let red = Reduction::new(LaxSource::integrate(&cf.driving(), &grid, 16, 1e-3).unwrap());
        let v = Verifier::new(&red);
        let t = toda_times(sigma);
        for rep in v.lax_residual_dtoda(&t, 1, DEFAULT_LAX_TOL).unwrap() {
            assert!(rep.pass, "{rep:?}");
        }
        assert!(v.hydro_residual(&t, 1).unwrap() < 1e-6);
    }

    #[test]
    fn flow_symmetry_up_to_index_three_on_all_reductions() {
        let sigma = C64::from_polar(1.0, 0.9);
        let cases = [
            (closed(ClosedForm::ChordalSlit { u: 0.5 }), slit_times()),
            (
                closed(ClosedForm::ChordalTwoRays),
                TimeVector::dkp(-1.0, [(2, 0.5), (3, 0.01)]).unwrap(),
            ),
            (closed(ClosedForm::RadialSlit { sigma }), toda_times(sigma)),
            (closed(ClosedForm::RadialCardioidLike { sigma }), toda_times(sigma)),
        ];
        for (red, t) in &cases {
            let (worst, at) = Verifier::new(red).grunsky_flow_symmetry_all(t, 3).unwrap();
            assert!(worst < DEFAULT_FLOW_TOL, "{worst} at {at:?}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn bracket_is_antisymmetric_and_leibniz(
                u in -1.0..1.0f64,
                t2 in -0.5..0.5f64,
                t3 in 0.3..1.0f64,
                lambda in 0.2..2.0f64,
            ) {
                let red = closed(ClosedForm::ChordalSlit { u });
                let v = Verifier::new(&red);
                let x = 3.0 * t3 * lambda - 2.0 * u * t2 - 3.0 * u * u * t3;
                let t = TimeVector::dkp(x, [(2, t2), (3, t3)]).unwrap();
                let w = Series::identity(Expansion::AtInfinity, 16);
                let a = |l: f64| red.source.lax(l);
                let b = |_: f64| w.mul(&w).map_err(ReductionError::from);
                let c = |l: f64| Ok(red.source.lax(l)?.powi(2)?.add(&w)?);
                let bc = |l: f64| Ok(b(l)?.mul(&c(l)?)?);
                let lhs = v.poisson_dkp(&t, &a, &bc).unwrap();
                let ab = v.poisson_dkp(&t, &a, &b).unwrap();
                let ac = v.poisson_dkp(&t, &a, &c).unwrap();
                let lam = v.root(&t).unwrap();
                let rhs = ab.mul(&c(lam).unwrap()).unwrap().add(&b(lam).unwrap().mul(&ac).unwrap()).unwrap();
                prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-8);
                let ca = v.poisson_dkp(&t, &c, &a).unwrap();
                prop_assert!(ac.add(&ca).unwrap().max_abs() < 1e-8);
            }
        }
    }
}
