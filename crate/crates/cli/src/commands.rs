use std::collections::BTreeMap;

use lowner::coulomb::{
    exterior_map_check, relax, support, CurveSpec, DensityEstimate, GasState, RelaxOptions,
};
use lowner::faber_grunsky::{faber_set, phi_capacity, psi_capacity};
use lowner::loewner::{uniform_grid, ClosedForm, DrivingData};
use lowner::reduction::{
    Control, HierarchyKind, LaxSource, RFunction, Reduction, TimeVector, DEFAULT_CLOSED_BRACKET,
};
use lowner::verify::Verifier;
use lowner::{Complex64 as C64, Series};
use serde_json::json;

use crate::args::{Cli, Command, CoulombArgs, SourceArgs, TimesArgs, VerifyArgs};
use crate::config::{
    CoulombConfig, GridConfig, NumericConfig, RunConfig, SourceConfig, Subcommand, TimesConfig,
    SCHEMA,
};
use crate::golden;
use crate::output::{complex_pair, num, series_csv, Outputs};
use crate::{Check, Failure, Outcome};

type Result<T> = std::result::Result<T, Failure>;

const DEFAULT_GRID: GridConfig = GridConfig {
    start: 0.0,
    end: 1.0,
    step: 0.01,
};
const DEFAULT_FLOW_MAX_INDEX: i32 = 3;

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

pub fn subcommand_of(c: &Command) -> Subcommand {
    match c {
        Command::Faber { .. } => Subcommand::Faber,
        Command::Grunsky { .. } => Subcommand::Grunsky,
        Command::Loewner { .. } => Subcommand::Loewner,
        Command::Hodograph { .. } => Subcommand::Hodograph,
        Command::BuildLax { .. } => Subcommand::BuildLax,
        Command::Verify { .. } => Subcommand::Verify,
        Command::Coulomb { .. } => Subcommand::Coulomb,
        Command::Golden { .. } => Subcommand::Golden,
    }
}

/// Reads the config file (if any) and applies the flags on top.
pub fn load_config(cli: &Cli, sub: Subcommand) -> Result<RunConfig> {
    let mut cfg = match &cli.global.config {
        None => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(s) = cfg.schema.filter(|&s| s != SCHEMA) {
        return Err(config_err(format!("config schema {s} is not supported (expected {SCHEMA})")));
    }
    match cfg.subcommand {
        Some(s) if s != sub => {
            return Err(config_err(format!(
                "config is for `{}` but `{}` was run",
                s.name(),
                sub.name()
            )))
        }
        _ => cfg.subcommand = Some(sub),
    }
    apply_numeric(&mut cfg.numeric, cli);
    match &cli.command {
        Command::Faber { source, lambda } | Command::Grunsky { source, lambda } => {
            apply_source(&mut cfg, source)?;
            cfg.lambda = lambda.or(cfg.lambda);
        }
        Command::Loewner { source } => apply_source(&mut cfg, source)?,
        Command::Hodograph { source, times } | Command::BuildLax { source, times } => {
            apply_source(&mut cfg, source)?;
            apply_times(&mut cfg, times)?;
        }
        Command::Verify { source, times, verify } => {
            apply_source(&mut cfg, source)?;
            apply_times(&mut cfg, times)?;
            apply_verify(&mut cfg, verify)?;
        }
        Command::Coulomb { gas } => apply_coulomb(&mut cfg, gas)?,
        Command::Golden { example } => cfg.example = example.clone().or(cfg.example),
    }
    Ok(cfg)
}

fn apply_numeric(n: &mut NumericConfig, cli: &Cli) {
    let g = &cli.global;
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = g.$f { n.$f = v; })* };
    }
    set!(depth, rk4_step, fd_step, lax_tol, hydro_tol, flow_tol, loewner_tol, symmetry_tol, half_width, n_max);
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| config_err(format!("{what}: cannot parse {s:?} as a number")))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| config_err(format!("{what}: cannot parse {p:?}"))))
        .collect()
}

fn parse_complex(s: &str, what: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = parse_list(s, what)?;
    match v.as_slice() {
        [re] => Ok([*re, 0.0]),
        [re, im] => Ok([*re, *im]),
        _ => Err(config_err(format!("{what}: expected `re` or `re,im`, got {s:?}"))),
    }
}

fn parse_indexed(s: &str, what: &str) -> Result<(i32, [f64; 2])> {
    let (n, v) = s
        .split_once('=')
        .ok_or_else(|| config_err(format!("{what}: expected `n=value`, got {s:?}")))?;
    let n = n.trim().parse().map_err(|_| config_err(format!("{what}: bad index in {s:?}")))?;
    Ok((n, parse_complex(v, what)?))
}

fn apply_source(cfg: &mut RunConfig, a: &SourceArgs) -> Result<()> {
    if let Some(id) = &a.example {
        let mut repr = json!({ "example": id });
        if let Some(u) = a.u {
            repr["u"] = json!(u);
        }
        if let Some(s) = &a.sigma {
            repr["sigma"] = json!(parse_complex(s, "--sigma")?);
        }
        let form: ClosedForm = serde_json::from_value(repr).map_err(|e| config_err(e.to_string()))?;
        cfg.source = Some(SourceConfig::Closed(form));
    } else if a.u.is_some() || a.sigma.is_some() {
        let Some(SourceConfig::Closed(form)) = &cfg.source else {
            return Err(config_err("--u/--sigma need a closed-form example"));
        };
        let mut repr = serde_json::to_value(form).expect("closed form serializes");
        if let Some(u) = a.u {
            repr["u"] = json!(u);
        }
        if let Some(s) = &a.sigma {
            repr["sigma"] = json!(parse_complex(s, "--sigma")?);
        }
        cfg.source = Some(SourceConfig::Closed(
            serde_json::from_value(repr).map_err(|e| config_err(e.to_string()))?,
        ));
    }
    let grid = match &a.grid {
        Some(g) => {
            let p: Vec<f64> = g.split(':').map(|x| parse_f64(x, "--grid")).collect::<Result<_>>()?;
            let [start, end, step] = p[..] else {
                return Err(config_err(format!("--grid: expected start:end:step, got {g:?}")));
            };
            Some(GridConfig { start, end, step })
        }
        None => None,
    };
    if let Some(d) = &a.driving {
        let driving: DrivingData =
            serde_json::from_str(d).map_err(|e| config_err(format!("--driving: {e}")))?;
        let grid = grid.unwrap_or(match &cfg.source {
            Some(SourceConfig::Integrated { grid, .. }) => *grid,
            _ => DEFAULT_GRID,
        });
        cfg.source = Some(SourceConfig::Integrated { driving, grid });
    } else if let Some(g) = grid {
        match &mut cfg.source {
            Some(SourceConfig::Integrated { grid, .. }) => *grid = g,
            _ => return Err(config_err("--grid applies to integrated sources")),
        }
    }
    Ok(())
}

fn source_kind(cfg: &RunConfig) -> Option<HierarchyKind> {
    Some(match cfg.source.as_ref()? {
        SourceConfig::Closed(f) if f.is_radial() => HierarchyKind::Dtoda,
        SourceConfig::Integrated { driving, .. } if driving.is_radial() => HierarchyKind::Dtoda,
        _ => HierarchyKind::Dkp,
    })
}

fn apply_times(cfg: &mut RunConfig, a: &TimesArgs) -> Result<()> {
    let any = a.x.is_some() || a.t0.is_some() || !a.times.is_empty();
    if any {
        let kind = if a.x.is_some() {
            HierarchyKind::Dkp
        } else if a.t0.is_some() {
            HierarchyKind::Dtoda
        } else {
            match &cfg.times {
                Some(TimesConfig::Dkp { .. }) => HierarchyKind::Dkp,
                Some(TimesConfig::Dtoda { .. }) => HierarchyKind::Dtoda,
                None => source_kind(cfg).unwrap_or(HierarchyKind::Dkp),
            }
        };
        let mut times = match (cfg.times.take(), kind) {
            (Some(t @ TimesConfig::Dkp { .. }), HierarchyKind::Dkp)
            | (Some(t @ TimesConfig::Dtoda { .. }), HierarchyKind::Dtoda) => t,
            (_, HierarchyKind::Dkp) => TimesConfig::Dkp { x: 0.0, t: BTreeMap::new() },
            (_, HierarchyKind::Dtoda) => TimesConfig::Dtoda { t0: 0.0, t: BTreeMap::new() },
        };
        match &mut times {
            TimesConfig::Dkp { x, t } => {
                if a.t0.is_some() {
                    return Err(config_err("--t0 is a dToda time; use --x for dKP"));
                }
                *x = a.x.unwrap_or(*x);
                for s in &a.times {
                    let (n, v) = parse_indexed(s, "--time")?;
                    if v[1] != 0.0 || n < 1 {
                        return Err(config_err(format!("--time {s}: dKP times are real, n >= 1")));
                    }
                    t.insert(n as u32, v[0]);
                }
            }
            TimesConfig::Dtoda { t0, t } => {
                *t0 = a.t0.unwrap_or(*t0);
                for s in &a.times {
                    let (n, v) = parse_indexed(s, "--time")?;
                    t.insert(n, v);
                }
            }
        }
        cfg.times = Some(times);
    }
    if let Some(r) = &a.r {
        cfg.r = RFunction::Poly(parse_list(r, "--r")?);
    }
    if let Some(b) = &a.bracket {
        let v: Vec<f64> = parse_list(b, "--bracket")?;
        let [lo, hi] = v[..] else {
            return Err(config_err(format!("--bracket: expected lo,hi, got {b:?}")));
        };
        cfg.bracket = Some([lo, hi]);
    }
    Ok(())
}

fn apply_verify(cfg: &mut RunConfig, a: &VerifyArgs) -> Result<()> {
    if let Some(l) = &a.lax {
        cfg.verify.lax = Some(parse_list(l, "--lax")?);
    }
    if let Some(h) = &a.hydro {
        cfg.verify.hydro = Some(parse_list(h, "--hydro")?);
    }
    if let Some(m) = a.flow_max_index {
        cfg.verify.flow_max_index = Some(m);
    }
    if let Some(c) = &a.control {
        cfg.verify.control = match c.split_once('=') {
            None if c == "none" => Control::None,
            None if c == "flip_xi" => Control::FlipXi,
            Some(("lambda_offset", d)) => Control::LambdaOffset(parse_f64(d, "--control")?),
            _ => return Err(config_err(format!("--control: unknown control {c:?}"))),
        };
    }
    Ok(())
}

fn parse_curve(s: &str) -> Result<CurveSpec> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| config_err(format!("--curve: {e}")));
    }
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts.as_slice() {
        ["real_line"] => CurveSpec::RealLine {},
        ["half_ray"] => CurveSpec::HalfRay { origin: [0.0, 0.0], angle: 0.0 },
        ["half_ray", a] => CurveSpec::HalfRay { origin: [0.0, 0.0], angle: parse_f64(a, "--curve")? },
        ["arc", a, b] => CurveSpec::UnitCircleArc {
            from: parse_f64(a, "--curve")?,
            to: parse_f64(b, "--curve")?,
        },
        _ => return Err(config_err(format!("--curve: unknown curve {s:?}"))),
    })
}

fn apply_coulomb(cfg: &mut RunConfig, a: &CoulombArgs) -> Result<()> {
    let mut c = match cfg.coulomb.take() {
        Some(c) => c,
        None => CoulombConfig {
            curve: CurveSpec::RealLine {},
            n: 0,
            t0: 0.0,
            t: BTreeMap::new(),
            seed: 0,
            max_iters: RelaxOptions::default().max_iters,
            tol: RelaxOptions::default().tol,
        },
    };
    if let Some(s) = &a.curve {
        c.curve = parse_curve(s)?;
    }
    c.n = a.n.unwrap_or(c.n);
    c.t0 = a.t0.unwrap_or(c.t0);
    for s in &a.times {
        let (n, v) = parse_indexed(s, "--times")?;
        c.t.insert(n, v);
    }
    c.seed = a.seed.unwrap_or(c.seed);
    c.max_iters = a.max_iters.unwrap_or(c.max_iters);
    c.tol = a.tol.unwrap_or(c.tol);
    if c.n == 0 {
        return Err(config_err("coulomb needs --N (or coulomb.n) >= 1"));
    }
    cfg.coulomb = Some(c);
    Ok(())
}

pub fn dispatch(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    match cfg.subcommand.expect("set by load_config") {
        Subcommand::Faber => faber(cfg, out),
        Subcommand::Grunsky => grunsky(cfg, out),
        Subcommand::Loewner => loewner(cfg, out),
        Subcommand::Hodograph => hodograph(cfg, out, false),
        Subcommand::BuildLax => hodograph(cfg, out, true),
        Subcommand::Verify => verify(cfg, out),
        Subcommand::Coulomb => coulomb(cfg, out),
        Subcommand::Golden => golden_run(cfg, out),
    }
}

fn lax_source(cfg: &RunConfig) -> Result<LaxSource> {
    let n = &cfg.numeric;
    match &cfg.source {
        None => Err(config_err("no source: give --example, --driving or a `source` block")),
        Some(SourceConfig::Closed(form)) => Ok(LaxSource::closed(*form, n.depth)),
        Some(SourceConfig::Integrated { driving, grid }) => {
            let g = uniform_grid(grid.start, grid.end, grid.step);
            Ok(LaxSource::integrate(driving, &g, n.depth, n.rk4_step)?)
        }
    }
}

fn reduction(cfg: &RunConfig) -> Result<Reduction> {
    let mut red = Reduction::new(lax_source(cfg)?);
    red.r = cfg.r.clone();
    red.bracket = cfg.bracket.map(|[a, b]| (a, b));
    red.control = cfg.verify.control;
    Ok(red)
}

fn times(cfg: &RunConfig) -> Result<TimeVector> {
    Ok(match &cfg.times {
        None => return Err(config_err("no times: give --x/--t0/--time or a `times` block")),
        Some(TimesConfig::Dkp { x, t }) => TimeVector::dkp(*x, t.iter().map(|(&n, &v)| (n, v)))?,
        Some(TimesConfig::Dtoda { t0, t }) => {
            TimeVector::dtoda(*t0, t.iter().map(|(&n, v)| (n, C64::new(v[0], v[1]))))?
        }
    })
}

fn eval_point(cfg: &RunConfig, src: &LaxSource) -> f64 {
    cfg.lambda.unwrap_or_else(|| match src {
        LaxSource::Closed { .. } => 0.5,
        LaxSource::Integrated { .. } => {
            let (a, b) = src.lambda_range();
            0.5 * (a + b)
        }
    })
}

fn closed_form(cfg: &RunConfig) -> Option<ClosedForm> {
    match cfg.source {
        Some(SourceConfig::Closed(f)) => Some(f),
        _ => None,
    }
}

fn coefficient_map(m: &BTreeMap<i32, C64>) -> serde_json::Value {
    m.iter().map(|(n, v)| (n.to_string(), json!(complex_pair(*v)))).collect()
}

fn golden_flow_checks(form: ClosedForm, red: &Reduction, lambda: f64) -> Result<Vec<Check>> {
    let want = golden::flow_coefficients(form, lambda);
    let lo = want.iter().map(|w| w.0).min().unwrap_or(0);
    let hi = want.iter().map(|w| w.0).max().unwrap_or(0);
    let got = red.flow_coefficients(lambda, lo, hi)?;
    let name = if red.kind() == HierarchyKind::Dkp { "chi" } else { "xi" };
    let mut checks: Vec<Check> = want
        .iter()
        .map(|(n, v)| Check::below(format!("{} {name}_{n}", form.id()), (got[n] - v).norm(), 1e-12))
        .collect();
    if let ClosedForm::ChordalSlit { u } = form {
        let l = red.source.lax(lambda)?;
        for (i, p) in golden::slit_faber(u, lambda).iter().enumerate() {
            let f = lowner::faber_grunsky::faber_phi(&l, i + 2)?;
            let err = (0..=p.hi().max(f.hi())).map(|k| (f.coeff(k) - p.coeff(k)).norm()).fold(0.0, f64::max);
            checks.push(Check::below(format!("A.1.1 Phi_{}", i + 2), err, 1e-12));
        }
    }
    Ok(checks)
}

fn faber(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let red = reduction(cfg)?;
    let lambda = eval_point(cfg, &red.source);
    let l = red.source.lax(lambda)?;
    let lt = red.source.lax_tilde(lambda)?;
    let mut n_max = cfg.numeric.n_max.min(phi_capacity(&l));
    if let Some(lt) = &lt {
        n_max = n_max.min(psi_capacity(lt));
    }
    let set = faber_set(&l, lt.as_ref(), n_max)?;
    let n = n_max as i32;
    let flow = match red.kind() {
        HierarchyKind::Dkp => red.flow_coefficients(lambda, 1, n)?,
        HierarchyKind::Dtoda => red.flow_coefficients(lambda, -n, n)?,
    };
    out.write_json("faber.json", &json!({ "lambda": lambda, "faber": set, "flow_coefficients": coefficient_map(&flow) }))?;
    let checks = match closed_form(cfg) {
        Some(form) => golden_flow_checks(form, &red, lambda)?,
        None => Vec::new(),
    };
    Ok(Outcome {
        checks,
        result: json!({ "lambda": lambda, "n_max": n_max, "flow_coefficients": coefficient_map(&flow) }),
    })
}

fn grunsky(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let red = reduction(cfg)?;
    let lambda = eval_point(cfg, &red.source);
    let table = red.grunsky_at(lambda, cfg.numeric.half_width)?;
    out.write("grunsky.csv", table.to_csv().as_bytes())?;
    let mut checks = vec![Check::below("grunsky symmetry", table.max_asymmetry(), cfg.numeric.symmetry_tol)];
    if red.kind() == HierarchyKind::Dtoda {
        checks.push(Check::below("mixed quadrant routes", table.mixed_route_discrepancy, 1e-9));
    }
    Ok(Outcome {
        checks,
        result: json!({
            "lambda": lambda,
            "half_width": table.half_width,
            "r": complex_pair(table.r),
            "b00": table.get(0, 0).map(complex_pair),
            "max_asymmetry": table.max_asymmetry(),
            "mixed_route_discrepancy": table.mixed_route_discrepancy,
        }),
    })
}

/// Largest coefficient error, absolute and relative to `max(1, |b_k|)`.
fn max_diff(a: &Series, b: &Series) -> (f64, f64) {
    let (lo, hi) = (a.lo().max(b.lo()), a.hi().min(b.hi()));
    (lo..=hi).fold((0.0, 0.0), |(abs, rel), k| {
        let d = (a.coeff(k) - b.coeff(k)).norm();
        (f64::max(abs, d), f64::max(rel, d / b.coeff(k).norm().max(1.0)))
    })
}

fn max2(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.max(b.0), a.1.max(b.1))
}

fn loewner(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let n = &cfg.numeric;
    let (driving, grid) = match &cfg.source {
        None => return Err(config_err("no source: give --example, --driving or a `source` block")),
        Some(SourceConfig::Closed(f)) => (f.driving(), DEFAULT_GRID),
        Some(SourceConfig::Integrated { driving, grid }) => (driving.clone(), *grid),
    };
    let g = uniform_grid(grid.start, grid.end, grid.step);
    // examples start from their own map, which is not the identity for A.2.2
    let src = match closed_form(cfg) {
        Some(form) => LaxSource::integrate_from(
            &driving,
            &form.exterior(grid.start, n.depth)?,
            form.interior(grid.start, n.depth)?.as_ref(),
            &g,
            n.rk4_step,
        )?,
        None => LaxSource::integrate(&driving, &g, n.depth, n.rk4_step)?,
    };
    let mut rows: Vec<(String, Series)> = Vec::new();
    let mut worst = (0.0, 0.0);
    for &l in &g {
        let ext = src.lax(l)?;
        let int = src.lax_tilde(l)?;
        if let Some(form) = closed_form(cfg) {
            worst = max2(worst, max_diff(&ext, &form.exterior(l, n.depth)?));
            if let (Some(a), Some(b)) = (&int, form.interior(l, n.depth)?) {
                worst = max2(worst, max_diff(a, &b));
            }
        }
        rows.push((format!("exterior@{}", num(l)), ext));
        if let Some(int) = int {
            rows.push((format!("interior@{}", num(l)), int));
        }
    }
    let refs: Vec<(String, &Series)> = rows.iter().map(|(s, r)| (s.clone(), r)).collect();
    out.write("family.csv", series_csv(&refs).as_bytes())?;
    let checks = match closed_form(cfg) {
        Some(form) => vec![Check::below(format!("{} integrated vs closed form", form.id()), worst.1, n.loewner_tol)],
        None => Vec::new(),
    };
    Ok(Outcome {
        checks,
        result: json!({
            "provenance": src.provenance(),
            "grid": [grid.start, grid.end, grid.step],
            "rk4_step": n.rk4_step,
            "max_error_vs_closed_form": closed_form(cfg).map(|_| worst.0),
            "max_scaled_error_vs_closed_form": closed_form(cfg).map(|_| worst.1),
        }),
    })
}

fn hodograph(cfg: &RunConfig, out: &mut Outputs, lax: bool) -> Result<Outcome> {
    let red = reduction(cfg)?;
    let t = times(cfg)?;
    let sol = red.solve(&t, None)?;
    let root = red.root(&t, None)?;
    let (_, scale) = red.hodograph_residual(&t, root)?;
    let tol = 1e-12 * scale.max(1.0);
    if lax {
        out.write_json("lax.json", &sol)?;
        let mut rows = vec![("L".to_string(), &sol.lax)];
        if let Some(lt) = &sol.lax_tilde {
            rows.push(("Ltilde".to_string(), lt));
        }
        out.write("lax.csv", series_csv(&rows).as_bytes())?;
    }
    let bracket = red.bracket.unwrap_or(match red.source {
        LaxSource::Closed { .. } => DEFAULT_CLOSED_BRACKET,
        _ => red.source.lambda_range(),
    });
    Ok(Outcome {
        checks: vec![Check::below("hodograph residual", sol.hodograph_residual, tol)],
        result: json!({
            "kind": sol.kind,
            "provenance": sol.provenance,
            "lambda": sol.lambda,
            "bracket": [bracket.0, bracket.1],
            "hodograph_residual": sol.hodograph_residual,
            "flow_coefficients": coefficient_map(&sol.flow_coefficients),
        }),
    })
}

struct VerifyPlan {
    lax: Vec<i32>,
    hydro: Vec<i32>,
    flow_max_index: i32,
}

fn default_plan(kind: HierarchyKind, t: &TimeVector, cfg: &RunConfig) -> VerifyPlan {
    let support = t.support();
    let lax = cfg.verify.lax.clone().unwrap_or_else(|| match kind {
        HierarchyKind::Dkp => {
            let mut v = vec![1];
            v.extend(support.iter().filter(|&&n| n > 1));
            v
        }
        HierarchyKind::Dtoda if support.is_empty() => vec![1, -1],
        HierarchyKind::Dtoda => support.clone(),
    });
    VerifyPlan {
        lax,
        hydro: cfg.verify.hydro.clone().unwrap_or(support),
        flow_max_index: cfg.verify.flow_max_index.unwrap_or(DEFAULT_FLOW_MAX_INDEX),
    }
}

fn run_checks(red: &Reduction, t: &TimeVector, plan: &VerifyPlan, n: &NumericConfig, label: &str) -> Result<(Vec<Check>, Vec<serde_json::Value>)> {
    let v = Verifier::with_step(red, n.fd_step);
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    let mut push = |equation: String, k: i32, value: f64, tol: f64| {
        reports.push(json!({ "equation": equation, "n": k, "max_residual": value, "tolerance": tol, "pass": value < tol }));
        checks.push(Check::below(format!("{label}{equation}"), value, tol));
    };
    for &k in &plan.lax {
        let reps = match red.kind() {
            HierarchyKind::Dkp => vec![v.lax_residual_dkp(t, k, n.lax_tol)?],
            HierarchyKind::Dtoda => v.lax_residual_dtoda(t, k, n.lax_tol)?.to_vec(),
        };
        for r in reps {
            push(r.equation, k, r.max_residual, n.lax_tol);
        }
    }
    for &k in &plan.hydro {
        push(format!("hydrodynamic n={k}"), k, v.hydro_residual(t, k)?, n.hydro_tol);
    }
    if plan.flow_max_index > 0 {
        let (d, at) = v.grunsky_flow_symmetry_all(t, plan.flow_max_index)?;
        push(
            format!("flow symmetry |m|,|n|,|k| <= {} (worst at {:?})", plan.flow_max_index, at),
            plan.flow_max_index,
            d,
            n.flow_tol,
        );
    }
    Ok((checks, reports))
}

fn verify(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let red = reduction(cfg)?;
    let t = times(cfg)?;
    let plan = default_plan(red.kind(), &t, cfg);
    let (checks, reports) = run_checks(&red, &t, &plan, &cfg.numeric, "")?;
    out.write_json("verify.json", &reports)?;
    let lambda = red.hodograph_solve(&t, None)?;
    Ok(Outcome {
        checks,
        result: json!({ "lambda": lambda, "control": red.control, "fd_step": cfg.numeric.fd_step }),
    })
}

fn coulomb(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let c = cfg.coulomb.as_ref().ok_or_else(|| config_err("no coulomb block"))?;
    if let Some(n) = c.t.keys().find(|&&n| n < 1) {
        return Err(config_err(format!("coupling index {n} must be >= 1")));
    }
    let t = TimeVector::dtoda(c.t0, c.t.iter().map(|(&n, v)| (n, C64::new(v[0], v[1]))))?;
    let init = GasState::initial(&c.curve, t, c.n, c.seed)?;
    let rep = relax(&init, &c.curve, RelaxOptions { max_iters: c.max_iters, tol: c.tol })?;
    let st = &rep.state;
    let mut csv = String::from("s,re,im\n");
    for (&s, z) in st.s.iter().zip(st.positions(&c.curve)) {
        csv.push_str(&format!("{},{},{}\n", num(s), num(z.re), num(z.im)));
    }
    out.write("positions.csv", csv.as_bytes())?;
    let sup = support(st);
    let mut checks = vec![
        Check::below("relaxation gradient", rep.max_gradient, c.tol),
        Check::below("single arc", if sup.multi_arc { 1.0 } else { 0.0 }, 0.5),
    ];
    let on_axis = st.positions(&c.curve).iter().all(|z| z.im == 0.0);
    let joukowski = if on_axis && !sup.multi_arc && st.len() >= 2 {
        let j = exterior_map_check(st, &c.curve)?;
        checks.push(Check::below("Joukowski k(p(z)) = z", j.identity_error, 1e-12));
        // the semicircle is the equilibrium law only for quadratic potentials on the line
        let quadratic = c.t.keys().all(|&n| n <= 2) && c.t.contains_key(&2);
        if matches!(c.curve, CurveSpec::RealLine {}) && quadratic {
            let worst = j.moments.iter().map(|m| m.error).fold(0.0, f64::max);
            checks.push(Check::below("moments vs semicircle", worst, lowner::coulomb::MOMENT_TOL));
        }
        Some(j)
    } else {
        None
    };
    let density = if st.len() >= 2 { Some(DensityEstimate::new(st)?) } else { None };
    let report = json!({
        "n": st.len(),
        "hbar": st.hbar,
        "seed": st.seed,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "energy": rep.energy,
        "initial_energy": rep.initial_energy,
        "max_gradient": rep.max_gradient,
        "support": sup,
        "joukowski": joukowski,
        "density": density,
    });
    out.write_json("coulomb.json", &report)?;
    Ok(Outcome {
        checks,
        result: json!({ "energy": rep.energy, "support": sup, "converged": rep.converged, "iterations": rep.iterations }),
    })
}

fn golden_run(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let ids: Vec<&str> = match &cfg.example {
        Some(id) => vec![golden::EXAMPLES
            .iter()
            .copied()
            .find(|e| e == id)
            .ok_or_else(|| config_err(format!("unknown example {id:?}; expected A.1.1, A.1.2, A.2.1 or A.2.2")))?],
        None => golden::EXAMPLES.to_vec(),
    };
    let n = &cfg.numeric;
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();
    for id in ids {
        let (form, t) = golden::default_case(id).expect("known example");
        let red = Reduction::new(LaxSource::closed(form, n.depth));
        let lambda = red.hodograph_solve(&t, None)?;
        let want = golden::lambda(form, &t);
        checks.extend(golden_flow_checks(form, &red, lambda)?);
        checks.push(Check::below(format!("{id} hodograph lambda"), (lambda - want).abs(), 1e-10));
        let plan = VerifyPlan {
            lax: match red.kind() {
                HierarchyKind::Dkp => vec![1, 2, 3],
                HierarchyKind::Dtoda => vec![1, -1, 2, -2],
            },
            hydro: t.support(),
            flow_max_index: DEFAULT_FLOW_MAX_INDEX,
        };
        let (c, reports) = run_checks(&red, &t, &plan, n, &format!("{id} "))?;
        checks.extend(c);
        results.insert(id.to_string(), json!({ "lambda": lambda, "closed_form_lambda": want, "reports": reports }));
    }
    let result = serde_json::Value::Object(results);
    out.write_json("golden.json", &result)?;
    Ok(Outcome { checks, result })
}
