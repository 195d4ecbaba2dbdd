use criterion::{black_box, criterion_group, criterion_main, Criterion};
use lowner::coulomb::{relax, CurveSpec, GasState, RelaxOptions};
use lowner::faber_grunsky::{faber_phi_all, grunsky_exterior};
use lowner::loewner::{uniform_grid, ClosedForm};
use lowner::reduction::{LaxSource, Reduction, TimeVector};
use lowner::verify::Verifier;
use lowner::{Complex64 as C64, Expansion, Series};

fn series(c: &mut Criterion) {
    let g = ClosedForm::RadialCardioidLike { sigma: C64::from_polar(1.0, 0.9) }
        .exterior(0.4, 16)
        .unwrap();
    c.bench_function("revert depth 16", |b| b.iter(|| black_box(&g).revert().unwrap()));
    let a = Series::from_fn(Expansion::AtInfinity, -30, 1, |k| C64::new(1.0 / (2 - k) as f64, 0.1));
    c.bench_function("mul depth 30", |b| b.iter(|| black_box(&a).mul(&a).unwrap()));
    c.bench_function("faber 1..8", |b| b.iter(|| faber_phi_all(black_box(&g), 8).unwrap()));
    c.bench_function("grunsky half-width 8", |b| b.iter(|| grunsky_exterior(black_box(&g), 8).unwrap()));
}

fn loewner(c: &mut Criterion) {
    let form = ClosedForm::RadialSlit { sigma: C64::from_polar(1.0, 0.9) };
    let grid = uniform_grid(0.0, 1.0, 0.01);
    c.bench_function("radial RK4 on [0,1], step 1e-3", |b| {
        b.iter(|| LaxSource::integrate(&form.driving(), &grid, 16, 1e-3).unwrap())
    });
}

fn reduction(c: &mut Criterion) {
    let sigma = C64::from_polar(1.0, 0.9);
    let red = Reduction::new(LaxSource::closed(ClosedForm::RadialSlit { sigma }, 16));
    let t = TimeVector::dtoda(15.0, [(1, C64::new(-5.0, 2.0) / sigma)]).unwrap();
    c.bench_function("hodograph solve", |b| b.iter(|| red.hodograph_solve(black_box(&t), None).unwrap()));
    let v = Verifier::new(&red);
    c.bench_function("dToda Lax residual n=1", |b| b.iter(|| v.lax_residual_dtoda(&t, 1, 1e-4).unwrap()));
    c.bench_function("flow symmetry up to 3", |b| b.iter(|| v.grunsky_flow_symmetry_all(&t, 3).unwrap()));
}

fn coulomb(c: &mut Criterion) {
    let t = TimeVector::dtoda(2.0, [(2, C64::new(-0.5, 0.0))]).unwrap();
    let line = CurveSpec::RealLine {};
    let st = GasState::initial(&line, t, 200, 11).unwrap();
    c.bench_function("relax Gaussian gas N=200", |b| {
        b.iter(|| relax(&st, &line, RelaxOptions::default()).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = series, loewner, reduction, coulomb
}
criterion_main!(benches);
