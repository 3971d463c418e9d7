#![allow(dead_code)]

use std::io::Write;

use locfrac::attractor::PointSet;
use locfrac::*;

pub fn unit() -> AxisBox {
    AxisBox::interval(0.0, 1.0).unwrap()
}

pub fn halving_partition() -> Partition {
    let x = unit();
    Partition::new(
        x,
        vec![
            Piece { subdomain: x, map: Similitude::affine_1d(0.5, 0.0).unwrap() },
            Piece { subdomain: x, map: Similitude::affine_1d(0.5, 0.5).unwrap() },
        ],
    )
    .unwrap()
}

/// Second piece reversed: `u_2(x) = 1 − x/2`.
pub fn folded_partition() -> Partition {
    let x = unit();
    Partition::new(
        x,
        vec![
            Piece { subdomain: x, map: Similitude::affine_1d(0.5, 0.0).unwrap() },
            Piece { subdomain: x, map: Similitude::new(0.5, Ortho::reflection(), Point::x(1.0)).unwrap() },
        ],
    )
    .unwrap()
}

pub fn constant(c: f64) -> FunctionSpec {
    FunctionSpec::constant(c, unit()).unwrap()
}

pub fn poly(c: &[f64]) -> FunctionSpec {
    FunctionSpec::polynomial(c.to_vec(), unit()).unwrap()
}

pub fn constant_system(lambda: f64, s: [f64; 2]) -> LocalFractalSystem {
    LocalFractalSystem::new(halving_partition(), vec![constant(lambda); 2], s.iter().map(|&v| constant(v)).collect())
        .unwrap()
}

/// `λ₁(x) = x`, `λ₂(x) = 1 − x`, `S₁ = S₂ = t` on the halving partition.
pub fn affine_system(t: f64) -> LocalFractalSystem {
    LocalFractalSystem::new(halving_partition(), vec![poly(&[0.0, 1.0]), poly(&[1.0, -1.0])], vec![constant(t); 2])
        .unwrap()
}

pub fn grid(level: u32) -> Grid {
    Grid::new(unit(), level).unwrap()
}

pub fn hat(level: u32) -> SampledFunction {
    SampledFunction::from_fn(grid(level), |p| p[0].min(1.0 - p[0]))
}

pub fn graph(f: &SampledFunction) -> PointSet {
    let mut coords = Vec::new();
    for (x, v) in f.grid().nodes().zip(f.values()) {
        coords.extend_from_slice(x.as_slice());
        coords.push(*v);
    }
    PointSet::new(f.grid().dim() + 1, coords).unwrap()
}

/// One result line on the real stdout, bypassing the test harness capture.
pub fn report(id: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "[acceptance {id:>2}] {verdict} {name}: {detail}").unwrap();
}
