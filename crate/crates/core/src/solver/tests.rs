use super::*;
use crate::coefficients::{PointOp, Profile};
use crate::scenarios::{Forcing, ScenarioSpec};
use crate::weighted_space::weighted_norm;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_error(a: &Signal, b: &Signal) -> f64 {
    weighted_norm(&a.sub(b).unwrap()) / weighted_norm(b)
}

fn manufactured_error(spec: &ScenarioSpec, scheme: Scheme) -> f64 {
    let problem = spec.build().unwrap();
    let exact = spec.manufactured_u().unwrap().unwrap();
    let result = solve_time_stepping(&problem, scheme).unwrap();
    assert!(result.residual < 1e-10, "{}", result.residual);
    rel_error(&result.u, &exact)
}

#[test]
fn zero_data_gives_zero_solution() {
    let problem = ScenarioSpec::heat().with_resolution(32, 8).build().unwrap();
    let zero = problem
        .with_data(Signal::zeros(*problem.grid(), problem.m0()), Signal::zeros(*problem.grid(), problem.m1()))
        .unwrap();
    for result in [
        solve_time_stepping(&zero, Scheme::ImplicitEuler).unwrap(),
        solve_time_stepping(&zero, Scheme::CrankNicolson).unwrap(),
        solve_frequency(&zero).unwrap(),
    ] {
        assert!(result.u.is_zero() && result.v.is_zero());
        assert_eq!(result.residual, 0.0);
    }
}

#[test]
fn heat_manufactured_solution_converges() {
    let base = ScenarioSpec::heat();
    let e0 = manufactured_error(&base, Scheme::ImplicitEuler);
    let e1 = manufactured_error(&base.clone().with_resolution(512, 64), Scheme::ImplicitEuler);
    let e2 = manufactured_error(&base.clone().with_resolution(1024, 64), Scheme::ImplicitEuler);
    assert!(e0 < 1e-2, "{e0}");
    assert!(e1 < e0 && e2 < e1);
    let order = (e0 / e1).log2();
    assert!((order - 1.0).abs() < 0.2, "observed order {order}");

    let c0 = manufactured_error(&base.clone().with_resolution(128, 64), Scheme::CrankNicolson);
    let c1 = manufactured_error(&base.with_resolution(256, 64), Scheme::CrankNicolson);
    assert!(c1 < e0);
    let order = (c0 / c1).log2();
    assert!(order > 1.7, "observed order {order}");
}

#[test]
fn time_dependent_conductivity_manufactured() {
    let e = manufactured_error(&ScenarioSpec::heat_tanh(), Scheme::ImplicitEuler);
    assert!(e < 1e-2, "{e}");
}

#[test]
fn frequency_solution_agrees_with_stepping() {
    let spec = ScenarioSpec::heat();
    let problem = spec.build().unwrap();
    let exact = spec.manufactured_u().unwrap().unwrap();
    let stepped = solve_time_stepping(&problem, Scheme::ImplicitEuler).unwrap();
    let spectral = solve_frequency(&problem).unwrap();
    assert!(spectral.residual < 1e-8, "{}", spectral.residual);
    let err = rel_error(&stepped.u, &exact);
    let mutual = rel_error(&stepped.u, &spectral.u);
    assert!(mutual < 3.0 * err, "{mutual} vs {err}");
}

#[test]
fn integro_frequency_residual() {
    let problem = ScenarioSpec::integro().build().unwrap();
    let result = solve_frequency(&problem).unwrap();
    assert!(result.residual < 1e-8, "{}", result.residual);
    let stepped = solve_time_stepping(&problem, Scheme::ImplicitEuler).unwrap();
    assert!(stepped.residual < 1e-8);
    assert!(rel_error(&stepped.u, &result.u) < 0.05);
}

#[test]
fn frequency_solver_needs_autonomous_laws() {
    let problem = ScenarioSpec::heat_tanh().with_resolution(32, 8).build().unwrap();
    assert!(matches!(solve_frequency(&problem), Err(Error::Applicability(_))));
}

#[test]
fn causality_of_the_stepper() {
    let problem = ScenarioSpec::heat().with_resolution(256, 16).build().unwrap();
    let grid = *problem.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let start = if trial == 0 { 1.0 } else { rng.random_range(0.5..8.0) };
        let stop = start + 1.0;
        let shape: Vec<f64> = (0..problem.m0()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = Signal::from_fn(grid, problem.m0(), |t, c| {
            C64::new(if t >= start && t <= stop { shape[c] * (t - start).sin() } else { 0.0 }, 0.0)
        })
        .unwrap();
        let p = problem.with_data(f, Signal::zeros(grid, problem.m1())).unwrap();
        let result = solve_time_stepping(&p, Scheme::ImplicitEuler).unwrap();
        let before = result.u.truncated_after(start - 1e-9);
        assert!(weighted_norm(&before) <= 1e-8 * weighted_norm(&result.u));
    }
}

#[test]
fn causal_solutions_do_not_depend_on_rho() {
    let spec = ScenarioSpec::heat().with_resolution(128, 16);
    let a = solve_time_stepping(&spec.clone().build().unwrap(), Scheme::ImplicitEuler).unwrap();
    let b = solve_time_stepping(&spec.with_rho(2.0).build().unwrap(), Scheme::ImplicitEuler).unwrap();
    let diff: f64 = a.u.values().iter().zip(b.u.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(diff <= 1e-6 * a.u.max_abs());
}

#[test]
fn residual_is_relative_and_nondegenerate() {
    let problem = ScenarioSpec::heat().with_resolution(64, 16).build().unwrap();
    let grid = *problem.grid();
    let zero = SolveResult {
        u: Signal::zeros(grid, problem.m0()),
        v: Signal::zeros(grid, problem.m1()),
        residual: f64::NAN,
        scheme: Scheme::ImplicitEuler,
        n11_condition: 1.0,
    };
    assert!((residual(&problem, &zero).unwrap() - 1.0).abs() < 1e-14);

    let exact = solve_time_stepping(&problem, Scheme::ImplicitEuler).unwrap();
    assert!(exact.residual <= 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scale = 0.01 * exact.u.max_abs();
    let noisy = Signal::from_fn(grid, problem.m0(), |_, _| C64::new(scale * rng.random_range(-1.0..1.0), 0.0))
        .unwrap()
        .add(&exact.u)
        .unwrap();
    let perturbed = SolveResult {
        u: noisy,
        ..exact.clone()
    };
    assert!(residual(&problem, &perturbed).unwrap() > exact.residual);
}

#[test]
fn maxwell_residual() {
    let problem = ScenarioSpec::maxwell().with_resolution(32, 4).build().unwrap();
    let result = solve_time_stepping(&problem, Scheme::ImplicitEuler).unwrap();
    assert!(result.residual < 1e-8, "{}", result.residual);
    assert!(!result.u.is_zero());
}

#[test]
fn heat_wellposedness_constants() {
    let problem = ScenarioSpec::heat().build().unwrap();
    let r = check_wellposedness(&problem, 12, 1).unwrap();
    for v in [r.c_m, r.c0, r.c_half] {
        assert!((v - 1.0).abs() < 0.1, "{r:?}");
    }
    r.require().unwrap();
}

#[test]
fn negative_n11_fails_the_l2_condition() {
    let spec = ScenarioSpec {
        n11: Profile::constant(-1.0),
        ..ScenarioSpec::heat().with_resolution(64, 8)
    };
    let r = check_wellposedness(&spec.build().unwrap(), 12, 1).unwrap();
    match r.require() {
        Err(Error::WellPosedness { condition, .. }) => assert_eq!(condition, "l2_positive"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn integro_constant_grows_with_rho() {
    let rhos = [1.0, 2.0, 4.0];
    let c0: Vec<f64> = rhos
        .iter()
        .map(|&rho| {
            let p = ScenarioSpec::integro().with_rho(rho).build().unwrap();
            check_wellposedness(&p, 12, 5).unwrap().c0
        })
        .collect();
    let mean_r = rhos.iter().sum::<f64>() / 3.0;
    let mean_c = c0.iter().sum::<f64>() / 3.0;
    let slope = rhos.iter().zip(&c0).map(|(r, c)| (r - mean_r) * (c - mean_c)).sum::<f64>()
        / rhos.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>();
    assert!(slope > 0.0, "{c0:?}");
    let scan = smallest_wellposed_rho(|rho| ScenarioSpec::integro().with_rho(rho).build(), &[8.0, 1.0, 2.0, 4.0], 10, 5).unwrap();
    assert_eq!(scan.smallest, Some(1.0));
    assert_eq!(scan.rows.len(), 4);
}

#[test]
fn singular_n11_is_a_material_error() {
    let spec = ScenarioSpec {
        n11: Profile::Jump {
            low: 0.0,
            high: 1.0,
            at: 5.0,
        },
        ..ScenarioSpec::heat().with_resolution(64, 8)
    };
    let problem = spec.build();
    // the manufactured forcing divides by N11, so build the operator with smooth data
    let problem = match problem {
        Ok(p) => p,
        Err(_) => spec.with_forcing(Forcing::Smooth).build().unwrap(),
    };
    assert!(matches!(solve_time_stepping(&problem, Scheme::ImplicitEuler), Err(Error::Material(_))));
}

#[test]
fn block_dimensions_are_checked() {
    let problem = ScenarioSpec::heat().with_resolution(32, 8).build().unwrap();
    let laws = Laws {
        n01: MaterialLaw::constant(PointOp::Dense(nalgebra::DMatrix::zeros(3, 3))),
        ..Laws::heat()
    };
    assert!(EvoProblem::new(problem.complex().clone(), laws, problem.f().clone(), problem.g().clone()).is_err());
    let short = Signal::zeros(*problem.grid(), 2);
    assert!(problem.with_data(short, problem.g().clone()).is_err());
}
