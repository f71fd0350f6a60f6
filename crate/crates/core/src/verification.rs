//! Invariant suites: each criterion measures a few quantities and compares
//! them with a threshold or a closed-form reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::coefficients::{
    check_admissible, check_frac_sobolev_condition, commutator_norm, estimate_commutator_bound,
    shift_commutator_kernel_integral, MaterialLaw, PointOp, Profile,
};
use crate::diagnostics::{phenomenon_probe, polynomial_root_bound, refinement_study, STABILITY_FACTOR};
use crate::fourier_laplace::{apply_multiplier, derivative_symbol, forward, SpectralEngine, DEFAULT_PAD};
use crate::fractional::{frac_derivative, half_derivative_singular, rl_integral, FractionalOrder};
use crate::scenarios::{Forcing, ScenarioSpec};
use crate::solver::{check_wellposedness, solve_frequency, solve_time_stepping, Scheme};
use crate::weighted_space::{weighted_inner, weighted_norm, Signal, TemporalGrid};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    AtMost,
    AtLeast,
    Above,
    /// `|measured - reference| < threshold`.
    Near,
    /// Reported only.
    Info,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
            Relation::Near => "|m-ref| <",
            Relation::Info => "info",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub invariant: String,
    pub measured: f64,
    pub reference: Option<f64>,
    pub threshold: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl CheckRow {
    pub fn new(invariant: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        let passed = match relation {
            Relation::Below => measured < threshold,
            Relation::AtMost => measured <= threshold,
            Relation::AtLeast => measured >= threshold,
            Relation::Above => measured > threshold,
            Relation::Near | Relation::Info => true,
        };
        Self {
            invariant: invariant.into(),
            measured,
            reference: None,
            threshold,
            relation,
            passed,
        }
    }

    pub fn near(invariant: impl Into<String>, measured: f64, reference: f64, tol: f64) -> Self {
        Self {
            invariant: invariant.into(),
            measured,
            reference: Some(reference),
            threshold: tol,
            relation: Relation::Near,
            passed: (measured - reference).abs() < tol,
        }
    }

    /// A yes/no outcome, shown as 1 or 0.
    pub fn flag(invariant: impl Into<String>, holds: bool) -> Self {
        Self::new(invariant, if holds { 1.0 } else { 0.0 }, Relation::AtLeast, 1.0)
    }

    pub fn info(invariant: impl Into<String>, measured: f64) -> Self {
        Self::new(invariant, measured, Relation::Info, f64::NAN)
    }
}

impl fmt::Display for CheckRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reference = self.reference.map(|r| format!("{r:.6e}")).unwrap_or_else(|| "-".into());
        let verdict = match (self.relation, self.passed) {
            (Relation::Info, _) => "info",
            (_, true) => "pass",
            (_, false) => "FAIL",
        };
        write!(
            f,
            "{:<58} {:>14.6e} {:>14} {:>10} {:>11.3e}  {}",
            self.invariant,
            self.measured,
            reference,
            self.relation.symbol(),
            self.threshold,
            verdict
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Spectral,
    Fractional,
    Commutator,
    Solver,
    Maxreg,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Spectral, Suite::Fractional, Suite::Commutator, Suite::Solver, Suite::Maxreg];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Spectral => "spectral",
            Suite::Fractional => "fractional",
            Suite::Commutator => "commutator",
            Suite::Solver => "solver",
            Suite::Maxreg => "maxreg",
        }
    }

    pub fn criteria(self) -> Vec<Criterion> {
        Criterion::ALL.into_iter().filter(|c| c.suite() == self).collect()
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            Error::Parameter(format!("unknown suite '{s}'; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    SpectralIdentities,
    OracleEquivalence,
    KernelIdentity,
    Positivity,
    CommutatorBehavior,
    SolverCorrectness,
    MaximalRegularity,
    RegularityPhenomenon,
    RootBound,
    Admissibility,
}

impl Criterion {
    pub const ALL: [Criterion; 10] = [
        Criterion::SpectralIdentities,
        Criterion::OracleEquivalence,
        Criterion::KernelIdentity,
        Criterion::Positivity,
        Criterion::CommutatorBehavior,
        Criterion::SolverCorrectness,
        Criterion::MaximalRegularity,
        Criterion::RegularityPhenomenon,
        Criterion::RootBound,
        Criterion::Admissibility,
    ];

    pub fn number(self) -> usize {
        Criterion::ALL.iter().position(|c| *c == self).expect("listed") + 1
    }

    pub fn title(self) -> &'static str {
        match self {
            Criterion::SpectralIdentities => "spectral identities",
            Criterion::OracleEquivalence => "convolution and singular-integral oracles",
            Criterion::KernelIdentity => "shift commutator kernel identity",
            Criterion::Positivity => "positivity of fractional symbols",
            Criterion::CommutatorBehavior => "half-derivative commutators",
            Criterion::SolverCorrectness => "solver correctness",
            Criterion::MaximalRegularity => "maximal regularity",
            Criterion::RegularityPhenomenon => "regularity phenomenon",
            Criterion::RootBound => "polynomial root bound",
            Criterion::Admissibility => "kernel admissibility",
        }
    }

    /// Wall-clock budget at level 0, in seconds.
    pub fn runtime_limit(self) -> f64 {
        match self {
            Criterion::SpectralIdentities => 10.0,
            Criterion::OracleEquivalence => 30.0,
            Criterion::KernelIdentity | Criterion::Positivity | Criterion::RootBound => 5.0,
            Criterion::CommutatorBehavior => 60.0,
            Criterion::SolverCorrectness | Criterion::RegularityPhenomenon => 120.0,
            Criterion::MaximalRegularity => 300.0,
            Criterion::Admissibility => 30.0,
        }
    }

    pub fn suite(self) -> Suite {
        match self {
            Criterion::SpectralIdentities | Criterion::Positivity => Suite::Spectral,
            Criterion::OracleEquivalence => Suite::Fractional,
            Criterion::KernelIdentity | Criterion::CommutatorBehavior => Suite::Commutator,
            Criterion::SolverCorrectness | Criterion::Admissibility => Suite::Solver,
            Criterion::MaximalRegularity | Criterion::RegularityPhenomenon | Criterion::RootBound => Suite::Maxreg,
        }
    }

    /// Runs the checks; `level` refines the resolutions dyadically.
    pub fn run(self, level: usize, seed: u64) -> Result<Vec<CheckRow>> {
        match self {
            Criterion::SpectralIdentities => spectral_identities(level, seed),
            Criterion::OracleEquivalence => oracle_equivalence(level),
            Criterion::KernelIdentity => kernel_identity(),
            Criterion::Positivity => positivity(level, seed),
            Criterion::CommutatorBehavior => commutator_behavior(level, seed),
            Criterion::SolverCorrectness => solver_correctness(level, seed),
            Criterion::MaximalRegularity => maximal_regularity(level),
            Criterion::RegularityPhenomenon => regularity_phenomenon(level, seed),
            Criterion::RootBound => root_bound(seed),
            Criterion::Admissibility => admissibility(seed),
        }
    }
}

fn rel_error(a: &Signal, b: &Signal) -> Result<f64> {
    Ok(weighted_norm(&a.sub(b)?) / weighted_norm(b))
}

fn refine(grid: TemporalGrid, level: usize) -> TemporalGrid {
    (0..level).fold(grid, |g, _| g.refined())
}

/// Sum of a few Gaussians with complex amplitudes, well inside the window.
pub fn random_bumps(rng: &mut impl Rng, grid: TemporalGrid, m: usize) -> Result<Signal> {
    let bumps: Vec<(f64, f64, C64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.0..6.0),
                rng.random_range(0.5..1.5),
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    Signal::from_fn(grid, m, |t, c| {
        bumps
            .iter()
            .map(|(center, width, a)| a * (-((t - center - 0.3 * c as f64) / width).powi(2)).exp())
            .sum()
    })
}

fn spectral_grid(level: usize, rho: f64) -> Result<TemporalGrid> {
    // far enough left that the weighted bumps vanish at the window start
    Ok(refine(TemporalGrid::new(-16.0, 1.0 / 64.0, 4096, rho)?, level))
}

fn spectral_identities(level: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut parseval, mut adjoint, mut semigroup) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let rho = rng.random_range(0.5..2.0);
        let g = spectral_grid(level, rho)?;
        let u = random_bumps(&mut rng, g, 1)?;
        let v = random_bumps(&mut rng, g, 1)?;
        u.check_resolved()?;

        let norm = weighted_norm(&u);
        parseval = parseval.max((forward(&u, DEFAULT_PAD)?.l2_norm() - norm).abs() / norm);

        let du = apply_multiplier(&u, |xi| derivative_symbol(xi, rho))?;
        let dv = apply_multiplier(&v, |xi| derivative_symbol(xi, rho))?;
        let adj = dv.scaled(C64::new(-1.0, 0.0)).axpy(C64::new(2.0 * rho, 0.0), &v)?;
        let gap = (weighted_inner(&du, &v)? - weighted_inner(&u, &adj)?).norm();
        adjoint = adjoint.max(gap / (weighted_norm(&du) * weighted_norm(&v)));

        let twice = frac_derivative(&frac_derivative(&u, 0.5)?, 0.5)?;
        semigroup = semigroup.max(rel_error(&twice, &frac_derivative(&u, 1.0)?)?);
    }
    Ok(vec![
        CheckRow::new("Parseval |Lu| = |u|_rho, worst relative gap", parseval, Relation::Below, 1e-10),
        CheckRow::new("adjoint identity d* = -d + 2 rho, worst relative gap", adjoint, Relation::Below, 1e-8),
        CheckRow::new("semigroup d^{1/2} d^{1/2} = d, worst relative error", semigroup, Relation::Below, 1e-9),
    ])
}

fn positivity(level: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let rhos = [0.5, 1.0, 2.0];
    let mut floor_gap = f64::INFINITY;
    let mut nonvanishing = f64::INFINITY;
    for rho in rhos {
        let engine = SpectralEngine::new(spectral_grid(level, rho)?, DEFAULT_PAD)?;
        for k in 0..engine.size() {
            nonvanishing = nonvanishing.min(derivative_symbol(engine.freq(k), rho).norm() / rho);
        }
    }
    rows.push(CheckRow::new("min |i xi + rho| / rho over the frequency grid", nonvanishing, Relation::AtLeast, 1.0 - 1e-12));
    for alpha in [0.25, 0.5, 0.75, 1.0] {
        let order = FractionalOrder::new(alpha)?;
        let mut worst_ratio = 0.0f64;
        for rho in rhos {
            let g = spectral_grid(level, rho)?;
            let engine = SpectralEngine::new(g, DEFAULT_PAD)?;
            let floor = rho.powf(alpha);
            for k in 0..engine.size() {
                floor_gap = floor_gap.min(order.symbol(engine.freq(k), rho).re - floor);
            }
            for trial in 0..10 {
                let u = if trial == 0 {
                    // nearly constant over the weight's scale: the extremal direction
                    Signal::scalar_fn(g, |t| (-(t / 12.0).powi(2)).exp() * f64::from(t >= 0.0))?
                } else {
                    random_bumps(&mut rng, g, 1)?
                };
                let ratio = weighted_norm(&frac_derivative(&u, -alpha)?) / weighted_norm(&u);
                worst_ratio = worst_ratio.max(ratio * rho.powf(alpha));
            }
        }
        rows.push(CheckRow::new(
            format!("|d^-{alpha} u| / (rho^-{alpha} |u|), worst probe"),
            worst_ratio,
            Relation::AtMost,
            1.0 + 1e-9,
        ));
    }
    rows.insert(1, CheckRow::new("min Re (i xi + rho)^alpha - rho^alpha", floor_gap, Relation::AtLeast, -1e-12));
    Ok(rows)
}

fn oracle_equivalence(level: usize) -> Result<Vec<CheckRow>> {
    let base = refine(TemporalGrid::new(-2.0, 1.0 / 128.0, 4096, 1.0)?, level);
    let bump = |g| Signal::scalar_fn(g, |t| (-(t - 3.0) * (t - 3.0)).exp());
    let mut rows = Vec::new();
    for alpha in [0.25, 0.5, 1.0] {
        let errors: Vec<f64> = [base, base.refined()]
            .into_iter()
            .map(|g| {
                let u = bump(g)?;
                rel_error(&rl_integral(&u, alpha)?, &frac_derivative(&u, -alpha)?)
            })
            .collect::<Result<_>>()?;
        rows.push(CheckRow::new(
            format!("Riemann-Liouville vs spectral, alpha = {alpha}"),
            errors[0],
            Relation::Below,
            1e-4,
        ));
        rows.push(CheckRow::new(
            format!("  error ratio after halving dt, alpha = {alpha}"),
            errors[1] / errors[0],
            Relation::Below,
            1.0,
        ));
    }
    let u = bump(base)?;
    let singular = rel_error(&half_derivative_singular(&u)?, &frac_derivative(&u, 0.5)?)?;
    rows.push(CheckRow::new("singular-integral d^{1/2} vs spectral", singular, Relation::Below, 1e-3));
    Ok(rows)
}

fn kernel_identity() -> Result<Vec<CheckRow>> {
    [(1.0, 0.25), (4.0, 1.0), (2.0, 2.0)]
        .into_iter()
        .map(|(rho, rho0)| {
            let value = shift_commutator_kernel_integral(rho, rho0)?;
            Ok(CheckRow::near(
                format!("kernel integral (rho, rho0) = ({rho}, {rho0}) vs sqrt(rho) - sqrt(rho0)"),
                value,
                rho.sqrt() - f64::sqrt(rho0),
                1e-6,
            ))
        })
        .collect()
}

fn commutator_grid(level: usize, rho: f64) -> Result<TemporalGrid> {
    Ok(refine(TemporalGrid::new(-8.0, 1.0 / 32.0, 1024, rho)?, level))
}

fn commutator_behavior(level: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let g = commutator_grid(level, 1.0)?;
    let mut rows = Vec::new();
    let kernel = Profile::ExpKernel { kappa: 1.0, rate: 1.0 };
    let commuting = [
        ("constant", MaterialLaw::scalar(2.5)),
        ("convolution", MaterialLaw::convolution(g, kernel, PointOp::identity(), 1.0)?),
    ];
    for (name, law) in commuting {
        // probes stay below a quarter of Nyquist, where the sampled symbol is faithful
        let fit = estimate_commutator_bound(&law, g, 1, 40, seed)?;
        rows.push(CheckRow::new(format!("{name} N: largest |[d^{{1/2}}, N]u| / |u| over probes"), fit.max_ratio, Relation::AtMost, 1e-7));
        rows.push(CheckRow::new(format!("{name} N: fitted c_tilde + d"), fit.c_tilde + fit.d, Relation::AtMost, 1e-7));
        let full = commutator_norm(&law, g, 1, 100, seed)?;
        rows.push(CheckRow::info(format!("{name} N: power-iteration norm on the full grid"), full.norm));
    }

    let arctan = Profile::Arctan {
        offset: 0.0,
        amplitude: 1.0,
        center: 0.0,
        scale: 1.0,
    };
    let mut n1 = None;
    for rho in [1.0, 2.0, 4.0] {
        let g = commutator_grid(level, rho)?;
        let law = MaterialLaw::multiplication(g, arctan.clone(), PointOp::identity())?;
        let est = commutator_norm(&law, g, 1, 200, seed)?;
        if !est.converged {
            return Err(Error::Solver {
                iterations: est.iterations,
                residual: f64::NAN,
                trace: vec![],
            });
        }
        let base = *n1.get_or_insert(est.norm);
        let bound = (base + 2.0 * law.sup_norm() * (rho.sqrt() - 1.0)) * 1.1;
        rows.push(CheckRow::new(format!("arctan commutator norm at rho = {rho}"), est.norm, Relation::AtMost, bound));
    }

    let tanh = Profile::Tanh {
        offset: 0.0,
        amplitude: 1.0,
        center: 0.0,
        width: 1.0,
    };
    let mut fits = Vec::new();
    let mut g = commutator_grid(level, 1.0)?;
    for _ in 0..3 {
        let law = MaterialLaw::multiplication(g, tanh.clone(), PointOp::identity())?;
        fits.push(estimate_commutator_bound(&law, g, 1, 40, seed)?);
        g = g.refined();
    }
    rows.push(CheckRow::new("tanh fitted c_tilde at baseline", fits[0].c_tilde, Relation::Below, 0.1));
    for (i, w) in fits.windows(2).enumerate() {
        rows.push(CheckRow::new(
            format!("  tanh c_tilde change, refinement {} -> {}", i, i + 1),
            w[1].c_tilde - w[0].c_tilde,
            Relation::AtMost,
            0.0,
        ));
        rows.push(CheckRow::new(format!("  tanh d ratio, refinement {} -> {}", i, i + 1), w[1].d / w[0].d, Relation::AtMost, 1.1));
    }

    let jump = Profile::Jump {
        low: 0.0,
        high: 1.0,
        at: 0.0,
    };
    let law = MaterialLaw::multiplication(commutator_grid(level, 1.0)?, jump, PointOp::identity())?;
    let zacher = check_frac_sobolev_condition(&law, 0.5)?;
    rows.push(CheckRow::flag("jump law: fractional Sobolev integral flagged divergent", zacher.diverged));
    Ok(rows)
}

fn manufactured_error(spec: &ScenarioSpec, scheme: Scheme) -> Result<f64> {
    let problem = spec.build()?;
    let exact = spec
        .manufactured_u()?
        .ok_or_else(|| Error::Parameter("scenario has no manufactured solution".into()))?;
    rel_error(&solve_time_stepping(&problem, scheme)?.u, &exact)
}

fn solver_correctness(level: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let heat = ScenarioSpec::heat().at_level(level);
    let (n_t, n_x) = (heat.n_t, heat.n_x);
    let e0 = manufactured_error(&heat, Scheme::ImplicitEuler)?;
    rows.push(CheckRow::new(format!("heat manufactured error at ({n_t}, {n_x})"), e0, Relation::Below, 1e-2));
    let e1 = manufactured_error(&heat.clone().with_resolution(2 * n_t, n_x), Scheme::ImplicitEuler)?;
    rows.push(CheckRow::near("implicit Euler observed order", (e0 / e1).log2(), 1.0, 0.2));
    let c0 = manufactured_error(&heat.clone().with_resolution(n_t / 2, n_x), Scheme::CrankNicolson)?;
    let c1 = manufactured_error(&heat, Scheme::CrankNicolson)?;
    rows.push(CheckRow::new("Crank-Nicolson observed order", (c0 / c1).log2(), Relation::Above, 1.7));

    let scenarios = [
        ("heat", ScenarioSpec::heat()),
        ("heat_tanh", ScenarioSpec::heat_tanh()),
        ("heat_jump", ScenarioSpec::heat_jump()),
        ("integro", ScenarioSpec::integro()),
        ("maxwell", ScenarioSpec::maxwell()),
    ];
    for (name, spec) in scenarios {
        let problem = spec.at_level(level).build()?;
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson, Scheme::Frequency] {
            let result = match scheme {
                Scheme::Frequency if !problem.is_autonomous() => continue,
                Scheme::Frequency => solve_frequency(&problem)?,
                _ => solve_time_stepping(&problem, scheme)?,
            };
            rows.push(CheckRow::new(format!("residual, {name}, {scheme:?}"), result.residual, Relation::Below, 1e-8));
        }
    }

    let problem = ScenarioSpec::heat().at_level(level).with_resolution(n_t, n_x / 4).build()?;
    let grid = *problem.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut leakage = 0.0f64;
    for _ in 0..20 {
        let start = rng.random_range(0.5..8.0);
        let shape: Vec<f64> = (0..problem.m0()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = Signal::from_fn(grid, problem.m0(), |t, c| {
            C64::new(if t >= start && t <= start + 1.0 { shape[c] * (t - start).sin() } else { 0.0 }, 0.0)
        })?;
        let p = problem.with_data(f, Signal::zeros(grid, problem.m1()))?;
        let u = solve_time_stepping(&p, Scheme::ImplicitEuler)?.u;
        leakage = leakage.max(weighted_norm(&u.truncated_after(start - 1e-9)) / weighted_norm(&u));
    }
    rows.push(CheckRow::new("causality: solution norm before the forcing starts", leakage, Relation::Below, 1e-8));

    let problem = heat.build()?;
    let exact = heat.manufactured_u()?.expect("heat has a manufactured solution");
    let stepped = solve_time_stepping(&problem, Scheme::ImplicitEuler)?;
    let spectral = solve_frequency(&problem)?;
    let mutual = rel_error(&stepped.u, &spectral.u)?;
    rows.push(CheckRow::new(
        "stepping vs frequency gap over the manufactured error",
        mutual / rel_error(&stepped.u, &exact)?,
        Relation::Below,
        3.0,
    ));
    Ok(rows)
}

fn maximal_regularity(level: usize) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let mut ratio_of = std::collections::BTreeMap::new();
    let scenarios = [
        ("heat", ScenarioSpec::heat(), true),
        ("heat_tanh", ScenarioSpec::heat_tanh(), true),
        ("integro", ScenarioSpec::integro(), true),
        ("maxwell", ScenarioSpec::maxwell(), true),
        ("heat_jump", ScenarioSpec::heat_jump(), false),
    ];
    for (name, spec, compliant) in scenarios {
        let report = refinement_study(&spec.at_level(level), 3, Scheme::ImplicitEuler)?;
        let ratio = report.kappa_ratio.unwrap_or(f64::INFINITY);
        ratio_of.insert(name, ratio);
        if !compliant {
            continue;
        }
        let finite = report.flags.get("norms_finite").copied().unwrap_or(false);
        rows.push(CheckRow::flag(format!("{name}: all four norms finite at every level"), finite));
        let interp = report.flags.get("interpolation").copied().unwrap_or(false);
        rows.push(CheckRow::flag(format!("{name}: |u|_{{1/2}}^2 <= |u|_1 |u|_0 at every level"), interp));
        rows.push(CheckRow::new(format!("{name}: kappa max/min over 3 levels"), ratio, Relation::Below, STABILITY_FACTOR));
    }
    rows.push(CheckRow::new(
        "heat_jump kappa spread over the heat_tanh spread",
        ratio_of["heat_jump"] / ratio_of["heat_tanh"],
        Relation::Above,
        1.0,
    ));
    Ok(rows)
}

fn regularity_phenomenon(level: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let cases = [
        ("smooth f", ScenarioSpec::heat().with_forcing(Forcing::Smooth)),
        ("rough f", ScenarioSpec::heat().with_forcing(Forcing::Rough { seed, until: 5.0 })),
    ];
    for (name, spec) in cases {
        let report = phenomenon_probe(&spec.at_level(level), 3, Scheme::ImplicitEuler)?;
        let spread = |r: &[f64]| r.iter().map(|x| x.max(1.0 / x)).fold(1.0, f64::max);
        rows.push(CheckRow::new(
            format!("{name}: |Cu|_{{1/2}} largest change factor vs level 0"),
            spread(&report.cu_half_ratios),
            Relation::AtMost,
            STABILITY_FACTOR,
        ));
        rows.push(CheckRow::new(
            format!("{name}: |v|_{{1/2}} largest change factor vs level 0"),
            spread(&report.v_half_ratios),
            Relation::AtMost,
            STABILITY_FACTOR,
        ));
        rows.push(CheckRow::info(format!("{name}: |Cu|_1 growth finest/coarsest"), report.cu_1_growth));
    }
    Ok(rows)
}

/// Largest nonnegative `x` with `x^ell = P(x)`, by scanning down from a
/// point where `x^ell > P(x)` and bisecting the first sign change.
pub fn largest_root_oracle(coeffs: &[f64], ell: u32) -> Option<f64> {
    let q = |x: f64| x.powi(ell as i32) - coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a);
    // beyond 1 + sum |a_i| the power dominates
    let hi = 2.0 + coeffs.iter().map(|a| a.abs()).sum::<f64>();
    let steps = 20_000;
    let h = hi / steps as f64;
    for i in (0..steps).rev() {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        if q(a) <= 0.0 {
            let (mut lo, mut up) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + up);
                if q(mid) <= 0.0 {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            return Some(lo);
        }
    }
    None
}

fn root_bound(seed: u64) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut violations, mut worst) = (0usize, f64::NEG_INFINITY);
    for _ in 0..1000 {
        let k = rng.random_range(0..4usize);
        let mut coeffs: Vec<f64> = (0..=k).map(|_| rng.random_range(-5.0..5.0)).collect();
        if coeffs[k] == 0.0 {
            coeffs[k] = 1.0;
        }
        let ell = rng.random_range(k as u32 + 1..k as u32 + 5);
        let bound = polynomial_root_bound(&coeffs, ell)?;
        if let Some(root) = largest_root_oracle(&coeffs, ell) {
            worst = worst.max(root - bound);
            if root > bound + 1e-9 {
                violations += 1;
            }
        }
    }
    Ok(vec![
        CheckRow::new("violations over 1000 random polynomials", violations as f64, Relation::AtMost, 0.0),
        CheckRow::info("largest root minus bound", worst),
    ])
}

fn admissibility(seed: u64) -> Result<Vec<CheckRow>> {
    let g = TemporalGrid::new(0.0, 1.0 / 64.0, 4096, 1.0)?;
    let kernel = Profile::ExpKernel { kappa: 1.0, rate: 1.0 };
    let scalar = MaterialLaw::convolution(g, kernel.clone(), PointOp::identity(), 0.0)?;
    let d = check_admissible(&scalar, 0.0)?;
    let mut rows = vec![CheckRow::near("admissibility constant d of e^{-t}", d.d, 0.0, 1e-6)];
    let skew = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
    let matrix = MaterialLaw::convolution(g, kernel, PointOp::Dense(skew), 0.0)?;
    let rejected = matches!(check_admissible(&matrix, 0.0), Err(Error::Admissibility(_)));
    rows.push(CheckRow::flag("non-selfadjoint matrix kernel rejected", rejected));

    let rhos = [1.0, 2.0, 4.0];
    let c0: Vec<f64> = rhos
        .iter()
        .map(|&rho| Ok(check_wellposedness(&ScenarioSpec::integro().with_rho(rho).build()?, 12, seed)?.c0))
        .collect::<Result<_>>()?;
    let mean_r = rhos.iter().sum::<f64>() / 3.0;
    let mean_c = c0.iter().sum::<f64>() / 3.0;
    let slope = rhos.iter().zip(&c0).map(|(r, c)| (r - mean_r) * (c - mean_c)).sum::<f64>()
        / rhos.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>();
    rows.push(CheckRow::new("integro positivity constant: fitted slope in rho", slope, Relation::Above, 0.0));
    Ok(rows)
}
