//! Preset problems: divergence-form heat, an integro-differential variant
//! with a memory kernel, and the eddy current approximation of Maxwell's
//! equations.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::coefficients::{MaterialLaw, PointOp, Profile};
use crate::diagnostics::ProblemFamily;
use crate::solver::{EvoProblem, Laws};
use crate::spatial::{Boundary, Site, SpatialComplex};
use crate::weighted_space::{Signal, TemporalGrid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// `d/dt u - div a(t) grad u = f`
    Heat,
    /// `d/dt (1 + k*) u + C* N11^{-1} C u = f`
    Integro,
    /// `d/dt mu H + curl0 sigma^{-1} curl H = K + curl0 sigma^{-1} J`
    Maxwell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Forcing {
    /// Right-hand side of a known heat solution `u = S(x) t^2 e^{-t}`.
    Manufactured,
    /// `S(x) t^2 e^{-t}` in both blocks.
    Smooth,
    /// I.i.d. normal values at every node of `[t0, until)`, zero after: in
    /// `L2` but not in `H^{1/2}` uniformly in the grid.
    Rough { seed: u64, until: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub rho: f64,
    pub t0: f64,
    pub t_end: f64,
    pub n_t: usize,
    pub n_x: usize,
    pub dim: usize,
    pub boundary: Boundary,
    /// Scalar time profile of `N11` (inverse conductivity for heat, sigma
    /// for Maxwell).
    pub n11: Profile,
    /// `M00` scale (`mu` for Maxwell).
    pub mu: f64,
    /// Memory kernel of the integro scenario.
    pub kernel: Option<Profile>,
    pub forcing: Forcing,
}

fn smooth_time(t: f64) -> f64 {
    if t > 0.0 {
        t * t * (-t).exp()
    } else {
        0.0
    }
}

fn smooth_time_derivative(t: f64) -> f64 {
    if t > 0.0 {
        (2.0 * t - t * t) * (-t).exp()
    } else {
        0.0
    }
}

/// Product of sines over the active axes, tilted by the site orientation
/// so vector fields are not parallel to one axis.
fn spatial_profile(site: &Site, dim: usize) -> f64 {
    match site.axis {
        None => (0..dim).map(|a| (PI * site.pos[a]).sin()).product(),
        Some(a) => {
            let weight = [1.0, 0.5, -0.25][a];
            let others = (0..dim.max(1)).filter(|&b| b != a).map(|b| (PI * site.pos[b]).sin()).product::<f64>();
            weight * others
        }
    }
}

impl ScenarioSpec {
    /// 1D heat with the manufactured solution on `[0, 15]`.
    pub fn heat() -> Self {
        Self {
            kind: ScenarioKind::Heat,
            rho: 1.0,
            t0: 0.0,
            t_end: 15.0,
            n_t: 256,
            n_x: 64,
            dim: 1,
            boundary: Boundary::DirichletOnU,
            n11: Profile::constant(1.0),
            mu: 1.0,
            kernel: None,
            forcing: Forcing::Manufactured,
        }
    }

    /// Heat with a smoothly switching conductivity.
    pub fn heat_tanh() -> Self {
        Self {
            n11: Profile::Tanh {
                offset: 1.5,
                amplitude: 0.5,
                center: 3.0,
                width: 1.0,
            },
            ..Self::heat()
        }
    }

    /// Heat whose conductivity jumps in time.
    pub fn heat_jump() -> Self {
        Self {
            n11: Profile::Jump {
                low: 1.0,
                high: 2.0,
                at: 2.0,
            },
            ..Self::heat()
        }
    }

    pub fn integro() -> Self {
        Self {
            kind: ScenarioKind::Integro,
            n11: Profile::constant(10.0),
            kernel: Some(Profile::ExpKernel { kappa: 0.5, rate: 1.0 }),
            forcing: Forcing::Smooth,
            ..Self::heat()
        }
    }

    /// Eddy currents on the unit cube, `8^3` cells.
    pub fn maxwell() -> Self {
        Self {
            kind: ScenarioKind::Maxwell,
            rho: 1.0,
            t0: 0.0,
            t_end: 12.0,
            n_t: 64,
            n_x: 8,
            dim: 3,
            boundary: Boundary::DirichletOnU,
            n11: Profile::Tanh {
                offset: 1.0,
                amplitude: 0.5,
                center: 3.0,
                width: 1.0,
            },
            mu: 1.0,
            kernel: None,
            forcing: Forcing::Smooth,
        }
    }

    pub fn with_forcing(self, forcing: Forcing) -> Self {
        Self { forcing, ..self }
    }

    pub fn with_resolution(self, n_t: usize, n_x: usize) -> Self {
        Self { n_t, n_x, ..self }
    }

    pub fn with_rho(self, rho: f64) -> Self {
        Self { rho, ..self }
    }

    /// Dyadic refinement; the Maxwell mesh stays fixed.
    pub fn at_level(&self, level: usize) -> Self {
        let scale = 1usize << level;
        Self {
            n_t: self.n_t * scale,
            n_x: if self.kind == ScenarioKind::Maxwell { self.n_x } else { self.n_x * scale },
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("rho", self.rho), ("mu", self.mu), ("t_end - t0", self.t_end - self.t0)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_t < 2 || self.n_x < 3 {
            return Err(Error::Parameter(format!("grid too small: n_t = {}, n_x = {}", self.n_t, self.n_x)));
        }
        match self.kind {
            ScenarioKind::Maxwell if self.dim != 3 => {
                return Err(Error::Parameter(format!("maxwell needs dim = 3, got {}", self.dim)))
            }
            _ if !(1..=3).contains(&self.dim) => return Err(Error::Parameter(format!("dim must be 1, 2 or 3, got {}", self.dim))),
            ScenarioKind::Integro if self.kernel.is_none() => {
                return Err(Error::Parameter("integro scenario needs a kernel".into()))
            }
            _ => {}
        }
        if self.forcing == Forcing::Manufactured && self.kind != ScenarioKind::Heat {
            return Err(Error::Parameter("manufactured forcing exists for heat only".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TemporalGrid> {
        TemporalGrid::over(self.t0, self.t_end, self.n_t, self.rho)
    }

    pub fn complex(&self) -> Result<SpatialComplex> {
        match self.kind {
            ScenarioKind::Maxwell => Ok(SpatialComplex::build_curl_pair(self.n_x)?.dual()),
            _ => SpatialComplex::build_grad_pair(self.n_x, self.dim, self.boundary),
        }
    }

    pub fn laws(&self, grid: TemporalGrid) -> Result<Laws> {
        let n11 = match &self.n11 {
            Profile::Constant { value } => MaterialLaw::scalar(*value),
            p => MaterialLaw::multiplication(grid, p.clone(), PointOp::identity())?,
        };
        let m00 = match (&self.kind, &self.kernel) {
            (ScenarioKind::Integro, Some(k)) => MaterialLaw::sum(vec![
                MaterialLaw::scalar(self.mu),
                MaterialLaw::convolution(grid, k.clone(), PointOp::identity(), 0.0)?,
            ]),
            _ => MaterialLaw::scalar(self.mu),
        };
        Ok(Laws {
            m00,
            n11,
            ..Laws::heat()
        })
    }

    pub fn build(&self) -> Result<EvoProblem> {
        self.validate()?;
        let grid = self.grid()?;
        let complex = self.complex()?;
        let laws = self.laws(grid)?;
        let (f, g) = self.data(grid, &complex)?;
        EvoProblem::new(complex, laws, f, g)
    }

    fn data(&self, grid: TemporalGrid, cx: &SpatialComplex) -> Result<(Signal, Signal)> {
        let u_shape: Vec<f64> = cx.u_sites().iter().map(|s| spatial_profile(s, self.dim)).collect();
        let v_shape: Vec<f64> = cx.v_sites().iter().map(|s| spatial_profile(s, self.dim)).collect();
        let (m0, m1) = (cx.m0(), cx.m1());
        match &self.forcing {
            Forcing::Manufactured => {
                let lap = self.dim as f64 * PI * PI;
                let n11 = self.n11.clone();
                let f = Signal::from_fn(grid, m0, |t, c| {
                    let a = 1.0 / n11.value(t);
                    C64::new(u_shape[c] * (smooth_time_derivative(t) + a * lap * smooth_time(t)), 0.0)
                })?;
                Ok((f, Signal::zeros(grid, m1)))
            }
            Forcing::Smooth => {
                let f = Signal::from_fn(grid, m0, |t, c| C64::new(u_shape[c] * smooth_time(t), 0.0))?;
                let g = match self.kind {
                    // the source current enters as g = -J
                    ScenarioKind::Maxwell => Signal::from_fn(grid, m1, |t, c| C64::new(-v_shape[c] * smooth_time(t), 0.0))?,
                    _ => Signal::zeros(grid, m1),
                };
                Ok((f, g))
            }
            Forcing::Rough { seed, until } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut values = Vec::with_capacity(grid.n * m0);
                for j in 0..grid.n {
                    let active = grid.time(j) < *until;
                    for _ in 0..m0 {
                        let x: f64 = StandardNormal.sample(&mut rng);
                        values.push(C64::new(if active { x } else { 0.0 }, 0.0));
                    }
                }
                Ok((Signal::from_values(grid, m0, values)?, Signal::zeros(grid, m1)))
            }
        }
    }

    /// The exact solution behind [`Forcing::Manufactured`].
    pub fn manufactured_u(&self) -> Result<Option<Signal>> {
        if self.forcing != Forcing::Manufactured || self.kind != ScenarioKind::Heat {
            return Ok(None);
        }
        let grid = self.grid()?;
        let cx = self.complex()?;
        let shape: Vec<f64> = cx.u_sites().iter().map(|s| spatial_profile(s, self.dim)).collect();
        Signal::from_fn(grid, cx.m0(), |t, c| C64::new(shape[c] * smooth_time(t), 0.0)).map(Some)
    }
}

impl ProblemFamily for ScenarioSpec {
    fn problem(&self, level: usize) -> Result<EvoProblem> {
        self.at_level(level).build()
    }

    fn resolution(&self, level: usize) -> (usize, usize) {
        let s = self.at_level(level);
        (s.n_t, s.n_x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build_with_consistent_sizes() {
        for spec in [ScenarioSpec::heat(), ScenarioSpec::heat_tanh(), ScenarioSpec::integro()] {
            let p = spec.build().unwrap();
            assert_eq!((p.m0(), p.m1()), (63, 64));
            assert_eq!(p.grid().n, 256);
        }
        let p = ScenarioSpec::maxwell().build().unwrap();
        assert_eq!((p.m0(), p.m1()), (1728, 1176));
        assert!(!p.g().is_zero());
    }

    #[test]
    fn validation_names_the_field() {
        let bad = ScenarioSpec { rho: -1.0, ..ScenarioSpec::heat() };
        assert!(bad.build().unwrap_err().to_string().contains("rho"));
        let bad = ScenarioSpec { dim: 2, ..ScenarioSpec::maxwell() };
        assert!(bad.build().unwrap_err().to_string().contains("dim"));
        let bad = ScenarioSpec::integro().with_forcing(Forcing::Manufactured);
        assert!(bad.build().is_err());
    }

    #[test]
    fn levels_refine_time_and_space() {
        let s = ScenarioSpec::heat().with_resolution(64, 16);
        assert_eq!(s.resolution(2), (256, 64));
        assert_eq!(ScenarioSpec::maxwell().resolution(1), (128, 8));
    }

    #[test]
    fn rough_forcing_is_deterministic() {
        let s = ScenarioSpec::heat().with_forcing(Forcing::Rough { seed: 3, until: 4.0 });
        let a = s.build().unwrap();
        let b = s.build().unwrap();
        assert_eq!(a.f(), b.f());
        assert!(a.f().row(a.grid().nearest(5.0)).iter().all(|z| z.norm() == 0.0));
    }
}
