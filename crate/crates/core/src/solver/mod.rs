//! Discrete evolutionary systems
//! `(d/dt M + N + A)(u, v) = (f, g)` with `M = diag(M00, 0)` and
//! `A = [[0, -C*], [C, 0]]`.

mod frequency;
mod ops;
mod residual;
mod stepping;
mod wellposed;

pub use frequency::solve_frequency;
pub use residual::residual;
pub use stepping::solve_time_stepping;
pub use wellposed::{check_wellposedness, smallest_wellposed_rho, RhoScan, WellPosednessReport};

use serde::{Deserialize, Serialize};

use crate::coefficients::MaterialLaw;
use crate::spatial::SpatialComplex;
use crate::weighted_space::{Signal, TemporalGrid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
    Frequency,
}

impl Scheme {
    /// Implicitness weight of a one-step scheme.
    pub(crate) fn theta(self) -> f64 {
        match self {
            Scheme::CrankNicolson => 0.5,
            _ => 1.0,
        }
    }
}

/// Block coefficients of the system.
#[derive(Clone, Debug)]
pub struct Laws {
    pub m00: MaterialLaw,
    pub n00: MaterialLaw,
    pub n01: MaterialLaw,
    pub n10: MaterialLaw,
    pub n11: MaterialLaw,
}

impl Laws {
    /// `M00 = 1`, `N11 = 1`, all other blocks zero.
    pub fn heat() -> Self {
        Self {
            m00: MaterialLaw::identity(),
            n00: MaterialLaw::zero(),
            n01: MaterialLaw::zero(),
            n10: MaterialLaw::zero(),
            n11: MaterialLaw::identity(),
        }
    }

    pub(crate) fn all(&self) -> [&MaterialLaw; 5] {
        [&self.m00, &self.n00, &self.n01, &self.n10, &self.n11]
    }
}

#[derive(Clone, Debug)]
pub struct EvoProblem {
    complex: SpatialComplex,
    grid: TemporalGrid,
    laws: Laws,
    f: Signal,
    g: Signal,
}

fn check_block(law: &MaterialLaw, grid: TemporalGrid, m_in: usize, m_out: usize, name: &str) -> Result<()> {
    if law.is_zero() {
        return Ok(());
    }
    let out = law
        .apply(&Signal::zeros(grid, m_in))
        .map_err(|e| Error::Dimension(format!("{name}: {e}")))?;
    if out.m() != m_out {
        return Err(Error::Dimension(format!("{name} maps {m_in} components to {}, expected {m_out}", out.m())));
    }
    Ok(())
}

impl EvoProblem {
    pub fn new(complex: SpatialComplex, laws: Laws, f: Signal, g: Signal) -> Result<Self> {
        let grid = *f.grid();
        if !grid.compatible(g.grid()) {
            return Err(Error::Dimension("f and g live on different grids".into()));
        }
        let (m0, m1) = (complex.m0(), complex.m1());
        if f.m() != m0 || g.m() != m1 {
            return Err(Error::Dimension(format!(
                "data has ({}, {}) components, the complex needs ({m0}, {m1})",
                f.m(),
                g.m()
            )));
        }
        check_block(&laws.m00, grid, m0, m0, "M00")?;
        check_block(&laws.n00, grid, m0, m0, "N00")?;
        check_block(&laws.n01, grid, m1, m0, "N01")?;
        check_block(&laws.n10, grid, m0, m1, "N10")?;
        check_block(&laws.n11, grid, m1, m1, "N11")?;
        Ok(Self {
            complex,
            grid,
            laws,
            f,
            g,
        })
    }

    /// Same operator, new right-hand side.
    pub fn with_data(&self, f: Signal, g: Signal) -> Result<Self> {
        Self::new(self.complex.clone(), self.laws.clone(), f, g)
    }

    pub fn complex(&self) -> &SpatialComplex {
        &self.complex
    }

    pub fn grid(&self) -> &TemporalGrid {
        &self.grid
    }

    pub fn rho(&self) -> f64 {
        self.grid.rho
    }

    pub fn laws(&self) -> &Laws {
        &self.laws
    }

    pub fn f(&self) -> &Signal {
        &self.f
    }

    pub fn g(&self) -> &Signal {
        &self.g
    }

    pub fn m0(&self) -> usize {
        self.complex.m0()
    }

    pub fn m1(&self) -> usize {
        self.complex.m1()
    }

    pub fn is_autonomous(&self) -> bool {
        self.laws.all().iter().all(|l| l.is_autonomous())
    }

    /// Spatial quadrature weight shared by all degrees of freedom.
    pub fn cell_volume(&self) -> f64 {
        self.complex.cell_volume()
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub u: Signal,
    pub v: Signal,
    /// Relative residual of the block system in the solver's own
    /// discretization.
    pub residual: f64,
    pub scheme: Scheme,
    /// Largest pointwise condition number of `N11` over the grid.
    pub n11_condition: f64,
}

/// Applies `C` to every time slice.
pub fn apply_c(complex: &SpatialComplex, u: &Signal) -> Result<Signal> {
    map_rows(u, complex.m1(), |row| complex.c().matvec(row))
}

/// Applies `C*` to every time slice.
pub fn apply_cstar(complex: &SpatialComplex, v: &Signal) -> Result<Signal> {
    map_rows(v, complex.m0(), |row| complex.cstar().matvec(row))
}

fn map_rows(u: &Signal, m_out: usize, f: impl Fn(&[crate::C64]) -> Vec<crate::C64>) -> Result<Signal> {
    let mut values = Vec::with_capacity(u.n() * m_out);
    for j in 0..u.n() {
        let row = f(u.row(j));
        if row.len() != m_out {
            return Err(Error::Dimension(format!("slice has {} components, expected {m_out}", row.len())));
        }
        values.extend(row);
    }
    Signal::from_values(*u.grid(), m_out, values)
}

#[cfg(test)]
mod tests;
