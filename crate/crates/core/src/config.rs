//! Tolerances and run settings shared by the solvers and the CLI.

use crate::error::{Error, Result};

pub const DEFAULT_CAP: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Stop Picard iteration when the largest coefficient change is below this.
    pub picard_tol: f64,
    pub newton_tol: f64,
    pub mc_tol: f64,
    pub max_iter: usize,
    /// Fraction by which the chart box is shrunk for the range check.
    pub box_shrink: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            picard_tol: 1e-10,
            newton_tol: 1e-12,
            mc_tol: 1e-10,
            max_iter: 200,
            box_shrink: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub chart_path: Option<String>,
    pub command: String,
    pub tol: Tolerances,
    pub cap: usize,
    pub rk4_steps: usize,
    pub output: Option<String>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            chart_path: None,
            command: String::new(),
            tol: Tolerances::default(),
            cap: DEFAULT_CAP,
            rk4_steps: 64,
            output: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.tol;
        if !(t.picard_tol > 0.0 && t.newton_tol > 0.0 && t.mc_tol > 0.0) {
            return Err(Error::InvalidChart("tolerances must be positive".into()));
        }
        if self.cap < 2 {
            return Err(Error::InvalidChart("degree cap must be at least 2".into()));
        }
        if self.rk4_steps == 0 {
            return Err(Error::InvalidChart(
                "RK4 step count must be positive".into(),
            ));
        }
        Ok(())
    }
}
