//! Continuity moduli of sampled paths: sup-increments over parabolic balls,
//! the Garsia functional, and Hölder exponents.

pub mod garsia;
pub mod holder;
pub mod sup;

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

pub use garsia::{coarsen, garsia_bound, garsia_functional, GarsiaCheck};
pub use holder::{holder_fit, Axis, HolderFit, LagMoment};
pub use sup::{ball_grid, band, moment_ratio, sup_increment, MomentRatio};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusReport {
    pub p: f64,
    pub ratios: Vec<MomentRatio>,
    pub alpha_t: f64,
    pub alpha_t_se: f64,
    pub alpha_x: f64,
    pub alpha_x_se: f64,
}

impl ModulusReport {
    pub fn band(&self) -> f64 {
        band(&self.ratios)
    }

    /// `alpha_t` against `alpha_x / 2` in units of their joint standard error.
    pub fn anisotropy_z(&self) -> f64 {
        let se = (self.alpha_t_se.powi(2) + (self.alpha_x_se / 2.0).powi(2)).sqrt();
        (self.alpha_t - self.alpha_x / 2.0) / se
    }

    /// `eps,ratio,se,paths`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "eps,ratio,se,paths")?;
        for r in &self.ratios {
            writeln!(out, "{:?},{:?},{:?},{}", r.eps, r.ratio, r.se, r.paths)?;
        }
        Ok(())
    }

    /// `p,alpha_t,alpha_t_se,alpha_x,alpha_x_se,band`.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "p,alpha_t,alpha_t_se,alpha_x,alpha_x_se,band")?;
        writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?}",
            self.p,
            self.alpha_t,
            self.alpha_t_se,
            self.alpha_x,
            self.alpha_x_se,
            self.band()
        )?;
        Ok(())
    }
}
