//! Convergence tables, rate estimation and method comparison.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::ErrorReport;
use crate::{Method, Result, VemError};

pub const ERROR_NAMES: [&str; 4] = ["err_u", "err_div", "err_sigma", "err_sigma_n"];

/// Rows over which rates are fitted.
const RATE_WINDOW: usize = 3;

/// Least-squares slope of `log err` against `log h`.
pub fn least_squares_rate(h: &[f64], err: &[f64]) -> f64 {
    let n = h.len().min(err.len()) as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub family: String,
    pub method: Method,
    /// Sorted by decreasing `h`.
    pub rows: Vec<ErrorReport>,
    /// Per error (order of [`ERROR_NAMES`]), fitted over the last three rows.
    pub rates: [f64; 4],
}

impl ConvergenceTable {
    pub fn new(family: &str, method: Method, mut rows: Vec<ErrorReport>) -> Self {
        rows.sort_by(|a, b| b.h.total_cmp(&a.h));
        let tail = &rows[rows.len().saturating_sub(RATE_WINDOW)..];
        let h: Vec<f64> = tail.iter().map(|r| r.h).collect();
        let rates = std::array::from_fn(|k| {
            let e: Vec<f64> = tail.iter().map(|r| r.values()[k]).collect();
            least_squares_rate(&h, &e)
        });
        ConvergenceTable {
            family: family.to_string(),
            method,
            rows,
            rates,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,ndof,err_u,err_div,err_sigma,err_sigma_n\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e}",
                r.h, r.n_dof, r.err_u, r.err_div, r.err_sigma, r.err_sigma_n
            );
        }
        let [a, b, c, d] = self.rates;
        let _ = writeln!(s, "rates,,{a:.6},{b:.6},{c:.6},{d:.6}");
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// One two-column `h err` file per error, `<prefix>_<err>.dat`.
    pub fn write_dat(&self, dir: impl AsRef<Path>, prefix: &str) -> Result<Vec<PathBuf>> {
        let mut out = Vec::with_capacity(4);
        for (k, name) in ERROR_NAMES.iter().enumerate() {
            let mut s = format!("# h {name}\n");
            for r in &self.rows {
                let _ = writeln!(s, "{:.12e} {:.12e}", r.h, r.values()[k]);
            }
            let p = dir.as_ref().join(format!("{prefix}_{name}.dat"));
            std::fs::write(&p, s)?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Per-level ratios `err(D-recipe) / err(stab-free)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub h: Vec<f64>,
    pub ratios: Vec<[f64; 4]>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,ratio_u,ratio_div,ratio_sigma,ratio_sigma_n\n");
        for (h, r) in self.h.iter().zip(&self.ratios) {
            let _ = writeln!(s, "{h:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", r[0], r[1], r[2], r[3]);
        }
        s
    }
}

pub fn compare_methods(stabfree: &ConvergenceTable, drecipe: &ConvergenceTable) -> Result<Comparison> {
    if stabfree.rows.len() != drecipe.rows.len() {
        return Err(VemError::MismatchedLevels(format!(
            "{} vs {} rows",
            stabfree.rows.len(),
            drecipe.rows.len()
        )));
    }
    let mut h = Vec::with_capacity(stabfree.rows.len());
    let mut ratios = Vec::with_capacity(stabfree.rows.len());
    for (i, (s, d)) in stabfree.rows.iter().zip(&drecipe.rows).enumerate() {
        if s.n_dof != d.n_dof || s.h != d.h {
            return Err(VemError::MismatchedLevels(format!("row {i} describes different meshes")));
        }
        h.push(s.h);
        let (sv, dv) = (s.values(), d.values());
        ratios.push(std::array::from_fn(|k| if sv[k] == dv[k] { 1.0 } else { dv[k] / sv[k] }));
    }
    Ok(Comparison { h, ratios })
}
