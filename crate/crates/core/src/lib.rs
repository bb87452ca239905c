//! Lowest-order mixed virtual element discretization of `-div σ = f, σ = ∇u`
//! on polygonal meshes, with a stabilization-free local form built on the
//! L² projection onto gradients of harmonic polynomials, and the classical
//! D-recipe-stabilized form as a baseline.
//!
//! Pipeline: [`mesh`] → [`polybasis`] → [`local`] → [`system`] → [`analysis`].

pub mod analysis;
pub mod cli;
pub mod error;
pub mod exec;
pub mod local;
pub mod mesh;
pub mod polybasis;
pub mod system;

pub use error::{Result, VemError};
pub use exec::ExecMode;

/// 2D point / vector type used throughout.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Choice of local bilinear form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Projection onto gradients of harmonic polynomials, no stabilization.
    StabFree,
    /// Constant projection plus diagonal D-recipe stabilization.
    DRecipe,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::StabFree => "stabfree",
            Method::DRecipe => "drecipe",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "stabfree" | "stab-free" => Ok(Method::StabFree),
            "drecipe" | "d-recipe" => Ok(Method::DRecipe),
            other => Err(format!("unknown method `{other}` (expected stabfree|drecipe)")),
        }
    }
}
