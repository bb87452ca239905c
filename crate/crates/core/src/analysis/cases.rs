//! Closed-form solutions of `−div σ = f`, `σ = ∇u`, `u = 0` on `∂(0,1)²`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Vec2;

pub trait ManufacturedCase: Sync {
    fn name(&self) -> &'static str;
    fn u(&self, x: Vec2) -> f64;
    fn sigma(&self, x: Vec2) -> Vec2;
    fn f(&self, x: Vec2) -> f64;
}

/// `u = x(1−x)y(1−y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bubble;

impl ManufacturedCase for Bubble {
    fn name(&self) -> &'static str {
        "bubble"
    }

    fn u(&self, x: Vec2) -> f64 {
        x.x * (1.0 - x.x) * x.y * (1.0 - x.y)
    }

    fn sigma(&self, x: Vec2) -> Vec2 {
        Vec2::new(
            (1.0 - 2.0 * x.x) * x.y * (1.0 - x.y),
            x.x * (1.0 - x.x) * (1.0 - 2.0 * x.y),
        )
    }

    fn f(&self, x: Vec2) -> f64 {
        2.0 * (x.x * (1.0 - x.x) + x.y * (1.0 - x.y))
    }
}

/// `u ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ManufacturedCase for Zero {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn u(&self, _: Vec2) -> f64 {
        0.0
    }

    fn sigma(&self, _: Vec2) -> Vec2 {
        Vec2::zeros()
    }

    fn f(&self, _: Vec2) -> f64 {
        0.0
    }
}

/// Selector for the built-in cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    #[default]
    Bubble,
    Zero,
}

impl CaseId {
    pub fn case(self) -> &'static dyn ManufacturedCase {
        match self {
            CaseId::Bubble => &Bubble,
            CaseId::Zero => &Zero,
        }
    }
}

impl FromStr for CaseId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bubble" => Ok(CaseId::Bubble),
            "zero" => Ok(CaseId::Zero),
            other => Err(format!("unknown case `{other}` (expected bubble|zero)")),
        }
    }
}

/// Largest `|−div σ − f|` and `|σ − ∇u|` over `samples` random points,
/// derivatives by central differences.
pub fn check_consistency(case: &dyn ManufacturedCase, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = Vec2::new(rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
        let div = (case.sigma(x + ex).x - case.sigma(x - ex).x + case.sigma(x + ey).y - case.sigma(x - ey).y) / (2.0 * h);
        let grad = Vec2::new(case.u(x + ex) - case.u(x - ex), case.u(x + ey) - case.u(x - ey)) / (2.0 * h);
        worst = worst.max((div + case.f(x)).abs()).max((grad - case.sigma(x)).norm());
    }
    worst
}
