//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixed_vem::analysis::{
    coercivity_report, compare_methods, convergence_study, Bubble, ConvergenceTable, MeshFamily,
};
use mixed_vem::local::{hourglass_vector, projection_pack, pstar, pstar_pairing, pstar_pairing_boundary};
use mixed_vem::mesh::{self, random_quadrilateral, ElementGeometry, PolygonalMesh};
use mixed_vem::system::{apply_known_fluxes, assemble};
use mixed_vem::{ExecMode, Method, Vec2};

const QUADS: usize = 100;
const QUAD_SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_quads() -> Vec<ElementGeometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(QUAD_SEED);
    (0..QUADS)
        .map(|_| ElementGeometry::from_polygon(&random_quadrilateral(&mut rng, 0.3, 0.2)).unwrap())
        .collect()
}

fn gamma_edge(g: &ElementGeometry) -> f64 {
    g.edge_lengths.iter().cloned().fold(f64::INFINITY, f64::min) / g.diameter
}

fn pairing() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_boundary: f64 = 0.0;
    let mut min_gamma = f64::INFINITY;
    for g in random_quads() {
        min_gamma = min_gamma.min(gamma_edge(&g));
        let xi = hourglass_vector(&g).unwrap();
        let pack = projection_pack(&g).unwrap();
        let p = pstar(&g).unwrap();
        worst = worst.max((pstar_pairing(&pack, &p, &xi.dofs).unwrap() - 8.0 / 3.0).abs());
        worst_boundary = worst_boundary.max((pstar_pairing_boundary(&g, &p, &xi.dofs) - 8.0 / 3.0).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && worst_boundary <= 1e-10 && min_gamma >= 0.2 && secs < 1.0,
        format!("max |pairing - 8/3| = {worst:.2e} (boundary form {worst_boundary:.2e}), min gamma_edge = {min_gamma:.3}, {secs:.3} s"),
    )
}

fn orthogonality() -> Outcome {
    let mut worst: f64 = 0.0;
    for g in random_quads() {
        let xi = hourglass_vector(&g).unwrap().dofs;
        // ξ is div-free, so (ξ, a)_E = Σ_j ξ_j |e_j| (a · M_j).
        let div: f64 = (0..4).map(|j| xi[j] * g.edge_lengths[j]).sum();
        assert!(div.abs() < 1e-12);
        let m: Vec2 = (0..4).map(|j| g.midpoints[j] * (xi[j] * g.edge_lengths[j])).sum();
        worst = worst.max(m.x.abs()).max(m.y.abs());
    }
    outcome(worst <= 1e-12, format!("max |(xi, a)_E| = {worst:.2e}"))
}

fn rectangle(rng: &mut ChaCha8Rng, rotation: f64) -> ElementGeometry {
    let (w, h) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
    let shift = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    let (s, c) = rotation.sin_cos();
    let pts: Vec<Vec2> = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)]
        .iter()
        .map(|&(x, y)| Vec2::new(c * x - s * y, s * x + c * y) + shift)
        .collect();
    ElementGeometry::from_polygon(&pts).unwrap()
}

/// `‖P·dofs(∇p_i) − e_i‖_∞`, DOFs from the midpoint value (exact when
/// `∇p_i·n` is constant on every edge).
fn reproduction(g: &ElementGeometry, member: usize) -> f64 {
    let pack = projection_pack(g).unwrap();
    let dofs: Vec<f64> = (0..4)
        .map(|j| pack.basis.gradients(g.midpoints[j])[member].dot(&g.normals[j]))
        .collect();
    let mut e = DVector::zeros(pack.basis.len());
    e[member] = 1.0;
    (pack.project(&dofs) - e).amax()
}

fn projection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(QUAD_SEED + 1);
    let mut worst: f64 = 0.0;
    let mut worst_const: f64 = 0.0;
    for g in random_quads() {
        for member in 0..2 {
            worst = worst.max(reproduction(&g, member));
        }
        let pack = projection_pack(&g).unwrap();
        for a in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(0.3, -0.7)] {
            let dofs: Vec<f64> = g.normals.iter().map(|n| a.dot(n)).collect();
            // a = a_x h ∇Re w + a_y h ∇Im w; compare coefficients divided by h.
            let c = pack.project(&dofs) / pack.basis.scale;
            let mut exact = DVector::zeros(c.len());
            exact[0] = a.x;
            exact[1] = a.y;
            worst_const = worst_const.max((c - exact).amax());
            worst_const = worst_const.max((pack.project_constant(&dofs) - a).amax());
        }
        // Quadratic members have edgewise-constant normal traces on these.
        worst = worst.max(reproduction(&rectangle(&mut rng, 0.0), 2));
        worst = worst.max(reproduction(&rectangle(&mut rng, std::f64::consts::FRAC_PI_4), 3));
    }
    outcome(
        worst <= 1e-12 && worst_const <= 1e-12,
        format!("max coefficient residual = {worst:.2e}, constants = {worst_const:.2e}"),
    )
}

fn patch_error(m: &PolygonalMesh, method: Method) -> f64 {
    let sigma = Vec2::new(1.0, 0.0);
    let sys = assemble(m, method, |_| 0.0, ExecMode::Serial).unwrap();
    let fixed: Vec<(usize, f64)> = m
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_boundary())
        .map(|(i, e)| (i, sigma.dot(&e.normal)))
        .collect();
    let sol = apply_known_fluxes(&sys, m, &fixed).unwrap().solve().unwrap();
    let mut err: f64 = 0.0;
    for (i, e) in m.edges().iter().enumerate() {
        err = err.max((sol.sigma[i] - sigma.dot(&e.normal)).abs());
    }
    // u = x up to the zero-mean gauge; the domain centroid is x = 1/2.
    for c in 0..m.n_cells() {
        let g = m.element_geometry(c).unwrap();
        err = err.max((sol.u[c] - (g.centroid.x - 0.5)).abs());
    }
    err
}

fn patch() -> Outcome {
    let meshes = [
        ("cartesian", mesh::cartesian(8).unwrap()),
        ("distorted", mesh::distorted(8, 0.1).unwrap()),
        ("rhomboidal", mesh::rhomboidal(8, 8, 0.5).unwrap()),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, m) in &meshes {
        for method in [Method::StabFree, Method::DRecipe] {
            let e = patch_error(m, method);
            worst = worst.max(e);
            parts.push(format!("{name}/{} {e:.1e}", method.name()));
        }
    }
    outcome(worst <= 1e-10, parts.join(", "))
}

fn rates_in(t: &ConvergenceTable, lo: f64, hi: f64) -> bool {
    t.rates.iter().all(|r| (lo..=hi).contains(r))
}

fn fmt_rates(t: &ConvergenceTable) -> String {
    let r = t.rates;
    format!("{} [{:.3} {:.3} {:.3} {:.3}]", t.family, r[0], r[1], r[2], r[3])
}

fn quad_families() -> [MeshFamily; 3] {
    [
        MeshFamily::Cartesian,
        MeshFamily::ConvexConcave { delta: 0.2 },
        MeshFamily::Distorted { amplitude: 0.1 },
    ]
}

const LEVELS: [usize; 4] = [8, 16, 32, 64];
const RANDOM_LEVELS: [usize; 3] = [64, 256, 1024];
const RANDOM: MeshFamily = MeshFamily::Random { lloyd_iters: 20, seed: 0 };
const RHOMBOIDAL: MeshFamily = MeshFamily::Rhomboidal {
    nx: 4,
    ny: 4,
    shear: 0.5,
    alpha: 2,
};
const STEPS: [usize; 5] = [0, 1, 2, 3, 4];

fn convergence() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for fam in quad_families() {
        let table = convergence_study(&fam, &LEVELS, Method::StabFree, &Bubble, ExecMode::Parallel).unwrap();
        pass &= rates_in(&table, 0.9, 1.1);
        parts.push(fmt_rates(&table));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(pass && secs < 60.0, format!("rates (u div sigma sigma_n): {}; {secs:.1} s", parts.join(", ")))
}

fn random_meshes() -> Outcome {
    let table = convergence_study(&RANDOM, &RANDOM_LEVELS, Method::StabFree, &Bubble, ExecMode::Parallel).unwrap();
    outcome(rates_in(&table, 0.8, 1.2), format!("rates (u div sigma sigma_n): {}", fmt_rates(&table)))
}

fn comparison() -> Outcome {
    let mut pass = true;
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut div_dev: f64 = 0.0;
    let families: Vec<(MeshFamily, &[usize])> = quad_families()
        .into_iter()
        .map(|f| (f, &LEVELS[..]))
        .chain([(RHOMBOIDAL, &STEPS[..])])
        .collect();
    for (fam, levels) in &families {
        let sf = convergence_study(fam, levels, Method::StabFree, &Bubble, ExecMode::Parallel).unwrap();
        let dr = convergence_study(fam, levels, Method::DRecipe, &Bubble, ExecMode::Parallel).unwrap();
        let cmp = compare_methods(&sf, &dr).unwrap();
        for r in &cmp.ratios {
            for k in [0, 2] {
                range = (range.0.min(r[k]), range.1.max(r[k]));
                pass &= (0.5..=2.0).contains(&r[k]);
            }
            div_dev = div_dev.max((r[1] - 1.0).abs());
        }
    }
    pass &= div_dev <= 1e-10;
    outcome(
        pass,
        format!("err_u/err_sigma ratios in [{:.3}, {:.3}], max |err_div ratio - 1| = {div_dev:.1e}", range.0, range.1),
    )
}

fn anisotropic() -> Outcome {
    let sf = convergence_study(&RHOMBOIDAL, &STEPS, Method::StabFree, &Bubble, ExecMode::Parallel).unwrap();
    let dr = convergence_study(&RHOMBOIDAL, &STEPS, Method::DRecipe, &Bubble, ExecMode::Parallel).unwrap();
    let eu = |t: &ConvergenceTable| t.rows.iter().map(|r| r.err_u).collect::<Vec<_>>();
    let (a, b) = (eu(&sf), eu(&dr));
    let sf_decreasing = a.windows(2).all(|w| w[1] < w[0]);
    let dr_stalls = b.windows(2).any(|w| w[1] >= w[0]);
    let show = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ");
    outcome(
        sf_decreasing && dr_stalls,
        format!(
            "stabfree err_u {} (strictly decreasing: {sf_decreasing}); drecipe err_u {} (stalls: {dr_stalls})",
            show(&a),
            show(&b)
        ),
    )
}

fn coercivity() -> Outcome {
    let mut min = f64::INFINITY;
    let mut scanned = 0;
    let mut scan = |m: PolygonalMesh| {
        let r = coercivity_report(&m, ExecMode::Parallel).unwrap();
        scanned += r.n_quads;
        min = min.min(r.min_quotient);
    };
    for fam in quad_families() {
        for &n in &LEVELS {
            scan(fam.build(n).unwrap());
        }
    }
    for &s in &STEPS {
        scan(RHOMBOIDAL.build(s).unwrap());
    }
    for &n in &RANDOM_LEVELS {
        scan(RANDOM.build(n).unwrap());
    }
    outcome(min > 1e-3, format!("{scanned} quadrilaterals, min surrogate = {min:.4}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("pairing identity", pairing),
        ("hourglass orthogonality", orthogonality),
        ("projection reproduction", projection),
        ("patch test", patch),
        ("convergence on quadrilateral families", convergence),
        ("random polygonal meshes", random_meshes),
        ("method comparison", comparison),
        ("anisotropic stress test", anisotropic),
        ("kernel coercivity", coercivity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {tag} {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
