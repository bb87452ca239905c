//! Command-line front end: `mesh`, `solve`, `convergence`, `diagnostics`.
//!
//! Every option can also come from a TOML file passed with `--config`; keys
//! are the long flag names with `-` replaced by `_`. Flags given on the
//! command line override the file.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::analysis::{
    coercivity_report, compare_methods, compute_errors, convergence_study, quad_diagnostics, CaseId, ConvergenceTable,
    ErrorReport, MeshFamily, ERROR_NAMES,
};
use crate::mesh::{check_regularity, read_mesh, write_mesh, PolygonalMesh};
use crate::system::assemble;
use crate::{ExecMode, Method, VemError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

const PAIRING_TOL: f64 = 1e-10;
const ORTHOGONALITY_TOL: f64 = 1e-12;
const REPRODUCTION_TOL: f64 = 1e-12;
const COERCIVITY_FLOOR: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "mvem", version, about = "Mixed virtual elements for the Poisson problem")]
pub struct Cli {
    /// TOML file providing defaults for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a mesh and write it as JSON.
    Mesh(Options),
    /// Solve one problem and report its errors.
    Solve(Options),
    /// Run a convergence study over several levels.
    Convergence(Options),
    /// Check the quadrilateral identities and the coercivity surrogate.
    Diagnostics(Options),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Cartesian,
    Convexconcave,
    Distorted,
    Random,
    Rhomboidal,
}

/// Raw options, shared by the command line and the config file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    /// Cells per side (cartesian, convexconcave, distorted).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Number of Voronoi seeds (random).
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub lloyd_iters: Option<usize>,
    /// RNG seed for random meshes and random quadrilaterals.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub shear: Option<f64>,
    #[arg(long)]
    pub alpha: Option<usize>,
    /// Anisotropic refinement step (rhomboidal).
    #[arg(long)]
    pub step: Option<usize>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub case: Option<CaseId>,
    /// Comma-separated levels: n, seed counts or steps depending on the family.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Input mesh file for `solve`.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Main output file.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Directory for per-error `.dat` files.
    #[arg(long)]
    pub dat_dir: Option<PathBuf>,
    /// Write the assembled system in Matrix Market format.
    #[arg(long)]
    pub dump_system: Option<PathBuf>,
    /// Write the solution (fluxes and cell values) as JSON.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Number of random quadrilaterals for `diagnostics`.
    #[arg(long)]
    pub quads: Option<usize>,
    /// Run both methods and report error ratios.
    #[arg(long)]
    #[serde(default)]
    pub compare: bool,
    /// Disable threading.
    #[arg(long)]
    #[serde(default)]
    pub serial: bool,
}

impl Options {
    /// `self` wins wherever it is set.
    pub fn or(self, file: Options) -> Options {
        Options {
            family: self.family.or(file.family),
            n: self.n.or(file.n),
            delta: self.delta.or(file.delta),
            amplitude: self.amplitude.or(file.amplitude),
            seeds: self.seeds.or(file.seeds),
            lloyd_iters: self.lloyd_iters.or(file.lloyd_iters),
            seed: self.seed.or(file.seed),
            nx: self.nx.or(file.nx),
            ny: self.ny.or(file.ny),
            shear: self.shear.or(file.shear),
            alpha: self.alpha.or(file.alpha),
            step: self.step.or(file.step),
            method: self.method.or(file.method),
            case: self.case.or(file.case),
            levels: self.levels.or(file.levels),
            mesh: self.mesh.or(file.mesh),
            out: self.out.or(file.out),
            dat_dir: self.dat_dir.or(file.dat_dir),
            dump_system: self.dump_system.or(file.dump_system),
            solution: self.solution.or(file.solution),
            quads: self.quads.or(file.quads),
            compare: self.compare || file.compare,
            serial: self.serial || file.serial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Mesh,
    Solve,
    Convergence,
    Diagnostics,
}

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    /// `None` only for `solve --mesh` and `diagnostics` without a family.
    pub family: Option<MeshFamily>,
    pub level: usize,
    pub levels: Vec<usize>,
    pub method: Method,
    pub case: CaseId,
    pub mesh: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub dat_dir: Option<PathBuf>,
    pub dump_system: Option<PathBuf>,
    pub solution: Option<PathBuf>,
    pub seed: u64,
    pub quads: usize,
    pub compare: bool,
    pub mode: ExecMode,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(VemError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(e) => {
                write!(f, "error: {e}")?;
                let mut src = std::error::Error::source(e);
                while let Some(s) = src {
                    write!(f, "\n  caused by: {s}")?;
                    src = s.source();
                }
                Ok(())
            }
        }
    }
}

impl From<VemError> for CliError {
    fn from(e: VemError) -> Self {
        match e {
            VemError::InvalidParameter(m) | VemError::SizeOverflow(m) => CliError::Usage(m),
            e @ (VemError::Io(_) | VemError::Json(_)) => CliError::Usage(e.to_string()),
            e => CliError::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn load_config(path: &Path) -> CliResult<Options> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn default_levels(kind: FamilyKind) -> Vec<usize> {
    match kind {
        FamilyKind::Random => vec![64, 256, 1024],
        FamilyKind::Rhomboidal => vec![0, 1, 2, 3, 4],
        _ => vec![8, 16, 32, 64],
    }
}

impl RunConfig {
    pub fn resolve(command: CommandKind, o: Options) -> CliResult<RunConfig> {
        let family = o.family.map(|kind| match kind {
            FamilyKind::Cartesian => MeshFamily::Cartesian,
            FamilyKind::Convexconcave => MeshFamily::ConvexConcave {
                delta: o.delta.unwrap_or(0.2),
            },
            FamilyKind::Distorted => MeshFamily::Distorted {
                amplitude: o.amplitude.unwrap_or(0.1),
            },
            FamilyKind::Random => MeshFamily::Random {
                lloyd_iters: o.lloyd_iters.unwrap_or(20),
                seed: o.seed.unwrap_or(0),
            },
            FamilyKind::Rhomboidal => MeshFamily::Rhomboidal {
                nx: o.nx.unwrap_or(4),
                ny: o.ny.unwrap_or(4),
                shear: o.shear.unwrap_or(0.5),
                alpha: o.alpha.unwrap_or(2),
            },
        });
        let level = match o.family {
            Some(FamilyKind::Random) => o.seeds.unwrap_or(64),
            Some(FamilyKind::Rhomboidal) => o.step.unwrap_or(0),
            _ => o.n.unwrap_or(8),
        };
        let levels = match (&o.levels, o.family) {
            (Some(l), _) => l.clone(),
            (None, Some(kind)) => default_levels(kind),
            (None, None) => Vec::new(),
        };

        match command {
            CommandKind::Mesh | CommandKind::Convergence if family.is_none() => {
                return Err(usage("--family is required"));
            }
            CommandKind::Solve if family.is_none() && o.mesh.is_none() => {
                return Err(usage("solve needs --family or --mesh"));
            }
            CommandKind::Solve if family.is_some() && o.mesh.is_some() => {
                return Err(usage("--family and --mesh are mutually exclusive"));
            }
            CommandKind::Convergence if levels.len() < 3 => {
                return Err(usage(format!("a convergence study needs at least 3 levels, got {}", levels.len())));
            }
            _ => {}
        }
        if o.compare && command != CommandKind::Convergence {
            return Err(usage("--compare only applies to convergence"));
        }
        if let Some(d) = &o.dat_dir {
            if !d.is_dir() {
                return Err(usage(format!("{} is not a directory", d.display())));
            }
        }

        Ok(RunConfig {
            command,
            family,
            level,
            levels,
            method: o.method.unwrap_or(Method::StabFree),
            case: o.case.unwrap_or_default(),
            mesh: o.mesh,
            out: o.out,
            dat_dir: o.dat_dir,
            dump_system: o.dump_system,
            solution: o.solution,
            seed: o.seed.unwrap_or(0),
            quads: o.quads.unwrap_or(100),
            compare: o.compare,
            mode: if o.serial { ExecMode::Serial } else { ExecMode::Parallel },
        })
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Reports go to `out`, errors to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let (kind, flags) = match cli.command {
        Command::Mesh(o) => (CommandKind::Mesh, o),
        Command::Solve(o) => (CommandKind::Solve, o),
        Command::Convergence(o) => (CommandKind::Convergence, o),
        Command::Diagnostics(o) => (CommandKind::Diagnostics, o),
    };
    let opts = match &cli.config {
        Some(p) => flags.or(load_config(p)?),
        None => flags,
    };
    let cfg = RunConfig::resolve(kind, opts)?;
    match cfg.command {
        CommandKind::Mesh => cmd_mesh(&cfg, out),
        CommandKind::Solve => cmd_solve(&cfg, out),
        CommandKind::Convergence => cmd_convergence(&cfg, out),
        CommandKind::Diagnostics => cmd_diagnostics(&cfg, out),
    }
}

fn build_mesh(cfg: &RunConfig) -> CliResult<PolygonalMesh> {
    match (&cfg.family, &cfg.mesh) {
        (_, Some(path)) => Ok(read_mesh(path)?),
        (Some(f), None) => Ok(f.build(cfg.level)?),
        (None, None) => Err(usage("no mesh source")),
    }
}

fn describe_mesh(mesh: &PolygonalMesh, out: &mut dyn Write) -> CliResult<()> {
    writeln!(
        out,
        "cells = {}, edges = {}, vertices = {}, h = {:.6e}",
        mesh.n_cells(),
        mesh.n_edges(),
        mesh.vertices().len(),
        mesh.max_diameter()
    )?;
    writeln!(out, "{}", check_regularity(mesh))?;
    if !mesh.reoriented_cells().is_empty() {
        writeln!(out, "reoriented cells: {}", mesh.reoriented_cells().len())?;
    }
    Ok(())
}

pub fn cmd_mesh(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let mesh = build_mesh(cfg)?;
    let path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("mesh.json"));
    write_mesh(&mesh, &path)?;
    writeln!(out, "wrote {}", path.display())?;
    describe_mesh(&mesh, out)
}

fn error_lines(r: &ErrorReport, out: &mut dyn Write) -> CliResult<()> {
    for ((name, v), abs) in ERROR_NAMES.iter().zip(r.values()).zip(r.absolute) {
        let tag = if abs { " (absolute)" } else { "" };
        writeln!(out, "{name:<12} = {v:.6e}{tag}")?;
    }
    Ok(())
}

pub fn cmd_solve(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let mesh = build_mesh(cfg)?;
    describe_mesh(&mesh, out)?;
    let case = cfg.case.case();
    let sys = assemble(&mesh, cfg.method, |x| case.f(x), cfg.mode)?;
    if let Some(p) = &cfg.dump_system {
        sys.write_matrix_market(p)?;
        writeln!(out, "wrote {}", p.display())?;
    }
    let sol = sys.solve()?;
    let report = compute_errors(&mesh, &sol, case, cfg.method, cfg.mode)?;
    writeln!(
        out,
        "method = {}, case = {}, unknowns = {}, residual = {:.3e}",
        cfg.method.name(),
        case.name(),
        sys.size(),
        sol.residual
    )?;
    error_lines(&report, out)?;
    if let Some(p) = &cfg.out {
        let table = ConvergenceTable::new("single", cfg.method, vec![report]);
        let csv = table.to_csv();
        let rows: String = csv.lines().take(2).map(|l| format!("{l}\n")).collect();
        std::fs::write(p, rows)?;
    }
    if let Some(p) = &cfg.solution {
        let v = serde_json::json!({ "sigma": sol.sigma, "u": sol.u });
        std::fs::write(p, format!("{v}\n"))?;
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

pub fn cmd_convergence(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let family = cfg.family.as_ref().ok_or_else(|| usage("--family is required"))?;
    let case = cfg.case.case();
    let methods: &[Method] = if cfg.compare {
        &[Method::StabFree, Method::DRecipe]
    } else {
        std::slice::from_ref(&cfg.method)
    };
    let mut tables = Vec::with_capacity(methods.len());
    for &m in methods {
        let t = convergence_study(family, &cfg.levels, m, case, cfg.mode)?;
        writeln!(out, "# {} {}", family.name(), m.name())?;
        out.write_all(t.to_csv().as_bytes())?;
        if let Some(p) = &cfg.out {
            let p = if cfg.compare { with_suffix(p, m.name()) } else { p.clone() };
            t.write_csv(&p)?;
        }
        if let Some(d) = &cfg.dat_dir {
            t.write_dat(d, &format!("{}_{}", family.name(), m.name()))?;
        }
        tables.push(t);
    }
    if let [sf, dr] = tables.as_slice() {
        let cmp = compare_methods(sf, dr)?;
        writeln!(out, "# ratios drecipe/stabfree")?;
        out.write_all(cmp.to_csv().as_bytes())?;
        if let Some(p) = &cfg.out {
            std::fs::write(with_suffix(p, "ratios"), cmp.to_csv())?;
        }
    }
    Ok(())
}

pub fn cmd_diagnostics(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let d = quad_diagnostics(cfg.quads, cfg.seed)?;
    writeln!(out, "quads                = {}", d.n_quads)?;
    writeln!(out, "pairing min/max      = {:.15} {:.15}", d.pairing.0, d.pairing.1)?;
    writeln!(out, "orthogonality max    = {:.3e}", d.orthogonality)?;
    writeln!(out, "reproduction max     = {:.3e}", d.projection_residual)?;
    writeln!(out, "coercivity min/max   = {:.6} {:.6}", d.coercivity.0, d.coercivity.1)?;

    let target = 8.0 / 3.0;
    let mut violations = Vec::new();
    if (d.pairing.0 - target).abs() > PAIRING_TOL || (d.pairing.1 - target).abs() > PAIRING_TOL {
        violations.push("pairing differs from 8/3");
    }
    if d.orthogonality > ORTHOGONALITY_TOL {
        violations.push("hourglass mode is not orthogonal to constants");
    }
    if d.projection_residual > REPRODUCTION_TOL {
        violations.push("projection does not reproduce harmonic gradients");
    }
    if d.coercivity.0 <= COERCIVITY_FLOOR {
        violations.push("coercivity surrogate below floor on random quadrilaterals");
    }

    if let Some(family) = &cfg.family {
        let levels = if cfg.levels.is_empty() { vec![cfg.level] } else { cfg.levels.clone() };
        for &level in &levels {
            let mesh = family.build(level)?;
            let r = coercivity_report(&mesh, cfg.mode)?;
            writeln!(
                out,
                "{} level {level}: {} quads, coercivity min = {:.6}",
                family.name(),
                r.n_quads,
                r.min_quotient
            )?;
            if r.n_quads > 0 && r.min_quotient <= COERCIVITY_FLOOR {
                violations.push("coercivity surrogate below floor on a mesh");
            }
        }
    }

    if violations.is_empty() {
        writeln!(out, "all checks passed")?;
        Ok(())
    } else {
        Err(CliError::Numerical(VemError::Domain(violations.join("; "))))
    }
}
