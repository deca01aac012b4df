//! Command-line front end: `aniso-mesh <command> --config FILE [--out DIR] [--threads N]`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 validation failure,
//! 3 refinement budget exhausted.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::adapt::{complexity_study, greedy_adapt, rate_study, write_complexity_csv};
use crate::besov::{discrete_seminorm, multiscale_norms, Cylinder};
use crate::config::{AdaptKind, BesovKind, DomainSpec, ExperimentConfig};
use crate::error::{Error, Result};
use crate::mesh::{export_vtk, read_mesh, write_mesh, Partition};
use crate::nodes::classify;
use crate::polyapprox::PolyOrders;
use crate::refine::RefineStatus;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "aniso-mesh", version, about = "Anisotropic space-time prism meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `run.out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores (overrides `run.threads`).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Mesh file for validate, nodes and export.
    #[arg(long, global = true)]
    mesh: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Marked refinement with a scripted policy.
    Refine,
    /// Greedy adaptive approximation or a rate study.
    Adapt,
    /// Check the mesh invariants of a mesh file.
    Validate,
    /// Dump the classified Lagrange lattice of a mesh file.
    Nodes {
        /// Time order (default from the config, else 2).
        #[arg(long)]
        r1: Option<usize>,
        /// Space order (default from the config, else 2).
        #[arg(long)]
        r2: Option<usize>,
    },
    /// Discrete Besov seminorm or multiscale ladder of the configured function.
    Besov,
    /// Convert a mesh file.
    Export {
        #[arg(long, value_enum, default_value_t = Format::Vtk)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Vtk,
    Text,
}

/// Outcome of a command that ran to completion.
pub enum Done {
    Ok,
    Invalid,
    Budget,
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("ANISO_MESH_LOG", "error")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(Done::Ok) => EXIT_OK,
        Ok(Done::Invalid) => EXIT_INVALID,
        Ok(Done::Budget) => EXIT_BUDGET,
        Err(Error::BudgetExhausted(m)) => {
            eprintln!("error: budget exhausted: {m}");
            EXIT_BUDGET
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: Cli) -> Result<Done> {
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let threads = cli.threads.or(config.as_ref().map(|c| c.threads)).unwrap_or(0);
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let out = cli.out.clone().or(config.as_ref().map(|c| c.out.clone())).unwrap_or_else(|| PathBuf::from("out"));
    let need_config = || config.as_ref().ok_or_else(|| Error::Config("--config FILE is required".into()));
    let mesh_path = || -> Result<PathBuf> {
        if let Some(m) = &cli.mesh {
            return Ok(m.clone());
        }
        match config.as_ref().map(|c| &c.domain) {
            Some(DomainSpec::MeshFile(m)) => Ok(m.clone()),
            _ => Err(Error::Config("--mesh FILE is required".into())),
        }
    };
    match cli.command {
        Command::Refine => cmd_refine(need_config()?, &out),
        Command::Adapt => cmd_adapt(need_config()?, &out),
        Command::Validate => cmd_validate(&mesh_path()?),
        Command::Nodes { r1, r2 } => {
            let base = config.as_ref().map(|c| c.orders).unwrap_or(PolyOrders { r1: 2, r2: 2 });
            let orders = PolyOrders::new(r1.unwrap_or(base.r1), r2.unwrap_or(base.r2))?;
            cmd_nodes(&mesh_path()?, orders, &out)
        }
        Command::Besov => cmd_besov(need_config()?, &out),
        Command::Export { format } => cmd_export(&mesh_path()?, format, &out),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn load_mesh(path: &Path) -> Result<Partition> {
    read_mesh(BufReader::new(File::open(path)?))
}

fn finish(p: &Partition, status: &RefineStatus) -> Done {
    if matches!(status, RefineStatus::BudgetExhausted(_)) {
        return Done::Budget;
    }
    let report = p.validate();
    if report.is_valid() {
        Done::Ok
    } else {
        eprintln!("final mesh failed validation: {:?}", report.violations.first());
        Done::Invalid
    }
}

/// `mesh.txt`, `ledger.csv` and `complexity.csv` for the configured policy.
pub fn cmd_refine(cfg: &ExperimentConfig, out: &Path) -> Result<Done> {
    let policy = cfg.policy.as_ref().ok_or_else(|| Error::Config("[refine] policy is required".into()))?;
    let p0 = cfg.initial_partition()?;
    let (p, study) = complexity_study(&p0, policy, cfg.rounds, &cfg.budget)?;
    write_mesh(&p, create(out, "mesh.txt")?)?;
    study.ledger.write_csv(create(out, "ledger.csv")?)?;
    write_complexity_csv(std::slice::from_ref(&study), create(out, "complexity.csv")?)?;
    println!("{} leaves after {} rounds ({:?})", p.num_leaves(), study.rows.len(), study.status);
    Ok(finish(&p, &study.status))
}

/// Greedy run (`mesh.txt`, `ledger.csv`, `solution.csv`) or rate study
/// (`rate_study.csv`, `timings.csv`). A configured `[refine] policy` runs the scripted policy instead.
pub fn cmd_adapt(cfg: &ExperimentConfig, out: &Path) -> Result<Done> {
    if cfg.policy.is_some() {
        return cmd_refine(cfg, out);
    }
    let f = cfg.function()?;
    let p0 = cfg.initial_partition()?;
    let acfg = cfg.adapt_config();
    match cfg.adapt_kind {
        AdaptKind::Greedy => {
            let delta = *cfg.deltas.first().ok_or_else(|| Error::Config("[adapt] delta is required".into()))?;
            let res = greedy_adapt(&p0, f, &acfg, delta)?;
            write_mesh(&res.partition, create(out, "mesh.txt")?)?;
            res.ledger.write_csv(create(out, "ledger.csv")?)?;
            let lat = classify(&res.partition, cfg.orders)?;
            let mut sol = create(out, "solution.csv")?;
            writeln!(sol, "node,t,{},value", (0..p0.d()).map(|c| format!("x{c}")).collect::<Vec<_>>().join(","))?;
            for (k, &n) in lat.free.iter().enumerate() {
                let node = lat.node(n);
                let xs: Vec<String> = node.x.iter().map(|x| format!("{x:.16e}")).collect();
                writeln!(sol, "{},{:.16e},{},{:.16e}", n.0, node.t, xs.join(","), res.solution.coeffs[k])?;
            }
            sol.flush()?;
            println!("{} leaves, L{} error {:.6e} ({:?})", res.partition.num_leaves(), cfg.norms.p, res.error, res.status);
            Ok(finish(&res.partition, &res.status))
        }
        AdaptKind::Rate => {
            let study = rate_study(&p0, f, &acfg, &cfg.deltas)?;
            study.write_csv(create(out, "rate_study.csv")?)?;
            study.write_timings_csv(create(out, "timings.csv")?)?;
            println!(
                "adaptive slope {:.4} (r2 {:.3}), uniform slope {:.4}, target {:.4}",
                study.slope, study.r2, study.uniform_slope, study.target
            );
            Ok(Done::Ok)
        }
    }
}

pub fn cmd_validate(mesh: &Path) -> Result<Done> {
    let p = load_mesh(mesh)?;
    let report = p.validate();
    println!("leaves {} slabs {} max_omega1 {}", p.num_leaves(), report.slabs, report.max_omega1);
    for v in &report.violations {
        println!("violation {v:?}");
    }
    println!("{}", if report.is_valid() { "valid" } else { "INVALID" });
    Ok(if report.is_valid() { Done::Ok } else { Done::Invalid })
}

pub fn cmd_nodes(mesh: &Path, orders: PolyOrders, out: &Path) -> Result<Done> {
    let p = load_mesh(mesh)?;
    let lat = classify(&p, orders)?;
    let mut w = create(out, "nodes.txt")?;
    lat.write_dump(&mut w)?;
    w.flush()?;
    let problems = lat.check_hanging_structure(&p);
    println!("{} nodes, {} free, {} hanging", lat.nodes.len(), lat.num_free(), lat.num_hanging());
    for m in &problems {
        println!("structure: {m}");
    }
    Ok(if problems.is_empty() { Done::Ok } else { Done::Invalid })
}

/// `besov.csv` (seminorm on the domain box) or `ladder.csv`.
pub fn cmd_besov(cfg: &ExperimentConfig, out: &Path) -> Result<Done> {
    let f = cfg.function()?;
    let fe = |t: f64, x: &[f64]| f.eval(t, x);
    match cfg.besov_kind {
        BesovKind::Seminorm => {
            let cyl = match &cfg.domain {
                DomainSpec::Box { t_start, t_end, lo, hi, .. } => Cylinder::from_box(*t_start, *t_end, lo, hi)?,
                DomainSpec::MeshFile(_) => {
                    let p = cfg.initial_partition()?;
                    Cylinder::from_leaves(&p, p.leaf_set())?
                }
            };
            let est = discrete_seminorm(
                &fe,
                &cyl,
                cfg.norms.p,
                cfg.norms.q,
                cfg.params.s1,
                cfg.params.s2,
                cfg.orders,
                cfg.n0,
                cfg.depth,
                cfg.sampling,
            )?;
            est.write_csv(create(out, "besov.csv")?)?;
            println!("seminorm {:.6e} (tail {:.3e})", est.seminorm, est.tail);
        }
        BesovKind::Ladder => {
            let alpha = cfg.alpha.unwrap_or((cfg.params.s1, cfg.params.s2));
            let p0 = cfg.initial_partition()?;
            let ladder = multiscale_norms(&fe, &p0, cfg.orders, cfg.norms, alpha, cfg.depth)?;
            let mut w = create(out, "ladder.csv")?;
            writeln!(w, "n,leaves,free_nodes,hanging_nodes,delta_norm,pi_error,best_error")?;
            for l in &ladder.levels {
                writeln!(
                    w,
                    "{},{},{},{},{:.16e},{:.16e},{:.16e}",
                    l.n, l.leaves, l.free_nodes, l.hanging_nodes, l.delta_norm, l.pi_error, l.best_error
                )?;
            }
            writeln!(w, "summary,{:.16e},{:.16e},{:.16e},{:.16e},,", ladder.f_norm, ladder.norm_delta, ladder.norm_pi, ladder.norm_e)?;
            w.flush()?;
            println!("norms: delta {:.6e} pi {:.6e} E {:.6e}", ladder.norm_delta, ladder.norm_pi, ladder.norm_e);
        }
    }
    Ok(Done::Ok)
}

/// `mesh.vtk` or the canonical re-write `mesh.txt`.
fn cmd_export(mesh: &Path, format: Format, out: &Path) -> Result<Done> {
    let p = load_mesh(mesh)?;
    match format {
        Format::Vtk => {
            let mut w = create(out, "mesh.vtk")?;
            export_vtk(&p, None, &mut w)?;
            w.flush()?;
        }
        Format::Text => {
            let mut w = create(out, "mesh.txt")?;
            write_mesh(&p, &mut w)?;
            w.flush()?;
        }
    }
    Ok(Done::Ok)
}
