//! Flat `key = value` experiment configuration with `[section]` headers.
//!
//! ```text
//! [domain]
//! d = 2
//! box_lo = 0, 0
//! box_hi = 1, 1
//! cells = 2, 2
//! [params]
//! s1 = 1
//! s2 = 2
//! ```
//!
//! `#` starts a comment. Every key is validated on load; unknown keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::adapt::{AdaptConfig, Policy};
use crate::besov::{MarkMode, Sampling};
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::geometry::AnisotropyParams;
use crate::mesh::{read_mesh, Partition, SpatialMesh};
use crate::polyapprox::{NormParams, PolyOrders};
use crate::refine::Budget;

const KEYS: &[(&str, &[&str])] = &[
    ("domain", &["d", "t_start", "t_end", "time_cells", "box_lo", "box_hi", "cells", "mesh"]),
    ("params", &["s1", "s2"]),
    ("orders", &["r1", "r2"]),
    ("norms", &["p", "q", "rho"]),
    ("function", &["spec"]),
    ("refine", &["policy", "rounds"]),
    ("adapt", &["kind", "mode", "delta", "deltas", "max_rounds"]),
    ("besov", &["kind", "depth", "n0", "alpha1", "alpha2", "time_cells", "time_points", "space_points"]),
    ("budget", &["max_leaves", "max_level"]),
    ("run", &["seed", "threads", "out"]),
];

#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    values: BTreeMap<(String, String), (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            if let Some(s) = line.strip_prefix('[') {
                let name = s.strip_suffix(']').ok_or_else(|| Error::Parse { line: lineno, msg: "unterminated section".into() })?;
                if !KEYS.iter().any(|(k, _)| *k == name) {
                    return Err(Error::Parse { line: lineno, msg: format!("unknown section [{name}]") });
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse { line: lineno, msg: "expected key = value".into() })?;
            let k = k.trim();
            let allowed = KEYS.iter().find(|(s, _)| *s == section).map(|(_, ks)| *ks).unwrap_or(&[]);
            if !allowed.contains(&k) {
                return Err(Error::Parse { line: lineno, msg: format!("unknown key '{k}' in [{section}]") });
            }
            if values.insert((section.clone(), k.to_string()), (v.trim().to_string(), lineno)).is_some() {
                return Err(Error::Parse { line: lineno, msg: format!("duplicate key '{k}'") });
            }
        }
        Ok(RawConfig { values })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values.get(&(section.to_string(), key.to_string())).map(|(v, _)| v.as_str())
    }

    fn parse_as<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.values.get(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse { line: *line, msg: format!("bad value '{v}' for {section}.{key}") }),
        }
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.values.get(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| Error::Parse { line: *line, msg: format!("bad list '{v}' for {section}.{key}") }),
        }
    }
}

#[derive(Clone, Debug)]
pub enum DomainSpec {
    Box { d: usize, t_start: f64, t_end: f64, time_cells: usize, lo: Vec<f64>, hi: Vec<f64>, cells: Vec<usize> },
    MeshFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdaptKind {
    Greedy,
    Rate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BesovKind {
    Seminorm,
    Ladder,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub params: AnisotropyParams,
    pub orders: PolyOrders,
    pub norms: NormParams,
    pub function: Option<TestFunction>,
    pub policy: Option<Policy>,
    pub rounds: usize,
    pub adapt_kind: AdaptKind,
    pub mode: MarkMode,
    pub deltas: Vec<f64>,
    pub max_rounds: usize,
    pub besov_kind: BesovKind,
    pub depth: u32,
    pub n0: u32,
    pub alpha: Option<(f64, f64)>,
    pub sampling: Sampling,
    pub budget: Budget,
    pub seed: Option<u64>,
    pub threads: usize,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_raw(&RawConfig::parse(&text)?)?;
        if let DomainSpec::MeshFile(m) = &mut cfg.domain {
            if m.is_relative() {
                *m = path.parent().unwrap_or(Path::new(".")).join(&m);
            }
        }
        Ok(cfg)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let cfg_err = |m: String| Error::Config(m);
        let d: usize = raw.parse_as("domain", "d")?.unwrap_or(1);
        let domain = match raw.get("domain", "mesh") {
            Some(m) => DomainSpec::MeshFile(PathBuf::from(m)),
            None => {
                let lo = raw.list("domain", "box_lo")?.unwrap_or_else(|| vec![0.0; d]);
                let hi = raw.list("domain", "box_hi")?.unwrap_or_else(|| vec![1.0; d]);
                let cells: Vec<usize> = raw
                    .list("domain", "cells")?
                    .unwrap_or_else(|| vec![1.0; d])
                    .into_iter()
                    .map(|c| c as usize)
                    .collect();
                if lo.len() != d || hi.len() != d || cells.len() != d {
                    return Err(cfg_err(format!("box_lo, box_hi and cells need {d} entries")));
                }
                DomainSpec::Box {
                    d,
                    t_start: raw.parse_as("domain", "t_start")?.unwrap_or(0.0),
                    t_end: raw.parse_as("domain", "t_end")?.unwrap_or(1.0),
                    time_cells: raw.parse_as("domain", "time_cells")?.unwrap_or(1),
                    lo,
                    hi,
                    cells,
                }
            }
        };
        let params = AnisotropyParams::new(
            raw.parse_as("params", "s1")?.unwrap_or(1.0),
            raw.parse_as("params", "s2")?.unwrap_or(1.0),
            d,
        )?;
        let orders = PolyOrders::new(raw.parse_as("orders", "r1")?.unwrap_or(2), raw.parse_as("orders", "r2")?.unwrap_or(2))?;
        let p: f64 = raw.parse_as("norms", "p")?.unwrap_or(2.0);
        let q: f64 = raw.parse_as("norms", "q")?.unwrap_or(p);
        let norms = match raw.parse_as::<f64>("norms", "rho")? {
            Some(rho) => NormParams::new(p, q, rho)?,
            None => NormParams::with_default_rho(p, q)?,
        };
        let function = raw.get("function", "spec").map(TestFunction::parse).transpose()?;
        let policy = raw.get("refine", "policy").map(str::parse).transpose()?;
        let adapt_kind = match raw.get("adapt", "kind").unwrap_or("greedy") {
            "greedy" => AdaptKind::Greedy,
            "rate" => AdaptKind::Rate,
            k => return Err(cfg_err(format!("adapt.kind must be greedy or rate, got '{k}'"))),
        };
        let mode = raw.get("adapt", "mode").unwrap_or("whitney").parse()?;
        let mut deltas = raw.list("adapt", "deltas")?.unwrap_or_default();
        if let Some(dl) = raw.parse_as::<f64>("adapt", "delta")? {
            deltas.insert(0, dl);
        }
        if deltas.iter().any(|&x| !(x > 0.0)) {
            return Err(cfg_err("thresholds must be positive".into()));
        }
        let besov_kind = match raw.get("besov", "kind").unwrap_or("seminorm") {
            "seminorm" => BesovKind::Seminorm,
            "ladder" => BesovKind::Ladder,
            k => return Err(cfg_err(format!("besov.kind must be seminorm or ladder, got '{k}'"))),
        };
        let alpha = match (raw.parse_as::<f64>("besov", "alpha1")?, raw.parse_as::<f64>("besov", "alpha2")?) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(cfg_err("set both besov.alpha1 and besov.alpha2".into())),
        };
        let def = Sampling::default();
        let sampling = Sampling {
            time_cells: raw.parse_as("besov", "time_cells")?.unwrap_or(def.time_cells),
            time_points: raw.parse_as("besov", "time_points")?.unwrap_or(def.time_points),
            space_points: raw.parse_as("besov", "space_points")?.unwrap_or(def.space_points),
        };
        let bd = Budget::default();
        let budget = Budget {
            max_leaves: raw.parse_as("budget", "max_leaves")?.unwrap_or(bd.max_leaves),
            max_level: raw.parse_as("budget", "max_level")?.unwrap_or(bd.max_level),
        };
        let seed = raw.parse_as("run", "seed")?;
        if matches!(policy, Some(Policy::RandomFraction { .. })) && seed.is_none() {
            return Err(cfg_err("random policies need run.seed".into()));
        }
        let policy = match (policy, seed) {
            (Some(Policy::RandomFraction { fraction, .. }), Some(s)) => Some(Policy::RandomFraction { fraction, seed: s }),
            (p, _) => p,
        };
        Ok(ExperimentConfig {
            domain,
            params,
            orders,
            norms,
            function,
            policy,
            rounds: raw.parse_as("refine", "rounds")?.unwrap_or(10),
            adapt_kind,
            mode,
            deltas,
            max_rounds: raw.parse_as("adapt", "max_rounds")?.unwrap_or(60),
            besov_kind,
            depth: raw.parse_as("besov", "depth")?.unwrap_or(6),
            n0: raw.parse_as("besov", "n0")?.unwrap_or(0),
            alpha,
            sampling,
            budget,
            seed,
            threads: raw.parse_as("run", "threads")?.unwrap_or(0),
            out: PathBuf::from(raw.get("run", "out").unwrap_or("out")),
        })
    }

    /// The initial partition described by `[domain]`.
    pub fn initial_partition(&self) -> Result<Partition> {
        match &self.domain {
            DomainSpec::MeshFile(path) => {
                let file = std::fs::File::open(path)?;
                read_mesh(std::io::BufReader::new(file))
            }
            DomainSpec::Box { d, t_start, t_end, time_cells, lo, hi, cells } => {
                let mesh = if *d == 1 { SpatialMesh::interval(lo[0], hi[0], cells[0])? } else { SpatialMesh::kuhn_box(lo, hi, cells)? };
                if !(t_end > t_start) || *time_cells == 0 {
                    return Err(Error::Config("need t_end > t_start and time_cells >= 1".into()));
                }
                let times: Vec<f64> =
                    (0..=*time_cells).map(|k| t_start + (t_end - t_start) * k as f64 / *time_cells as f64).collect();
                Partition::tensor_initial(&times, &mesh, self.params)
            }
        }
    }

    pub fn function(&self) -> Result<&TestFunction> {
        self.function.as_ref().ok_or_else(|| Error::Config("[function] spec is required".into()))
    }

    pub fn adapt_config(&self) -> AdaptConfig {
        AdaptConfig { orders: self.orders, norms: self.norms, mode: self.mode, budget: self.budget, max_rounds: self.max_rounds }
    }
}
