//! Run configuration, subcommand orchestration and result files.
//!
//! A run reads a flat `key = value` file, executes one subcommand and writes
//! into the output directory:
//!
//! * `<subcommand>.csv`: one header row naming every column with its unit,
//!   then data rows with 17 significant digits. Identical configurations
//!   produce byte-identical files.
//! * `<subcommand>.json`: inputs (with every default that was filled in),
//!   derived quantities, diagnostics, wall time and a start timestamp.
//! * `<subcommand>_<series>.dat`: plot data, one `# x y` comment line naming
//!   the columns followed by two whitespace-separated columns.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{AsymptoticField, CapKernel, Convention};
use crate::geometry::{build_disk, build_ellipse, build_nanorod, Boundary};
use crate::layer_potentials::{jump_residual, jump_sample_nodes, layer_expansion_check};
use crate::np_spectral::{NpSpectrum, Symmetry};
use crate::resonance::{
    log_space, resonance_sweep, resonant_permittivity, select_mode, SweepPlan, SweepPoint, Target, DEFAULT_C1,
};
use crate::transmission_solver::mie::Mie;
use crate::transmission_solver::{gradient_norm, solve, ScatterConfig, VolumeGrid};
use crate::{Error, Point, Result};

/// Environment variable that sets the worker thread count.
pub const THREADS_ENV: &str = "NANOROD_THREADS";

/// Build the global thread pool from [`THREADS_ENV`] if it is set.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Invalid(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    Ok(Some(n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Spectrum,
    Scatter,
    Asymptotic,
    ResonanceSweep,
    Validate,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] =
        [Self::Spectrum, Self::Scatter, Self::Asymptotic, Self::ResonanceSweep, Self::Validate];

    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Scatter => "scatter",
            Self::Asymptotic => "asymptotic",
            Self::ResonanceSweep => "resonance-sweep",
            Self::Validate => "validate",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometrySpec {
    Rod { length: f64, delta: f64 },
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
}

impl GeometrySpec {
    pub fn build(&self, resolution: usize) -> Result<Boundary> {
        match *self {
            Self::Rod { length, delta } => build_nanorod(length, delta, resolution),
            Self::Disk { radius } => build_disk(radius, resolution),
            Self::Ellipse { a, b } => build_ellipse(a, b, resolution),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaterialSpec {
    Permittivity {
        eps_re: f64,
        eps_im: f64,
    },
    /// Permittivity matched to the NP eigenvalue `lambda_target` at loss `rho`.
    Resonant {
        lambda_target: f64,
        rho: f64,
    },
}

impl MaterialSpec {
    pub fn permittivity(&self) -> Result<Complex64> {
        match *self {
            Self::Permittivity { eps_re, eps_im } => Ok(Complex64::new(eps_re, eps_im)),
            Self::Resonant { lambda_target, rho } => resonant_permittivity(lambda_target, rho),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Truncation radius of the volume gradient norm.
    pub radius: f64,
    /// Collar width in units of the local node spacing.
    pub collar_factor: f64,
    /// Nodes of the one-dimensional grid for the flat-side operator.
    pub grid_size: usize,
    pub c1: f64,
    pub end_region: f64,
    pub cap_kernel: CapKernel,
    pub convention: Convention,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            radius: 10.0,
            collar_factor: VolumeGrid::default().collar_factor,
            grid_size: crate::asymptotics::DEFAULT_GRID,
            c1: DEFAULT_C1,
            end_region: crate::asymptotics::DEFAULT_END_REGION,
            cap_kernel: CapKernel::Normalized,
            convention: Convention::Rederived,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub preset: Option<String>,
    /// Smallest and largest `|rho|`.
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub rho_count: Option<usize>,
    /// Matched mode index; chosen by coupling when absent.
    pub mode: Option<usize>,
    /// Fixed `Re(1/eps)` instead of a matched resonance.
    pub theta: Option<f64>,
}

/// Sample grid `start, stop, count` per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count).map(|k| self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Option<Subcommand>,
    pub geometry: Option<GeometrySpec>,
    pub resolution: usize,
    pub material: Option<MaterialSpec>,
    pub omega: Option<f64>,
    /// Unit incidence direction.
    pub direction: [f64; 2],
    pub numerics: Numerics,
    pub sweep: SweepOptions,
    /// Field targets of the `asymptotic` subcommand.
    pub targets: Vec<[f64; 2]>,
    /// `(omega, delta)` steps of the `asymptotic` subcommand.
    pub ladder: Vec<[f64; 2]>,
    pub sample_x1: Axis,
    pub sample_x2: Axis,
    pub out: Option<PathBuf>,
    /// Keys that were filled in with a default value.
    pub defaulted: Vec<String>,
}

const KEYS: &[&str] = &[
    "subcommand",
    "geometry",
    "L",
    "delta",
    "radius",
    "a",
    "b",
    "resolution",
    "eps_re",
    "eps_im",
    "lambda_target",
    "rho",
    "omega",
    "d",
    "R",
    "collar_factor",
    "grid_size",
    "c1",
    "end_region",
    "cap_kernel",
    "convention",
    "preset",
    "rho_min",
    "rho_max",
    "rho_count",
    "mode",
    "theta",
    "targets",
    "ladder",
    "sample_x1",
    "sample_x2",
    "out",
];

struct Entries {
    values: BTreeMap<&'static str, (usize, String)>,
    defaulted: Vec<String>,
}

impl Entries {
    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |v| v.0)
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.values.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config { line, message: format!("`{key}` expects {what}, got '{v}'") }),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.typed(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => {
                Err(Error::Config { line: self.line(key), message: format!("`{key}` must be finite") })
            }
            _ => Ok(v),
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>> {
        match self.float(key)? {
            Some(x) if x <= 0.0 => {
                Err(Error::Config { line: self.line(key), message: format!("`{key}` must be positive, got {x}") })
            }
            v => Ok(v),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.typed(key, "a nonnegative integer")
    }

    fn list(&self, key: &str, len: usize) -> Result<Option<Vec<f64>>> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(None);
        };
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        let values: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok().filter(|x: &f64| x.is_finite())).collect();
        match values {
            Some(values) if values.len() == len => Ok(Some(values)),
            _ => Err(Error::Config {
                line,
                message: format!("`{key}` expects {len} comma-separated numbers, got '{v}'"),
            }),
        }
    }

    /// `x1,x2; x1,x2; ...`
    fn pairs(&self, key: &str) -> Result<Option<Vec<[f64; 2]>>> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(None);
        };
        let bad = || Error::Config { line, message: format!("`{key}` expects 'a,b; c,d; ...', got '{v}'") };
        let mut out = Vec::new();
        for item in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (a, b) = item.split_once(',').ok_or_else(bad)?;
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            out.push([a, b]);
        }
        if out.is_empty() {
            return Err(bad());
        }
        Ok(Some(out))
    }

    fn axis(&self, key: &str, default: Axis) -> Result<Axis> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(default);
        };
        let bad = || Error::Config { line, message: format!("`{key}` expects 'start, stop, count', got '{v}'") };
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(bad());
        }
        Ok(Axis { start, stop, count })
    }

    fn or_default<T>(&mut self, key: &str, value: Option<T>, default: T) -> T {
        value.unwrap_or_else(|| {
            self.defaulted.push(key.to_string());
            default
        })
    }
}

/// Parse a configuration file. Unknown keys, repeated keys, malformed values
/// and inconsistent blocks are reported with their line numbers.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries = Entries { values: BTreeMap::new(), defaulted: Vec::new() };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Config { line, message: format!("expected 'key = value', got '{content}'") })?;
        let key = key.trim();
        let known = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| Error::Config { line, message: format!("unknown key `{key}`") })?;
        if let Some((first, _)) = entries.values.get(known) {
            return Err(Error::Config { line, message: format!("`{key}` already set on line {first}") });
        }
        entries.values.insert(known, (line, value.trim().to_string()));
    }
    build_config(entries)
}

fn build_config(mut e: Entries) -> Result<RunConfig> {
    let subcommand = match e.raw("subcommand") {
        None => None,
        Some((line, v)) => Some(
            Subcommand::parse(v).ok_or_else(|| Error::Config { line, message: format!("unknown subcommand '{v}'") })?,
        ),
    };

    let kind = e.raw("geometry").map(|(l, v)| (l, v.to_string()));
    let (length, delta) = (e.positive("L")?, e.positive("delta")?);
    let (radius, a, b) = (e.positive("radius")?, e.positive("a")?, e.positive("b")?);
    let has = |keys: &[&str]| keys.iter().any(|k| e.values.contains_key(k));
    let kind = match kind {
        Some((line, k)) => (line, k),
        None if has(&["radius"]) => (e.line("radius"), "disk".to_string()),
        None if has(&["a", "b"]) => (e.line("a").max(e.line("b")), "ellipse".to_string()),
        None => (0, "rod".to_string()),
    };
    let foreign = |keys: &[&str], line: usize, kind: &str| -> Result<()> {
        match keys.iter().find(|k| e.values.contains_key(**k)) {
            Some(k) => Err(Error::Config {
                line: e.line(k).max(line),
                message: format!("`{k}` does not apply to geometry '{kind}'"),
            }),
            None => Ok(()),
        }
    };
    let geometry = match kind.1.as_str() {
        "rod" => {
            foreign(&["radius", "a", "b"], kind.0, "rod")?;
            if let (Some(l), Some(d)) = (length, delta) {
                if d >= 0.5 * l {
                    return Err(Error::Config {
                        line: e.line("delta"),
                        message: format!("delta = {d} must be below L/2 = {}", 0.5 * l),
                    });
                }
            }
            match (length, delta) {
                (Some(length), Some(delta)) => Some(GeometrySpec::Rod { length, delta }),
                _ => None,
            }
        }
        "disk" => {
            foreign(&["L", "delta", "a", "b"], kind.0, "disk")?;
            radius.map(|radius| GeometrySpec::Disk { radius })
        }
        "ellipse" => {
            foreign(&["L", "delta", "radius"], kind.0, "ellipse")?;
            match (a, b) {
                (Some(a), Some(b)) => Some(GeometrySpec::Ellipse { a, b }),
                (None, None) => None,
                _ => {
                    return Err(Error::Config {
                        line: e.line("a").max(e.line("b")),
                        message: "an ellipse needs both `a` and `b`".into(),
                    })
                }
            }
        }
        other => {
            return Err(Error::Config {
                line: kind.0,
                message: format!("geometry must be rod, disk or ellipse, got '{other}'"),
            })
        }
    };
    let resolution = e.count("resolution")?;
    let resolution = e.or_default("resolution", resolution, 512);

    let (eps_re, eps_im) = (e.float("eps_re")?, e.float("eps_im")?);
    let (lambda_target, rho) = (e.float("lambda_target")?, e.float("rho")?);
    if let Some(l) = lambda_target {
        if let Err(err) = resonant_permittivity(l, rho.unwrap_or(0.0)) {
            let line = if (-0.5..0.5).contains(&l) { e.line("rho") } else { e.line("lambda_target") };
            return Err(Error::Config { line, message: err.to_string() });
        }
    }
    let material = match (eps_re, eps_im, lambda_target, rho) {
        (None, None, None, None) => None,
        (Some(_), _, Some(_), _) | (_, Some(_), Some(_), _) | (Some(_), _, _, Some(_)) | (_, Some(_), _, Some(_)) => {
            return Err(Error::Config {
                line: e.line("lambda_target").max(e.line("rho")),
                message: "give either eps_re/eps_im or lambda_target/rho, not both".into(),
            })
        }
        (Some(eps_re), eps_im, None, None) => {
            let eps_im = e.or_default("eps_im", eps_im, 0.0);
            Some(MaterialSpec::Permittivity { eps_re, eps_im })
        }
        (None, Some(_), None, None) => {
            return Err(Error::Config { line: e.line("eps_im"), message: "`eps_im` needs `eps_re`".into() })
        }
        (None, None, Some(lambda_target), Some(rho)) => Some(MaterialSpec::Resonant { lambda_target, rho }),
        (None, None, Some(_), None) => {
            return Err(Error::Config { line: e.line("lambda_target"), message: "`lambda_target` needs `rho`".into() })
        }
        (None, None, None, Some(_)) => {
            return Err(Error::Config { line: e.line("rho"), message: "`rho` needs `lambda_target`".into() })
        }
    };
    if let Some(MaterialSpec::Permittivity { eps_re, eps_im }) = material {
        if eps_im < 0.0 || (eps_re == 0.0 && eps_im == 0.0) {
            return Err(Error::Config {
                line: e.line("eps_im").max(e.line("eps_re")),
                message: format!("permittivity {eps_re} + {eps_im}i must be nonzero with nonnegative imaginary part"),
            });
        }
    }

    let omega = e.positive("omega")?;
    let direction = match e.list("d", 2)? {
        Some(d) => {
            let norm = d[0].hypot(d[1]);
            if norm == 0.0 {
                return Err(Error::Config { line: e.line("d"), message: "`d` must be nonzero".into() });
            }
            [d[0] / norm, d[1] / norm]
        }
        None => {
            e.defaulted.push("d".into());
            [1.0, 0.0]
        }
    };

    let base = Numerics::default();
    let numerics = Numerics {
        radius: {
            let v = e.positive("R")?;
            e.or_default("R", v, base.radius)
        },
        collar_factor: {
            let v = e.positive("collar_factor")?;
            e.or_default("collar_factor", v, base.collar_factor)
        },
        grid_size: {
            let v = e.count("grid_size")?;
            e.or_default("grid_size", v, base.grid_size)
        },
        c1: {
            let v = e.positive("c1")?;
            e.or_default("c1", v, base.c1)
        },
        end_region: {
            let v = e.positive("end_region")?;
            e.or_default("end_region", v, base.end_region)
        },
        cap_kernel: match e.raw("cap_kernel") {
            None => e.or_default("cap_kernel", None, base.cap_kernel),
            Some((_, "normalized")) => CapKernel::Normalized,
            Some((_, "bare")) => CapKernel::Bare,
            Some((line, v)) => {
                return Err(Error::Config { line, message: format!("`cap_kernel` is normalized or bare, got '{v}'") })
            }
        },
        convention: match e.raw("convention") {
            None => e.or_default("convention", None, base.convention),
            Some((_, "rederived")) => Convention::Rederived,
            Some((_, "as_printed")) => Convention::AsPrinted,
            Some((line, v)) => {
                return Err(Error::Config {
                    line,
                    message: format!("`convention` is rederived or as_printed, got '{v}'"),
                })
            }
        },
    };

    let sweep = SweepOptions {
        preset: e.raw("preset").map(|(_, v)| v.to_string()),
        rho_min: e.positive("rho_min")?,
        rho_max: e.positive("rho_max")?,
        rho_count: e.count("rho_count")?,
        mode: e.count("mode")?,
        theta: e.float("theta")?,
    };
    if let Some(p) = &sweep.preset {
        if let Err(err) = SweepPlan::preset(p) {
            return Err(Error::Config { line: e.line("preset"), message: err.to_string() });
        }
    }
    if sweep.mode.is_some() && sweep.theta.is_some() {
        return Err(Error::Config { line: e.line("theta"), message: "`mode` and `theta` are exclusive".into() });
    }
    if let (Some(lo), Some(hi)) = (sweep.rho_min, sweep.rho_max) {
        if lo > hi {
            return Err(Error::Config {
                line: e.line("rho_max"),
                message: format!("rho_max {hi} is below rho_min {lo}"),
            });
        }
    }

    let targets = e.pairs("targets")?;
    let targets = e.or_default("targets", targets, vec![[0.0, 0.5], [0.75, 0.1]]);
    let ladder = e.pairs("ladder")?.unwrap_or_default();
    if let Some(bad) = ladder.iter().find(|s| !(s[0] > 0.0 && s[1] > 0.0)) {
        return Err(Error::Config { line: e.line("ladder"), message: format!("ladder step {bad:?} must be positive") });
    }
    let sample_x1 = e.axis("sample_x1", Axis { start: -1.0, stop: 1.0, count: 21 })?;
    let sample_x2 = e.axis("sample_x2", Axis { start: -0.5, stop: 0.5, count: 11 })?;
    for key in ["sample_x1", "sample_x2"] {
        if !e.values.contains_key(key) {
            e.defaulted.push(key.into());
        }
    }
    let out = e.raw("out").map(|(_, v)| PathBuf::from(v));

    Ok(RunConfig {
        subcommand,
        geometry,
        resolution,
        material,
        omega,
        direction,
        numerics,
        sweep,
        targets,
        ladder,
        sample_x1,
        sample_x2,
        out,
        defaulted: e.defaulted,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&fs::read_to_string(path)?)
}

fn missing(key: &str, sub: Subcommand) -> Error {
    Error::Invalid(format!("missing required key `{key}` for {}", sub.name()))
}

/// A CSV table with units in the header.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { header: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Full double precision: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Two-column plot series.
#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    fn new(name: &str, x_label: &str, y_label: &str) -> Self {
        Self { name: name.into(), x_label: x_label.into(), y_label: y_label.into(), points: Vec::new() }
    }

    pub fn to_dat(&self) -> String {
        let mut s = format!("# {} {}\n", self.x_label, self.y_label);
        for (x, y) in &self.points {
            let _ = writeln!(s, "{} {}", num(*x), num(*y));
        }
        s
    }
}

/// Everything a subcommand produces before it is written out.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub table: Table,
    pub derived: Value,
    pub diagnostics: Value,
    pub plots: Vec<Series>,
    /// False when a validation threshold was missed.
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub plots: Vec<PathBuf>,
    pub passed: bool,
    pub summary: Value,
}

/// Execute `sub` and write its files to `out_dir`. A failing subcommand still
/// writes its JSON summary with the error message before returning the error.
pub fn run(config: &RunConfig, sub: Subcommand, out_dir: &Path) -> Result<RunReport> {
    if let Some(s) = config.subcommand {
        if s != sub {
            return Err(Error::Invalid(format!("config is for {} but {} was requested", s.name(), sub.name())));
        }
    }
    fs::create_dir_all(out_dir)?;
    let check = out_dir.join(".nanorod-write-check");
    fs::write(&check, b"")?;
    fs::remove_file(&check)?;

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let mut config = config.clone();
    let outcome = execute(&mut config, sub);
    let json_path = out_dir.join(format!("{}.json", sub.name()));
    let mut summary = json!({
        "subcommand": sub.name(),
        "inputs": config,
        "started_unix_s": started,
    });
    match outcome {
        Err(err) => {
            summary["status"] = json!("error");
            summary["error"] = json!(err.to_string());
            summary["wall_time_s"] = json!(clock.elapsed().as_secs_f64());
            fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;
            Err(err)
        }
        Ok(art) => {
            let csv = out_dir.join(format!("{}.csv", sub.name()));
            fs::write(&csv, art.table.to_csv())?;
            let mut plots = Vec::new();
            for series in &art.plots {
                let path = out_dir.join(format!("{}_{}.dat", sub.name(), series.name));
                fs::write(&path, series.to_dat())?;
                plots.push(path);
            }
            summary["status"] = json!(if art.passed { "ok" } else { "failed-check" });
            summary["derived"] = art.derived;
            summary["diagnostics"] = art.diagnostics;
            summary["wall_time_s"] = json!(clock.elapsed().as_secs_f64());
            fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;
            Ok(RunReport { csv, json: json_path, plots, passed: art.passed, summary })
        }
    }
}

fn execute(config: &mut RunConfig, sub: Subcommand) -> Result<Artifacts> {
    match sub {
        Subcommand::Spectrum => spectrum(config),
        Subcommand::Scatter => scatter(config),
        Subcommand::Asymptotic => asymptotic(config),
        Subcommand::ResonanceSweep => sweep(config),
        Subcommand::Validate => validate(config),
    }
}

fn label(s: Symmetry) -> &'static str {
    match s {
        Symmetry::Even => "even",
        Symmetry::Odd => "odd",
        Symmetry::Mixed => "mixed",
    }
}

fn require_geometry(config: &RunConfig, sub: Subcommand) -> Result<GeometrySpec> {
    config.geometry.ok_or_else(|| missing("L and delta, radius, or a and b", sub))
}

fn spectrum(config: &mut RunConfig) -> Result<Artifacts> {
    let geometry = require_geometry(config, Subcommand::Spectrum)?;
    let bd = geometry.build(config.resolution)?;
    let spec = NpSpectrum::compute(&bd)?;
    let mut table = Table::new(&["j [1]", "lambda [1]", "a_j [1]", "parity_x1", "parity_x2"]);
    let mut plot = Series::new("eigenvalues", "j", "lambda_j");
    for j in 0..spec.len() {
        let a = if j == 0 { spec.equilibrium_norm() } else { spec.norms[j] };
        table.push(vec![
            j.to_string(),
            num(spec.values[j]),
            num(a),
            label(spec.parity[j].x1).into(),
            label(spec.parity[j].x2).into(),
        ]);
        plot.points.push((j as f64, spec.values[j]));
    }
    let coupled = if bd.rod().is_some() { select_mode(&bd, &spec).ok() } else { None };
    Ok(Artifacts {
        table,
        derived: json!({
            "modes": spec.len(),
            "largest_mean_zero_eigenvalue": spec.values.get(1),
            "axially_coupled_mode": coupled,
            "axially_coupled_eigenvalue": coupled.map(|j| spec.values[j]),
            "a_0": spec.equilibrium_norm(),
        }),
        diagnostics: json!({
            "calderon_residual": spec.calderon_residual(&bd),
            "near_degenerate_pairs": spec.near_degenerate,
        }),
        plots: vec![plot],
        passed: true,
    })
}

fn wave(config: &RunConfig, sub: Subcommand) -> Result<ScatterConfig> {
    let material = config.material.ok_or_else(|| missing("eps_re or lambda_target/rho", sub))?;
    let omega = config.omega.ok_or_else(|| missing("omega", sub))?;
    ScatterConfig::new(material.permittivity()?, omega, Point::new(config.direction[0], config.direction[1]))
}

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn scatter(config: &mut RunConfig) -> Result<Artifacts> {
    let geometry = require_geometry(config, Subcommand::Scatter)?;
    let cfg = wave(config, Subcommand::Scatter)?;
    let bd = geometry.build(config.resolution)?;
    let sol = solve(&bd, &cfg)?;
    let spec = NpSpectrum::compute(&bd)?;
    let grid = VolumeGrid { collar_factor: config.numerics.collar_factor, ..VolumeGrid::default() };
    let volume = gradient_norm(&sol, config.numerics.radius, &grid)?;

    let mut table = Table::new(&[
        "x1 [length]",
        "x2 [length]",
        "inside [bool]",
        "re_u [incident amplitude]",
        "im_u [incident amplitude]",
        "grad_us_abs [incident amplitude/length]",
    ]);
    let mut skipped = 0usize;
    for x2 in config.sample_x2.values() {
        for x1 in config.sample_x1.values() {
            let x = Point::new(x1, x2);
            let s = match sol.field(&x) {
                Err(Error::NearBoundary { .. }) => {
                    skipped += 1;
                    table.push(vec![num(x1), num(x2), String::new(), String::new(), String::new(), String::new()]);
                    continue;
                }
                other => other?,
            };
            let g = if s.inside {
                let inc = cfg.incident_gradient(&x);
                [s.gradient[0] - inc[0], s.gradient[1] - inc[1]]
            } else {
                s.gradient
            };
            table.push(vec![
                num(x1),
                num(x2),
                (s.inside as u8).to_string(),
                num(s.total.re),
                num(s.total.im),
                num((g[0].norm_sqr() + g[1].norm_sqr()).sqrt()),
            ]);
        }
    }
    let mut far = Series::new("far_field", "angle", "abs_far_field");
    for m in 0..=180 {
        let angle = 2.0 * PI * m as f64 / 180.0;
        far.points.push((angle, sol.far_field(angle).norm()));
    }
    Ok(Artifacts {
        table,
        derived: json!({
            "eps": complex(cfg.eps()),
            "kc": complex(cfg.material.kc),
            "theta": cfg.material.theta,
            "rho": cfg.material.rho,
            "boundary_norm": sol.boundary_norm(&spec),
            "volume_gradient_norm": volume.value,
            "volume_tail_estimate": volume.tail,
            "collar": volume.collar,
        }),
        diagnostics: json!({
            "residual": sol.residual,
            "condition_estimate": sol.condition,
            "volume_error_estimate": volume.error_estimate,
            "quasi_static": cfg.quasi_static(&bd),
            "radiation_defect_r50": sol.radiation_defect(50.0, 0.3)?,
            "samples_too_close_to_boundary": skipped,
        }),
        plots: vec![far],
        passed: true,
    })
}

fn asymptotic(config: &mut RunConfig) -> Result<Artifacts> {
    let sub = Subcommand::Asymptotic;
    let (length, delta) = match config.geometry {
        Some(GeometrySpec::Rod { length, delta }) => (length, Some(delta)),
        Some(_) => return Err(Error::Invalid("the asymptotic subcommand needs a rod".into())),
        None => (1.0, None),
    };
    let ladder = if config.ladder.is_empty() {
        let omega = config.omega.ok_or_else(|| missing("omega or ladder", sub))?;
        let delta = delta.ok_or_else(|| missing("delta or ladder", sub))?;
        vec![[omega, delta]]
    } else {
        config.ladder.clone()
    };
    if config.geometry.is_none() {
        config.defaulted.push("L".into());
    }
    let eps = config.material.ok_or_else(|| missing("eps_re or lambda_target/rho", sub))?.permittivity()?;
    let direction = Point::new(config.direction[0], config.direction[1]);

    let mut table = Table::new(&[
        "omega [1/length]",
        "delta [length]",
        "x1 [length]",
        "x2 [length]",
        "re_us_full [incident amplitude]",
        "im_us_full [incident amplitude]",
        "re_us_asym [incident amplitude]",
        "im_us_asym [incident amplitude]",
        "relative_error [1]",
    ]);
    let mut series: Vec<Series> =
        (0..config.targets.len()).map(|t| Series::new(&format!("target{t}"), "delta", "relative_error")).collect();
    let mut steps = Vec::new();
    for &[omega, delta] in &ladder {
        let bd = build_nanorod(length, delta, config.resolution)?;
        let cfg = ScatterConfig::new(eps, omega, direction)?;
        let sol = solve(&bd, &cfg)?;
        let field = AsymptoticField::new(&cfg, length, delta, config.numerics.grid_size, config.numerics.convention)?;
        let mut errors = Vec::new();
        for (t, &[x1, x2]) in config.targets.iter().enumerate() {
            let x = Point::new(x1, x2);
            let full = sol.field(&x)?.scattered;
            let asym = field.scattered(&x)?;
            let err = (full - asym).norm() / full.norm();
            table.push(vec![
                num(omega),
                num(delta),
                num(x1),
                num(x2),
                num(full.re),
                num(full.im),
                num(asym.re),
                num(asym.im),
                num(err),
            ]);
            series[t].points.push((delta, err));
            errors.push(err);
        }
        steps.push(json!({"omega": omega, "delta": delta, "relative_errors": errors, "residual": sol.residual}));
    }
    let monotone: Vec<bool> = series.iter().map(|s| s.points.windows(2).all(|w| w[1].1 < w[0].1)).collect();
    Ok(Artifacts {
        table,
        derived: json!({"eps": complex(eps), "length": length, "steps": steps}),
        diagnostics: json!({"errors_decrease_along_ladder": monotone}),
        plots: series,
        passed: true,
    })
}

/// The sweep plan described by `config`: a preset (default `rho-scan`) with any
/// explicitly given keys applied on top.
pub fn sweep_plan(config: &mut RunConfig) -> Result<SweepPlan> {
    if config.material.is_some() {
        return Err(Error::Invalid(
            "resonance-sweep sets the permittivity from `mode` or `theta`; remove eps_re/lambda_target".into(),
        ));
    }
    let preset = match &config.sweep.preset {
        Some(p) => p.clone(),
        None => {
            config.defaulted.push("preset".into());
            "rho-scan".into()
        }
    };
    let mut plan = SweepPlan::preset(&preset)?;
    match config.geometry {
        Some(GeometrySpec::Rod { length, delta }) => {
            plan.length = length;
            plan.points.iter_mut().for_each(|p| p.delta = delta);
        }
        Some(_) => return Err(Error::Invalid("resonance sweeps need a rod".into())),
        None => {}
    }
    if let Some(omega) = config.omega {
        plan.points.iter_mut().for_each(|p| p.omega = omega);
    }
    let s = &config.sweep;
    if s.rho_min.is_some() || s.rho_max.is_some() || s.rho_count.is_some() {
        let lo = s.rho_min.ok_or_else(|| missing("rho_min", Subcommand::ResonanceSweep))?;
        let hi = s.rho_max.ok_or_else(|| missing("rho_max", Subcommand::ResonanceSweep))?;
        let count = s.rho_count.unwrap_or(13).max(1);
        let template = plan.points[0];
        plan.points =
            log_space(lo.log10(), hi.log10(), count).into_iter().map(|r| SweepPoint { rho: -r, ..template }).collect();
    }
    if let Some(mode) = s.mode {
        plan.target = Target::Matched { mode: Some(mode) };
    }
    if let Some(theta) = s.theta {
        plan.target = Target::FixedTheta { theta };
    }
    let given = |k: &str| !config.defaulted.iter().any(|d| d == k);
    if given("resolution") {
        plan.resolution = config.resolution;
    }
    if given("d") {
        plan.direction = config.direction;
    }
    if given("c1") {
        plan.c1 = config.numerics.c1;
    }
    if given("R") {
        plan.radius = config.numerics.radius;
    }
    if given("collar_factor") {
        plan.collar_factor = config.numerics.collar_factor;
    }
    Ok(plan)
}

fn sweep(config: &mut RunConfig) -> Result<Artifacts> {
    let plan = sweep_plan(config)?;
    let result = resonance_sweep(&plan)?;
    let mut table = Table::new(&[
        "omega [1/length]",
        "delta [length]",
        "rho [1]",
        "theta [1]",
        "eps_re [1]",
        "eps_im [1]",
        "mode [index]",
        "lambda_mode [1]",
        "volume_gradient_norm [incident amplitude]",
        "volume_error_estimate [1]",
        "boundary_norm [incident amplitude]",
        "pairing_re [1]",
        "pairing_im [1]",
        "condition_estimate [1]",
        "guard [1]",
        "guard_ok [bool]",
        "amplification [1]",
    ]);
    let mut plot = Series::new("volume_norm", "abs_rho", "volume_gradient_norm");
    for r in &result.records {
        table.push(vec![
            num(r.omega),
            num(r.delta),
            num(r.rho),
            num(r.theta),
            num(r.eps_re),
            num(r.eps_im),
            r.mode.map(|m| m.to_string()).unwrap_or_default(),
            opt(r.lambda_mode),
            num(r.volume_norm),
            num(r.volume_error),
            num(r.boundary_norm),
            num(r.pairing_re),
            num(r.pairing_im),
            num(r.condition),
            num(r.guard),
            (r.guard_ok as u8).to_string(),
            num(r.amplification),
        ]);
        plot.points.push((r.rho.abs(), r.volume_norm));
    }
    let values: Vec<f64> = result.records.iter().map(|r| r.volume_norm).collect();
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    Ok(Artifacts {
        table,
        derived: json!({"plan": plan, "slope_fits": result.fits}),
        diagnostics: json!({
            "points": result.records.len(),
            "guard_ok_points": result.records.iter().filter(|r| r.guard_ok).count(),
            "volume_norm_max_over_min": max / min,
        }),
        plots: vec![plot],
        passed: true,
    })
}

/// Thresholds of the `validate` subcommand.
pub const JUMP_TOLERANCE: f64 = 1e-6;
pub const CALDERON_TOLERANCE: f64 = 1e-6;
pub const SERIES_TOLERANCE: f64 = 1e-6;
pub const SINGLE_LAYER_SLOPE: f64 = 3.7;
pub const ADJOINT_SLOPE: f64 = 1.8;

/// `64` exterior points on four rings, used for the disk series comparison.
pub fn series_targets() -> Vec<Point> {
    (0..64)
        .map(|m| {
            let a = 2.0 * PI * m as f64 / 64.0 + 0.1;
            Point::new(a.cos(), a.sin()) * (1.5 + 0.5 * (m % 4) as f64)
        })
        .collect()
}

fn validate(config: &mut RunConfig) -> Result<Artifacts> {
    let geometry = match config.geometry {
        Some(g) => g,
        None => {
            config.defaulted.push("radius".into());
            config.geometry = Some(GeometrySpec::Disk { radius: 1.0 });
            GeometrySpec::Disk { radius: 1.0 }
        }
    };
    if config.material.is_none() {
        config.defaulted.extend(["eps_re".to_string(), "eps_im".to_string()]);
        config.material = Some(MaterialSpec::Permittivity { eps_re: 4.0, eps_im: 0.0 });
    }
    if config.omega.is_none() {
        config.defaulted.push("omega".into());
        config.omega = Some(0.3);
    }
    let bd = geometry.build(config.resolution)?;
    let mut table = Table::new(&["check", "value [1]", "threshold [1]", "pass [bool]"]);
    let mut checks = serde_json::Map::new();
    let mut passed = true;
    let mut record = |table: &mut Table, name: &str, value: f64, threshold: f64, below: bool| {
        let ok = if below { value < threshold } else { value >= threshold };
        passed &= ok;
        table.push(vec![name.into(), num(value), num(threshold), (ok as u8).to_string()]);
        checks.insert(name.into(), json!({"value": value, "threshold": threshold, "pass": ok}));
    };

    let h = 1e-4;
    let density: Vec<Complex64> =
        bd.points.iter().map(|p| Complex64::new((3.0 * p.x).sin() + p.y * p.y, p.x)).collect();
    let nodes = jump_sample_nodes(&bd, h, 7);
    record(&mut table, "jump_residual", jump_residual(&bd, &density, &nodes, h)?, JUMP_TOLERANCE, true);
    let spec = NpSpectrum::compute(&bd)?;
    record(&mut table, "calderon_residual", spec.calderon_residual(&bd), CALDERON_TOLERANCE, true);
    let ks = [10f64.powf(-1.5), 10f64.powf(-2.0), 10f64.powf(-2.5)];
    let expansion = layer_expansion_check(&bd, &ks)?;
    record(&mut table, "single_layer_expansion_slope", expansion.single_slope, SINGLE_LAYER_SLOPE, false);
    record(&mut table, "adjoint_np_expansion_slope", expansion.adjoint_slope, ADJOINT_SLOPE, false);

    let mut plots = Vec::new();
    if geometry == (GeometrySpec::Disk { radius: 1.0 }) {
        let cfg = wave(config, Subcommand::Validate)?;
        let sol = solve(&bd, &cfg)?;
        let incidence = cfg.direction.y.atan2(cfg.direction.x);
        let series = Mie::new(cfg.eps(), cfg.omega(), incidence, 30);
        let mut plot = Series::new("series_mismatch", "angle", "relative_error");
        let mut worst: f64 = 0.0;
        for x in series_targets() {
            let num_field = sol.field(&x)?.scattered;
            let exact = series.scattered(&x);
            let err = (num_field - exact).norm() / exact.norm();
            worst = worst.max(err);
            plot.points.push((x.y.atan2(x.x), err));
        }
        plots.push(plot);
        record(&mut table, "series_mismatch", worst, SERIES_TOLERANCE, true);
    }
    Ok(Artifacts {
        table,
        derived: json!({
            "nodes": bd.len(),
            "jump_sample_nodes": nodes.len(),
            "single_layer_expansion_residuals": expansion.single_layer,
            "adjoint_np_expansion_residuals": expansion.adjoint,
            "expansion_wavenumbers": expansion.wavenumbers,
        }),
        diagnostics: Value::Object(checks),
        plots,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_error(text: &str) -> (usize, String) {
        match parse_config(text) {
            Err(Error::Config { line, message }) => (line, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn happy_path_scatter_config() {
        let c = parse_config("L=1\ndelta=0.05\nomega=0.01\nd=1,0\neps_re=-9.1\neps_im=0.1").unwrap();
        assert_eq!(c.geometry, Some(GeometrySpec::Rod { length: 1.0, delta: 0.05 }));
        assert_eq!(c.material, Some(MaterialSpec::Permittivity { eps_re: -9.1, eps_im: 0.1 }));
        assert_eq!(c.omega, Some(0.01));
        assert_eq!(c.direction, [1.0, 0.0]);
        assert!(c.defaulted.contains(&"resolution".to_string()));
        assert!(c.defaulted.contains(&"R".to_string()));
        assert!(!c.defaulted.contains(&"d".to_string()));
    }

    #[test]
    fn thick_rod_is_rejected() {
        let (line, message) = config_error("delta=0.6\nL=1");
        assert_eq!(line, 1);
        assert!(message.contains("L/2"), "{message}");
    }

    #[test]
    fn enz_target_is_rejected() {
        let (line, message) = config_error("lambda_target=0.5");
        assert_eq!(line, 1);
        assert!(message.contains("epsilon-near-zero"), "{message}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(config_error("# comment\nL = 1\nfoo = 2").0, 3);
        let (line, message) = config_error("L=1\n\ndelta = thin");
        assert_eq!(line, 3);
        assert!(message.contains("number"));
        assert_eq!(config_error("L=1\nL=2").0, 2);
        assert_eq!(config_error("L=1\ndelta=0.1\nradius=1").0, 3);
        assert_eq!(config_error("eps_re=2\nlambda_target=0.1\nrho=-0.1").0, 3);
        assert_eq!(config_error("d=1").0, 1);
        assert_eq!(config_error("cap_kernel=half").0, 1);
    }

    #[test]
    fn comments_and_whitespace_are_ignored() {
        let c = parse_config("  geometry = disk   # unit disk\nradius=1\n\n# done\nlambda_target = 0.1\nrho=-0.01")
            .unwrap();
        assert_eq!(c.geometry, Some(GeometrySpec::Disk { radius: 1.0 }));
        assert!(matches!(c.material, Some(MaterialSpec::Resonant { .. })));
    }

    #[test]
    fn missing_keys_are_named() {
        let mut c = parse_config("L=1\ndelta=0.05").unwrap();
        let err = scatter(&mut c).unwrap_err().to_string();
        assert!(err.contains("eps_re"), "{err}");
        let mut c = parse_config("L=1\ndelta=0.05\neps_re=2").unwrap();
        let err = scatter(&mut c).unwrap_err().to_string();
        assert!(err.contains("omega"), "{err}");
    }

    #[test]
    fn sweep_plan_overrides() {
        let mut c = parse_config("preset=control\nomega=0.02\nrho_min=1e-3\nrho_max=1e-1\nrho_count=3\ndelta=0.1\nL=1")
            .unwrap();
        let plan = sweep_plan(&mut c).unwrap();
        assert_eq!(plan.points.len(), 3);
        assert!(plan.points.iter().all(|p| p.omega == 0.02 && p.delta == 0.1));
        assert!((plan.points[1].rho + 1e-2).abs() < 1e-15);
        assert_eq!(plan.target, Target::FixedTheta { theta: 0.25 });
        let mut c = parse_config("eps_re=2\nomega=0.1").unwrap();
        assert!(sweep_plan(&mut c).is_err());
    }

    #[test]
    fn numbers_keep_full_precision() {
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(num(x), "3.0000000000000004e-1");
    }

    #[test]
    fn spectrum_run_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_config("geometry=ellipse\na=1\nb=0.5\nresolution=64").unwrap();
        let report = run(&c, Subcommand::Spectrum, dir.path()).unwrap();
        let csv = fs::read_to_string(&report.csv).unwrap();
        assert!(csv.starts_with("j [1],lambda [1],a_j [1],parity_x1,parity_x2\n"));
        assert_eq!(csv.lines().count(), 65);
        let summary: Value = serde_json::from_str(&fs::read_to_string(&report.json).unwrap()).unwrap();
        assert_eq!(summary["status"], "ok");
        assert!(summary["inputs"]["defaulted"].as_array().unwrap().iter().any(|v| v == "grid_size"));
        let dat = fs::read_to_string(&report.plots[0]).unwrap();
        assert!(dat.starts_with("# j lambda_j\n"));
    }

    #[test]
    fn failure_is_recorded_in_json() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_config("L=1\ndelta=0.05\nomega=0.01\neps_re=4\nresolution=64\ntargets=0,0.06").unwrap();
        let err = run(&c, Subcommand::Asymptotic, dir.path()).unwrap_err();
        assert!(matches!(err, Error::NearBoundary { .. }), "{err}");
        let summary: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("asymptotic.json")).unwrap()).unwrap();
        assert_eq!(summary["status"], "error");
        assert!(!summary["error"].as_str().unwrap().is_empty());
    }
}
