//! Run configuration: a strict TOML schema (unknown keys rejected), its
//! resolution into concrete parameters with every default echoed, and the
//! shared binary grid format.
//!
//! See the README for the documented schema.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Domain, DomainError, GridSdf};
use crate::geom::AxisBox;
use crate::reflect::{ThicknessParams, DEFAULT_KAPPA, DEFAULT_LAMBDA};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field `{0}`: {1}")]
    Invalid(&'static str, String),
    #[error("domain: {0}")]
    Domain(#[from] DomainError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("grid file: {0}")]
    GridFormat(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub format_version: u32,
    pub seed: Option<u64>,
    pub domain: DomainTable,
    pub window: Option<WindowTable>,
    pub thickness: Option<ThicknessTable>,
    pub sobolev: Option<SobolevTable>,
    pub battery: Option<BatteryTable>,
    pub budget: Option<BudgetTable>,
    pub extend: Option<ExtendTable>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainTable {
    pub kind: String,
    pub dimension: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub radius: Option<f64>,
    pub half_widths: Option<Vec<f64>>,
    pub size: Option<f64>,
    pub n_max: Option<u32>,
    pub file: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowTable {
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub m_max: Option<i32>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThicknessTable {
    pub m_multiplier: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevTable {
    pub s_grid: Option<Vec<f64>>,
    pub p_grid: Option<Vec<f64>>,
    /// Collar depths as multiples of `inr(Omega)`.
    pub collar_factors: Option<Vec<f64>>,
    pub include_infinite_collar: Option<bool>,
    pub s_sequence: Option<Vec<f64>>,
    /// Allow `s = 1` points (valid only for the `int-ext`/`simpl1` bounds).
    pub allow_s_one: Option<bool>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryTable {
    pub members: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetTable {
    pub seminorm_samples: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendTable {
    pub function: Option<String>,
    pub grid_file: Option<String>,
    pub field_resolution: Option<usize>,
    pub profile_axis: Option<usize>,
}

/// Fully resolved configuration; serialized back out so that a run echoes
/// every default it filled in.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConfig {
    pub format_version: u32,
    pub seed: u64,
    pub domain_kind: String,
    pub dimension: usize,
    pub domain_params: Vec<(String, f64)>,
    pub grid_file: Option<String>,
    pub window_lo: Vec<f64>,
    pub window_hi: Vec<f64>,
    pub m_max: i32,
    pub m_multiplier: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub s_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub collar_factors: Vec<f64>,
    pub include_infinite_collar: bool,
    pub s_sequence: Vec<f64>,
    pub battery_members: Vec<String>,
    pub seminorm_samples: u64,
    pub extend_function: String,
    pub extend_grid_file: Option<String>,
    pub field_resolution: usize,
    pub profile_axis: usize,
}

pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    if raw.format_version != 1 {
        return Err(ConfigError::Invalid(
            "format_version",
            format!("unsupported version {}", raw.format_version),
        ));
    }
    Ok(raw)
}

fn require(
    cond: bool,
    field: &'static str,
    msg: impl Into<String>,
) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::Invalid(field, msg.into()))
    }
}

fn reject_extras(
    t: &DomainTable,
    allowed: &[&str],
) -> Result<(), ConfigError> {
    let fields: [(&str, bool); 6] = [
        ("a", t.a.is_some()),
        ("b", t.b.is_some()),
        ("radius", t.radius.is_some()),
        ("half_widths", t.half_widths.is_some()),
        ("size", t.size.is_some()),
        ("n_max", t.n_max.is_some()),
    ];
    for (name, present) in fields {
        if present && !allowed.contains(&name) {
            return Err(ConfigError::Invalid(
                "domain",
                format!("parameter `{name}` does not apply to kind `{}`", t.kind),
            ));
        }
    }
    if t.file.is_some() && !allowed.contains(&"file") {
        return Err(ConfigError::Invalid(
            "domain",
            format!("parameter `file` does not apply to kind `{}`", t.kind),
        ));
    }
    Ok(())
}

/// Build the typed domain for a fixed dimension.
pub fn build_domain<const D: usize>(
    t: &DomainTable,
    base_dir: &Path,
) -> Result<Arc<Domain<D>>, ConfigError> {
    require(
        t.dimension == D,
        "domain.dimension",
        format!("expected {D}, got {}", t.dimension),
    )?;
    let d = match t.kind.as_str() {
        "interval" => {
            reject_extras(t, &["a", "b"])?;
            let a = t.a.ok_or(ConfigError::Invalid("domain.a", "required".into()))?;
            let b = t.b.ok_or(ConfigError::Invalid("domain.b", "required".into()))?;
            Domain::<D>::interval(a, b)?
        }
        "ball" => {
            reject_extras(t, &["radius"])?;
            let r = t
                .radius
                .ok_or(ConfigError::Invalid("domain.radius", "required".into()))?;
            Domain::<D>::ball(r)?
        }
        "box" => {
            reject_extras(t, &["half_widths"])?;
            let hw = t
                .half_widths
                .clone()
                .ok_or(ConfigError::Invalid("domain.half_widths", "required".into()))?;
            require(
                hw.len() == D,
                "domain.half_widths",
                format!("expected {D} entries"),
            )?;
            let mut arr = [0.0; D];
            arr.copy_from_slice(&hw);
            Domain::<D>::axis_box(arr)?
        }
        "l_shape" => {
            reject_extras(t, &["size"])?;
            let s = t.size.ok_or(ConfigError::Invalid("domain.size", "required".into()))?;
            Domain::<D>::l_shape(s)?
        }
        "half_space" => {
            reject_extras(t, &[])?;
            Domain::<D>::half_space()?
        }
        "annuli_balls" => {
            reject_extras(t, &["n_max"])?;
            let n =
                t.n_max.ok_or(ConfigError::Invalid("domain.n_max", "required".into()))?;
            Domain::<D>::annuli_balls(n)?
        }
        "grid_sdf" => {
            reject_extras(t, &["file"])?;
            let file = t
                .file
                .clone()
                .ok_or(ConfigError::Invalid("domain.file", "required".into()))?;
            let grid = read_grid::<D>(&base_dir.join(file))?;
            Domain::from_grid(grid)?
        }
        other => {
            return Err(ConfigError::Invalid(
                "domain.kind",
                format!("unknown domain kind `{other}`"),
            ));
        }
    };
    Ok(Arc::new(d))
}

pub fn domain_param_echo(t: &DomainTable) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if let Some(v) = t.a {
        out.push(("a".to_string(), v));
    }
    if let Some(v) = t.b {
        out.push(("b".to_string(), v));
    }
    if let Some(v) = t.radius {
        out.push(("radius".to_string(), v));
    }
    if let Some(hw) = &t.half_widths {
        for (j, v) in hw.iter().enumerate() {
            out.push((format!("half_width_{j}"), *v));
        }
    }
    if let Some(v) = t.size {
        out.push(("size".to_string(), v));
    }
    if let Some(v) = t.n_max {
        out.push(("n_max".to_string(), v as f64));
    }
    out
}

/// Default window: the boundary bounding box inflated by its own diameter,
/// snapped later by the decomposition.
pub fn resolve_window<const D: usize>(
    domain: &Domain<D>,
    w: &Option<WindowTable>,
) -> Result<(AxisBox<D>, i32), ConfigError> {
    let bbox = domain.bounding_box();
    let default_box = bbox.inflate(bbox.diam().max(1e-9));
    let table_lo = w.as_ref().and_then(|t| t.lo.clone());
    let table_hi = w.as_ref().and_then(|t| t.hi.clone());
    let window = match (table_lo, table_hi) {
        (Some(lo), Some(hi)) => {
            require(lo.len() == D && hi.len() == D, "window", format!("expected {D} coords"))?;
            let mut alo = [0.0; D];
            let mut ahi = [0.0; D];
            alo.copy_from_slice(&lo);
            ahi.copy_from_slice(&hi);
            for j in 0..D {
                require(alo[j] < ahi[j], "window", "lo must be below hi".to_string())?;
            }
            AxisBox::new(alo, ahi)
        }
        (None, None) => default_box,
        _ => {
            return Err(ConfigError::Invalid(
                "window",
                "lo and hi must be given together".into(),
            ));
        }
    };
    let m_max = w
        .as_ref()
        .and_then(|t| t.m_max)
        .unwrap_or(if D == 1 { 14 } else { 10 });
    require(m_max > 0 && m_max <= 40, "window.m_max", "must lie in 1..=40".to_string())?;
    Ok((window, m_max))
}

pub fn resolve_thickness<const D: usize>(
    domain: &Domain<D>,
    t: &Option<ThicknessTable>,
) -> ThicknessParams {
    let auto = ThicknessParams::for_extension(domain);
    let mut params = auto;
    if let Some(tt) = t {
        if let Some(m) = tt.m_multiplier {
            params.m_multiplier = m;
        }
        if let Some(l) = tt.lambda {
            params.lambda = l;
        }
        if let Some(k) = tt.kappa {
            params.kappa = k;
        }
    }
    params
}

pub fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

pub fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

// ---------------------------------------------------------------------------
// Binary grid format (shared by SDF input and field export)
// ---------------------------------------------------------------------------

const GRID_MAGIC: &[u8; 8] = b"NLGRID01";

/// Write a row-major f64 grid with the versioned header
/// `magic, u32 d, u64 dims[d], f64 origin[d], f64 spacing[d]`.
pub fn write_grid<const D: usize>(
    mut out: impl Write,
    dims: &[usize; D],
    origin: &[f64; D],
    spacing: &[f64; D],
    values: &[f64],
) -> Result<(), ConfigError> {
    let n: usize = dims.iter().product();
    if n != values.len() {
        return Err(ConfigError::GridFormat(format!(
            "value count {} does not match dims {:?}",
            values.len(),
            dims
        )));
    }
    out.write_all(GRID_MAGIC)?;
    out.write_all(&(D as u32).to_le_bytes())?;
    for &d in dims {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for &o in origin {
        out.write_all(&o.to_le_bytes())?;
    }
    for &s in spacing {
        out.write_all(&s.to_le_bytes())?;
    }
    for &v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_grid<const D: usize>(path: &Path) -> Result<GridSdf<D>, ConfigError> {
    let mut file = std::fs::File::open(path)?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)?;
    read_grid_bytes(&buf)
}

pub fn read_grid_bytes<const D: usize>(buf: &[u8]) -> Result<GridSdf<D>, ConfigError> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], ConfigError> {
        if *pos + n > buf.len() {
            return Err(ConfigError::GridFormat("truncated grid file".into()));
        }
        let s = &buf[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let magic = take(&mut pos, 8)?;
    if magic != GRID_MAGIC {
        return Err(ConfigError::GridFormat("bad magic (expected NLGRID01)".into()));
    }
    let d = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    if d != D {
        return Err(ConfigError::GridFormat(format!(
            "grid dimension {d} does not match configured dimension {D}"
        )));
    }
    let mut dims = [0usize; D];
    for dim in dims.iter_mut() {
        *dim = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
    }
    let mut origin = [0.0; D];
    for o in origin.iter_mut() {
        *o = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    }
    let mut spacing = [0.0; D];
    for s in spacing.iter_mut() {
        *s = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    }
    let n: usize = dims.iter().product();
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
    }
    if pos != buf.len() {
        return Err(ConfigError::GridFormat("trailing bytes after grid data".into()));
    }
    Ok(GridSdf { dims, origin, spacing, values })
}
