//! Pipeline orchestration behind the `nltrace` subcommands: resolve the
//! config, build the geometry once, run the requested stage, and write
//! deterministic artifacts into the output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::battery::{member_by_name, standard_battery, BatteryMember};
use crate::config::{
    build_domain, domain_param_echo, parse, resolve_thickness, resolve_window, write_grid,
    ConfigError, RawConfig, ResolvedConfig,
};
use crate::domain::{plumpness_probe, RegionSpec, SobolevParams};
use crate::extend::{
    build_extension, trace_limit_probe, ComplementFunction, ExtensionOperator, GridFunction,
    DEFAULT_QUAD_ORDER,
};
use crate::reflect::{build_reflection, thickness_audit, AuditSide, ThicknessParams};
use crate::seminorm::{
    estimate_pair, EstimateOptions, KernelKind, PairFunctional, SeminormEstimate,
};
use crate::verify::{
    check_bbm_limit, check_char_threshold, check_extension_bounds, check_norm_equivalence,
    ExtensionLab, InequalityReport,
};
use crate::whitney::GeometryBundle;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("whitney: {0}")]
    Whitney(#[from] crate::whitney::WhitneyError),
    #[error("extension: {0}")]
    Extend(#[from] crate::extend::ExtendError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

/// Flags shared by all subcommands.
#[derive(Clone, Debug)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub budget_scale: f64,
    pub threads: Option<usize>,
}

impl Default for RunOverrides {
    fn default() -> Self {
        Self { seed: None, budget_scale: 1.0, threads: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    Clean,
    Violations(usize),
    BudgetStarved(usize),
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunOutcome::Clean => 0,
            RunOutcome::Violations(_) => 2,
            RunOutcome::BudgetStarved(_) => 3,
        }
    }
}

/// Everything resolved and geometry built, for one dimension.
pub struct Pipeline<const D: usize> {
    pub resolved: ResolvedConfig,
    pub geo: Arc<GeometryBundle<D>>,
    pub thickness: ThicknessParams,
    pub battery: Vec<BatteryMember<D>>,
    pub base_dir: PathBuf,
}

pub const DEFAULT_BUDGET: u64 = 200_000;

const KNOWN_INEQUALITIES: [&str; 7] = [
    "norm-equivalence",
    "int-ext",
    "int-int",
    "simpl1",
    "simpl2",
    "bbm",
    "char-threshold",
];

pub fn load_config(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = fs::read_to_string(path)?;
    parse(&text)
}

pub fn build_pipeline<const D: usize>(
    raw: &RawConfig,
    base_dir: &Path,
    overrides: &RunOverrides,
) -> Result<Pipeline<D>, CliError> {
    let domain = build_domain::<D>(&raw.domain, base_dir)?;
    let (window, m_max) = resolve_window(domain.as_ref(), &raw.window)?;
    let thickness = resolve_thickness(domain.as_ref(), &raw.thickness);
    let seed = overrides.seed.or(raw.seed).unwrap_or(0);
    let sob = raw.sobolev.clone();
    let s_grid = sob
        .as_ref()
        .and_then(|t| t.s_grid.clone())
        .unwrap_or_else(|| vec![0.1, 0.25, 0.5, 0.75, 0.9, 0.95]);
    let p_grid = sob
        .as_ref()
        .and_then(|t| t.p_grid.clone())
        .unwrap_or_else(|| vec![1.0, 2.0, 3.0]);
    let collar_factors = sob
        .as_ref()
        .and_then(|t| t.collar_factors.clone())
        .unwrap_or_else(|| vec![0.25, 1.0]);
    let include_inf = sob
        .as_ref()
        .and_then(|t| t.include_infinite_collar)
        .unwrap_or(true);
    let s_sequence = sob
        .as_ref()
        .and_then(|t| t.s_sequence.clone())
        .unwrap_or_else(|| vec![0.5, 0.7, 0.9, 0.95, 0.99]);
    let allow_s_one = sob.as_ref().and_then(|t| t.allow_s_one).unwrap_or(false);
    for &s in &s_grid {
        if !(s > 0.0 && s <= 1.0) {
            return Err(CliError::Other(format!("sobolev.s_grid entry {s} outside (0, 1]")));
        }
        if s == 1.0 && !allow_s_one {
            return Err(CliError::Other(
                "sobolev.s_grid contains s = 1: valid only for the int-ext/simpl1 bounds; \
                 set allow_s_one = true to run those (int-int/simpl2 require 0 < s < 1 and \
                 will be skipped at s = 1)"
                    .into(),
            ));
        }
    }
    for &p in &p_grid {
        if !(1.0..f64::INFINITY).contains(&p) {
            return Err(CliError::Other(format!("sobolev.p_grid entry {p} outside [1, inf)")));
        }
    }
    for &s in &s_sequence {
        if !(s > 0.0 && s < 1.0) {
            return Err(CliError::Other(format!(
                "sobolev.s_sequence entry {s} outside (0, 1)"
            )));
        }
    }
    let battery_names = raw
        .battery
        .as_ref()
        .and_then(|t| t.members.clone())
        .unwrap_or_else(|| {
            vec![
                "const_one".into(),
                "coordinate".into(),
                "indicator".into(),
                "sqrt_collar".into(),
                "smooth_bump".into(),
                "random_piecewise".into(),
            ]
        });
    let budget_base = raw
        .budget
        .as_ref()
        .and_then(|t| t.seminorm_samples)
        .unwrap_or(DEFAULT_BUDGET);
    let budget = ((budget_base as f64 * overrides.budget_scale) as u64).max(10_000);
    let geo = Arc::new(GeometryBundle::build(domain.clone(), &window, m_max)?);
    let battery_all = standard_battery(domain.as_ref(), seed);
    let mut battery = Vec::new();
    for name in &battery_names {
        match member_by_name(&battery_all, name) {
            Some(m) => battery.push(m),
            None => {
                return Err(CliError::Other(format!("unknown battery member `{name}`")));
            }
        }
    }
    let extend_function = raw
        .extend
        .as_ref()
        .and_then(|t| t.function.clone())
        .unwrap_or_else(|| "sqrt_collar".into());
    let resolved = ResolvedConfig {
        format_version: 1,
        seed,
        domain_kind: raw.domain.kind.clone(),
        dimension: D,
        domain_params: domain_param_echo(&raw.domain),
        grid_file: raw.domain.file.clone(),
        window_lo: geo.window.lo.to_vec(),
        window_hi: geo.window.hi.to_vec(),
        m_max,
        m_multiplier: thickness.m_multiplier,
        lambda: thickness.lambda,
        kappa: thickness.kappa,
        s_grid,
        p_grid,
        collar_factors,
        include_infinite_collar: include_inf,
        s_sequence,
        battery_members: battery_names,
        seminorm_samples: budget,
        extend_function,
        extend_grid_file: raw.extend.as_ref().and_then(|t| t.grid_file.clone()),
        field_resolution: raw
            .extend
            .as_ref()
            .and_then(|t| t.field_resolution)
            .unwrap_or(64),
        profile_axis: raw.extend.as_ref().and_then(|t| t.profile_axis).unwrap_or(0),
    };
    if resolved.profile_axis >= D {
        return Err(CliError::Other(format!(
            "extend.profile_axis {} out of range for dimension {D}",
            resolved.profile_axis
        )));
    }
    Ok(Pipeline {
        resolved,
        geo,
        thickness,
        battery,
        base_dir: base_dir.to_path_buf(),
    })
}

fn write_resolved(out_dir: &Path, resolved: &ResolvedConfig) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    let text = toml::to_string_pretty(resolved)
        .map_err(|e| CliError::Other(format!("serialize config: {e}")))?;
    fs::write(out_dir.join("resolved_config.toml"), text)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)
        .map_err(|e| CliError::Other(format!("serialize: {e}")))?;
    f.write_all(b"\n")?;
    Ok(())
}

/// `decompose`: cube tables for both sides, reflection tables in both
/// directions, the thickness audit, and the plumpness probe.
pub fn cmd_decompose<const D: usize>(p: &Pipeline<D>, out_dir: &Path) -> Result<RunOutcome, CliError> {
    write_resolved(out_dir, &p.resolved)?;
    let geo = &p.geo;
    let mut f = fs::File::create(out_dir.join("cubes_omega.jsonl"))?;
    geo.w_omega.export_jsonl(&mut f)?;
    let mut f = fs::File::create(out_dir.join("cubes_complement.jsonl"))?;
    geo.w_complement.export_jsonl(&mut f)?;

    let unit = ThicknessParams {
        m_multiplier: 1.0,
        lambda: p.thickness.lambda,
        kappa: p.thickness.kappa,
        lambda_mode: true,
    };
    let (imap, ireport) = thickness_audit(&geo.w_omega, &geo.w_complement, AuditSide::Interior, &unit);
    let (emap, ereport) =
        thickness_audit(&geo.w_omega, &geo.w_complement, AuditSide::Exterior, &p.thickness);
    let mut f = fs::File::create(out_dir.join("reflection_interior.jsonl"))?;
    imap.export_jsonl(&mut f)?;
    let mut f = fs::File::create(out_dir.join("reflection_exterior.jsonl"))?;
    emap.export_jsonl(&mut f)?;
    write_json(&out_dir.join("thickness_audit.json"), &serde_json::json!({
        "interior": ireport,
        "exterior": ereport,
    }))?;

    // Plumpness probe with dyadic radii below half the closure diameter.
    let diam = geo.domain.bounding_box().diam();
    let r_grid: Vec<f64> = (1..=5).map(|k| diam * 2f64.powi(-k)).collect();
    let plump = plumpness_probe(geo.domain.as_ref(), 0.2, &r_grid, 24)
        .map_err(|e| CliError::Other(e.to_string()))?;
    write_json(&out_dir.join("plumpness.json"), &plump)?;

    println!(
        "decompose: omega cubes {}, complement cubes {}, interior audit pass {}, exterior audit pass {}, plump (kappa=0.2) {}",
        geo.w_omega.len(),
        geo.w_complement.len(),
        ireport.pass,
        ereport.pass,
        plump.all_pass
    );
    if ireport.pass && ereport.pass {
        Ok(RunOutcome::Clean)
    } else {
        Ok(RunOutcome::Violations(ireport.failures.len() + ereport.failures.len()))
    }
}

fn extension_for<const D: usize>(
    p: &Pipeline<D>,
) -> Result<(ExtensionOperator<D>, BatteryMember<D>), CliError> {
    let lab_reflection = Arc::new(build_reflection(
        &p.geo.w_omega,
        &p.geo.w_complement,
        &p.thickness,
    ));
    let cf: ComplementFunction<D>;
    let member: BatteryMember<D>;
    if let Some(grid_file) = &p.resolved.extend_grid_file {
        let grid = crate::config::read_grid::<D>(&p.base_dir.join(grid_file))?;
        cf = ComplementFunction::Grid(Arc::new(GridFunction {
            dims: grid.dims,
            origin: grid.origin,
            spacing: grid.spacing,
            values: grid.values,
        }));
        member = member_by_name(&standard_battery(p.geo.domain.as_ref(), p.resolved.seed), "const_one")
            .unwrap();
    } else {
        let all = standard_battery(p.geo.domain.as_ref(), p.resolved.seed);
        member = member_by_name(&all, &p.resolved.extend_function).ok_or_else(|| {
            CliError::Other(format!(
                "unknown battery function `{}`",
                p.resolved.extend_function
            ))
        })?;
        cf = member.complement_function();
    }
    let ext = build_extension(cf, p.geo.w_omega.clone(), lab_reflection, DEFAULT_QUAD_ORDER)?;
    Ok((ext, member))
}

/// `extend`: build the operator, export the field on a uniform grid (binary
/// format shared with the SDF input), a CSV line profile, the coefficient
/// table, and a trace probe.
pub fn cmd_extend<const D: usize>(p: &Pipeline<D>, out_dir: &Path) -> Result<RunOutcome, CliError> {
    write_resolved(out_dir, &p.resolved)?;
    let (ext, member) = extension_for(p)?;

    // Coefficient table.
    let mut f = fs::File::create(out_dir.join("coefficients.jsonl"))?;
    writeln!(
        f,
        "{}",
        serde_json::json!({"format": "extension-coefficients", "version": 1})
    )?;
    for i in p.geo.w_omega.selected() {
        if let Some(a) = ext.coefficient(i) {
            let rec = p.geo.w_omega.record(i);
            writeln!(
                f,
                "{}",
                serde_json::json!({"cube": rec.cube.id(), "a": a})
            )?;
        }
    }

    // Field on a uniform grid over the core window (NaN marks uncovered
    // interior points: refused, not extrapolated).
    let core = p.geo.core_window();
    let n = p.resolved.field_resolution;
    let mut dims = [0usize; D];
    let mut origin = [0.0; D];
    let mut spacing = [0.0; D];
    for j in 0..D {
        dims[j] = n;
        origin[j] = core.lo[j];
        spacing[j] = core.side(j) / (n - 1) as f64;
    }
    let total: usize = dims.iter().product();
    let mut values = Vec::with_capacity(total);
    let mut idx = [0usize; D];
    loop {
        let mut x = [0.0; D];
        for j in 0..D {
            x[j] = origin[j] + idx[j] as f64 * spacing[j];
        }
        values.push(ext.evaluate_opt(&x).unwrap_or(f64::NAN));
        let mut j = D;
        loop {
            if j == 0 {
                break;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < dims[j] {
                break;
            }
            idx[j] = 0;
            if j == 0 {
                j = usize::MAX;
                break;
            }
        }
        if j == usize::MAX {
            break;
        }
    }
    let mut f = fs::File::create(out_dir.join("ext_field.bin"))?;
    write_grid::<D>(&mut f, &dims, &origin, &spacing, &values)?;

    // CSV line profile through the window center along the profile axis.
    let axis = p.resolved.profile_axis;
    let mut f = fs::File::create(out_dir.join("ext_profile.csv"))?;
    writeln!(f, "t,value,side")?;
    let samples = 1024;
    let c = core.center();
    for i in 0..=samples {
        let t = core.lo[axis] + core.side(axis) * i as f64 / samples as f64;
        let mut x = c;
        x[axis] = t;
        let side = if p.geo.domain.member(&x) { "omega" } else { "complement" };
        match ext.evaluate_opt(&x) {
            Some(v) => writeln!(f, "{t},{v},{side}")?,
            None => writeln!(f, "{t},nan,{side}")?,
        }
    }

    // Trace probe at a canonical boundary point.
    let z0 = p
        .geo
        .domain
        .nearest_boundary_point(&p.geo.domain.bounding_box().center());
    let g_limit = member
        .sup
        .map(|_| (member.f)(&nudge_outward(p.geo.domain.as_ref(), &z0)))
        .unwrap_or_else(|| (member.f)(&nudge_outward(p.geo.domain.as_ref(), &z0)));
    let probe = trace_limit_probe(&ext, &z0, g_limit, p.geo.domain.inr_omega().min(1.0) * 0.5, 20);
    write_json(&out_dir.join("trace_probe.json"), &probe)?;

    println!(
        "extend: field {}^{} exported, {} coefficients, trace probe deepest gap {:?}",
        n,
        D,
        ext.reflection.entries.len(),
        probe.deepest_gap
    );
    Ok(RunOutcome::Clean)
}

fn nudge_outward<const D: usize>(domain: &crate::domain::Domain<D>, z0: &[f64; D]) -> [f64; D] {
    let n = crate::extend::inward_normal(domain, z0);
    let mut x = *z0;
    for j in 0..D {
        x[j] -= 1e-9 * n[j];
    }
    x
}

#[derive(Serialize)]
struct SeminormRecord {
    function: String,
    s: f64,
    p: f64,
    kernel: String,
    estimate: SeminormEstimate,
}

/// `seminorm`: cross and trace-kernel estimates for the configured battery
/// over the `(s, p)` grid.
pub fn cmd_seminorm<const D: usize>(p: &Pipeline<D>, out_dir: &Path) -> Result<RunOutcome, CliError> {
    write_resolved(out_dir, &p.resolved)?;
    let mut records = Vec::new();
    for member in &p.battery {
        let g = |x: &crate::geom::Point<D>| Some((member.f)(x));
        for &pp in &p.resolved.p_grid {
            for &s in &p.resolved.s_grid {
                if s >= 1.0 {
                    continue;
                }
                let params = SobolevParams::new(s, pp);
                let opts = EstimateOptions::new(p.resolved.seminorm_samples, p.resolved.seed);
                for (name, kernel, region_a) in [
                    ("cross", KernelKind::Cross, RegionSpec::Omega),
                    ("trace", KernelKind::Offset, RegionSpec::OmegaComplement),
                ] {
                    let fun = PairFunctional {
                        g: &g,
                        region_a,
                        region_b: RegionSpec::OmegaComplement,
                        kernel,
                        params,
                        far_field: member.far_field,
                    };
                    let est = estimate_pair(p.geo.as_ref(), &fun, &opts);
                    records.push(SeminormRecord {
                        function: member.name.into(),
                        s,
                        p: pp,
                        kernel: name.into(),
                        estimate: est,
                    });
                }
            }
        }
    }
    write_json(&out_dir.join("estimates.json"), &records)?;
    println!("seminorm: {} estimates written", records.len());
    Ok(RunOutcome::Clean)
}

#[derive(Serialize)]
pub struct VerifyBundle {
    pub interior_audit: crate::reflect::ThicknessAuditReport,
    pub exterior_audit: crate::reflect::ThicknessAuditReport,
    pub norm_equivalence: InequalityReport,
    pub extension_bounds: Vec<InequalityReport>,
    pub bbm: crate::verify::BbmReport,
    pub char_threshold: crate::verify::ThresholdReport,
    pub violations: usize,
    pub budget_starved: usize,
}

/// `verify`: all four checks; the returned outcome carries the exit-code
/// semantics (violations beat budget starvation).
pub fn cmd_verify<const D: usize>(p: &Pipeline<D>, out_dir: &Path) -> Result<RunOutcome, CliError> {
    write_resolved(out_dir, &p.resolved)?;
    let geo = &p.geo;
    let budget = p.resolved.seminorm_samples;
    let seed = p.resolved.seed;

    let unit = ThicknessParams {
        m_multiplier: 1.0,
        lambda: p.thickness.lambda,
        kappa: p.thickness.kappa,
        lambda_mode: true,
    };
    let (_, interior_audit) =
        thickness_audit(&geo.w_omega, &geo.w_complement, AuditSide::Interior, &unit);
    let (_, exterior_audit) =
        thickness_audit(&geo.w_omega, &geo.w_complement, AuditSide::Exterior, &p.thickness);

    let norm_eq = check_norm_equivalence(
        geo.as_ref(),
        &p.battery,
        &p.resolved.s_grid,
        &p.resolved.p_grid,
        budget,
        seed,
    );

    let inr = geo.domain.inr_omega();
    let mut delta_eps = Vec::new();
    {
        let mut levels: Vec<f64> = p
            .resolved
            .collar_factors
            .iter()
            .map(|f| f * if inr.is_finite() { inr } else { 1.0 })
            .collect();
        if p.resolved.include_infinite_collar {
            levels.push(f64::INFINITY);
        }
        for (i, &d) in levels.iter().enumerate() {
            for &e in &levels[i..] {
                delta_eps.push((d, e));
            }
        }
    }
    let lab = ExtensionLab::build(geo.clone());
    let mut extension_bounds = Vec::new();
    for &pp in &p.resolved.p_grid {
        let mut reports = check_extension_bounds(
            &lab,
            &p.battery,
            &p.resolved.s_grid,
            pp,
            &delta_eps,
            budget,
            seed,
        );
        extension_bounds.append(&mut reports);
    }

    let bbm_p = if p.resolved.p_grid.contains(&2.0) {
        2.0
    } else {
        p.resolved.p_grid[0]
    };
    let bbm = check_bbm_limit(&lab, &p.battery, bbm_p, &p.resolved.s_sequence, budget, seed);

    let threshold = check_char_threshold(
        geo.as_ref(),
        &p.battery,
        &p.resolved.p_grid,
        &p.resolved.s_grid,
        budget,
        seed,
    );

    let mut violations = norm_eq.violations + threshold.violations;
    for r in &extension_bounds {
        violations += r.violations;
    }
    if !interior_audit.pass {
        violations += interior_audit.failures.len().max(1);
    }
    if !exterior_audit.pass {
        violations += exterior_audit.failures.len().max(1);
    }
    let budget_starved = threshold.budget_starved;

    let bundle = VerifyBundle {
        interior_audit,
        exterior_audit,
        norm_equivalence: norm_eq,
        extension_bounds,
        bbm,
        char_threshold: threshold,
        violations,
        budget_starved,
    };
    write_json(&out_dir.join("report.json"), &bundle)?;
    fs::write(out_dir.join("report.txt"), human_summary(&bundle))?;
    print!("{}", human_summary(&bundle));
    if violations > 0 {
        Ok(RunOutcome::Violations(violations))
    } else if budget_starved > 0 {
        Ok(RunOutcome::BudgetStarved(budget_starved))
    } else {
        Ok(RunOutcome::Clean)
    }
}

fn human_summary(b: &VerifyBundle) -> String {
    let mut s = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(
        s,
        "thickness audits: interior pass={} (C={:.3e}, overlap={}), exterior pass={} (C={:.3e}, overlap={})",
        b.interior_audit.pass,
        b.interior_audit.c_achieved,
        b.interior_audit.n_overlap,
        b.exterior_audit.pass,
        b.exterior_audit.c_achieved,
        b.exterior_audit.n_overlap,
    );
    let _ = writeln!(
        s,
        "{:<18} {:>8} {:>8} {:>6} {:>14} {:>10}",
        "inequality", "checked", "skipped", "viol", "constant", "fit"
    );
    let mut row = |r: &InequalityReport| {
        let _ = writeln!(
            s,
            "{:<18} {:>8} {:>8} {:>6} {:>14.6e} {:>10}",
            r.id,
            r.checked,
            r.skipped,
            r.violations,
            r.empirical_constant,
            r.fit_exponent
                .map(|f| format!("{f:.3}"))
                .unwrap_or_else(|| "-".into()),
        );
    };
    row(&b.norm_equivalence);
    for r in &b.extension_bounds {
        row(r);
    }
    let _ = writeln!(
        s,
        "bbm: {} smooth members, rough growth x{:.2}, scaled spread x{:.2}",
        b.bbm.members.len(),
        b.bbm.rough_growth,
        b.bbm.rough_scaled_max_over_min,
    );
    let _ = writeln!(
        s,
        "char-threshold: {} points, {} violations, {} starved",
        b.char_threshold.points.len(),
        b.char_threshold.violations,
        b.char_threshold.budget_starved,
    );
    let _ = writeln!(s, "violations: {}", b.violations);
    s
}

/// Dispatch a subcommand for the configured dimension.
pub fn run_command(
    command: &str,
    config_path: &Path,
    out_dir: &Path,
    overrides: &RunOverrides,
) -> Result<RunOutcome, CliError> {
    let raw = load_config(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    match raw.domain.dimension {
        1 => {
            let p = build_pipeline::<1>(&raw, base, overrides)?;
            dispatch(command, &p, out_dir)
        }
        2 => {
            let p = build_pipeline::<2>(&raw, base, overrides)?;
            dispatch(command, &p, out_dir)
        }
        d => Err(CliError::Other(format!("dimension {d} not supported (1 or 2)"))),
    }
}

fn dispatch<const D: usize>(
    command: &str,
    p: &Pipeline<D>,
    out_dir: &Path,
) -> Result<RunOutcome, CliError> {
    match command {
        "decompose" => cmd_decompose(p, out_dir),
        "extend" => cmd_extend(p, out_dir),
        "seminorm" => cmd_seminorm(p, out_dir),
        "verify" => cmd_verify(p, out_dir),
        other => Err(CliError::Other(format!("unknown command `{other}`"))),
    }
}

pub fn known_inequalities() -> &'static [&'static str] {
    &KNOWN_INEQUALITIES
}
