//! Command implementations. Each `compute_*` function is the pure part of a
//! command; the matching `cmd_*` function reads inputs and writes files.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use doubling_core::document::{
    curves_tsv, load_measure, load_space, measure_document, measure_tsv, packing_profile_tsv, plot_tsv,
    space_document, transfer_log_tsv, MeasureDocument, MeasureMetadata, SpaceDocument,
};
use doubling_core::nets::{
    build_hierarchy, check_child_bounds_at, choose_scale_base, ChildBoundReport, NetHierarchy, ScaleChoice,
    ScaleInputs, NORMALIZED_DIAMETER,
};
use doubling_core::packing::{
    curve_knee, default_scale_cap, max_dilation, packing_profile, scan_dimension, CurvePoint, PackingMode,
    PackingObservation, ProfileOptions, RadiiPolicy, Side,
};
use doubling_core::scenarios::{branch_measure, construction_exponents, scenario_space, Scenario};
use doubling_core::space::{generate_cantor, union_spaces, PseudoMetricSpace};
use doubling_core::transfer::{build_measure, BuildOptions, Construction, DiscreteMeasure, PairOrder, TransferConstants};
use doubling_core::verify::{
    doubling_constant, plot_data, transport_bound_check, trivial_inequality_report, verify_measure, CenterSelection,
    MeasureFits, TransportGrid, TransportReport, TrivialInequalityReport, VerificationReport, VerifyOptions,
};
use serde::Serialize;

use crate::args::{Command, DemoArgs, DimsArgs, Generator, MeasureArgs, VerifyArgs};
use crate::output::OutDir;
use crate::ConfigError;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(g) => cmd_gen(&g.generator),
        Command::Dims(d) => cmd_dims(&d),
        Command::Measure(m) => cmd_measure(&m),
        Command::Verify(v) => cmd_verify(&v),
        Command::Demo(d) => cmd_demo(&d),
        Command::Run(r) => {
            let text = fs::read_to_string(&r.config)
                .map_err(|e| ConfigError(format!("reading {}: {e}", r.config.display())))?;
            let mut cfg: Command = toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", r.config.display())))?;
            let base = r.config.parent().unwrap_or(Path::new("."));
            cfg.rebase_paths(base);
            run(cfg)
        }
    }
}

fn read_space(path: &Path) -> Result<PseudoMetricSpace> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
    let doc: SpaceDocument =
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    Ok(load_space(&doc)?)
}

fn read_measure(path: &Path, space: &PseudoMetricSpace) -> Result<DiscreteMeasure> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
    let doc: MeasureDocument =
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    Ok(load_measure(&doc, space)?)
}

pub fn generate(generator: &Generator) -> Result<(PseudoMetricSpace, Option<DiscreteMeasure>)> {
    match generator {
        Generator::Cantor { ratio, level, interval, .. } => {
            Ok((generate_cantor(ratio.get(), *level, (interval.0, interval.1))?, None))
        }
        Generator::Union { parts, .. } => {
            let mut acc: Option<PseudoMetricSpace> = None;
            for p in parts {
                let piece = generate_cantor(p.ratio, p.level, (p.interval.0, p.interval.1))?;
                acc = Some(match acc {
                    Some(a) => union_spaces(&a, &piece)?,
                    None => piece,
                });
            }
            Ok((acc.expect("at least two parts"), None))
        }
        Generator::Scenario { name, level, branch_measure: with_nu, .. } => {
            let s = scenario_space(*name, *level)?;
            let nu = if *with_nu { Some(branch_measure(&s.space, &s.branches)?) } else { None };
            Ok((s.space, nu))
        }
    }
}

pub fn cmd_gen(generator: &Generator) -> Result<()> {
    let out = match generator {
        Generator::Cantor { out, .. } | Generator::Union { out, .. } | Generator::Scenario { out, .. } => out,
    };
    let (space, nu) = generate(generator)?;
    let mut dir = OutDir::create(out)?;
    dir.write_json("space.json", &space_document(&space))?;
    if let Some(nu) = nu {
        dir.write_json("measure.json", &measure_document(&nu, &space, None))?;
    }
    dir.finish()?;
    eprintln!("wrote {} points to {}", space.len(), out.display());
    Ok(())
}

/// Settings of a dimension profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimsSettings {
    pub policy: RadiiPolicy,
    pub mode: PackingMode,
    pub resolution: f64,
    pub gamma_max: f64,
    pub normalized: bool,
    pub oracle_cap: usize,
    pub scale_cap: Option<f64>,
}

impl Default for DimsSettings {
    fn default() -> Self {
        DimsSettings {
            policy: RadiiPolicy::Dyadic,
            mode: PackingMode::Exact,
            resolution: 0.01,
            gamma_max: 2.0,
            normalized: false,
            oracle_cap: doubling_core::packing::DEFAULT_ORACLE_CAP,
            scale_cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimsReport {
    pub points: usize,
    pub c_d: f64,
    pub diameter: f64,
    pub settings: DimsSettings,
    pub scale_cap: f64,
    pub observations: usize,
    pub exact_observations: usize,
    pub k_max: f64,
    /// Smallest exponent at which the upper constant curve flattens.
    pub knee_upper: Option<f64>,
    /// Smallest exponent at which the lower constant curve steepens.
    pub knee_lower: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DimsRun {
    pub report: DimsReport,
    /// The space the profile was taken on (rescaled in normalized mode).
    pub space: PseudoMetricSpace,
    pub profile: Vec<PackingObservation>,
    pub upper: Vec<CurvePoint>,
    pub lower: Vec<CurvePoint>,
}

fn working_space(space: &PseudoMetricSpace, normalized: bool) -> PseudoMetricSpace {
    if normalized {
        space.normalized(NORMALIZED_DIAMETER)
    } else {
        space.clone()
    }
}

fn scale_cap_for(space: &PseudoMetricSpace, normalized: bool, explicit: Option<f64>) -> f64 {
    explicit.unwrap_or(if normalized { 1.0 } else { default_scale_cap(space) })
}

pub fn compute_dims(space: &PseudoMetricSpace, settings: &DimsSettings) -> Result<DimsRun> {
    let space = working_space(space, settings.normalized);
    let cap = scale_cap_for(&space, settings.normalized, settings.scale_cap);
    let options = ProfileOptions {
        policy: settings.policy,
        mode: settings.mode,
        scale_cap: Some(cap),
        oracle_cap: settings.oracle_cap,
    };
    let profile = packing_profile(&space, &options);
    let upper = scan_dimension(&profile, Side::Upper, settings.resolution, settings.gamma_max)?;
    let lower = scan_dimension(&profile, Side::Lower, settings.resolution, settings.gamma_max)?;
    let k_max = max_dilation(&profile);
    let report = DimsReport {
        points: space.len(),
        c_d: space.c_d(),
        diameter: space.diameter(),
        settings: *settings,
        scale_cap: cap,
        observations: profile.len(),
        exact_observations: profile.iter().filter(|o| o.exact).count(),
        k_max,
        knee_upper: curve_knee(&upper, Side::Upper, k_max),
        knee_lower: curve_knee(&lower, Side::Lower, k_max),
    };
    Ok(DimsRun { report, space, profile, upper, lower })
}

fn write_dims(dir: &mut OutDir, prefix: &str, run: &DimsRun) -> Result<()> {
    dir.write(&format!("{prefix}profile.tsv"), packing_profile_tsv(&run.profile, &run.space).as_bytes())?;
    dir.write(&format!("{prefix}curves.tsv"), curves_tsv(&run.upper, &run.lower).as_bytes())?;
    dir.write_json(&format!("{prefix}dims.json"), &run.report)
}

pub fn cmd_dims(args: &DimsArgs) -> Result<()> {
    let space = read_space(&args.space)?;
    let settings = DimsSettings {
        policy: args.policy,
        mode: args.mode,
        resolution: args.resolution.get(),
        gamma_max: args.gamma_max.get(),
        normalized: args.normalized,
        oracle_cap: args.oracle_cap,
        scale_cap: args.scale_cap.map(|r| r.get()),
    };
    let run = compute_dims(&space, &settings)?;
    let mut dir = OutDir::create(&args.out)?;
    write_dims(&mut dir, "", &run)?;
    dir.finish()?;
    eprintln!(
        "knees: upper {:?}, lower {:?} ({} observations)",
        run.report.knee_upper, run.report.knee_lower, run.report.observations
    );
    Ok(())
}

/// Inputs of a measure construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureSettings {
    pub a: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub s_prime: f64,
    pub t_prime: f64,
    pub c_s: f64,
    pub c_t: f64,
    pub normalized: bool,
    pub order: PairOrder,
    pub transport_seed: u64,
}

#[derive(Debug, Clone)]
pub struct MeasureRun {
    pub scale: ScaleChoice,
    pub hierarchy: NetHierarchy,
    pub construction: Construction,
    /// Child counts of the levels `m <= J - 2`.
    pub child_bounds: ChildBoundReport,
    pub transport: TransportReport,
}

pub fn compute_measure(space: &PseudoMetricSpace, settings: &MeasureSettings) -> Result<MeasureRun> {
    let scale = match (settings.s, settings.t) {
        (Some(s), Some(t)) => {
            let inputs = ScaleInputs {
                c_d: space.c_d(),
                s,
                t,
                s_prime: settings.s_prime,
                t_prime: settings.t_prime,
                c_s: settings.c_s,
                c_t: settings.c_t,
            };
            choose_scale_base(&inputs, settings.a)?
        }
        (None, None) => match settings.a {
            Some(a) => ScaleChoice {
                a,
                warnings: vec!["no s, t given: scale constraints not checked".into()],
            },
            None => return Err(ConfigError("either --a or both --s and --t are required".into()).into()),
        },
        _ => return Err(ConfigError("--s and --t must be given together".into()).into()),
    };
    let hierarchy = build_hierarchy(space, scale.a, settings.normalized)?;
    let constants = TransferConstants::for_hierarchy(&hierarchy, settings.s_prime, settings.t_prime)?;
    let options = BuildOptions {
        order: settings.order,
        ..BuildOptions::default()
    };
    let construction = build_measure(&hierarchy, &constants, &options)?;
    let interior: Vec<usize> = (0..hierarchy.depth().saturating_sub(1)).collect();
    let child_bounds = check_child_bounds_at(&hierarchy, settings.s_prime, settings.t_prime, &interior);
    let transport = transport_bound_check(
        &construction,
        hierarchy.space(),
        TransportGrid::Auto {
            seed: settings.transport_seed,
        },
    );
    Ok(MeasureRun {
        scale,
        hierarchy,
        construction,
        child_bounds,
        transport,
    })
}

#[derive(Serialize)]
struct MeasureSummary<'a> {
    settings: &'a MeasureSettings,
    scale_base: f64,
    warnings: &'a [String],
    depth: usize,
    stabilization_level: usize,
    all_steps_passed: bool,
    child_bounds_passed: bool,
    transport_passed: bool,
}

fn write_measure(dir: &mut OutDir, prefix: &str, settings: &MeasureSettings, run: &MeasureRun) -> Result<()> {
    let c = &run.construction;
    let space = run.hierarchy.space();
    let metadata = MeasureMetadata::of(c);
    dir.write_json(&format!("{prefix}measure.json"), &measure_document(&c.measure, space, Some(metadata)))?;
    dir.write(&format!("{prefix}measure.tsv"), measure_tsv(&c.measure, space).as_bytes())?;
    let snapshots: Vec<MeasureDocument> = c.snapshots.iter().map(|m| measure_document(m, space, None)).collect();
    dir.write_json(&format!("{prefix}snapshots.json"), &snapshots)?;
    let log: Vec<_> = c.initial_records.iter().chain(&c.log).copied().collect();
    dir.write(&format!("{prefix}transfer_log.tsv"), transfer_log_tsv(&log, space).as_bytes())?;
    dir.write_json(&format!("{prefix}steps.json"), &c.reports)?;
    dir.write_json(&format!("{prefix}hierarchy.json"), &run.hierarchy.dump())?;
    dir.write_json(&format!("{prefix}child_bounds.json"), &run.child_bounds)?;
    dir.write_json(&format!("{prefix}transport.json"), &run.transport)?;
    dir.write_json(
        &format!("{prefix}construction.json"),
        &MeasureSummary {
            settings,
            scale_base: run.scale.a,
            warnings: &run.scale.warnings,
            depth: run.hierarchy.depth(),
            stabilization_level: c.stabilization_level,
            all_steps_passed: c.all_passed(),
            child_bounds_passed: run.child_bounds.passed(),
            transport_passed: run.transport.passed(),
        },
    )
}

pub fn cmd_measure(args: &MeasureArgs) -> Result<()> {
    let space = read_space(&args.space)?;
    let settings = MeasureSettings {
        a: args.a.map(|r| r.get()),
        s: args.s.map(|r| r.get()),
        t: args.t.map(|r| r.get()),
        s_prime: args.s_prime.get(),
        t_prime: args.t_prime.get(),
        c_s: args.c_s.get(),
        c_t: args.c_t.get(),
        normalized: args.normalized,
        order: if args.shuffle {
            PairOrder::Seeded { seed: args.seed }
        } else {
            PairOrder::Lexicographic
        },
        transport_seed: args.seed,
    };
    let run = compute_measure(&space, &settings)?;
    for w in &run.scale.warnings {
        eprintln!("warning: {w}");
    }
    let mut dir = OutDir::create(&args.out)?;
    write_measure(&mut dir, "", &settings, &run)?;
    dir.finish()?;
    let failed = run.construction.reports.iter().filter(|r| !r.passed()).count();
    eprintln!(
        "A = {}, {} refinements ({} with a failed property), stable at level {}",
        run.scale.a,
        run.construction.reports.len(),
        failed,
        run.construction.stabilization_level
    );
    Ok(())
}

/// Inputs of a verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifySettings {
    pub gamma_upper: f64,
    pub gamma_lower: f64,
    pub normalized: bool,
    pub scale_cap: Option<f64>,
    pub centers: CenterSelection,
}

pub fn compute_verification(
    space: &PseudoMetricSpace,
    measure: &DiscreteMeasure,
    settings: &VerifySettings,
) -> Result<(VerificationReport, Vec<doubling_core::verify::PlotRow>)> {
    let space = working_space(space, settings.normalized);
    let cap = scale_cap_for(&space, settings.normalized, settings.scale_cap);
    let options = VerifyOptions {
        gamma_upper: settings.gamma_upper,
        gamma_lower: settings.gamma_lower,
        scale_cap: cap,
        centers: settings.centers,
    };
    let (report, _) = verify_measure(measure, &space, &options)?;
    let plot = plot_data(measure, &space, cap);
    Ok((report, plot))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let space = read_space(&args.space)?;
    let measure = read_measure(&args.measure, &space)?;
    let settings = VerifySettings {
        gamma_upper: args.gamma_upper.get(),
        gamma_lower: args.gamma_lower.get(),
        normalized: args.normalized,
        scale_cap: args.scale_cap.map(|r| r.get()),
        centers: match args.sample_centers {
            Some(count) => CenterSelection::Sampled { count, seed: args.seed },
            None => CenterSelection::All,
        },
    };
    let (report, plot) = compute_verification(&space, &measure, &settings)?;
    let mut dir = OutDir::create(&args.out)?;
    dir.write_json("report.json", &report)?;
    dir.write("plot.tsv", plot_tsv(&plot, &working_space(&space, args.normalized)).as_bytes())?;
    dir.finish()?;
    eprintln!(
        "upper C = {}, lower C = {}, doubling = {}, {} violations",
        report.u_fit.c,
        report.l_fit.c,
        report.doubling_constant,
        report.violations.len()
    );
    Ok(())
}

/// One line of the demo summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoRow {
    pub scenario: Scenario,
    pub level: u32,
    pub points: usize,
    pub c_d: f64,
    pub expected_lower: f64,
    pub expected_upper: f64,
    pub knee_lower: Option<f64>,
    pub knee_upper: Option<f64>,
    pub a: f64,
    pub s_prime: f64,
    pub t_prime: f64,
    pub child_histogram: Vec<(usize, usize)>,
    pub child_bounds_passed: bool,
    pub steps_passed: bool,
    pub transport_passed: bool,
    pub upper_constant: f64,
    pub lower_constant: f64,
    pub doubling_mu: f64,
    pub trivial_passed: bool,
    /// Doubling constant of the branch measure at demo levels `0, 2, ..`.
    pub doubling_branch: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DemoScenarioRun {
    pub row: DemoRow,
    pub space: PseudoMetricSpace,
    pub dims: DimsRun,
    pub measure: MeasureRun,
    pub settings: MeasureSettings,
    pub verification: VerificationReport,
    pub trivial: TrivialInequalityReport,
}

pub fn demo_scenario(scenario: Scenario, level: u32, a: f64, resolution: f64) -> Result<DemoScenarioRun> {
    let generated = scenario_space(scenario, level)?;
    let space = generated.space;
    let dims = compute_dims(
        &space,
        &DimsSettings {
            resolution,
            ..DimsSettings::default()
        },
    )?;
    let hierarchy = build_hierarchy(&space, a, false)?;
    let (s_prime, t_prime) = construction_exponents(&hierarchy, hierarchy.depth());
    let settings = MeasureSettings {
        a: Some(a),
        s: None,
        t: None,
        s_prime,
        t_prime,
        c_s: 1.0,
        c_t: 1.0,
        normalized: false,
        order: PairOrder::Lexicographic,
        transport_seed: 0,
    };
    let measure = compute_measure(&space, &settings)?;
    let mu = &measure.construction.measure;
    let (verification, envelope) = verify_measure(
        mu,
        &space,
        &VerifyOptions {
            gamma_upper: s_prime,
            gamma_lower: t_prime,
            scale_cap: default_scale_cap(&space),
            centers: CenterSelection::All,
        },
    )?;
    let fits = MeasureFits::compute(mu, &space, &envelope, s_prime, t_prime)?;
    let trivial = trivial_inequality_report(&dims.profile, &fits, space.c_d())?;
    let doubling_branch = (0..=level)
        .step_by(2)
        .filter(|_| scenario != Scenario::Cantor)
        .map(|l| {
            let g = scenario_space(scenario, l)?;
            let nu = branch_measure(&g.space, &g.branches)?;
            Ok(doubling_constant(&nu, &g.space, default_scale_cap(&g.space))?.constant)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (expected_lower, expected_upper) = scenario.dimensions();
    let row = DemoRow {
        scenario,
        level,
        points: space.len(),
        c_d: space.c_d(),
        expected_lower,
        expected_upper,
        knee_lower: dims.report.knee_lower,
        knee_upper: dims.report.knee_upper,
        a,
        s_prime,
        t_prime,
        child_histogram: measure.child_bounds.histogram.iter().map(|(&k, &v)| (k, v)).collect(),
        child_bounds_passed: measure.child_bounds.passed(),
        steps_passed: measure.construction.all_passed(),
        transport_passed: measure.transport.passed(),
        upper_constant: verification.u_fit.c,
        lower_constant: verification.l_fit.c,
        doubling_mu: verification.doubling_constant,
        trivial_passed: trivial.passed(),
        doubling_branch,
    };
    Ok(DemoScenarioRun {
        row,
        space,
        dims,
        measure,
        settings,
        verification,
        trivial,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

/// Human-readable summary table.
pub fn demo_table(rows: &[DemoRow]) -> String {
    let mut out = String::from(
        "scenario\tlevel\tpoints\tlower_dim\tknee_lower\tupper_dim\tknee_upper\tA\ts'\tt'\tchildren\tsteps\ttransport\tC_upper\tC_lower\tdoubling_mu\ttrivial\tdoubling_branch\n",
    );
    for r in rows {
        let hist: Vec<String> = r.child_histogram.iter().map(|(k, v)| format!("{k}x{v}")).collect();
        let branch: Vec<String> = r.doubling_branch.iter().map(|v| format!("{v:.3}")).collect();
        let flag = |b: bool| if b { "pass" } else { "FAIL" };
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\t{}\t{:.4}\t{}\t{}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\n",
            r.scenario.name(),
            r.level,
            r.points,
            r.expected_lower,
            opt(r.knee_lower),
            r.expected_upper,
            opt(r.knee_upper),
            r.a,
            r.s_prime,
            r.t_prime,
            if hist.is_empty() { "-".into() } else { hist.join(",") },
            flag(r.steps_passed),
            flag(r.transport_passed),
            r.upper_constant,
            r.lower_constant,
            r.doubling_mu,
            flag(r.trivial_passed),
            if branch.is_empty() { "-".into() } else { branch.join(",") },
        ));
    }
    out
}

pub fn cmd_demo(args: &DemoArgs) -> Result<()> {
    let start = Instant::now();
    let mut dir = OutDir::create(&args.out)?;
    let mut rows = Vec::new();
    for scenario in Scenario::ALL {
        let run = demo_scenario(scenario, args.level, args.a.get(), args.resolution.get())
            .with_context(|| format!("scenario {}", scenario.name()))?;
        let prefix = format!("{}/", scenario.name());
        dir.write_json(&format!("{prefix}space.json"), &space_document(&run.space))?;
        write_dims(&mut dir, &prefix, &run.dims)?;
        write_measure(&mut dir, &prefix, &run.settings, &run.measure)?;
        dir.write_json(&format!("{prefix}verify.json"), &run.verification)?;
        dir.write_json(&format!("{prefix}trivial.json"), &run.trivial)?;
        rows.push(run.row);
    }
    let table = demo_table(&rows);
    dir.write("summary.tsv", table.as_bytes())?;
    dir.write_json("summary.json", &rows)?;
    dir.finish()?;
    print!("{table}");
    let elapsed = start.elapsed().as_secs_f64();
    eprintln!("demo finished in {elapsed:.1} s");
    if elapsed > args.budget_seconds.get() {
        bail!("demo took {elapsed:.1} s, over the {} s budget", args.budget_seconds);
    }
    Ok(())
}
