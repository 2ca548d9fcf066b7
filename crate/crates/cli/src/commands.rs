use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::Serialize;
use uav_codesign::f1model::{
    assess, f1_curve, fine_tune, max_acceleration, mission_report, platform_knee, safe_velocity, select_among,
    DesignAssessment, DesignSummary, F1Curve, MissionReport, PhysicsParams, Selection,
};
use uav_codesign::moo::{
    evaluate_config, hypervolume_trace, objective_bounds, run_bayesopt, sweep, write_atomic, DesignPoint, ParetoArchive,
};
use uav_codesign::perfmodel::{lower_layers, AccelConfig, Dataflow};
use uav_codesign::uavspec::{load_problem, validate, CoDesignProblem};
use uav_codesign::Error;

use crate::manifest::RunManifest;
use crate::plot::f1_svg;
use crate::{CliError, EvaluateArgs, ExploreArgs, F1Args, ReportArgs, SelectArgs, SweepArgs};

pub const DEFAULT_SWEEP_CAP: u64 = 10_000;

type Res<T> = Result<T, CliError>;

pub fn load_with_overrides(path: &Path, seed: Option<u64>, budget: Option<usize>) -> Res<CoDesignProblem> {
    let mut p = load_problem(path)?;
    if let Some(s) = seed {
        p.seed = s;
    }
    if let Some(b) = budget {
        p.budget = b;
    }
    if let Err(mut errs) = validate(&p) {
        return Err(Error::Validation(errs.remove(0)).into());
    }
    Ok(p)
}

fn ensure_dir(dir: &Path) -> Res<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Res<()> {
    let fail = |e: csv::Error| CliError::Output { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output { path: path.to_path_buf(), message: e.to_string() })?;
    write_atomic(path, &bytes)?;
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Res<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Output { path: path.to_path_buf(), message: e.to_string() })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignRow {
    pub eval_index: usize,
    pub label: String,
    pub conv_layers: u32,
    pub filters: u32,
    pub array_rows: u32,
    pub array_cols: u32,
    pub dataflow: &'static str,
    pub sram_ifmap: u64,
    pub sram_filter: u64,
    pub sram_ofmap: u64,
    pub dram_bandwidth: f64,
    pub frequency_hz: f64,
    pub success_rate: f64,
    pub latency_s: f64,
    pub throughput_fps: f64,
    pub soc_power_w: f64,
    pub mass_g: f64,
    pub on_front: bool,
}

impl DesignRow {
    pub fn new(d: &DesignPoint, on_front: bool) -> Self {
        Self {
            eval_index: d.provenance.eval_index,
            label: d.label(),
            conv_layers: d.model.conv_layers,
            filters: d.model.filters,
            array_rows: d.accel.array_rows,
            array_cols: d.accel.array_cols,
            dataflow: d.accel.dataflow.short(),
            sram_ifmap: d.accel.sram_ifmap,
            sram_filter: d.accel.sram_filter,
            sram_ofmap: d.accel.sram_ofmap,
            dram_bandwidth: d.accel.dram_bandwidth,
            frequency_hz: d.accel.frequency,
            success_rate: d.objectives.success_rate,
            latency_s: d.objectives.latency,
            throughput_fps: d.throughput(),
            soc_power_w: d.objectives.soc_power,
            mass_g: d.mass.total,
            on_front,
        }
    }
}

fn archive_rows(a: &ParetoArchive, front_only: bool) -> Vec<DesignRow> {
    let front = a.front_indices();
    a.points()
        .iter()
        .enumerate()
        .map(|(i, d)| DesignRow::new(d, front.binary_search(&i).is_ok()))
        .filter(|r| !front_only || r.on_front)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    evaluations: usize,
    hypervolume: f64,
}

#[derive(Debug, Clone)]
pub struct ExploreOutput {
    pub archive: ParetoArchive,
    /// Normalized hypervolume after each evaluation.
    pub trace: Vec<f64>,
    pub archive_path: PathBuf,
}

pub fn cmd_explore(a: &ExploreArgs) -> Res<ExploreOutput> {
    let started = Utc::now();
    let p = load_with_overrides(&a.config.config, a.seed, a.budget)?;
    ensure_dir(&a.out)?;
    let archive = run_bayesopt(&p)?;

    let t = archive.transformed();
    let (lo, hi) = objective_bounds(&t);
    let trace = hypervolume_trace(&t, &lo, &hi);

    let archive_path = a.out.join("archive.jsonl");
    archive.write(&archive_path)?;
    let front_path = a.out.join("front.csv");
    write_csv(&front_path, &archive_rows(&archive, true))?;
    let trace_path = a.out.join("trace.csv");
    let rows: Vec<TraceRow> =
        trace.iter().enumerate().map(|(i, h)| TraceRow { evaluations: i + 1, hypervolume: *h }).collect();
    write_csv(&trace_path, &rows)?;

    let mut m = RunManifest::new("explore", started);
    m.add_problem(&a.config.config, &p)?;
    m.seed = Some(p.seed);
    m.budget = Some(p.budget);
    m.outputs = vec![archive_path.clone(), front_path, trace_path];
    m.write(&a.out)?;
    log::info!("explore: {} evaluations, {} on the front", archive.len(), archive.front_indices().len());
    Ok(ExploreOutput { archive, trace, archive_path })
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub points: Vec<DesignPoint>,
    pub archive_path: PathBuf,
}

pub fn cmd_sweep(a: &SweepArgs) -> Res<SweepOutput> {
    let started = Utc::now();
    let p = load_with_overrides(&a.config.config, None, None)?;
    ensure_dir(&a.out)?;
    let points = sweep(&p, a.cap as u128)?;
    let archive = ParetoArchive::from_points(points.iter().cloned());
    let archive_path = a.out.join("sweep.jsonl");
    archive.write(&archive_path)?;
    let csv_path = a.out.join("sweep.csv");
    write_csv(&csv_path, &archive_rows(&archive, false))?;
    let mut m = RunManifest::new("sweep", started);
    m.add_problem(&a.config.config, &p)?;
    m.outputs = vec![archive_path.clone(), csv_path];
    m.write(&a.out)?;
    Ok(SweepOutput { points, archive_path })
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateRow {
    pub name: String,
    pub success_rate: f64,
    pub compute_fps: f64,
    pub action_fps: f64,
    pub soc_power_w: f64,
    pub payload_g: f64,
    pub v_safe_mps: f64,
    pub n_missions: f64,
    pub assessment: &'static str,
    pub margin: f64,
    pub eligible: bool,
    pub chosen: bool,
}

fn candidate_row(d: &DesignSummary, r: &MissionReport, a: &DesignAssessment, eligible: bool, chosen: bool) -> CandidateRow {
    CandidateRow {
        name: d.name.clone(),
        success_rate: d.success_rate,
        compute_fps: d.compute_fps,
        action_fps: r.action_throughput,
        soc_power_w: d.soc_power_w,
        payload_g: d.payload_g,
        v_safe_mps: r.v_safe,
        n_missions: r.n_missions,
        assessment: a.classification.as_str(),
        margin: a.margin,
        eligible,
        chosen,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tuned {
    pub design: DesignPoint,
    pub report: MissionReport,
    pub original_missions: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectOutput {
    pub selection: Selection,
    pub chosen: String,
    pub tuned: Option<Tuned>,
}

pub fn cmd_select(a: &SelectArgs) -> Res<SelectOutput> {
    let started = Utc::now();
    let p = load_with_overrides(&a.config.config, None, None)?;
    let archive = a.archive.as_deref().map(ParetoArchive::read).transpose()?;
    let mut summaries: Vec<DesignSummary> = Vec::new();
    if let Some(ar) = &archive {
        summaries.extend(ar.points().iter().map(DesignSummary::of_point));
    }
    let from_archive = summaries.len();
    if a.literals || archive.is_none() {
        for d in &p.designs {
            summaries.push(DesignSummary::of_literal(d, &p)?);
        }
    }
    if summaries.is_empty() {
        return Err(match archive {
            Some(_) => Error::EmptyArchive.into(),
            None => CliError::Usage("nothing to select from: pass --archive or add [[designs]] to the config".into()),
        });
    }
    let selection = select_among(&summaries, &p)?;
    let chosen = selection.chosen_row().design.name.clone();

    let mut tuned = None;
    if a.fine_tune {
        match (&archive, selection.chosen < from_archive) {
            (Some(ar), true) => {
                let d = &ar.points()[selection.chosen];
                let row = selection.chosen_row();
                if row.assessment.classification == uav_codesign::f1model::Provisioning::OverProvisioned {
                    let t = fine_tune(d, &selection.knee, &p.energy, a.tech_node, &p)?;
                    let report = mission_report(&p, &DesignSummary::of_point(&t))?;
                    tuned = Some(Tuned { design: t, report, original_missions: row.report.n_missions });
                } else {
                    log::warn!("chosen design is {}, fine-tuning skipped", row.assessment.classification.as_str());
                }
            }
            _ => log::warn!("chosen design is a literal row without an accelerator, fine-tuning skipped"),
        }
    }

    ensure_dir(&a.out)?;
    let mut rows: Vec<CandidateRow> = selection
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| candidate_row(&r.design, &r.report, &r.assessment, r.eligible, i == selection.chosen))
        .collect();
    if let Some(t) = &tuned {
        let s = DesignSummary { name: format!("{} (tuned)", chosen), ..DesignSummary::of_point(&t.design) };
        let asm = assess(s.compute_fps, &selection.knee, p.physics.assess_tolerance);
        rows.push(candidate_row(&s, &t.report, &asm, true, false));
    }
    let csv_path = a.out.join("selection.csv");
    write_csv(&csv_path, &rows)?;
    let out = SelectOutput { selection, chosen, tuned };
    let json_path = a.out.join("selection.json");
    write_json(&json_path, &out)?;

    let mut m = RunManifest::new("select", started);
    m.add_problem(&a.config.config, &p)?;
    m.outputs = vec![csv_path, json_path];
    m.write(&a.out)?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerRow {
    pub layer: usize,
    pub m: u64,
    pub n: u64,
    pub k: u64,
    pub macs: u64,
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub total_cycles: u64,
    pub dram_bytes: u64,
    pub sram_reads: u64,
    pub sram_writes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateOutput {
    pub design: DesignPoint,
    pub in_space: bool,
    pub report: MissionReport,
    pub assessment: DesignAssessment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerRow>>,
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Res<EvaluateOutput> {
    let started = Utc::now();
    let p = load_with_overrides(&a.config.config, None, None)?;
    let s = &p.search;
    let dataflow = match &a.dataflow {
        Some(t) => t.parse::<Dataflow>().map_err(|_| CliError::Usage(format!("unknown dataflow {t:?}")))?,
        None => s.dataflow[0],
    };
    let model = p.policy.template.instantiate(a.layers.unwrap_or(s.conv_layers[0]), a.filters.unwrap_or(s.filters[0]));
    model.validate()?;
    let accel = AccelConfig {
        array_rows: a.rows.unwrap_or(s.array_rows[0]),
        array_cols: a.cols.unwrap_or(s.array_cols[0]),
        sram_ifmap: a.sram_ifmap.unwrap_or(s.sram_ifmap[0]),
        sram_filter: a.sram_filter.unwrap_or(s.sram_filter[0]),
        sram_ofmap: a.sram_ofmap.unwrap_or(s.sram_ofmap[0]),
        dram_bandwidth: a.bandwidth.unwrap_or(s.dram_bandwidth[0]),
        dataflow,
        frequency: a.frequency.unwrap_or(p.accelerator.frequency_hz),
        tech_node: p.accelerator.tech_node_nm,
        bytes_per_element: p.accelerator.bytes_per_element,
    };
    accel.validate()?;
    let located = s.locate(&model, &accel);
    let (design, profile) = evaluate_config(&model, &accel, located.unwrap_or_default(), &p)?;
    let summary = DesignSummary::of_point(&design);
    let report = mission_report(&p, &summary)?;
    let knee = platform_knee(&p)?;
    let assessment = assess(summary.compute_fps, &knee, p.physics.assess_tolerance);
    let layers = if a.dump_layers {
        let gemms = lower_layers(&model)?;
        Some(
            gemms
                .iter()
                .zip(&profile.per_layer)
                .enumerate()
                .map(|(i, (g, l))| LayerRow {
                    layer: i,
                    m: g.m,
                    n: g.n,
                    k: g.k,
                    macs: l.macs,
                    compute_cycles: l.compute_cycles,
                    memory_cycles: l.memory_cycles,
                    total_cycles: l.total_cycles,
                    dram_bytes: l.dram_traffic,
                    sram_reads: l.sram_reads,
                    sram_writes: l.sram_writes,
                })
                .collect(),
        )
    } else {
        None
    };
    let in_space = located.is_some() && accel.frequency == p.accelerator.frequency_hz;
    let out = EvaluateOutput { design, in_space, report, assessment, layers };

    match &a.out {
        Some(dir) => {
            ensure_dir(dir)?;
            let json_path = dir.join("evaluate.json");
            write_json(&json_path, &out)?;
            let mut outputs = vec![json_path];
            if let Some(l) = &out.layers {
                let path = dir.join("layers.csv");
                write_csv(&path, l)?;
                outputs.push(path);
            }
            let mut m = RunManifest::new("evaluate", started);
            m.add_problem(&a.config.config, &p)?;
            m.outputs = outputs;
            m.write(dir)?;
        }
        None => {
            let text = serde_json::to_string_pretty(&out)
                .map_err(|e| CliError::Output { path: "<stdout>".into(), message: e.to_string() })?;
            // A closed pipe (`| head`) is not an error.
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    return Err(CliError::Output { path: "<stdout>".into(), message: e.to_string() });
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct CurveRow {
    kind: &'static str,
    throughput_fps: Option<f64>,
    v_safe_mps: f64,
}

#[derive(Debug, Clone)]
pub struct F1Output {
    pub curve: F1Curve,
    pub csv_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

pub fn cmd_f1(a: &F1Args) -> Res<F1Output> {
    let started = Utc::now();
    let p = load_with_overrides(&a.config.config, None, None)?;
    if !(a.step > 0.0 && a.max_fps >= a.step) {
        return Err(CliError::Usage("need 0 < --step <= --max-fps".into()));
    }
    let physics = PhysicsParams::from_problem(&p);
    let acc = max_acceleration(&p.platform, a.payload, physics.gravity)?;
    let curve = f1_curve(&physics, acc, p.physics.knee_epsilon, a.max_fps, a.step);

    ensure_dir(&a.out)?;
    let mut rows: Vec<CurveRow> = curve
        .points
        .iter()
        .map(|&(f, v)| CurveRow { kind: "curve", throughput_fps: Some(f), v_safe_mps: v })
        .collect();
    rows.push(CurveRow { kind: "knee", throughput_fps: Some(curve.knee.throughput), v_safe_mps: curve.knee.v_safe });
    rows.push(CurveRow { kind: "ceiling", throughput_fps: None, v_safe_mps: curve.ceiling });
    let csv_path = a.out.join("f1.csv");
    write_csv(&csv_path, &rows)?;
    let mut outputs = vec![csv_path.clone()];

    let mut svg_path = None;
    if a.plot {
        let sensor = p.platform.sensor.framerate_fps;
        let mut overlays: Vec<(String, f64, f64)> = Vec::new();
        for d in &p.designs {
            let f = sensor.min(d.throughput_fps);
            overlays.push((d.name.clone(), f, safe_velocity(f, &physics, acc)));
        }
        if let Some(path) = &a.archive {
            let ar = ParetoArchive::read(path)?;
            for d in ar.front() {
                let f = sensor.min(d.throughput());
                overlays.push((d.label(), f, safe_velocity(f, &physics, acc)));
            }
        }
        let path = a.out.join("f1.svg");
        write_atomic(&path, f1_svg(&curve, &overlays).as_bytes())?;
        outputs.push(path.clone());
        svg_path = Some(path);
    }

    let mut m = RunManifest::new("f1", started);
    m.add_problem(&a.config.config, &p)?;
    m.outputs = outputs;
    m.write(&a.out)?;
    Ok(F1Output { curve, csv_path, svg_path })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    pub platform: String,
    pub environment: String,
    pub design: String,
    pub success_rate: f64,
    pub compute_fps: f64,
    pub action_fps: f64,
    pub soc_power_w: f64,
    pub payload_g: f64,
    pub v_safe_mps: f64,
    pub n_missions: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub rows: Vec<ReportRow>,
    pub csv_path: PathBuf,
}

/// Name given to the design picked from a scenario's archive.
pub const SELECTED: &str = "selected";

pub fn cmd_report(a: &ReportArgs) -> Res<ReportOutput> {
    let started = Utc::now();
    let n = a.configs.len();
    if !(a.archives.is_empty() || a.archives.len() == 1 || a.archives.len() == n) {
        return Err(CliError::Usage(format!("{} archives for {n} configs; pass 0, 1 or {n}", a.archives.len())));
    }
    let mut m = RunManifest::new("report", started);
    let mut rows = Vec::new();
    for (i, cfg) in a.configs.iter().enumerate() {
        let p = load_with_overrides(cfg, None, None)?;
        m.add_problem(cfg, &p)?;
        let mut designs: Vec<DesignSummary> = Vec::new();
        let archive_path = match a.archives.len() {
            0 => None,
            1 => Some(&a.archives[0]),
            _ => Some(&a.archives[i]),
        };
        if let Some(path) = archive_path {
            let ar = ParetoArchive::read(path)?;
            let summaries: Vec<DesignSummary> = ar.points().iter().map(DesignSummary::of_point).collect();
            let s = select_among(&summaries, &p)?;
            designs.push(DesignSummary { name: SELECTED.to_string(), ..s.chosen_row().design.clone() });
        }
        for d in &p.designs {
            designs.push(DesignSummary::of_literal(d, &p)?);
        }
        if designs.is_empty() {
            return Err(CliError::Usage(format!("{}: no archive and no [[designs]] rows", cfg.display())));
        }
        let reports = designs.iter().map(|d| mission_report(&p, d)).collect::<Result<Vec<_>, _>>()?;
        let base = match &a.baseline {
            Some(name) => designs
                .iter()
                .position(|d| &d.name == name)
                .ok_or_else(|| CliError::Usage(format!("baseline {name:?} not found in {}", p.name)))?,
            None => 0,
        };
        let base_n = reports[base].n_missions;
        for (d, r) in designs.iter().zip(&reports) {
            rows.push(ReportRow {
                scenario: p.name.clone(),
                platform: p.platform.name.clone(),
                environment: p.environment.class.to_string(),
                design: d.name.clone(),
                success_rate: d.success_rate,
                compute_fps: d.compute_fps,
                action_fps: r.action_throughput,
                soc_power_w: d.soc_power_w,
                payload_g: d.payload_g,
                v_safe_mps: r.v_safe,
                n_missions: r.n_missions,
                ratio: r.n_missions / base_n,
            });
        }
    }
    ensure_dir(&a.out)?;
    let csv_path = a.out.join("report.csv");
    write_csv(&csv_path, &rows)?;
    m.outputs = vec![csv_path.clone()];
    m.write(&a.out)?;
    Ok(ReportOutput { rows, csv_path })
}
