//! Turns a resolved config into grid points, runs them on the worker pool
//! and aggregates the results. Nothing here touches the file system; the
//! caller persists the returned [`Outcome`].

use serde::Serialize;
use serde_json::{json, Value};
use shellrg_core::analysis::{
    detect_blowup, fit_double_exponential, stationary_dyadic_exact, BlowupOptions, DYADIC_EIGENVALUE,
};
use shellrg_core::{integrate, Problem, RegularizationSpec, Status, Trajectory};
use shellrg_lab::pool::par_map;
use shellrg_lab::{
    attractor_probe, chaos_growth, deviations, estimate_eigenvalue, fit_prefactors, limit_reference,
    verify_rg_relation, viscous_bridge, ChaosConfig, DeviationSeries, Family, LabError, ProbeConfig,
    Reference, RunSpec,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::{float, series_csv, slug, trajectory_csv, Table};

/// Per-point line of the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PointReport {
    pub id: String,
    pub status: String,
    /// Whether a failure here makes the whole run fail.
    pub required: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub files: Vec<String>,
}

impl PointReport {
    pub fn failed(&self) -> bool {
        self.status != "completed"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Everything an experiment produced, in deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub points: Vec<PointReport>,
    pub files: Vec<OutputFile>,
    pub results: Value,
}

impl Outcome {
    pub fn required_failures(&self) -> usize {
        self.points.iter().filter(|p| p.required && p.failed()).count()
    }
}

/// Result of one grid point before aggregation.
struct Point<T> {
    report: PointReport,
    files: Vec<OutputFile>,
    record: Value,
    data: Vec<T>,
}

impl<T> Point<T> {
    fn new(id: String) -> Self {
        Point {
            report: PointReport {
                id,
                status: "completed".into(),
                required: true,
                message: None,
                files: Vec::new(),
            },
            files: Vec::new(),
            record: Value::Null,
            data: Vec::new(),
        }
    }

    fn fail(mut self, status: &str, message: impl ToString) -> Self {
        self.report.status = status.into();
        self.report.message = Some(message.to_string());
        self
    }

    fn file(&mut self, name: String, bytes: Vec<u8>) {
        self.report.files.push(name.clone());
        self.files.push(OutputFile { name, bytes });
    }

    fn trajectory(&mut self, name: String, traj: &Trajectory, times: &[f64]) {
        match trajectory_csv(traj, times) {
            Ok(bytes) => self.file(name, bytes),
            Err(e) => {
                self.report.status = "error".into();
                self.report.message = Some(e.to_string());
            }
        }
        if !traj.status.is_completed() {
            self.report.status = traj.status.name().into();
            self.report.message = traj.message.clone();
        }
    }
}

/// Runs `f` over `items` on the pool; a panic becomes a failed point.
fn sweep<I, T, F>(workers: usize, items: &[I], id: impl Fn(&I) -> String + Sync, f: F) -> Vec<Point<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I, Point<T>) -> Point<T> + Sync + Send,
{
    par_map(workers, items, |item| f(item, Point::new(id(item))))
        .into_iter()
        .zip(items)
        .map(|(r, item)| r.unwrap_or_else(|panic| Point::new(id(item)).fail("panic", panic)))
        .collect()
}

struct Collected<T> {
    points: Vec<PointReport>,
    files: Vec<OutputFile>,
    records: Vec<Value>,
    data: Vec<T>,
}

fn collect<T>(points: Vec<Point<T>>) -> Collected<T> {
    let mut out = Collected {
        points: Vec::new(),
        files: Vec::new(),
        records: Vec::new(),
        data: Vec::new(),
    };
    for p in points {
        out.points.push(p.report);
        out.files.extend(p.files);
        if !p.record.is_null() {
            out.records.push(p.record);
        }
        out.data.extend(p.data);
    }
    out
}

fn status_value(status: &Status) -> Value {
    serde_json::to_value(status).expect("status serializes")
}

fn run_spec(cfg: &ExperimentConfig, family: &Family) -> RunSpec {
    RunSpec {
        model: cfg.model,
        family: family.clone(),
        ic: cfg.initial_data().expect("validated"),
        bc: cfg.boundary().expect("validated"),
        t_end: cfg.t_span()[1],
        solver: cfg.solver.clone(),
    }
}

fn run_from(spec: &RunSpec, level: usize, t0: f64) -> Result<Trajectory, LabError> {
    let problem = spec.problem(level)?;
    let ic = spec.ic.build(spec.model, problem.shells())?;
    Ok(integrate(&problem, &ic, t0, spec.t_end, &spec.solver)?)
}

/// Executes the experiment on `workers` threads. The outcome does not
/// depend on `workers`.
pub fn execute(cfg: &ExperimentConfig, workers: usize) -> Outcome {
    let workers = workers.max(1);
    let (points, files, results) = match cfg.kind {
        ExperimentKind::SingleRun => single_run(cfg, workers),
        ExperimentKind::RgConvergence => convergence(cfg, workers, false),
        ExperimentKind::Eigenmode => convergence(cfg, workers, true),
        ExperimentKind::RgVerify => rg_verify(cfg, workers),
        ExperimentKind::ViscousBridge => bridge(cfg, workers),
        ExperimentKind::ViscousRescaled => rescaled(cfg, workers),
        ExperimentKind::AttractorProbe => probe(cfg, workers),
        ExperimentKind::ChaosGrowth => chaos(cfg, workers),
        ExperimentKind::StationaryCheck => stationary(cfg, workers),
    };
    Outcome {
        points,
        files,
        results: json!({ "kind": cfg.kind.name(), "model": cfg.model.name(), "results": results }),
    }
}

type Parts = (Vec<PointReport>, Vec<OutputFile>, Value);

fn grid_items(cfg: &ExperimentConfig) -> Vec<(Family, usize)> {
    cfg.grid
        .families
        .iter()
        .flat_map(|f| cfg.grid.levels.iter().map(move |&l| (f.clone(), l)))
        .collect()
}

fn single_run(cfg: &ExperimentConfig, workers: usize) -> Parts {
    let times = cfg.times();
    let t0 = cfg.t_span()[0];
    let items = grid_items(cfg);
    let points = sweep(
        workers,
        &items,
        |(f, l)| format!("{}/N={l}", f.label()),
        |(family, level), mut point: Point<()>| {
            let spec = run_spec(cfg, family);
            let traj = match run_from(&spec, *level, t0) {
                Ok(t) => t,
                Err(e) => return point.fail("error", e),
            };
            point.trajectory(format!("traj_{}_N{level}.csv", slug(&family.label())), &traj, &times);
            let blowup = detect_blowup(&traj, &BlowupOptions::default()).ok();
            let last = traj.final_state();
            point.record = json!({
                "family": family.label(),
                "level": level,
                "regularization": traj.problem.reg.label(),
                "shells": traj.shells(),
                "status": status_value(&traj.status),
                "tEnd": traj.t_end(),
                "finalEnergy": last.energy(),
                "stats": traj.stats,
                "blowup": blowup,
            });
            point
        },
    );
    let c = collect(points);
    (c.points, c.files, json!({ "runs": c.records }))
}

/// Deviations of every `(family, level)` from the reference, plus the
/// eigenvalue and prefactor fits; with `rescale` also `delta / (c rho^N)`.
fn convergence(cfg: &ExperimentConfig, workers: usize, rescale: bool) -> Parts {
    let times = cfg.times();
    let reference_level = cfg.grid.reference_level.expect("resolved");
    let base = run_spec(cfg, &cfg.grid.families[0]);
    let mut ref_point: Point<()> = Point::new(format!("reference/N={reference_level}"));
    let reference = match limit_reference(&base, reference_level, &cfg.grid.levels) {
        Ok(r) => {
            ref_point.trajectory(format!("reference_N{reference_level}.csv"), &r.trajectory, &times);
            Some(r)
        }
        Err(e) => {
            ref_point = ref_point.fail("error", e);
            None
        }
    };
    let Some(reference) = reference else {
        let c = collect(vec![ref_point]);
        return (c.points, c.files, json!({ "error": "reference run failed" }));
    };

    let items = grid_items(cfg);
    let points = sweep(
        workers,
        &items,
        |(f, l)| format!("{}/N={l}", f.label()),
        |(family, level), point| deviation_point(cfg, &reference, family, *level, &times, point),
    );
    let mut c = collect(points);

    let primary = cfg.shells[0];
    let mut estimates = Vec::new();
    let mut groups = Vec::new();
    for family in &cfg.grid.families {
        let label = family.label();
        let series: Vec<DeviationSeries> = c
            .data
            .iter()
            .filter(|s| s.label == label && s.shell == primary)
            .cloned()
            .collect();
        let estimate = estimate_eigenvalue(&series, cfg.solver.atol);
        estimates.push(json!({
            "family": label,
            "estimate": estimate.as_ref().ok(),
            "error": estimate.as_ref().err().map(|e| e.to_string()),
        }));
        groups.push((label, series, estimate.ok().map(|e| e.rho)));
    }
    let rho = cfg.params.rho.or(groups[0].2);
    let fits = rho.map(|rho| {
        fit_prefactors(
            &groups.iter().map(|(l, s, _)| (l.clone(), s.clone())).collect::<Vec<_>>(),
            rho,
        )
    });
    let prefactors = match &fits {
        Some(Ok(f)) => json!(f),
        Some(Err(e)) => json!({ "error": e.to_string() }),
        None => Value::Null,
    };

    if rescale {
        if let (Some(rho), Some(Ok(fits))) = (rho, &fits) {
            for family in &cfg.grid.families {
                let label = family.label();
                let c_j = fits.iter().find(|f| f.label == label).map_or(1.0, |f| f.c);
                for &level in &cfg.grid.levels {
                    let series: Vec<DeviationSeries> = c
                        .data
                        .iter()
                        .filter(|s| s.label == label && s.level == level)
                        .map(|s| {
                            let mut r = s.rescaled(rho);
                            r.values.iter_mut().for_each(|v| *v /= c_j);
                            r
                        })
                        .collect();
                    if !series.is_empty() {
                        c.files.push(OutputFile {
                            name: format!("rescaled_{}_N{level}.csv", slug(&label)),
                            bytes: series_csv(&series),
                        });
                    }
                }
            }
        }
    }

    let mut points = c.points;
    points.insert(0, ref_point.report);
    let mut files = ref_point.files;
    files.extend(c.files);
    let results = json!({
        "referenceLevel": reference_level,
        "shell": primary,
        "eigenvalue": estimates,
        "rho": rho,
        "prefactors": prefactors,
    });
    (points, files, results)
}

fn deviation_point(
    cfg: &ExperimentConfig,
    reference: &Reference,
    family: &Family,
    level: usize,
    times: &[f64],
    mut point: Point<DeviationSeries>,
) -> Point<DeviationSeries> {
    let spec = run_spec(cfg, family);
    let traj = match spec.run_completed(level) {
        Ok(t) => t,
        Err(e) => return point.fail("error", e),
    };
    match deviations(&[(level, &traj)], &family.label(), reference, &cfg.shells, times) {
        Ok(series) => {
            point.file(format!("dev_{}_N{level}.csv", slug(&family.label())), series_csv(&series));
            point.record = json!({
                "family": family.label(),
                "level": level,
                "supNorm": series.iter().map(|s| s.sup_norm()).collect::<Vec<_>>(),
            });
            point.data = series;
            point
        }
        Err(e) => point.fail("error", e),
    }
}

fn rg_verify(cfg: &ExperimentConfig, workers: usize) -> Parts {
    let [_, t_end] = cfg.t_span();
    let ic = cfg.initial_data().expect("validated");
    let bc = cfg.boundary().expect("validated");
    let items = grid_items(cfg);
    let points = sweep(
        workers,
        &items,
        |(f, l)| format!("{}/N={l}", f.label()),
        |(family, level), mut point: Point<()>| {
            let Family::Canonical { j, .. } = family else {
                return point.fail("error", "rg-verify needs a canonical family");
            };
            match verify_rg_relation(cfg.model, *j, *level, &ic, &bc, t_end, &cfg.solver, cfg.params.refine) {
                Ok(check) => {
                    point.record = json!({
                        "family": family.label(),
                        "level": level,
                        "check": check,
                        "pass": check.discrepancy < cfg.params.tolerance,
                    });
                    point
                }
                Err(e) => point.fail("error", e),
            }
        },
    );
    let c = collect(points);
    (c.points, c.files, json!({ "tolerance": cfg.params.tolerance, "checks": c.records }))
}

fn bridge(cfg: &ExperimentConfig, workers: usize) -> Parts {
    let times = cfg.times();
    let [t0, t1] = cfg.t_span();
    let ic = cfg.initial_data().expect("validated");
    let bc = cfg.boundary().expect("validated");
    let points = sweep(
        workers,
        &cfg.grid.viscosities,
        |nu| format!("nu={nu:e}"),
        |&nu, mut point: Point<(f64, Vec<usize>)>| {
            let run = || -> Result<Trajectory, LabError> {
                let problem = Problem::new(cfg.model, RegularizationSpec::Viscous { nu }, bc.clone())?;
                let state = ic.build(cfg.model, problem.shells())?;
                Ok(integrate(&problem, &state, t0, t1, &cfg.solver)?)
            };
            let traj = match run() {
                Ok(t) => t,
                Err(e) => return point.fail("error", e),
            };
            point.trajectory(format!("traj_nu{nu:e}.csv"), &traj, &times);
            let reached: Vec<f64> = times.iter().copied().filter(|&t| t <= traj.t_end()).collect();
            match viscous_bridge(&traj, nu, &reached) {
                Ok(series) => {
                    let mut table = Table::new(&["t", "level", "beta", "nextBeta", "flagged"]);
                    for k in 0..series.times.len() {
                        table.row([
                            float(series.times[k]),
                            series.levels[k].to_string(),
                            float(series.betas[k]),
                            series.next_betas[k].map_or(String::new(), float),
                            series.flagged[k].to_string(),
                        ]);
                    }
                    point.file(format!("bridge_nu{nu:e}.csv"), table.into_bytes());
                    point.record = json!({
                        "nu": nu,
                        "shells": traj.shells(),
                        "status": status_value(&traj.status),
                        "maximalityHolds": series.maximality_holds(),
                        "flagged": series.flagged.iter().filter(|f| **f).count(),
                    });
                    point.data = vec![(nu, series.levels)];
                    point
                }
                Err(e) => point.fail("error", e),
            }
        },
    );
    let c = collect(points);
    let mut by_nu = c.data.clone();
    by_nu.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = by_nu
        .windows(2)
        .all(|w| w[0].1.iter().zip(&w[1].1).all(|(a, b)| b >= a));
    (
        c.points,
        c.files,
        json!({ "levelsNondecreasingAsNuDecreases": monotone, "runs": c.records }),
    )
}

fn rescaled(cfg: &ExperimentConfig, workers: usize) -> Parts {
    let times = cfg.times();
    let reference_level = cfg.grid.reference_level.expect("resolved");
    let family = cfg.grid.families[0].clone();
    let spec = run_spec(cfg, &family);
    let rho = cfg.params.rho.unwrap_or(DYADIC_EIGENVALUE);
    let mut ref_point: Point<()> = Point::new(format!("reference/N={reference_level}"));
    let reference = match limit_reference(&spec, reference_level, &cfg.grid.levels) {
        Ok(r) => {
            ref_point.trajectory(format!("reference_N{reference_level}.csv"), &r.trajectory, &times);
            r
        }
        Err(e) => {
            let c = collect(vec![ref_point.fail("error", e)]);
            return (c.points, c.files, json!({ "error": "reference run failed" }));
        }
    };
    let points = sweep(
        workers,
        &cfg.grid.levels,
        |l| format!("viscous/N={l}"),
        |&level, point| {
            let mut p = deviation_point(cfg, &reference, &family, level, &times, point);
            if p.report.failed() {
                return p;
            }
            p.files.clear();
            p.report.files.clear();
            let series: Vec<DeviationSeries> = std::mem::take(&mut p.data).iter().map(|s| s.rescaled(rho)).collect();
            p.file(format!("rescaled_viscous_N{level}.csv"), series_csv(&series));
            p.data = series.into_iter().filter(|s| s.shell == cfg.shells[0]).collect();
            p
        },
    );
    let c = collect(points);
    let mut shapes = c.data.clone();
    shapes.sort_by_key(|s| s.level);
    let gaps: Vec<Value> = shapes
        .windows(2)
        .map(|w| json!({ "from": w[0].level, "to": w[1].level, "supDistance": w[0].sup_distance(&w[1]) }))
        .collect();
    let mut points = vec![ref_point.report];
    points.extend(c.points);
    let mut files = ref_point.files;
    files.extend(c.files);
    (
        points,
        files,
        json!({ "referenceLevel": reference_level, "rho": rho, "shell": cfg.shells[0], "gaps": gaps }),
    )
}

fn probe(cfg: &ExperimentConfig, workers: usize) -> Parts {
    let Family::Canonical { j, .. } = cfg.grid.families[0] else {
        unreachable!("validated")
    };
    let probe_cfg = ProbeConfig {
        model: cfg.model,
        levels: cfg.grid.levels.clone(),
        samples: cfg.params.samples,
        coeff_range: (cfg.params.coeff_range[0], cfg.params.coeff_range[1]),
        j,
        ic: cfg.initial_data().expect("validated"),
        bc: cfg.boundary().expect("validated"),
        t_star: cfg.t_span()[1],
        seed: cfg.seed,
        solver: cfg.solver.clone(),
    };
    let cloud = match attractor_probe(&probe_cfg, workers) {
        Ok(c) => c,
        Err(e) => {
            let p: Point<()> = Point::new("probe".into());
            let c = collect(vec![p.fail("error", e)]);
            return (c.points, c.files, Value::Null);
        }
    };
    let mut header = vec!["level", "sample", "status", "u1Re", "u1Im", "u2Re", "u2Im"];
    let coeff_names: Vec<String> = (1..=j).map(|k| format!("c{k}")).collect();
    header.extend(coeff_names.iter().map(String::as_str));
    let mut table = Table::new(&header);
    let mut points = Vec::new();
    for r in &cloud.records {
        let mut row = vec![r.level.to_string(), r.sample.to_string(), r.status.name().to_string()];
        match r.observables {
            Some([a, b]) => row.extend([float(a.re), float(a.im), float(b.re), float(b.im)]),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        row.extend(r.coeffs.iter().map(|c| float(*c)));
        table.row(&row);
        points.push(PointReport {
            id: format!("N={}/sample={}", r.level, r.sample),
            status: if r.observables.is_some() { "completed".into() } else { r.status.name().into() },
            required: false,
            message: r.message.clone(),
            files: vec!["cloud.csv".into()],
        });
    }
    let per_level: Vec<Value> = cfg
        .grid
        .levels
        .iter()
        .map(|&l| {
            let done = cloud.points(&[l]).len();
            json!({ "level": l, "completed": done, "failed": cfg.params.samples - done })
        })
        .collect();
    let files = vec![OutputFile {
        name: "cloud.csv".into(),
        bytes: table.into_bytes(),
    }];
    (points, files, json!({ "seed": cfg.seed, "levels": per_level }))
}

fn chaos(cfg: &ExperimentConfig, workers: usize) -> Parts {
    let Family::Canonical { j, .. } = cfg.grid.families[0] else {
        unreachable!("validated")
    };
    let chaos_cfg = ChaosConfig {
        model: cfg.model,
        j,
        eps: cfg.params.eps,
        levels: cfg.grid.levels.clone(),
        ic: cfg.initial_data().expect("validated"),
        bc: cfg.boundary().expect("validated"),
        t_star: cfg.t_span()[1],
        solver: cfg.solver.clone(),
    };
    let growth = match chaos_growth(&chaos_cfg, workers) {
        Ok(g) => g,
        Err(e) => {
            let p: Point<()> = Point::new("chaos".into());
            let c = collect(vec![p.fail("error", e)]);
            return (c.points, c.files, Value::Null);
        }
    };
    let mut table = Table::new(&["level", "separation", "toleranceLimited", "status"]);
    let mut points = Vec::new();
    for p in &growth {
        table.row([
            p.level.to_string(),
            float(p.separation),
            p.tolerance_limited.to_string(),
            p.status.name().to_string(),
        ]);
        points.push(PointReport {
            id: format!("N={}", p.level),
            status: p.status.name().into(),
            required: true,
            message: p.message.clone(),
            files: vec!["chaos.csv".into()],
        });
    }
    let done: Vec<(i64, f64)> = growth
        .iter()
        .filter(|p| p.status.is_completed())
        .map(|p| (p.level as i64, p.separation))
        .collect();
    let fit = fit_double_exponential(&done, cfg.params.eps);
    let increasing = done.windows(2).all(|w| w[1].1 > w[0].1);
    let files = vec![OutputFile {
        name: "chaos.csv".into(),
        bytes: table.into_bytes(),
    }];
    let results = json!({
        "eps": cfg.params.eps,
        "strictlyIncreasing": increasing,
        "fit": fit.as_ref().ok(),
        "fitError": fit.as_ref().err().map(|e| e.to_string()),
        "points": growth,
    });
    (points, files, results)
}

fn stationary(cfg: &ExperimentConfig, workers: usize) -> Parts {
    let times = cfg.times();
    let t0 = cfg.t_span()[0];
    let spec = run_spec(cfg, &cfg.grid.families[0]);
    let points = sweep(
        workers,
        &cfg.grid.levels,
        |l| format!("N={l}"),
        |&level, mut point: Point<()>| {
            let traj = match run_from(&spec, level, t0) {
                Ok(t) => t,
                Err(e) => return point.fail("error", e),
            };
            point.trajectory(format!("traj_N{level}.csv"), &traj, &times);
            if point.report.failed() {
                return point;
            }
            let last = traj.final_state();
            let residual = (1..=last.len())
                .map(|n| (last.amplitude(n).re - stationary_dyadic_exact(level, n)).abs())
                .fold(0.0, f64::max);
            point.record = json!({
                "level": level,
                "maxResidual": residual,
                "pass": residual <= cfg.params.tolerance,
            });
            point
        },
    );
    let c = collect(points);
    (c.points, c.files, json!({ "tolerance": cfg.params.tolerance, "levels": c.records }))
}
