use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use qarray::boundstate::{lattice_bound_state, BoundState, LatticeBoundState};
use qarray::dynamics::{
    evolve_effective, evolve_lattice, DensityMatrix4, LatticeModel, PureState, TimeGrid, TimeSeries, TwoQubitState, EG,
    FIDELITY_S, P_EB, TRACE,
};
use qarray::fockcheck::{frame_comparison, min_cutoff, ComparisonOptions, DeviationReport, FockConfig, TRUNCATION_LIMIT};
use qarray::interaction::{coupling_sweep, CouplingVariant, EffectiveCoupling, SweepGrid, SweepRow};

use crate::config::{Engine, Point, RunConfig, Window};
use crate::error::CliError;
use crate::output::Csv;

/// Files written and remarks worth showing the user.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

fn comment(cmd: &str, cfg: &RunConfig) -> String {
    format!("qarray {cmd} {}", cfg.describe())
}

pub fn boundstate(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let points = cfg.points()?;
    let solved: Vec<(BoundState<f64>, Option<LatticeBoundState>)> = points
        .par_iter()
        .map(|p| {
            let bs = BoundState::solve(p.big_delta, &p.frame)?;
            let oracle = cfg.oracle.then(|| lattice_bound_state(&p.params, &p.frame)).transpose()?;
            let bs = match &oracle {
                Some(o) => bs.with_oracle(o),
                None => bs,
            };
            Ok((bs, oracle))
        })
        .collect::<Result<_, qarray::Error>>()?;

    let mut report = Report::default();
    let mut profile = Csv::new(out, "boundstate.csv", &["r", "offset", "c_n"], cfg.digits);
    let mut header = vec!["r", "delta_a", "eta", "delta_q", "Delta", "delta", "xi", "G_e", "Delta_e"];
    if cfg.oracle {
        header.extend(["delta_oracle", "delta_error", "atomic_weight", "theta", "edge_warning"]);
    }
    let mut summary = Csv::new(out, "boundstate_summary.csv", &header, cfg.digits);
    for (p, (bs, oracle)) in points.iter().zip(&solved) {
        for (offset, c) in bs.amplitudes.iter() {
            profile.row().f(p.r).i(offset).f(c);
        }
        let row = summary
            .row()
            .f(p.r)
            .f(p.params.delta_a)
            .f(p.params.eta)
            .f(p.params.delta_q)
            .f(p.big_delta)
            .f(bs.delta)
            .f(bs.xi)
            .f(bs.g_e)
            .f(bs.delta_e);
        if let Some(o) = oracle {
            row.f(o.delta).f(o.delta - bs.delta).f(o.atomic_weight).f(o.theta).b(o.edge_warning);
            if o.edge_warning {
                report.notes.push(format!("r = {}: bound state reaches the array edge; increase N", p.r));
            }
        }
    }
    let c = comment("boundstate", cfg);
    report.files.push(profile.write(&c)?);
    report.files.push(summary.write(&c)?);
    Ok(report)
}

pub fn coupling(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let points = cfg.points()?;
    let separations = cfg.separation_list();
    let grid = |squeezing: Vec<f64>, big_delta: f64| SweepGrid {
        squeezing,
        separations: separations.clone(),
        big_delta,
        hopping: cfg.base.hopping,
        coupling: cfg.base.coupling,
        gamma: cfg.base.gamma,
        variant: cfg.variant,
    };
    let mut report = Report::default();
    let shared = points.iter().all(|p| p.big_delta == points[0].big_delta);
    let rows: Vec<(f64, SweepRow<f64>)> = if shared {
        let table = coupling_sweep(&grid(points.iter().map(|p| p.r).collect(), points[0].big_delta));
        for &(d, lo, hi) in &table.diagnostics.cooperativity_crossings {
            report.notes.push(format!("d = {d}: C crosses 1 between r = {lo} and r = {hi}"));
        }
        table.rows.into_iter().map(|row| (points[0].big_delta, row)).collect()
    } else {
        points
            .iter()
            .flat_map(|p| coupling_sweep(&grid(vec![p.r], p.big_delta)).rows.into_iter().map(|row| (p.big_delta, row)))
            .collect()
    };

    let mut header = vec!["r", "d", "Delta", "G_lj", "abs_G_lj", "C", "xi_prime", "G_e_prime", "t_ent", "t_transfer"];
    if cfg.variant == CouplingVariant::ExactDelta {
        header.push("delta");
    }
    let mut csv = Csv::new(out, "coupling.csv", &header, cfg.digits);
    for (big_delta, row) in &rows {
        let v = row.outcome.as_ref().map_err(|e| e.clone())?;
        let t_ent = PI / (4.0 * v.g_lj.abs());
        let line = csv
            .row()
            .f(row.r)
            .i(row.d)
            .f(*big_delta)
            .f(v.g_lj)
            .f(v.g_lj.abs())
            .f(v.cooperativity.value())
            .f(v.xi_prime)
            .f(v.g_e_prime)
            .f(t_ent)
            .f(2.0 * t_ent);
        if let Some(delta) = v.delta_exact {
            line.f(delta);
        }
    }
    report.files.push(csv.write(&comment("coupling", cfg))?);
    Ok(report)
}

fn single_point(cfg: &RunConfig, cmd: &str) -> Result<Point, CliError> {
    let mut points = cfg.points()?;
    if points.len() != 1 {
        return Err(CliError::usage(format!("{cmd} takes a single parameter point, got {}", points.len())));
    }
    Ok(points.remove(0))
}

fn value_at(series: &TimeSeries, name: &str, t: f64) -> f64 {
    let (times, col) = (series.times(), series.column(name).unwrap());
    let k = times.partition_point(|&s| s < t);
    if k == 0 {
        return if (times[0] - t).abs() <= 1e-9 * t.abs().max(1.0) { col[0] } else { f64::NAN };
    }
    if k == times.len() {
        let last = times.len() - 1;
        return if (times[last] - t).abs() <= 1e-9 * t.abs() { col[last] } else { f64::NAN };
    }
    let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    col[k - 1] + w * (col[k] - col[k - 1])
}

struct EngineRun {
    name: &'static str,
    series: TimeSeries,
    error_estimate: f64,
}

pub fn evolve(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let p = single_point(cfg, "evolve")?;
    let gamma = p.params.gamma;
    let coupling = EffectiveCoupling::new(p.big_delta, &p.frame, p.params.separation(), gamma)?;
    let t_ent = coupling.times.entangle;
    let t_max = match cfg.window {
        Window::Default => 3.0 * t_ent,
        Window::Absolute(t) => t,
        Window::Entangle(k) => k * t_ent,
    };
    let grid = TimeGrid::uniform(t_max, cfg.samples.unwrap_or(600))?;
    let mut report = Report::default();

    let effective = || -> Result<EngineRun, CliError> {
        let rho0 = DensityMatrix4::from_pure(&TwoQubitState::basis(cfg.initial));
        let run = evolve_effective(coupling.g_lj, gamma, &rho0, &grid)?;
        Ok(EngineRun { name: "effective", series: run.series, error_estimate: run.richardson_error })
    };
    let lattice = || -> Result<(EngineRun, bool), CliError> {
        let model = LatticeModel::two_atom(&p.params, &p.frame)?;
        let psi = PureState::atom_excited(&model, usize::from(cfg.initial != EG))?;
        let run = evolve_lattice(&model, &psi, &grid, cfg.stepper)?;
        Ok((EngineRun { name: "lattice", series: run.series, error_estimate: run.closure_error }, run.edge_warning))
    };
    let runs: Vec<EngineRun> = match cfg.engine {
        Engine::Effective => vec![effective()?],
        Engine::Lattice => {
            let (run, warn) = lattice()?;
            report.notes.extend(warn.then(|| "lattice: bound state reaches the array edge; increase N".to_string()));
            vec![run]
        }
        Engine::Both => {
            let (e, l) = rayon::join(effective, lattice);
            let (l, warn) = l?;
            report.notes.extend(warn.then(|| "lattice: bound state reaches the array edge; increase N".to_string()));
            vec![e?, l]
        }
    };

    let c = comment("evolve", cfg);
    let mut summary = Csv::new(
        out,
        "evolve_summary.csv",
        &[
            "engine",
            "r",
            "d",
            "Delta",
            "G_lj",
            "C",
            "t_ent",
            "t_transfer",
            "max_fidelity_S",
            "max_P_eB",
            "fidelity_S_at_t_ent",
            "trace_drift",
            "error_estimate",
        ],
        cfg.digits,
    );
    for run in &runs {
        let s = &run.series;
        let mut header = vec!["t"];
        header.extend(s.names().iter().copied());
        let mut csv = Csv::new(out, &format!("trajectory_{}.csv", run.name), &header, cfg.digits);
        for i in 0..s.len() {
            let (t, values) = s.row(i);
            let mut row = csv.row().f(t);
            for v in values {
                row = row.f(v);
            }
        }
        report.files.push(csv.write(&c)?);
        let trace_drift = s.column(TRACE).unwrap().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        summary
            .row()
            .s(run.name)
            .f(p.r)
            .i(coupling.separation)
            .f(p.big_delta)
            .f(coupling.g_lj)
            .f(coupling.cooperativity.value())
            .f(t_ent)
            .f(coupling.times.transfer)
            .f(s.max(FIDELITY_S).unwrap())
            .f(s.max(P_EB).unwrap())
            .f(value_at(s, FIDELITY_S, t_ent))
            .f(trace_drift)
            .f(run.error_estimate);
    }
    report.files.push(summary.write(&c)?);
    Ok(report)
}

pub fn validate(cfg: &RunConfig, out: &Path, force: bool) -> Result<Report, CliError> {
    let points = cfg.points()?;
    let f = &cfg.fock;
    let opts = ComparisonOptions { ratio_min: f.ratio_min, force };
    let configs: Vec<FockConfig> = points
        .iter()
        .map(|p| {
            let t_max = match cfg.window {
                Window::Default => PI / p.frame.coupling,
                Window::Absolute(t) => t,
                Window::Entangle(_) => return Err(CliError::usage("t_max_ent does not apply to validate; use t_max")),
            };
            Ok(FockConfig {
                n_sites: f.n_sites,
                n_max: f.n_max.unwrap_or_else(|| min_cutoff(p.frame.r, TRUNCATION_LIMIT)),
                r_target: p.frame.r,
                t_max,
                dt: t_max / cfg.samples.unwrap_or(300) as f64,
                atom_a: f.atoms[0],
                atom_b: f.atoms.get(1).copied(),
                nnz_cap: f.nnz_cap,
                stepper: f.stepper,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let reports: Vec<DeviationReport> = points
        .par_iter()
        .zip(&configs)
        .map(|(p, c)| frame_comparison(&p.params, c, opts))
        .collect::<Result<_, _>>()?;

    let mut report = Report::default();
    let mut csv = Csv::new(
        out,
        "deviation.csv",
        &["r", "ratio1", "ratio2", "n_sites", "n_max", "max_dev", "delta_a", "regime_ok", "parity_drift", "norm_drift"],
        cfg.digits,
    );
    let mut failures = Vec::new();
    for (p, d) in points.iter().zip(&reports) {
        csv.row()
            .f(p.r)
            .f(d.ratio1)
            .f(d.ratio2)
            .u(d.n_sites)
            .u(d.n_max)
            .f(d.max_dev)
            .f(p.params.delta_a)
            .b(d.regime_ok)
            .f(d.parity_drift)
            .f(d.norm_drift);
        if !d.regime_ok {
            report.notes.push(format!("r = {}, delta_a = {}: regime check failed, reported because of --force", p.r, p.params.delta_a));
        }
        if d.max_dev > f.max_dev_limit {
            failures.push(format!("max_dev = {:.3e} > {} at r = {}, delta_a = {}", d.max_dev, f.max_dev_limit, p.r, p.params.delta_a));
        }
    }
    report.files.push(csv.write(&comment("validate", cfg))?);
    if !failures.is_empty() {
        if force {
            report.notes.extend(failures);
        } else {
            return Err(CliError::Validation(failures.join("; ")));
        }
    }
    Ok(report)
}
