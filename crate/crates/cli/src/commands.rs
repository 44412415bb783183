use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use blowup_core::analysis::{audit_nonexistence_with, audit_special_family, fit_rate, RateFits};
use blowup_core::export::{write_grid, write_matrix, write_rate_table, write_solution};
use blowup_core::solver::{
    deepest_level, default_sub_super, doubling_schedule, solve_schedule, ProblemSpec, SolverOptions,
};
use blowup_core::specfun::{
    c_second_derivative, c_tau, classify_with, find_alpha0, find_tau0, find_tau1, has_tau1, C_tau, T_alpha,
};
use blowup_core::{Alpha, CriticalExponents, Error, Grid, Result, Tau};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    parse_schedule, parse_values, single, FileConfig, Schedule, DEFAULT_DELTA, DEFAULT_GRADING, DEFAULT_N_PER_SIDE,
    DEFAULT_SCHEDULE, DEFAULT_WINDOW,
};
use crate::Flags;

const DEFAULT_ALPHAS: &str = "0.1:0.9:0.1";
const DEFAULT_TAUS: &str = "-0.9:0:0.1";
const DEFAULT_ROOT_TOL: f64 = 1e-9;
const SPECIAL_T: [f64; 3] = [0.5, 1.0, 2.0];

/// A command either succeeds or has written its report and found a failed
/// check, which maps to the numerical exit code.
pub enum Status {
    Ok,
    Failed,
}

impl Status {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Ok
        } else {
            Status::Failed
        }
    }
}

/// Flags merged over the config file.
#[derive(Debug, Clone, Serialize)]
struct Settings {
    alpha: Option<Vec<f64>>,
    p: Option<f64>,
    tau: Option<Vec<f64>>,
    n_per_side: usize,
    grading: f64,
    delta: f64,
    tol: Option<f64>,
    schedule: String,
    window: (f64, f64),
    #[serde(skip)]
    out: Option<PathBuf>,
    #[serde(skip)]
    timestamp: bool,
}

fn parse_window(text: &str) -> Result<(f64, f64)> {
    match parse_values(text)?.as_slice() {
        [lo, hi] => Ok((*lo, *hi)),
        _ => Err(Error::BadConfig(format!("window '{text}' must be 'lo,hi'"))),
    }
}

impl Settings {
    fn merge(flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let list = |flag: &Option<String>, file: &Option<crate::config::Values>| -> Result<Option<Vec<f64>>> {
            match (flag, file) {
                (Some(s), _) => parse_values(s).map(Some),
                (None, Some(v)) => v.resolve().map(Some),
                (None, None) => Ok(None),
            }
        };
        let window = match &flags.window {
            Some(s) => parse_window(s)?,
            None => file.window.unwrap_or(DEFAULT_WINDOW),
        };
        Ok(Self {
            alpha: list(&flags.alpha, &file.alpha)?,
            p: flags.p.or(file.p),
            tau: list(&flags.tau, &file.tau)?,
            n_per_side: flags.n_per_side.or(file.n_per_side).unwrap_or(DEFAULT_N_PER_SIDE),
            grading: flags.grading.or(file.grading).unwrap_or(DEFAULT_GRADING),
            delta: flags.delta.or(file.delta).unwrap_or(DEFAULT_DELTA),
            tol: flags.tol.or(file.tol),
            schedule: flags.schedule.clone().or(file.schedule).unwrap_or_else(|| DEFAULT_SCHEDULE.into()),
            window,
            out: flags.out.clone().or(file.out),
            timestamp: !(flags.no_timestamp || file.no_timestamp.unwrap_or(false)),
        })
    }

    fn alphas(&self, default: &str) -> Result<Vec<Alpha>> {
        let values = match &self.alpha {
            Some(v) => v.clone(),
            None => parse_values(default)?,
        };
        values.into_iter().map(Alpha::new).collect()
    }

    fn one_alpha(&self) -> Result<Alpha> {
        let values = self.alpha.as_ref().ok_or_else(|| Error::BadConfig("--alpha is required".into()))?;
        Alpha::new(single("alpha", values)?)
    }

    fn p(&self) -> Result<f64> {
        self.p.ok_or_else(|| Error::BadConfig("--p is required".into()))
    }

    fn taus(&self) -> Result<Option<Vec<Tau>>> {
        self.tau.as_ref().map(|v| v.iter().map(|&t| Tau::new(t)).collect()).transpose()
    }

    fn grid(&self) -> Result<Arc<Grid>> {
        Grid::build_graded(self.n_per_side, self.grading, self.delta).map(Arc::new)
    }

    fn envelope(&self, command: &str, result: Value) -> Value {
        let mut doc = json!({ "command": command, "parameters": self, "result": result });
        if self.timestamp {
            doc["generated_at"] = Value::String(chrono::Utc::now().to_rfc3339());
        }
        doc
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn pretty(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("JSON values always serialise");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types always serialise")
}

#[derive(Serialize)]
struct SpecfunRow {
    alpha: f64,
    tau: f64,
    c: Option<f64>,
    #[serde(rename = "C")]
    big_c: Option<f64>,
    #[serde(rename = "T")]
    t: Option<f64>,
    c2: Option<f64>,
    error: String,
}

fn specfun_row(alpha: Alpha, tau: Tau) -> SpecfunRow {
    let mut errors = Vec::new();
    let mut keep = |r: Result<f64>| r.map_err(|e| errors.push(e.to_string())).ok();
    let c = keep(c_tau(alpha, tau));
    let big_c = keep(C_tau(alpha, tau));
    let t = keep(T_alpha(alpha));
    // c'' is only defined off τ = 0, where the column stays empty.
    let c2 = if tau.value() == 0.0 { None } else { keep(c_second_derivative(alpha, tau)) };
    SpecfunRow { alpha: alpha.value(), tau: tau.value(), c, big_c, t, c2, error: errors.join("; ") }
}

pub fn specfun(flags: &Flags) -> Result<Status> {
    let s = Settings::merge(flags)?;
    let alphas = s.alphas(DEFAULT_ALPHAS)?;
    let taus = match s.taus()? {
        Some(t) => t,
        None => parse_values(DEFAULT_TAUS)?.into_iter().map(Tau::new).collect::<Result<_>>()?,
    };
    let cells: Vec<(Alpha, Tau)> = alphas.iter().flat_map(|&a| taus.iter().map(move |&t| (a, t))).collect();
    let rows: Vec<SpecfunRow> = cells.par_iter().map(|&(a, t)| specfun_row(a, t)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    emit(s.out.as_deref(), &String::from_utf8_lossy(&bytes))?;
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", rows.len());
    }
    Ok(Status::from_ok(failed == 0))
}

pub fn critical(flags: &Flags) -> Result<Status> {
    let s = Settings::merge(flags)?;
    let tol = s.tol.unwrap_or(DEFAULT_ROOT_TOL);
    let alphas = s.alphas(DEFAULT_ALPHAS)?;
    let alpha0 = find_alpha0(tol)?;
    let entries: Vec<Value> = alphas
        .par_iter()
        .map(|&a| {
            let tau0 = find_tau0(a, tol);
            let tau1 = if has_tau1(a, alpha0) { Some(find_tau1(a, tol)) } else { None };
            let errors: Vec<String> = [tau0.as_ref().err(), tau1.as_ref().and_then(|r| r.as_ref().err())]
                .into_iter()
                .flatten()
                .map(ToString::to_string)
                .collect();
            json!({
                "alpha": a.value(),
                "tau0": tau0.ok(),
                "tau1": tau1.and_then(|r| r.ok()),
                "error": (!errors.is_empty()).then(|| errors.join("; ")),
            })
        })
        .collect();
    let ok = entries.iter().all(|e| e["error"].is_null());
    let doc = s.envelope("critical", json!({ "alpha0": alpha0, "tol": tol, "entries": entries }));
    emit(s.out.as_deref(), &pretty(&doc))?;
    Ok(Status::from_ok(ok))
}

fn critical_exponents(alpha: Alpha) -> Result<CriticalExponents> {
    CriticalExponents::compute(alpha, 1e-10)
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

pub fn classify(flags: &Flags) -> Result<Status> {
    let s = Settings::merge(flags)?;
    let alpha = s.one_alpha()?;
    let p = s.p()?;
    let tau = match s.taus()? {
        Some(t) => Some(t.first().copied().filter(|_| t.len() == 1).ok_or_else(|| {
            Error::BadConfig("--tau takes exactly one value for classify".into())
        })?),
        None => None,
    };
    let crit = critical_exponents(alpha)?;
    let r = classify_with(&crit, p, tau)?;
    let line = format!(
        "alpha={} p={} tau={} regime={} predicted_rate={} special_family_rate={}\n",
        alpha.value(),
        p,
        show(tau.map(Tau::value)),
        r.kind,
        show(r.predicted_rate),
        show(r.special_family_rate),
    );
    emit(s.out.as_deref(), &line)?;
    Ok(Status::Ok)
}

fn resolve_schedule(text: &str, grid: &Grid) -> Result<Vec<usize>> {
    match parse_schedule(text)? {
        Schedule::ToDeepest(start) => doubling_schedule(start, deepest_level(grid, start)?),
        Schedule::Doubling(start, end) => doubling_schedule(start, end),
        Schedule::Explicit(levels) => Ok(levels),
    }
}

fn half_window((lo, hi): (f64, f64)) -> (f64, f64) {
    (lo, 0.5 * hi)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn solve(flags: &Flags) -> Result<Status> {
    let s = Settings::merge(flags)?;
    let alpha = s.one_alpha()?;
    let p = s.p()?;
    let grid = s.grid()?;
    let schedule = resolve_schedule(&s.schedule, &grid)?;
    let mut options = SolverOptions::default();
    if let Some(tol) = s.tol {
        options.newton_tol = tol;
    }
    let crit = critical_exponents(alpha)?;
    let regime = classify_with(&crit, p, None)?;
    let pair = default_sub_super(alpha, p, grid.clone(), &options)?;
    let spec = ProblemSpec::new(p, pair.operator.clone(), pair.sub.clone(), pair.super_.clone(), options)?;
    let report = solve_schedule(&spec, &schedule)?;
    let u = report.solution();
    let fit = fit_rate(u, s.window);
    let half = fit_rate(u, half_window(s.window));
    let drift = match (&fit, &half) {
        (Ok(a), Ok(b)) => Some((a.pooled.exponent - b.pooled.exponent).abs()),
        _ => None,
    };
    let fit_json = |f: &Result<RateFits>| match f {
        Ok(f) => to_value(f),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let result = json!({
        "regime": regime,
        "schedule": schedule,
        "pair": {
            "delta": pair.profile.delta(),
            "lambda_sub": pair.lambda_sub,
            "lambda_super": pair.lambda_super,
            "lambda_lift": pair.lambda_lift,
            "sub_global": pair.sub_global,
        },
        "report": report,
        "fit": fit_json(&fit),
        "fit_half_window": fit_json(&half),
        "window_drift": drift,
    });
    let doc = s.envelope("solve", result);
    match &s.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), pretty(&doc))?;
            write_solution(u, &pair.sub, &pair.super_, create(&dir.join("solution.csv"))?)?;
            write_grid(&grid, create(&dir.join("grid.csv"))?)?;
            if let Ok(f) = &fit {
                write_rate_table(f, create(&dir.join("rates.csv"))?)?;
            }
            if flags.dump_matrix {
                write_matrix(&pair.operator, create(&dir.join("matrix.csv"))?)?;
            }
        }
        None => emit(None, &pretty(&doc))?,
    }
    Ok(Status::from_ok(report.converged && report.ordering_ok && report.monotone_ok))
}

pub fn audit(flags: &Flags) -> Result<Status> {
    let s = Settings::merge(flags)?;
    let alpha = s.one_alpha()?;
    let p = s.p()?;
    let grid = s.grid()?;
    let crit = critical_exponents(alpha)?;
    let (kind, audits, ok) = match s.taus()? {
        Some(taus) => {
            let audits: Vec<_> =
                taus.par_iter().map(|&t| audit_nonexistence_with(&crit, p, t, &grid)).collect::<Result<_>>()?;
            let ok = audits.iter().all(|a| a.passed);
            ("nonexistence", to_value(&audits), ok)
        }
        None => {
            let audits: Vec<_> =
                SPECIAL_T.par_iter().map(|&t| audit_special_family(&crit, p, t, &grid)).collect::<Result<_>>()?;
            let ok = audits.iter().all(|a| a.passed);
            ("special_family", to_value(&audits), ok)
        }
    };
    let doc = s.envelope("audit", json!({ "kind": kind, "passed": ok, "audits": audits }));
    emit(s.out.as_deref(), &pretty(&doc))?;
    Ok(Status::from_ok(ok))
}
