use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use sensornet::bayes::{
    posterior, simulate_record, uncertainty_curve, MseEstimator, MseSettings, UncertaintyCurve, DEFAULT_MC_SAMPLES,
    DEFAULT_RESOLUTION, DEFAULT_THRESHOLD,
};
use sensornet::crb::{crb_general, crb_sensor_symmetric, h_factor, j_opt};
use sensornet::fisher::{phase_grid, povm_fisher_gap, qfi_pure, qfi_sensor_symmetric, strength_interval};
use sensornet::network::MAX_QUBITS;
use sensornet::{InfoMatrix, LinearFunctionSet, PriorBox, PureState};

use crate::config::{decode, EstimatorArg, Format, RawConfig};
use crate::error::CliError;
use crate::output::{json_doc, num, opt_num, Csv};
use crate::Command;

const SEED_ENV: &str = "SENSORNET_SEED";
const DEFAULT_SWEEP_DIMS: [usize; 4] = [2, 3, 5, 10];
const DEFAULT_SWEEP_POINTS: usize = 201;
const DEFAULT_HMAP_POINTS: usize = 101;
const DEFAULT_POVM_GAMMAS: [f64; 5] = [0.2, 0.334, 0.531, 1.0, 2.0];
const DEFAULT_POVM_POINTS: usize = 10;
const DEFAULT_POVM_TOLERANCE: f64 = 1e-9;
const DEFAULT_LANDSCAPE_THETA: [f64; 2] = [1.0, 2.0];
const DEFAULT_LANDSCAPE_MU: u64 = 100;
/// Generator variance of a pure qubit prepared on the equator.
const DEFAULT_VARIANCE: f64 = 0.25;

pub fn run(cmd: Command, mut raw: RawConfig, out: Option<&Path>) -> Result<String, CliError> {
    let format = raw.format.take().unwrap_or_else(|| match out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => Format::Json,
        _ => Format::Csv,
    });
    let text = match cmd {
        Command::Qfi => qfi(&mut raw, format),
        Command::Crb => crb(&mut raw, format),
        Command::JoptSweep => jopt_sweep(&mut raw, format),
        Command::Hmap => hmap(&mut raw, format),
        Command::Geometry => geometry(&mut raw, format),
        Command::MseCurve => mse_curve(&mut raw, format),
        Command::PosteriorMap => posterior_map(&mut raw, format),
        Command::MuTau => mu_tau(&mut raw, format),
        Command::VerifyPovm => verify_povm(&mut raw, format),
    }?;
    Ok(text)
}

/// Fails on settings the command did not consume. Called after resolving
/// and before computing.
fn reject_leftovers(raw: &RawConfig, cmd: &str) -> Result<(), CliError> {
    match raw.leftover().first() {
        Some(name) => Err(CliError::invalid(*name, format!("not used by {cmd}"))),
        None => Ok(()),
    }
}

fn single<T: Copy>(field: &'static str, v: Option<Vec<T>>) -> Result<Option<T>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some([x]) => Ok(Some(*x)),
        Some(_) => Err(CliError::invalid(field, "expects a single value")),
    }
}

fn finite(field: &'static str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::invalid(field, "must be finite"))
    }
}

fn positive_count(field: &'static str, n: usize) -> Result<usize, CliError> {
    if n == 0 {
        Err(CliError::invalid(field, "must be at least 1"))
    } else {
        Ok(n)
    }
}

fn network_size(d: usize) -> Result<usize, CliError> {
    if (1..=MAX_QUBITS).contains(&d) {
        Ok(d)
    } else {
        Err(CliError::invalid("d", format!("must lie in 1..={MAX_QUBITS}")))
    }
}

fn seed(raw: &mut RawConfig) -> Result<u64, CliError> {
    if let Some(s) = raw.seed.take() {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::invalid("seed", format!("{SEED_ENV}={s} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn functions(raw: &mut RawConfig, d: usize) -> Result<LinearFunctionSet, CliError> {
    match raw.functions.take() {
        Some(v) => decode("functions", v),
        None if d == 2 => Ok(LinearFunctionSet::two_sensor_example()),
        None => Err(CliError::invalid("functions", format!("required for d = {d}"))),
    }
}

fn mu_list(raw: &mut RawConfig, default: Vec<u64>) -> Result<Vec<u64>, CliError> {
    let list = raw.mu_list.take().unwrap_or(default);
    if list.is_empty() {
        return Err(CliError::invalid("mu-list", "must not be empty"));
    }
    if list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::invalid("mu-list", "must be strictly ascending"));
    }
    Ok(list)
}

fn render<C: Serialize>(
    format: Format,
    cmd: &str,
    config: &C,
    csv: impl FnOnce(Csv) -> Csv,
    json: impl FnOnce() -> serde_json::Value,
) -> String {
    match format {
        Format::Csv => csv(Csv::new(cmd, config)).finish(),
        Format::Json => json_doc(config, json()),
    }
}

// ---------------------------------------------------------------- qfi

#[derive(Serialize)]
struct QfiConfig {
    command: &'static str,
    d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<f64>,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    j: Option<f64>,
    format: Format,
}

/// `--v` defaults to the equatorial value when only `--J` is given.
fn variance(raw: &mut RawConfig) -> Option<f64> {
    let v = raw.v.take();
    match (v, &raw.gamma, &raw.j) {
        (None, None, Some(_)) => Some(DEFAULT_VARIANCE),
        _ => v,
    }
}

fn probe_qfi(d: usize, gamma: Option<f64>, v: Option<f64>, j: Option<f64>) -> Result<InfoMatrix, CliError> {
    match (gamma, v, j) {
        (Some(g), None, None) => Ok(qfi_pure(&PureState::gamma_state(finite("gamma", g)?, d)?)),
        (None, Some(v), Some(j)) => Ok(qfi_sensor_symmetric(finite("v", v)?, finite("J", j)?, d)?),
        (Some(_), _, _) => Err(CliError::invalid("gamma", "give either --gamma or --v with --J, not both")),
        (None, _, Some(_)) => Err(CliError::invalid("v", "required with --J")),
        (None, Some(_), None) => Err(CliError::invalid("J", "required with --v")),
        (None, None, None) => Err(CliError::invalid("gamma", "give --gamma, or --v with --J")),
    }
}

fn qfi(raw: &mut RawConfig, format: Format) -> Result<String, CliError> {
    let d = network_size(single("d", raw.d.take())?.unwrap_or(2))?;
    let cfg = QfiConfig {
        command: "qfi",
        d,
        v: variance(raw),
        gamma: single("gamma", raw.gamma.take())?,
        j: single("J", raw.j.take())?,
        format,
    };
    reject_leftovers(raw, cfg.command)?;
    let fq = probe_qfi(d, cfg.gamma, cfg.v, cfg.j)?;
    fq.ensure_invertible()?;
    Ok(render(
        format,
        cfg.command,
        &cfg,
        |mut csv| {
            csv = csv.meta("invertible", fq.invertible);
            let mut cols = vec!["row".to_string()];
            cols.extend((1..=d).map(|c| format!("col_{c}")));
            cols.push("eigenvalue".into());
            csv = csv.header(&cols.iter().map(String::as_str).collect::<Vec<_>>());
            for i in 0..d {
                let mut cells = vec![(i + 1).to_string()];
                cells.extend(fq.matrix.row(i).iter().map(|x| num(*x)));
                cells.push(num(fq.eigenvalues[i]));
                csv.row(cells);
            }
            csv
        },
        || {
            json!({
                "matrix": (0..d).map(|i| fq.matrix.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
                "eigenvalues": fq.eigenvalues,
                "invertible": fq.invertible,
            })
        },
    ))
}

// ---------------------------------------------------------------- crb

#[derive(Serialize)]
struct CrbConfig {
    command: &'static str,
    d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<f64>,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    j: Option<f64>,
    #[serde(rename = "G", skip_serializing_if = "Option::is_none")]
    g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalization: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    functions: Option<LinearFunctionSet>,
    mu_list: Vec<u64>,
    format: Format,
}

fn crb(raw: &mut RawConfig, format: Format) -> Result<String, CliError> {
    let d = network_size(single("d", raw.d.take())?.unwrap_or(2))?;
    let v = variance(raw);
    let gamma = single("gamma", raw.gamma.take())?;
    let g = single("G", raw.g.take())?;
    let normalization = raw.normalization.take();
    // With a probe given by gamma the functions are needed in full; with
    // (v, J) the pair (N, G) suffices.
    let funcs = if gamma.is_some() || g.is_none() {
        Some(functions(raw, d)?)
    } else {
        None
    };
    if funcs.is_some() && (g.is_some() || normalization.is_some()) {
        return Err(CliError::invalid("G", "give either --functions or --G/--normalization"));
    }
    let cfg = CrbConfig {
        command: "crb",
        d,
        gamma,
        v,
        j: single("J", raw.j.take())?,
        g,
        normalization: g.map(|_| normalization.unwrap_or(1.0)),
        functions: funcs,
        mu_list: mu_list(raw, vec![1])?,
        format,
    };
    reject_leftovers(raw, cfg.command)?;
    if cfg.mu_list[0] == 0 {
        return Err(CliError::invalid("mu-list", "trial counts must be at least 1"));
    }

    let (n, geom) = match &cfg.functions {
        Some(f) => {
            let r = f.geometry()?;
            (r.normalization, r.geometry)
        }
        None => (cfg.normalization.unwrap_or(1.0), cfg.g.unwrap_or_default()),
    };
    let (strength, values) = match (cfg.gamma, cfg.v, cfg.j) {
        (Some(_), None, None) => {
            let fq = probe_qfi(d, cfg.gamma, None, None)?;
            let funcs = cfg.functions.as_ref().expect("resolved above");
            let state = PureState::gamma_state(cfg.gamma.unwrap_or_default(), d)?;
            let values = cfg
                .mu_list
                .iter()
                .map(|&mu| crb_general(funcs, &fq, mu))
                .collect::<Result<Vec<_>, _>>()?;
            (state.correlation_profile().common_j, values)
        }
        (None, Some(v), Some(j)) => {
            let values = cfg
                .mu_list
                .iter()
                .map(|&mu| crb_sensor_symmetric(n, finite("v", v)?, finite("J", j)?, geom, d, mu).map(|b| b.value).map_err(Into::into))
                .collect::<Result<Vec<_>, CliError>>()?;
            (Some(j), values)
        }
        _ => {
            probe_qfi(d, cfg.gamma, cfg.v, cfg.j)?;
            unreachable!("probe_qfi rejects every other combination")
        }
    };
    let h = strength.map(|j| h_factor(j, geom, d)).transpose()?;

    Ok(render(
        format,
        cfg.command,
        &cfg,
        |mut csv| {
            csv = csv
                .meta("normalization", num(n))
                .meta("geometry", num(geom))
                .meta("strength", opt_num(strength))
                .meta("h_factor", opt_num(h))
                .header(&["mu", "crb"]);
            for (mu, c) in cfg.mu_list.iter().zip(&values) {
                csv.row([mu.to_string(), num(*c)]);
            }
            csv
        },
        || {
            json!({
                "normalization": n,
                "geometry": geom,
                "strength": strength,
                "h_factor": h,
                "entries": cfg.mu_list.iter().zip(&values)
                    .map(|(mu, c)| json!({"mu": mu, "crb": c})).collect::<Vec<_>>(),
            })
        },
    ))
}

// ---------------------------------------------------------------- jopt-sweep

#[derive(Serialize)]
struct SweepConfig {
    command: &'static str,
    d: Vec<usize>,
    #[serde(rename = "G", skip_serializing_if = "Option::is_none")]
    g: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    format: Format,
}

/// `n` points strictly inside `(lo, hi)`, evenly spaced.
fn open_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
}

/// `n` points over `[lo, hi]`, endpoints included.
fn closed_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn jopt_sweep(raw: &mut RawConfig, format: Format) -> Result<String, CliError> {
    let dims = raw.d.take().unwrap_or_else(|| DEFAULT_SWEEP_DIMS.to_vec());
    if dims.is_empty() {
        return Err(CliError::invalid("d", "must not be empty"));
    }
    for &d in &dims {
        if d < 2 {
            return Err(CliError::invalid("d", "needs at least two sensors"));
        }
        network_size(d)?;
    }
    let g = raw.g.take();
    let cfg = SweepConfig {
        command: "jopt-sweep",
        points: match g {
            Some(_) => None,
            None => Some(positive_count("points", raw.points.take().unwrap_or(DEFAULT_SWEEP_POINTS))?),
        },
        d: dims,
        g,
        format,
    };
    reject_leftovers(raw, cfg.command)?;
    if let Some(gs) = &cfg.g {
        for &x in gs {
            for &d in &cfg.d {
                if !(x > -1.0 && x < d as f64 - 1.0) {
                    return Err(CliError::invalid("G", format!("{x} is outside (-1, {}) for d = {d}", d - 1)));
                }
            }
        }
    }
    let curves: Vec<(usize, Vec<f64>, Vec<f64>)> = cfg
        .d
        .iter()
        .map(|&d| {
            let gs = match &cfg.g {
                Some(gs) => gs.clone(),
                None => open_grid(-1.0, d as f64 - 1.0, cfg.points.unwrap_or(DEFAULT_SWEEP_POINTS)),
            };
            let js = gs.iter().map(|&x| j_opt(x, d)).collect::<Result<Vec<_>, _>>()?;
            Ok((d, gs, js))
        })
        .collect::<Result<_, CliError>>()?;

    Ok(render(
        format,
        cfg.command,
        &cfg,
        |mut csv| {
            csv = csv.header(&["d", "G", "j_opt"]);
            for (d, gs, js) in &curves {
                for (x, j) in gs.iter().zip(js) {
                    csv.row([d.to_string(), num(*x), num(*j)]);
                }
            }
            csv
        },
        || {
            json!({
                "curves": curves.iter().map(|(d, gs, js)| json!({"d": d, "G": gs, "j_opt": js})).collect::<Vec<_>>(),
            })
        },
    ))
}

// ---------------------------------------------------------------- hmap

#[derive(Serialize)]
struct HmapConfig {
    command: &'static str,
    d: usize,
    #[serde(rename = "J")]
    j: Vec<f64>,
    #[serde(rename = "G")]
    g: Vec<f64>,
    format: Format,
}

fn hmap(raw: &mut RawConfig, format: Format) -> Result<String, CliError> {
    let d = network_size(single("d", raw.d.take())?.unwrap_or(2))?;
    if d < 2 {
        return Err(CliError::invalid("d", "needs at least two sensors"));
    }
    let (lower, upper) = strength_interval(d);
    let points = if raw.j.is_none() || raw.g.is_none() {
        positive_count("points", raw.points.take().unwrap_or(DEFAULT_HMAP_POINTS))?
    } else {
        DEFAULT_HMAP_POINTS
    };
    let js = match raw.j.take() {
        Some(js) => js,
        None => {
            let mut js = open_grid(lower, upper, points);
            js.push(0.0);
            js.sort_by(f64::total_cmp);
            js.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
            js
        }
    };
    let gs = raw.g.take().unwrap_or_else(|| closed_grid(-1.0, d as f64 - 1.0, points));
    let cfg = HmapConfig {
        command: "hmap",
        d,
        j: js,
        g: gs,
        format,
    };
    reject_leftovers(raw, cfg.command)?;
    if cfg.j.is_empty() || cfg.g.is_empty() {
        return Err(CliError::invalid("J", "grid must not be empty"));
    }
    for &x in &cfg.g {
        finite("G", x)?;
    }
    let h: Vec<Vec<f64>> = cfg
        .j
        .iter()
        .map(|&j| cfg.g.iter().map(|&x| h_factor(j, x, d)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;

    Ok(render(
        format,
        cfg.command,
        &cfg,
        |mut csv| {
            csv = csv.header(&["J", "G", "h"]);
            for (j, row) in cfg.j.iter().zip(&h) {
                for (x, v) in cfg.g.iter().zip(row) {
                    csv.row([num(*j), num(*x), num(*v)]);
                }
            }
            csv
        },
        || json!({ "J": cfg.j, "G": cfg.g, "h": h }),
    ))
}

// ---------------------------------------------------------------- geometry

#[derive(Serialize)]
struct GeometryConfig {
    command: &'static str,
    functions: LinearFunctionSet,
    format: Format,
}

fn geometry(raw: &mut RawConfig, format: Format) -> Result<String, CliError> {
    let cfg = GeometryConfig {
        command: "geometry",
        functions: functions(raw, 2)?,
        format,
    };
    reject_leftovers(raw, cfg.command)?;
    let report = cfg.functions.geometry()?;
    Ok(render(
        format,
        cfg.command,
        &cfg,
        |mut csv| {
            csv = csv.header(&["quantity", "value"]);
            csv.row(["normalization".into(), num(report.normalization)]);
            csv.row(["geometry".into(), num(report.geometry)]);
            for (i, a) in report.angles.iter().enumerate() {
                csv.row([format!("angle_{}", i + 1), opt_num(*a)]);
            }
            csv
        },
        || json!({ "normalization": report.normalization, "geometry": report.geometry, "angles": report.angles }),
    ))
}

// ---------------------------------------------------------------- mse-curve / mu-tau

#[derive(Serialize)]
struct CurveParams {
    gamma: f64,
    functions: LinearFunctionSet,
    prior: PriorBox,
    mu_list: Vec<u64>,
    mc_samples: usize,
    resolution: usize,
    seed: u64,
    estimator: EstimatorArg,
    #[serde(skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
}

impl CurveParams {
    fn resolve(raw: &mut RawConfig) -> Result<Self, CliError> {
        let gamma = single("gamma", raw.gamma.take())?.ok_or_else(|| CliError::invalid("gamma", "required"))?;
        let prior = match raw.prior.take() {
            Some(v) => decode("prior", v)?,
            None => PriorBox::quarter_period_2d(),
        };
        let workers = raw.workers.take();
        if workers == Some(0) {
            return Err(CliError::invalid("workers", "must be at least 1"));
        }
        Ok(CurveParams {
            gamma: finite("gamma", gamma)?,
            functions: functions(raw, 2)?,
            prior,
            mu_list: mu_list(raw, sensornet::bayes::default_mu_list())?,
            mc_samples: positive_count("mc-samples", raw.mc_samples.take().unwrap_or(DEFAULT_MC_SAMPLES))?,
            resolution: raw.resolution.take().unwrap_or(DEFAULT_RESOLUTION),
            seed: seed(raw)?,
            estimator: raw.estimator.take().unwrap_or(EstimatorArg::PosteriorVariance),
            workers,
        })
    }

    fn settings(&self) -> MseSettings {
        MseSettings {
            mc_samples: self.mc_samples,
            resolution: self.resolution,
            seed: self.seed,
            estimator: match self.estimator {
                EstimatorArg::PosteriorVariance => MseEstimator::PosteriorVariance,
                EstimatorArg::SquaredError => MseEstimator::SquaredError,
            },
            offset: [0.0; 2],
            workers: self.workers,
        }
    }

    fn curve(&self, threshold: f64) -> Result<UncertaintyCurve, CliError> {
        Ok(uncertainty_curve(
            self.gamma,
            &self.functions,
            &self.prior,
            &self.mu_list,
            &self.settings(),
            threshold,
        )?)
    }
}

fn threshold(raw: &mut RawConfig) -> Result<f64, CliError> {
    let t = raw.threshold.take().unwrap_or(DEFAULT_THRESHOLD);
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        Err(CliError::invalid("threshold", "must be positive"))
    }
}

/// `converged`, `not_reached` or `no_asymptotic_limit`.
fn mu_tau_status(curve: &UncertaintyCurve) -> &'static str {
    if curve.entries.iter().any(|e| e.mu > 0 && e.crb.is_none()) {
        "no_asymptotic_limit"
    } else if curve.mu_tau.is_some() {
        "converged"
    } else {
        "not_reached"
    }
}

#[derive(Serialize)]
struct MseCurveConfig {
    command: &'static str,
    #[serde(flatten)]
    params: CurveParams,
    threshold: f64,
    format: Format,
}

fn mse_curve(raw: &mut RawConfig, format: Format) -> Result<String, CliError> {
    let cfg = MseCurveConfig {
        command: "mse-curve",
        params: CurveParams::resolve(raw)?,
        threshold: threshold(raw)?,
        format,
    };
    reject_leftovers(raw, cfg.command)?;
    let curve = cfg.params.curve(cfg.threshold)?;
    let status = mu_tau_status(&curve);
    Ok(render(
        format,
        cfg.command,
        &cfg,
        |mut csv| {
            csv = csv
                .meta("seed", curve.seed)
                .meta("mu_tau", curve.mu_tau.map_or(status.to_string(), |m| m.to_string()))
                .header(&["mu", "mse", "mc_stderr", "crb", "ratio"]);
            for e in &curve.entries {
                csv.row([e.mu.to_string(), num(e.mse), num(e.mc_stderr), opt_num(e.crb), opt_num(e.ratio)]);
            }
            csv
        },
        || json!({ "curve": curve, "mu_tau_status": status }),
    ))
}

#[derive(Serialize)]
struct MuTauConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    curve: Option<String>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    params: Option<CurveParams>,
    threshold: f64,
    format: Format,
}

#[derive(Deserialize)]
struct CurveFile {
    curve: UncertaintyCurve,
}

fn mu_tau(raw: &mut RawConfig, format: Format) -> Result<String, CliError> {
    let path = raw.curve.take();
    let params = match path {
        Some(_) => None,
        None => Some(CurveParams::resolve(raw)?),
    };
    let cfg = MuTauConfig {
        command: "mu-tau",
        curve: path,
        params,
        threshold: threshold(raw)?,
        format,
    };
    reject_leftovers(raw, cfg.command)?;
    let mut curve = match (&cfg.curve, &cfg.params) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::invalid("curve", format!("{p}: {e}")))?;
            serde_json::from_str::<CurveFile>(&text)
                .map_err(|e| CliError::invalid("curve", format!("{p}: {e}")))?
                .curve
        }
        (None, Some(params)) => params.curve(cfg.threshold)?,
        (None, None) => unreachable!("resolved above"),
    };
    curve.threshold = cfg.threshold;
    curve.mu_tau = sensornet::bayes::mu_tau(&curve, cfg.threshold);
    let status = mu_tau_status(&curve);
    Ok(render(
        format,
        cfg.command,
        &cfg,
        |mut csv| {
            csv = csv.header(&["gamma", "mu_tau", "status", "threshold"]);
            csv.row([
                num(curve.gamma),
                curve.mu_tau.map(|m| m.to_string()).unwrap_or_default(),
                status.into(),
                num(cfg.threshold),
            ]);
            csv
        },
        || json!({ "gamma": curve.gamma, "mu_tau": curve.mu_tau, "status": status, "seed": curve.seed }),
    ))
}

// ---------------------------------------------------------------- posterior-map

#[derive(Serialize)]
struct PosteriorMapConfig {
    command: &'static str,
    gamma: f64,
    theta: [f64; 2],
    mu: u64,
    prior: PriorBox,
    resolution: usize,
    seed: u64,
    format: Format,
}

fn posterior_map(raw: &mut RawConfig, format: Format) -> Result<String, CliError> {
    let gamma = single("gamma", raw.gamma.take())?.ok_or_else(|| CliError::invalid("gamma", "required"))?;
    let theta = match raw.theta.take().as_deref() {
        None => DEFAULT_LANDSCAPE_THETA,
        Some([a, b]) => [finite("theta", *a)?, finite("theta", *b)?],
        Some(_) => return Err(CliError::invalid("theta", "expects two values")),
    };
    let prior = match raw.prior.take() {
        Some(v) => decode("prior", v)?,
        None => PriorBox::full_period_2d(),
    };
    let cfg = PosteriorMapConfig {
        command: "posterior-map",
        gamma: finite("gamma", gamma)?,
        theta,
        mu: raw.mu.take().unwrap_or(DEFAULT_LANDSCAPE_MU),
        prior,
        resolution: raw.resolution.take().unwrap_or(DEFAULT_RESOLUTION),
        seed: seed(raw)?,
        format,
    };
    reject_leftovers(raw, cfg.command)?;
    let record = simulate_record(cfg.gamma, cfg.theta, cfg.mu as usize, cfg.seed);
    let post = posterior(&record, &cfg.prior, cfg.resolution)?;
    let periodic = cfg.prior.widths().iter().all(|w| (w - 2.0 * PI).abs() < 1e-9);
    let peaks = post.peaks(periodic);
    let (t1, t2) = (post.axis(0), post.axis(1));
    let g = post.resolution();

    Ok(render(
        format,
        cfg.command,
        &cfg,
        |mut csv| {
            csv = csv.meta("seed", cfg.seed).meta("peak_count", peaks.len()).meta(
                "peaks",
                peaks
                    .iter()
                    .map(|p| format!("{} {}", num(p.theta[0]), num(p.theta[1])))
                    .collect::<Vec<_>>()
                    .join("; "),
            );
            let mut head = vec!["theta1\\theta2".to_string()];
            head.extend(t2.iter().map(|x| num(*x)));
            csv = csv.header(&head.iter().map(String::as_str).collect::<Vec<_>>());
            for (i, x) in t1.iter().enumerate() {
                let mut cells = vec![num(*x)];
                cells.extend((0..g).map(|j| num(post.density(i, j))));
                csv.row(cells);
            }
            csv
        },
        || {
            json!({
                "theta1": t1,
                "theta2": t2,
                "density": (0..g).map(|i| (0..g).map(|j| post.density(i, j)).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "peak_count": peaks.len(),
                "peaks": peaks.iter().map(|p| json!({"theta": p.theta, "density": p.density})).collect::<Vec<_>>(),
            })
        },
    ))
}

// ---------------------------------------------------------------- verify-povm

#[derive(Serialize)]
struct PovmConfig {
    command: &'static str,
    gamma: Vec<f64>,
    points: usize,
    tolerance: f64,
    format: Format,
}

fn verify_povm(raw: &mut RawConfig, format: Format) -> Result<String, CliError> {
    let cfg = PovmConfig {
        command: "verify-povm",
        gamma: raw.gamma.take().unwrap_or_else(|| DEFAULT_POVM_GAMMAS.to_vec()),
        points: positive_count("points", raw.points.take().unwrap_or(DEFAULT_POVM_POINTS))?,
        tolerance: raw.tolerance.take().unwrap_or(DEFAULT_POVM_TOLERANCE),
        format,
    };
    reject_leftovers(raw, cfg.command)?;
    if !(cfg.tolerance >= 0.0) {
        return Err(CliError::invalid("tolerance", "must be non-negative"));
    }
    let grid = phase_grid(cfg.points, 0.0, FRAC_PI_2);
    let gaps = cfg
        .gamma
        .iter()
        .map(|&g| povm_fisher_gap(g, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(render(
        format,
        cfg.command,
        &cfg,
        |mut csv| {
            csv = csv.header(&["gamma", "max_gap", "saturated"]);
            for (g, gap) in cfg.gamma.iter().zip(&gaps) {
                csv.row([num(*g), num(*gap), (*gap <= cfg.tolerance).to_string()]);
            }
            csv
        },
        || {
            json!({
                "results": cfg.gamma.iter().zip(&gaps)
                    .map(|(g, gap)| json!({"gamma": g, "max_gap": gap, "saturated": *gap <= cfg.tolerance}))
                    .collect::<Vec<_>>(),
            })
        },
    ))
}
