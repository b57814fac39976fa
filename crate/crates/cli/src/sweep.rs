//! Parameter sweeps evaluated in parallel, written as CSV.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use weakprobe::gaussian_qfi::qfi_weak_mixed;
use weakprobe::meter::{refined_quadrature_grid, snr_gaussian_exact, snr_mixed_closed_form, snr_weak_limit};
use weakprobe::numeric_qfi::{appendix_b_qfi, appendix_b_qfi_on, discretize, effective_qfi, sld_qfi};
use weakprobe::{MomentumGrid, PostSelectedMeterState, SelectionContext, ThermalGaussianProbe};

use crate::config::{AxisName, Quantity, SelectionConfig, SweepConfig};

/// Column order of every CSV this tool writes. Changing it is a format break.
pub const CSV_HEADER: [&str; 12] = [
    "series",
    "theta",
    "phi",
    "sweep_axis",
    "sweep_value",
    "quantity",
    "value",
    "postselection_probability",
    "validity",
    "grid_p_max",
    "grid_n_points",
    "error",
];

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub series: String,
    pub theta: f64,
    pub phi: Option<f64>,
    pub sweep_axis: &'static str,
    pub sweep_value: f64,
    pub quantity: &'static str,
    pub value: Option<f64>,
    pub postselection_probability: Option<f64>,
    pub validity: Option<f64>,
    pub grid_p_max: Option<f64>,
    pub grid_n_points: Option<usize>,
    pub error: String,
}

#[derive(Debug, Default)]
struct Point {
    value: f64,
    probability: Option<f64>,
    validity: Option<f64>,
    grid: Option<MomentumGrid>,
}

/// Fixed parameters of a point after the axis value is substituted.
struct Setup {
    probe: ThermalGaussianProbe,
    ctx: SelectionContext,
    theta: f64,
    p_max: Option<f64>,
}

fn setup(cfg: &SweepConfig, x: f64) -> (f64, Option<f64>, weakprobe::Result<Setup>) {
    let mut probe_cfg = cfg.probe.clone();
    let mut selection = cfg.selection.clone();
    let mut theta = cfg.run.theta;
    let mut p_max = cfg.run.p_max;
    match cfg.axis.name {
        AxisName::Temperature => probe_cfg.temperature = x,
        AxisName::Theta => theta = x,
        AxisName::Phi => selection = SelectionConfig::Phi { phi: x },
        AxisName::PMax => p_max = Some(x),
    }
    let phi = selection.phi();
    let built = (|| {
        Ok(Setup { probe: probe_cfg.build()?, ctx: selection.build()?, theta, p_max })
    })();
    (theta, phi, built)
}

fn grid_or(default: MomentumGrid, p_max: Option<f64>, n_points: Option<usize>) -> weakprobe::Result<MomentumGrid> {
    if p_max.is_none() && n_points.is_none() {
        return Ok(default);
    }
    MomentumGrid::new(p_max.unwrap_or(default.p_max()), n_points.unwrap_or(default.n_points()))
}

fn evaluate(cfg: &SweepConfig, s: &Setup) -> weakprobe::Result<Point> {
    let n_trials = cfg.run.n_trials;
    let n_points = cfg.run.n_points;
    let weak = snr_weak_limit(&s.probe, &s.ctx, s.theta, n_trials, cfg.run.validity_threshold);
    let validity = weak.as_ref().ok().map(|w| w.validity);
    let closed = |value: f64| Point { value, probability: Some(s.ctx.postselection_overlap()), validity, grid: None };
    Ok(match cfg.quantity {
        Quantity::SnrNumeric => {
            let grid = grid_or(refined_quadrature_grid(&s.probe, s.theta), s.p_max, n_points)?;
            let st = PostSelectedMeterState::new(s.probe, s.ctx, s.theta, grid)?;
            Point {
                value: st.snr_postselected_numeric(n_trials)?,
                probability: Some(st.postselection_probability_allorder()),
                validity,
                grid: Some(grid),
            }
        }
        Quantity::SnrClosed => closed(snr_mixed_closed_form(&s.probe, &s.ctx, s.theta, n_trials)?),
        Quantity::SnrExact => closed(snr_gaussian_exact(&s.probe, &s.ctx, s.theta, n_trials)?),
        Quantity::SnrWeak => closed(weak?.value),
        Quantity::QfiWeak => closed(qfi_weak_mixed(&s.probe, &s.ctx)?),
        Quantity::QfiNumeric | Quantity::QfiEffective => {
            let grid = grid_or(MomentumGrid::for_matrix(&s.probe, s.theta), s.p_max, n_points)?;
            let st = PostSelectedMeterState::new(s.probe, s.ctx, s.theta, grid)?;
            let value = if cfg.quantity == Quantity::QfiNumeric {
                sld_qfi(&discretize(&st)?)?
            } else {
                effective_qfi(&st)?.effective
            };
            Point { value, probability: Some(st.postselection_probability_allorder()), validity, grid: Some(grid) }
        }
        Quantity::Purity => Point { value: s.probe.purity(), ..Default::default() },
        Quantity::AppendixB => {
            let p_max = s.p_max.expect("validated: appendix_b has a p_max");
            let r = match n_points {
                Some(n) => appendix_b_qfi_on(s.theta, &s.ctx, &MomentumGrid::new(p_max, n)?)?,
                None => appendix_b_qfi(s.theta, &s.ctx, p_max)?,
            };
            Point { value: r.qfi, probability: None, validity: None, grid: None }
        }
    })
}

/// Evaluates one point. Numerical failures land in the `error` column.
pub fn evaluate_point(cfg: &SweepConfig, series: &str, x: f64) -> Row {
    let (theta, phi, built) = setup(cfg, x);
    let result = built.and_then(|s| evaluate(cfg, &s));
    let mut row = Row {
        series: series.to_string(),
        theta,
        phi,
        sweep_axis: cfg.axis.name.name(),
        sweep_value: x,
        quantity: cfg.quantity.name(),
        value: None,
        postselection_probability: None,
        validity: None,
        grid_p_max: None,
        grid_n_points: None,
        error: String::new(),
    };
    match result {
        Ok(p) => {
            row.value = Some(p.value);
            row.postselection_probability = p.probability;
            row.validity = p.validity;
            row.grid_p_max = p.grid.map(|g| g.p_max());
            row.grid_n_points = p.grid.map(|g| g.n_points());
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Runs every axis point of `cfg`, in order.
pub fn run(cfg: &SweepConfig, series: &str) -> Vec<Row> {
    cfg.axis.values().into_par_iter().map(|x| evaluate_point(cfg, series, x)).collect()
}

/// Runs several labelled sweeps on a pool of `jobs` threads (0 = all cores).
/// Row order follows the input order, independent of scheduling.
pub fn run_all(sweeps: &[(String, SweepConfig)], jobs: usize) -> Result<Vec<Row>, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| {
        let tasks: Vec<(&str, &SweepConfig, f64)> = sweeps
            .iter()
            .flat_map(|(label, cfg)| cfg.axis.values().into_iter().map(move |x| (label.as_str(), cfg, x)))
            .collect();
        tasks.into_par_iter().map(|(label, cfg, x)| evaluate_point(cfg, label, x)).collect()
    }))
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
