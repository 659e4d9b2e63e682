use std::f64::consts::TAU;

use orbitlab::homogeneous::{shortest_vector, Mat2, Vec2};
use orbitlab::lenses::{
    build_skew_iet, deviation_exponent, drift_track, lyapunov_w, random_vector, trace, trapped_classify, BaseIet,
    LensGrid, LensModel,
};
use orbitlab::rng::{stream, Stream};
use orbitlab::stats::{mean, median};
use orbitlab::LabError;
use rand::Rng;
use serde_json::json;

use super::{check_count, check_positive, lattice, par_tasks};
use crate::config::{flag, float, int, text, Param, RunConfig};
use crate::output::{RunOutput, Table};
use crate::{CliError, Spec};

const COMMON: &[Param] = &[
    text("lattice", "z2", "lens centres: z2, hex, haar (one per task) or a,b,c,d"),
    float("R", "0.25", "lens radius"),
    flag("relative", "read R as a fraction of half the shortest lattice vector"),
];

pub const SCAN: Spec = Spec {
    group: "eaton",
    name: "scan",
    about: "Trace rays in random directions and classify them as trapped or not",
    params: &[
        COMMON[0],
        COMMON[1],
        COMMON[2],
        text("model", "eaton", "lens model: eaton or flat"),
        int("thetas", "100", "number of random directions"),
        int("events", "100000", "lens events per ray"),
        float("horizon", "1e6", "give up when no lens is met within this distance"),
        float("x0", "0.5", "start point, first lattice coordinate"),
        float("y0", "0.5", "start point, second lattice coordinate"),
    ],
    run: scan,
};

pub const LYAPUNOV: Spec = Spec {
    group: "eaton",
    name: "lyapunov",
    about: "Top exponent of the sign-twisted Rauzy-Veech cocycle of the double cover",
    params: &[
        COMMON[0],
        COMMON[1],
        COMMON[2],
        int("configs", "10", "random directions"),
        int("steps", "100000", "accelerated induction steps"),
    ],
    run: lyapunov,
};

pub const DRIFT: Spec = Spec {
    group: "eaton",
    name: "drift",
    about: "Homology drift of the skew rotation and its power-law exponent",
    params: &[
        COMMON[0],
        COMMON[1],
        COMMON[2],
        int("thetas", "20", "random directions"),
        int("returns", "1000000", "returns to the transversal per direction"),
    ],
    run: drift,
};

/// Lattice, radius and direction of task `k`, drawn in that order from the
/// task stream.
fn setup(cfg: &RunConfig, k: u64) -> Result<(Mat2, f64, f64, Stream), CliError> {
    let mut rng = stream(cfg.seed, k);
    let h = lattice(cfg.str("lattice"), &mut rng)?;
    let r = if cfg.bool("relative") {
        let f = cfg.f64("R");
        if !(f > 0.0 && f < 1.0) {
            return Err(LabError::Validation(format!("relative R must lie in (0, 1), got {f}")).into());
        }
        0.5 * f * shortest_vector(&h).norm()
    } else {
        cfg.f64("R")
    };
    check_positive("R", r)?;
    // validates admissibility with a readable message
    LensGrid::new(h, r, LensModel::Eaton, 0.0)?;
    let theta = TAU * rng.random::<f64>();
    Ok((h, r, theta, rng))
}

fn scan(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let model = LensModel::parse(cfg.str("model"))?;
    let (n, events, horizon) = (cfg.usize("thetas"), cfg.usize("events"), cfg.f64("horizon"));
    check_count("thetas", n)?;
    check_count("events", events)?;
    check_positive("horizon", horizon)?;
    setup(cfg, 0)?;
    let start = Vec2::new(cfg.f64("x0"), cfg.f64("y0"));
    let rows = par_tasks(n, |k| {
        let (h, r, theta, _) = setup(cfg, k)?;
        let grid = LensGrid::new(h, r, model, theta)?;
        let tr = trace(&grid, h.apply(start), events, horizon)?;
        let rep = trapped_classify(&tr.polyline())?;
        Ok((k, theta, r, rep.trapped, rep.band_width, tr.events.len(), tr.escaped, tr.grazes))
    })?;
    let mut table = Table::new("trapping", &["task", "theta", "R", "trapped", "band_width", "events", "escaped", "grazes"])
        .plot("theta", "band_width");
    for &(k, theta, r, trapped, width, ev, escaped, grazes) in &rows {
        table.push(vec![k.into(), theta.into(), r.into(), trapped.into(), width.into(), ev.into(), escaped.into(), grazes.into()]);
    }
    let trapped = rows.iter().filter(|r| r.3).count();
    let widths: Vec<f64> = rows.iter().filter(|r| r.3).map(|r| r.4).collect();
    let mut summary = vec![("trapped", json!(trapped)), ("trapped_fraction", json!(trapped as f64 / n as f64))];
    if !widths.is_empty() {
        summary.push(("median_band_width", json!(median(&widths))));
    }
    Ok(RunOutput { tables: vec![table], summary })
}

const SLIT_CENTER: Vec2 = Vec2 { x: 0.0, y: 0.5 };

fn lyapunov(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let (n, steps) = (cfg.usize("configs"), cfg.usize("steps"));
    check_count("configs", n)?;
    check_count("steps", steps)?;
    setup(cfg, 0)?;
    let rows = par_tasks(n, |k| {
        let (h, r, theta, mut rng) = setup(cfg, k)?;
        let iet = build_skew_iet(&h, r, Vec2::unit(theta), SLIT_CENTER)?;
        let d = BaseIet::from_skew(&iet)?.lengths.len();
        let est = lyapunov_w(&iet, steps, &random_vector(d, &mut rng))?;
        Ok((k, theta, r, d, est))
    })?;
    let mut table = Table::new(
        "lyapunov",
        &["task", "theta", "R", "intervals", "exponent", "teichmuller_time", "rauzy_steps", "blocks_checked", "unimodular"],
    )
    .plot("theta", "exponent");
    for (k, theta, r, d, e) in &rows {
        table.push(vec![
            (*k).into(),
            (*theta).into(),
            (*r).into(),
            (*d).into(),
            e.exponent.into(),
            e.teichmuller_time.into(),
            e.rauzy_steps.into(),
            e.blocks_checked.into(),
            e.all_unimodular.into(),
        ]);
    }
    let exps: Vec<f64> = rows.iter().map(|r| r.4.exponent).collect();
    let summary = vec![
        ("mean_exponent", json!(mean(&exps))),
        ("all_unimodular", json!(rows.iter().all(|r| r.4.all_unimodular))),
    ];
    Ok(RunOutput { tables: vec![table], summary })
}

fn drift(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let (n, returns) = (cfg.usize("thetas"), cfg.usize("returns"));
    check_count("thetas", n)?;
    if returns < 16 {
        return Err(LabError::Validation("--returns must be at least 16".into()).into());
    }
    setup(cfg, 0)?;
    let rows = par_tasks(n, |k| {
        let (h, r, theta, mut rng) = setup(cfg, k)?;
        let iet = build_skew_iet(&h, r, Vec2::unit(theta), SLIT_CENTER)?;
        let series = drift_track(&iet, rng.random(), returns)?;
        let norms = series.norms();
        let fit = deviation_exponent(&norms)?;
        let max = norms.iter().cloned().fold(0.0, f64::max);
        let last = *series.d.last().unwrap();
        Ok((k, theta, fit, series.toggle_frequency(), iet.toggle_rate, max, last))
    })?;
    let mut table = Table::new(
        "drift",
        &["task", "theta", "exponent", "bounded", "toggle_frequency", "toggle_rate", "max_norm", "final_x", "final_y"],
    )
    .plot("theta", "exponent");
    for (k, theta, fit, freq, rate, max, last) in &rows {
        table.push(vec![
            (*k).into(),
            (*theta).into(),
            fit.exponent.into(),
            fit.bounded.into(),
            (*freq).into(),
            (*rate).into(),
            (*max).into(),
            last[0].into(),
            last[1].into(),
        ]);
    }
    let exps: Vec<f64> = rows.iter().map(|r| r.2.exponent).collect();
    Ok(RunOutput { tables: vec![table], summary: vec![("median_exponent", json!(median(&exps)))] })
}
