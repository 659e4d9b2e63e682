use std::f64::consts::PI;

use orbitlab::billiards::reduction::billiard_curve;
use orbitlab::billiards::EllipseTable;
use orbitlab::homogeneous::{
    curve_point, haar_sample, orbit_samples, rotation_curve, trapezoid_mean, wronskian_det,
    AffineLatticeClass, CurveU, Observable, Vec2,
};
use orbitlab::rng::stream;
use orbitlab::stats::{batch_means_se, mean, mean_se};
use orbitlab::LabError;
use rand::Rng;
use serde_json::json;

use super::{check_count, check_positive, par_tasks, AUX_TASK};
use crate::config::{flag, float, int, text, RunConfig};
use crate::output::{RunOutput, Table};
use crate::{CliError, Spec};

pub const FLOW: Spec = Spec {
    group: "lattice",
    name: "flow",
    about: "Birkhoff averages of an observable along geodesic orbits of curve points",
    params: &[
        text("phi", "s^2", "curve s -> u(s, phi(s), 0): 0, s, s^k or sin(s)"),
        float("s", "0.5", "curve parameter when --points is 1"),
        int("points", "1", "number of curve parameters; more than 1 draws them at random"),
        float("T", "1000", "orbit length"),
        float("dt", "0.01", "sampling step"),
        text("observable", "cusp_bump:c=3", "observable preset"),
        int("batches", "20", "batches for the standard error of each average"),
        int("haar", "0", "Haar Monte-Carlo samples for the reference mean"),
    ],
    run: flow,
};

pub const HAAR: Spec = Spec {
    group: "lattice",
    name: "haar",
    about: "Siegel mean of lattice points in a centred disc under Haar measure",
    params: &[
        int("n", "100000", "Haar samples"),
        float("area", "0.5", "disc area"),
        int("chunk", "10000", "samples per task"),
    ],
    run: haar,
};

pub const CURVE_CHECK: Spec = Spec {
    group: "lattice",
    name: "curve-check",
    about: "Wronskian determinant along the billiard curve or the lens rotation curve",
    params: &[
        text("curve", "billiard", "billiard or rotation"),
        float("a", "2.0", "billiard table: major axis parameter"),
        float("b", "1.0", "billiard table: minor axis parameter"),
        float("lambda0", "0.5", "billiard table: barrier parameter"),
        float("R", "0.25", "rotation curve: lens radius"),
        int("grid", "100", "points per interval"),
        flag("numeric", "use central differences instead of the analytic jet"),
    ],
    run: curve_check,
};

fn flow(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let curve = CurveU::parse(cfg.str("phi"))?;
    let obs = Observable::parse(cfg.str("observable"))?;
    let (t_total, dt) = (cfg.f64("T"), cfg.f64("dt"));
    let (points, batches, haar_n) = (cfg.usize("points"), cfg.usize("batches"), cfg.usize("haar"));
    check_count("points", points)?;
    check_count("batches", batches)?;
    let rows = par_tasks(points, |k| {
        let s = if points == 1 {
            cfg.f64("s")
        } else {
            let (lo, hi) = curve.domain;
            lo + (hi - lo) * stream(cfg.seed, k).random::<f64>()
        };
        let x0 = AffineLatticeClass::new(curve_point(&curve, s)?);
        let v = orbit_samples(&x0, |l| obs.eval(l), t_total, dt)?;
        if v.len() < 2 * batches {
            return Err(LabError::Validation(format!("{} samples are too few for {batches} batches", v.len())).into());
        }
        Ok((k, s, trapezoid_mean(&v), batch_means_se(&v, batches)))
    })?;
    let mut summary = vec![("observable", json!(obs.to_string()))];
    let reference = if haar_n > 0 {
        let chunks = haar_n.div_ceil(10_000);
        let parts = par_tasks(chunks, |k| {
            let mut rng = stream(cfg.seed, AUX_TASK + k);
            let n = 10_000.min(haar_n - k as usize * 10_000);
            Ok((0..n).map(|_| obs.eval(&haar_sample(&mut rng))).collect::<Vec<f64>>())
        })?;
        let all: Vec<f64> = parts.concat();
        let (m, se) = mean_se(&all);
        summary.push(("haar_mean", json!(m)));
        summary.push(("haar_se", json!(se)));
        Some((m, se))
    } else {
        None
    };
    let mut table = Table::new("birkhoff", &["task", "s", "T", "average", "batch_se", "z"]).plot("s", "average");
    for (k, s, avg, se) in rows {
        let z = reference.map_or(f64::NAN, |(m, mse)| (avg - m) / (se * se + mse * mse).sqrt());
        table.push(vec![k.into(), s.into(), t_total.into(), avg.into(), se.into(), z.into()]);
    }
    Ok(RunOutput { tables: vec![table], summary })
}

fn haar(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let (n, chunk, area) = (cfg.usize("n"), cfg.usize("chunk"), cfg.f64("area"));
    check_count("n", n)?;
    check_count("chunk", chunk)?;
    check_positive("area", area)?;
    let radius = (area / PI).sqrt();
    let tasks = n.div_ceil(chunk);
    let counts = par_tasks(tasks, |k| {
        let mut rng = stream(cfg.seed, k);
        let m = chunk.min(n - k as usize * chunk);
        Ok((0..m).map(|_| haar_sample(&mut rng).count_in_disc(Vec2::ZERO, radius) as f64).collect::<Vec<f64>>())
    })?;
    let mut table = Table::new("siegel", &["task", "samples", "mean_count"]).plot("task", "mean_count");
    for (k, c) in counts.iter().enumerate() {
        table.push(vec![k.into(), c.len().into(), mean(c).into()]);
    }
    let (m, se) = mean_se(&counts.concat());
    let summary = vec![("mean_count", json!(m)), ("se", json!(se)), ("expected", json!(area))];
    Ok(RunOutput { tables: vec![table], summary })
}

fn curve_check(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let grid = cfg.usize("grid");
    check_count("grid", grid)?;
    let mid = |lo: f64, hi: f64| (0..grid).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / grid as f64);
    let mut rows = Vec::new();
    match cfg.str("curve") {
        "billiard" => {
            let t = EllipseTable::new(cfg.f64("a"), cfg.f64("b"), cfg.f64("lambda0"))?;
            for (lo, hi) in [(t.lambda0, t.b), (t.b, t.a)] {
                let c = billiard_curve(t, (lo, hi), !cfg.bool("numeric"));
                let xs: Vec<f64> = mid(lo, hi).collect();
                let dets = par_tasks(xs.len(), |k| Ok(wronskian_det(&c, xs[k as usize])?))?;
                rows.extend(xs.into_iter().zip(dets));
            }
        }
        "rotation" => {
            let r = cfg.f64("R");
            check_positive("R", r)?;
            let c = rotation_curve(r);
            let xs: Vec<f64> = mid(c.domain.0, c.domain.1).collect();
            let dets = par_tasks(xs.len(), |k| Ok(wronskian_det(&c, xs[k as usize])?))?;
            rows.extend(xs.into_iter().zip(dets));
        }
        other => return Err(CliError::Usage(format!("unknown curve '{other}', expected billiard or rotation"))),
    }
    let mut table = Table::new("wronskian", &["param", "det", "sign"]).plot("param", "det");
    for &(x, d) in &rows {
        table.push(vec![x.into(), d.into(), (d.signum() as i64).into()]);
    }
    let min_abs = rows.iter().map(|r| r.1.abs()).fold(f64::INFINITY, f64::min);
    let nonvanishing = rows.iter().all(|r| r.1 != 0.0 && r.1.is_finite());
    Ok(RunOutput { tables: vec![table], summary: vec![("min_abs_det", json!(min_abs)), ("nonvanishing", json!(nonvanishing))] })
}
