use orbitlab::billiards::reduction::{case_of, det_mpsi_billiard, reduction_data, Case};
use orbitlab::billiards::{equidistribution_report, random_state_on_caustic, EllipseTable};
use orbitlab::rng::stream;
use orbitlab::stats::mean;
use rand::Rng;
use serde_json::json;

use super::{check_count, par_tasks};
use crate::config::{float, int, required, Kind, Param, RunConfig};
use crate::output::{RunOutput, Table};
use crate::{CliError, Spec};

const TABLE: &[Param] = &[
    float("a", "2.0", "major axis parameter of x^2/a + y^2/b = 1"),
    float("b", "1.0", "minor axis parameter"),
    float("lambda0", "0.5", "barrier parameter, 0 for no barrier"),
];

pub const SCAN: Spec = Spec {
    group: "billiard",
    name: "scan",
    about: "Wronskian sign along the caustic family and two-orbit KS reports",
    params: &[
        TABLE[0],
        TABLE[1],
        TABLE[2],
        int("grid", "100", "caustic parameters per case interval"),
        int("pairs", "10", "random caustics for the equidistribution report"),
        int("collisions", "100000", "boundary collisions per orbit"),
    ],
    run: scan,
};

pub const REDUCE: Spec = Spec {
    group: "billiard",
    name: "reduce",
    about: "Reduction data l, w, d and two derivatives at one caustic",
    params: &[TABLE[0], TABLE[1], TABLE[2], required("lambda", Kind::Float, "caustic parameter")],
    run: reduce,
};

fn table(cfg: &RunConfig) -> Result<EllipseTable, CliError> {
    Ok(EllipseTable::new(cfg.f64("a"), cfg.f64("b"), cfg.f64("lambda0"))?)
}

fn case_name(c: Case) -> &'static str {
    match c {
        Case::E => "E",
        Case::EPrime => "E'",
        Case::H => "H",
    }
}

fn scan(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let t = table(cfg)?;
    let (grid, pairs, collisions) = (cfg.usize("grid"), cfg.usize("pairs"), cfg.usize("collisions"));
    check_count("grid", grid)?;
    check_count("collisions", collisions)?;
    // midpoints of (lambda0, b) and (b, a)
    let lambdas: Vec<f64> = [(t.lambda0, t.b), (t.b, t.a)]
        .iter()
        .flat_map(|&(lo, hi)| (0..grid).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / grid as f64))
        .collect();
    let dets = par_tasks(lambdas.len(), |k| {
        let l = lambdas[k as usize];
        Ok((l, case_of(l, &t)?, det_mpsi_billiard(l, &t)?))
    })?;
    let mut det_table = Table::new("det", &["lambda", "case", "det", "sign"]).plot("lambda", "det");
    for &(l, c, d) in &dets {
        det_table.push(vec![l.into(), case_name(c).into(), d.into(), (d.signum() as i64).into()]);
    }
    let reports = par_tasks(pairs, |k| {
        let mut rng = stream(cfg.seed, k);
        let lambda = loop {
            let l = t.lambda0 + (t.a - t.lambda0) * rng.random::<f64>();
            if (l - t.b).abs() > 1e-3 && l > 0.0 {
                break l;
            }
        };
        let s1 = random_state_on_caustic(&t, lambda, &mut rng)?;
        let s2 = random_state_on_caustic(&t, lambda, &mut rng)?;
        Ok((k, equidistribution_report(&s1, &s2, &t, collisions)?))
    })?;
    let mut eq = Table::new("equidistribution", &["task", "lambda", "collisions", "ks", "max_drift"]).plot("lambda", "ks");
    for (k, r) in &reports {
        eq.push(vec![(*k).into(), r.lambda.into(), r.collisions.into(), r.ks.into(), r.max_drift.into()]);
    }
    let sign_of = |case: Case| {
        let s: Vec<f64> = dets.iter().filter(|d| d.1 == case).map(|d| d.2.signum()).collect();
        if s.iter().all(|&v| v > 0.0) {
            json!("+")
        } else if s.iter().all(|&v| v < 0.0) {
            json!("-")
        } else {
            json!("mixed")
        }
    };
    let ks: Vec<f64> = reports.iter().map(|r| r.1.ks).collect();
    let mut summary = vec![("sign_E", sign_of(Case::E)), ("sign_H", sign_of(Case::H))];
    if !ks.is_empty() {
        summary.push(("mean_ks", json!(mean(&ks))));
        summary.push(("max_ks", json!(ks.iter().cloned().fold(0.0, f64::max))));
    }
    Ok(RunOutput { tables: vec![det_table, eq], summary })
}

fn reduce(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let t = table(cfg)?;
    let rd = reduction_data(cfg.f64("lambda"), &t)?;
    let mut out = Table::new("reduction", &["lambda", "case", "l", "w", "d", "lp", "wp", "dp", "lpp", "wpp", "dpp"]);
    let mut row = vec![rd.lambda.into(), case_name(rd.case).into()];
    row.extend(rd.row()[1..].iter().map(|&v| v.into()));
    out.push(row);
    Ok(RunOutput { tables: vec![out], summary: vec![("case", json!(case_name(rd.case)))] })
}
