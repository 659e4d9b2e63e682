use orbitlab::gaps::{f_haar_samples, frac_sqrt_gaps, geometric_gap_experiment, l_prime, plain_gap_distribution, DEFAULT_CAP};
use orbitlab::rng::stream;
use orbitlab::stats::{mean, Ecdf};
use orbitlab::LabError;
use rand::Rng;
use serde_json::json;

use super::{check_count, par_tasks, AUX_TASK};
use crate::config::{float, int, RunConfig};
use crate::output::{RunOutput, Table};
use crate::{CliError, Spec};

pub const DIRECT: Spec = Spec {
    group: "gaps",
    name: "direct",
    about: "Histogram of normalized gaps of frac(sqrt n), n <= r",
    params: &[
        float("r", "1000000", "upper bound for n"),
        int("bins", "60", "histogram bins"),
        float("hi", "6.0", "upper edge of the histogram"),
    ],
    run: direct,
};

pub const LATTICE: Spec = Spec {
    group: "gaps",
    name: "lattice",
    about: "Gap at s against the triangle functional of the matching affine lattice",
    params: &[
        float("r", "1000000", "upper bound for n"),
        float("s", "0.5", "position on the circle when --samples is 0"),
        int("samples", "0", "random positions instead of --s"),
    ],
    run: lattice,
};

pub const GEOMETRIC: Spec = Spec {
    group: "gaps",
    name: "geometric",
    about: "KS distance of the gap along r = c q^k to the Haar law of the triangle functional",
    params: &[
        float("c", "1.0", "scale"),
        float("q", "2.0", "ratio"),
        int("N", "2000", "terms of the geometric sequence"),
        int("samples", "10", "random positions s"),
        int("reference", "20000", "Haar samples for the reference law"),
    ],
    run: geometric,
};

fn direct(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let (bins, hi) = (cfg.usize("bins"), cfg.f64("hi"));
    check_count("bins", bins)?;
    if !(hi > 0.0) {
        return Err(LabError::Validation(format!("--hi must be positive, got {hi}")).into());
    }
    let seq = frac_sqrt_gaps(cfg.f64("r"))?;
    let rep = plain_gap_distribution(&seq, bins, hi);
    let total = seq.n as f64;
    let mut table = Table::new("histogram", &["lo", "hi", "count", "density"]).plot("lo", "density");
    for &(lo, up, c) in &rep.histogram {
        table.push(vec![lo.into(), up.into(), c.into(), (c as f64 / (total * (up - lo))).into()]);
    }
    let summary = vec![
        ("n", json!(seq.n)),
        ("fraction_half", json!(rep.fraction_half)),
        ("mean", json!(rep.mean)),
        ("tail_beyond_6", json!(rep.tail_beyond_6)),
    ];
    Ok(RunOutput { tables: vec![table], summary })
}

fn lattice(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let r = cfg.f64("r");
    let samples = cfg.usize("samples");
    let s_values: Vec<f64> = if samples == 0 {
        vec![cfg.f64("s")]
    } else {
        (0..samples as u64).map(|k| 1.0 - stream(cfg.seed, k).random::<f64>()).collect()
    };
    let seq = frac_sqrt_gaps(r)?;
    // neighbouring squares bracket the gap
    let m = r.sqrt().floor();
    let (below, above) = (frac_sqrt_gaps(m * m)?, frac_sqrt_gaps((m + 1.0) * (m + 1.0))?);
    let n = r.floor();
    let rows = par_tasks(s_values.len(), |k| {
        let s = s_values[k as usize];
        let lv = seq.l_r(s)?;
        let fit = l_prime(r, s, DEFAULT_CAP)?;
        let lo = n / ((m + 1.0) * (m + 1.0)) * above.l_r(s)?;
        let hi = n / (m * m) * below.l_r(s)?;
        let slack = 1e-12 * hi.abs().max(1.0);
        Ok((s, lv, fit, lo, hi, lo <= lv + slack && lv <= hi + slack))
    })?;
    let mut table = Table::new("lattice", &["s", "L", "L_prime", "status", "lower", "upper", "sandwich"]).plot("L_prime", "L");
    for (s, lv, fit, lo, hi, ok) in &rows {
        let lp = fit.value().unwrap_or(f64::INFINITY);
        table.push(vec![(*s).into(), (*lv).into(), lp.into(), fit.status.name().into(), (*lo).into(), (*hi).into(), (*ok).into()]);
    }
    let summary = vec![("sandwich_holds", json!(rows.iter().all(|r| r.5)))];
    Ok(RunOutput { tables: vec![table], summary })
}

fn geometric(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let (terms, samples, reference) = (cfg.usize("N"), cfg.usize("samples"), cfg.usize("reference"));
    check_count("N", terms)?;
    check_count("samples", samples)?;
    check_count("reference", reference)?;
    let chunk = 10_000;
    let parts = par_tasks(reference.div_ceil(chunk), |k| {
        let n = chunk.min(reference - k as usize * chunk);
        Ok(f_haar_samples(n, DEFAULT_CAP, &mut stream(cfg.seed, AUX_TASK + k)))
    })?;
    let refe = Ecdf::new(&parts.concat())?;
    let rows = par_tasks(samples, |k| {
        let s = 1.0 - stream(cfg.seed, k).random::<f64>();
        let rep = geometric_gap_experiment(cfg.f64("c"), cfg.f64("q"), terms, &[s], &refe)?;
        let finite = rep[0].values.iter().filter(|v| v.is_finite()).count();
        Ok((k, s, rep[0].ks, finite))
    })?;
    let mut table = Table::new("geometric", &["task", "s", "ks", "finite_values"]).plot("s", "ks");
    for &(k, s, ks, finite) in &rows {
        table.push(vec![k.into(), s.into(), ks.into(), finite.into()]);
    }
    let ks: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let summary = vec![("mean_ks", json!(mean(&ks))), ("max_ks", json!(ks.iter().cloned().fold(0.0, f64::max)))];
    Ok(RunOutput { tables: vec![table], summary })
}
