mod billiard;
mod eaton;
mod gaps;
mod lattice;

use orbitlab::homogeneous::{haar_sample, gauss_reduce, Mat2};
use orbitlab::LabError;
use rand::Rng;
use rayon::prelude::*;

use crate::{CliError, Spec};

pub const SPECS: &[Spec] = &[
    billiard::SCAN,
    billiard::REDUCE,
    lattice::FLOW,
    lattice::HAAR,
    lattice::CURVE_CHECK,
    eaton::SCAN,
    eaton::LYAPUNOV,
    eaton::DRIFT,
    gaps::DIRECT,
    gaps::LATTICE,
    gaps::GEOMETRIC,
];

/// Runs `f(0..n)` on the worker pool and returns the results in task
/// order; the first failing task in that order decides the error.
pub fn par_tasks<T, F>(n: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(u64) -> Result<T, CliError> + Sync,
{
    let results: Vec<Result<T, CliError>> = (0..n as u64).into_par_iter().map(&f).collect();
    results.into_iter().collect()
}

/// Task ids at and above this are reserved for auxiliary draws such as
/// reference samples, so they never collide with scan tasks.
pub const AUX_TASK: u64 = 1 << 40;

pub fn hex() -> Mat2 {
    let s = (2.0 / 3f64.sqrt()).sqrt();
    Mat2::new(s, 0.5 * s, 0.0, 3f64.sqrt() / 2.0 * s)
}

/// `z2`, `hex`, `haar` (drawn from `rng`) or four row-major entries
/// `a,b,c,d` of a unimodular matrix.
pub fn lattice<R: Rng + ?Sized>(spec: &str, rng: &mut R) -> Result<Mat2, CliError> {
    match spec.trim() {
        "z2" => Ok(Mat2::IDENTITY),
        "hex" => Ok(hex()),
        "haar" => Ok(gauss_reduce(&haar_sample(rng).rep.h)),
        other => {
            let v: Vec<f64> = other
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("unknown lattice '{other}': use z2, hex, haar or a,b,c,d")))?;
            if v.len() != 4 {
                return Err(CliError::Usage(format!("lattice '{other}' needs four entries")));
            }
            let h = Mat2::new(v[0], v[1], v[2], v[3]);
            if !h.is_unimodular() {
                return Err(LabError::Validation(format!("lattice basis has determinant {}, need 1", h.det())).into());
            }
            Ok(h)
        }
    }
}

pub fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(LabError::Validation(format!("--{name} must be positive, got {v}")).into())
    }
}

pub fn check_count(name: &str, v: usize) -> Result<(), CliError> {
    if v > 0 {
        Ok(())
    } else {
        Err(LabError::Validation(format!("--{name} must be at least 1")).into())
    }
}
