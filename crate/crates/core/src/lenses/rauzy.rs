//! Rauzy-Veech induction on the base rotation with the slit-shadow
//! endpoints marked, carrying the sheet signs along.
//!
//! For a function `phi` on the intervals, the anti-invariant Birkhoff sums
//! over the double cover transform under one induction step as
//!
//! ```text
//!   top wins:    phi'[loser] = phi[loser] + c[loser] phi[winner],  c'[loser] = c[loser] c[winner]
//!   bottom wins: phi'[loser] = phi[winner] + c[winner] phi[loser], c'[loser] = c[winner] c[loser]
//! ```
//!
//! Growth of `phi` against the logarithmic shrinking of the interval gives
//! the top exponent of the cocycle on the anti-invariant homology.

use rand::Rng;
use rand_distr::StandardNormal;

use super::skew::SkewIet;
use crate::error::{LabError, Result};

/// Entries above this are flushed from the integer product before it can
/// overflow the exact determinant check.
const FLUSH_ENTRY: i128 = 1 << 15;

/// Interval exchange with labelled intervals and a sign per label.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseIet {
    pub lengths: Vec<f64>,
    pub signs: Vec<i8>,
    /// Labels in the order of the intervals before the map.
    pub top: Vec<usize>,
    /// Labels in the order of their images.
    pub bottom: Vec<usize>,
}

impl BaseIet {
    /// The rotation of `iet` cut at its discontinuity and at the endpoints
    /// of the slit shadow.
    pub fn from_skew(iet: &SkewIet) -> Result<Self> {
        let a = iet.alpha;
        if a == 0.0 {
            return Err(LabError::Domain("rotation by 0 has no induction".into()));
        }
        let mut cuts = vec![0.0, 1.0 - a];
        cuts.extend(iet.endpoints());
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        let d = cuts.len() - 1;
        let mut lengths = Vec::with_capacity(d);
        let mut signs = Vec::with_capacity(d);
        let mut images = Vec::with_capacity(d);
        for k in 0..d {
            let (lo, hi) = (cuts[k], cuts[k + 1]);
            lengths.push(hi - lo);
            let mid = 0.5 * (lo + hi);
            signs.push(if iet.crossings(mid) % 2 == 1 { -1 } else { 1 });
            images.push((lo + a).rem_euclid(1.0));
        }
        let top: Vec<usize> = (0..d).collect();
        let mut bottom = top.clone();
        bottom.sort_by(|&i, &j| images[i].total_cmp(&images[j]));
        Ok(Self { lengths, signs, top, bottom })
    }

    pub fn has_twist(&self) -> bool {
        self.signs.iter().any(|&c| c < 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    pub exponent: f64,
    pub teichmuller_time: f64,
    pub zorich_steps: usize,
    pub rauzy_steps: u64,
    /// Number of integer product blocks whose determinant was computed.
    pub blocks_checked: u64,
    /// Every checked block had determinant exactly +1 or -1.
    pub all_unimodular: bool,
}

/// Exact determinant by fraction-free elimination; `None` on overflow.
pub fn det_exact(m: &[Vec<i128>]) -> Option<i128> {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            let p = (k + 1..n).find(|&i| a[i][k] != 0)?;
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = a[i][j].checked_mul(a[k][k])?.checked_sub(a[i][k].checked_mul(a[k][j])?)?;
                a[i][j] = v / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    Some(sign * a[n - 1][n - 1])
}

struct Product {
    rows: Vec<Vec<i128>>,
    blocks: u64,
    ok: bool,
}

impl Product {
    fn new(d: usize) -> Self {
        let mut p = Self { rows: Vec::new(), blocks: 0, ok: true };
        p.reset(d);
        p
    }

    fn reset(&mut self, d: usize) {
        self.rows = (0..d).map(|i| (0..d).map(|j| i128::from(i == j)).collect()).collect();
    }

    fn flush(&mut self) {
        let d = self.rows.len();
        match det_exact(&self.rows) {
            Some(v) if v == 1 || v == -1 => {}
            _ => self.ok = false,
        }
        self.blocks += 1;
        self.reset(d);
    }

    /// `row[t] = a row[t] + b row[s]`.
    fn combine(&mut self, t: usize, a: i128, s: usize, b: i128) {
        let d = self.rows.len();
        for j in 0..d {
            self.rows[t][j] = a * self.rows[t][j] + b * self.rows[s][j];
        }
        if self.rows[t].iter().any(|v| v.abs() > FLUSH_ENTRY) {
            self.flush();
        }
    }
}

/// `sum_{i < k} c^i` for `c = +-1`.
fn geometric_sign_sum(c: i8, k: u64) -> i128 {
    if c > 0 {
        k as i128
    } else {
        (k % 2) as i128
    }
}

/// Top exponent of the sign-twisted Rauzy-Veech cocycle over
/// `zorich_steps` accelerated steps, from the Birkhoff-sum vector `phi0`
/// (one entry per interval of [`BaseIet::from_skew`]).
///
/// Returns 0 when no interval carries a sign flip.
pub fn lyapunov_w(iet: &SkewIet, zorich_steps: usize, phi0: &[f64]) -> Result<LyapunovEstimate> {
    let base = BaseIet::from_skew(iet)?;
    if !base.has_twist() {
        if phi0.len() != base.lengths.len() {
            return Err(LabError::Validation(format!(
                "initial vector has length {}, need {}",
                phi0.len(),
                base.lengths.len()
            )));
        }
        return Ok(LyapunovEstimate {
            exponent: 0.0,
            teichmuller_time: 0.0,
            zorich_steps: 0,
            rauzy_steps: 0,
            blocks_checked: 0,
            all_unimodular: true,
        });
    }
    cocycle_exponent(base, zorich_steps, phi0)
}

/// Growth rate of the Birkhoff-sum vector under the induction of `base`,
/// per unit of logarithmic length contraction. Without sign flips this is
/// the top exponent of the torus, 1.
pub fn cocycle_exponent(mut base: BaseIet, zorich_steps: usize, phi0: &[f64]) -> Result<LyapunovEstimate> {
    let d = base.lengths.len();
    if phi0.len() != d {
        return Err(LabError::Validation(format!("initial vector has length {}, need {d}", phi0.len())));
    }
    let mut est = LyapunovEstimate {
        exponent: 0.0,
        teichmuller_time: 0.0,
        zorich_steps: 0,
        rauzy_steps: 0,
        blocks_checked: 0,
        all_unimodular: true,
    };
    let mut phi = phi0.to_vec();
    let mut log_norm = 0.0f64;
    let norm0 = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm0 > 0.0) {
        return Err(LabError::Validation("initial vector must be nonzero".into()));
    }
    let mut prod = Product::new(d);
    let mut time = 0.0f64;
    let mut last_type: Option<u8> = None;
    let lens = &mut base.lengths;
    let c = &mut base.signs;
    let (top, bottom) = (&mut base.top, &mut base.bottom);
    while est.zorich_steps < zorich_steps {
        let at = top[d - 1];
        let ab = bottom[d - 1];
        let (lt, lb) = (lens[at], lens[ab]);
        if lt == lb || !(lt > 0.0 && lb > 0.0) {
            return Err(LabError::Numeric("equal lengths in Rauzy-Veech induction (Keane condition fails)".into()));
        }
        let ty = if lt > lb { 0u8 } else { 1u8 };
        if last_type != Some(ty) {
            est.zorich_steps += 1;
            last_type = Some(ty);
        }
        if ty == 0 {
            // block of losers: bottom labels after the winner
            let pos = bottom.iter().position(|&x| x == at).expect("label present");
            let block: Vec<usize> = bottom[pos + 1..].to_vec();
            let s: f64 = block.iter().map(|&b| lens[b]).sum();
            let cycles = if s > 0.0 { (lt / s).floor() as u64 } else { 0 };
            if cycles >= 2 {
                let k = (cycles - 1).min(1 << 14);
                let cw = c[at];
                let g = geometric_sign_sum(cw, k);
                prod.flush();
                for &b in &block {
                    phi[b] += (c[b] as i128 * g) as f64 * phi[at];
                    prod.combine(b, 1, at, c[b] as i128 * g);
                    if k % 2 == 1 {
                        c[b] *= cw;
                    }
                }
                prod.flush();
                lens[at] -= k as f64 * s;
                est.rauzy_steps += k * block.len() as u64;
            } else {
                phi[ab] += c[ab] as f64 * phi[at];
                prod.combine(ab, 1, at, c[ab] as i128);
                c[ab] *= c[at];
                lens[at] -= lb;
                bottom.pop();
                bottom.insert(pos + 1, ab);
                est.rauzy_steps += 1;
            }
        } else {
            let pos = top.iter().position(|&x| x == ab).expect("label present");
            let block: Vec<usize> = top[pos + 1..].to_vec();
            let s: f64 = block.iter().map(|&b| lens[b]).sum();
            let cycles = if s > 0.0 { (lb / s).floor() as u64 } else { 0 };
            if cycles >= 2 {
                let k = (cycles - 1).min(1 << 14);
                let cw = c[ab];
                let g = geometric_sign_sum(cw, k);
                let ck: i128 = if k % 2 == 1 { cw as i128 } else { 1 };
                prod.flush();
                for &b in &block {
                    phi[b] = ck as f64 * phi[b] + g as f64 * phi[ab];
                    prod.combine(b, ck, ab, g);
                    if k % 2 == 1 {
                        c[b] *= cw;
                    }
                }
                prod.flush();
                lens[ab] -= k as f64 * s;
                est.rauzy_steps += k * block.len() as u64;
            } else {
                phi[at] = phi[ab] + c[ab] as f64 * phi[at];
                prod.combine(at, c[ab] as i128, ab, 1);
                c[at] *= c[ab];
                lens[ab] -= lt;
                top.pop();
                top.insert(pos + 1, at);
                est.rauzy_steps += 1;
            }
        }
        let total: f64 = lens.iter().sum();
        time -= total.ln();
        for l in lens.iter_mut() {
            *l /= total;
        }
        let n2: f64 = phi.iter().map(|v| v * v).sum();
        if n2 > 1e200 || n2 < 1e-200 {
            let n = n2.sqrt();
            log_norm += n.ln();
            for v in phi.iter_mut() {
                *v /= n;
            }
        }
    }
    prod.flush();
    let final_norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
    log_norm += final_norm.ln() - norm0.ln();
    est.exponent = log_norm / time;
    est.teichmuller_time = time;
    est.blocks_checked = prod.blocks;
    est.all_unimodular = prod.ok;
    Ok(est)
}

/// A standard normal vector of length `d`, for the initial Birkhoff sums.
pub fn random_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}
