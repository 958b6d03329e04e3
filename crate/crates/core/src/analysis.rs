//! Comparing computed spectra with lattices, counting eigenvalues in
//! windows, and screening levels F0 against a classical scan.

use serde::{Deserialize, Serialize};

use crate::classical::{ClassicalScan, RotationClass};
use crate::error::{Error, Result};
use crate::quantization::Lattice;
use crate::spectra::{ModeTag, Rect, SpectrumResult, C64};

/// The rectangle `E_c + [−ε/C, ε/C] × iε[F0 − ε^δ/C, F0 + ε^δ/C]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub f0: f64,
    pub c: f64,
    pub eps: f64,
    pub delta: f64,
    pub e_center: f64,
    pub rect: Rect,
}

pub fn window(f0: f64, c: f64, eps: f64, delta: f64, e_center: f64) -> Result<WindowSpec> {
    if !(c > 1.0) || !(eps > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window needs C > 1, eps > 0, delta >= 0 (got C = {c}, eps = {eps}, delta = {delta})"
        )));
    }
    let re_half = eps / c;
    let im_half = eps * eps.powf(delta) / c;
    Ok(WindowSpec {
        f0,
        c,
        eps,
        delta,
        e_center,
        rect: Rect {
            re: (e_center - re_half, e_center + re_half),
            im: (eps * f0 - im_half, eps * f0 + im_half),
        },
    })
}

impl WindowSpec {
    /// The rectangle with both half-widths scaled by `factor` about its centre.
    pub fn scaled(&self, factor: f64) -> Rect {
        scale_rect(&self.rect, factor)
    }
}

pub fn scale_rect(r: &Rect, factor: f64) -> Rect {
    let (cr, hr) = ((r.re.0 + r.re.1) / 2.0, (r.re.1 - r.re.0) / 2.0 * factor);
    let (ci, hi) = ((r.im.0 + r.im.1) / 2.0, (r.im.1 - r.im.0) / 2.0 * factor);
    Rect {
        re: (cr - hr, cr + hr),
        im: (ci - hi, ci + hi),
    }
}

/// Distance with the imaginary part scaled by `1/ε`.
pub fn scaled_distance(a: C64, b: C64, eps: f64) -> f64 {
    let s = if eps > 0.0 { 1.0 / eps } else { 1.0 };
    (a.re - b.re).hypot((a.im - b.im) * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub eigenvalue: C64,
    pub mode: ModeTag,
    pub k1: i64,
    pub k2: i64,
    pub lattice: C64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Unmatched {
    pub z: C64,
    /// Angular mode for spectrum points, `k2` for lattice points.
    pub m: Option<i64>,
    pub k1: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub pairs: Vec<MatchPair>,
    pub max_distance: f64,
    pub unmatched_spectrum: Vec<Unmatched>,
    pub unmatched_lattice: Vec<Unmatched>,
    pub metric: String,
}

/// Knobs for [`match_lattice`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Points in the window scaled by this factor take part in the
    /// assignment; only pairs or leftovers touching the window itself are
    /// reported. Values above 1 keep partners that straddle the edge.
    pub margin: f64,
    /// Pairs farther apart than this are never formed (∞: plain assignment).
    pub gate: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            margin: 1.0,
            gate: f64::INFINITY,
        }
    }
}

/// Minimum-cost assignment between two point sets.
///
/// Returns `(i, j, cost)` triples. With a finite `gate` points may stay
/// unassigned; otherwise every point of the smaller set is assigned.
pub fn assign(cost: &[Vec<f64>], n_cols: usize, gate: f64) -> Vec<(usize, usize, f64)> {
    let n = cost.len();
    let m = n_cols;
    if n == 0 || m == 0 {
        return Vec::new();
    }
    if gate.is_finite() {
        // Square (n + m) problem where a point may pair with its own dummy
        // at cost `gate`.
        let big = 4.0 * gate + 1.0;
        let size = n + m;
        let aug: Vec<Vec<f64>> = (0..size)
            .map(|i| {
                (0..size)
                    .map(|j| match (i < n, j < m) {
                        (true, true) => {
                            let c = cost[i][j];
                            if c <= gate {
                                c
                            } else {
                                big
                            }
                        }
                        (true, false) => {
                            if j - m == i {
                                gate
                            } else {
                                big
                            }
                        }
                        (false, true) => {
                            if i - n == j {
                                gate
                            } else {
                                big
                            }
                        }
                        (false, false) => 0.0,
                    })
                    .collect()
            })
            .collect();
        return hungarian(&aug, size)
            .into_iter()
            .enumerate()
            .filter(|&(i, j)| i < n && j < m && cost[i][j] <= gate)
            .map(|(i, j)| (i, j, cost[i][j]))
            .collect();
    }
    if n <= m {
        hungarian(cost, m)
            .into_iter()
            .enumerate()
            .map(|(i, j)| (i, j, cost[i][j]))
            .collect()
    } else {
        let t: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        let mut out: Vec<(usize, usize, f64)> = hungarian(&t, n)
            .into_iter()
            .enumerate()
            .map(|(j, i)| (i, j, cost[i][j]))
            .collect();
        out.sort_by_key(|p| p.0);
        out
    }
}

/// Shortest-augmenting-path Hungarian method for `n ≤ m`; returns the
/// column assigned to each row.
fn hungarian(cost: &[Vec<f64>], m: usize) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut ans = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            ans[p[j] - 1] = j - 1;
        }
    }
    ans
}

/// Optimal pairing of eigenvalues (with ±m multiplicity) and lattice points
/// inside the window.
pub fn match_lattice(
    spectrum: &SpectrumResult,
    lattice: &Lattice<f64>,
    w: &WindowSpec,
    opts: &MatchOptions,
) -> MatchReport {
    let outer = w.scaled(opts.margin.max(1.0));
    let core = w.rect;
    let spec: Vec<(C64, ModeTag)> = spectrum
        .expanded()
        .into_iter()
        .filter(|e| outer.contains(e.value))
        .map(|e| (e.value, e.mode))
        .collect();
    let mut lat: Vec<_> = lattice.entries.iter().filter(|q| outer.contains(q.z)).collect();
    // Deterministic tie-breaking: lexicographic (k1, k2).
    lat.sort_by_key(|q| (q.k1, q.k2));
    let cost: Vec<Vec<f64>> = spec
        .iter()
        .map(|(z, _)| lat.iter().map(|q| scaled_distance(*z, q.z, w.eps)).collect())
        .collect();
    let assigned = assign(&cost, lat.len(), opts.gate);
    let mut spec_used = vec![false; spec.len()];
    let mut lat_used = vec![false; lat.len()];
    let mut pairs = Vec::new();
    for (i, j, d) in assigned {
        spec_used[i] = true;
        lat_used[j] = true;
        if core.contains(spec[i].0) || core.contains(lat[j].z) {
            pairs.push(MatchPair {
                eigenvalue: spec[i].0,
                mode: spec[i].1,
                k1: lat[j].k1,
                k2: lat[j].k2,
                lattice: lat[j].z,
                distance: d,
            });
        }
    }
    let mode_of = |t: ModeTag| match t {
        ModeTag::Mode { m } => Some(m),
        ModeTag::Coupled2d { .. } => None,
    };
    let unmatched_spectrum = spec
        .iter()
        .zip(&spec_used)
        .filter(|((z, _), used)| !**used && core.contains(*z))
        .map(|((z, t), _)| Unmatched {
            z: *z,
            m: mode_of(*t),
            k1: None,
        })
        .collect();
    let unmatched_lattice = lat
        .iter()
        .zip(&lat_used)
        .filter(|(q, used)| !**used && core.contains(q.z))
        .map(|(q, _)| Unmatched {
            z: q.z,
            m: Some(q.k2),
            k1: Some(q.k1),
        })
        .collect();
    pairs.sort_by_key(|p| (p.k2, p.k1));
    MatchReport {
        max_distance: pairs.iter().map(|p| p.distance).fold(0.0, f64::max),
        pairs,
        unmatched_spectrum,
        unmatched_lattice,
        metric: format!("hypot(Δre, Δim/ε), ε = {}", w.eps),
    }
}

/// Eigenvalues (with ±m multiplicity) in the δ = 0 rectangle.
pub fn count_rational_window(spectrum: &SpectrumResult, f0: f64, c: f64, eps: f64, e_center: f64) -> Result<usize> {
    let w = window(f0, c, eps, 0.0, e_center)?;
    Ok(count_in(spectrum, &w.rect))
}

pub fn count_in(spectrum: &SpectrumResult, rect: &Rect) -> usize {
    spectrum.expanded().iter().filter(|e| rect.contains(e.value)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountPoint {
    pub eps: f64,
    pub h: f64,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<CountPoint>,
    /// Exponent γ in `count·h² ∝ ε^γ`.
    pub gamma: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
}

/// Least squares of `log(count·h²)` against `log ε`.
pub fn scaling_fit(points: &[CountPoint]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} points, need at least 3", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.count > 0.0 && p.eps > 0.0 && p.h > 0.0)) {
        return Err(Error::DegenerateFit(format!("non-positive data point {p:?}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.eps.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| (p.count * p.h * p.h).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * (1.0 + mx * mx) {
        return Err(Error::DegenerateFit("all eps values are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let gamma = sxy / sxx;
    let b = my - gamma * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - b - gamma * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ScalingFit {
        points: points.to_vec(),
        gamma,
        log_prefactor: b,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub a: f64,
    pub omega: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodVerdict {
    pub f0: f64,
    pub good: bool,
    /// 1–4, the first failing condition.
    pub failed_condition: Option<u8>,
    pub witness: Option<Witness>,
    /// Tori on which `F0 ∈ Q_∞`.
    pub family: Vec<f64>,
    /// Rational heights above this count as failures (taken as 1/α).
    pub height_cutoff: f64,
}

/// Tests the four (α, β, γ)-goodness conditions for the level `F0` on a scan.
pub fn good_value_check(
    scan: &ClassicalScan,
    f0: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: f64,
) -> Result<GoodVerdict> {
    let rows = &scan.rows;
    if rows.len() < 3 {
        return Err(Error::ScanTooCoarse(format!("{} rows", rows.len())));
    }
    let coarse = rows.windows(2).map(|w| w[1].a - w[0].a).fold(0.0, f64::max);
    if coarse >= beta / 4.0 {
        return Err(Error::ScanTooCoarse(format!(
            "largest a-step {coarse} is not below beta/4 = {}",
            beta / 4.0
        )));
    }
    let height_cutoff = 1.0 / alpha;
    let hull = |i: usize| {
        let r = &rows[i];
        (r.q_inf.lo.min(r.q_avg), r.q_inf.hi.max(r.q_avg))
    };
    let in_hull = |i: usize| {
        let (lo, hi) = hull(i);
        f0 >= lo && f0 <= hi
    };
    let near_singular = |a: f64| a.abs() <= alpha || scan.u_max - a.abs() <= alpha;
    let slope = |i: usize, f: &dyn Fn(usize) -> f64| {
        let (l, r) = (i.saturating_sub(1), (i + 1).min(rows.len() - 1));
        (f(r) - f(l)) / (rows[r].a - rows[l].a)
    };
    let fail = |cond: u8, i: usize, detail: String, family: Vec<f64>| GoodVerdict {
        f0,
        good: false,
        failed_condition: Some(cond),
        witness: Some(Witness {
            a: rows[i].a,
            omega: rows[i].omega,
            detail,
        }),
        family,
        height_cutoff,
    };

    // Tori carrying F0: rational rows whose Q_∞ hull contains it, and
    // crossings of ⟨q⟩(a) = F0 between neighbouring irrational rows
    // (attributed to the nearer row).
    let mut family: Vec<(usize, f64)> = Vec::new();
    for i in 0..rows.len() {
        if rows[i].class.is_rational() {
            if in_hull(i) {
                family.push((i, rows[i].a));
            }
        } else if rows[i].q_avg == f0 {
            family.push((i, rows[i].a));
        }
    }
    let irr: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].class.is_rational()).collect();
    for w in irr.windows(2) {
        let (i, j) = (w[0], w[1]);
        let (qi, qj) = (rows[i].q_avg - f0, rows[j].q_avg - f0);
        if qi * qj < 0.0 {
            let t = qi / (qi - qj);
            let a = rows[i].a + t * (rows[j].a - rows[i].a);
            family.push((if t <= 0.5 { i } else { j }, a));
        }
    }
    family.sort_by(|x, y| x.1.total_cmp(&y.1));
    let family_a: Vec<f64> = family.iter().map(|f| f.1).collect();

    // (1) F0 stays away from Q_∞ of tori near the singular leaves.
    for &(i, a) in &family {
        if near_singular(a) {
            return Ok(fail(1, i, format!("F0 in Q_∞ within {alpha} of a singular leaf"), family_a));
        }
    }
    for &(i, _) in &family {
        let r = &rows[i];
        match r.class {
            // (2) irrational tori: Diophantine and ⟨q⟩ transversal.
            RotationClass::DiophantineCertified { alpha: ca, d: cd, .. } => {
                if ca < alpha || cd > d {
                    return Ok(fail(2, i, format!("certificate (α = {ca}, d = {cd}) weaker than required"), family_a));
                }
                let dq = slope(i, &|k| rows[k].q_avg);
                if dq.abs() < alpha {
                    return Ok(fail(2, i, format!("|d⟨q⟩/da| = {} < α", dq.abs()), family_a));
                }
            }
            RotationClass::Unresolved => {
                return Ok(fail(2, i, "rotation number neither rational nor certified".into(), family_a));
            }
            // (3) rational tori: low height, isoenergetic, separated from ⟨q⟩.
            RotationClass::Rational { height, .. } => {
                if height as f64 > height_cutoff {
                    return Ok(fail(3, i, format!("height {height} > 1/α = {height_cutoff}"), family_a));
                }
                let dw = slope(i, &|k| rows[k].omega);
                if dw.abs() < alpha {
                    return Ok(fail(3, i, format!("|dω/da| = {} < α", dw.abs()), family_a));
                }
                if (f0 - r.q_avg).abs() < alpha {
                    return Ok(fail(3, i, format!("|F0 − ⟨q⟩| = {} < α", (f0 - r.q_avg).abs()), family_a));
                }
            }
        }
    }
    // (4) every torus farther than β from the family keeps Q_∞ at distance γ.
    for (i, r) in rows.iter().enumerate() {
        if family_a.iter().any(|&a| (a - r.a).abs() <= beta) {
            continue;
        }
        let (lo, hi) = hull(i);
        let dist = if f0 < lo {
            lo - f0
        } else if f0 > hi {
            f0 - hi
        } else {
            0.0
        };
        if dist < gamma {
            return Ok(fail(4, i, format!("dist(F0, Q_∞) = {dist} < γ"), family_a));
        }
    }
    Ok(GoodVerdict {
        f0,
        good: true,
        failed_condition: None,
        witness: None,
        family: family_a,
        height_cutoff,
    })
}
