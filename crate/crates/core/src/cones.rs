//! Domination certificates on the projective line.
//!
//! A tuple is dominated iff some finite union of closed arcs is mapped into
//! its own interior by every matrix. We search for such a multicone, verify
//! it with a strict margin, and build covers of the Furstenberg directions
//! from the complementary arcs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AffineIFS;
use crate::matrix2::{angle_offset, normalize_angle, projective_image, AngleInterval, Mat2};
use crate::numeric::linear_fit;
use crate::symbolic::{level_size, Word};
use crate::Verdict;

pub const MERGE_TOL: f64 = 1e-10;
pub const INVARIANCE_MARGIN: f64 = 1e-10;
pub const DEFAULT_MAX_INTERVALS: usize = 8;
pub const DEFAULT_MAX_DEPTH: usize = 64;

const SEED_DEPTH: usize = 3;
const SEED_RADIUS: f64 = 0.05;
const FATTENINGS: [f64; 5] = [1e-6, 1e-4, 1e-3, 1e-2, 0.05];
/// Words examined by the ratio test are capped at this many per level.
const RATIO_BUDGET: usize = 1 << 20;

/// Sorted, pairwise disjoint arcs whose union is a proper subset of the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multicone {
    intervals: Vec<AngleInterval>,
}

/// Union of arcs merged within `tol`; `None` when they cover the whole line.
pub fn merge_intervals(intervals: &[AngleInterval], tol: f64) -> Option<Vec<AngleInterval>> {
    if intervals.is_empty() {
        return Some(Vec::new());
    }
    // cut the circle at a point outside every arc, then merge on a segment
    let cut = intervals
        .iter()
        .map(|j| normalize_angle(j.hi() + 2.0 * tol))
        .find(|&c| intervals.iter().all(|j| !j.contains(c, tol)))?;
    let mut spans: Vec<(f64, f64)> = intervals
        .iter()
        .map(|j| {
            let start = angle_offset(cut, j.lo());
            (start, start + j.width())
        })
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for (lo, hi) in spans {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + tol => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    if merged.iter().map(|(lo, hi)| hi - lo).sum::<f64>() >= PI {
        return None;
    }
    let mut out: Vec<AngleInterval> = merged
        .into_iter()
        .map(|(lo, hi)| AngleInterval::new(cut + lo, hi - lo))
        .collect::<Result<_>>()
        .ok()?;
    out.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
    Some(out)
}

impl Multicone {
    pub fn new(intervals: Vec<AngleInterval>) -> Result<Self> {
        let intervals = merge_intervals(&intervals, MERGE_TOL).ok_or_else(|| {
            Error::InvalidArgument("multicone covers the whole projective line".into())
        })?;
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("multicone must be non-empty".into()));
        }
        Ok(Multicone { intervals })
    }

    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        Multicone::new(vec![AngleInterval::from_endpoints(lo, hi)])
    }

    pub fn intervals(&self) -> &[AngleInterval] {
        &self.intervals
    }

    pub fn total_width(&self) -> f64 {
        self.intervals.iter().map(|j| j.width()).sum()
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|j| j.contains(theta, 0.0))
    }

    /// Closure of the complement.
    pub fn complement(&self) -> Vec<AngleInterval> {
        let k = self.intervals.len();
        (0..k)
            .map(|i| {
                let here = &self.intervals[i];
                let next = &self.intervals[(i + 1) % k];
                AngleInterval::from_endpoints(here.hi(), next.lo())
            })
            .collect()
    }

    /// Multicone whose union is the closed complement of `self`.
    pub fn dual(&self) -> Result<Multicone> {
        Multicone::new(self.complement())
    }

    pub fn fattened(&self, eps: f64) -> Option<Multicone> {
        let fat: Vec<_> = self.intervals.iter().map(|j| j.fattened(eps)).collect();
        merge_intervals(&fat, MERGE_TOL).map(|intervals| Multicone { intervals })
    }
}

/// Smallest margin by which images of the arcs sit inside the union.
pub fn invariance_margin(matrices: &[Mat2], cone: &Multicone) -> f64 {
    let mut worst = f64::INFINITY;
    for &m in matrices {
        for j in cone.intervals() {
            let Ok(image) = projective_image(m, j) else {
                return f64::NEG_INFINITY;
            };
            let best = cone
                .intervals()
                .iter()
                .map(|c| c.containment_margin(&image))
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.min(best);
        }
    }
    worst
}

/// Every `A_i` maps every arc strictly inside one arc of the union.
pub fn verify_strong_invariance(ifs: &AffineIFS, cone: &Multicone) -> bool {
    verify_matrices(ifs.matrices(), cone)
}

pub(crate) fn verify_matrices(matrices: &[Mat2], cone: &Multicone) -> bool {
    invariance_margin(matrices, cone) > INVARIANCE_MARGIN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// `yes` only with a verified multicone; `no` only on ratio-test evidence.
    pub dominated: Verdict,
    pub multicone: Option<Multicone>,
    pub c_est: f64,
    pub tau_est: f64,
    pub depth_used: usize,
}

fn seed_cone(matrices: &[Mat2], max_intervals: usize) -> Option<Vec<AngleInterval>> {
    let n = matrices.len();
    let mut seeds = Vec::new();
    for len in 1..=SEED_DEPTH {
        for k in 0..level_size(n, len)? {
            let w = Word::from_lex_index(k, n, len);
            let m = w
                .letters()
                .iter()
                .fold(Mat2::IDENTITY, |acc, &l| acc * matrices[l]);
            seeds.push(AngleInterval::centered(m.leading_direction(), SEED_RADIUS).ok()?);
        }
    }
    let merged = merge_intervals(&seeds, MERGE_TOL)?;
    (merged.len() <= max_intervals).then_some(merged)
}

/// Forward-invariant hull of seeded arcs, fattened until it verifies.
fn search(matrices: &[Mat2], max_intervals: usize, max_depth: usize) -> Option<Multicone> {
    if let Some(mut current) = seed_cone(matrices, max_intervals) {
        for _ in 0..max_depth {
            let mut all = current.clone();
            for &m in matrices {
                for j in &current {
                    all.push(projective_image(m, j).ok()?);
                }
            }
            let Some(next) = merge_intervals(&all, MERGE_TOL) else {
                current.clear();
                break;
            };
            if next.len() > max_intervals {
                current.clear();
                break;
            }
            let stable = next.len() == current.len()
                && next.iter().zip(&current).all(|(a, b)| {
                    angle_offset(b.lo(), a.lo()).min(PI - angle_offset(b.lo(), a.lo())) < 1e-12
                        && (a.width() - b.width()).abs() < 1e-12
                });
            current = next;
            if stable {
                break;
            }
        }
        if !current.is_empty() {
            let base = Multicone { intervals: current };
            if verify_matrices(matrices, &base) {
                return Some(base);
            }
            for eps in FATTENINGS {
                if let Some(fat) = base.fattened(eps) {
                    if fat.intervals.len() <= max_intervals && verify_matrices(matrices, &fat) {
                        return Some(fat);
                    }
                }
            }
        }
    }
    // quadrants work for tuples with entries of one sign pattern
    [(0.0, PI / 2.0), (PI / 2.0, PI)]
        .into_iter()
        .filter_map(|(lo, hi)| Multicone::single(lo, hi).ok())
        .find(|c| verify_matrices(matrices, c))
}

/// Search for a strongly invariant multicone with at most `max_intervals`
/// arcs, iterating the forward action at most `max_depth` times.
///
/// When the inverse tuple also admits a multicone whose closed complement is
/// invariant for the forward tuple, that complement is returned: it is the
/// largest certificate and gives the tightest Furstenberg covers.
pub fn find_invariant_multicone(
    ifs: &AffineIFS,
    max_intervals: usize,
    max_depth: usize,
) -> DominationReport {
    let forward = search(ifs.matrices(), max_intervals, max_depth);
    let multicone = forward.map(|cone| {
        let inverses: Vec<Mat2> = ifs
            .matrices()
            .iter()
            .map(|m| m.inverse().expect("IFS matrices are invertible"))
            .collect();
        search(&inverses, max_intervals, max_depth)
            .and_then(|back| back.dual().ok())
            .filter(|dual| {
                dual.intervals.len() <= max_intervals && verify_strong_invariance(ifs, dual)
            })
            .unwrap_or(cone)
    });
    let depth_used = ratio_depth(ifs.len());
    let (c_est, tau_est) = domination_ratio_test(ifs, depth_used).unwrap_or((f64::INFINITY, 1.0));
    let dominated = if multicone.is_some() {
        Verdict::Yes
    } else if tau_est >= 0.999 {
        Verdict::No
    } else {
        Verdict::Inconclusive
    };
    DominationReport {
        dominated,
        multicone,
        c_est,
        tau_est,
        depth_used,
    }
}

fn ratio_depth(alphabet: usize) -> usize {
    let mut depth = 2;
    while depth < 12 && level_size(alphabet, depth + 1).is_some_and(|s| s <= RATIO_BUDGET) {
        depth += 1;
    }
    depth
}

/// Least-squares fit of `log max_{|𝚒|=n} α2(𝚒)/α1(𝚒)` against `n = 1..=depth`.
/// Returns `(C_est, τ_est)`, with `C_est` clamped below at 1.
pub fn domination_ratio_test(ifs: &AffineIFS, depth: usize) -> Result<(f64, f64)> {
    if depth < 2 {
        return Err(Error::InvalidArgument("ratio test needs depth >= 2".into()));
    }
    let n = ifs.len();
    let fits_budget = level_size(n, depth).is_some_and(|s| s <= RATIO_BUDGET);
    if !fits_budget {
        return Err(Error::BudgetExceeded {
            alphabet: n,
            depth,
            budget: RATIO_BUDGET as u64,
            suggested_depth: (RATIO_BUDGET as f64).log(n as f64).floor() as usize,
        });
    }
    let mut worst = vec![f64::NEG_INFINITY; depth];
    let mut level = vec![Mat2::IDENTITY];
    for slot in worst.iter_mut() {
        let mut next = Vec::with_capacity(level.len() * n);
        for m in &level {
            for &a in ifs.matrices() {
                let p = *m * a;
                let (s1, s2) = p.singular_values_unchecked();
                *slot = slot.max((s2 / s1).ln());
                next.push(p);
            }
        }
        level = next;
    }
    let xs: Vec<f64> = (1..=depth).map(|k| k as f64).collect();
    let fit = linear_fit(&xs, &worst).expect("at least two distinct depths");
    Ok((fit.intercept.exp().max(1.0), fit.slope.exp()))
}

/// Arcs covering the Furstenberg directions at a given depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FurstenbergCover {
    pub depth: usize,
    intervals: Vec<AngleInterval>,
}

impl FurstenbergCover {
    pub fn intervals(&self) -> &[AngleInterval] {
        &self.intervals
    }

    pub fn total_width(&self) -> f64 {
        self.intervals.iter().map(|j| j.width()).sum()
    }

    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        self.intervals.iter().any(|j| j.contains(theta, tol))
    }
}

/// `⋃_{|𝚒|=depth} A_{⟵𝚒}^{-1}(K)` with `K` the closed complement of `cone`,
/// built one level at a time as `cover_d = ⋃_i A_i^{-1}(cover_{d−1})`.
pub fn furstenberg_cover(
    ifs: &AffineIFS,
    cone: &Multicone,
    depth: usize,
) -> Result<FurstenbergCover> {
    Ok(furstenberg_covers(ifs, cone, depth)?
        .pop()
        .expect("depth 0 is always present"))
}

/// Covers at every depth `0..=depth`.
pub fn furstenberg_covers(
    ifs: &AffineIFS,
    cone: &Multicone,
    depth: usize,
) -> Result<Vec<FurstenbergCover>> {
    if !verify_strong_invariance(ifs, cone) {
        return Err(Error::NonInvariantCone);
    }
    let inverses: Vec<Mat2> = ifs
        .matrices()
        .iter()
        .map(|m| m.inverse())
        .collect::<Result<_>>()?;
    let mut current =
        merge_intervals(&cone.complement(), MERGE_TOL).ok_or(Error::NonInvariantCone)?;
    let mut out = vec![FurstenbergCover {
        depth: 0,
        intervals: current.clone(),
    }];
    for d in 1..=depth {
        let mut images = Vec::with_capacity(current.len() * inverses.len());
        for &m in &inverses {
            for j in &current {
                images.push(projective_image(m, j)?);
            }
        }
        current = merge_intervals(&images, MERGE_TOL).ok_or(Error::NonInvariantCone)?;
        out.push(FurstenbergCover {
            depth: d,
            intervals: current.clone(),
        });
    }
    Ok(out)
}
