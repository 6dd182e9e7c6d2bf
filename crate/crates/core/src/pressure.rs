//! Singular value function, the potentials `ψ^{q,s}`, depth-`n` pressure and
//! finite-level Gibbs measures.
//!
//! Everything goes through one word-tree kernel: a depth-first traversal
//! that carries the running matrix product, the running `log μ`-weight and
//! the running `log |det|` down the tree. The tree is cut at a fixed prefix
//! length into at least 64 subtrees, independent of the thread count; each
//! subtree is summed sequentially in log space and the partial results are
//! combined in a fixed balanced tree. Results are therefore bit-identical
//! for every thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AffineIFS;
use crate::matrix2::Mat2;
use crate::numeric::{pairwise_reduce, LogSumExp};
use crate::symbolic::{level_size, random_split, CylinderWeightModel, LevelMeasure, Word};

/// Default cap on the number of words enumerated at one level.
pub const DEFAULT_BUDGET: u64 = 1 << 24;
/// Smallest number of independent subtrees the traversal is cut into.
pub const MIN_PARTITIONS: usize = 64;
/// Longest word on either side of a calibration split.
pub const CALIBRATION_MAX_LEN: usize = 8;
pub const DEFAULT_CALIBRATION_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `φ^s`.
    Svf { s: f64 },
    /// `μ^q (φ^s)^{1−q}`.
    Psi { q: f64, s: f64 },
    /// `α_m^κ ψ^{q,s}`.
    SvfTimesAlphaKappa { m: u8, kappa: f64, q: f64, s: f64 },
}

/// A potential on words of an IFS, with the reference measure it needs.
#[derive(Clone, Copy)]
pub struct PotentialSpec<'a> {
    pub ifs: &'a AffineIFS,
    pub mu: Option<&'a dyn CylinderWeightModel>,
    pub kind: PotentialKind,
}

impl std::fmt::Debug for PotentialSpec<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("maps", &self.ifs.len())
            .field("mu", &self.mu.map(|m| m.describe()))
            .field("kind", &self.kind)
            .finish()
    }
}

impl<'a> PotentialSpec<'a> {
    pub fn new(
        ifs: &'a AffineIFS,
        mu: Option<&'a dyn CylinderWeightModel>,
        kind: PotentialKind,
    ) -> Result<Self> {
        let s = match kind {
            PotentialKind::Svf { s } => s,
            PotentialKind::Psi { q, s } => {
                if !q.is_finite() {
                    return Err(Error::InvalidArgument(format!("q = {q}")));
                }
                s
            }
            PotentialKind::SvfTimesAlphaKappa { m, kappa, q, s } => {
                if !(m == 1 || m == 2) {
                    return Err(Error::InvalidArgument(format!("m must be 1 or 2, got {m}")));
                }
                if !(kappa > 0.0 && kappa.is_finite()) || !q.is_finite() {
                    return Err(Error::InvalidArgument(format!("kappa = {kappa}, q = {q}")));
                }
                s
            }
        };
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "s must be finite and >= 0, got {s}"
            )));
        }
        let needs_mu = !matches!(kind, PotentialKind::Svf { .. });
        match mu {
            Some(m) if m.alphabet_size() != ifs.len() => {
                return Err(Error::InvalidArgument(format!(
                    "measure on {} letters for a system of {} maps",
                    m.alphabet_size(),
                    ifs.len()
                )))
            }
            None if needs_mu => {
                return Err(Error::InvalidArgument(
                    "potential requires a measure".into(),
                ))
            }
            _ => {}
        }
        Ok(PotentialSpec { ifs, mu, kind })
    }

    pub fn svf(ifs: &'a AffineIFS, s: f64) -> Result<Self> {
        PotentialSpec::new(ifs, None, PotentialKind::Svf { s })
    }

    pub fn psi(
        ifs: &'a AffineIFS,
        mu: &'a dyn CylinderWeightModel,
        q: f64,
        s: f64,
    ) -> Result<Self> {
        PotentialSpec::new(ifs, Some(mu), PotentialKind::Psi { q, s })
    }

    pub fn alphabet_size(&self) -> usize {
        self.ifs.len()
    }

    /// Log of the potential from `log μ`, `log α1`, `log α2` of a word.
    #[inline]
    pub fn log_value(&self, log_mu: f64, log_a1: f64, log_a2: f64) -> f64 {
        match self.kind {
            PotentialKind::Svf { s } => log_svf(s, log_a1, log_a2),
            PotentialKind::Psi { q, s } => log_psi(q, s, log_mu, log_a1, log_a2),
            PotentialKind::SvfTimesAlphaKappa { m, kappa, q, s } => {
                let la = if m == 1 { log_a1 } else { log_a2 };
                kappa * la + log_psi(q, s, log_mu, log_a1, log_a2)
            }
        }
    }

    /// Log of the potential on one word, evaluated from scratch.
    pub fn log_value_of_word(&self, letters: &[usize]) -> f64 {
        let m = self.ifs.product(letters);
        let (a1, _) = m.singular_values_unchecked();
        let log_det: f64 = letters.iter().map(|&l| self.ifs.log_abs_det(l)).sum();
        let log_a1 = a1.ln();
        let log_mu = self.mu.map_or(0.0, |mu| mu.log_weight(letters));
        self.log_value(log_mu, log_a1, log_det - log_a1)
    }
}

/// `log φ^s` from the log singular values, on the half-open regimes
/// `[0,1)`, `[1,2)`, `[2,∞)`.
#[inline]
pub fn log_svf(s: f64, log_a1: f64, log_a2: f64) -> f64 {
    if s < 1.0 {
        s * log_a1
    } else if s < 2.0 {
        log_a1 + (s - 1.0) * log_a2
    } else {
        0.5 * s * (log_a1 + log_a2)
    }
}

#[inline]
fn log_psi(q: f64, s: f64, log_mu: f64, log_a1: f64, log_a2: f64) -> f64 {
    let phi = log_svf(s, log_a1, log_a2);
    if q == 0.0 {
        return phi;
    }
    if log_mu == f64::NEG_INFINITY {
        return if q > 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    q * log_mu + (1.0 - q) * phi
}

/// `φ^s(A_word)`.
pub fn svf(ifs: &AffineIFS, word: &Word, s: f64) -> Result<f64> {
    word.check_alphabet(ifs.len())?;
    Ok(PotentialSpec::svf(ifs, s)?
        .log_value_of_word(word.letters())
        .exp())
}

/// `ψ^{q,s}(word) = μ([word])^q φ^s(word)^{1−q}`.
pub fn psi(
    ifs: &AffineIFS,
    mu: &dyn CylinderWeightModel,
    word: &Word,
    q: f64,
    s: f64,
) -> Result<f64> {
    word.check_alphabet(ifs.len())?;
    if mu.log_weight(word.letters()) == f64::NEG_INFINITY {
        return Err(Error::SupportMismatch);
    }
    Ok(PotentialSpec::psi(ifs, mu, q, s)?
        .log_value_of_word(word.letters())
        .exp())
}

/// Data available at a leaf of the word tree.
#[derive(Debug, Clone, Copy)]
pub struct Leaf {
    /// Lexicographic index of the word in `Σ_n`.
    pub index: usize,
    pub log_mu: f64,
    /// `log` of the auxiliary model's weight, or 0 without one.
    pub log_aux: f64,
    pub log_a1: f64,
    pub log_a2: f64,
}

/// Enumeration of `Σ_depth` with optional measures carried along.
#[derive(Clone, Copy)]
pub struct WordTree<'a> {
    pub ifs: &'a AffineIFS,
    pub mu: Option<&'a dyn CylinderWeightModel>,
    pub aux: Option<&'a dyn CylinderWeightModel>,
    pub depth: usize,
}

fn suggested_depth(alphabet: usize, budget: u64) -> usize {
    if alphabet <= 1 {
        return usize::MAX;
    }
    ((budget as f64).ln() / (alphabet as f64).ln()).floor() as usize
}

/// Error unless `alphabet^depth <= budget`.
pub fn check_budget(alphabet: usize, depth: usize, budget: u64) -> Result<()> {
    match level_size(alphabet, depth) {
        Some(size) if size as u64 <= budget => Ok(()),
        _ => Err(Error::BudgetExceeded {
            alphabet,
            depth,
            budget,
            suggested_depth: suggested_depth(alphabet, budget),
        }),
    }
}

/// Prefix length used to cut the tree: smallest `k` with `N^k >= 64`, capped at the depth.
pub fn partition_depth(alphabet: usize, depth: usize) -> usize {
    let mut k = 0;
    let mut parts = 1usize;
    while k < depth && parts < MIN_PARTITIONS {
        parts = parts.saturating_mul(alphabet);
        k += 1;
    }
    k
}

#[derive(Clone, Copy)]
struct Node {
    product: Mat2,
    log_mu: f64,
    log_aux: f64,
    log_det: f64,
    index: usize,
}

impl<'a> WordTree<'a> {
    #[inline]
    fn child(&self, parent: &Node, word: &[usize]) -> Node {
        let l = *word.last().expect("non-empty word");
        Node {
            product: parent.product * self.ifs.matrix(l),
            log_mu: self
                .mu
                .map_or(0.0, |m| m.log_weight_step(word, parent.log_mu)),
            log_aux: self
                .aux
                .map_or(0.0, |m| m.log_weight_step(word, parent.log_aux)),
            log_det: parent.log_det + self.ifs.log_abs_det(l),
            index: parent.index * self.ifs.len() + l,
        }
    }

    #[inline]
    fn leaf(node: &Node) -> Leaf {
        let (a1, _) = node.product.singular_values_unchecked();
        let log_a1 = a1.ln();
        Leaf {
            index: node.index,
            log_mu: node.log_mu,
            log_aux: node.log_aux,
            log_a1,
            log_a2: node.log_det - log_a1,
        }
    }

    /// Visit every leaf of the subtree below one prefix, in lexicographic order.
    fn walk<A>(
        &self,
        prefix: usize,
        k: usize,
        acc: &mut A,
        visit: &(impl Fn(&mut A, &Leaf) + Sync),
    ) {
        let n = self.depth;
        let alphabet = self.ifs.len();
        let root = Node {
            product: Mat2::IDENTITY,
            log_mu: 0.0,
            log_aux: 0.0,
            log_det: 0.0,
            index: 0,
        };
        let mut word = Word::from_lex_index(prefix, alphabet, k).letters().to_vec();
        word.resize(n, 0);
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(root);
        for j in 0..k {
            let next = self.child(&nodes[j], &word[..=j]);
            nodes.push(next);
        }
        if k == n {
            visit(acc, &Self::leaf(&nodes[n]));
            return;
        }
        nodes.resize(n + 1, root);
        // nodes[j] holds the state of word[..j]; `level` is the position being set
        let mut level = k;
        word[level] = 0;
        loop {
            nodes[level + 1] = self.child(&nodes[level], &word[..=level]);
            if level + 1 == n {
                visit(acc, &Self::leaf(&nodes[n]));
                loop {
                    word[level] += 1;
                    if word[level] < alphabet {
                        break;
                    }
                    if level == k {
                        return;
                    }
                    level -= 1;
                }
            } else {
                level += 1;
                word[level] = 0;
            }
        }
    }

    /// Fold every leaf into per-subtree accumulators, returned in prefix order.
    pub fn fold<A: Send>(
        &self,
        budget: u64,
        init: impl Fn() -> A + Sync,
        visit: impl Fn(&mut A, &Leaf) + Sync,
    ) -> Result<Vec<A>> {
        if self.depth == 0 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        let alphabet = self.ifs.len();
        check_budget(alphabet, self.depth, budget)?;
        let k = partition_depth(alphabet, self.depth);
        let parts = level_size(alphabet, k).expect("partition fits");
        Ok((0..parts)
            .into_par_iter()
            .map(|p| {
                let mut acc = init();
                self.walk(p, k, &mut acc, &visit);
                acc
            })
            .collect())
    }
}

/// `(1/n) log Σ_{|𝚒|=n} θ(𝚒)`.
pub fn pressure_value(spec: &PotentialSpec, depth: usize, budget: u64) -> Result<f64> {
    let tree = WordTree {
        ifs: spec.ifs,
        mu: spec.mu,
        aux: None,
        depth,
    };
    let parts = tree.fold(budget, LogSumExp::<0>::new, |acc, leaf| {
        acc.push(spec.log_value(leaf.log_mu, leaf.log_a1, leaf.log_a2), [])
    })?;
    let total = pairwise_reduce(parts, |a, b| a.merge(b)).expect("at least one partition");
    let value = total.log_total() / depth as f64;
    if value.is_nan() || value == f64::INFINITY {
        return Err(Error::SupportMismatch);
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub depth: usize,
    pub p_n: f64,
    /// Equal to `p_n`: the pressure is the infimum of the `P_n`.
    pub upper: f64,
    /// `p_n − log(C)/n` with an empirically calibrated `C`; heuristic.
    pub lower: f64,
    pub qb_constant_est: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureOptions {
    pub budget: u64,
    pub calibration_samples: usize,
    pub seed: u64,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions {
            budget: DEFAULT_BUDGET,
            calibration_samples: DEFAULT_CALIBRATION_SAMPLES,
            seed: 0,
        }
    }
}

pub fn pressure_estimate(
    spec: &PotentialSpec,
    depth: usize,
    opts: &PressureOptions,
) -> Result<PressureEstimate> {
    let p_n = pressure_value(spec, depth, opts.budget)?;
    let c = qb_constant_calibrate(spec, opts.calibration_samples, opts.seed)?;
    Ok(PressureEstimate {
        depth,
        p_n,
        upper: p_n,
        lower: p_n - c.ln() / depth as f64,
        qb_constant_est: c,
    })
}

/// Empirical almost-multiplicativity constant of the potential: the largest
/// `max(θ(𝚒)θ(𝚓)/θ(𝚒𝚓), θ(𝚒𝚓)/(θ(𝚒)θ(𝚓)))` over random splits with both
/// words of length at most 8. Log-gaps below `1e-12` are treated as rounding.
pub fn qb_constant_calibrate(spec: &PotentialSpec, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.alphabet_size();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (left, right) = random_split(&mut rng, n, CALIBRATION_MAX_LEN);
        let joined = [left.as_slice(), right.as_slice()].concat();
        let gap = spec.log_value_of_word(&joined)
            - spec.log_value_of_word(&left)
            - spec.log_value_of_word(&right);
        if gap.is_finite() {
            worst = worst.max(gap.abs());
        }
    }
    if worst < 1e-12 {
        worst = 0.0;
    }
    Ok(worst.exp())
}

/// Normalized potential weights on `Σ_depth`.
pub fn gibbs_level_measure(
    spec: &PotentialSpec,
    depth: usize,
    budget: u64,
) -> Result<LevelMeasure> {
    let tree = WordTree {
        ifs: spec.ifs,
        mu: spec.mu,
        aux: None,
        depth,
    };
    let parts = tree.fold(budget, Vec::new, |acc: &mut Vec<f64>, leaf| {
        acc.push(spec.log_value(leaf.log_mu, leaf.log_a1, leaf.log_a2))
    })?;
    let logs: Vec<f64> = parts.concat();
    if logs.iter().any(|l| *l == f64::INFINITY || l.is_nan()) {
        return Err(Error::SupportMismatch);
    }
    LevelMeasure::from_log_weights(spec.alphabet_size(), depth, &logs)
}

/// Entropy, cross-entropy and Lyapunov exponents of a finite-level measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumFunctionals {
    pub depth: usize,
    pub h: f64,
    pub h_cross: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `P_n` of the potential that generated the measure.
    pub pressure: f64,
}

/// Functionals of the Gibbs measure `ν_n ∝ θ` on `Σ_depth`; the
/// cross-entropy is taken against the potential's measure, or equals `h`
/// for potentials without one.
pub fn equilibrium_functionals(
    spec: &PotentialSpec,
    depth: usize,
    budget: u64,
) -> Result<EquilibriumFunctionals> {
    functionals_against(spec, spec.mu, depth, budget)
}

/// As [`equilibrium_functionals`] with the cross-entropy taken against `reference`.
pub fn functionals_against(
    spec: &PotentialSpec,
    reference: Option<&dyn CylinderWeightModel>,
    depth: usize,
    budget: u64,
) -> Result<EquilibriumFunctionals> {
    if let Some(r) = reference {
        if r.alphabet_size() != spec.alphabet_size() {
            return Err(Error::InvalidArgument("reference alphabet differs".into()));
        }
    }
    let tree = WordTree {
        ifs: spec.ifs,
        mu: spec.mu,
        aux: reference,
        depth,
    };
    let parts = tree.fold(budget, LogSumExp::<4>::new, |acc, leaf| {
        let lv = spec.log_value(leaf.log_mu, leaf.log_a1, leaf.log_a2);
        acc.push(lv, [lv, leaf.log_aux, leaf.log_a1, leaf.log_a2])
    })?;
    let total = pairwise_reduce(parts, |a, b| a.merge(b)).expect("at least one partition");
    let n = depth as f64;
    let log_z = total.log_total();
    if !log_z.is_finite() {
        return Err(Error::SupportMismatch);
    }
    // ν = θ/Z, so log ν = log θ − log Z
    let h = (log_z - total.mean(0)) / n;
    let h_cross = if reference.is_some() {
        -total.mean(1) / n
    } else {
        h
    };
    if !h_cross.is_finite() {
        return Err(Error::SupportMismatch);
    }
    Ok(EquilibriumFunctionals {
        depth,
        h: h.max(0.0),
        h_cross,
        lambda1: total.mean(2) / n,
        lambda2: total.mean(3) / n,
        pressure: log_z / n,
    })
}

/// Functionals of an arbitrary level measure (e.g. a Bernoulli `ν`) against `mu`.
pub fn level_functionals(
    ifs: &AffineIFS,
    nu: &dyn CylinderWeightModel,
    mu: &dyn CylinderWeightModel,
    depth: usize,
    budget: u64,
) -> Result<EquilibriumFunctionals> {
    let spec = PotentialSpec::psi(ifs, nu, 1.0, 0.0)?;
    functionals_against(&spec, Some(mu), depth, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{entropy_of_level, Bernoulli};
    use crate::systems;
    use approx::assert_relative_eq;

    #[test]
    fn svf_examples_and_seams() {
        let ifs = AffineIFS::linear(vec![Mat2::diag(0.5, 0.2)]).unwrap();
        let w = Word::from_one_based(&[1]);
        assert_relative_eq!(
            svf(&ifs, &w, 0.5).unwrap(),
            0.5f64.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            svf(&ifs, &w, 1.5).unwrap(),
            0.5 * 0.2f64.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(svf(&ifs, &w, 2.0).unwrap(), 0.1, max_relative = 1e-14);
        for seam in [1.0f64, 2.0] {
            let below = svf(&ifs, &w, seam - 1e-12).unwrap();
            let at = svf(&ifs, &w, seam).unwrap();
            assert_relative_eq!(below, at, max_relative = 1e-10);
        }
        // the middle formula also gives |det| at s = 2
        assert_relative_eq!(
            log_svf(2.0 - 1e-15, 0.5f64.ln(), 0.2f64.ln()).exp(),
            0.1,
            max_relative = 1e-13
        );
        assert_eq!(svf(&ifs, &w, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn psi_examples() {
        let sys = systems::d2();
        let w = Word::from_one_based(&[1]);
        assert_relative_eq!(
            psi(&sys.ifs, &sys.mu, &w, 1.0, 0.7).unwrap(),
            0.6,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            psi(&sys.ifs, &sys.mu, &w, 0.0, 0.5).unwrap(),
            svf(&sys.ifs, &w, 0.5).unwrap(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            psi(&sys.ifs, &sys.mu, &w, 2.0, 0.5).unwrap(),
            0.36 / 0.5f64.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(0.36 / 0.5f64.sqrt(), 0.50912, epsilon = 1e-5);
    }

    #[test]
    fn spec_validation() {
        let sys = systems::d2();
        assert!(PotentialSpec::svf(&sys.ifs, -0.1).is_err());
        assert!(PotentialSpec::new(&sys.ifs, None, PotentialKind::Psi { q: 1.0, s: 0.0 }).is_err());
        let kind = PotentialKind::SvfTimesAlphaKappa {
            m: 3,
            kappa: 1.0,
            q: 2.0,
            s: 0.5,
        };
        assert!(PotentialSpec::new(&sys.ifs, Some(&sys.mu), kind).is_err());
        let three = Bernoulli::uniform(3);
        assert!(PotentialSpec::psi(&sys.ifs, &three, 0.5, 0.5).is_err());
    }

    #[test]
    fn d2_closed_form_pressure() {
        let sys = systems::d2();
        let spec = PotentialSpec::psi(&sys.ifs, &sys.mu, 0.0, 0.5).unwrap();
        let expected = (0.5f64.sqrt() + 0.3f64.sqrt()).ln();
        assert_relative_eq!(expected, 0.22700, epsilon = 1e-5);
        for n in 1..=12 {
            let p = pressure_value(&spec, n, DEFAULT_BUDGET).unwrap();
            assert!((p - expected).abs() < 1e-12, "depth {n}: {p}");
        }
    }

    #[test]
    fn equal_maps_closed_form() {
        let sys = systems::equal_maps();
        for (q, s) in [(0.5, 0.3), (2.0, 0.7), (0.0, 0.9)] {
            let spec = PotentialSpec::psi(&sys.ifs, &sys.mu, q, s).unwrap();
            let expected = (1.0 - q) * (2f64.ln() + s * 0.4f64.ln());
            let p = pressure_value(&spec, 9, DEFAULT_BUDGET).unwrap();
            assert!((p - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_is_fixed_and_budget_enforced() {
        assert_eq!(partition_depth(2, 12), 6);
        assert_eq!(partition_depth(2, 3), 3);
        assert_eq!(partition_depth(3, 12), 4);
        assert_eq!(partition_depth(1, 5), 5);
        let sys = systems::d2();
        let spec = PotentialSpec::svf(&sys.ifs, 0.5).unwrap();
        match pressure_value(&spec, 30, DEFAULT_BUDGET) {
            Err(Error::BudgetExceeded {
                suggested_depth, ..
            }) => assert_eq!(suggested_depth, 24),
            other => panic!("{other:?}"),
        }
        assert!(pressure_value(&spec, 0, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn traversal_visits_words_in_order() {
        let sys = systems::p1();
        let tree = WordTree {
            ifs: &sys.ifs,
            mu: Some(&sys.mu),
            aux: None,
            depth: 9,
        };
        let parts = tree
            .fold(DEFAULT_BUDGET, Vec::new, |acc: &mut Vec<Leaf>, leaf| {
                acc.push(*leaf)
            })
            .unwrap();
        let leaves: Vec<Leaf> = parts.concat();
        assert_eq!(leaves.len(), 512);
        for (k, leaf) in leaves.iter().enumerate() {
            assert_eq!(leaf.index, k);
            let w = Word::from_lex_index(k, 2, 9);
            let m = sys.ifs.product(w.letters());
            let (a1, a2) = m.singular_values().unwrap();
            assert_relative_eq!(leaf.log_a1, a1.ln(), max_relative = 1e-13);
            assert_relative_eq!(leaf.log_a2, a2.ln(), max_relative = 1e-12);
            assert_relative_eq!(
                leaf.log_mu,
                sys.mu.log_weight(w.letters()),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn qb_calibration_examples() {
        let sys = systems::d2();
        let spec = PotentialSpec::psi(&sys.ifs, &sys.mu, 0.3, 0.8).unwrap();
        assert_eq!(qb_constant_calibrate(&spec, 500, 1).unwrap(), 1.0);
        let p1 = systems::p1();
        let zero = PotentialSpec::svf(&p1.ifs, 0.0).unwrap();
        assert_eq!(qb_constant_calibrate(&zero, 500, 1).unwrap(), 1.0);
        let half = PotentialSpec::svf(&p1.ifs, 0.5).unwrap();
        let c1 = qb_constant_calibrate(&half, 2000, 3).unwrap();
        let c2 = qb_constant_calibrate(&half, 4000, 3).unwrap();
        assert!(c1 > 1.0 && c1.is_finite());
        assert!(c2 >= c1 && c2 <= c1 * 1.05, "{c1} {c2}");
    }

    #[test]
    fn gibbs_measure_examples() {
        let sys = systems::d2();
        let one = PotentialSpec::psi(&sys.ifs, &sys.mu, 1.0, 0.4).unwrap();
        let level = gibbs_level_measure(&one, 4, DEFAULT_BUDGET).unwrap();
        let mu_level = LevelMeasure::from_model(&sys.mu, 4).unwrap();
        for (a, b) in level.weights().iter().zip(mu_level.weights()) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
        let flat = PotentialSpec::psi(&sys.ifs, &sys.mu, 0.0, 0.0).unwrap();
        let level = gibbs_level_measure(&flat, 5, DEFAULT_BUDGET).unwrap();
        assert!(level
            .weights()
            .iter()
            .all(|w| (w - 1.0 / 32.0).abs() < 1e-15));
        let half = PotentialSpec::psi(&sys.ifs, &sys.mu, 0.0, 0.5).unwrap();
        let level = gibbs_level_measure(&half, 1, DEFAULT_BUDGET).unwrap();
        let z = 0.5f64.sqrt() + 0.3f64.sqrt();
        assert_relative_eq!(level.weights()[0], 0.5f64.sqrt() / z, max_relative = 1e-14);
        assert_relative_eq!(level.weights()[0], 0.5635, epsilon = 1e-4);
        assert_relative_eq!(level.weights()[1], 0.4365, epsilon = 1e-4);
    }

    #[test]
    fn functionals_examples() {
        let carpet = systems::d2_carpet();
        let spec = PotentialSpec::psi(&carpet.ifs, &carpet.mu, 1.0, 0.3).unwrap();
        let f = equilibrium_functionals(&spec, 10, DEFAULT_BUDGET).unwrap();
        assert_relative_eq!(
            f.lambda1,
            0.5 * (0.5f64.ln() + 0.3f64.ln()),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            f.lambda2,
            0.5 * (0.2f64.ln() + 0.25f64.ln()),
            max_relative = 1e-12
        );
        assert_relative_eq!(f.lambda1, -0.94856, epsilon = 1e-5);
        assert_relative_eq!(f.lambda2, -1.49787, epsilon = 1e-5);
        assert_relative_eq!(f.h, 2f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(f.h_cross, 2f64.ln(), max_relative = 1e-12);

        let d2 = systems::d2();
        let spec = PotentialSpec::psi(&d2.ifs, &d2.mu, 1.0, 1.2).unwrap();
        let f = equilibrium_functionals(&spec, 8, DEFAULT_BUDGET).unwrap();
        assert_relative_eq!(f.h, d2.mu.entropy(), max_relative = 1e-12);
        assert_relative_eq!(f.h_cross, d2.mu.entropy(), max_relative = 1e-12);

        let eq = systems::equal_maps();
        for (q, s) in [(0.5, 0.3), (3.0, 1.4)] {
            let spec = PotentialSpec::psi(&eq.ifs, &eq.mu, q, s).unwrap();
            let f = equilibrium_functionals(&spec, 7, DEFAULT_BUDGET).unwrap();
            assert_relative_eq!(f.lambda1, 0.4f64.ln(), max_relative = 1e-12);
        }
    }

    #[test]
    fn streamed_entropy_matches_materialized_level() {
        let sys = systems::p1();
        let spec = PotentialSpec::psi(&sys.ifs, &sys.mu, 2.0, 0.6).unwrap();
        let f = equilibrium_functionals(&spec, 10, DEFAULT_BUDGET).unwrap();
        let level = gibbs_level_measure(&spec, 10, DEFAULT_BUDGET).unwrap();
        assert_relative_eq!(f.h, entropy_of_level(&level), max_relative = 1e-10);
        let hc = crate::symbolic::cross_entropy_of_level(&sys.mu, &level).unwrap();
        assert_relative_eq!(f.h_cross, hc, max_relative = 1e-10);
    }

    #[test]
    fn variational_inequality_for_bernoulli_levels() {
        let sys = systems::p1();
        let spec = PotentialSpec::psi(&sys.ifs, &sys.mu, 0.7, 0.8).unwrap();
        let p = pressure_value(&spec, 8, DEFAULT_BUDGET).unwrap();
        for a in [0.1, 0.3, 0.5, 0.8] {
            let nu = Bernoulli::new(vec![a, 1.0 - a]).unwrap();
            let level = LevelMeasure::from_model(&nu, 8).unwrap();
            let mean_log: f64 = level
                .weights()
                .iter()
                .enumerate()
                .map(|(k, w)| w * spec.log_value_of_word(level.word(k).letters()))
                .sum::<f64>()
                / 8.0;
            assert!(p >= entropy_of_level(&level) + mean_log - 1e-10);
        }
    }
}
