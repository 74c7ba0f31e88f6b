//! The factorial tower `X_m = X(N, q(m), δ)` with `q(m) = m!`.
//!
//! `theta(m, ·)` is the block-sum factor map `X_m → X_{m−1}`,
//! `eta(m, a, ·)` its explicit section `X_{m−1} → X_m` built from an anchor
//! table `a`, and [`gamma`] assembles a truncated point of the inverse limit
//! from a point of one level. Windows carry explicit index domains; every
//! domain is computed before any value is read.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arith::{is_prime, primes_up_to};
use crate::error::{Error, Result};
use crate::report::{Checker, SuiteReport};
use crate::scalar::Scalar;
use crate::shift::{
    check_membership, periodic_witness, random_torus_vec, random_window, sample_gap_window, witness_gap, SeqPoint,
    SubshiftSpec,
};
use crate::torus::{rho_n, TorusVec};

/// Levels above this get a cost warning (`q(7) = 5040`).
pub const DESK_LEVEL_LIMIT: usize = 6;

/// `q(m) = m!`.
pub fn q_factorial(m: usize) -> Result<u64> {
    if m < 1 {
        return Err(Error::InvalidLevel { level: m, min: 1 });
    }
    (1..=m as u64)
        .try_fold(1u64, |acc, k| acc.checked_mul(k))
        .filter(|&q| q <= i64::MAX as u64)
        .ok_or_else(|| Error::InvalidTower(format!("q({m}) overflows 64-bit indices")))
}

fn q_index(m: usize) -> Result<i64> {
    q_factorial(m).map(|q| q as i64)
}

/// Number of anchor values used by `eta` at level m: `(m−1)·q(m−1)`.
pub fn anchor_len(m: usize) -> Result<usize> {
    if m < 2 {
        return Err(Error::InvalidLevel { level: m, min: 2 });
    }
    Ok((m - 1) * q_factorial(m - 1)? as usize)
}

/// θ_{m,m−1}: `y_k = Σ_{i=0}^{m−1} x_{k + i·q(m−1)}`.
///
/// Periodic points keep their period; a window `[A, B]` becomes
/// `[A, B − (m−1)·q(m−1)]`.
pub fn theta<S: Scalar>(m: usize, x: &SeqPoint<S>) -> Result<SeqPoint<S>> {
    if m < 2 {
        return Err(Error::InvalidLevel { level: m, min: 2 });
    }
    let step = q_index(m - 1)?;
    let span = (m as i64 - 1) * step;
    let block_sum = |k: i64| -> Result<TorusVec<S>> {
        let mut acc = x.at(k)?.clone();
        for i in 1..m as i64 {
            acc += x.at(k + i * step)?;
        }
        Ok(acc)
    };
    match x {
        SeqPoint::Periodic { values } => {
            let values = (0..values.len() as i64).map(block_sum).collect::<Result<_>>()?;
            SeqPoint::periodic(values)
        }
        SeqPoint::Window { .. } => {
            let (a, b) = x.domain().expect("window");
            if b - span < a {
                return Err(Error::EmptyDomain(format!(
                    "theta at level {m} needs a window of length > {span}, got {}",
                    b - a + 1
                )));
            }
            let values = (a..=b - span).map(block_sum).collect::<Result<_>>()?;
            SeqPoint::window(a, values)
        }
    }
}

/// θ_{m,n} = θ_{n+1,n} ∘ … ∘ θ_{m,m−1}, mapping level m down to level n.
pub fn theta_chain<S: Scalar>(m: usize, n: usize, x: &SeqPoint<S>) -> Result<SeqPoint<S>> {
    if n < 1 || n > m {
        return Err(Error::InvalidLevel { level: n, min: 1 });
    }
    let mut current = x.clone();
    for level in (n + 1..=m).rev() {
        current = theta(level, &current).map_err(|e| e.at_level(level))?;
    }
    Ok(current)
}

/// The anchor sequence `a` restricted to `[0, (m−1)·q(m−1) − 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Anchor<S: Scalar> {
    Zero,
    Table(Vec<TorusVec<S>>),
}

impl<S: Scalar> Anchor<S> {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, dim: usize, denom: i64) -> Result<Self> {
        Ok(Anchor::Table((0..anchor_len(m)?).map(|_| random_torus_vec(rng, dim, denom)).collect()))
    }

    fn get(&self, index: i64, dim: usize) -> Result<TorusVec<S>> {
        match self {
            Anchor::Zero => Ok(TorusVec::zero(dim)),
            Anchor::Table(values) => {
                let v = usize::try_from(index)
                    .ok()
                    .and_then(|i| values.get(i))
                    .ok_or(Error::MissingAnchor(index.max(0) as usize))?;
                if v.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: v.dim() });
                }
                Ok(v.clone())
            }
        }
    }
}

/// Index geometry of `eta` at one level.
#[derive(Clone, Copy, Debug)]
struct EtaShape {
    /// q(m)
    block: i64,
    /// q(m−1)
    step: i64,
    /// (m−1)·q(m−1)
    span: i64,
}

impl EtaShape {
    fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidLevel { level: m, min: 2 });
        }
        let step = q_index(m - 1)?;
        Ok(Self { block: q_index(m)?, step, span: (m as i64 - 1) * step })
    }

    fn base_ok(&self, j: i64, (a, b): (i64, i64)) -> bool {
        j < self.span || (a..=b).contains(&(j - self.span))
    }

    fn computable(&self, k: i64, dom: (i64, i64)) -> bool {
        let (a, b) = dom;
        let n = k.div_euclid(self.block);
        let j = k.rem_euclid(self.block);
        if !self.base_ok(j, dom) {
            return false;
        }
        match n.cmp(&0) {
            std::cmp::Ordering::Equal => true,
            std::cmp::Ordering::Greater => a <= j && (n - 1) * self.block + self.step + j <= b,
            std::cmp::Ordering::Less => a <= k && j - self.block + self.step <= b,
        }
    }
}

/// Output domain of `eta(m, ·, x)` for an input window with domain `dom`:
/// the longest run of indices whose defining formula reads only known values.
pub fn eta_domain(m: usize, dom: (i64, i64)) -> Result<(i64, i64)> {
    let shape = EtaShape::new(m)?;
    let (a, b) = dom;
    if b < a {
        return Err(Error::EmptyDomain("input window is empty".into()));
    }
    let lo = a.min(0);
    let hi = (b + shape.block).max(shape.block - 1);
    let mut best: Option<(i64, i64)> = None;
    let mut run_start: Option<i64> = None;
    for k in lo..=hi + 1 {
        let ok = k <= hi && shape.computable(k, dom);
        match (ok, run_start) {
            (true, None) => run_start = Some(k),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| k - 1 - s > be - bs) {
                    best = Some((s, k - 1));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    best.ok_or_else(|| Error::EmptyDomain(format!("eta at level {m} has no computable index for input {dom:?}")))
}

/// η_{m−1,m}: the section of θ_{m,m−1} determined by the anchor `a`.
///
/// With `Q = q(m)`, `P = q(m−1)` and `k = n·Q + j`, `0 ≤ j < Q`:
///
/// * `y_k = a_k` for `0 ≤ k < (m−1)P`,
/// * `y_k = x_{k−(m−1)P} − Σ_{i=1}^{m−1} a_{k−iP}` for `(m−1)P ≤ k < Q`,
/// * `y_k = Σ_{i=0}^{n−1} (x_{iQ+P+j} − x_{iQ+j}) + y_j` for `n > 0`,
/// * `y_k = Σ_{i=n}^{−1} (x_{iQ+j} − x_{iQ+P+j}) + y_j` for `n < 0`.
pub fn eta<S: Scalar>(m: usize, anchor: &Anchor<S>, x: &SeqPoint<S>) -> Result<SeqPoint<S>> {
    let dom = x.domain().ok_or(Error::NotWindow)?;
    let shape = EtaShape::new(m)?;
    let (lo, hi) = eta_domain(m, dom)?;
    let dim = x.dim();
    let EtaShape { block, step, span } = shape;

    let mut base: BTreeMap<i64, TorusVec<S>> = BTreeMap::new();
    let mut base_value = |j: i64| -> Result<TorusVec<S>> {
        if let Some(v) = base.get(&j) {
            return Ok(v.clone());
        }
        let v = if j < span {
            anchor.get(j, dim)?
        } else {
            let mut v = x.at(j - span)?.clone();
            for i in 1..m as i64 {
                v -= &anchor.get(j - i * step, dim)?;
            }
            v
        };
        base.insert(j, v.clone());
        Ok(v)
    };

    let mut values = Vec::with_capacity((hi - lo + 1) as usize);
    for k in lo..=hi {
        let n = k.div_euclid(block);
        let j = k.rem_euclid(block);
        let mut y = base_value(j)?;
        if n > 0 {
            for i in 0..n {
                y += x.at(i * block + step + j)?;
                y -= x.at(i * block + j)?;
            }
        } else if n < 0 {
            for i in n..0 {
                y += x.at(i * block + j)?;
                y -= x.at(i * block + step + j)?;
            }
        }
        values.push(y);
    }
    SeqPoint::window(lo, values)
}

/// Which step of the range argument covers the pair `(y_{k−q(m)}, y_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofCase {
    /// `k = q(m) + j`
    FirstBlock,
    /// `k = n·q(m) + j`, `n ≥ 2`
    LaterBlock,
    /// `k = n·q(m) + j`, `n ≤ 0`
    NonPositiveBlock,
}

pub fn proof_case(m: usize, k: i64) -> Result<ProofCase> {
    let n = k.div_euclid(q_index(m)?);
    Ok(match n {
        1 => ProofCase::FirstBlock,
        n if n >= 2 => ProofCase::LaterBlock,
        _ => ProofCase::NonPositiveBlock,
    })
}

fn overlap(a: (i64, i64), b: (i64, i64)) -> Option<(i64, i64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo <= hi).then_some((lo, hi))
}

/// First index in `range` where the two points differ.
fn first_mismatch<S: Scalar>(u: &SeqPoint<S>, v: &SeqPoint<S>, range: (i64, i64)) -> Option<i64> {
    (range.0..=range.1).find(|&k| u.get(k) != v.get(k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionReport {
    /// Overlap of the input domain with the domain of θ(η(x)).
    pub overlap: (i64, i64),
    pub suite: SuiteReport,
}

impl SectionReport {
    pub fn passed(&self) -> bool {
        self.suite.passed()
    }
}

/// Checks θ_{m,m−1}(η_{m−1,m}(x)) = x exactly on the overlap of domains, for
/// `x` and for `trials` random windows on the same domain.
pub fn verify_section_identity<S: Scalar>(
    m: usize,
    anchor: &Anchor<S>,
    x: &SeqPoint<S>,
    trials: usize,
    seed: u64,
    denom: i64,
) -> Result<SectionReport> {
    let dom = x.domain().ok_or(Error::NotWindow)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checker = Checker::new("section identity", "θ_{m,m−1}∘η_{m−1,m} = id");
    let mut shared = None;
    let inputs = std::iter::once(x.clone())
        .chain((0..trials).map(|_| random_window(&mut rng, x.dim(), dom.0, (dom.1 - dom.0 + 1) as usize, denom)))
        .collect::<Vec<_>>();
    for input in &inputs {
        let y = eta(m, anchor, input)?;
        let z = theta(m, &y)?;
        let common = overlap(dom, z.domain().expect("window"))
            .ok_or_else(|| Error::EmptyDomain("θ∘η does not overlap the input".into()))?;
        shared.get_or_insert(common);
        let bad = first_mismatch(&z, input, common);
        checker.check(bad.is_none(), || {
            let k = bad.unwrap();
            json!({ "m": m, "index": k, "x_k": input.get(k), "theta_eta_x_k": z.get(k) })
        });
    }
    let mut suite = SuiteReport::default();
    suite.push(checker.finish());
    Ok(SectionReport { overlap: shared.expect("at least one input"), suite })
}

/// Parameters of the section and factor-map suite run at one level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SectionSuiteConfig<S: Scalar> {
    pub m: usize,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(with = "crate::scalar::serde_q")]
    pub delta: S,
    pub start: i64,
    pub len: usize,
    pub samples: usize,
    pub seed: u64,
    pub denom: i64,
    /// Also rerun every sample with a random anchor table.
    pub random_anchors: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionSuiteReport {
    /// Checked index pairs per step of the range argument.
    pub case_counts: BTreeMap<ProofCase, usize>,
    pub suite: SuiteReport,
}

/// For random windows `x` of `X_{m−1}` and zero (plus random) anchors:
/// θ(η(x)) = x on the overlap, η(x) lies in `X_m` at every checkable index,
/// and θ preserves gaps: `ρ_N(θy_k, θy_{k+q(m−1)}) = ρ_N(y_k, y_{k+q(m)})`.
pub fn run_section_suite<S: Scalar>(cfg: &SectionSuiteConfig<S>) -> Result<SectionSuiteReport> {
    let m = cfg.m;
    let shape = EtaShape::new(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let upper = SubshiftSpec::gap_space(cfg.dim, shape.block as usize, cfg.delta.clone())?;

    let mut identity = Checker::new("section identity", "θ_{m,m−1}∘η_{m−1,m} = id on the overlap domain");
    let mut range = Checker::new("section range", "η_{m−1,m}(X_{m−1}) ⊆ X_m at every checkable index");
    let mut telescoping =
        Checker::new("theta telescoping", "ρ_N(θy_k, θy_{k+q(m−1)}) = ρ_N(y_k, y_{k+q(m)}) at every checkable k");
    let mut counts: BTreeMap<ProofCase, usize> = BTreeMap::new();

    for _ in 0..cfg.samples {
        let x = sample_gap_window(
            &mut rng,
            cfg.dim,
            shape.step as usize,
            &cfg.delta,
            cfg.start,
            cfg.len,
            cfg.denom,
            crate::shift::DEFAULT_MAX_ATTEMPTS,
        )?;
        let mut anchors = vec![Anchor::Zero];
        if cfg.random_anchors {
            anchors.push(Anchor::random(&mut rng, m, cfg.dim, cfg.denom)?);
        }
        for anchor in &anchors {
            let y = eta(m, anchor, &x)?;
            let z = theta(m, &y)?;
            let dom = x.domain().expect("window");
            let common = overlap(dom, z.domain().expect("window"))
                .ok_or_else(|| Error::EmptyDomain("θ∘η does not overlap the input".into()))?;
            let bad = first_mismatch(&z, &x, common);
            identity.check(bad.is_none(), || {
                let k = bad.unwrap();
                json!({ "m": m, "index": k, "x_k": x.get(k), "theta_eta_x_k": z.get(k) })
            });

            let report = check_membership(&upper, &y)?;
            for c in &report.checks {
                // the check at n compares y_n with y_{n+q(m)}; classify by the later index
                *counts.entry(proof_case(m, c.index + shape.block)?).or_default() += 1;
                range.check(c.ok, || json!({ "m": m, "index": c.index, "rho": c.lhs.as_ref().map(Scalar::to_fraction_string), "y": y }));
            }

            let (zl, zh) = z.domain().expect("window");
            for k in zl..=zh - shape.step {
                let lhs = rho_n(z.at(k)?, z.at(k + shape.step)?)?;
                let rhs = rho_n(y.at(k)?, y.at(k + shape.block)?)?;
                telescoping.check(lhs == rhs, || {
                    json!({ "m": m, "index": k, "lhs": lhs.to_fraction_string(), "rhs": rhs.to_fraction_string() })
                });
            }
        }
    }

    let mut suite = SuiteReport::default();
    suite.push(identity.finish());
    suite.push(range.finish());
    suite.push(telescoping.finish());
    Ok(SectionSuiteReport { case_counts: counts, suite })
}

/// A truncated tower: levels `1..=m_max` over `(S^N)^ℤ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TowerSpec<S: Scalar> {
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(with = "crate::scalar::serde_q")]
    pub delta: S,
    pub m_max: usize,
    /// Anchor tables keyed by the level `m` of the map `η_{m−1,m}`; absent levels use zero.
    #[serde(default)]
    pub anchors: BTreeMap<usize, Vec<TorusVec<S>>>,
}

impl<S: Scalar> TowerSpec<S> {
    pub fn new(dim: usize, delta: S, m_max: usize) -> Result<Self> {
        let spec = Self { dim, delta, m_max, anchors: BTreeMap::new() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_anchor(mut self, level: usize, values: Vec<TorusVec<S>>) -> Result<Self> {
        self.anchors.insert(level, values);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidTower("alphabet dimension must be positive".into()));
        }
        if !(self.delta.is_positive() && self.delta < S::one()) {
            return Err(Error::InvalidTower("δ must lie in (0, 1)".into()));
        }
        if self.m_max < 1 {
            return Err(Error::InvalidTower("m_max must be at least 1".into()));
        }
        q_factorial(self.m_max)?;
        for (&level, values) in &self.anchors {
            if level < 2 || level > self.m_max {
                return Err(Error::InvalidTower(format!("anchor for level {level} outside 2..={}", self.m_max)));
            }
            if values.len() != anchor_len(level)? {
                return Err(Error::InvalidTower(format!(
                    "anchor for level {level} needs {} values, got {}",
                    anchor_len(level)?,
                    values.len()
                )));
            }
            if let Some(v) = values.iter().find(|v| v.dim() != self.dim) {
                return Err(Error::DimensionMismatch { expected: self.dim, found: v.dim() });
            }
        }
        Ok(())
    }

    pub fn cost_warning(&self) -> Option<String> {
        (self.m_max > DESK_LEVEL_LIMIT).then(|| {
            format!(
                "m_max = {} exceeds {DESK_LEVEL_LIMIT}: level windows need more than {} entries",
                self.m_max,
                q_factorial(self.m_max).unwrap_or(u64::MAX)
            )
        })
    }

    pub fn anchor(&self, level: usize) -> Anchor<S> {
        self.anchors.get(&level).map_or(Anchor::Zero, |v| Anchor::Table(v.clone()))
    }

    /// The gap subshift `X_m`.
    pub fn level_space(&self, m: usize) -> Result<SubshiftSpec<S>> {
        SubshiftSpec::gap_space(self.dim, q_factorial(m)? as usize, self.delta.clone())
    }
}

/// Finite-depth, finite-window stand-in for a point of the inverse limit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TowerElementTrunc<S: Scalar> {
    pub depth: usize,
    /// Component `i` lives at level `i + 1`.
    pub components: Vec<SeqPoint<S>>,
}

impl<S: Scalar> TowerElementTrunc<S> {
    pub fn component(&self, level: usize) -> Option<&SeqPoint<S>> {
        level.checked_sub(1).and_then(|i| self.components.get(i))
    }

    /// θ_{l+1,l}(component l+1) agrees with component l on every overlap.
    pub fn compatibility(&self) -> Result<SuiteReport> {
        let mut checker = Checker::new("tower compatibility", "θ_{l+1,l}(x_{l+1}) = x_l on domain overlaps");
        for level in 1..self.depth {
            let lower = &self.components[level - 1];
            let image = theta(level + 1, &self.components[level]).map_err(|e| e.at_level(level + 1))?;
            let range = match (lower.domain(), image.domain()) {
                (Some(a), Some(b)) => overlap(a, b),
                _ => Some((0, lower.period().or(image.period()).unwrap_or(1) as i64 - 1)),
            };
            let Some(range) = range else { continue };
            let bad = first_mismatch(&image, lower, range);
            checker.check(bad.is_none(), || {
                let k = bad.unwrap();
                json!({ "level": level, "index": k, "lower": lower.get(k), "theta_upper": image.get(k) })
            });
        }
        let mut suite = SuiteReport::default();
        suite.push(checker.finish());
        Ok(suite)
    }
}

/// γ_m truncated at `spec.m_max`: levels below m via θ, level m is `x`,
/// levels above m via iterated η with the spec's anchors.
pub fn gamma<S: Scalar>(spec: &TowerSpec<S>, m: usize, x: &SeqPoint<S>) -> Result<TowerElementTrunc<S>> {
    spec.validate()?;
    if m < 1 || m > spec.m_max {
        return Err(Error::InvalidLevel { level: m, min: 1 });
    }
    if x.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, found: x.dim() });
    }
    if x.domain().is_none() {
        return Err(Error::NotWindow);
    }
    let mut components = Vec::with_capacity(spec.m_max);
    for level in 1..m {
        components.push(theta_chain(m, level, x)?);
    }
    components.push(x.clone());
    for level in m + 1..=spec.m_max {
        let prev = components.last().expect("level m present");
        let next = eta(level, &spec.anchor(level), prev).map_err(|e| e.at_level(level))?;
        components.push(next);
    }
    Ok(TowerElementTrunc { depth: spec.m_max, components })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case", bound = "S: Scalar")]
pub enum PrimeCertificate<S: Scalar> {
    /// `p | q(p)`, so no period-p point satisfies the level-p gap constraint.
    Empty { p: u64, level: usize, q: u64, reason: String },
    /// A verified period-p point of the top level: aperiodicity is not decided at this depth.
    Undetermined {
        p: u64,
        level: usize,
        q: u64,
        #[serde(with = "crate::scalar::serde_q")]
        gap: S,
        witness: SeqPoint<S>,
        reason: String,
    },
    /// Neither certificate could be produced.
    Unavailable { p: u64, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AperiodicityReport<S: Scalar> {
    pub m_max: usize,
    pub certificates: Vec<PrimeCertificate<S>>,
    pub suite: SuiteReport,
}

/// Per-prime status of periodic points in the truncated tower.
pub fn tower_aperiodicity_report<S: Scalar>(spec: &TowerSpec<S>, p_max: u64) -> Result<AperiodicityReport<S>> {
    spec.validate()?;
    let mut certificates = Vec::new();
    let mut mechanism = Checker::new(
        "level-p emptiness",
        "p | q(p) and every period-p point fails ρ_N(x_n, x_{n+q(p)}) ≥ δ at every n",
    );
    let mut witnesses = Checker::new("top-level witness", "explicit period-p point of X_{m_max} passes membership");
    for p in primes_up_to(p_max) {
        let pu = p as usize;
        if pu <= spec.m_max {
            let q = q_factorial(pu)?;
            let divides = q % p == 0;
            // corroborate on a concrete period-p point
            let mut rng = ChaCha8Rng::seed_from_u64(p);
            let sample = SeqPoint::periodic((0..pu).map(|_| random_torus_vec(&mut rng, spec.dim, 64)).collect())?;
            let report = check_membership(&spec.level_space(pu)?, &sample)?;
            let all_fail = report.checks.iter().all(|c| !c.ok);
            mechanism.check(divides && all_fail, || json!({ "p": p, "q": q, "sample": sample }));
            certificates.push(PrimeCertificate::Empty {
                p,
                level: pu,
                q,
                reason: format!(
                    "{p} | q({p}) = {q}: a period-{p} point has x_0 = x_{q}, so ρ_N(x_0, x_{q}) = 0 < δ"
                ),
            });
        } else {
            let level = spec.m_max;
            let q = q_factorial(level)?;
            match periodic_witness(spec.dim, q, &spec.delta, p) {
                Ok(witness) => {
                    let ok = check_membership(&spec.level_space(level)?, &witness)?.passed();
                    witnesses.check(ok, || json!({ "p": p, "witness": witness }));
                    certificates.push(PrimeCertificate::Undetermined {
                        p,
                        level,
                        q,
                        gap: witness_gap(p),
                        witness,
                        reason: format!("undetermined at depth {level}: P_{p}(X_{level}) is nonempty"),
                    });
                }
                Err(e) => certificates.push(PrimeCertificate::Unavailable { p, reason: e.to_string() }),
            }
        }
    }
    debug_assert!(primes_up_to(p_max).iter().all(|&p| is_prime(p)));
    let mut suite = SuiteReport::default();
    suite.push(mechanism.finish());
    suite.push(witnesses.finish());
    Ok(AperiodicityReport { m_max: spec.m_max, certificates, suite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;
    use crate::torus::TorusElem;
    use crate::{Rational, Rational64, Seq, Seq64, TorusPoint};

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn ints(start: i64, vals: &[i64]) -> Seq {
        Seq::window_scalars(start, vals.iter().map(|&v| Rational::from_int(v))).unwrap()
    }

    #[test]
    fn factorial_examples() {
        assert_eq!(q_factorial(1).unwrap(), 1);
        assert_eq!(q_factorial(3).unwrap(), 6);
        assert_eq!(q_factorial(5).unwrap(), 120);
        assert!(q_factorial(0).is_err());
        for m in 2..=12 {
            assert_eq!(q_factorial(m).unwrap(), m as u64 * q_factorial(m - 1).unwrap());
        }
    }

    #[test]
    fn theta_periodic_example() {
        let x = Seq::periodic_scalars([q(0, 1), q(4, 3), q(2, 3)]).unwrap();
        let y = theta(2, &x).unwrap();
        assert_eq!(y, Seq::periodic_scalars([q(4, 3), q(0, 1), q(2, 3)]).unwrap());
        let gap1 = SubshiftSpec::gap_space(1, 1, q(1, 2)).unwrap();
        assert!(check_membership(&gap1, &y).unwrap().passed());
    }

    #[test]
    fn theta_window_shrinks_domain() {
        let zero = ints(3, &[0; 10]);
        let y = theta(2, &zero).unwrap();
        assert_eq!(y.domain(), Some((3, 11)));
        assert!(y.values().iter().all(TorusPoint::is_zero));
        assert!(matches!(theta(3, &ints(0, &[0; 4])), Err(Error::EmptyDomain(_))));
    }

    #[test]
    fn theta_chain_unfolds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Seq = random_window(&mut rng, 2, -4, 40, 16);
        assert_eq!(theta_chain(3, 2, &x).unwrap(), theta(3, &x).unwrap());
        assert_eq!(theta_chain(3, 1, &x).unwrap(), theta(2, &theta(3, &x).unwrap()).unwrap());
        assert_eq!(theta_chain(3, 3, &x).unwrap(), x);
    }

    #[test]
    fn theta_chain_of_witness_lands_in_gap_one() {
        let x = periodic_witness::<Rational>(1, 24, &q(1, 2), 7).unwrap();
        assert!(check_membership(&SubshiftSpec::gap_space(1, 24, q(1, 2)).unwrap(), &x).unwrap().passed());
        let y = theta_chain(4, 1, &x).unwrap();
        assert!(check_membership(&SubshiftSpec::gap_space(1, 1, q(1, 2)).unwrap(), &y).unwrap().passed());
    }

    #[test]
    fn eta_worked_example() {
        let x = ints(0, &[0, 1, 0, 1]);
        let y = eta(2, &Anchor::Zero, &x).unwrap();
        assert_eq!(y.domain(), Some((0, 4)));
        let expected = [0, 0, 1, 1];
        for (k, e) in expected.iter().enumerate() {
            assert_eq!(y.get(k as i64).unwrap(), &TorusPoint::splat(TorusElem::from_ratio(*e, 1), 1));
        }
        let z = theta(2, &y).unwrap();
        for k in 0..=1 {
            assert_eq!(z.get(k), x.get(k));
        }
    }

    #[test]
    fn eta_zero_in_zero_out() {
        let x = ints(-3, &[0; 12]);
        let y = eta(2, &Anchor::Zero, &x).unwrap();
        assert!(y.values().iter().all(TorusPoint::is_zero));
        let y = eta(3, &Anchor::Zero, &ints(-6, &[0; 20])).unwrap();
        assert!(y.values().iter().all(TorusPoint::is_zero));
    }

    #[test]
    fn eta_domain_matches_formula() {
        // base block covered: output is [A, B + q(m) − q(m−1)]
        assert_eq!(eta_domain(2, (0, 3)).unwrap(), (0, 4));
        assert_eq!(eta_domain(3, (-6, 29)).unwrap(), (-6, 33));
        assert_eq!(eta_domain(4, (0, 71)).unwrap(), (0, 89));
    }

    #[test]
    fn eta_domain_without_base_block() {
        // only case-1 indices [0, 3] need no input
        let d = eta_domain(3, (10, 12)).unwrap();
        assert_eq!(d, (0, 3));
        assert!(matches!(eta(3, &Anchor::<Rational>::Zero, &Seq::periodic_scalars([q(0, 1)]).unwrap()), Err(Error::NotWindow)));
    }

    #[test]
    fn eta_reports_missing_anchor() {
        let x = ints(0, &[0; 8]);
        let short = Anchor::Table(vec![TorusPoint::zero(1)]);
        assert_eq!(eta(3, &short, &x), Err(Error::MissingAnchor(1)));
    }

    #[test]
    fn section_identity_examples() {
        let x = ints(0, &[0, 1, 0, 1]);
        let r = verify_section_identity(2, &Anchor::Zero, &x, 0, 0, 64).unwrap();
        assert!(r.passed());
        assert!(r.overlap.0 <= 0 && r.overlap.1 >= 1);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let anchor = Anchor::random(&mut rng, 2, 1, 64).unwrap();
        let r = verify_section_identity(2, &anchor, &x, 100, 9, 64).unwrap();
        assert!(r.passed());
        assert_eq!(r.suite.checks[0].cases, 101);

        let x: Seq64 = random_window(&mut rng, 1, 0, 72, 64);
        let r = verify_section_identity(4, &Anchor::Zero, &x, 20, 3, 64).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn section_suite_exercises_every_case() {
        let cfg = SectionSuiteConfig::<Rational64> {
            m: 3,
            dim: 2,
            delta: Rational64::half(),
            start: -8,
            len: 18,
            samples: 10,
            seed: 4,
            denom: 64,
            random_anchors: true,
        };
        let r = run_section_suite(&cfg).unwrap();
        assert!(r.suite.passed(), "{:?}", r.suite.failures().collect::<Vec<_>>());
        assert_eq!(r.case_counts.len(), 3, "{:?}", r.case_counts);
    }

    #[test]
    fn gamma_examples() {
        let spec = TowerSpec::new(1, q(1, 2), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = sample_gap_window(&mut rng, 1, 2, &q(1, 2), 0, 13, 64, 1000).unwrap();
        let t = gamma(&spec, 2, &x).unwrap();
        assert_eq!(t.components.len(), 3);
        assert_eq!(t.component(2), Some(&x));
        let image = theta(3, t.component(3).unwrap()).unwrap();
        assert_eq!(image.domain(), x.domain());
        assert_eq!(image, x);
        assert!(t.compatibility().unwrap().passed());

        let spec1 = TowerSpec::new(1, q(1, 2), 1).unwrap();
        let t = gamma(&spec1, 1, &x).unwrap();
        assert_eq!(t.components, vec![x.clone()]);
        assert_eq!(t.compatibility().unwrap().checks[0].verdict, Verdict::Vacuous);

        let spec4 = TowerSpec::new(1, q(1, 2), 4).unwrap();
        let zero = ints(-6, &[0; 30]);
        let t = gamma(&spec4, 3, &zero).unwrap();
        assert_eq!(t.components.len(), 4);
        assert!(t.components.iter().all(|c| c.values().iter().all(TorusPoint::is_zero)));
    }

    #[test]
    fn gamma_with_anchors_stays_compatible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a3 = (0..anchor_len(3).unwrap()).map(|_| random_torus_vec(&mut rng, 2, 32)).collect();
        let a4 = (0..anchor_len(4).unwrap()).map(|_| random_torus_vec(&mut rng, 2, 32)).collect();
        let spec = TowerSpec::new(2, q(1, 3), 4).unwrap().with_anchor(3, a3).unwrap().with_anchor(4, a4).unwrap();
        let x = sample_gap_window(&mut rng, 2, 2, &q(1, 3), -3, 20, 32, 1000).unwrap();
        let t = gamma(&spec, 2, &x).unwrap();
        assert!(t.compatibility().unwrap().passed());
        assert_eq!(t.component(2), Some(&x));
    }

    #[test]
    fn gamma_names_failing_level() {
        let spec = TowerSpec::new(1, q(1, 2), 3).unwrap();
        let err = gamma(&spec, 3, &ints(0, &[0; 3])).unwrap_err();
        assert!(matches!(err, Error::AtLevel { level: 3, .. }), "{err:?}");
    }

    #[test]
    fn tower_spec_validation_and_json() {
        assert!(TowerSpec::new(1, q(1, 1), 3).is_err());
        assert!(TowerSpec::new(1, q(1, 2), 3).unwrap().with_anchor(2, vec![]).is_err());
        let spec = TowerSpec::new(1, q(1, 2), 3).unwrap().with_anchor(2, vec![TorusPoint::zero(1)]).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"N":1,"delta":"1/2","m_max":3,"anchors":{"2":[["0/1"]]}}"#);
        assert_eq!(serde_json::from_str::<TowerSpec<Rational>>(&text).unwrap(), spec);
        assert!(TowerSpec::new(1, q(1, 2), 7).unwrap().cost_warning().is_some());
    }

    #[test]
    fn aperiodicity_examples() {
        let spec = TowerSpec::new(1, q(1, 2), 5).unwrap();
        let r = tower_aperiodicity_report(&spec, 7).unwrap();
        assert!(r.suite.passed());
        match &r.certificates[1] {
            PrimeCertificate::Empty { p, level, q, .. } => assert_eq!((*p, *level, *q), (3, 3, 6)),
            other => panic!("{other:?}"),
        }
        match &r.certificates[0] {
            PrimeCertificate::Empty { p, level, .. } => assert_eq!((*p, *level), (2, 2)),
            other => panic!("{other:?}"),
        }
        match &r.certificates[3] {
            PrimeCertificate::Undetermined { p, level, gap, .. } => {
                assert_eq!((*p, *level), (7, 5));
                assert_eq!(*gap, q(6, 7));
            }
            other => panic!("{other:?}"),
        }
    }
}
