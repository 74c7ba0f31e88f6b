//! Finitely described points of (S^N)^ℤ and the subshifts built from gap
//! and adjacency constraints.
//!
//! A point is either periodic (one period of values, indices taken mod the
//! period) or a finite window `[start, start + len)`. Membership is checked
//! at every index where the constraint only touches known values.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arith::{is_prime, mod_inverse};
use crate::error::{Error, Result};
use crate::report::{Checker, SuiteReport, Verdict};
use crate::scalar::Scalar;
use crate::torus::{rho_n, TorusElem, TorusVec};

/// Default denominator for randomly drawn coordinates.
pub const DEFAULT_DENOM: i64 = 64;

/// Per-sample retry budget for rejection sampling.
pub const DEFAULT_MAX_ATTEMPTS: usize = 2_000_000;

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "SeqPointRepr<S>", into = "SeqPointRepr<S>", bound = "S: Scalar")]
pub enum SeqPoint<S: Scalar> {
    Periodic { values: Vec<TorusVec<S>> },
    Window { start: i64, values: Vec<TorusVec<S>> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", bound = "S: Scalar")]
enum SeqPointRepr<S: Scalar> {
    Periodic { period: usize, values: Vec<TorusVec<S>> },
    Window { start: i64, values: Vec<TorusVec<S>> },
}

impl<S: Scalar> TryFrom<SeqPointRepr<S>> for SeqPoint<S> {
    type Error = Error;
    fn try_from(repr: SeqPointRepr<S>) -> Result<Self> {
        match repr {
            SeqPointRepr::Periodic { period, values } => {
                if period != values.len() {
                    return Err(Error::InvalidPoint(format!(
                        "period {period} but {} values",
                        values.len()
                    )));
                }
                SeqPoint::periodic(values)
            }
            SeqPointRepr::Window { start, values } => SeqPoint::window(start, values),
        }
    }
}

impl<S: Scalar> From<SeqPoint<S>> for SeqPointRepr<S> {
    fn from(point: SeqPoint<S>) -> Self {
        match point {
            SeqPoint::Periodic { values } => SeqPointRepr::Periodic { period: values.len(), values },
            SeqPoint::Window { start, values } => SeqPointRepr::Window { start, values },
        }
    }
}

fn check_values<S: Scalar>(values: &[TorusVec<S>]) -> Result<()> {
    let first = values
        .first()
        .ok_or_else(|| Error::InvalidPoint("a point needs at least one value".into()))?;
    for v in values {
        first.same_dim(v)?;
    }
    Ok(())
}

impl<S: Scalar> SeqPoint<S> {
    pub fn periodic(values: Vec<TorusVec<S>>) -> Result<Self> {
        check_values(&values)?;
        Ok(SeqPoint::Periodic { values })
    }

    pub fn window(start: i64, values: Vec<TorusVec<S>>) -> Result<Self> {
        check_values(&values)?;
        Ok(SeqPoint::Window { start, values })
    }

    /// A one-dimensional periodic point from scalar values.
    pub fn periodic_scalars(values: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::periodic(values.into_iter().map(|v| TorusVec::splat(TorusElem::new(v), 1)).collect())
    }

    /// A one-dimensional window from scalar values.
    pub fn window_scalars(start: i64, values: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::window(start, values.into_iter().map(|v| TorusVec::splat(TorusElem::new(v), 1)).collect())
    }

    pub fn values(&self) -> &[TorusVec<S>] {
        match self {
            SeqPoint::Periodic { values } | SeqPoint::Window { values, .. } => values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values()[0].dim()
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, SeqPoint::Periodic { .. })
    }

    pub fn period(&self) -> Option<usize> {
        match self {
            SeqPoint::Periodic { values } => Some(values.len()),
            SeqPoint::Window { .. } => None,
        }
    }

    /// Inclusive index range of a window.
    pub fn domain(&self) -> Option<(i64, i64)> {
        match self {
            SeqPoint::Periodic { .. } => None,
            SeqPoint::Window { start, values } => Some((*start, *start + values.len() as i64 - 1)),
        }
    }

    pub fn get(&self, index: i64) -> Option<&TorusVec<S>> {
        match self {
            SeqPoint::Periodic { values } => Some(&values[index.rem_euclid(values.len() as i64) as usize]),
            SeqPoint::Window { start, values } => {
                let offset = index - start;
                if offset < 0 {
                    None
                } else {
                    values.get(offset as usize)
                }
            }
        }
    }

    /// The value at `index`, or an error naming the missing index.
    pub(crate) fn at(&self, index: i64) -> Result<&TorusVec<S>> {
        self.get(index)
            .ok_or_else(|| Error::EmptyDomain(format!("index {index} outside the window")))
    }

    /// Unrolls a periodic point (or re-cuts a window) to `[start, start + len)`.
    pub fn to_window(&self, start: i64, len: usize) -> Result<Self> {
        let values = (start..start + len as i64)
            .map(|i| self.at(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        Self::window(start, values)
    }
}

/// σ^k: `(σ^k x)_n = x_{n+k}`.
pub fn shift<S: Scalar>(x: &SeqPoint<S>, k: i64) -> SeqPoint<S> {
    match x {
        SeqPoint::Periodic { values } => {
            let p = values.len() as i64;
            let values = (0..p).map(|i| values[(i + k).rem_euclid(p) as usize].clone()).collect();
            SeqPoint::Periodic { values }
        }
        SeqPoint::Window { start, values } => SeqPoint::Window { start: start - k, values: values.clone() },
    }
}

/// `f_j`: `(f_j x)_i = x_{i·j mod p}` on period-p points.
pub fn power_map<S: Scalar>(j: i64, x: &SeqPoint<S>) -> Result<SeqPoint<S>> {
    match x {
        SeqPoint::Periodic { values } => {
            let p = values.len() as i64;
            let values = (0..p).map(|i| values[(i * j).rem_euclid(p) as usize].clone()).collect();
            Ok(SeqPoint::Periodic { values })
        }
        SeqPoint::Window { .. } => Err(Error::NotPeriodic),
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "S: Scalar")]
pub enum SubshiftKind<S: Scalar> {
    /// ρ_N(x_n, x_{n+gap}) ≥ threshold for every n.
    GapAtLeast {
        gap: usize,
        #[serde(with = "crate::scalar::serde_q")]
        threshold: S,
    },
    /// ρ_N(x_{n-1}, x_n) ≥ threshold or ρ_N(x_n, x_{n+1}) ≥ threshold.
    EitherOrAtLeast {
        #[serde(with = "crate::scalar::serde_q")]
        threshold: S,
    },
    /// ρ_N(x_{n-1}, x_n) = value or ρ_N(x_n, x_{n+1}) = value.
    EitherOrEquals {
        #[serde(with = "crate::scalar::serde_q")]
        value: S,
    },
    /// Binary words (letters 0 and 1 of S) avoiding every forbidden word.
    BinarySft { forbidden: Vec<String> },
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SubshiftSpec<S: Scalar> {
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(flatten)]
    pub kind: SubshiftKind<S>,
}

impl<S: Scalar> SubshiftSpec<S> {
    pub fn new(dim: usize, kind: SubshiftKind<S>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("alphabet dimension must be positive".into()));
        }
        match &kind {
            SubshiftKind::GapAtLeast { gap, threshold } => {
                if *gap == 0 {
                    return Err(Error::InvalidSpec("gap must be at least 1".into()));
                }
                if !threshold.is_positive() || *threshold > S::one() {
                    return Err(Error::InvalidSpec("threshold must lie in (0, 1]".into()));
                }
            }
            SubshiftKind::EitherOrAtLeast { .. } | SubshiftKind::EitherOrEquals { .. } => {}
            SubshiftKind::BinarySft { forbidden } => {
                if dim != 1 {
                    return Err(Error::InvalidSpec("binary shifts live in dimension 1".into()));
                }
                word_length(forbidden)?;
            }
        }
        Ok(Self { dim, kind })
    }

    /// X(N, m, δ).
    pub fn gap_space(dim: usize, gap: usize, threshold: S) -> Result<Self> {
        Self::new(dim, SubshiftKind::GapAtLeast { gap, threshold })
    }

    /// 𝒵: one of the two adjacent steps has length at least 1/2.
    pub fn curly_z() -> Self {
        Self { dim: 1, kind: SubshiftKind::EitherOrAtLeast { threshold: S::half() } }
    }

    /// 𝒴: one of the two adjacent steps is antipodal.
    pub fn curly_y() -> Self {
        Self { dim: 1, kind: SubshiftKind::EitherOrEquals { value: S::one() } }
    }

    /// Binary sequences with no three equal consecutive letters.
    pub fn no_triples() -> Self {
        Self { dim: 1, kind: SubshiftKind::BinarySft { forbidden: vec!["000".into(), "111".into()] } }
    }

    /// Offsets (relative to n) read by the constraint at n.
    fn offsets(&self) -> Vec<i64> {
        match &self.kind {
            SubshiftKind::GapAtLeast { gap, .. } => vec![0, *gap as i64],
            SubshiftKind::EitherOrAtLeast { .. } | SubshiftKind::EitherOrEquals { .. } => vec![-1, 0, 1],
            SubshiftKind::BinarySft { forbidden } => (0..forbidden[0].len() as i64).collect(),
        }
    }

    /// Evaluates the constraint at `n`, or `None` when it reads outside the point.
    fn evaluate(&self, x: &SeqPoint<S>, n: i64) -> Option<(bool, Option<S>)> {
        let offsets = self.offsets();
        let vals: Vec<&TorusVec<S>> = offsets.iter().map(|o| x.get(n + o)).collect::<Option<_>>()?;
        let dist = |a: &TorusVec<S>, b: &TorusVec<S>| rho_n(a, b).expect("dimensions checked");
        Some(match &self.kind {
            SubshiftKind::GapAtLeast { threshold, .. } => {
                let d = dist(vals[0], vals[1]);
                (d >= *threshold, Some(d))
            }
            SubshiftKind::EitherOrAtLeast { threshold } => {
                let (l, r) = (dist(vals[0], vals[1]), dist(vals[1], vals[2]));
                let ok = l >= *threshold || r >= *threshold;
                (ok, Some(l.max(r)))
            }
            SubshiftKind::EitherOrEquals { value } => {
                let (l, r) = (dist(vals[0], vals[1]), dist(vals[1], vals[2]));
                let ok = l == *value || r == *value;
                (ok, Some(l.max(r)))
            }
            SubshiftKind::BinarySft { forbidden } => {
                let letters: Option<String> = vals.iter().map(|v| binary_letter(v)).collect();
                let ok = match letters {
                    Some(word) => !forbidden.contains(&word),
                    None => false,
                };
                (ok, None)
            }
        })
    }

    /// Indices n at which the constraint can be evaluated on `x`.
    fn checkable_indices(&self, x: &SeqPoint<S>) -> std::ops::Range<i64> {
        match x {
            SeqPoint::Periodic { values } => 0..values.len() as i64,
            SeqPoint::Window { .. } => {
                let (a, b) = x.domain().expect("window");
                let offsets = self.offsets();
                let lo = a - offsets.iter().min().unwrap();
                let hi = b - offsets.iter().max().unwrap();
                lo..(hi + 1).max(lo)
            }
        }
    }

    fn check_dim(&self, x: &SeqPoint<S>) -> Result<()> {
        if self.dim == x.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() })
        }
    }

    /// Early-exit membership test; vacuous windows count as members.
    pub fn admits(&self, x: &SeqPoint<S>) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.checkable_indices(x).all(|n| self.evaluate(x, n).is_none_or(|(ok, _)| ok)))
    }
}

fn binary_letter<S: Scalar>(v: &TorusVec<S>) -> Option<char> {
    let c = v.coords()[0].value();
    if c.is_zero() {
        Some('0')
    } else if c.is_one() {
        Some('1')
    } else {
        None
    }
}

fn word_length(forbidden: &[String]) -> Result<usize> {
    let len = forbidden.first().map(String::len).ok_or(Error::UnequalWordLengths)?;
    if len < 2 || forbidden.iter().any(|w| w.len() != len) {
        return Err(Error::UnequalWordLengths);
    }
    if forbidden.iter().any(|w| w.chars().any(|c| c != '0' && c != '1')) {
        return Err(Error::InvalidSpec("forbidden words must be binary".into()));
    }
    Ok(len)
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ConstraintCheck<S: Scalar> {
    pub index: i64,
    pub ok: bool,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "opt_q"
    )]
    pub lhs: Option<S>,
}

mod opt_q {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::scalar::{parse_rational, Scalar};

    pub fn serialize<S: Scalar, Z: Serializer>(v: &Option<S>, ser: Z) -> Result<Z::Ok, Z::Error> {
        match v {
            Some(v) => ser.serialize_str(&v.to_fraction_string()),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> Result<Option<S>, D::Error> {
        Option::<String>::deserialize(de)?
            .map(|t| parse_rational(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MembershipReport<S: Scalar> {
    pub checks: Vec<ConstraintCheck<S>>,
    pub verdict: Verdict,
}

impl<S: Scalar> MembershipReport<S> {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn first_failure(&self) -> Option<&ConstraintCheck<S>> {
        self.checks.iter().find(|c| !c.ok)
    }
}

/// Evaluates the constraint at every checkable index of `x`.
///
/// For a periodic point every residue mod the period is checked; for a
/// window, every n whose referenced indices all lie inside the window. A
/// window too short for any check gets [`Verdict::Vacuous`].
pub fn check_membership<S: Scalar>(spec: &SubshiftSpec<S>, x: &SeqPoint<S>) -> Result<MembershipReport<S>> {
    spec.check_dim(x)?;
    let checks: Vec<ConstraintCheck<S>> = spec
        .checkable_indices(x)
        .filter_map(|n| spec.evaluate(x, n).map(|(ok, lhs)| ConstraintCheck { index: n, ok, lhs }))
        .collect();
    let verdict = if checks.is_empty() {
        Verdict::Vacuous
    } else if checks.iter().all(|c| c.ok) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(MembershipReport { checks, verdict })
}

pub fn random_torus_vec<S: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize, denom: i64) -> TorusVec<S> {
    TorusVec::new((0..dim).map(|_| TorusElem::from_ratio(rng.gen_range(0..2 * denom), denom)).collect())
        .expect("positive dimension")
}

/// Unconstrained window with coordinates drawn from `{0, 1/D, …, (2D−1)/D}`.
pub fn random_window<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    start: i64,
    len: usize,
    denom: i64,
) -> SeqPoint<S> {
    let values = (0..len).map(|_| random_torus_vec(rng, dim, denom)).collect();
    SeqPoint::window(start, values).expect("nonempty window")
}

/// Rejection-samples a period-`period` point of `spec`.
pub fn sample_periodic<S: Scalar, R: Rng + ?Sized>(
    spec: &SubshiftSpec<S>,
    period: usize,
    rng: &mut R,
    denom: i64,
    max_attempts: usize,
) -> Result<SeqPoint<S>> {
    for _ in 0..max_attempts {
        let values = (0..period).map(|_| random_torus_vec(rng, spec.dim, denom)).collect();
        let x = SeqPoint::periodic(values)?;
        if spec.admits(&x)? {
            return Ok(x);
        }
    }
    Err(Error::SamplingFailed { constraint: format!("{:?} with period {period}", spec.kind), attempts: max_attempts })
}

/// Draws a window of X(N, gap, δ) left to right.
///
/// Each value only interacts with the one `gap` places earlier, so drawing
/// `x_i` conditioned on `ρ_N(x_{i−gap}, x_i) ≥ δ` (by local rejection)
/// always yields a member of the subshift on the window.
#[allow(clippy::too_many_arguments)]
pub fn sample_gap_window<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    gap: usize,
    threshold: &S,
    start: i64,
    len: usize,
    denom: i64,
    max_attempts: usize,
) -> Result<SeqPoint<S>> {
    let mut values: Vec<TorusVec<S>> = Vec::with_capacity(len);
    for i in 0..len {
        let mut attempts = 0;
        let v = loop {
            let candidate = random_torus_vec(rng, dim, denom);
            let ok = i < gap || rho_n(&values[i - gap], &candidate)? >= *threshold;
            if ok {
                break candidate;
            }
            attempts += 1;
            if attempts >= max_attempts {
                return Err(Error::SamplingFailed {
                    constraint: format!("gap {gap} with threshold {}", threshold.to_fraction_string()),
                    attempts,
                });
            }
        };
        values.push(v);
    }
    SeqPoint::window(start, values)
}

/// Outcome of replaying the conjugacy diagram between gap m and gap 1 on
/// period-p points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramReport {
    pub p: u64,
    pub m: u64,
    /// Inverse of m modulo p.
    pub k: u64,
    pub samples: usize,
    pub suite: SuiteReport,
}

impl DiagramReport {
    pub fn passed(&self) -> bool {
        self.suite.passed()
    }
}

/// Replays, on random period-p points, the commuting square relating
/// `(P_p X(N,m,δ), σ^m)` and `(P_p X(N,1,δ), σ)` through `f_m` and `f_k`,
/// where `k·m ≡ 1 (mod p)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_conjugacy_diagram<S: Scalar>(
    dim: usize,
    m: u64,
    delta: &S,
    p: u64,
    samples: usize,
    seed: u64,
    denom: i64,
    max_attempts: usize,
) -> Result<DiagramReport> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p <= m {
        return Err(Error::DiagramRequiresPrimeAboveGap { p, m });
    }
    let k = mod_inverse(m as i64, p as i64).expect("p prime and p > m") as u64;
    let gap_m = SubshiftSpec::gap_space(dim, m as usize, delta.clone())?;
    let gap_1 = SubshiftSpec::gap_space(dim, 1, delta.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mi, ki) = (m as i64, k as i64);

    let mut into_gap1 = Checker::new("f_m maps into gap-1", "f_m(P_p X(N,m,δ)) ⊆ P_p X(N,1,δ)");
    let mut into_gapm = Checker::new("f_k maps into gap-m", "f_k(P_p X(N,1,δ)) ⊆ P_p X(N,m,δ)");
    let mut km_id = Checker::new("f_k∘f_m = id", "f_k∘f_m = id on period-p points");
    let mut mk_id = Checker::new("f_m∘f_k = id", "f_m∘f_k = id on period-p points");
    let mut square_m = Checker::new("σ∘f_m = f_m∘σ^m", "σ∘f_m = f_m∘σ^m");
    let mut square_k = Checker::new("f_k∘σ = σ^m∘f_k", "f_k∘σ = σ^m∘f_k");

    for _ in 0..samples {
        let x = sample_periodic(&gap_m, p as usize, &mut rng, denom, max_attempts)?;
        let y = sample_periodic(&gap_1, p as usize, &mut rng, denom, max_attempts)?;

        let fx = power_map(mi, &x)?;
        let fy = power_map(ki, &y)?;
        into_gap1.check(gap_1.admits(&fx)?, || json!({ "x": x, "f_m(x)": fx }));
        into_gapm.check(gap_m.admits(&fy)?, || json!({ "y": y, "f_k(y)": fy }));
        let back_x = power_map(ki, &fx)?;
        into_gapm.check(gap_m.admits(&back_x)?, || json!({ "x": x, "f_k(f_m(x))": back_x }));
        km_id.check(back_x == x, || json!({ "x": x, "f_k(f_m(x))": back_x }));
        let back_y = power_map(mi, &fy)?;
        mk_id.check(back_y == y, || json!({ "y": y, "f_m(f_k(y))": back_y }));

        let lhs = shift(&fx, 1);
        let rhs = power_map(mi, &shift(&x, mi))?;
        square_m.check(lhs == rhs, || json!({ "x": x, "lhs": lhs, "rhs": rhs }));
        let lhs = power_map(ki, &shift(&y, 1))?;
        let rhs = shift(&fy, mi);
        square_k.check(lhs == rhs, || json!({ "y": y, "lhs": lhs, "rhs": rhs }));
    }

    let mut suite = SuiteReport::default();
    for c in [into_gap1, into_gapm, km_id, mk_id, square_m, square_k] {
        suite.push(c.finish());
    }
    Ok(DiagramReport { p, m, k, samples, suite })
}

/// Number of circular binary words of length `n` with no forbidden word as a
/// circular factor: transfer-matrix trace for `n ≥ L−1`, enumeration below.
pub fn count_periodic_sft(forbidden: &[String], n: usize) -> Result<u128> {
    let len = word_length(forbidden)?;
    if n == 0 {
        return Err(Error::InvalidSpec("period must be at least 1".into()));
    }
    if n >= len - 1 {
        count_periodic_sft_transfer(forbidden, n)
    } else {
        count_periodic_sft_enumerate(forbidden, n)
    }
}

fn parse_words(forbidden: &[String]) -> Vec<u64> {
    forbidden.iter().map(|w| u64::from_str_radix(w, 2).expect("binary word")).collect()
}

/// `trace(A^n)` for the transfer matrix on (L−1)-blocks.
pub fn count_periodic_sft_transfer(forbidden: &[String], n: usize) -> Result<u128> {
    let len = word_length(forbidden)?;
    if len > 16 {
        return Err(Error::InvalidSpec("forbidden words longer than 16 letters".into()));
    }
    let words = parse_words(forbidden);
    let states = 1usize << (len - 1);
    let mask = states as u64 - 1;
    let mut step = vec![vec![0u128; states]; states];
    for (u, row) in step.iter_mut().enumerate() {
        for bit in 0..2u64 {
            let word = ((u as u64) << 1) | bit;
            if !words.contains(&word) {
                row[(word & mask) as usize] = 1;
            }
        }
    }
    let power = matrix_power(&step, n)?;
    power.iter().enumerate().try_fold(0u128, |acc, (i, row)| acc.checked_add(row[i]).ok_or(Error::Overflow))
}

/// Direct enumeration over all `2^n` circular words.
pub fn count_periodic_sft_enumerate(forbidden: &[String], n: usize) -> Result<u128> {
    let len = word_length(forbidden)?;
    if n > 30 {
        return Err(Error::InvalidSpec("enumeration limited to n ≤ 30".into()));
    }
    let words: Vec<Vec<u8>> = forbidden.iter().map(|w| w.bytes().map(|b| b - b'0').collect()).collect();
    let count = (0u64..1 << n)
        .filter(|&code| {
            let letter = |i: usize| ((code >> (i % n)) & 1) as u8;
            (0..n).all(|start| !words.iter().any(|w| (0..len).all(|j| letter(start + j) == w[j])))
        })
        .count();
    Ok(count as u128)
}

fn matrix_power(base: &[Vec<u128>], mut exp: usize) -> Result<Vec<Vec<u128>>> {
    let size = base.len();
    let mut result: Vec<Vec<u128>> = (0..size).map(|i| (0..size).map(|j| u128::from(i == j)).collect()).collect();
    let mut base = base.to_vec();
    while exp > 0 {
        if exp & 1 == 1 {
            result = matrix_mul(&result, &base)?;
        }
        exp >>= 1;
        if exp > 0 {
            base = matrix_mul(&base, &base)?;
        }
    }
    Ok(result)
}

fn matrix_mul(a: &[Vec<u128>], b: &[Vec<u128>]) -> Result<Vec<Vec<u128>>> {
    let size = a.len();
    let mut out = vec![vec![0u128; size]; size];
    for i in 0..size {
        for k in 0..size {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..size {
                let term = a[i][k].checked_mul(b[k][j]).ok_or(Error::Overflow)?;
                out[i][j] = out[i][j].checked_add(term).ok_or(Error::Overflow)?;
            }
        }
    }
    Ok(out)
}

/// The gap `2c/p` (with `c = ⌊p/2⌋`) realised by [`periodic_witness`], as a ρ value.
pub fn witness_gap<S: Scalar>(p: u64) -> S {
    if p == 2 {
        S::one()
    } else {
        S::one() - S::ratio(1, p as i64)
    }
}

/// An explicit period-p point of X(N, m, δ).
///
/// `x_n = (2·n·c·m⁻¹ / p mod 2)·(1, …, 1)` with `c = ⌊p/2⌋`, so that
/// `x_{n+m} − x_n = 2c/p` in every coordinate.
pub fn periodic_witness<S: Scalar>(dim: usize, m: u64, delta: &S, p: u64) -> Result<SeqPoint<S>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if m == 0 {
        return Err(Error::InvalidSpec("gap must be at least 1".into()));
    }
    if m.is_multiple_of(p) {
        return Err(Error::PrimeDividesGap { p, gap: m });
    }
    let best: S = witness_gap(p);
    if best < *delta {
        return Err(Error::WitnessInsufficient { best: best.to_fraction_string(), delta: delta.to_fraction_string() });
    }
    let c = (p / 2) as i64;
    let inv = mod_inverse((m % p) as i64, p as i64).expect("p prime and p ∤ m");
    let step = TorusElem::<S>::from_ratio(2 * c * inv, p as i64);
    let values = (0..p as i64).map(|n| TorusVec::splat(step.times(n), dim)).collect();
    let x = SeqPoint::periodic(values)?;
    debug_assert!(SubshiftSpec::gap_space(dim, m as usize, delta.clone())?.admits(&x)?);
    Ok(x)
}
