//! Cover combinatorics on finite open lattices and interval bounds for mean
//! dimension.
//!
//! Opens are bitmasks over at most 64 atoms. `D(c)` is the least order of a
//! cover by lattice opens refining `c`; it is computed exactly by
//! backtracking, which is only feasible on small lattices.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::complex::FreeZpComplex;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default node budget for [`cover_d`].
pub const COVER_D_CAP: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct OpenLattice {
    atoms: Vec<String>,
    opens: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    atoms: Vec<String>,
    opens: Vec<Vec<usize>>,
}

impl TryFrom<LatticeRepr> for OpenLattice {
    type Error = Error;
    fn try_from(r: LatticeRepr) -> Result<Self> {
        let opens = r.opens.iter().map(|o| to_mask(o, r.atoms.len())).collect::<Result<Vec<_>>>()?;
        OpenLattice::new(r.atoms, opens)
    }
}

impl From<OpenLattice> for LatticeRepr {
    fn from(l: OpenLattice) -> Self {
        let opens = l.opens.iter().map(|&m| from_mask(m)).collect();
        LatticeRepr { atoms: l.atoms, opens }
    }
}

fn to_mask(indices: &[usize], n: usize) -> Result<u64> {
    indices.iter().try_fold(0u64, |m, &i| {
        if i >= n {
            Err(Error::InvalidLattice(format!("atom index {i} out of range")))
        } else {
            Ok(m | 1 << i)
        }
    })
}

fn from_mask(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

impl OpenLattice {
    /// Validates that the opens contain ∅ and the ground set and are closed
    /// under ∪ and ∩.
    pub fn new(atoms: Vec<String>, opens: Vec<u64>) -> Result<Self> {
        let n = atoms.len();
        if n > 64 {
            return Err(Error::InvalidLattice(format!("{n} atoms; at most 64 supported")));
        }
        let full = full_mask(n);
        let set: BTreeSet<u64> = opens.into_iter().collect();
        if set.iter().any(|&o| o & !full != 0) {
            return Err(Error::InvalidLattice("open mentions an unknown atom".into()));
        }
        if !set.contains(&0) || !set.contains(&full) {
            return Err(Error::InvalidLattice("opens must contain ∅ and the ground set".into()));
        }
        for &a in &set {
            for &b in &set {
                if !set.contains(&(a | b)) || !set.contains(&(a & b)) {
                    return Err(Error::InvalidLattice(format!(
                        "not closed under ∪/∩: {:?}, {:?}",
                        from_mask(a),
                        from_mask(b)
                    )));
                }
            }
        }
        Ok(Self { atoms, opens: set.into_iter().collect() })
    }

    /// Atoms `v0, e, v1` with opens `∅, {e}, {v0,e}, {v1,e}`, all: the
    /// face-poset topology of a closed interval.
    pub fn interval_model() -> Self {
        Self::new(vec!["v0".into(), "e".into(), "v1".into()], vec![0, 0b010, 0b011, 0b110, 0b111]).expect("valid")
    }

    /// Every subset open.
    pub fn discrete(n: usize) -> Result<Self> {
        if n > 16 {
            return Err(Error::InvalidLattice("discrete lattice above 16 atoms".into()));
        }
        Self::new((0..n).map(|i| format!("a{i}")).collect(), (0..1u64 << n).collect())
    }

    /// Face poset of a complex with its up-set (Alexandrov) topology; each
    /// simplex is an atom and the opens are unions of open stars.
    pub fn face_poset(k: &FreeZpComplex, max_opens: usize) -> Result<Self> {
        let simplices: Vec<&Vec<usize>> = k.simplices().collect();
        let n = simplices.len();
        if n > 64 {
            return Err(Error::InvalidLattice(format!("{n} simplices; at most 64 supported")));
        }
        let stars: Vec<u64> = simplices
            .iter()
            .map(|s| {
                simplices
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| s.iter().all(|v| t.binary_search(v).is_ok()))
                    .fold(0u64, |m, (i, _)| m | 1 << i)
            })
            .collect();
        let mut opens: BTreeSet<u64> = BTreeSet::from([0]);
        for star in stars {
            let grown: Vec<u64> = opens.iter().map(|&o| o | star).collect();
            opens.extend(grown);
            if opens.len() > max_opens {
                return Err(Error::EnumerationCap { count: opens.len() as u128, cap: max_opens as u128 });
            }
        }
        let atoms = simplices.iter().map(|s| format!("{s:?}")).collect();
        Self::new(atoms, opens.into_iter().collect())
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn opens(&self) -> &[u64] {
        &self.opens
    }

    pub fn ground(&self) -> u64 {
        full_mask(self.atoms.len())
    }

    pub fn is_open(&self, mask: u64) -> bool {
        self.opens.binary_search(&mask).is_ok()
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A finite cover of the ground set by opens of one lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    ground: u64,
    members: Vec<u64>,
}

impl Cover {
    pub fn new(lattice: &OpenLattice, members: Vec<u64>) -> Result<Self> {
        if let Some(m) = members.iter().find(|&&m| !lattice.is_open(m)) {
            return Err(Error::InvalidCover(format!("{:?} is not open", from_mask(*m))));
        }
        let union = members.iter().fold(0, |a, m| a | m);
        if union != lattice.ground() {
            return Err(Error::InvalidCover("members do not cover the ground set".into()));
        }
        Ok(Self { ground: lattice.ground(), members })
    }

    pub fn from_indices(lattice: &OpenLattice, members: &[Vec<usize>]) -> Result<Self> {
        let n = lattice.atoms.len();
        let masks = members.iter().map(|m| to_mask(m, n)).collect::<Result<Vec<_>>>()?;
        Self::new(lattice, masks)
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn member_indices(&self) -> Vec<Vec<usize>> {
        self.members.iter().map(|&m| from_mask(m)).collect()
    }

    /// True if every member lies inside some member of `coarser`.
    pub fn refines(&self, coarser: &Cover) -> bool {
        self.members.iter().all(|&b| coarser.members.iter().any(|&a| b & !a == 0))
    }
}

/// `ord(c) = max_x #{U ∈ c : x ∈ U} − 1`.
pub fn cover_ord(c: &Cover) -> i64 {
    ord_of(c.ground, &c.members)
}

fn ord_of(ground: u64, members: &[u64]) -> i64 {
    from_mask(ground).iter().map(|&i| members.iter().filter(|&&m| m >> i & 1 == 1).count() as i64).max().unwrap_or(0) - 1
}

/// `{U ∩ V : U ∈ a, V ∈ b}` with empty and repeated members dropped.
pub fn cover_join(lattice: &OpenLattice, a: &Cover, b: &Cover) -> Result<Cover> {
    if a.ground != lattice.ground() || b.ground != lattice.ground() {
        return Err(Error::InvalidCover("covers come from different lattices".into()));
    }
    let mut members = Vec::new();
    for &u in &a.members {
        for &v in &b.members {
            let w = u & v;
            if w != 0 && !members.contains(&w) {
                members.push(w);
            }
        }
    }
    Cover::new(lattice, members)
}

/// Result of the `D` search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DResult {
    /// Best order found.
    pub upper: i64,
    /// Equal to `upper` when the search finished.
    pub lower: i64,
    pub exact: bool,
    pub explored: u64,
    /// A refining cover attaining `upper`, as atom index lists.
    pub witness: Vec<Vec<usize>>,
}

struct DSearch<'a> {
    ground: u64,
    n: usize,
    candidates: &'a [u64],
    counts: Vec<i64>,
    chosen: Vec<u64>,
    best: i64,
    best_cover: Vec<u64>,
    explored: u64,
    cap: u64,
}

impl DSearch<'_> {
    /// Picks the first uncovered atom and branches over candidates containing
    /// it. Any refining cover contains a subcover reached this way, so the
    /// minimum is exact.
    fn run(&mut self, covered: u64, current: i64) -> bool {
        self.explored += 1;
        if self.explored > self.cap {
            return false;
        }
        if current >= self.best {
            return true;
        }
        if covered == self.ground {
            self.best = current;
            self.best_cover = self.chosen.clone();
            return true;
        }
        let atom = (!covered & self.ground).trailing_zeros() as usize;
        for &c in self.candidates {
            if c >> atom & 1 == 0 {
                continue;
            }
            let mut peak = current;
            for i in 0..self.n {
                if c >> i & 1 == 1 {
                    self.counts[i] += 1;
                    peak = peak.max(self.counts[i] - 1);
                }
            }
            self.chosen.push(c);
            let go = self.run(covered | c, peak);
            self.chosen.pop();
            for i in 0..self.n {
                if c >> i & 1 == 1 {
                    self.counts[i] -= 1;
                }
            }
            if !go {
                return false;
            }
        }
        true
    }
}

/// Nonempty opens lying inside some member of `c`, maximal ones first.
fn refining_candidates(lattice: &OpenLattice, c: &Cover) -> Vec<u64> {
    let mut cands: Vec<u64> =
        lattice.opens.iter().copied().filter(|&o| o != 0 && c.members.iter().any(|&m| o & !m == 0)).collect();
    cands.sort_by_key(|o| std::cmp::Reverse(o.count_ones()));
    cands
}

/// Search for `D(c)`, returning whatever was established within `cap` nodes.
pub fn cover_d_bounds(lattice: &OpenLattice, c: &Cover, cap: u64) -> Result<DResult> {
    if c.ground != lattice.ground() || c.members.iter().any(|&m| !lattice.is_open(m)) {
        return Err(Error::InvalidCover("cover does not belong to this lattice".into()));
    }
    let candidates = refining_candidates(lattice, c);
    let mut search = DSearch {
        ground: lattice.ground(),
        n: lattice.atoms.len(),
        candidates: &candidates,
        counts: vec![0; lattice.atoms.len()],
        chosen: vec![],
        // c itself refines c
        best: cover_ord(c),
        best_cover: c.members.clone(),
        explored: 0,
        cap,
    };
    let finished = search.run(0, -1);
    let best = search.best;
    Ok(DResult {
        upper: best,
        lower: if finished { best } else { 0 },
        exact: finished,
        explored: search.explored,
        witness: search.best_cover.iter().map(|&m| from_mask(m)).collect(),
    })
}

/// Exact `D(c) = min{ord(b) : b refines c}`; errors when the search budget runs out.
pub fn cover_d(lattice: &OpenLattice, c: &Cover, cap: u64) -> Result<i64> {
    let r = cover_d_bounds(lattice, c, cap)?;
    if r.exact {
        Ok(r.upper)
    } else {
        Err(Error::EnumerationCap { count: r.explored as u128, cap: cap as u128 })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdimStep {
    pub rule: String,
    /// The fact the step relies on.
    pub statement: String,
    pub inputs: Vec<String>,
}

/// Interval `[lower, upper]` for a mean dimension; `None` is +∞.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MdimBound<S: Scalar> {
    #[serde(with = "crate::scalar::serde_q")]
    pub lower: S,
    #[serde(with = "crate::scalar::serde_q_or_inf")]
    pub upper: Option<S>,
    pub provenance: Vec<MdimStep>,
}

impl<S: Scalar> MdimBound<S> {
    pub fn new(lower: S, upper: Option<S>) -> Result<Self> {
        let b = Self { lower, upper, provenance: vec![] };
        b.check("input")?;
        Ok(b)
    }

    pub fn unknown() -> Self {
        Self { lower: S::zero(), upper: None, provenance: vec![] }
    }

    fn check(&self, rule: &str) -> Result<()> {
        if self.lower.is_negative() || self.upper.as_ref().is_some_and(|u| *u < self.lower) {
            return Err(Error::BoundRule { rule: rule.into(), reason: format!("inverted interval {self}") });
        }
        Ok(())
    }

    pub fn contains(&self, x: &S) -> bool {
        self.lower <= *x && self.upper.as_ref().is_none_or(|u| x <= u)
    }
}

impl<S: Scalar> std::fmt::Display for MdimBound<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let upper = self.upper.as_ref().map_or("+inf".to_string(), Scalar::to_fraction_string);
        write!(f, "[{}, {upper}]", self.lower.to_fraction_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MdimRule {
    /// `mdim(Y, σ) ≤ mdim((S^N)^ℤ, σ) ≤ N` for a subshift Y; no inputs.
    AmbientShift { n: u64 },
    /// A subsystem has no larger mean dimension; input `[X]`.
    Subsystem,
    /// `mdim(X, T^n) = n·mdim(X, T)`; input `[X]`.
    Power { n: u64 },
    /// An inverse limit has mean dimension at most the supremum over levels; inputs `[X_1, …]`.
    InverseLimit,
    /// `mdim(X × ℤ_n, T_n) = mdim(X, T)/n`; input `[X]`.
    TimeDivision { n: u64 },
}

fn want<S: Scalar>(rule: &str, inputs: &[MdimBound<S>], n: usize) -> Result<()> {
    if inputs.len() != n {
        return Err(Error::Arity(format!("{rule} takes {n} input bounds, got {}", inputs.len())));
    }
    Ok(())
}

fn positive(rule: &str, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::BoundRule { rule: rule.into(), reason: "n must be >= 1".into() });
    }
    Ok(())
}

/// Applies one rule with exact interval arithmetic, chaining provenance.
pub fn mdim_combine<S: Scalar>(rule: &MdimRule, inputs: &[MdimBound<S>]) -> Result<MdimBound<S>> {
    let labels: Vec<String> = inputs.iter().map(ToString::to_string).collect();
    let (name, statement, lower, upper) = match rule {
        MdimRule::AmbientShift { n } => {
            want("ambient_shift", inputs, 0)?;
            ("ambient_shift", "mdim(Y, σ) ≤ mdim(((S)^N)^ℤ, σ) ≤ N for a subshift Y", S::zero(), Some(S::from_int(*n as i64)))
        }
        MdimRule::Subsystem => {
            want("subsystem", inputs, 1)?;
            ("subsystem", "mdim(Y, T) ≤ mdim(X, T) for a subsystem Y ⊂ X", S::zero(), inputs[0].upper.clone())
        }
        MdimRule::Power { n } => {
            want("power", inputs, 1)?;
            positive("power", *n)?;
            let k = S::from_int(*n as i64);
            let b = &inputs[0];
            ("power", "mdim(X, T^n) = n·mdim(X, T)", b.lower.clone() * k.clone(), b.upper.clone().map(|u| u * k))
        }
        MdimRule::InverseLimit => {
            if inputs.is_empty() {
                return Err(Error::Arity("inverse_limit needs at least one level".into()));
            }
            let upper = inputs.iter().map(|b| b.upper.clone()).collect::<Option<Vec<S>>>().and_then(|u| u.into_iter().max());
            ("inverse_limit", "mdim(lim (X_n, T_n)) ≤ sup_n mdim(X_n, T_n)", S::zero(), upper)
        }
        MdimRule::TimeDivision { n } => {
            want("time_division", inputs, 1)?;
            positive("time_division", *n)?;
            let k = S::from_int(*n as i64);
            let b = &inputs[0];
            ("time_division", "mdim(X × Z_n, T_n) = mdim(X, T)/n", b.lower.clone() / k.clone(), b.upper.clone().map(|u| u / k))
        }
    };
    let mut provenance: Vec<MdimStep> = inputs.iter().flat_map(|b| b.provenance.iter().cloned()).collect();
    provenance.push(MdimStep { rule: name.into(), statement: statement.into(), inputs: labels });
    let out = MdimBound { lower, upper, provenance };
    out.check(name)?;
    Ok(out)
}

/// `AmbientShift(N)` at each of `levels` tower levels, then `InverseLimit`,
/// then `TimeDivision(n)`.
pub fn headline_pipeline<S: Scalar>(dim: u64, levels: usize, n: u64) -> Result<MdimBound<S>> {
    let per_level = (0..levels.max(1))
        .map(|_| mdim_combine::<S>(&MdimRule::AmbientShift { n: dim }, &[]))
        .collect::<Result<Vec<_>>>()?;
    let limit = mdim_combine(&MdimRule::InverseLimit, &per_level)?;
    mdim_combine(&MdimRule::TimeDivision { n }, &[limit])
}

/// Smallest useful division `n = ⌊N/η⌋ + 1`, which gives `N/n < η`.
pub fn choose_time_division<S: Scalar>(dim: u64, eta: &S) -> Result<u64> {
    if !eta.is_positive() {
        return Err(Error::BoundRule { rule: "time_division".into(), reason: "η must be positive".into() });
    }
    let q = (S::from_int(dim as i64) / eta.clone()).floor();
    q.to_string()
        .parse::<u64>()
        .ok()
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Q = BigRational;

    fn brute_d(lattice: &OpenLattice, c: &Cover) -> i64 {
        let cands: Vec<u64> = lattice.opens().iter().copied().filter(|&o| o != 0 && c.members().iter().any(|&m| o & !m == 0)).collect();
        assert!(cands.len() <= 16);
        (1u32..1 << cands.len())
            .filter_map(|mask| {
                let fam: Vec<u64> = (0..cands.len()).filter(|i| mask >> i & 1 == 1).map(|i| cands[i]).collect();
                (fam.iter().fold(0, |a, m| a | m) == lattice.ground()).then(|| ord_of(lattice.ground(), &fam))
            })
            .min()
            .unwrap()
    }

    fn random_cover<R: Rng>(rng: &mut R, lattice: &OpenLattice) -> Cover {
        loop {
            let k = rng.gen_range(1..=4);
            let members: Vec<u64> = (0..k).map(|_| lattice.opens()[rng.gen_range(1..lattice.opens().len())]).collect();
            if let Ok(c) = Cover::new(lattice, members) {
                return c;
            }
        }
    }

    #[test]
    fn ord_examples() {
        let l = OpenLattice::discrete(3).unwrap();
        assert_eq!(cover_ord(&Cover::new(&l, vec![0b001, 0b010, 0b100]).unwrap()), 0);
        assert_eq!(cover_ord(&Cover::new(&l, vec![0b111, 0b111]).unwrap()), 1);
        let i = OpenLattice::interval_model();
        let c = Cover::from_indices(&i, &[vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(cover_ord(&c), 1);
    }

    #[test]
    fn join_examples() {
        let i = OpenLattice::interval_model();
        let c = Cover::from_indices(&i, &[vec![0, 1], vec![1, 2]]).unwrap();
        let trivial = Cover::new(&i, vec![i.ground()]).unwrap();
        assert_eq!(cover_join(&i, &c, &trivial).unwrap(), c);
        let j = cover_join(&i, &c, &c).unwrap();
        assert_eq!(j.member_indices(), vec![vec![0, 1], vec![1], vec![1, 2]]);
        assert_eq!(cover_ord(&j), 2);
        let l = OpenLattice::discrete(3).unwrap();
        let part = Cover::new(&l, vec![0b001, 0b110]).unwrap();
        assert_eq!(cover_join(&l, &part, &part).unwrap(), part);
    }

    #[test]
    fn d_examples() {
        let i = OpenLattice::interval_model();
        let c = Cover::from_indices(&i, &[vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(cover_d(&i, &c, COVER_D_CAP).unwrap(), 1);
        let trivial = Cover::new(&i, vec![i.ground()]).unwrap();
        assert_eq!(cover_d(&i, &trivial, COVER_D_CAP).unwrap(), 0);
        let l = OpenLattice::discrete(4).unwrap();
        let c = Cover::new(&l, vec![0b0111, 0b1110, 0b1111]).unwrap();
        assert_eq!(cover_d(&l, &c, COVER_D_CAP).unwrap(), 0);
        let r = cover_d_bounds(&l, &c, 1).unwrap();
        assert!(!r.exact && r.lower == 0);
        assert!(cover_d(&l, &c, 1).is_err());
    }

    #[test]
    fn d_matches_brute_force_and_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let circle = crate::complex::build_en_zp(2, 1).unwrap();
        let lattices = [OpenLattice::interval_model(), OpenLattice::discrete(3).unwrap(), OpenLattice::face_poset(&circle, 4096).unwrap()];
        for l in &lattices {
            for _ in 0..40 {
                let a = random_cover(&mut rng, l);
                let b = random_cover(&mut rng, l);
                let da = cover_d(l, &a, COVER_D_CAP).unwrap();
                let db = cover_d(l, &b, COVER_D_CAP).unwrap();
                if refining_candidates(l, &a).len() <= 16 {
                    assert_eq!(da, brute_d(l, &a));
                }
                assert!(da <= cover_ord(&a));
                let ab = cover_join(l, &a, &b).unwrap();
                let dab = cover_d(l, &ab, COVER_D_CAP).unwrap();
                assert!(dab <= da + db);
                assert!(ab.refines(&a));
                assert!(dab >= da);
            }
        }
    }

    #[test]
    fn face_poset_of_circle() {
        let circle = crate::complex::build_en_zp(2, 1).unwrap();
        let l = OpenLattice::face_poset(&circle, 4096).unwrap();
        assert_eq!(l.atoms().len(), 8);
        // the vertex stars cover; each edge lies in exactly two of them
        let stars: Vec<u64> = (0..8)
            .filter(|&i| l.atoms()[i].matches(',').count() == 0)
            .map(|i| *l.opens().iter().filter(|&&o| o >> i & 1 == 1).min_by_key(|o| o.count_ones()).unwrap())
            .collect();
        let c = Cover::new(&l, stars).unwrap();
        assert_eq!(cover_ord(&c), 1);
        assert_eq!(cover_d(&l, &c, COVER_D_CAP).unwrap(), 1);
    }

    #[test]
    fn lattice_validation() {
        assert!(OpenLattice::new(vec!["a".into(), "b".into()], vec![0, 1, 2]).is_err());
        assert!(OpenLattice::new(vec!["a".into(), "b".into()], vec![0, 1, 3]).is_ok());
        let json = serde_json::to_string(&OpenLattice::interval_model()).unwrap();
        let back: OpenLattice = serde_json::from_str(&json).unwrap();
        assert_eq!(back, OpenLattice::interval_model());
        let i = OpenLattice::interval_model();
        assert!(Cover::new(&i, vec![0b001, 0b110]).is_err());
        assert!(Cover::new(&i, vec![0b011]).is_err());
    }

    #[test]
    fn combine_examples() {
        let q = |n, d| Q::ratio(n, d);
        let amb = mdim_combine::<Q>(&MdimRule::AmbientShift { n: 3 }, &[]).unwrap();
        let td = mdim_combine(&MdimRule::TimeDivision { n: 4 }, std::slice::from_ref(&amb)).unwrap();
        assert_eq!((td.lower.clone(), td.upper.clone()), (q(0, 1), Some(q(3, 4))));
        let lim = mdim_combine(&MdimRule::InverseLimit, &[amb.clone(), amb.clone(), amb.clone()]).unwrap();
        assert_eq!(lim.upper, Some(q(3, 1)));
        let b = MdimBound::new(q(1, 2), Some(q(2, 1))).unwrap();
        let same = mdim_combine(&MdimRule::Power { n: 1 }, std::slice::from_ref(&b)).unwrap();
        assert_eq!((same.lower, same.upper), (b.lower.clone(), b.upper.clone()));
        let sub = mdim_combine(&MdimRule::Subsystem, std::slice::from_ref(&b)).unwrap();
        assert_eq!(sub.lower, q(0, 1));
        let lim = mdim_combine(&MdimRule::InverseLimit, &[b.clone(), MdimBound::unknown()]).unwrap();
        assert_eq!(lim.upper, None);
        assert!(mdim_combine::<Q>(&MdimRule::Subsystem, &[]).is_err());
        assert!(mdim_combine(&MdimRule::TimeDivision { n: 0 }, &[b]).is_err());
        assert!(MdimBound::new(q(2, 1), Some(q(1, 1))).is_err());
        assert_eq!(td.provenance.len(), 2);
        let json = serde_json::to_value(&td).unwrap();
        assert_eq!(json["upper"], "3/4");
        assert_eq!(json["provenance"][1]["rule"], "time_division");
    }

    #[test]
    fn headline_arithmetic() {
        let q = |n, d| Q::ratio(n, d);
        for dim in 1..6u64 {
            for n in 1..10u64 {
                let b = headline_pipeline::<Q>(dim, 3, n).unwrap();
                assert_eq!(b.upper, Some(q(dim as i64, n as i64)));
            }
            for eta in [q(1, 1), q(1, 3), q(2, 7), q(5, 2)] {
                let n = choose_time_division(dim, &eta).unwrap();
                assert!(q(dim as i64, n as i64) < eta);
                if n > 1 {
                    assert!(q(dim as i64, n as i64 - 1) >= eta);
                }
            }
        }
        assert!(choose_time_division::<Q>(3, &q(0, 1)).is_err());
    }
}
