//! Finite simplicial complexes with a simplicial ℤ_p action: joins, the
//! standard `E_nℤ_p` models, integral homology, equivariant map search and
//! sound interval bounds for the ℤ_p-coindex.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::is_prime;
use crate::error::{Error, Result};

/// A finite simplicial complex with a vertex permutation of order dividing p.
///
/// Simplices are stored as sorted vertex lists and the family is closed
/// under taking nonempty faces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ComplexRepr", into = "ComplexRepr")]
pub struct FreeZpComplex {
    p: u64,
    vertices: Vec<String>,
    simplices: BTreeSet<Vec<usize>>,
    action: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ComplexRepr {
    p: u64,
    vertices: Vec<String>,
    simplices: Vec<Vec<usize>>,
    action: Vec<usize>,
}

impl TryFrom<ComplexRepr> for FreeZpComplex {
    type Error = Error;
    fn try_from(r: ComplexRepr) -> Result<Self> {
        FreeZpComplex::new(r.p, r.vertices, r.simplices, r.action)
    }
}

impl From<FreeZpComplex> for ComplexRepr {
    fn from(k: FreeZpComplex) -> Self {
        let simplices = k.maximal_simplices();
        ComplexRepr { p: k.p, vertices: k.vertices, simplices, action: k.action }
    }
}

fn apply_perm(perm: &[usize], simplex: &[usize]) -> Vec<usize> {
    let mut image: Vec<usize> = simplex.iter().map(|&v| perm[v]).collect();
    image.sort_unstable();
    image
}

impl FreeZpComplex {
    /// Builds a complex from generating faces (maximal faces suffice).
    pub fn new(p: u64, vertices: Vec<String>, faces: Vec<Vec<usize>>, action: Vec<usize>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let n = vertices.len();
        if action.len() != n {
            return Err(Error::InvalidComplex(format!("action has {} entries for {n} vertices", action.len())));
        }
        let mut seen = vec![false; n];
        for &v in &action {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidComplex("action is not a permutation".into()));
            }
        }
        let mut simplices = BTreeSet::new();
        for v in 0..n {
            simplices.insert(vec![v]);
        }
        for face in faces {
            let mut face = face;
            face.sort_unstable();
            if face.windows(2).any(|w| w[0] == w[1]) || face.iter().any(|&v| v >= n) {
                return Err(Error::InvalidComplex(format!("bad face {face:?}")));
            }
            if face.len() > 20 {
                return Err(Error::InvalidComplex("faces above dimension 19 are not supported".into()));
            }
            for mask in 1u32..(1 << face.len()) {
                let sub: Vec<usize> = face.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect();
                simplices.insert(sub);
            }
        }
        let k = Self { p, vertices, simplices, action };
        if (0..n).any(|v| k.act(k.p, v) != v) {
            return Err(Error::InvalidComplex(format!("action^{p} is not the identity")));
        }
        if let Some(s) = k.simplices.iter().find(|s| !k.simplices.contains(&apply_perm(&k.action, s))) {
            return Err(Error::NotSimplicial(format!("image of {s:?} is not a simplex")));
        }
        Ok(k)
    }

    pub fn empty(p: u64) -> Result<Self> {
        Self::new(p, vec![], vec![], vec![])
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn action(&self) -> &[usize] {
        &self.action
    }

    pub fn simplices(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.simplices.iter()
    }

    pub fn num_simplices(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, simplex: &[usize]) -> bool {
        self.simplices.contains(simplex)
    }

    /// Dimension; `-1` for the empty complex.
    pub fn dim(&self) -> i64 {
        self.simplices.iter().map(|s| s.len() as i64 - 1).max().unwrap_or(-1)
    }

    pub fn simplices_of_dim(&self, k: usize) -> Vec<Vec<usize>> {
        self.simplices.iter().filter(|s| s.len() == k + 1).cloned().collect()
    }

    pub fn maximal_simplices(&self) -> Vec<Vec<usize>> {
        self.simplices
            .iter()
            .filter(|s| {
                !self
                    .simplices
                    .iter()
                    .any(|t| t.len() == s.len() + 1 && s.iter().all(|v| t.binary_search(v).is_ok()))
            })
            .cloned()
            .collect()
    }

    /// `g^times` applied to a vertex.
    pub fn act(&self, times: u64, v: usize) -> usize {
        (0..times).fold(v, |v, _| self.action[v])
    }

    pub fn act_simplex(&self, times: u64, simplex: &[usize]) -> Vec<usize> {
        let mut image: Vec<usize> = simplex.iter().map(|&v| self.act(times, v)).collect();
        image.sort_unstable();
        image
    }

    /// Vertex orbits, each listed as `[r, g·r, g²·r, …]` until it closes.
    pub fn vertex_orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.vertices.len()];
        let mut orbits = Vec::new();
        for r in 0..self.vertices.len() {
            if seen[r] {
                continue;
            }
            let mut orbit = vec![r];
            seen[r] = true;
            let mut v = self.action[r];
            while v != r {
                seen[v] = true;
                orbit.push(v);
                v = self.action[v];
            }
            orbits.push(orbit);
        }
        orbits
    }

    /// Euler characteristic from simplex counts (0 for the empty complex).
    pub fn euler_characteristic(&self) -> i64 {
        self.simplices.iter().map(|s| if s.len() % 2 == 1 { 1 } else { -1 }).sum()
    }
}

/// True iff no non-identity power of the action fixes a simplex setwise.
pub fn check_free_action(k: &FreeZpComplex) -> bool {
    k.simplices.iter().all(|s| (1..k.p).all(|g| k.act_simplex(g, s) != *s))
}

/// `E_nℤ_p` as the (n+1)-fold join of the free orbit ℤ_p.
///
/// Vertex `(a, j)` (element a at join level j) has index `j·p + a`; a simplex
/// picks at most one vertex per level; the generator adds 1 to `a`.
pub fn build_en_zp(p: u64, n: usize) -> Result<FreeZpComplex> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let pu = p as usize;
    let levels = n + 1;
    let vertices = (0..levels).flat_map(|j| (0..pu).map(move |a| format!("{a}@{j}"))).collect();
    let action = (0..levels).flat_map(|j| (0..pu).map(move |a| j * pu + (a + 1) % pu)).collect();
    // maximal faces: one vertex on every level
    let mut faces = Vec::new();
    let total = pu.checked_pow(levels as u32).ok_or_else(|| Error::InvalidComplex("E_nZ_p too large".into()))?;
    for code in 0..total {
        let mut c = code;
        let face = (0..levels)
            .map(|j| {
                let a = c % pu;
                c /= pu;
                j * pu + a
            })
            .collect();
        faces.push(face);
    }
    FreeZpComplex::new(p, vertices, faces, action)
}

/// Simplicial join with the diagonal action.
pub fn join(k: &FreeZpComplex, l: &FreeZpComplex) -> Result<FreeZpComplex> {
    if k.p != l.p {
        return Err(Error::PrimeMismatch(k.p, l.p));
    }
    if l.is_empty() {
        return Ok(k.clone());
    }
    if k.is_empty() {
        return Ok(l.clone());
    }
    let offset = k.vertices.len();
    let left_names: HashSet<&String> = k.vertices.iter().collect();
    let mut vertices = k.vertices.clone();
    vertices.extend(l.vertices.iter().map(|v| if left_names.contains(v) { format!("{v}'") } else { v.clone() }));
    let action = k.action.iter().copied().chain(l.action.iter().map(|&v| v + offset)).collect();
    let mut faces = Vec::new();
    for s in k.maximal_simplices() {
        for t in l.maximal_simplices() {
            faces.push(s.iter().copied().chain(t.iter().map(|&v| v + offset)).collect());
        }
    }
    FreeZpComplex::new(k.p, vertices, faces, action)
}

/// A finitely generated abelian group `ℤ^rank ⊕ ⊕ ℤ/t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyGroup {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl HomologyGroup {
    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

/// Nonzero invariant factors (absolute values, in order) of an integer matrix.
pub fn smith_invariants<I>(mut mat: Vec<Vec<I>>) -> Vec<I>
where
    I: Integer + Signed + Clone,
{
    let rows = mat.len();
    let cols = mat.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        // smallest nonzero entry of the trailing block as pivot
        let Some((pr, pc)) = smallest_entry(&mat, t) else { break };
        mat.swap(t, pr);
        for row in mat.iter_mut() {
            row.swap(t, pc);
        }
        loop {
            let mut changed = false;
            for i in t + 1..rows {
                if mat[i][t].is_zero() {
                    continue;
                }
                let f = mat[i][t].div_floor(&mat[t][t]);
                for j in t..cols {
                    let sub = f.clone() * mat[t][j].clone();
                    mat[i][j] = mat[i][j].clone() - sub;
                }
                if !mat[i][t].is_zero() {
                    changed = true;
                }
            }
            for j in t + 1..cols {
                if mat[t][j].is_zero() {
                    continue;
                }
                let f = mat[t][j].div_floor(&mat[t][t]);
                for row in mat.iter_mut().skip(t) {
                    let sub = f.clone() * row[t].clone();
                    row[j] = row[j].clone() - sub;
                }
                if !mat[t][j].is_zero() {
                    changed = true;
                }
            }
            if changed {
                let (pr, pc) = smallest_in_cross(&mat, t);
                mat.swap(t, pr);
                for row in mat.iter_mut() {
                    row.swap(t, pc);
                }
                continue;
            }
            // pivot must divide the whole trailing block
            let bad = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !mat[i][j].is_multiple_of(&mat[t][t]));
            match bad {
                Some((i, _)) => {
                    for j in t..cols {
                        let add = mat[i][j].clone();
                        mat[t][j] = mat[t][j].clone() + add;
                    }
                }
                None => break,
            }
        }
        diag.push(mat[t][t].abs());
    }
    diag
}

fn smallest_entry<I: Integer + Signed + Clone>(mat: &[Vec<I>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in mat.iter().enumerate().skip(t) {
        for (j, v) in row.iter().enumerate().skip(t) {
            if !v.is_zero() && best.is_none_or(|(bi, bj)| v.abs() < mat[bi][bj].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

fn smallest_in_cross<I: Integer + Signed + Clone>(mat: &[Vec<I>], t: usize) -> (usize, usize) {
    let mut best = (t, t);
    let mut consider = |i: usize, j: usize| {
        let v = &mat[i][j];
        let b = &mat[best.0][best.1];
        if !v.is_zero() && (b.is_zero() || v.abs() < b.abs()) {
            best = (i, j);
        }
    };
    for i in t..mat.len() {
        consider(i, t);
    }
    for j in t..mat[t].len() {
        consider(t, j);
    }
    best
}

/// Boundary matrix `∂_k: C_k → C_{k−1}` (rows index (k−1)-simplices);
/// `∂_0` is the augmentation onto ℤ.
fn boundary_matrix(k: &FreeZpComplex, deg: usize) -> Vec<Vec<BigInt>> {
    let cols = k.simplices_of_dim(deg);
    if deg == 0 {
        return vec![vec![BigInt::from(1); cols.len()]];
    }
    let rows = k.simplices_of_dim(deg - 1);
    let index: std::collections::HashMap<&Vec<usize>, usize> = rows.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut mat = vec![vec![BigInt::zero(); cols.len()]; rows.len()];
    for (c, s) in cols.iter().enumerate() {
        for i in 0..s.len() {
            let mut face = s.clone();
            face.remove(i);
            let sign = if i % 2 == 0 { 1 } else { -1 };
            mat[index[&face]][c] = BigInt::from(sign);
        }
    }
    mat
}

/// Reduced simplicial homology in degree `deg` via Smith normal form.
pub fn reduced_homology(k: &FreeZpComplex, deg: usize) -> HomologyGroup {
    if k.is_empty() {
        return HomologyGroup { rank: 0, torsion: vec![] };
    }
    let chains = k.simplices_of_dim(deg).len();
    let rank_out = smith_invariants(boundary_matrix(k, deg)).len();
    let incoming = smith_invariants(boundary_matrix(k, deg + 1));
    let torsion = incoming
        .iter()
        .filter(|d| **d > BigInt::from(1))
        .map(|d| d.to_u64().expect("torsion coefficient fits u64"))
        .collect();
    HomologyGroup { rank: chains - rank_out - incoming.len(), torsion }
}

struct MapSearch<'a> {
    target: &'a FreeZpComplex,
    target_set: HashSet<Vec<usize>>,
    maximal: Vec<Vec<usize>>,
    touching: Vec<Vec<usize>>,
    orbits: Vec<Vec<usize>>,
    injective: bool,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
}

impl<'a> MapSearch<'a> {
    fn new(source: &'a FreeZpComplex, target: &'a FreeZpComplex, injective: bool) -> Self {
        let maximal = source.maximal_simplices();
        let mut touching = vec![Vec::new(); source.vertices.len()];
        for (i, s) in maximal.iter().enumerate() {
            for &v in s {
                touching[v].push(i);
            }
        }
        Self {
            target,
            target_set: target.simplices.iter().cloned().collect(),
            maximal,
            touching,
            orbits: source.vertex_orbits(),
            injective,
            map: vec![None; source.vertices.len()],
            used: vec![false; target.vertices.len()],
        }
    }

    fn consistent(&self, orbit: &[usize]) -> bool {
        let mut seen = HashSet::new();
        for &v in orbit {
            for &s in &self.touching[v] {
                if !seen.insert(s) {
                    continue;
                }
                let mut image: Vec<usize> = self.maximal[s].iter().filter_map(|&u| self.map[u]).collect();
                image.sort_unstable();
                image.dedup();
                if !image.is_empty() && !self.target_set.contains(&image) {
                    return false;
                }
            }
        }
        true
    }

    fn run(&mut self, idx: usize) -> bool {
        if idx == self.orbits.len() {
            return true;
        }
        let orbit = self.orbits[idx].clone();
        for t in 0..self.target.vertices.len() {
            // equivariance: g^i·r ↦ g^i·t, closing up when the orbit does
            let images: Vec<usize> = (0..orbit.len()).map(|i| self.target.act(i as u64, t)).collect();
            if self.target.act(orbit.len() as u64, t) != t {
                continue;
            }
            if self.injective {
                let distinct: HashSet<&usize> = images.iter().collect();
                if distinct.len() != images.len() || images.iter().any(|&u| self.used[u]) {
                    continue;
                }
            }
            for (&v, &u) in orbit.iter().zip(&images) {
                self.map[v] = Some(u);
                if self.injective {
                    self.used[u] = true;
                }
            }
            if self.consistent(&orbit) && self.run(idx + 1) {
                return true;
            }
            for (&v, &u) in orbit.iter().zip(&images) {
                self.map[v] = None;
                if self.injective {
                    self.used[u] = false;
                }
            }
        }
        false
    }
}

/// Backtracking search for an equivariant simplicial vertex map.
///
/// One target vertex is chosen per source orbit and propagated along the
/// orbit. The source is not subdivided, so `None` only means no map exists
/// at this subdivision level.
pub fn equivariant_map_search(source: &FreeZpComplex, target: &FreeZpComplex) -> Result<Option<Vec<usize>>> {
    if source.p != target.p {
        return Err(Error::PrimeMismatch(source.p, target.p));
    }
    if !check_free_action(source) {
        return Err(Error::NotFree);
    }
    let mut search = MapSearch::new(source, target, false);
    Ok(search.run(0).then(|| search.map.iter().map(|v| v.expect("complete")).collect()))
}

/// Independent check that `map` is simplicial and commutes with the actions.
pub fn verify_equivariant_map(source: &FreeZpComplex, target: &FreeZpComplex, map: &[usize]) -> bool {
    if map.len() != source.vertices.len() || map.iter().any(|&u| u >= target.vertices.len()) {
        return false;
    }
    let equivariant = (0..source.vertices.len()).all(|v| map[source.action[v]] == target.action[map[v]]);
    let simplicial = source.simplices.iter().all(|s| {
        let mut image: Vec<usize> = s.iter().map(|&v| map[v]).collect();
        image.sort_unstable();
        image.dedup();
        target.simplices.contains(&image)
    });
    equivariant && simplicial
}

/// An equivariant simplicial isomorphism `k → l`, if one exists.
pub fn find_isomorphism(k: &FreeZpComplex, l: &FreeZpComplex) -> Option<Vec<usize>> {
    if k.p != l.p || k.vertices.len() != l.vertices.len() || k.simplices.len() != l.simplices.len() {
        return None;
    }
    let mut search = MapSearch::new(k, l, true);
    search.run(0).then(|| search.map.iter().map(|v| v.expect("complete")).collect())
}

/// One step in the derivation of a bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundStep {
    pub rule: String,
    /// The fact the step relies on.
    pub statement: String,
    pub detail: String,
}

impl BoundStep {
    fn new(rule: &str, statement: &str, detail: impl Into<String>) -> Self {
        Self { rule: rule.into(), statement: statement.into(), detail: detail.into() }
    }
}

/// Interval bound `[lower, upper]` for a (periodic) ℤ_p-coindex; `None` is +∞.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoindexBound {
    pub p: u64,
    pub lower: i64,
    #[serde(with = "upper_serde")]
    pub upper: Option<i64>,
    pub provenance: Vec<BoundStep>,
}

mod upper_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Upper {
        Finite(i64),
        Infinite(String),
    }

    pub fn serialize<Z: Serializer>(v: &Option<i64>, ser: Z) -> Result<Z::Ok, Z::Error> {
        match v {
            Some(n) => Upper::Finite(*n).serialize(ser),
            None => Upper::Infinite("+inf".into()).serialize(ser),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<i64>, D::Error> {
        match Upper::deserialize(de)? {
            Upper::Finite(n) => Ok(Some(n)),
            Upper::Infinite(s) if s == "+inf" || s == "inf" => Ok(None),
            Upper::Infinite(s) => Err(serde::de::Error::custom(format!("bad upper bound {s:?}"))),
        }
    }
}

impl CoindexBound {
    /// Nothing known: `[−1, +∞]`.
    pub fn unknown(p: u64) -> Self {
        Self { p, lower: -1, upper: None, provenance: vec![] }
    }

    pub fn new(p: u64, lower: i64, upper: Option<i64>) -> Result<Self> {
        let b = Self { p, lower, upper, provenance: vec![] };
        b.check()?;
        Ok(b)
    }

    fn check(&self) -> Result<()> {
        if self.lower < -1 || self.upper.is_some_and(|u| u < self.lower) {
            return Err(Error::BoundRule {
                rule: self.provenance.last().map_or("input".into(), |s| s.rule.clone()),
                reason: format!("inverted interval [{}, {:?}]", self.lower, self.upper),
            });
        }
        Ok(())
    }

    pub fn contains(&self, n: i64) -> bool {
        self.lower <= n && self.upper.is_none_or(|u| n <= u)
    }
}

/// Sound coindex bounds for a free complex.
///
/// Lower bound: the largest `n ≤ n_max` with an equivariant simplicial map
/// `E_nℤ_p → K`. Upper bound: `dim K`.
pub fn coindex_bounds(k: &FreeZpComplex, n_max: usize) -> Result<CoindexBound> {
    if !check_free_action(k) {
        return Err(Error::NotFree);
    }
    let p = k.p;
    if k.is_empty() {
        let mut b = CoindexBound::new(p, -1, Some(-1))?;
        b.provenance.push(BoundStep::new("empty", "coind_p(∅) = −1", "complex has no vertices"));
        return Ok(b);
    }
    let dim = k.dim();
    let mut lower = -1;
    let mut provenance = Vec::new();
    for n in 0..=n_max {
        let source = build_en_zp(p, n)?;
        match equivariant_map_search(&source, k)? {
            Some(map) => {
                debug_assert!(verify_equivariant_map(&source, k, &map));
                lower = n as i64;
                provenance.push(BoundStep::new(
                    "map-search",
                    "an equivariant map E_nZ_p → K gives coind_p(K) ≥ n",
                    format!("found simplicial map from E_{n}Z_{p}: {map:?}"),
                ));
            }
            None => {
                provenance.push(BoundStep::new(
                    "map-search",
                    "search over unsubdivided sources is incomplete",
                    format!("unresolved ≥? no simplicial map from E_{n}Z_{p} at this subdivision level"),
                ));
                break;
            }
        }
    }
    provenance.push(BoundStep::new(
        "dimension-cap",
        "a free complex of dimension d maps equivariantly to E_dZ_p, and maps E_m → E_n force m ≤ n",
        format!("coind_{p}(K) ≤ dim K = {dim}"),
    ));
    let b = CoindexBound { p, lower, upper: Some(dim), provenance };
    b.check()?;
    Ok(b)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BoundRule {
    /// `coind(X*Y) ≥ coind(X) + coind(Y) + 1`; inputs `[X, Y]`.
    Join { dim_cap: Option<i64> },
    /// Equivariant map `X → Y` gives `coind(Y) ≥ coind(X)`; inputs `[X, Y]`.
    Map,
    /// Replacing T by T^n with `gcd(n, p) = 1` keeps the coindex; input `[X]`.
    Power { n: u64 },
    /// A nonempty finite free ℤ_p-set has coindex exactly 0; no inputs.
    FiniteNonempty { p: u64, points: usize },
    /// Periodic coindex of the gap-1 universal shift exceeds that of X by one; input `[X]`.
    Bump,
}

fn arity(rule: &str, inputs: &[CoindexBound], n: usize) -> Result<()> {
    if inputs.len() != n {
        return Err(Error::Arity(format!("{rule} takes {n} input bounds, got {}", inputs.len())));
    }
    Ok(())
}

/// Propagates coindex bounds through one rule, appending to the provenance.
pub fn bound_combine(rule: &BoundRule, inputs: &[CoindexBound]) -> Result<CoindexBound> {
    if let Some(first) = inputs.first() {
        if let Some(other) = inputs.iter().find(|b| b.p != first.p) {
            return Err(Error::PrimeMismatch(first.p, other.p));
        }
    }
    let chain = |extra: BoundStep| -> Vec<BoundStep> {
        inputs.iter().flat_map(|b| b.provenance.iter().cloned()).chain(std::iter::once(extra)).collect()
    };
    let out = match rule {
        BoundRule::Join { dim_cap } => {
            arity("join", inputs, 2)?;
            let (x, y) = (&inputs[0], &inputs[1]);
            CoindexBound {
                p: x.p,
                lower: x.lower + y.lower + 1,
                upper: *dim_cap,
                provenance: chain(BoundStep::new(
                    "join",
                    "coind_p(X*Y) ≥ coind_p(X) + coind_p(Y) + 1",
                    format!("{} + {} + 1", x.lower, y.lower),
                )),
            }
        }
        BoundRule::Map => {
            arity("map", inputs, 2)?;
            let (x, y) = (&inputs[0], &inputs[1]);
            CoindexBound {
                p: x.p,
                lower: x.lower.max(y.lower),
                upper: y.upper,
                provenance: chain(BoundStep::new(
                    "map",
                    "an equivariant map X → Y gives coind_p(X) ≤ coind_p(Y)",
                    format!("target lower raised to {}", x.lower.max(y.lower)),
                )),
            }
        }
        BoundRule::Power { n } => {
            arity("power", inputs, 1)?;
            let x = &inputs[0];
            if *n == 0 || n.gcd(&x.p) != 1 {
                return Err(Error::BoundRule { rule: "power".into(), reason: format!("{n} is not coprime to {}", x.p) });
            }
            CoindexBound {
                provenance: chain(BoundStep::new(
                    "power",
                    "coind_p(X, T^n) = coind_p(X, T) for n coprime to p",
                    format!("n = {n}"),
                )),
                ..x.clone()
            }
        }
        BoundRule::FiniteNonempty { p, points } => {
            arity("finite-nonempty", inputs, 0)?;
            if !is_prime(*p) {
                return Err(Error::NotPrime(*p));
            }
            if *points == 0 || !(*points as u64).is_multiple_of(*p) {
                return Err(Error::BoundRule {
                    rule: "finite-nonempty".into(),
                    reason: format!("a nonempty free Z_{p}-set has a positive multiple of {p} points, got {points}"),
                });
            }
            CoindexBound {
                p: *p,
                lower: 0,
                upper: Some(0),
                provenance: chain(BoundStep::new(
                    "finite-nonempty",
                    "a nonempty finite free Z_p-set has coindex 0",
                    format!("{points} points"),
                )),
            }
        }
        BoundRule::Bump => {
            arity("bump", inputs, 1)?;
            let x = &inputs[0];
            CoindexBound {
                p: x.p,
                lower: x.lower + 1,
                upper: None,
                provenance: chain(BoundStep::new(
                    "bump",
                    "coind^Per_p(X(N,1,δ)) ≥ coind^Per_p(X) + 1 for suitable N, δ",
                    format!("{} + 1", x.lower),
                )),
            }
        }
    };
    out.check()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn en_zp_small_cases() {
        let e0 = build_en_zp(2, 0).unwrap();
        assert_eq!(e0.vertices().len(), 2);
        assert_eq!(e0.num_simplices(), 2);
        assert_eq!(e0.action(), &[1, 0]);

        let e1 = build_en_zp(2, 1).unwrap();
        assert_eq!(e1.simplices_of_dim(0).len(), 4);
        assert_eq!(e1.simplices_of_dim(1).len(), 4);
        assert_eq!(e1.euler_characteristic(), 0);
        assert_eq!(e1.dim(), 1);

        let e = build_en_zp(3, 1).unwrap();
        assert_eq!(e.simplices_of_dim(1).len(), 9);
        assert_eq!(reduced_homology(&e, 0), HomologyGroup { rank: 0, torsion: vec![] });
        assert_eq!(reduced_homology(&e, 1).rank, 4);
        assert_eq!(e.euler_characteristic(), -3);
    }

    #[test]
    fn homology_of_small_complexes() {
        let e1 = build_en_zp(2, 1).unwrap();
        assert_eq!(reduced_homology(&e1, 0).rank, 0);
        assert_eq!(reduced_homology(&e1, 1).rank, 1);
        let point = FreeZpComplex::new(2, vec!["x".into()], vec![], vec![0]).unwrap();
        for k in 0..3 {
            assert!(reduced_homology(&point, k).is_trivial());
        }
        let two_points = build_en_zp(2, 0).unwrap();
        assert_eq!(reduced_homology(&two_points, 0).rank, 1);
    }

    #[test]
    fn snf_detects_torsion() {
        let mat = vec![vec![BigInt::from(2), BigInt::from(4)], vec![BigInt::from(6), BigInt::from(8)]];
        assert_eq!(smith_invariants(mat), vec![BigInt::from(2), BigInt::from(4)]);
        let mat: Vec<Vec<i64>> = vec![vec![2, 0], vec![0, 3]];
        assert_eq!(smith_invariants(mat), vec![1, 6]);
        let zero: Vec<Vec<i64>> = vec![vec![0, 0]];
        assert!(smith_invariants(zero).is_empty());
    }

    #[test]
    fn projective_plane_has_z2_torsion() {
        // 6-vertex RP^2
        let faces = vec![
            vec![0, 1, 2], vec![0, 2, 3], vec![0, 3, 4], vec![0, 4, 5], vec![0, 5, 1],
            vec![1, 2, 4], vec![2, 3, 5], vec![3, 4, 1], vec![4, 5, 2], vec![5, 1, 3],
        ];
        let names = (0..6).map(|i| i.to_string()).collect();
        let k = FreeZpComplex::new(2, names, faces, (0..6).collect()).unwrap();
        assert_eq!(reduced_homology(&k, 1), HomologyGroup { rank: 0, torsion: vec![2] });
        assert_eq!(reduced_homology(&k, 2).rank, 0);
    }

    #[test]
    fn join_examples() {
        for p in [2, 3] {
            let e0 = build_en_zp(p, 0).unwrap();
            let j = join(&e0, &e0).unwrap();
            assert!(find_isomorphism(&j, &build_en_zp(p, 1).unwrap()).is_some());
            let empty = FreeZpComplex::empty(p).unwrap();
            assert_eq!(join(&e0, &empty).unwrap(), e0);
        }
        let j = join(&build_en_zp(2, 1).unwrap(), &build_en_zp(2, 0).unwrap()).unwrap();
        assert_eq!(j.dim(), 2);
        assert!(check_free_action(&j));
        assert!(reduced_homology(&j, 0).is_trivial());
        assert!(reduced_homology(&j, 1).is_trivial());
        assert_eq!(reduced_homology(&j, 2).rank, 1);
        assert_eq!(
            join(&build_en_zp(2, 0).unwrap(), &build_en_zp(3, 0).unwrap()),
            Err(Error::PrimeMismatch(2, 3))
        );
    }

    #[test]
    fn free_action_examples() {
        for (p, n) in [(2, 0), (2, 2), (3, 1), (5, 1)] {
            assert!(check_free_action(&build_en_zp(p, n).unwrap()));
        }
        let point = FreeZpComplex::new(2, vec!["x".into()], vec![], vec![0]).unwrap();
        assert!(!check_free_action(&point));
        let fixed = FreeZpComplex::new(3, vec!["a".into(), "b".into(), "c".into()], vec![], vec![0, 1, 2]).unwrap();
        assert!(!check_free_action(&fixed));
        // an edge swapped by the involution has a fixed barycenter
        let edge = FreeZpComplex::new(2, vec!["a".into(), "b".into()], vec![vec![0, 1]], vec![1, 0]).unwrap();
        assert!(!check_free_action(&edge));
    }

    #[test]
    fn rejects_non_simplicial_action() {
        let err = FreeZpComplex::new(
            2,
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![vec![0, 1]],
            vec![2, 3, 0, 1],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotSimplicial(_)));
        assert!(FreeZpComplex::new(2, vec!["a".into(), "b".into(), "c".into()], vec![], vec![1, 2, 0]).is_err());
    }

    #[test]
    fn map_search_examples() {
        let e0 = build_en_zp(2, 0).unwrap();
        let e1 = build_en_zp(2, 1).unwrap();
        let map = equivariant_map_search(&e0, &e1).unwrap().unwrap();
        assert!(verify_equivariant_map(&e0, &e1, &map));
        let map = equivariant_map_search(&e1, &e1).unwrap().unwrap();
        assert!(verify_equivariant_map(&e1, &e1, &map));
        assert_eq!(equivariant_map_search(&e1, &e0).unwrap(), None);
        let point = FreeZpComplex::new(2, vec!["x".into()], vec![], vec![0]).unwrap();
        assert_eq!(equivariant_map_search(&point, &e0), Err(Error::NotFree));
    }

    #[test]
    fn exhaustive_no_map_from_circle_to_two_points() {
        // oracle: try every vertex map, not only orbit-propagated ones
        let e0 = build_en_zp(2, 0).unwrap();
        let e1 = build_en_zp(2, 1).unwrap();
        let n = e1.vertices().len();
        let any = (0..2usize.pow(n as u32)).any(|code| {
            let map: Vec<usize> = (0..n).map(|v| (code >> v) & 1).collect();
            verify_equivariant_map(&e1, &e0, &map)
        });
        assert!(!any);
    }

    #[test]
    fn coindex_examples() {
        let empty = FreeZpComplex::empty(3).unwrap();
        let b = coindex_bounds(&empty, 2).unwrap();
        assert_eq!((b.lower, b.upper), (-1, Some(-1)));
        let b = coindex_bounds(&build_en_zp(3, 1).unwrap(), 1).unwrap();
        assert_eq!((b.lower, b.upper), (1, Some(1)));
        let orbit = FreeZpComplex::new(5, (0..5).map(|i| i.to_string()).collect(), vec![], vec![1, 2, 3, 4, 0]).unwrap();
        let b = coindex_bounds(&orbit, 2).unwrap();
        assert_eq!((b.lower, b.upper), (0, Some(0)));
        assert!(b.provenance.iter().any(|s| s.detail.contains("unresolved")));
        let point = FreeZpComplex::new(2, vec!["x".into()], vec![], vec![0]).unwrap();
        assert_eq!(coindex_bounds(&point, 1), Err(Error::NotFree));
    }

    #[test]
    fn bound_rule_examples() {
        let finite = bound_combine(&BoundRule::FiniteNonempty { p: 3, points: 6 }, &[]).unwrap();
        assert_eq!((finite.lower, finite.upper), (0, Some(0)));
        let joined = bound_combine(&BoundRule::Join { dim_cap: None }, &[finite.clone(), finite.clone()]).unwrap();
        assert_eq!(joined.lower, 1);
        assert_eq!(joined.upper, None);
        assert_eq!(joined.provenance.len(), 3);

        let source = CoindexBound::new(3, 2, None).unwrap();
        let mapped = bound_combine(&BoundRule::Map, &[source, CoindexBound::unknown(3)]).unwrap();
        assert_eq!(mapped.lower, 2);

        let bumped = bound_combine(&BoundRule::Bump, &[CoindexBound::new(3, 4, Some(7)).unwrap()]).unwrap();
        assert_eq!(bumped.lower, 5);

        let same = bound_combine(&BoundRule::Power { n: 2 }, std::slice::from_ref(&finite)).unwrap();
        assert_eq!((same.lower, same.upper), (0, Some(0)));
        assert!(bound_combine(&BoundRule::Power { n: 3 }, std::slice::from_ref(&finite)).is_err());
        assert_eq!(
            bound_combine(&BoundRule::Join { dim_cap: None }, &[finite, CoindexBound::unknown(5)]),
            Err(Error::PrimeMismatch(3, 5))
        );
        assert!(bound_combine(&BoundRule::Map, &[CoindexBound::new(3, 2, None).unwrap(), CoindexBound::new(3, 0, Some(1)).unwrap()]).is_err());
    }

    #[test]
    fn complex_json_roundtrip() {
        let k = build_en_zp(2, 1).unwrap();
        let text = serde_json::to_string(&k).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["simplices"].as_array().unwrap().len(), 4);
        assert_eq!(serde_json::from_str::<FreeZpComplex>(&text).unwrap(), k);
        let b = coindex_bounds(&k, 1).unwrap();
        let json = serde_json::to_value(&b).unwrap();
        assert_eq!(json["upper"], 1);
        let inf = serde_json::to_value(CoindexBound::unknown(2)).unwrap();
        assert_eq!(inf["upper"], "+inf");
        assert_eq!(serde_json::from_value::<CoindexBound>(inf).unwrap(), CoindexBound::unknown(2));
    }
}
