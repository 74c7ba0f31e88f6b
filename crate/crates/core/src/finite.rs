//! Finite dynamical systems: a permutation of a finite point set, with an
//! optional rational metric.
//!
//! Covers periodic points, joins, 1/n-time systems, marker search,
//! first-entrance Rokhlin functions, the map into the `ρ = 1` subshift and
//! the embedding into the gap-1 universal shift.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::complex::FreeZpComplex;
use crate::error::{Error, Result};
use crate::report::{Checker, SuiteReport};
use crate::scalar::{parse_rational, Scalar};
use crate::shift::{check_membership, shift, SeqPoint, SubshiftSpec};
use crate::torus::{rho_n, TorusElem, TorusVec};

/// Largest system `marker_search` explores exhaustively.
pub const MARKER_SEARCH_CAP: usize = 24;

/// Largest number of markers `enumerate_markers` will list.
pub const MARKER_ENUMERATION_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr", bound = "S: Scalar")]
pub struct FiniteSystem<S: Scalar> {
    names: Vec<String>,
    perm: Vec<usize>,
    metric: Option<Vec<Vec<S>>>,
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    points: Vec<String>,
    perm: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<Vec<Vec<String>>>,
}

impl<S: Scalar> TryFrom<SystemRepr> for FiniteSystem<S> {
    type Error = Error;
    fn try_from(r: SystemRepr) -> Result<Self> {
        let sys = FiniteSystem::new(r.points, r.perm)?;
        match r.metric {
            None => Ok(sys),
            Some(rows) => {
                let metric = rows
                    .iter()
                    .map(|row| row.iter().map(|t| parse_rational(t)).collect::<Result<Vec<S>>>())
                    .collect::<Result<Vec<_>>>()?;
                sys.with_metric(metric)
            }
        }
    }
}

impl<S: Scalar> From<FiniteSystem<S>> for SystemRepr {
    fn from(sys: FiniteSystem<S>) -> Self {
        SystemRepr {
            points: sys.names,
            perm: sys.perm,
            metric: sys
                .metric
                .map(|m| m.iter().map(|row| row.iter().map(Scalar::to_fraction_string).collect()).collect()),
        }
    }
}

impl<S: Scalar> FiniteSystem<S> {
    pub fn new(names: Vec<String>, perm: Vec<usize>) -> Result<Self> {
        if names.len() != perm.len() {
            return Err(Error::InvalidSystem(format!("{} points but perm has {} entries", names.len(), perm.len())));
        }
        let mut seen = vec![false; perm.len()];
        for &v in &perm {
            if v >= perm.len() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidSystem("perm is not a bijection".into()));
            }
        }
        Ok(Self { names, perm, metric: None })
    }

    /// Disjoint union of cycles; point `j` of cycle `c` is named `c.j`.
    pub fn from_cycles(lengths: &[usize]) -> Result<Self> {
        if lengths.contains(&0) {
            return Err(Error::InvalidSystem("cycle length 0".into()));
        }
        let mut names = Vec::new();
        let mut perm = Vec::new();
        for (c, &len) in lengths.iter().enumerate() {
            let base = perm.len();
            for j in 0..len {
                names.push(format!("{c}.{j}"));
                perm.push(base + (j + 1) % len);
            }
        }
        Self::new(names, perm)
    }

    /// Parses the `cycles:3,5` shorthand.
    pub fn parse_shorthand(text: &str) -> Result<Self> {
        let body = text
            .strip_prefix("cycles:")
            .ok_or_else(|| Error::Parse(format!("expected cycles:<lengths>, got {text:?}")))?;
        let lengths = body
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("cycle length {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_cycles(&lengths)
    }

    /// Attaches a metric after checking symmetry, positivity and the triangle inequality.
    pub fn with_metric(mut self, metric: Vec<Vec<S>>) -> Result<Self> {
        let n = self.len();
        if metric.len() != n || metric.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSystem(format!("metric must be {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..n {
                let d = &metric[i][j];
                if (i == j && !d.is_zero()) || (i != j && !d.is_positive()) || *d != metric[j][i] {
                    return Err(Error::InvalidSystem(format!("bad metric entry ({i},{j})")));
                }
                if let Some(k) = (0..n).find(|&k| metric[i][k].clone() + metric[k][j].clone() < *d) {
                    return Err(Error::InvalidSystem(format!("triangle inequality fails at ({i},{k},{j})")));
                }
            }
        }
        self.metric = Some(metric);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn metric(&self) -> Option<&[Vec<S>]> {
        self.metric.as_deref()
    }

    /// `T^k x` for `k ≥ 0`.
    pub fn iterate(&self, x: usize, k: usize) -> usize {
        (0..k).fold(x, |x, _| self.perm[x])
    }

    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.len()];
        for (x, &y) in self.perm.iter().enumerate() {
            inv[y] = x;
        }
        inv
    }

    /// Cycles, each starting at its smallest point and following T.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut x = self.perm[start];
            while x != start {
                seen[x] = true;
                cycle.push(x);
                x = self.perm[x];
            }
            out.push(cycle);
        }
        out
    }

    /// Cycle length of every point.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut len = vec![0; self.len()];
        for c in self.cycles() {
            for &x in &c {
                len[x] = c.len();
            }
        }
        len
    }

    /// Sorted multiset of cycle lengths, a complete conjugacy invariant.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.cycles().iter().map(Vec::len).collect();
        t.sort_unstable();
        t
    }

    pub fn min_cycle_length(&self) -> Option<usize> {
        self.cycles().iter().map(Vec::len).min()
    }

    pub fn has_fixed_point(&self) -> bool {
        self.perm.iter().enumerate().any(|(x, &y)| x == y)
    }

    pub fn is_conjugate(&self, other: &Self) -> bool {
        self.cycle_type() == other.cycle_type()
    }

    /// The points as a 0-dimensional ℤ_p-complex; requires `T^p = id`.
    pub fn to_zp_complex(&self, p: u64) -> Result<FreeZpComplex> {
        FreeZpComplex::new(p, self.names.clone(), vec![], self.perm.clone())
    }
}

/// `P_n = {x : T^n x = x}`.
pub fn periodic_points<S: Scalar>(sys: &FiniteSystem<S>, n: usize) -> Result<BTreeSet<usize>> {
    if n == 0 {
        return Err(Error::InvalidSystem("period must be >= 1".into()));
    }
    let lens = sys.cycle_lengths();
    Ok((0..sys.len()).filter(|&x| n.is_multiple_of(lens[x])).collect())
}

/// Join of two finite systems: vertices `X ⊔ Y`, one edge per X–Y pair and
/// the dynamics acting on both sides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemJoin {
    pub vertices: Vec<String>,
    pub perm: Vec<usize>,
    /// Number of vertices coming from the left factor.
    pub left: usize,
    pub simplices: BTreeSet<Vec<usize>>,
}

pub fn join_systems<S: Scalar>(x: &FiniteSystem<S>, y: &FiniteSystem<S>) -> SystemJoin {
    let left = x.len();
    let vertices = x.names.iter().map(|n| format!("L{n}")).chain(y.names.iter().map(|n| format!("R{n}"))).collect();
    let perm = x.perm.iter().copied().chain(y.perm.iter().map(|&v| v + left)).collect();
    let simplices = join_simplices(&(0..left).collect(), &(left..left + y.len()).collect());
    SystemJoin { vertices, perm, left, simplices }
}

fn join_simplices(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> BTreeSet<Vec<usize>> {
    let mut out: BTreeSet<Vec<usize>> = a.iter().chain(b).map(|&v| vec![v]).collect();
    for &u in a {
        for &v in b {
            out.insert(vec![u, v]);
        }
    }
    out
}

impl SystemJoin {
    fn iterate(&self, v: usize, n: usize) -> usize {
        (0..n).fold(v, |v, _| self.perm[v])
    }

    /// Simplices all of whose vertices are n-periodic for the joined dynamics.
    pub fn periodic_subjoin(&self, n: usize) -> BTreeSet<Vec<usize>> {
        self.simplices.iter().filter(|s| s.iter().all(|&v| self.iterate(v, n) == v)).cloned().collect()
    }

    /// The join built directly from the n-periodic sets of each factor.
    pub fn join_of_periodic<S: Scalar>(x: &FiniteSystem<S>, y: &FiniteSystem<S>, n: usize) -> Result<BTreeSet<Vec<usize>>> {
        let px = periodic_points(x, n)?;
        let py: BTreeSet<usize> = periodic_points(y, n)?.into_iter().map(|v| v + x.len()).collect();
        Ok(join_simplices(&px, &py))
    }

    /// The join as a ℤ_p-complex; requires the joined dynamics to have order dividing p.
    pub fn to_zp_complex(&self, p: u64) -> Result<FreeZpComplex> {
        FreeZpComplex::new(p, self.vertices.clone(), self.simplices.iter().cloned().collect(), self.perm.clone())
    }
}

/// The 1/n-time system on `X × {0..n−1}`: `(x,k) ↦ (x,k+1)` for `k < n−1`,
/// `(x,n−1) ↦ (Tx,0)`. Point `(x,k)` has index `x·n + k`.
pub fn time_division<S: Scalar>(sys: &FiniteSystem<S>, n: usize) -> Result<FiniteSystem<S>> {
    if n == 0 {
        return Err(Error::InvalidSystem("time division needs n >= 1".into()));
    }
    if n == 1 {
        return Ok(sys.clone());
    }
    let mut names = Vec::with_capacity(sys.len() * n);
    let mut perm = Vec::with_capacity(sys.len() * n);
    for x in 0..sys.len() {
        for k in 0..n {
            names.push(format!("{}#{k}", sys.names[x]));
            perm.push(if k + 1 < n { x * n + k + 1 } else { sys.perm[x] * n });
        }
    }
    FiniteSystem::new(names, perm)
}

/// Checks that `x ↦ (x,0)` conjugates T with `T_n^n` on the zero slice.
pub fn zero_slice_conjugacy<S: Scalar>(sys: &FiniteSystem<S>, divided: &FiniteSystem<S>, n: usize) -> bool {
    divided.len() == sys.len() * n && (0..sys.len()).all(|x| divided.iterate(x * n, n) == sys.perm[x] * n)
}

/// Outcome of checking one candidate marker.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerCheck {
    pub separated: bool,
    pub covers: bool,
    /// First `(x, n)` with `x ∈ U` and `T^n x ∈ U`, `0 < n < N`.
    pub collision: Option<(usize, usize)>,
    /// A cycle (given by its smallest point) that U misses.
    pub missed_cycle: Option<usize>,
}

impl MarkerCheck {
    pub fn valid(&self) -> bool {
        self.separated && self.covers
    }
}

/// Checks `U ∩ T^{−n}U = ∅` for `0 < n < N` and `X = ∪ T^n U`.
pub fn verify_marker<S: Scalar>(sys: &FiniteSystem<S>, u: &[usize], n_marker: usize) -> MarkerCheck {
    let member: BTreeSet<usize> = u.iter().copied().collect();
    let mut collision = None;
    'outer: for &x in &member {
        let mut y = x;
        for n in 1..n_marker {
            y = sys.perm[y];
            if member.contains(&y) {
                collision = Some((x, n));
                break 'outer;
            }
        }
    }
    let missed_cycle = sys.cycles().into_iter().find(|c| !c.iter().any(|x| member.contains(x))).map(|c| c[0]);
    MarkerCheck { separated: collision.is_none(), covers: missed_cycle.is_none(), collision, missed_cycle }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerVerdict {
    Found,
    /// Exhaustive search proved that no marker exists.
    None,
    /// Greedy mode gave up; nothing is claimed.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkerCertificate {
    #[serde(rename = "N")]
    pub n_marker: usize,
    pub verdict: MarkerVerdict,
    pub mode: String,
    /// Indices of the marker points.
    pub u: Vec<usize>,
    pub u_names: Vec<String>,
    /// Search nodes visited.
    pub explored: u64,
    pub transcript: SuiteReport,
}

struct Search<'a, S: Scalar> {
    sys: &'a FiniteSystem<S>,
    inv: Vec<usize>,
    order: Vec<usize>,
    cycle_end: Vec<bool>,
    cycle_of: Vec<usize>,
    n_marker: usize,
    chosen: Vec<bool>,
    cycle_hit: Vec<bool>,
    explored: u64,
}

impl<S: Scalar> Search<'_, S> {
    fn conflicts(&self, x: usize) -> bool {
        let (mut f, mut b) = (x, x);
        for _ in 1..self.n_marker {
            f = self.sys.perm[f];
            b = self.inv[b];
            if self.chosen[f] || self.chosen[b] || f == x {
                return true;
            }
        }
        false
    }

    /// Include/exclude backtracking, cycle by cycle; a cycle whose last point
    /// is decided without a chosen point prunes the branch.
    fn run(&mut self, idx: usize) -> bool {
        self.explored += 1;
        if idx == self.order.len() {
            return true;
        }
        let x = self.order[idx];
        let c = self.cycle_of[x];
        if !self.conflicts(x) {
            self.chosen[x] = true;
            let before = std::mem::replace(&mut self.cycle_hit[c], true);
            if self.run(idx + 1) {
                return true;
            }
            self.cycle_hit[c] = before;
            self.chosen[x] = false;
        }
        if self.cycle_end[idx] && !self.cycle_hit[c] {
            return false;
        }
        self.run(idx + 1)
    }
}

fn certificate<S: Scalar>(
    sys: &FiniteSystem<S>,
    n_marker: usize,
    mode: &str,
    found: Option<Vec<usize>>,
    explored: u64,
    exhaustive: bool,
) -> MarkerCertificate {
    let mut transcript = SuiteReport::default();
    let (verdict, u) = match found {
        Some(u) => {
            let check = verify_marker(sys, &u, n_marker);
            let mut sep = Checker::new("marker.separation", "U ∩ T^{-n}U = ∅ for 0 < n < N");
            sep.check(check.separated, || json!({ "collision": check.collision }));
            transcript.push(sep.finish());
            let mut cov = Checker::new("marker.cover", "X = ∪_n T^n U");
            cov.check(check.covers, || json!({ "missed_cycle": check.missed_cycle }));
            transcript.push(cov.finish());
            (MarkerVerdict::Found, u)
        }
        None if exhaustive => {
            let mut c = Checker::new(
                "marker.none_consistent",
                "no N-marker exists iff some cycle is shorter than N",
            );
            let min = sys.min_cycle_length();
            c.check(min.is_some_and(|m| m < n_marker), || json!({ "min_cycle": min }));
            transcript.push(c.finish());
            (MarkerVerdict::None, vec![])
        }
        None => (MarkerVerdict::Unknown, vec![]),
    };
    MarkerCertificate {
        n_marker,
        verdict,
        mode: mode.into(),
        u_names: u.iter().map(|&x| sys.names[x].clone()).collect(),
        u,
        explored,
        transcript,
    }
}

/// Exhaustive search for an N-marker, with pruning. Systems above
/// [`MARKER_SEARCH_CAP`] points are refused.
pub fn marker_search<S: Scalar>(sys: &FiniteSystem<S>, n_marker: usize) -> Result<MarkerCertificate> {
    marker_search_capped(sys, n_marker, MARKER_SEARCH_CAP)
}

pub fn marker_search_capped<S: Scalar>(sys: &FiniteSystem<S>, n_marker: usize, cap: usize) -> Result<MarkerCertificate> {
    if n_marker == 0 {
        return Err(Error::InvalidMarker { n: 0, reason: "N must be >= 1".into() });
    }
    if sys.len() > cap {
        return Err(Error::TooLarge { size: sys.len(), cap });
    }
    let cycles = sys.cycles();
    let mut cycle_of = vec![0; sys.len()];
    let mut order = Vec::with_capacity(sys.len());
    let mut cycle_end = Vec::with_capacity(sys.len());
    for (ci, c) in cycles.iter().enumerate() {
        for (j, &x) in c.iter().enumerate() {
            cycle_of[x] = ci;
            order.push(x);
            cycle_end.push(j + 1 == c.len());
        }
    }
    let mut search = Search {
        sys,
        inv: sys.inverse(),
        order,
        cycle_end,
        cycle_of,
        n_marker,
        chosen: vec![false; sys.len()],
        cycle_hit: vec![false; cycles.len()],
        explored: 0,
    };
    let found = search.run(0).then(|| (0..sys.len()).filter(|&x| search.chosen[x]).collect());
    Ok(certificate(sys, n_marker, "exhaustive", found, search.explored, true))
}

/// Greedy marker: points `0, N, 2N, …` along each cycle while the wrap gap
/// stays at least N. Never claims that no marker exists.
pub fn marker_greedy<S: Scalar>(sys: &FiniteSystem<S>, n_marker: usize) -> MarkerCertificate {
    let mut u = Vec::new();
    let mut ok = n_marker >= 1;
    for c in sys.cycles() {
        if c.len() < n_marker {
            ok = false;
            break;
        }
        let step = n_marker.max(1);
        let count = c.len() / step;
        u.extend((0..count).map(|i| c[i * step]));
    }
    let found = ok.then(|| {
        u.sort_unstable();
        u
    });
    certificate(sys, n_marker, "greedy", found, 0, false)
}

/// Every N-marker of the system, as sorted index lists.
///
/// Markers factor over cycles, so each cycle is enumerated on its own and the
/// results are combined.
pub fn enumerate_markers<S: Scalar>(sys: &FiniteSystem<S>, n_marker: usize, cap: usize) -> Result<Vec<Vec<usize>>> {
    let mut per_cycle = Vec::new();
    for c in sys.cycles() {
        let l = c.len();
        let mut options = Vec::new();
        // positions along the cycle with every cyclic gap ≥ N
        let mut stack: Vec<usize> = Vec::new();
        fn rec(l: usize, n: usize, next: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, cap: usize) -> bool {
            if let (Some(&first), Some(&last)) = (stack.first(), stack.last()) {
                if l - last + first >= n.max(1) {
                    out.push(stack.clone());
                    if out.len() > cap {
                        return false;
                    }
                }
            }
            for pos in next..l {
                if stack.last().is_none_or(|&last| pos - last >= n.max(1)) {
                    stack.push(pos);
                    let go = rec(l, n, pos + 1, stack, out, cap);
                    stack.pop();
                    if !go {
                        return false;
                    }
                }
            }
            true
        }
        if !rec(l, n_marker, 0, &mut stack, &mut options, cap) {
            return Err(Error::EnumerationCap { count: options.len() as u128, cap: cap as u128 });
        }
        if options.is_empty() {
            return Ok(vec![]);
        }
        per_cycle.push(options.into_iter().map(|pos| pos.into_iter().map(|i| c[i]).collect::<Vec<_>>()).collect::<Vec<_>>());
    }
    let mut all: Vec<Vec<usize>> = vec![vec![]];
    for options in per_cycle {
        if all.len().saturating_mul(options.len()) > cap {
            return Err(Error::EnumerationCap { count: (all.len() * options.len()) as u128, cap: cap as u128 });
        }
        all = all.iter().flat_map(|prefix| options.iter().map(move |o| [prefix.as_slice(), o].concat())).collect();
    }
    for u in &mut all {
        u.sort_unstable();
    }
    Ok(all)
}

/// Backward first-entrance time into a marker and its exceptional set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RokhlinTable {
    /// `φ(x) = min{k ≥ 0 : T^{−k}x ∈ U}`.
    pub phi: Vec<u64>,
    /// `E = {x : φ(Tx) ≠ φ(x) + 1} = T^{−1}U`.
    pub exceptional: Vec<usize>,
    pub suite: SuiteReport,
}

pub fn rokhlin_phi<S: Scalar>(sys: &FiniteSystem<S>, u: &[usize], n_marker: usize) -> Result<RokhlinTable> {
    let check = verify_marker(sys, u, n_marker);
    if !check.valid() {
        let reason = match (check.collision, check.missed_cycle) {
            (Some((x, n)), _) => format!("{} and T^{n} of it both lie in U", sys.names[x]),
            (_, Some(c)) => format!("the cycle through {} misses U", sys.names[c]),
            _ => unreachable!(),
        };
        return Err(Error::InvalidMarker { n: n_marker, reason });
    }
    let member: BTreeSet<usize> = u.iter().copied().collect();
    let inv = sys.inverse();
    let phi: Vec<u64> = (0..sys.len())
        .map(|x| {
            let mut k = 0;
            let mut y = x;
            while !member.contains(&y) {
                y = inv[y];
                k += 1;
            }
            k
        })
        .collect();
    let exceptional: Vec<usize> = (0..sys.len()).filter(|&x| phi[sys.perm[x]] != phi[x] + 1).collect();
    let e_set: BTreeSet<usize> = exceptional.iter().copied().collect();

    let mut suite = SuiteReport::default();
    let mut inc = Checker::new("rokhlin.increment", "φ(Tx) = φ(x) + 1 for x ∉ E");
    let mut def = Checker::new("rokhlin.exceptional_set", "E = T^{-1}U");
    for x in 0..sys.len() {
        let in_e = e_set.contains(&x);
        if !in_e {
            inc.check(phi[sys.perm[x]] == phi[x] + 1, || json!({ "x": sys.names[x] }));
        }
        def.check(in_e == member.contains(&sys.perm[x]), || json!({ "x": sys.names[x] }));
    }
    let mut sep = Checker::new("rokhlin.separation", "E ∩ T^{-n}E = ∅ for 1 ≤ n ≤ N − 1");
    for &x in &exceptional {
        let mut y = x;
        for n in 1..n_marker {
            y = sys.perm[y];
            sep.check(!e_set.contains(&y), || json!({ "x": sys.names[x], "n": n }));
        }
    }
    suite.push(inc.finish());
    suite.push(def.finish());
    suite.push(sep.finish());
    Ok(RokhlinTable { phi, exceptional, suite })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CurlyYMap<S: Scalar> {
    pub marker: Vec<usize>,
    pub phi: Vec<u64>,
    /// `(φ(T^n x) mod 2)_n` for every point x.
    pub sequences: Vec<SeqPoint<S>>,
    pub suite: SuiteReport,
}

/// Equivariant map into `{x : ρ(x_{n−1},x_n) = 1 or ρ(x_n,x_{n+1}) = 1}` via
/// the Rokhlin function of an N-marker, N ≥ 2.
pub fn map_to_curly_y<S: Scalar>(sys: &FiniteSystem<S>, n_marker: usize) -> Result<CurlyYMap<S>> {
    if n_marker < 2 {
        return Err(Error::InvalidMarker { n: n_marker, reason: "N must be >= 2".into() });
    }
    if sys.has_fixed_point() {
        return Err(Error::NotFixedPointFree);
    }
    let cert = if sys.len() <= MARKER_SEARCH_CAP { marker_search(sys, n_marker)? } else { marker_greedy(sys, n_marker) };
    if cert.verdict != MarkerVerdict::Found {
        return Err(Error::InvalidMarker { n: n_marker, reason: "no marker found".into() });
    }
    let table = rokhlin_phi(sys, &cert.u, n_marker)?;
    let lens = sys.cycle_lengths();
    let sequences = (0..sys.len())
        .map(|x| {
            let values = (0..lens[x])
                .map(|n| TorusVec::from_scalars([S::from_int(table.phi[sys.iterate(x, n)] as i64)]))
                .collect::<Result<Vec<_>>>()?;
            SeqPoint::periodic(values)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut suite = table.suite.clone();
    let spec = SubshiftSpec::<S>::curly_y();
    let mut member = Checker::new("curly_y.membership", "f(x) ∈ 𝒴 for every x");
    let mut equi = Checker::new("curly_y.equivariance", "f(Tx) = σ f(x)");
    for x in 0..sys.len() {
        let report = check_membership(&spec, &sequences[x])?;
        member.check(report.passed(), || json!({ "x": sys.names[x], "index": report.first_failure().map(|c| c.index) }));
        equi.check(sequences[sys.perm[x]] == shift(&sequences[x], 1), || json!({ "x": sys.names[x] }));
    }
    suite.push(member.finish());
    suite.push(equi.finish());
    Ok(CurlyYMap { marker: cert.u, phi: table.phi, sequences, suite })
}

/// Distance-to-centers map of a finite metric space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct EpsEmbedding<S: Scalar> {
    /// Factor applied to the metric so the diameter is at most 1/4.
    #[serde(with = "crate::scalar::serde_q")]
    pub scale: S,
    pub centers: Vec<usize>,
    pub images: Vec<TorusVec<S>>,
    /// Minimum of `ρ_N(f(x), f(y))` over pairs with `d(x,y) ≥ ε`; `None` when no such pair.
    #[serde(with = "crate::scalar::serde_q_or_inf")]
    pub delta_star: Option<S>,
    pub suite: SuiteReport,
}

impl<S: Scalar> EpsEmbedding<S> {
    pub fn dim(&self) -> usize {
        self.centers.len()
    }
}

/// `f(x) = (d(x,c_1), …, d(x,c_N))` for greedily chosen centers with every
/// point strictly within ε/2 of some center.
pub fn epsilon_embedding<S: Scalar>(metric: &[Vec<S>], eps: &S) -> Result<EpsEmbedding<S>> {
    if !eps.is_positive() {
        return Err(Error::NonPositiveEpsilon);
    }
    let n = metric.len();
    if n == 0 || metric.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidSystem("metric must be a nonempty square table".into()));
    }
    let quarter = S::ratio(1, 4);
    let diam = metric.iter().flatten().max().cloned().unwrap_or_else(S::zero);
    let scale = if diam > quarter { quarter / diam } else { S::one() };
    let d = |i: usize, j: usize| metric[i][j].clone() * scale.clone();
    let radius = eps.clone() * scale.clone() / S::two();
    let mut centers: Vec<usize> = Vec::new();
    for x in 0..n {
        if !centers.iter().any(|&c| d(x, c) < radius) {
            centers.push(x);
        }
    }
    let images = (0..n)
        .map(|x| TorusVec::new(centers.iter().map(|&c| TorusElem::new(d(x, c))).collect()))
        .collect::<Result<Vec<_>>>()?;

    let mut suite = SuiteReport::default();
    let mut sep = Checker::new("embedding.separates", "f(x) = f(y) implies d(x,y) < ε");
    let mut delta_star: Option<S> = None;
    for x in 0..n {
        for y in x + 1..n {
            if metric[x][y] >= *eps {
                let gap = rho_n(&images[x], &images[y])?;
                sep.check(gap.is_positive(), || json!({ "x": x, "y": y }));
                delta_star = Some(delta_star.map_or(gap.clone(), |g| g.min(gap)));
            }
        }
    }
    let mut cover = Checker::new("embedding.centers_cover", "every point is within ε/2 of a center");
    for x in 0..n {
        cover.check(centers.iter().any(|&c| d(x, c) < radius), || json!({ "x": x }));
    }
    suite.push(sep.finish());
    suite.push(cover.finish());
    Ok(EpsEmbedding { scale, centers, images, delta_star, suite })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct UniversalEmbedding<S: Scalar> {
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(with = "crate::scalar::serde_q")]
    pub delta: S,
    pub embedding: EpsEmbedding<S>,
    /// `(f(T^n x))_n` for every point x.
    pub sequences: Vec<SeqPoint<S>>,
    pub suite: SuiteReport,
}

/// Equivariant map into the gap-1 shift `X(N, 1, δ)` by orbit unrolling of
/// an ε-embedding, for `0 < ε < min_x d(x, Tx)`.
pub fn embed_into_universal<S: Scalar>(sys: &FiniteSystem<S>, eps: &S) -> Result<UniversalEmbedding<S>> {
    if sys.has_fixed_point() {
        return Err(Error::NotFixedPointFree);
    }
    let metric = sys.metric().ok_or_else(|| Error::InvalidSystem("embedding needs a metric".into()))?;
    if !eps.is_positive() {
        return Err(Error::NonPositiveEpsilon);
    }
    let bound = (0..sys.len()).map(|x| metric[x][sys.perm[x]].clone()).min().unwrap_or_else(S::zero);
    if *eps >= bound {
        return Err(Error::EpsilonTooLarge { epsilon: eps.to_fraction_string(), bound: bound.to_fraction_string() });
    }
    let embedding = epsilon_embedding(metric, eps)?;
    let f = &embedding.images;
    let dim = embedding.dim();
    let delta = (0..sys.len())
        .map(|x| rho_n(&f[x], &f[sys.perm[x]]))
        .collect::<Result<Vec<S>>>()?
        .into_iter()
        .min()
        .expect("nonempty system");
    if !delta.is_positive() {
        return Err(Error::InvalidSystem("embedding collapsed an orbit step".into()));
    }
    let lens = sys.cycle_lengths();
    let sequences = (0..sys.len())
        .map(|x| SeqPoint::periodic((0..lens[x]).map(|n| f[sys.iterate(x, n)].clone()).collect()))
        .collect::<Result<Vec<_>>>()?;

    let mut suite = embedding.suite.clone();
    let spec = SubshiftSpec::gap_space(dim, 1, delta.clone())?;
    let mut member = Checker::new("universal.membership", "f(x) ∈ X(N, 1, δ) for every x");
    let mut equi = Checker::new("universal.equivariance", "f(Tx) = σ f(x)");
    let mut pos = Checker::new("universal.delta_positive", "δ > 0");
    pos.check(delta.is_positive(), || json!(delta.to_fraction_string()));
    for x in 0..sys.len() {
        let report = check_membership(&spec, &sequences[x])?;
        member.check(report.passed(), || json!({ "x": sys.names[x] }));
        equi.check(sequences[sys.perm[x]] == shift(&sequences[x], 1), || json!({ "x": sys.names[x] }));
    }
    suite.push(member.finish());
    suite.push(equi.finish());
    suite.push(pos.finish());
    Ok(UniversalEmbedding { dim, delta, embedding, sequences, suite })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub n_marker: usize,
    /// Number of markers W of the divided system that were projected.
    pub backward_markers: usize,
    pub suite: SuiteReport,
}

impl TransferReport {
    pub fn passed(&self) -> bool {
        self.suite.passed()
    }
}

/// Exhaustive check that markers pass between a system and its 1/n-time
/// system in both directions.
///
/// Forward: every N-marker U of T gives the nN-marker `U × {0}` of `T_n`.
/// Backward: every nN-marker W of `T_n` gives
/// `U = (∪_{j<n} T_n^j W) ∩ (X × {0})`, an (N−1)-marker of `T_n^n` on the
/// zero slice; the sharper N-marker property is recorded alongside.
pub fn verify_marker_transfer<S: Scalar>(sys: &FiniteSystem<S>, n: usize, n_marker: usize) -> Result<TransferReport> {
    if n_marker == 0 {
        return Err(Error::InvalidMarker { n: 0, reason: "N must be >= 1".into() });
    }
    let divided = time_division(sys, n)?;
    let mut suite = SuiteReport::default();

    let mut conj = Checker::new("transfer.zero_slice", "(X × {0}, T_n^n) is conjugate to (X, T) via x ↦ (x, 0)");
    conj.check(zero_slice_conjugacy(sys, &divided, n), || json!({ "n": n }));
    suite.push(conj.finish());

    let mut fwd = Checker::new("transfer.forward", "an N-marker U of T gives the nN-marker U × {0} of T_n");
    for u in enumerate_markers(sys, n_marker, MARKER_ENUMERATION_CAP)? {
        let lifted: Vec<usize> = u.iter().map(|&x| x * n).collect();
        let check = verify_marker(&divided, &lifted, n * n_marker);
        fwd.check(check.valid(), || json!({ "U": u, "check": check }));
    }
    suite.push(fwd.finish());

    // the zero slice with T_n^n, indexed by x
    let slice = FiniteSystem::<S>::new(sys.names.clone(), (0..sys.len()).map(|x| divided.iterate(x * n, n) / n).collect())?;
    let weak = n_marker.saturating_sub(1).max(1);
    let mut bwd = Checker::new(
        "transfer.backward",
        "for an nN-marker W of T_n, (∪_{j<n} T_n^j W) ∩ (X × {0}) is an (N−1)-marker of T_n^n",
    );
    let mut sharp = Checker::new(
        "transfer.backward_sharp",
        "the projected set is in fact an N-marker of T_n^n",
    );
    let ws = enumerate_markers(&divided, n * n_marker, MARKER_ENUMERATION_CAP)?;
    for w in &ws {
        let mut spread = BTreeSet::new();
        for &p in w {
            for j in 0..n {
                spread.insert(divided.iterate(p, j));
            }
        }
        let u: Vec<usize> = spread.into_iter().filter(|p| p % n == 0).map(|p| p / n).collect();
        let check = verify_marker(&slice, &u, weak);
        bwd.check(check.valid(), || json!({ "W": w, "U": u, "check": check }));
        let check = verify_marker(&slice, &u, n_marker);
        sharp.check(check.valid(), || json!({ "W": w, "U": u, "check": check }));
    }
    suite.push(bwd.finish());
    suite.push(sharp.finish());

    let exist = Checker::new("transfer.existence", "T has an N-marker iff T_n has an nN-marker");
    let mut exist = exist;
    let a = marker_search_capped(sys, n_marker, usize::MAX)?.verdict == MarkerVerdict::Found;
    let b = !ws.is_empty();
    exist.check(a == b, || json!({ "base": a, "divided": b }));
    suite.push(exist.finish());

    Ok(TransferReport { n, n_marker, backward_markers: ws.len(), suite })
}

/// Random permutation of at most `max_points` points.
pub fn random_system<S: Scalar, R: Rng + ?Sized>(rng: &mut R, max_points: usize) -> FiniteSystem<S> {
    let n = rng.gen_range(1..=max_points.max(1));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    FiniteSystem::new((0..n).map(|i| format!("x{i}")).collect(), perm).expect("shuffle is a bijection")
}

/// Random fixed-point-free system of at most `max_points ≥ 2` points.
pub fn random_aperiodic_system<S: Scalar, R: Rng + ?Sized>(rng: &mut R, max_points: usize) -> FiniteSystem<S> {
    let total = rng.gen_range(2..=max_points.max(2));
    let mut lengths = Vec::new();
    let mut left = total;
    while left > 0 {
        let len = if left <= 3 { left } else { rng.gen_range(2..=left - 2).max(2) };
        let len = if left - len == 1 { left } else { len };
        lengths.push(len);
        left -= len;
    }
    let base = FiniteSystem::<S>::from_cycles(&lengths).expect("positive lengths");
    // relabel so cycles are not contiguous
    let mut relabel: Vec<usize> = (0..total).collect();
    relabel.shuffle(rng);
    let mut perm = vec![0; total];
    for x in 0..total {
        perm[relabel[x]] = relabel[base.perm[x]];
    }
    FiniteSystem::new((0..total).map(|i| format!("x{i}")).collect(), perm).expect("relabelled bijection")
}

/// Random fixed-point-free system with metric
/// `d(x,y) = (D + |t_x − t_y|) / (8D)` for random integer labels `t ∈ [0, D]`.
pub fn random_metric_system<S: Scalar, R: Rng + ?Sized>(rng: &mut R, max_points: usize, denom: i64) -> FiniteSystem<S> {
    let sys = random_aperiodic_system::<S, _>(rng, max_points);
    let t: Vec<i64> = (0..sys.len()).map(|_| rng.gen_range(0..=denom)).collect();
    let metric = (0..sys.len())
        .map(|x| {
            (0..sys.len())
                .map(|y| if x == y { S::zero() } else { S::ratio(denom + (t[x] - t[y]).abs(), 8 * denom) })
                .collect()
        })
        .collect();
    sys.with_metric(metric).expect("label metric satisfies the triangle inequality")
}

/// Count of points per cycle length, handy for reports.
pub fn cycle_histogram<S: Scalar>(sys: &FiniteSystem<S>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for c in sys.cycles() {
        *h.entry(c.len()).or_insert(0) += 1;
    }
    h
}
