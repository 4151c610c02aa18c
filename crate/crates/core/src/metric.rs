//! Word metrics on the bundled groups.
//!
//! A [`ProperMetric`] is the word metric `d(g, h) = ‖g⁻¹h‖` of a finite
//! symmetric generating set. It is left-invariant by construction and proper
//! because generating sets are finite. Norms use closed forms where they
//! exist (free word length, `ℓ¹` on lattices, sums on products) and a
//! memoized breadth-first search of the Cayley graph otherwise.
//!
//! Balls are always enumerated from cached BFS layers around the identity
//! and translated to their center, which is the same as exploring the
//! Cayley graph from the center. Every enumeration is capped by an element
//! budget.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::RwLock;

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupDescriptor, GroupElement};

/// Default cap on the number of elements a single enumeration may touch.
pub const DEFAULT_BUDGET: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    ClosedForm,
    BfsMemoized,
}

#[derive(Debug)]
enum Norm {
    FreeLength,
    L1,
    Product(Box<ProperMetric>, Box<ProperMetric>),
    Bfs,
}

#[derive(Debug, Default)]
struct LayerCache {
    layers: Vec<Vec<GroupElement>>,
    norms: HashMap<GroupElement, u32>,
}

#[derive(Debug)]
pub struct ProperMetric {
    group: GroupDescriptor,
    generators: Vec<GroupElement>,
    norm: Norm,
    cache: RwLock<LayerCache>,
    budget: usize,
}

impl ProperMetric {
    /// The word metric of the standard generators.
    pub fn standard(group: &GroupDescriptor) -> Self {
        let norm = match group {
            GroupDescriptor::Free { .. } => Norm::FreeLength,
            GroupDescriptor::Lattice { .. } => Norm::L1,
            GroupDescriptor::BaumslagSolitar12 => Norm::Bfs,
            GroupDescriptor::Product(l, r) => Norm::Product(
                Box::new(ProperMetric::standard(l)),
                Box::new(ProperMetric::standard(r)),
            ),
        };
        Self::build(group.clone(), group.standard_generators(), norm)
    }

    /// The word metric of `generators`, closed under inversion.
    pub fn with_generators(group: &GroupDescriptor, generators: Vec<GroupElement>) -> Result<Self> {
        let mut set: Vec<GroupElement> = Vec::new();
        for g in &generators {
            group.check(g)?;
            if group.is_identity(g) {
                continue;
            }
            set.push(g.clone());
            set.push(group.invert_unchecked(g));
        }
        set.sort();
        set.dedup();
        if set.is_empty() {
            return Err(Error::Precondition(
                "generating set must contain a non-identity element".into(),
            ));
        }
        let mut standard = group.standard_generators();
        standard.sort();
        if set == standard {
            return Ok(Self::standard(group));
        }
        Ok(Self::build(group.clone(), set, Norm::Bfs))
    }

    fn build(group: GroupDescriptor, generators: Vec<GroupElement>, norm: Norm) -> Self {
        let identity = group.identity();
        let mut cache = LayerCache::default();
        cache.norms.insert(identity.clone(), 0);
        cache.layers.push(vec![identity]);
        ProperMetric {
            group,
            generators,
            norm,
            cache: RwLock::new(cache),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget.max(1);
        if let Norm::Product(l, r) = self.norm {
            self.norm = Norm::Product(
                Box::new(l.with_budget(budget)),
                Box::new(r.with_budget(budget)),
            );
        }
        self
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn mode(&self) -> NormMode {
        match &self.norm {
            Norm::FreeLength | Norm::L1 => NormMode::ClosedForm,
            Norm::Product(l, r) => {
                if l.mode() == NormMode::ClosedForm && r.mode() == NormMode::ClosedForm {
                    NormMode::ClosedForm
                } else {
                    NormMode::BfsMemoized
                }
            }
            Norm::Bfs => NormMode::BfsMemoized,
        }
    }

    /// Length of a shortest generator word for `g`.
    pub fn norm(&self, g: &GroupElement) -> Result<u32> {
        match (&self.norm, g) {
            (Norm::FreeLength, GroupElement::Word(w)) => Ok(w.len() as u32),
            (Norm::L1, GroupElement::Vector(v)) => {
                Ok(v.iter().map(|c| c.unsigned_abs()).sum::<u64>() as u32)
            }
            (Norm::Product(lm, rm), GroupElement::Pair(l, r)) => Ok(lm.norm(l)? + rm.norm(r)?),
            (Norm::Bfs, _) => {
                self.group.check(g)?;
                self.bfs_norm(g)
            }
            _ => Err(Error::KindMismatch {
                group: self.group.to_string(),
                element: g.to_string(),
            }),
        }
    }

    /// `d(g, h) = ‖g⁻¹h‖`.
    pub fn distance(&self, g: &GroupElement, h: &GroupElement) -> Result<u32> {
        match (&self.norm, g, h) {
            (Norm::FreeLength, GroupElement::Word(a), GroupElement::Word(b)) => {
                let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
                Ok((a.len() + b.len() - 2 * common) as u32)
            }
            (Norm::L1, GroupElement::Vector(a), GroupElement::Vector(b)) if a.len() == b.len() => {
                Ok(a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y).unsigned_abs())
                    .sum::<u64>() as u32)
            }
            (Norm::Product(lm, rm), GroupElement::Pair(al, ar), GroupElement::Pair(bl, br)) => {
                Ok(lm.distance(al, bl)? + rm.distance(ar, br)?)
            }
            _ => {
                self.group.check(g)?;
                self.group.check(h)?;
                self.norm(&self.group.quotient_unchecked(g, h))
            }
        }
    }

    fn bfs_norm(&self, g: &GroupElement) -> Result<u32> {
        if let Some(n) = self.cache.read().expect("metric cache poisoned").norms.get(g) {
            return Ok(*n);
        }
        let mut cache = self.cache.write().expect("metric cache poisoned");
        loop {
            if let Some(n) = cache.norms.get(g) {
                return Ok(*n);
            }
            self.extend_layer(&mut cache, &format!("norm of {g}"))?;
        }
    }

    fn extend_layer(&self, cache: &mut LayerCache, what: &str) -> Result<()> {
        let radius = cache.layers.len() as u32;
        let last = cache.layers.last().expect("layer 0 always present");
        let mut fresh: HashSet<GroupElement> = HashSet::new();
        for x in last {
            for s in &self.generators {
                let y = self.group.compose_unchecked(x, s);
                if !cache.norms.contains_key(&y) && fresh.insert(y) {
                    if cache.norms.len() + fresh.len() > self.budget {
                        return Err(Error::BudgetExceeded {
                            what: what.to_string(),
                            budget: self.budget,
                        });
                    }
                }
            }
        }
        let mut next: Vec<GroupElement> = fresh.into_iter().collect();
        next.sort();
        for y in &next {
            cache.norms.insert(y.clone(), radius);
        }
        cache.layers.push(next);
        Ok(())
    }

    /// Members of the closed ball `B̄(e, r)` ordered by norm then element.
    fn identity_ball(&self, r: u32, cap: usize) -> Result<Vec<(GroupElement, u32)>> {
        {
            let cache = self.cache.read().expect("metric cache poisoned");
            if cache.layers.len() > r as usize {
                return Ok(collect_layers(&cache.layers[..=r as usize], cap, self.budget, r)?);
            }
        }
        let mut cache = self.cache.write().expect("metric cache poisoned");
        while cache.layers.len() <= r as usize {
            let size: usize = cache.layers.iter().map(Vec::len).sum();
            if size > cap {
                return Err(Error::BudgetExceeded {
                    what: format!("ball of radius {r}"),
                    budget: cap,
                });
            }
            self.extend_layer(&mut cache, &format!("ball of radius {r}"))?;
        }
        collect_layers(&cache.layers[..=r as usize], cap, self.budget, r)
    }

    /// The closed ball of radius `r` about `center`.
    ///
    /// Members are ordered by distance to the center, ties by the canonical
    /// element order.
    pub fn ball(&self, center: &GroupElement, r: u32) -> Result<Ball> {
        self.group.check(center)?;
        let around_identity = self.identity_ball(r, self.budget)?;
        let mut members: Vec<(GroupElement, u32)> = if self.group.is_identity(center) {
            around_identity
        } else {
            let mut v: Vec<(GroupElement, u32)> = around_identity
                .into_iter()
                .map(|(m, n)| (self.group.compose_unchecked(center, &m), n))
                .collect();
            v.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            v
        };
        members.shrink_to_fit();
        Ok(Ball::from_sorted(center.clone(), r, members))
    }

    /// The ball about the identity.
    pub fn ball_at_identity(&self, r: u32) -> Result<Ball> {
        self.ball(&self.group.identity(), r)
    }

    /// Offsets `o` with `‖o‖ ≤ r`, or `None` when there are more than `cap`.
    pub(crate) fn offsets(&self, r: u32, cap: usize) -> Option<Vec<(GroupElement, u32)>> {
        self.identity_ball(r, cap).ok()
    }

    /// All pairs `i < j` of `points` with `d(points[i], points[j]) ≤ max_dist`.
    ///
    /// Uses ball offsets `points[i]·o` when the ball is smaller than the
    /// point set and a pairwise scan otherwise.
    pub fn close_pairs(&self, points: &[GroupElement], max_dist: u32) -> Result<Vec<(usize, usize, u32)>> {
        let n = points.len();
        let mut out = Vec::new();
        if n < 2 {
            return Ok(out);
        }
        if let Some(offsets) = self.offsets(max_dist, n.saturating_mul(2).max(64)) {
            let index: HashMap<&GroupElement, usize> =
                points.iter().enumerate().map(|(i, p)| (p, i)).collect();
            for (i, p) in points.iter().enumerate() {
                for (o, d) in offsets.iter().skip(1) {
                    let q = self.group.compose_unchecked(p, o);
                    if let Some(&j) = index.get(&q) {
                        if j > i {
                            out.push((i, j, *d));
                        }
                    }
                }
            }
            out.sort_unstable();
            return Ok(out);
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = self.distance(&points[i], &points[j])?;
                if d <= max_dist {
                    out.push((i, j, d));
                }
            }
        }
        Ok(out)
    }

    /// Component label per point for the graph with edges `d ≤ r`; labels
    /// are the smallest index in each component.
    pub fn component_labels(&self, points: &[GroupElement], r: u32) -> Result<Vec<usize>> {
        let mut uf = UnionFind::<usize>::new(points.len());
        for (i, j, _) in self.close_pairs(points, r)? {
            uf.union(i, j);
        }
        let mut smallest: HashMap<usize, usize> = HashMap::new();
        Ok((0..points.len())
            .map(|i| *smallest.entry(uf.find(i)).or_insert(i))
            .collect())
    }

    /// The `r`-components of `points`: maximal subsets joined by chains
    /// with steps `≤ r`. Blocks are ordered by their first point.
    pub fn r_components(&self, points: &[GroupElement], r: u32) -> Result<Vec<Vec<GroupElement>>> {
        Ok(group_indices(&self.component_labels(points, r)?)
            .into_iter()
            .map(|block| block.into_iter().map(|i| points[i].clone()).collect())
            .collect())
    }

    /// The open neighborhood `{x ∈ window : d(x, A) < R}`, in window order.
    ///
    /// Only points of `window` are ever produced.
    pub fn neighborhood(&self, set: &[GroupElement], radius: u32, window: &Ball) -> Result<Vec<GroupElement>> {
        if radius == 0 || set.is_empty() {
            return Ok(Vec::new());
        }
        let mut hit = vec![false; window.len()];
        let offsets = self.offsets(radius - 1, window.len().max(64));
        match offsets {
            Some(offsets) => {
                for a in set {
                    for (o, _) in &offsets {
                        if let Some(i) = window.position(&self.group.compose_unchecked(a, o)) {
                            hit[i] = true;
                        }
                    }
                }
            }
            None => {
                for (i, x) in window.members().iter().enumerate() {
                    for a in set {
                        if self.distance(x, a)? < radius {
                            hit[i] = true;
                            break;
                        }
                    }
                }
            }
        }
        Ok(window
            .members()
            .iter()
            .zip(hit)
            .filter(|(_, h)| *h)
            .map(|(x, _)| x.clone())
            .collect())
    }

    /// Largest pairwise distance; `0` for fewer than two points.
    pub fn diameter(&self, points: &[GroupElement]) -> Result<u32> {
        Ok(self.diameter_within(points, u32::MAX)?.unwrap_or(u32::MAX))
    }

    /// The diameter if it is at most `bound`, otherwise `None`.
    pub fn diameter_within(&self, points: &[GroupElement], bound: u32) -> Result<Option<u32>> {
        Ok(self
            .diameter_witness(points, bound)?
            .map(|(d, _, _)| d))
    }

    /// Diameter with a realizing pair of indices, or `None` as soon as some
    /// pair exceeds `bound`.
    pub(crate) fn diameter_witness(&self, points: &[GroupElement], bound: u32) -> Result<Option<(u32, usize, usize)>> {
        if let (Norm::L1, GroupDescriptor::Lattice { rank }) = (&self.norm, &self.group) {
            if *rank <= 8 {
                let best = l1_diameter(points, *rank)?;
                return Ok((best.0 <= bound).then_some(best));
            }
        }
        let mut best = (0u32, 0usize, 0usize);
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d = self.distance(&points[i], &points[j])?;
                if d > bound {
                    return Ok(None);
                }
                if d > best.0 {
                    best = (d, i, j);
                }
            }
        }
        Ok(Some(best))
    }

    /// A pair realizing the diameter, without any bound.
    pub fn farthest_pair(&self, points: &[GroupElement]) -> Result<(u32, usize, usize)> {
        Ok(self
            .diameter_witness(points, u32::MAX)?
            .expect("unbounded diameter scan always succeeds"))
    }
}

/// `ℓ¹` diameter as the largest spread of `Σ sᵢxᵢ` over sign vectors `s`.
fn l1_diameter(points: &[GroupElement], rank: usize) -> Result<(u32, usize, usize)> {
    let mut best = (0u32, 0usize, 0usize);
    if points.len() < 2 {
        return Ok(best);
    }
    for mask in 0..(1u32 << (rank - 1)) {
        let mut lo = (i64::MAX, 0usize);
        let mut hi = (i64::MIN, 0usize);
        for (i, p) in points.iter().enumerate() {
            let GroupElement::Vector(v) = p else {
                return Err(Error::KindMismatch {
                    group: format!("lattice:{rank}"),
                    element: p.to_string(),
                });
            };
            let s: i64 = v
                .iter()
                .enumerate()
                .map(|(k, x)| if k > 0 && mask & (1 << (k - 1)) != 0 { -x } else { *x })
                .sum();
            if s < lo.0 {
                lo = (s, i);
            }
            if s > hi.0 {
                hi = (s, i);
            }
        }
        let d = (hi.0 - lo.0) as u32;
        if d > best.0 {
            best = (d, lo.1.min(hi.1), lo.1.max(hi.1));
        }
    }
    Ok(best)
}

fn collect_layers(
    layers: &[Vec<GroupElement>],
    cap: usize,
    budget: usize,
    r: u32,
) -> Result<Vec<(GroupElement, u32)>> {
    let size: usize = layers.iter().map(Vec::len).sum();
    if size > cap.min(budget) {
        return Err(Error::BudgetExceeded {
            what: format!("ball of radius {r}"),
            budget: cap.min(budget),
        });
    }
    let mut out = Vec::with_capacity(size);
    for (k, layer) in layers.iter().enumerate() {
        out.extend(layer.iter().map(|g| (g.clone(), k as u32)));
    }
    Ok(out)
}

/// Groups indices by label, in order of first appearance.
pub(crate) fn group_indices(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = Vec::new();
    let mut blocks: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &l) in labels.iter().enumerate() {
        blocks
            .entry(l)
            .or_insert_with(|| {
                order.push(l);
                Vec::new()
            })
            .push(i);
    }
    order
        .into_iter()
        .map(|l| blocks.remove(&l).expect("label recorded"))
        .collect()
}

/// A finite closed ball with members in deterministic order.
#[derive(Clone, Debug)]
pub struct Ball {
    center: GroupElement,
    radius: u32,
    members: Vec<GroupElement>,
    distances: Vec<u32>,
    index: HashMap<GroupElement, usize>,
}

impl Ball {
    fn from_sorted(center: GroupElement, radius: u32, sorted: Vec<(GroupElement, u32)>) -> Self {
        let (members, distances): (Vec<_>, Vec<_>) = sorted.into_iter().unzip();
        let index = members
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Ball {
            center,
            radius,
            members,
            distances,
            index,
        }
    }

    pub fn center(&self) -> &GroupElement {
        &self.center
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn members(&self) -> &[GroupElement] {
        &self.members
    }

    /// Distance from the center of each member, aligned with `members()`.
    pub fn distances(&self) -> &[u32] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    pub fn position(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    /// Members at distance `≤ r` from the center (a sub-ball, same order).
    pub fn within(&self, r: u32) -> impl Iterator<Item = &GroupElement> {
        self.members
            .iter()
            .zip(&self.distances)
            .take_while(move |(_, d)| **d <= r)
            .map(|(m, _)| m)
    }
}

/// One observed `t ↦ s` data point of a map between metric spaces.
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeSample {
    pub max_s: u32,
    pub max_witness: (GroupElement, GroupElement),
    pub min_s: u32,
    pub min_witness: (GroupElement, GroupElement),
}

/// Observed control functions of a map: `t` is a source distance and the
/// samples record target distances of pairs realizing it.
#[derive(Clone, Debug, Serialize)]
pub struct LipschitzProfile {
    pub samples: BTreeMap<u32, EnvelopeSample>,
    /// Non-decreasing `Φ₊(t) = max { s : d ≤ t }`.
    pub upper: BTreeMap<u32, u32>,
    /// Non-decreasing `Φ₋(t) = min { s : d ≥ t }`.
    pub lower: Option<BTreeMap<u32, u32>>,
    pub coarse_surjectivity: Option<u32>,
}

impl LipschitzProfile {
    /// Builds the monotone envelopes from raw samples.
    pub fn from_samples(samples: BTreeMap<u32, EnvelopeSample>, with_lower: bool, surj: Option<u32>) -> Self {
        let mut upper = BTreeMap::new();
        let mut running = 0;
        for (t, s) in &samples {
            running = running.max(s.max_s);
            upper.insert(*t, running);
        }
        let lower = with_lower.then(|| {
            let mut lower = BTreeMap::new();
            let mut running = u32::MAX;
            for (t, s) in samples.iter().rev() {
                running = running.min(s.min_s);
                lower.insert(*t, running);
            }
            lower
        });
        LipschitzProfile {
            samples,
            upper,
            lower,
            coarse_surjectivity: surj,
        }
    }

    pub fn upper_at(&self, t: u32) -> Option<u32> {
        self.upper.range(..=t).next_back().map(|(_, s)| *s)
    }

    pub fn lower_at(&self, t: u32) -> Option<u32> {
        self.lower.as_ref()?.range(t..).next().map(|(_, s)| *s)
    }
}

pub(crate) fn record_sample(
    samples: &mut BTreeMap<u32, EnvelopeSample>,
    t: u32,
    s: u32,
    x: &GroupElement,
    y: &GroupElement,
) {
    match samples.get_mut(&t) {
        None => {
            samples.insert(
                t,
                EnvelopeSample {
                    max_s: s,
                    max_witness: (x.clone(), y.clone()),
                    min_s: s,
                    min_witness: (x.clone(), y.clone()),
                },
            );
        }
        Some(e) => {
            if s > e.max_s {
                e.max_s = s;
                e.max_witness = (x.clone(), y.clone());
            }
            if s < e.min_s {
                e.min_s = s;
                e.min_witness = (x.clone(), y.clone());
            }
        }
    }
}

/// Observed envelopes of `d2` against `d1`: evidence that the identity map
/// between two word metrics on the same group is a coarse equivalence.
pub fn metric_compare(m1: &ProperMetric, m2: &ProperMetric, window: &Ball) -> Result<LipschitzProfile> {
    if m1.group() != m2.group() {
        return Err(Error::DescriptorMismatch {
            expected: m1.group().to_string(),
            found: m2.group().to_string(),
        });
    }
    let pts = window.members();
    let mut samples = BTreeMap::new();
    for (i, x) in pts.iter().enumerate() {
        for y in &pts[i..] {
            let t = m1.distance(x, y)?;
            let s = m2.distance(x, y)?;
            record_sample(&mut samples, t, s, x, y);
        }
    }
    // The identity map is onto.
    Ok(LipschitzProfile::from_samples(samples, true, Some(0)))
}

/// Deterministic order used by ball members: by distance, then element.
pub fn member_order(a: &(GroupElement, u32), b: &(GroupElement, u32)) -> Ordering {
    a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0))
}

/// Elements of `points` as a set, for membership tests.
pub fn element_set(points: &[GroupElement]) -> HashSet<&GroupElement> {
    points.iter().collect()
}
