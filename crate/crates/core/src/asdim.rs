//! Colored covers at a fixed scale: validation, explicit lattice covers,
//! greedy search, uniform bounds for families, control of maps, pullback
//! of covers along a quasimorphism and the color-count comparison.
//!
//! A finite window can never certify an asymptotic dimension. Everything
//! here speaks of color counts at scale `r` on a given window.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::MAX_WITNESSES;
use crate::coarse_check::{kernel_window, lipschitz_scan, TheoremInstance};
use crate::error::{Error, Result};
use crate::group::{GroupDescriptor, GroupElement};
use crate::metric::{group_indices, Ball, ProperMetric};
use crate::quasimorphism::{DefectReport, Quasimorphism};

/// Number of coloring orderings tried per candidate clustering.
pub const ORDERINGS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cluster {
    pub color: usize,
    pub members: Vec<GroupElement>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverColoring {
    pub points: Vec<GroupElement>,
    pub clusters: Vec<Cluster>,
    pub r: u32,
    /// Claimed bound on cluster diameters.
    pub bound: u32,
}

impl CoverColoring {
    /// Number of distinct colors in use.
    pub fn colors(&self) -> usize {
        self.clusters
            .iter()
            .map(|c| c.color)
            .collect::<HashSet<_>>()
            .len()
    }

    /// Largest color index plus one.
    pub fn palette(&self) -> usize {
        self.clusters.iter().map(|c| c.color + 1).max().unwrap_or(0)
    }

    /// Members of each color, in point order.
    pub fn color_parts(&self) -> Vec<Vec<GroupElement>> {
        let mut parts = vec![Vec::new(); self.palette()];
        for c in &self.clusters {
            parts[c.color].extend(c.members.iter().cloned());
        }
        parts
    }

    pub fn summary(&self) -> CoverSummary {
        CoverSummary {
            points: self.points.len(),
            clusters: self.clusters.len(),
            colors: self.colors(),
            r: self.r,
            bound: self.bound,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CoverSummary {
    pub points: usize,
    pub clusters: usize,
    pub colors: usize,
    pub r: u32,
    pub bound: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Uncovered { point: GroupElement },
    Foreign { cluster: usize, point: GroupElement },
    TooClose {
        color: usize,
        clusters: (usize, usize),
        points: (GroupElement, GroupElement),
        distance: u32,
    },
    TooWide {
        cluster: usize,
        points: (GroupElement, GroupElement),
        diameter: u32,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub violation_count: usize,
}

/// Checks that the clusters cover the points, that distinct clusters of
/// one color are at distance `≥ r` and that every cluster has diameter
/// `≤ bound`.
pub fn validate_coloring(c: &CoverColoring, metric: &ProperMetric) -> Result<ValidationReport> {
    let mut violations = Vec::new();
    let mut count = 0usize;
    let mut push = |v: Violation, violations: &mut Vec<Violation>| {
        count += 1;
        if violations.len() < MAX_WITNESSES {
            violations.push(v);
        }
    };
    let index: HashMap<&GroupElement, usize> = c.points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); c.points.len()];
    for (k, cl) in c.clusters.iter().enumerate() {
        for m in &cl.members {
            match index.get(m) {
                Some(&i) => owners[i].push(k),
                None => push(
                    Violation::Foreign {
                        cluster: k,
                        point: m.clone(),
                    },
                    &mut violations,
                ),
            }
        }
    }
    for (i, o) in owners.iter().enumerate() {
        if o.is_empty() {
            push(
                Violation::Uncovered {
                    point: c.points[i].clone(),
                },
                &mut violations,
            );
        }
    }
    let mut clash = |i: usize, j: usize, d: u32, violations: &mut Vec<Violation>| {
        for &a in &owners[i] {
            for &b in &owners[j] {
                if a != b && c.clusters[a].color == c.clusters[b].color {
                    push(
                        Violation::TooClose {
                            color: c.clusters[a].color,
                            clusters: (a.min(b), a.max(b)),
                            points: (c.points[i].clone(), c.points[j].clone()),
                            distance: d,
                        },
                        violations,
                    );
                }
            }
        }
    };
    for i in 0..c.points.len() {
        if owners[i].len() > 1 {
            clash(i, i, 0, &mut violations);
        }
    }
    if c.r > 0 {
        for (i, j, d) in metric.close_pairs(&c.points, c.r - 1)? {
            clash(i, j, d, &mut violations);
        }
    }
    let widths: Vec<Result<Option<(u32, usize, usize)>>> = c
        .clusters
        .par_iter()
        .map(|cl| match metric.diameter_witness(&cl.members, c.bound)? {
            Some(_) => Ok(None),
            None => Ok(Some(metric.farthest_pair(&cl.members)?)),
        })
        .collect();
    for (k, w) in widths.into_iter().enumerate() {
        if let Some((d, a, b)) = w? {
            let m = &c.clusters[k].members;
            push(
                Violation::TooWide {
                    cluster: k,
                    points: (m[a].clone(), m[b].clone()),
                    diameter: d,
                },
                &mut violations,
            );
        }
    }
    Ok(ValidationReport {
        valid: count == 0,
        violations,
        violation_count: count,
    })
}

fn lattice_coords<'a>(metric: &ProperMetric, g: &'a GroupElement) -> Result<&'a [i64]> {
    metric.group().lattice_coordinates(g).ok_or_else(|| Error::KindMismatch {
        group: metric.group().to_string(),
        element: g.to_string(),
    })
}

/// Explicit covers of windows in `Z` and `Z²` with `n + 1` colors and
/// `D ≤ 8r`.
///
/// For `n = 1` the clusters are the closed intervals `[2rj, 2r(j+1)]`,
/// colored `j mod 2`, so `D = 2r`. For `n = 2` the plane is cut along a grid
/// of pitch `6r`: squares of half-width `2r` around grid vertices get
/// color 2, strips of half-width `r` along grid edges get color 1 and the
/// remaining face pieces get color 0.
pub fn lattice_cover(n: usize, window: &Ball, r: u32, metric: &ProperMetric) -> Result<CoverColoring> {
    if r == 0 {
        return Err(Error::Precondition("scale r must be positive".into()));
    }
    if metric.group() != &(GroupDescriptor::Lattice { rank: n }) || !(1..=2).contains(&n) {
        return Err(Error::Precondition(format!(
            "lattice covers exist for lattice:1 and lattice:2, got n = {n} over {}",
            metric.group()
        )));
    }
    let r64 = r as i64;
    let points = window.members().to_vec();
    let mut keyed: BTreeMap<(usize, i64, i64, u8), Vec<GroupElement>> = BTreeMap::new();
    let bound;
    if n == 1 {
        let len = 2 * r64;
        bound = 2 * r;
        for p in &points {
            let x = lattice_coords(metric, p)?[0];
            let j = x.div_euclid(len);
            keyed.entry(((j.rem_euclid(2)) as usize, j, 0, 0)).or_default().push(p.clone());
            if x.rem_euclid(len) == 0 {
                // right endpoint of the previous interval
                keyed
                    .entry((((j - 1).rem_euclid(2)) as usize, j - 1, 0, 0))
                    .or_default()
                    .push(p.clone());
            }
        }
    } else {
        let pitch = 6 * r64;
        let (w, h) = (r64, 2 * r64);
        bound = 8 * r;
        for p in &points {
            let v = lattice_coords(metric, p)?;
            let (x, y) = (v[0], v[1]);
            let (i, j) = ((x + pitch / 2).div_euclid(pitch), (y + pitch / 2).div_euclid(pitch));
            let (dx, dy) = ((x - i * pitch).abs(), (y - j * pitch).abs());
            let key = if dx <= h && dy <= h {
                (2, i, j, 0)
            } else if dy <= w {
                (1, x.div_euclid(pitch), j, 1)
            } else if dx <= w {
                (1, i, y.div_euclid(pitch), 2)
            } else {
                (0, x.div_euclid(pitch), y.div_euclid(pitch), 0)
            };
            keyed.entry(key).or_default().push(p.clone());
        }
    }
    let clusters = keyed
        .into_iter()
        .map(|((color, ..), members)| Cluster { color, members })
        .collect();
    let cover = CoverColoring {
        points,
        clusters,
        r,
        bound,
    };
    let report = validate_coloring(&cover, metric)?;
    if !report.valid {
        return Err(Error::Validation(format!(
            "lattice cover n = {n}, r = {r}: {:?}",
            report.violations.first()
        )));
    }
    Ok(cover)
}

/// Result of a greedy search. `coloring` is the best validated cover found;
/// `success` says whether it uses at most `max_colors` colors.
#[derive(Clone, Debug, Serialize)]
pub struct GreedyOutcome {
    pub coloring: CoverColoring,
    pub success: bool,
    pub max_colors: usize,
    pub d_budget: u32,
    pub candidate: &'static str,
    pub ordering: usize,
    pub attempts: Vec<Attempt>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Attempt {
    pub candidate: &'static str,
    /// `None` when some cluster exceeds the diameter budget.
    pub best_colors: Option<usize>,
}

impl GreedyOutcome {
    pub fn colors(&self) -> usize {
        self.coloring.colors()
    }
}

struct Candidate {
    name: &'static str,
    blocks: Vec<Vec<usize>>,
}

/// Greedy search for an `r`-disjoint cover with clusters of diameter
/// `≤ d_budget`.
///
/// Candidate clusterings: the whole set, balls of radius `⌊d_budget/2⌋`
/// around points in order, a brick-wall grid of pitch `2r` on `Z` and `Z²`,
/// and annuli of width `r` around the first point split into
/// `(r-1)`-components. Each candidate's conflict graph (clusters closer
/// than `r`) is colored by DSatur under [`ORDERINGS`] tie-break orders,
/// order 0 being construction order and the rest seeded shuffles. The
/// winner minimizes (colors, diameter, candidate, ordering).
pub fn greedy_cover(
    points: &[GroupElement],
    metric: &ProperMetric,
    r: u32,
    max_colors: usize,
    d_budget: u32,
    seed: u64,
) -> Result<GreedyOutcome> {
    if max_colors == 0 {
        return Err(Error::Precondition("max_colors must be at least 1".into()));
    }
    for p in points {
        metric.group().check(p)?;
    }
    let candidates = candidate_clusterings(points, metric, r, d_budget)?;
    let pairs = if r > 0 {
        metric.close_pairs(points, r - 1)?
    } else {
        Vec::new()
    };

    struct Scored {
        colors: usize,
        diameter: u32,
        candidate: usize,
        ordering: usize,
        assignment: Vec<usize>,
    }
    let mut attempts = Vec::new();
    let mut best: Option<Scored> = None;
    for (ci, cand) in candidates.iter().enumerate() {
        let diameters: Vec<Result<Option<u32>>> = cand
            .blocks
            .par_iter()
            .map(|b| {
                let members: Vec<GroupElement> = b.iter().map(|&i| points[i].clone()).collect();
                metric.diameter_within(&members, d_budget)
            })
            .collect();
        let mut diameter = 0;
        let mut fits = true;
        for d in diameters {
            match d? {
                Some(d) => diameter = diameter.max(d),
                None => fits = false,
            }
        }
        if !fits {
            attempts.push(Attempt {
                candidate: cand.name,
                best_colors: None,
            });
            continue;
        }
        let adjacency = conflict_graph(points.len(), &cand.blocks, &pairs);
        let colorings: Vec<(usize, Vec<usize>)> = (0..ORDERINGS)
            .into_par_iter()
            .map(|o| {
                let priority = ordering(cand.blocks.len(), o, seed);
                let assignment = dsatur(&adjacency, &priority);
                let colors = assignment.iter().map(|c| c + 1).max().unwrap_or(0);
                (colors, assignment)
            })
            .collect();
        let mut cand_best = usize::MAX;
        for (o, (colors, assignment)) in colorings.into_iter().enumerate() {
            cand_best = cand_best.min(colors);
            let better = match &best {
                None => true,
                Some(b) => (colors, diameter) < (b.colors, b.diameter),
            };
            if better {
                best = Some(Scored {
                    colors,
                    diameter,
                    candidate: ci,
                    ordering: o,
                    assignment,
                });
            }
        }
        attempts.push(Attempt {
            candidate: cand.name,
            best_colors: Some(cand_best),
        });
    }
    let best = best.expect("singleton clustering always fits");
    let cand = &candidates[best.candidate];
    let clusters = cand
        .blocks
        .iter()
        .zip(&best.assignment)
        .map(|(b, &color)| Cluster {
            color,
            members: b.iter().map(|&i| points[i].clone()).collect(),
        })
        .collect();
    let coloring = CoverColoring {
        points: points.to_vec(),
        clusters,
        r,
        bound: best.diameter,
    };
    let report = validate_coloring(&coloring, metric)?;
    if !report.valid {
        return Err(Error::Validation(format!(
            "greedy cover ({}) failed validation: {:?}",
            cand.name,
            report.violations.first()
        )));
    }
    Ok(GreedyOutcome {
        success: best.colors <= max_colors,
        coloring,
        max_colors,
        d_budget,
        candidate: cand.name,
        ordering: best.ordering,
        attempts,
    })
}

fn candidate_clusterings(points: &[GroupElement], metric: &ProperMetric, r: u32, d_budget: u32) -> Result<Vec<Candidate>> {
    let n = points.len();
    let mut out = Vec::new();
    if metric.diameter_within(points, d_budget)?.is_some() {
        out.push(Candidate {
            name: "whole",
            blocks: if n == 0 { Vec::new() } else { vec![(0..n).collect()] },
        });
    }
    out.push(Candidate {
        name: "balls",
        blocks: ball_clusters(points, metric, d_budget / 2)?,
    });
    if let GroupDescriptor::Lattice { rank } = metric.group() {
        if *rank <= 2 && r > 0 {
            out.push(Candidate {
                name: "brick-wall",
                blocks: brick_wall(points, metric, r, *rank)?,
            });
        }
    }
    if r > 0 && n > 0 {
        out.push(Candidate {
            name: "annuli",
            blocks: annuli(points, metric, r)?,
        });
    }
    Ok(out)
}

fn ball_clusters(points: &[GroupElement], metric: &ProperMetric, radius: u32) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    let mut assigned = vec![false; n];
    let mut blocks = Vec::new();
    let index: HashMap<&GroupElement, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let offsets = metric.offsets(radius, n.max(64));
    for c in 0..n {
        if assigned[c] {
            continue;
        }
        let mut block = Vec::new();
        match &offsets {
            Some(offsets) => {
                for (o, _) in offsets {
                    let q = metric.group().compose_unchecked(&points[c], o);
                    if let Some(&j) = index.get(&q) {
                        if !assigned[j] {
                            assigned[j] = true;
                            block.push(j);
                        }
                    }
                }
            }
            None => {
                for j in c..n {
                    if !assigned[j] && metric.distance(&points[c], &points[j])? <= radius {
                        assigned[j] = true;
                        block.push(j);
                    }
                }
            }
        }
        block.sort_unstable();
        blocks.push(block);
    }
    Ok(blocks)
}

fn brick_wall(points: &[GroupElement], metric: &ProperMetric, r: u32, rank: usize) -> Result<Vec<Vec<usize>>> {
    let pitch = 2 * r as i64;
    let mut labels = Vec::with_capacity(points.len());
    let mut keys: HashMap<(i64, i64), usize> = HashMap::new();
    for p in points {
        let v = lattice_coords(metric, p)?;
        let key = if rank == 1 {
            (v[0].div_euclid(pitch), 0)
        } else {
            let row = v[1].div_euclid(pitch);
            let shift = if row.rem_euclid(2) == 1 { r as i64 } else { 0 };
            ((v[0] - shift).div_euclid(pitch), row)
        };
        let next = keys.len();
        labels.push(*keys.entry(key).or_insert(next));
    }
    Ok(group_indices(&labels))
}

fn annuli(points: &[GroupElement], metric: &ProperMetric, r: u32) -> Result<Vec<Vec<usize>>> {
    let origin = &points[0];
    let mut layers: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        layers.entry(metric.distance(origin, p)? / r).or_default().push(i);
    }
    let mut blocks = Vec::new();
    for layer in layers.values() {
        let members: Vec<GroupElement> = layer.iter().map(|&i| points[i].clone()).collect();
        let labels = metric.component_labels(&members, r - 1)?;
        for block in group_indices(&labels) {
            blocks.push(block.into_iter().map(|k| layer[k]).collect());
        }
    }
    Ok(blocks)
}

/// Cluster adjacency: clusters containing a pair of points at distance `< r`.
fn conflict_graph(n: usize, blocks: &[Vec<usize>], pairs: &[(usize, usize, u32)]) -> Vec<Vec<usize>> {
    let mut owner = vec![usize::MAX; n];
    for (b, block) in blocks.iter().enumerate() {
        for &i in block {
            owner[i] = b;
        }
    }
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); blocks.len()];
    for &(i, j, _) in pairs {
        let (a, b) = (owner[i], owner[j]);
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    adj.into_iter()
        .map(|s| {
            let mut v: Vec<usize> = s.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect()
}

/// Tie-break rank per vertex: identity for ordering 0, a seeded shuffle
/// otherwise.
fn ordering(n: usize, index: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if index > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        order.shuffle(&mut rng);
    }
    let mut rank = vec![0; n];
    for (pos, v) in order.into_iter().enumerate() {
        rank[v] = pos;
    }
    rank
}

/// DSatur: repeatedly color the vertex with most distinct neighbor colors,
/// ties by degree and then by `rank`, using the smallest free color.
fn dsatur(adj: &[Vec<usize>], rank: &[usize]) -> Vec<usize> {
    let n = adj.len();
    let mut color = vec![usize::MAX; n];
    let mut seen: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    let mut heap: BinaryHeap<(usize, usize, Reverse<usize>, usize)> = (0..n)
        .map(|v| (0, adj[v].len(), Reverse(rank[v]), v))
        .collect();
    while let Some((sat, _, _, v)) = heap.pop() {
        if color[v] != usize::MAX || sat != seen[v].len() {
            continue;
        }
        let mut c = 0;
        while seen[v].contains(&c) {
            c += 1;
        }
        color[v] = c;
        for &u in &adj[v] {
            if color[u] == usize::MAX && seen[u].insert(c) {
                heap.push((seen[u].len(), adj[u].len(), Reverse(rank[u]), u));
            }
        }
    }
    color
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformProfile {
    pub r: u32,
    /// One bound valid for every member's coloring.
    pub bound: u32,
    pub max_colors_used: usize,
    pub within_limit: bool,
    pub colorings: Vec<CoverColoring>,
}

/// Greedy colorings of every family member at scale `r`, with the largest
/// cluster diameter over all of them as the common bound.
pub fn uniform_profile(
    family: &[Vec<GroupElement>],
    metric: &ProperMetric,
    r: u32,
    max_colors: usize,
    d_budget: u32,
    seed: u64,
) -> Result<UniformProfile> {
    if family.is_empty() {
        return Err(Error::Precondition("family must be nonempty".into()));
    }
    let outcomes: Vec<GreedyOutcome> = family
        .iter()
        .map(|member| greedy_cover(member, metric, r, max_colors, d_budget, seed))
        .collect::<Result<_>>()?;
    let bound = outcomes.iter().map(|o| o.coloring.bound).max().unwrap_or(0);
    let max_colors_used = outcomes.iter().map(|o| o.colors()).max().unwrap_or(0);
    Ok(UniformProfile {
        r,
        bound,
        max_colors_used,
        within_limit: outcomes.iter().all(|o| o.success),
        colorings: outcomes
            .into_iter()
            .map(|o| CoverColoring {
                bound,
                ..o.coloring
            })
            .collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MapControlReport {
    pub r_x: u32,
    pub r_y: u32,
    pub image_diameter: u32,
    pub parts: usize,
    pub max_parts: usize,
    /// Largest diameter of an `r_X`-component of a part.
    pub max_component_diameter: u32,
    pub witness: Option<(GroupElement, GroupElement)>,
    pub bound: Option<u32>,
    pub covers_a: bool,
    pub pass: bool,
}

/// Checks one decomposition of `A` for a map control function: at most
/// `max_parts` parts covering `A`, each with `r_X`-components of diameter
/// `≤ bound` (or just measured when no bound is given).
#[allow(clippy::too_many_arguments)]
pub fn map_control_check(
    f: &Quasimorphism,
    domain_metric: &ProperMetric,
    codomain_metric: &ProperMetric,
    a: &[GroupElement],
    r_x: u32,
    r_y: u32,
    decomposition: &[Vec<GroupElement>],
    max_parts: usize,
    bound: Option<u32>,
) -> Result<MapControlReport> {
    let image: Vec<GroupElement> = a.iter().map(|x| f.eval(x)).collect::<Result<_>>()?;
    let image_diameter = codomain_metric.diameter(&image)?;
    if image_diameter > r_y {
        return Err(Error::Precondition(format!(
            "diam f(A) = {image_diameter} exceeds R_Y = {r_y}"
        )));
    }
    let covered: HashSet<&GroupElement> = decomposition.iter().flatten().collect();
    let covers_a = a.iter().all(|x| covered.contains(x));
    let mut max_d = 0;
    let mut witness = None;
    for part in decomposition {
        for comp in domain_metric.r_components(part, r_x)? {
            let (d, i, j) = domain_metric.farthest_pair(&comp)?;
            if d > max_d || witness.is_none() {
                max_d = max_d.max(d);
                witness = Some((comp[i].clone(), comp[j].clone()));
            }
        }
    }
    let pass = covers_a && decomposition.len() <= max_parts && bound.is_none_or(|b| max_d <= b);
    Ok(MapControlReport {
        r_x,
        r_y,
        image_diameter,
        parts: decomposition.len(),
        max_parts,
        max_component_diameter: max_d,
        witness,
        bound,
        covers_a,
        pass,
    })
}

/// Observed values `D_f(r_X, R_Y)` for a map, each backed by a checked
/// decomposition.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MapControlProfile {
    pub entries: BTreeMap<String, MapControlReport>,
}

impl MapControlProfile {
    pub fn record(&mut self, report: MapControlReport) -> Result<()> {
        if !report.pass {
            return Err(Error::Precondition(format!(
                "decomposition for (r_X, R_Y) = ({}, {}) does not pass",
                report.r_x, report.r_y
            )));
        }
        self.entries.insert(format!("{},{}", report.r_x, report.r_y), report);
        Ok(())
    }

    pub fn value(&self, r_x: u32, r_y: u32) -> Option<u32> {
        self.entries
            .get(&format!("{r_x},{r_y}"))
            .map(|e| e.max_component_diameter)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PullbackReport {
    pub r_x: u32,
    pub r_y: u32,
    pub colors_y: usize,
    pub fiber_colors: usize,
    pub colors: usize,
    pub diameter: u32,
    pub valid: bool,
    pub validation: ValidationReport,
    pub coloring: CoverColoring,
}

/// Transports `cover_y` back along `f`: each `f⁻¹(U)` is colored at scale
/// `r_X + 1`, and the `r_X`-components of its color parts become pieces
/// colored `(color(U), part)`. Uses at most `colors_Y · (k + 1)` colors
/// where `k + 1` is the largest fiber color count.
pub fn pullback_assembly(
    inst: &TheoremInstance,
    window: &Ball,
    cover_y: &CoverColoring,
    r_x: u32,
    fiber_budget: u32,
    seed: u64,
) -> Result<PullbackReport> {
    let metric = &inst.domain_metric;
    let points = inst.xi_points(window);
    let values: Vec<GroupElement> = points.par_iter().map(|x| inst.f.eval(x)).collect::<Result<_>>()?;
    let mut pieces: Vec<(usize, usize, Vec<GroupElement>)> = Vec::new();
    let mut fiber_colors = 1;
    for u in &cover_y.clusters {
        let members: HashSet<&GroupElement> = u.members.iter().collect();
        let pre: Vec<GroupElement> = points
            .iter()
            .zip(&values)
            .filter(|(_, v)| members.contains(v))
            .map(|(x, _)| x.clone())
            .collect();
        if pre.is_empty() {
            continue;
        }
        let fiber = greedy_cover(&pre, metric, r_x + 1, usize::MAX, fiber_budget, seed)?;
        fiber_colors = fiber_colors.max(fiber.coloring.palette());
        for (part, members) in fiber.coloring.color_parts().into_iter().enumerate() {
            for comp in metric.r_components(&members, r_x)? {
                pieces.push((u.color, part, comp));
            }
        }
    }
    let mut diameter = 0;
    for (_, _, p) in &pieces {
        diameter = diameter.max(metric.diameter(p)?);
    }
    let clusters = pieces
        .into_iter()
        .map(|(cu, part, members)| Cluster {
            color: cu * fiber_colors + part,
            members,
        })
        .collect();
    let coloring = CoverColoring {
        points: points.clone(),
        clusters,
        r: r_x,
        bound: diameter,
    };
    let validation = validate_coloring(&coloring, metric)?;
    let colors_y = cover_y.colors();
    Ok(PullbackReport {
        r_x,
        r_y: cover_y.r,
        colors_y,
        fiber_colors,
        colors: coloring.colors(),
        diameter,
        valid: validation.valid,
        validation,
        coloring,
    })
}

/// Smallest `r_Y ≥ s_obs(r_X)` that keeps pulled-back pieces `r_X`-disjoint
/// on integer metrics: points at distance `< r_X` have images within
/// `s_obs(r_X - 1)`, so `r_Y` must exceed that.
pub fn compatible_r_y(s_at_r: u32, s_below_r: u32) -> u32 {
    s_at_r.max(s_below_r + 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct HurewiczRow {
    pub r: u32,
    pub d_budget: u32,
    pub colors_x: usize,
    pub d_x: u32,
    pub colors_y: usize,
    pub d_y: u32,
    pub colors_k: usize,
    pub d_k: u32,
    pub kernel_points: usize,
    pub holds: bool,
    pub pullback: PullbackSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct PullbackSummary {
    pub r_y: u32,
    pub colors: usize,
    pub colors_y: usize,
    pub fiber_colors: usize,
    pub diameter: u32,
    pub valid: bool,
    pub within_product_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HurewiczReport {
    pub instance: String,
    pub window_radius: u32,
    pub defect_radius: u32,
    /// Scales on `X`, `Y` and the kernel window are always equal.
    pub scale_policy: &'static str,
    pub rows: Vec<HurewiczRow>,
    pub pass: bool,
}

/// For each scale `r`: greedy color counts on the `Ξ`-window, the
/// `Λ`-window and the kernel window, all with diameter budget
/// `budget_factor·r`, compared via `colors_X ≤ colors_Y + colors_K - 1`;
/// plus the pullback cover at `r_X = r` and `r_Y` from [`compatible_r_y`].
pub fn hurewicz_report(
    inst: &TheoremInstance,
    defect: &DefectReport,
    scales: &[u32],
    window_radius: u32,
    budget_factor: u32,
    seed: u64,
) -> Result<HurewiczReport> {
    let xw = inst.domain_metric.ball_at_identity(window_radius)?;
    let yw = inst.codomain_metric.ball_at_identity(window_radius)?;
    let xs = inst.xi_points(&xw);
    let ys = inst.lambda.members_in(&yw);
    let kernel = kernel_window(inst, defect, &xw)?;
    let mut rows = Vec::new();
    for &r in scales {
        if r == 0 {
            return Err(Error::Precondition("scales must be positive".into()));
        }
        let budget = budget_factor.saturating_mul(r);
        let gx = greedy_cover(&xs, &inst.domain_metric, r, usize::MAX, budget, seed)?;
        let gy = greedy_cover(&ys, &inst.codomain_metric, r, usize::MAX, budget, seed)?;
        let gk = greedy_cover(&kernel, &inst.domain_metric, r, usize::MAX, budget, seed)?;
        let (cx, cy, ck) = (gx.colors(), gy.colors(), gk.colors());

        let at_r = inst.clone().with_window(window_radius);
        let scan = lipschitz_scan(&at_r, defect, &[r - 1, r])?;
        let r_y = compatible_r_y(scan.rows[1].s_obs, scan.rows[0].s_obs);
        let image: Vec<GroupElement> = {
            let mut v: Vec<GroupElement> = xs.iter().map(|x| inst.f.eval(x)).collect::<Result<_>>()?;
            v.sort();
            v.dedup();
            v
        };
        let y_budget = budget_factor.saturating_mul(r_y);
        let cover_y = greedy_cover(&image, &inst.codomain_metric, r_y, usize::MAX, y_budget, seed)?;
        let pb = pullback_assembly(inst, &xw, &cover_y.coloring, r, budget, seed)?;
        rows.push(HurewiczRow {
            r,
            d_budget: budget,
            colors_x: cx,
            d_x: gx.coloring.bound,
            colors_y: cy,
            d_y: gy.coloring.bound,
            colors_k: ck,
            d_k: gk.coloring.bound,
            kernel_points: kernel.len(),
            holds: cx + 1 <= cy + ck,
            pullback: PullbackSummary {
                r_y,
                colors: pb.colors,
                colors_y: pb.colors_y,
                fiber_colors: pb.fiber_colors,
                diameter: pb.diameter,
                valid: pb.valid,
                within_product_bound: pb.colors <= pb.colors_y * pb.fiber_colors,
            },
        });
    }
    Ok(HurewiczReport {
        instance: inst.name.clone(),
        window_radius,
        defect_radius: defect.window_radius,
        scale_policy: "equal r on X, Y and K",
        pass: rows.iter().all(|r| r.holds && r.pullback.valid),
        rows,
    })
}
