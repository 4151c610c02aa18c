//! Quasimorphisms between bundled groups and their observed defect sets.
//!
//! The left defect of `f` at a pair is `f(y)⁻¹f(x)⁻¹f(xy)` and the right
//! defect is `f(x)f(y)f(xy)⁻¹`. Only windowed sets are ever computed: a
//! [`DefectReport`] lists every value realized by a pair of window members,
//! each with the first pair (in window order) that produces it.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::approx::MAX_WITNESSES;
use crate::error::{Error, Result};
use crate::group::{GroupDescriptor, GroupElement, Letter};
use crate::metric::{Ball, ProperMetric};

/// Upper bound on `|window|²` for a single pair scan.
pub const DEFAULT_PAIR_BUDGET: usize = 100_000_000;

/// How occurrences of the Brooks word are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Counting {
    /// Every start position counts.
    #[default]
    Overlapping,
    /// Leftmost-greedy non-overlapping matches.
    Disjoint,
}

impl std::str::FromStr for Counting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "overlapping" => Ok(Counting::Overlapping),
            "disjoint" => Ok(Counting::Disjoint),
            other => Err(Error::parse("counting mode", other)),
        }
    }
}

/// A homomorphism given by the images of the standard generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homomorphism {
    domain: GroupDescriptor,
    codomain: GroupDescriptor,
    images: Vec<GroupElement>,
}

impl Homomorphism {
    /// Checks the images against the defining relations of the domain.
    pub fn new(domain: &GroupDescriptor, codomain: &GroupDescriptor, images: Vec<GroupElement>) -> Result<Self> {
        if images.len() != domain.generator_count() {
            return Err(Error::Precondition(format!(
                "{domain} has {} generators but {} images were given",
                domain.generator_count(),
                images.len()
            )));
        }
        for g in &images {
            codomain.check(g)?;
        }
        let hom = Homomorphism {
            domain: domain.clone(),
            codomain: codomain.clone(),
            images,
        };
        let labels = domain.generator_labels();
        for (lhs, rhs) in relations(domain) {
            if hom.eval_syllables(&lhs)? != hom.eval_syllables(&rhs)? {
                let show = |w: &[(usize, i64)]| {
                    w.iter()
                        .map(|(g, e)| format!("{}^{e}", labels[*g]))
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                return Err(Error::RelationViolated(format!(
                    "{} = {} fails in {codomain}",
                    show(&lhs),
                    show(&rhs)
                )));
            }
        }
        Ok(hom)
    }

    pub fn domain(&self) -> &GroupDescriptor {
        &self.domain
    }

    pub fn codomain(&self) -> &GroupDescriptor {
        &self.codomain
    }

    pub fn images(&self) -> &[GroupElement] {
        &self.images
    }

    pub fn apply(&self, g: &GroupElement) -> Result<GroupElement> {
        self.eval_syllables(&self.domain.syllables(g)?)
    }

    fn eval_syllables(&self, word: &[(usize, i64)]) -> Result<GroupElement> {
        let mut acc = self.codomain.identity();
        for &(gen, exp) in word {
            let p = self.codomain.power(&self.images[gen], exp)?;
            acc = self.codomain.compose_unchecked(&acc, &p);
        }
        Ok(acc)
    }

    fn render(&self) -> String {
        self.domain
            .generator_labels()
            .iter()
            .zip(&self.images)
            .map(|(l, g)| format!("{l}->{}", self.codomain.render(g)))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Defining relations `lhs = rhs` as syllable words over global generator
/// indices.
fn relations(group: &GroupDescriptor) -> Vec<(Vec<(usize, i64)>, Vec<(usize, i64)>)> {
    match group {
        GroupDescriptor::Free { .. } => Vec::new(),
        GroupDescriptor::Lattice { rank } => commutators(0..*rank, 0..*rank),
        GroupDescriptor::BaumslagSolitar12 => vec![(vec![(1, 1), (0, 1), (1, -1)], vec![(0, 2)])],
        GroupDescriptor::Product(l, r) => {
            let n = l.generator_count();
            let mut out = relations(l);
            for (a, b) in relations(r) {
                let shift = |w: Vec<(usize, i64)>| w.into_iter().map(|(g, e)| (g + n, e)).collect();
                out.push((shift(a), shift(b)));
            }
            out.extend(commutators(0..n, n..n + r.generator_count()));
            out
        }
    }
}

fn commutators(
    left: std::ops::Range<usize>,
    right: std::ops::Range<usize>,
) -> Vec<(Vec<(usize, i64)>, Vec<(usize, i64)>)> {
    let mut out = Vec::new();
    for i in left {
        for j in right.clone() {
            if i < j {
                out.push((vec![(i, 1), (j, 1)], vec![(j, 1), (i, 1)]));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    Homomorphism(Homomorphism),
    /// `g ↦ φ(g)·b(g)` with `b` a finite table and a default value.
    HomomorphismPlusBounded {
        hom: Homomorphism,
        table: BTreeMap<GroupElement, GroupElement>,
        default: GroupElement,
    },
    /// `h_w(v) = c_w(v) - c_{w⁻¹}(v)` on reduced words.
    Brooks { word: Vec<Letter>, counting: Counting },
    /// `Σ α(n_j)` over the syllable exponents; `alpha[i] = α(i + 1)`,
    /// extended oddly and clamped beyond the table.
    Rolli { alpha: Vec<i64> },
    /// `v ↦ ⟨linear, v⟩ + ⌊v[coord] / divisor⌋` on a lattice.
    FloorDivision {
        divisor: i64,
        coord: usize,
        linear: Vec<i64>,
    },
    ComposeWithHom {
        inner: Box<Quasimorphism>,
        outer: Homomorphism,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quasimorphism {
    domain: GroupDescriptor,
    codomain: GroupDescriptor,
    rule: Rule,
}

impl Quasimorphism {
    pub fn homomorphism(hom: Homomorphism) -> Self {
        Quasimorphism {
            domain: hom.domain.clone(),
            codomain: hom.codomain.clone(),
            rule: Rule::Homomorphism(hom),
        }
    }

    pub fn hom_plus_bounded(
        hom: Homomorphism,
        table: BTreeMap<GroupElement, GroupElement>,
        default: GroupElement,
    ) -> Result<Self> {
        for (k, v) in &table {
            hom.domain.check(k)?;
            hom.codomain.check(v)?;
        }
        hom.codomain.check(&default)?;
        Ok(Quasimorphism {
            domain: hom.domain.clone(),
            codomain: hom.codomain.clone(),
            rule: Rule::HomomorphismPlusBounded {
                hom,
                table,
                default,
            },
        })
    }

    pub fn brooks(domain: &GroupDescriptor, word: &GroupElement, counting: Counting) -> Result<Self> {
        let letters = match (domain, word) {
            (GroupDescriptor::Free { .. }, GroupElement::Word(w)) if !w.is_empty() => w.clone(),
            _ => {
                return Err(Error::Precondition(format!(
                    "Brooks maps need a nonempty reduced word in a free group, got {word} in {domain}"
                )))
            }
        };
        domain.check(word)?;
        Ok(Quasimorphism {
            domain: domain.clone(),
            codomain: GroupDescriptor::integers(),
            rule: Rule::Brooks {
                word: letters,
                counting,
            },
        })
    }

    pub fn rolli(domain: &GroupDescriptor, alpha: Vec<i64>) -> Result<Self> {
        if !matches!(domain, GroupDescriptor::Free { .. }) {
            return Err(Error::Precondition(format!("Rolli maps need a free group, got {domain}")));
        }
        if alpha.is_empty() {
            return Err(Error::Precondition("Rolli table must be nonempty".into()));
        }
        Ok(Quasimorphism {
            domain: domain.clone(),
            codomain: GroupDescriptor::integers(),
            rule: Rule::Rolli { alpha },
        })
    }

    /// `coord` is zero-based here; the text form is one-based.
    pub fn floor_division(domain: &GroupDescriptor, divisor: i64, coord: usize, linear: Option<Vec<i64>>) -> Result<Self> {
        let GroupDescriptor::Lattice { rank } = domain else {
            return Err(Error::Precondition(format!("floor division needs a lattice, got {domain}")));
        };
        if divisor < 2 {
            return Err(Error::Precondition(format!("divisor must be ≥ 2, got {divisor}")));
        }
        if coord >= *rank {
            return Err(Error::Precondition(format!("coordinate {} out of range for {domain}", coord + 1)));
        }
        let linear = linear.unwrap_or_else(|| vec![0; *rank]);
        if linear.len() != *rank {
            return Err(Error::Precondition(format!(
                "linear part has {} entries, {domain} needs {rank}",
                linear.len()
            )));
        }
        Ok(Quasimorphism {
            domain: domain.clone(),
            codomain: GroupDescriptor::integers(),
            rule: Rule::FloorDivision {
                divisor,
                coord,
                linear,
            },
        })
    }

    pub fn compose_with_hom(inner: Quasimorphism, outer: Homomorphism) -> Result<Self> {
        if outer.domain != inner.codomain {
            return Err(Error::DescriptorMismatch {
                expected: inner.codomain.to_string(),
                found: outer.domain.to_string(),
            });
        }
        Ok(Quasimorphism {
            domain: inner.domain.clone(),
            codomain: outer.codomain.clone(),
            rule: Rule::ComposeWithHom {
                inner: Box::new(inner),
                outer,
            },
        })
    }

    pub fn domain(&self) -> &GroupDescriptor {
        &self.domain
    }

    pub fn codomain(&self) -> &GroupDescriptor {
        &self.codomain
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn is_homomorphism(&self) -> bool {
        matches!(self.rule, Rule::Homomorphism(_))
    }

    pub fn eval(&self, g: &GroupElement) -> Result<GroupElement> {
        self.domain.check(g)?;
        self.eval_unchecked(g)
    }

    fn eval_unchecked(&self, g: &GroupElement) -> Result<GroupElement> {
        match &self.rule {
            Rule::Homomorphism(h) => h.apply(g),
            Rule::HomomorphismPlusBounded {
                hom,
                table,
                default,
            } => {
                let b = table.get(g).unwrap_or(default);
                Ok(self.codomain.compose_unchecked(&hom.apply(g)?, b))
            }
            Rule::Brooks { word, counting } => {
                let GroupElement::Word(v) = g else {
                    unreachable!("domain checked")
                };
                let inverse: Vec<Letter> = word.iter().rev().map(|l| l.inverted()).collect();
                let c = count(v, word, *counting) as i64 - count(v, &inverse, *counting) as i64;
                Ok(GroupElement::integer(c))
            }
            Rule::Rolli { alpha } => {
                let mut sum: i64 = 0;
                for (_, n) in self.domain.syllables(g)? {
                    sum = sum
                        .checked_add(rolli_alpha(alpha, n))
                        .ok_or_else(|| Error::Overflow(format!("evaluating Rolli map at {g}")))?;
                }
                Ok(GroupElement::integer(sum))
            }
            Rule::FloorDivision {
                divisor,
                coord,
                linear,
            } => {
                let GroupElement::Vector(v) = g else {
                    unreachable!("domain checked")
                };
                let overflow = || Error::Overflow(format!("evaluating floor division at {g}"));
                let mut sum = v[*coord].div_euclid(*divisor);
                for (c, x) in linear.iter().zip(v) {
                    sum = c
                        .checked_mul(*x)
                        .and_then(|t| t.checked_add(sum))
                        .ok_or_else(overflow)?;
                }
                Ok(GroupElement::integer(sum))
            }
            Rule::ComposeWithHom { inner, outer } => outer.apply(&inner.eval_unchecked(g)?),
        }
    }

    /// Parses a quasimorphism spec with the given domain.
    ///
    /// Forms: `brooks:w=ab[,counting=disjoint]`, `rolli:sign`,
    /// `rolli:alpha=1,1,2`, `floordiv:q=2,coord=1[,linear=1:0]`,
    /// `hom:a->X;b->Y`, `homplus:a->X;b->Y|g=h;g=h|default=h` and
    /// `compose(hom:..., INNER)`. Homomorphisms map into `codomain`, or into
    /// `Z` when none is given.
    pub fn parse(spec: &str, domain: &GroupDescriptor, codomain: Option<&GroupDescriptor>) -> Result<Self> {
        let spec = spec.trim();
        let bad = |m: &str| Error::parse("quasimorphism", format!("{m} in {spec:?}"));
        let integers = GroupDescriptor::integers();
        let target = codomain.unwrap_or(&integers);
        if let Some(body) = spec.strip_prefix("compose(").and_then(|s| s.strip_suffix(')')) {
            let split = top_level_comma(body).ok_or_else(|| bad("compose needs two arguments"))?;
            let (outer, inner) = (body[..split].trim(), body[split + 1..].trim());
            let inner = Self::parse(inner, domain, None)?;
            let images = outer.strip_prefix("hom:").ok_or_else(|| bad("outer map must be hom:"))?;
            let outer = parse_hom(images, &inner.codomain, target)?;
            return Self::compose_with_hom(inner, outer);
        }
        let (kind, body) = spec.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        match kind {
            "hom" => Ok(Self::homomorphism(parse_hom(body, domain, target)?)),
            "homplus" => {
                let parts: Vec<&str> = body.split('|').collect();
                if parts.len() != 3 {
                    return Err(bad("homplus needs three '|'-separated parts"));
                }
                let hom = parse_hom(parts[0], domain, target)?;
                let mut table = BTreeMap::new();
                for entry in parts[1].split(';').filter(|s| !s.trim().is_empty()) {
                    let (k, v) = entry.split_once('=').ok_or_else(|| bad("table entry needs '='"))?;
                    table.insert(domain.parse_element(k)?, target.parse_element(v)?);
                }
                let default = parts[2]
                    .trim()
                    .strip_prefix("default=")
                    .ok_or_else(|| bad("missing default="))?;
                Self::hom_plus_bounded(hom, table, target.parse_element(default)?)
            }
            "brooks" => {
                let mut word = None;
                let mut counting = Counting::default();
                for kv in body.split(',') {
                    match kv.trim().split_once('=') {
                        Some(("w", w)) => word = Some(domain.parse_element(w)?),
                        Some(("counting", c)) => counting = c.parse()?,
                        _ => return Err(bad("unknown brooks parameter")),
                    }
                }
                Self::brooks(domain, &word.ok_or_else(|| bad("missing w="))?, counting)
            }
            "rolli" => {
                if body.trim() == "sign" {
                    return Self::rolli(domain, vec![1]);
                }
                let values = body
                    .trim()
                    .strip_prefix("alpha=")
                    .ok_or_else(|| bad("expected sign or alpha="))?;
                let alpha = values
                    .split(',')
                    .map(|v| v.trim().parse::<i64>().map_err(|_| bad("bad alpha value")))
                    .collect::<Result<Vec<_>>>()?;
                Self::rolli(domain, alpha)
            }
            "floordiv" => {
                let (mut q, mut coord, mut linear) = (None, None, None);
                for kv in body.split(',') {
                    match kv.trim().split_once('=') {
                        Some(("q", v)) => q = Some(v.trim().parse::<i64>().map_err(|_| bad("bad q"))?),
                        Some(("coord", v)) => {
                            coord = Some(v.trim().parse::<usize>().map_err(|_| bad("bad coord"))?)
                        }
                        Some(("linear", v)) => {
                            linear = Some(
                                v.split(':')
                                    .map(|c| c.trim().parse::<i64>().map_err(|_| bad("bad linear entry")))
                                    .collect::<Result<Vec<_>>>()?,
                            )
                        }
                        _ => return Err(bad("unknown floordiv parameter")),
                    }
                }
                let coord = coord.unwrap_or(1);
                if coord == 0 {
                    return Err(bad("coord is one-based"));
                }
                Self::floor_division(domain, q.ok_or_else(|| bad("missing q="))?, coord - 1, linear)
            }
            _ => Err(bad("unknown kind")),
        }
    }

    /// Observed left and right defect sets over all pairs of `window`.
    pub fn defect_observed(&self, window: &Ball, codomain_metric: &ProperMetric) -> Result<DefectReport> {
        self.defect_observed_budgeted(window, codomain_metric, DEFAULT_PAIR_BUDGET)
    }

    pub fn defect_observed_budgeted(
        &self,
        window: &Ball,
        codomain_metric: &ProperMetric,
        pair_budget: usize,
    ) -> Result<DefectReport> {
        self.check_metric(codomain_metric)?;
        let values = self.prepare(window, pair_budget)?;
        let h = &self.codomain;
        let rows: Vec<Result<(BTreeMap<GroupElement, usize>, BTreeMap<GroupElement, usize>)>> = (0..values.len())
            .into_par_iter()
            .map(|i| {
                let mut left = BTreeMap::new();
                let mut right = BTreeMap::new();
                for j in 0..values.len() {
                    let (l, r) = self.defects_at(&values, window, i, j)?;
                    left.entry(l).or_insert(j);
                    right.entry(r).or_insert(j);
                }
                Ok((left, right))
            })
            .collect();
        let mut left: BTreeMap<GroupElement, (usize, usize)> = BTreeMap::new();
        let mut right: BTreeMap<GroupElement, (usize, usize)> = BTreeMap::new();
        for (i, row) in rows.into_iter().enumerate() {
            let (l, r) = row?;
            for (z, j) in l {
                left.entry(z).or_insert((i, j));
            }
            for (z, j) in r {
                right.entry(z).or_insert((i, j));
            }
        }
        let entries = |m: BTreeMap<GroupElement, (usize, usize)>| -> Vec<DefectEntry> {
            m.into_iter()
                .map(|(element, (i, j))| DefectEntry {
                    element,
                    x: window.members()[i].clone(),
                    y: window.members()[j].clone(),
                })
                .collect()
        };
        let left = entries(left);
        let right = entries(right);
        let mut c = 0;
        let mut c_inverse = 0;
        for z in &left {
            c = c.max(codomain_metric.norm(&z.element)?);
            c_inverse = c_inverse.max(codomain_metric.norm(&h.invert_unchecked(&z.element))?);
        }
        Ok(DefectReport {
            window_radius: window.radius(),
            window_size: window.len(),
            left_defect: left,
            right_defect: right,
            c,
            c_inverse,
        })
    }

    /// Checks `f(xy) ∈ f(x)f(y)D` and `f(y)⁻¹f(x)⁻¹ ∈ D·f(xy)⁻¹` for every
    /// pair of `window`.
    pub fn check_defect_membership(&self, d: &[GroupElement], window: &Ball) -> Result<MembershipReport> {
        if d.is_empty() {
            return Err(Error::Precondition("defect set must be nonempty".into()));
        }
        for z in d {
            self.codomain.check(z)?;
        }
        let values = self.prepare(window, DEFAULT_PAIR_BUDGET)?;
        let h = &self.codomain;
        let rows: Vec<Result<(Vec<usize>, Vec<usize>)>> = (0..values.len())
            .into_par_iter()
            .map(|i| {
                let mut f3 = Vec::new();
                let mut f4 = Vec::new();
                for j in 0..values.len() {
                    let fx = &values[i];
                    let fy = &values[j];
                    let fxy = self.eval_unchecked(&self.domain.compose_unchecked(&window.members()[i], &window.members()[j]))?;
                    let fxfy = h.compose_unchecked(fx, fy);
                    if !d.iter().any(|z| h.compose_unchecked(&fxfy, z) == fxy) {
                        f3.push(j);
                    }
                    let lhs = h.compose_unchecked(&h.invert_unchecked(fy), &h.invert_unchecked(fx));
                    let fxy_inv = h.invert_unchecked(&fxy);
                    if !d.iter().any(|z| h.compose_unchecked(z, &fxy_inv) == lhs) {
                        f4.push(j);
                    }
                }
                Ok((f3, f4))
            })
            .collect();
        let mut report = MembershipReport {
            window_radius: window.radius(),
            pass: true,
            product_failures: Vec::new(),
            product_failure_count: 0,
            inverse_failures: Vec::new(),
            inverse_failure_count: 0,
        };
        let pair = |i: usize, j: usize| (window.members()[i].clone(), window.members()[j].clone());
        for (i, row) in rows.into_iter().enumerate() {
            let (f3, f4) = row?;
            report.product_failure_count += f3.len();
            report.inverse_failure_count += f4.len();
            for j in f3 {
                if report.product_failures.len() < MAX_WITNESSES {
                    report.product_failures.push(pair(i, j));
                }
            }
            for j in f4 {
                if report.inverse_failures.len() < MAX_WITNESSES {
                    report.inverse_failures.push(pair(i, j));
                }
            }
        }
        report.pass = report.product_failure_count == 0 && report.inverse_failure_count == 0;
        Ok(report)
    }

    /// Computes `C_obs` from the left defects and, independently,
    /// `max d′(f(xy), f(x)f(y))`, and counts pairs where
    /// `d′(f(xy), f(x)f(y)) ≠ d′(f(y)⁻¹f(x)⁻¹f(xy), e)`.
    pub fn bounded_distance_check(&self, window: &Ball, codomain_metric: &ProperMetric) -> Result<BoundedDistanceReport> {
        self.check_metric(codomain_metric)?;
        let values = self.prepare(window, DEFAULT_PAIR_BUDGET)?;
        let h = &self.codomain;
        let rows: Vec<Result<(u32, u32, Vec<usize>)>> = (0..values.len())
            .into_par_iter()
            .map(|i| {
                let (mut c, mut dist) = (0, 0);
                let mut bad = Vec::new();
                for j in 0..values.len() {
                    let fxy = self.eval_unchecked(&self.domain.compose_unchecked(&window.members()[i], &window.members()[j]))?;
                    let fxfy = h.compose_unchecked(&values[i], &values[j]);
                    let z = h.compose_unchecked(&h.invert_unchecked(&fxfy), &fxy);
                    let nz = codomain_metric.norm(&z)?;
                    let d = codomain_metric.distance(&fxy, &fxfy)?;
                    c = c.max(nz);
                    dist = dist.max(d);
                    if nz != d {
                        bad.push(j);
                    }
                }
                Ok((c, dist, bad))
            })
            .collect();
        let mut report = BoundedDistanceReport {
            window_radius: window.radius(),
            c_obs: 0,
            max_distance: 0,
            identity_failures: Vec::new(),
            identity_failure_count: 0,
        };
        for (i, row) in rows.into_iter().enumerate() {
            let (c, d, bad) = row?;
            report.c_obs = report.c_obs.max(c);
            report.max_distance = report.max_distance.max(d);
            report.identity_failure_count += bad.len();
            for j in bad {
                if report.identity_failures.len() < MAX_WITNESSES {
                    report
                        .identity_failures
                        .push((window.members()[i].clone(), window.members()[j].clone()));
                }
            }
        }
        Ok(report)
    }

    /// Left defect sets at each radius, compared for equality.
    pub fn defect_stabilization(
        &self,
        domain_metric: &ProperMetric,
        codomain_metric: &ProperMetric,
        radii: &[u32],
    ) -> Result<StabilizationReport> {
        let mut sets = Vec::new();
        for &r in radii {
            let w = domain_metric.ball_at_identity(r)?;
            sets.push(self.defect_observed(&w, codomain_metric)?.left_elements());
        }
        let stable = sets.windows(2).all(|p| p[0] == p[1]);
        Ok(StabilizationReport {
            radii: radii.to_vec(),
            sizes: sets.iter().map(Vec::len).collect(),
            stable,
        })
    }

    fn check_metric(&self, m: &ProperMetric) -> Result<()> {
        if m.group() != &self.codomain {
            return Err(Error::DescriptorMismatch {
                expected: self.codomain.to_string(),
                found: m.group().to_string(),
            });
        }
        Ok(())
    }

    /// Values of `f` on the window, after the domain and pair-budget checks.
    fn prepare(&self, window: &Ball, pair_budget: usize) -> Result<Vec<GroupElement>> {
        self.domain.check(window.center())?;
        let n = window.len();
        if n.saturating_mul(n) > pair_budget {
            return Err(Error::BudgetExceeded {
                what: format!("pair scan over {n} window points"),
                budget: pair_budget,
            });
        }
        window
            .members()
            .par_iter()
            .map(|g| self.eval_unchecked(g))
            .collect()
    }

    fn defects_at(&self, values: &[GroupElement], window: &Ball, i: usize, j: usize) -> Result<(GroupElement, GroupElement)> {
        let h = &self.codomain;
        let xy = self.domain.compose_unchecked(&window.members()[i], &window.members()[j]);
        let fxy = self.eval_unchecked(&xy)?;
        let (fx, fy) = (&values[i], &values[j]);
        let left = h.compose_unchecked(
            &h.compose_unchecked(&h.invert_unchecked(fy), &h.invert_unchecked(fx)),
            &fxy,
        );
        let right = h.compose_unchecked(&h.compose_unchecked(fx, fy), &h.invert_unchecked(&fxy));
        Ok((left, right))
    }
}

fn count(v: &[Letter], w: &[Letter], counting: Counting) -> usize {
    if w.len() > v.len() {
        return 0;
    }
    match counting {
        Counting::Overlapping => v.windows(w.len()).filter(|s| *s == w).count(),
        Counting::Disjoint => {
            let (mut i, mut n) = (0, 0);
            while i + w.len() <= v.len() {
                if &v[i..i + w.len()] == w {
                    n += 1;
                    i += w.len();
                } else {
                    i += 1;
                }
            }
            n
        }
    }
}

fn rolli_alpha(alpha: &[i64], n: i64) -> i64 {
    if n == 0 {
        return 0;
    }
    let k = (n.unsigned_abs() as usize).min(alpha.len());
    n.signum() * alpha[k - 1]
}

fn parse_hom(body: &str, domain: &GroupDescriptor, codomain: &GroupDescriptor) -> Result<Homomorphism> {
    let labels = domain.generator_labels();
    let mut images: Vec<Option<GroupElement>> = vec![None; labels.len()];
    for entry in body.split(';').filter(|s| !s.trim().is_empty()) {
        let (k, v) = entry
            .split_once("->")
            .ok_or_else(|| Error::parse("homomorphism", format!("entry {entry:?} needs '->'")))?;
        let idx = labels
            .iter()
            .position(|l| l == k.trim())
            .ok_or_else(|| Error::parse("homomorphism", format!("unknown generator {:?} of {domain}", k.trim())))?;
        images[idx] = Some(codomain.parse_element(v)?);
    }
    let images = images
        .into_iter()
        .zip(&labels)
        .map(|(g, l)| g.ok_or_else(|| Error::parse("homomorphism", format!("no image for generator {l}"))))
        .collect::<Result<Vec<_>>>()?;
    Homomorphism::new(domain, codomain, images)
}

fn top_level_comma(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

impl fmt::Display for Quasimorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::Homomorphism(h) => write!(f, "hom:{}", h.render()),
            Rule::HomomorphismPlusBounded {
                hom,
                table,
                default,
            } => {
                let entries: Vec<String> = table
                    .iter()
                    .map(|(k, v)| format!("{}={}", self.domain.render(k), self.codomain.render(v)))
                    .collect();
                write!(
                    f,
                    "homplus:{}|{}|default={}",
                    hom.render(),
                    entries.join(";"),
                    self.codomain.render(default)
                )
            }
            Rule::Brooks { word, counting } => {
                let w = self.domain.render(&GroupElement::Word(word.clone()));
                match counting {
                    Counting::Overlapping => write!(f, "brooks:w={w}"),
                    Counting::Disjoint => write!(f, "brooks:w={w},counting=disjoint"),
                }
            }
            Rule::Rolli { alpha } if alpha == &[1] => f.write_str("rolli:sign"),
            Rule::Rolli { alpha } => {
                let a: Vec<String> = alpha.iter().map(i64::to_string).collect();
                write!(f, "rolli:alpha={}", a.join(","))
            }
            Rule::FloorDivision {
                divisor,
                coord,
                linear,
            } => {
                write!(f, "floordiv:q={divisor},coord={}", coord + 1)?;
                if linear.iter().any(|c| *c != 0) {
                    let l: Vec<String> = linear.iter().map(i64::to_string).collect();
                    write!(f, ",linear={}", l.join(":"))?;
                }
                Ok(())
            }
            Rule::ComposeWithHom { inner, outer } => write!(f, "compose(hom:{}, {inner})", outer.render()),
        }
    }
}

impl Serialize for Quasimorphism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DefectEntry {
    pub element: GroupElement,
    pub x: GroupElement,
    pub y: GroupElement,
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    pub window_radius: u32,
    pub window_size: usize,
    pub left_defect: Vec<DefectEntry>,
    pub right_defect: Vec<DefectEntry>,
    /// `max ‖z‖` over the left defect set.
    pub c: u32,
    /// The same maximum over inverses; equal to `c` for word metrics.
    pub c_inverse: u32,
}

impl DefectReport {
    pub fn left_elements(&self) -> Vec<GroupElement> {
        self.left_defect.iter().map(|e| e.element.clone()).collect()
    }

    pub fn right_elements(&self) -> Vec<GroupElement> {
        self.right_defect.iter().map(|e| e.element.clone()).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    pub window_radius: u32,
    pub pass: bool,
    pub product_failures: Vec<(GroupElement, GroupElement)>,
    pub product_failure_count: usize,
    pub inverse_failures: Vec<(GroupElement, GroupElement)>,
    pub inverse_failure_count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundedDistanceReport {
    pub window_radius: u32,
    pub c_obs: u32,
    pub max_distance: u32,
    pub identity_failures: Vec<(GroupElement, GroupElement)>,
    pub identity_failure_count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizationReport {
    pub radii: Vec<u32>,
    pub sizes: Vec<usize>,
    pub stable: bool,
}
