//! Windowed checks of the constant chain for coarse Lipschitz control of a
//! quasimorphism and of the set containments behind the Hurewicz-type bound.
//!
//! Every check runs on the ball of radius `ρ` around the identity (the left
//! window). Sets that the argument needs on the right-hand side of a
//! containment are drawn from the ball of radius `4ρ` (the right window),
//! so truncation of the right side cannot produce failures on its own.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{ApproximateGroup, MAX_WITNESSES};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::metric::{record_sample, Ball, LipschitzProfile, ProperMetric};
use crate::quasimorphism::{DefectReport, Quasimorphism};

/// A quasimorphism of approximate groups `f: (Ξ, Ξ^∞) → (Λ, Λ^∞)` together
/// with metrics, a window radius and a scale.
#[derive(Clone, Debug)]
pub struct TheoremInstance {
    pub name: String,
    pub f: Quasimorphism,
    pub xi: ApproximateGroup,
    pub lambda: ApproximateGroup,
    pub domain_metric: Arc<ProperMetric>,
    pub codomain_metric: Arc<ProperMetric>,
    pub window_radius: u32,
    pub scale: u32,
}

impl TheoremInstance {
    /// Uses the standard word metrics on both sides.
    pub fn new(
        name: impl Into<String>,
        f: Quasimorphism,
        xi: ApproximateGroup,
        lambda: ApproximateGroup,
        window_radius: u32,
        scale: u32,
    ) -> Result<Self> {
        if xi.ambient() != f.domain() {
            return Err(Error::DescriptorMismatch {
                expected: f.domain().to_string(),
                found: xi.ambient().to_string(),
            });
        }
        if lambda.ambient() != f.codomain() {
            return Err(Error::DescriptorMismatch {
                expected: f.codomain().to_string(),
                found: lambda.ambient().to_string(),
            });
        }
        if scale == 0 {
            return Err(Error::Precondition("scale r must be positive".into()));
        }
        Ok(TheoremInstance {
            name: name.into(),
            domain_metric: Arc::new(ProperMetric::standard(f.domain())),
            codomain_metric: Arc::new(ProperMetric::standard(f.codomain())),
            f,
            xi,
            lambda,
            window_radius,
            scale,
        })
    }

    pub fn with_window(mut self, radius: u32) -> Self {
        self.window_radius = radius;
        self
    }

    pub fn with_scale(mut self, r: u32) -> Self {
        self.scale = r;
        self
    }

    pub fn left_window(&self) -> Result<Ball> {
        self.domain_metric.ball_at_identity(self.window_radius)
    }

    pub fn right_window(&self) -> Result<Ball> {
        self.domain_metric.ball_at_identity(self.window_radius.saturating_mul(4))
    }

    /// `Ξ ∩ window`, in window order.
    pub fn xi_points(&self, window: &Ball) -> Vec<GroupElement> {
        self.xi.members_in(window)
    }

    /// The observed defect report on `Ξ ∩ left window`.
    pub fn defect(&self) -> Result<DefectReport> {
        self.f.defect_observed(&self.left_window()?, &self.codomain_metric)
    }

    /// Points of `Ξ ∩ window` whose image leaves `Λ`.
    pub fn image_violations(&self, window: &Ball) -> Result<Vec<GroupElement>> {
        let mut out = Vec::new();
        for x in self.xi_points(window) {
            if !self.lambda.contains(&self.f.eval(&x)?) {
                out.push(x);
            }
        }
        Ok(out)
    }

    fn values(&self, points: &[GroupElement]) -> Result<Vec<GroupElement>> {
        points.par_iter().map(|x| self.f.eval(x)).collect()
    }

    fn image_norm(&self, g: &GroupElement) -> Result<u32> {
        self.codomain_metric.norm(g)
    }

    fn codomain_distance(&self, a: &GroupElement, b: &GroupElement) -> Result<u32> {
        self.codomain_metric.distance(a, b)
    }

    /// `B′(e, r) ∩ Λ²`, computed inside the codomain ball of radius `4r`.
    pub fn small_squares(&self) -> Result<Vec<GroupElement>> {
        let cw = self.codomain_metric.ball_at_identity(self.scale.saturating_mul(4))?;
        let squares = self.lambda.power_window(2, &cw)?;
        let mut out = Vec::new();
        for g in squares {
            if self.image_norm(&g)? < self.scale {
                out.push(g);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzRow {
    pub t: u32,
    pub s_obs: u32,
    pub witness: Option<(GroupElement, GroupElement)>,
    /// `S(t) = max ‖f(ξ)‖` over the closed ball of radius `t`.
    pub s_ball: u32,
    pub bound: u32,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub window_radius: u32,
    pub defect_radius: u32,
    pub c_obs: u32,
    pub rows: Vec<LipschitzRow>,
    pub profile: LipschitzProfile,
    pub pass: bool,
}

/// For each `t`: `s_obs(t)` over window pairs at distance `≤ t`, checked
/// against `3·C_obs + S(t)`.
pub fn lipschitz_scan(inst: &TheoremInstance, defect: &DefectReport, t_values: &[u32]) -> Result<LipschitzReport> {
    let window = inst.left_window()?;
    let points = inst.xi_points(&window);
    let values = inst.values(&points)?;
    let t_max = t_values.iter().copied().max().unwrap_or(0);
    let mut samples = BTreeMap::new();
    if let Some(p) = points.first() {
        record_sample(&mut samples, 0, 0, p, p);
    }
    for (i, j, d) in inst.domain_metric.close_pairs(&points, t_max)? {
        let s = inst.codomain_distance(&values[i], &values[j])?;
        record_sample(&mut samples, d, s, &points[i], &points[j]);
    }
    let profile = LipschitzProfile::from_samples(samples, false, None);
    let c = defect.c;
    let mut rows = Vec::new();
    for &t in t_values {
        let ball = inst.domain_metric.ball_at_identity(t)?;
        let mut s_ball = 0;
        for x in inst.xi_points(&ball) {
            s_ball = s_ball.max(inst.image_norm(&inst.f.eval(&x)?)?);
        }
        let s_obs = profile.upper_at(t).unwrap_or(0);
        let witness = profile
            .samples
            .range(..=t)
            .find(|(_, e)| e.max_s == s_obs)
            .map(|(_, e)| e.max_witness.clone());
        let bound = 3 * c + s_ball;
        rows.push(LipschitzRow {
            t,
            s_obs,
            witness,
            s_ball,
            bound,
            pass: s_obs <= bound,
        });
    }
    Ok(LipschitzReport {
        window_radius: window.radius(),
        defect_radius: defect.window_radius,
        c_obs: c,
        pass: rows.iter().all(|r| r.pass),
        rows,
        profile,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub window_radius: u32,
    pub gap: u32,
    pub witness: Option<GroupElement>,
    pub bound: u32,
    pub pass: bool,
}

/// `max d′(f(η), f(η⁻¹)⁻¹)` over the window, checked against `2·C_obs`.
pub fn symmetry_gap(inst: &TheoremInstance, defect: &DefectReport) -> Result<SymmetryReport> {
    let window = inst.left_window()?;
    let h = inst.f.codomain();
    let mut gap = 0;
    let mut witness = None;
    for x in inst.xi_points(&window) {
        let fx = inst.f.eval(&x)?;
        let fxi = inst.f.eval(&inst.f.domain().invert_unchecked(&x))?;
        let d = inst.codomain_distance(&fx, &h.invert_unchecked(&fxi))?;
        if d > gap || witness.is_none() {
            gap = gap.max(d);
            witness = Some(x);
        }
    }
    Ok(SymmetryReport {
        window_radius: window.radius(),
        gap,
        witness,
        bound: 2 * defect.c,
        pass: gap <= 2 * defect.c,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub window_radius: u32,
    /// `f(e)⁻¹` is an observed left defect.
    pub identity_image_in_defect_inverse: bool,
    /// `max d′(f(η⁻¹)f(ξ), f(η⁻¹ξ))` over window pairs.
    pub cc_max: u32,
    pub cc_witness: Option<(GroupElement, GroupElement)>,
    pub c_obs: u32,
    pub pass: bool,
}

pub fn chain_facts(inst: &TheoremInstance, defect: &DefectReport) -> Result<ChainReport> {
    let window = inst.left_window()?;
    let points = inst.xi_points(&window);
    let values = inst.values(&points)?;
    let g = inst.f.domain();
    let h = inst.f.codomain();
    let fe = inst.f.eval(&g.identity())?;
    let fe_inv = h.invert_unchecked(&fe);
    let in_d_inv = defect.left_defect.iter().any(|z| z.element == fe_inv);
    let inverse_values: Vec<GroupElement> = points
        .par_iter()
        .map(|x| inst.f.eval(&g.invert_unchecked(x)))
        .collect::<Result<_>>()?;
    let rows: Vec<Result<(u32, usize)>> = (0..points.len())
        .into_par_iter()
        .map(|j| {
            // η = points[j], ξ = points[i]
            let eta_inv = g.invert_unchecked(&points[j]);
            let mut best = (0, 0);
            for i in 0..points.len() {
                let lhs = h.compose_unchecked(&inverse_values[j], &values[i]);
                let rhs = inst.f.eval(&g.compose_unchecked(&eta_inv, &points[i]))?;
                let d = inst.codomain_distance(&lhs, &rhs)?;
                if d > best.0 {
                    best = (d, i);
                }
            }
            Ok(best)
        })
        .collect();
    let mut cc_max = 0;
    let mut cc_witness = None;
    for (j, row) in rows.into_iter().enumerate() {
        let (d, i) = row?;
        if d > cc_max {
            cc_max = d;
            cc_witness = Some((points[i].clone(), points[j].clone()));
        }
    }
    Ok(ChainReport {
        window_radius: window.radius(),
        identity_image_in_defect_inverse: in_d_inv,
        cc_max,
        cc_witness,
        c_obs: defect.c,
        pass: in_d_inv && cc_max <= defect.c,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Fiber {
    pub lambda: GroupElement,
    pub members: Vec<GroupElement>,
}

/// `{ξ ∈ Ξ ∩ window : d′(f(ξ), λ) < r}` for each distinct `λ ∈ f(Ξ ∩ window)`,
/// ordered by `λ`.
pub fn fiber_family(inst: &TheoremInstance, window: &Ball) -> Result<Vec<Fiber>> {
    let points = inst.xi_points(window);
    let values = inst.values(&points)?;
    let image: BTreeSet<&GroupElement> = values.iter().collect();
    image
        .into_par_iter()
        .map(|lambda| {
            let mut members = Vec::new();
            for (x, v) in points.iter().zip(&values) {
                if inst.codomain_distance(v, lambda)? < inst.scale {
                    members.push(x.clone());
                }
            }
            Ok(Fiber {
                lambda: lambda.clone(),
                members,
            })
        })
        .collect()
}

/// `f(e)·D⁻¹·M·D` as a set.
fn sandwich(inst: &TheoremInstance, defect: &DefectReport, middle: &[GroupElement]) -> Result<HashSet<GroupElement>> {
    let h = inst.f.codomain();
    let fe = inst.f.eval(&inst.f.domain().identity())?;
    let d = defect.left_elements();
    let mut out = HashSet::new();
    for di in &d {
        let left = h.compose_unchecked(&fe, &h.invert_unchecked(di));
        for m in middle {
            let lm = h.compose_unchecked(&left, m);
            for dj in &d {
                out.insert(h.compose_unchecked(&lm, dj));
            }
        }
    }
    Ok(out)
}

/// Kernel targets `f(e)·D⁻¹·D`.
pub fn kernel_targets(inst: &TheoremInstance, defect: &DefectReport) -> Result<HashSet<GroupElement>> {
    sandwich(inst, defect, &[inst.f.codomain().identity()])
}

/// `K = {ξ ∈ Ξ ∩ window : f(ξ) ∈ f(e)·D⁻¹·D}`, in window order.
pub fn kernel_window(inst: &TheoremInstance, defect: &DefectReport, window: &Ball) -> Result<Vec<GroupElement>> {
    let targets = kernel_targets(inst, defect)?;
    let points = inst.xi_points(window);
    let values = inst.values(&points)?;
    Ok(points
        .into_iter()
        .zip(values)
        .filter(|(_, v)| targets.contains(v))
        .map(|(x, _)| x)
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainmentFailure {
    pub lambda: GroupElement,
    pub z: GroupElement,
    /// `1`: `f(ξ_λ)⁻¹f(z) ∉ B′(e, r) ∩ Λ²`; `2`: `ξ_λ⁻¹z` misses the preimage.
    pub step: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlmostReport {
    pub r: u32,
    pub left_radius: u32,
    pub right_radius: u32,
    pub defect_radius: u32,
    pub fibers: usize,
    pub checked: usize,
    pub small_squares: usize,
    pub targets: usize,
    pub representatives: Vec<(GroupElement, GroupElement)>,
    pub failures: Vec<ContainmentFailure>,
    pub failure_count: usize,
    /// Set when the check failed with the given defect set but passes with
    /// the defect set observed at this larger radius.
    pub repaired_at: Option<u32>,
    pub pass: bool,
}

/// Checks that each fiber `f⁻¹(B′(λ, r))` lies in
/// `ξ_λ · f⁻¹(f(e)·D⁻¹·(B′(e, r) ∩ Λ²)·D)` on the window.
pub fn containment_almost(inst: &TheoremInstance, defect: &DefectReport) -> Result<AlmostReport> {
    let mut report = almost_with(inst, defect)?;
    if !report.pass {
        for radius in [inst.window_radius + 1, inst.window_radius.saturating_mul(2)] {
            let w = inst.domain_metric.ball_at_identity(radius)?;
            let larger = inst.f.defect_observed(&w, &inst.codomain_metric)?;
            if almost_with(inst, &larger)?.pass {
                report.repaired_at = Some(radius);
                break;
            }
        }
    }
    Ok(report)
}

fn almost_with(inst: &TheoremInstance, defect: &DefectReport) -> Result<AlmostReport> {
    let g = inst.f.domain();
    let h = inst.f.codomain();
    let left = inst.left_window()?;
    let right_radius = inst.window_radius.saturating_mul(4);
    let points = inst.xi_points(&left);
    let values = inst.values(&points)?;
    let squares = inst.small_squares()?;
    let square_set: HashSet<&GroupElement> = squares.iter().collect();
    let targets = sandwich(inst, defect, &squares)?;

    // ξ_λ: first preimage in window order, i.e. minimal norm then total order.
    let mut reps: BTreeMap<&GroupElement, usize> = BTreeMap::new();
    for (i, v) in values.iter().enumerate() {
        reps.entry(v).or_insert(i);
    }
    let mut failures = Vec::new();
    let mut failure_count = 0;
    let mut checked = 0;
    for (lambda, &rep) in &reps {
        let xl = &points[rep];
        let xl_inv = g.invert_unchecked(xl);
        let fxl_inv = h.invert_unchecked(&values[rep]);
        for (z, fz) in points.iter().zip(&values) {
            if inst.codomain_distance(fz, lambda)? >= inst.scale {
                continue;
            }
            checked += 1;
            let mut step = 0;
            if !square_set.contains(&h.compose_unchecked(&fxl_inv, fz)) {
                step = 1;
            } else {
                let y = g.compose_unchecked(&xl_inv, z);
                if inst.domain_metric.norm(&y)? > right_radius || !targets.contains(&inst.f.eval(&y)?) {
                    step = 2;
                }
            }
            if step != 0 {
                failure_count += 1;
                if failures.len() < MAX_WITNESSES {
                    failures.push(ContainmentFailure {
                        lambda: (*lambda).clone(),
                        z: z.clone(),
                        step,
                    });
                }
            }
        }
    }
    Ok(AlmostReport {
        r: inst.scale,
        left_radius: left.radius(),
        right_radius,
        defect_radius: defect.window_radius,
        fibers: reps.len(),
        checked,
        small_squares: squares.len(),
        targets: targets.len(),
        representatives: reps
            .iter()
            .map(|(l, &i)| ((*l).clone(), points[i].clone()))
            .collect(),
        failures,
        failure_count,
        repaired_at: None,
        pass: failure_count == 0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AbsorptionReport {
    pub r: u32,
    pub big_r: u32,
    pub left_radius: u32,
    pub right_radius: u32,
    pub defect_radius: u32,
    /// `(f(e)·dᵢ⁻¹·λ_ℓ·d_j, ξ_ijℓ)` for every target with a preimage in the
    /// left window.
    pub representatives: Vec<(GroupElement, GroupElement)>,
    pub skipped_targets: usize,
    pub preimage_size: usize,
    pub kernel_size: usize,
    pub failures: Vec<GroupElement>,
    pub failure_count: usize,
    pub pass: bool,
}

/// Computes `R` from representatives of `f⁻¹(f(e)·dᵢ⁻¹·λ_ℓ·d_j)` with
/// `λ_ℓ ≠ e` and checks that the left-window part of
/// `f⁻¹(f(e)·D⁻¹·(B′(e, r) ∩ Λ²)·D)` lies in `N_{R+1}(K)`, with `K` taken
/// on the right window.
pub fn r_neighborhood_absorption(inst: &TheoremInstance, defect: &DefectReport) -> Result<AbsorptionReport> {
    let h = inst.f.codomain();
    let left = inst.left_window()?;
    let right = inst.right_window()?;
    let points = inst.xi_points(&left);
    let values = inst.values(&points)?;
    let squares = inst.small_squares()?;
    let nontrivial: Vec<GroupElement> = squares.iter().filter(|g| !h.is_identity(g)).cloned().collect();
    let mut targets: Vec<GroupElement> = sandwich(inst, defect, &nontrivial)?.into_iter().collect();
    targets.sort();
    let full = sandwich(inst, defect, &squares)?;

    let mut first: BTreeMap<&GroupElement, usize> = BTreeMap::new();
    for (i, v) in values.iter().enumerate() {
        first.entry(v).or_insert(i);
    }
    let mut representatives = Vec::new();
    let mut skipped = 0;
    let mut big_r = 0;
    for t in &targets {
        match first.get(t) {
            Some(&i) => {
                big_r = big_r.max(inst.domain_metric.norm(&points[i])?);
                representatives.push((t.clone(), points[i].clone()));
            }
            None => skipped += 1,
        }
    }
    let kernel = kernel_window(inst, defect, &right)?;
    let near: HashSet<GroupElement> = inst
        .domain_metric
        .neighborhood(&kernel, big_r + 1, &left)?
        .into_iter()
        .collect();
    let mut failures = Vec::new();
    let mut failure_count = 0;
    let mut preimage_size = 0;
    for (x, v) in points.iter().zip(&values) {
        if full.contains(v) {
            preimage_size += 1;
            if !near.contains(x) {
                failure_count += 1;
                if failures.len() < MAX_WITNESSES {
                    failures.push(x.clone());
                }
            }
        }
    }
    Ok(AbsorptionReport {
        r: inst.scale,
        big_r,
        left_radius: left.radius(),
        right_radius: right.radius(),
        defect_radius: defect.window_radius,
        representatives,
        skipped_targets: skipped,
        preimage_size,
        kernel_size: kernel.len(),
        failures,
        failure_count,
        pass: failure_count == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupDescriptor;

    fn floordiv_z(window: u32, r: u32) -> TheoremInstance {
        let z = GroupDescriptor::integers();
        let f = Quasimorphism::parse("floordiv:q=2,coord=1", &z, None).unwrap();
        TheoremInstance::new("floordiv-z", f, ApproximateGroup::whole(&z), ApproximateGroup::whole(&z), window, r).unwrap()
    }

    fn ints(v: &[GroupElement]) -> Vec<i64> {
        let mut out: Vec<i64> = v.iter().map(|g| g.as_integer().unwrap()).collect();
        out.sort();
        out
    }

    #[test]
    fn floordiv_lipschitz_and_symmetry() {
        let inst = floordiv_z(50, 2);
        let d = inst.defect().unwrap();
        let l = lipschitz_scan(&inst, &d, &[4]).unwrap();
        assert_eq!(l.rows[0].s_obs, 2);
        assert_eq!(l.rows[0].s_ball, 2);
        assert_eq!(l.rows[0].bound, 5);
        assert!(l.pass);
        let s = symmetry_gap(&inst, &d).unwrap();
        assert_eq!((s.gap, s.bound), (1, 2));
        assert!(chain_facts(&inst, &d).unwrap().pass);
    }

    #[test]
    fn floordiv_fibers_and_kernel() {
        let inst = floordiv_z(10, 1);
        let w = inst.left_window().unwrap();
        let fibers = fiber_family(&inst, &w).unwrap();
        let zero = fibers
            .iter()
            .find(|f| f.lambda == GroupElement::integer(0))
            .unwrap();
        assert_eq!(ints(&zero.members), vec![0, 1]);
        let d = inst.defect().unwrap();
        assert_eq!(ints(&kernel_window(&inst, &d, &w).unwrap()), vec![-2, -1, 0, 1, 2, 3]);
    }

    #[test]
    fn floordiv_containments() {
        let inst = floordiv_z(40, 2);
        let d = inst.defect().unwrap();
        assert!(containment_almost(&inst, &d).unwrap().pass);
        let inst = floordiv_z(12, 3);
        let d = inst.defect().unwrap();
        let a = r_neighborhood_absorption(&inst, &d).unwrap();
        assert!(a.pass);
        assert!(a.big_r <= 6);
    }

    #[test]
    fn too_small_defect_set_is_detected() {
        let inst = floordiv_z(12, 2);
        let mut d = inst.defect().unwrap();
        d.left_defect.retain(|e| e.element == GroupElement::integer(0));
        let report = containment_almost(&inst, &d).unwrap();
        assert!(!report.pass);
        assert_eq!(report.repaired_at, Some(13));
    }
}
