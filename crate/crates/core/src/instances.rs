//! Named quasimorphisms and theorem instances shipped with the library.

use crate::approx::ApproximateGroup;
use crate::coarse_check::TheoremInstance;
use crate::error::{Error, Result};
use crate::group::GroupDescriptor;
use crate::quasimorphism::Quasimorphism;

#[derive(Clone, Copy, Debug)]
pub struct InstanceSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub domain: &'static str,
    pub codomain: &'static str,
    pub quasimorphism: &'static str,
    pub xi: &'static str,
    pub lambda: &'static str,
    /// Window radius used for defect sets and the constant chain.
    pub defect_window: u32,
}

pub const INSTANCES: &[InstanceSpec] = &[
    InstanceSpec {
        name: "hom-z2",
        description: "projection Z² → Z, (m, n) ↦ m",
        domain: "lattice:2",
        codomain: "lattice:1",
        quasimorphism: "hom:a->1;b->0",
        xi: "whole",
        lambda: "whole",
        defect_window: 12,
    },
    InstanceSpec {
        name: "floordiv-z",
        description: "n ↦ ⌊n/2⌋ on Z",
        domain: "lattice:1",
        codomain: "lattice:1",
        quasimorphism: "floordiv:q=2,coord=1",
        xi: "whole",
        lambda: "whole",
        defect_window: 50,
    },
    InstanceSpec {
        name: "floordiv-z2",
        description: "(m, n) ↦ m + ⌊n/2⌋ from Z² to Z",
        domain: "lattice:2",
        codomain: "lattice:1",
        quasimorphism: "floordiv:q=2,coord=2,linear=1:0",
        xi: "whole",
        lambda: "whole",
        defect_window: 12,
    },
    InstanceSpec {
        name: "brooks-f2",
        description: "Brooks counting map of w = ab on F₂",
        domain: "free:2",
        codomain: "lattice:1",
        quasimorphism: "brooks:w=ab",
        xi: "whole",
        lambda: "whole",
        defect_window: 3,
    },
    InstanceSpec {
        name: "height-bs12",
        description: "height homomorphism BS(1,2) → Z, a ↦ 0, b ↦ 1",
        domain: "bs12",
        codomain: "lattice:1",
        quasimorphism: "hom:a->0;b->1",
        xi: "whole",
        lambda: "whole",
        defect_window: 4,
    },
];

/// Quasimorphisms that are not part of a theorem instance but are covered
/// by the same checks: `(name, domain, spec)`.
pub const EXTRA_QUASIMORPHISMS: &[(&str, &str, &str)] = &[
    ("rolli-sign", "free:2", "rolli:sign"),
    ("rolli-table", "free:2", "rolli:alpha=1,2,2"),
    ("brooks-aab-disjoint", "free:2", "brooks:w=aab,counting=disjoint"),
    ("double-brooks", "free:2", "compose(hom:a->2, brooks:w=ab)"),
    ("shifted-identity", "lattice:1", "homplus:a->1|e=1;a=-1|default=0"),
];

pub fn instance_spec(name: &str) -> Result<&'static InstanceSpec> {
    INSTANCES.iter().find(|s| s.name == name).ok_or_else(|| {
        let known: Vec<&str> = INSTANCES.iter().map(|s| s.name).collect();
        Error::Precondition(format!("unknown instance {name:?}; known: {}", known.join(", ")))
    })
}

impl InstanceSpec {
    pub fn quasimorphism(&self) -> Result<Quasimorphism> {
        let domain: GroupDescriptor = self.domain.parse()?;
        let codomain: GroupDescriptor = self.codomain.parse()?;
        Quasimorphism::parse(self.quasimorphism, &domain, Some(&codomain))
    }

    /// The instance with its defect window as window radius and scale 1.
    pub fn build(&self) -> Result<TheoremInstance> {
        let f = self.quasimorphism()?;
        let xi = ApproximateGroup::parse(self.xi, f.domain())?;
        let lambda = ApproximateGroup::parse(self.lambda, f.codomain())?;
        TheoremInstance::new(self.name, f, xi, lambda, self.defect_window, 1)
    }
}

pub fn instance(name: &str) -> Result<TheoremInstance> {
    instance_spec(name)?.build()
}

/// Every bundled quasimorphism with a name and its defect window.
pub fn bundled_quasimorphisms() -> Result<Vec<(String, Quasimorphism)>> {
    let mut out = Vec::new();
    for s in INSTANCES {
        out.push((s.name.to_string(), s.quasimorphism()?));
    }
    for (name, domain, spec) in EXTRA_QUASIMORPHISMS {
        let domain: GroupDescriptor = domain.parse()?;
        out.push((name.to_string(), Quasimorphism::parse(spec, &domain, None)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_builds() {
        for s in INSTANCES {
            let inst = s.build().unwrap();
            assert_eq!(inst.name, s.name);
        }
        assert_eq!(bundled_quasimorphisms().unwrap().len(), INSTANCES.len() + EXTRA_QUASIMORPHISMS.len());
        assert!(instance("nope").is_err());
    }
}
