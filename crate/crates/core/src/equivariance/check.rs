use std::collections::BTreeSet;

use itertools::Itertools;

use crate::bijection::{Bijection, Relabeling};
use crate::element::Element;
use crate::error::Result;
use crate::model::Relabel;

/// One failure of `divider(r·inst) = r·divider(inst)`.
#[derive(Clone, Debug)]
pub struct Violation<I> {
    pub instance: I,
    pub relabeling: Relabeling,
    /// `r·divider(inst)`, when the divider answered on `inst`.
    pub expected: Option<Bijection>,
    /// `divider(r·inst)`, when it answered there.
    pub actual: Option<Bijection>,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct EquivarianceReport<I> {
    /// Instance/relabeling pairs compared.
    pub checked: usize,
    pub violations: Vec<Violation<I>>,
}

impl<I> EquivarianceReport<I> {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every `(σ_A, σ_B)` in `Sym(A) × Sym(B)`.
pub fn all_relabelings(a: &BTreeSet<Element>, b: &BTreeSet<Element>) -> Vec<Relabeling> {
    let perms = |set: &BTreeSet<Element>| -> Vec<Bijection> {
        let items: Vec<&Element> = set.iter().collect();
        items
            .iter()
            .permutations(items.len())
            .map(|image| {
                Bijection::from_pairs(items.iter().zip(image).map(|(x, y)| ((*x).clone(), (**y).clone())))
                    .expect("permutation")
            })
            .collect()
    };
    let pa = perms(a);
    let pb = perms(b);
    pa.iter()
        .cartesian_product(pb.iter())
        .map(|(x, y)| Relabeling::new(x.clone(), y.clone()).expect("permutations"))
        .collect()
}

/// Compares `divider(r·inst)` with `r·divider(inst)` for every instance and
/// every relabeling produced for it. Failures are report content.
pub fn check_divider_equivariance<I, D, R>(
    divider: D,
    instances: impl IntoIterator<Item = I>,
    relabelings: R,
) -> EquivarianceReport<I>
where
    I: Relabel + Clone,
    D: Fn(&I) -> Result<Bijection>,
    R: Fn(&I) -> Vec<Relabeling>,
{
    let mut report = EquivarianceReport {
        checked: 0,
        violations: Vec::new(),
    };
    for inst in instances {
        let base = divider(&inst);
        for r in relabelings(&inst) {
            report.checked += 1;
            let expected = base.as_ref().ok().map(|g| r.transport(g));
            let moved = inst.relabel(&r);
            let actual = moved.as_ref().ok().map(&divider);
            let violation = match (expected, actual) {
                (Some(Ok(exp)), Some(Ok(act))) if exp == act => None,
                (Some(Ok(exp)), Some(Ok(act))) => Some((Some(exp), Some(act), "outputs differ".to_string())),
                (exp, act) => {
                    let detail = format!(
                        "divider failed: original {:?}, relabeled {:?}",
                        base.as_ref().err().map(ToString::to_string),
                        match &moved {
                            Err(e) => Some(e.to_string()),
                            Ok(_) => act.as_ref().and_then(|r| r.as_ref().err()).map(ToString::to_string),
                        }
                    );
                    Some((exp.and_then(Result::ok), act.and_then(Result::ok), detail))
                }
            };
            if let Some((expected, actual, detail)) = violation {
                report.violations.push(Violation {
                    instance: inst.clone(),
                    relabeling: r,
                    expected,
                    actual,
                    detail,
                });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::{cheating_sock_divider, enumerate_sock_instances, DEFAULT_BUDGET};
    use crate::model::ShoeInstance;
    use crate::reductions::SockDivider;
    use crate::shoe::shoe_divide;

    #[test]
    fn relabeling_count() {
        let a: BTreeSet<_> = crate::element::atoms(["a1", "a2", "a3"]).into_iter().collect();
        let b: BTreeSet<_> = crate::element::atoms(["b1", "b2"]).into_iter().collect();
        assert_eq!(all_relabelings(&a, &b).len(), 12);
    }

    #[test]
    fn empty_family_gives_empty_report() {
        let report = check_divider_equivariance(
            |i: &ShoeInstance| shoe_divide(i).map(|r| r.matching),
            Vec::<ShoeInstance>::new(),
            |i| all_relabelings(i.a(), i.b()),
        );
        assert_eq!(report.checked, 0);
        assert!(report.is_clean());
    }

    #[test]
    fn cheating_divider_is_caught() {
        let family: Vec<_> = enumerate_sock_instances(2, 1, DEFAULT_BUDGET).unwrap().collect();
        let report = check_divider_equivariance(
            |i| cheating_sock_divider().divide(i),
            family,
            |i| all_relabelings(&i.left().base(), &i.right().base()),
        );
        assert!(!report.violations.is_empty());
    }
}
