use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::element::Element;
use crate::error::{Error, Result};

/// A finite invertible map between two equal-size element sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bijection {
    forward: BTreeMap<Element, Element>,
    backward: BTreeMap<Element, Element>,
}

impl Bijection {
    pub fn empty() -> Self {
        Bijection {
            forward: BTreeMap::new(),
            backward: BTreeMap::new(),
        }
    }

    /// Builds a bijection onto its image. Fails on a repeated source or target.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Element, Element)>) -> Result<Self> {
        let mut forward = BTreeMap::new();
        let mut backward = BTreeMap::new();
        for (x, y) in pairs {
            if forward.contains_key(&x) {
                return Err(Error::NotABijection(format!("{x} is mapped twice")));
            }
            if let Some(prev) = backward.get(&y) {
                return Err(Error::NotABijection(format!(
                    "{prev} and {x} both map to {y}"
                )));
            }
            forward.insert(x.clone(), y.clone());
            backward.insert(y, x);
        }
        Ok(Bijection { forward, backward })
    }

    /// Builds a bijection and checks it is total on `domain` and onto `codomain`.
    pub fn between(
        domain: &BTreeSet<Element>,
        codomain: &BTreeSet<Element>,
        pairs: impl IntoIterator<Item = (Element, Element)>,
    ) -> Result<Self> {
        let bij = Self::from_pairs(pairs)?;
        bij.check_sets(domain, codomain)?;
        Ok(bij)
    }

    pub fn identity(set: impl IntoIterator<Item = Element>) -> Self {
        let forward: BTreeMap<_, _> = set.into_iter().map(|x| (x.clone(), x)).collect();
        let backward = forward.clone();
        Bijection { forward, backward }
    }

    /// Errors with `NotABijection` unless this is exactly `domain -> codomain`.
    pub fn check_sets(&self, domain: &BTreeSet<Element>, codomain: &BTreeSet<Element>) -> Result<()> {
        if let Some(x) = self.forward.keys().find(|x| !domain.contains(x)) {
            return Err(Error::NotABijection(format!("{x} is outside the domain")));
        }
        if let Some(x) = domain.iter().find(|x| !self.forward.contains_key(x)) {
            return Err(Error::NotABijection(format!("{x} is not mapped")));
        }
        if let Some(y) = self.backward.keys().find(|y| !codomain.contains(y)) {
            return Err(Error::NotABijection(format!("{y} is outside the codomain")));
        }
        if let Some(y) = codomain.iter().find(|y| !self.backward.contains_key(y)) {
            return Err(Error::NotABijection(format!("{y} is not hit")));
        }
        Ok(())
    }

    pub fn has_sets(&self, domain: &BTreeSet<Element>, codomain: &BTreeSet<Element>) -> bool {
        self.check_sets(domain, codomain).is_ok()
    }

    pub fn apply(&self, x: &Element) -> Option<&Element> {
        self.forward.get(x)
    }

    pub fn preimage(&self, y: &Element) -> Option<&Element> {
        self.backward.get(y)
    }

    pub fn inverse(&self) -> Bijection {
        Bijection {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
        }
    }

    /// `self ∘ inner`: apply `inner` first. The codomain of `inner` must be
    /// the domain of `self`.
    pub fn compose(&self, inner: &Bijection) -> Result<Bijection> {
        if inner.backward.len() != self.forward.len()
            || inner.backward.keys().ne(self.forward.keys())
        {
            return Err(Error::DomainMismatch(
                "composition of bijections with mismatched middle sets".into(),
            ));
        }
        Self::from_pairs(
            inner
                .forward
                .iter()
                .map(|(x, y)| (x.clone(), self.forward[y].clone())),
        )
    }

    /// `outer ∘ self ∘ inner⁻¹`, the conjugation used by relabelings.
    pub fn conjugate(&self, inner: &Bijection, outer: &Bijection) -> Result<Bijection> {
        outer.compose(self)?.compose(&inner.inverse())
    }

    pub fn domain(&self) -> impl Iterator<Item = &Element> {
        self.forward.keys()
    }

    pub fn codomain(&self) -> impl Iterator<Item = &Element> {
        self.backward.keys()
    }

    pub fn domain_set(&self) -> BTreeSet<Element> {
        self.forward.keys().cloned().collect()
    }

    pub fn codomain_set(&self) -> BTreeSet<Element> {
        self.backward.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, &Element)> {
        self.forward.iter()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().all(|(x, y)| x == y)
    }

    /// Disjoint-cycle notation for a permutation, fixed points omitted.
    /// Non-permutations are printed as a list of arrows.
    pub fn cycle_notation(&self) -> String {
        if self.forward.keys().ne(self.backward.keys()) {
            return self.to_string();
        }
        let mut seen = BTreeSet::new();
        let mut out = String::new();
        for start in self.forward.keys() {
            if seen.contains(start) || self.forward[start] == *start {
                continue;
            }
            let mut cycle = vec![start.to_string()];
            seen.insert(start.clone());
            let mut cur = &self.forward[start];
            while cur != start {
                seen.insert(cur.clone());
                cycle.push(cur.to_string());
                cur = &self.forward[cur];
            }
            out.push('(');
            out.push_str(&cycle.join(" "));
            out.push(')');
        }
        if out.is_empty() {
            out.push_str("id");
        }
        out
    }
}

impl fmt::Display for Bijection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (x, y)) in self.forward.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}→{y}")?;
        }
        f.write_str("}")
    }
}

/// Permutation pair acting on a shoe or sock instance: `on_a` permutes the
/// left base, `on_b` the right base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relabeling {
    on_a: Bijection,
    on_b: Bijection,
}

impl Relabeling {
    pub fn new(on_a: Bijection, on_b: Bijection) -> Result<Self> {
        for (name, p) in [("onA", &on_a), ("onB", &on_b)] {
            if p.domain().ne(p.codomain()) {
                return Err(Error::DomainMismatch(format!(
                    "{name} is not a permutation of a single set"
                )));
            }
        }
        Ok(Relabeling { on_a, on_b })
    }

    pub fn identity(a: &BTreeSet<Element>, b: &BTreeSet<Element>) -> Self {
        Relabeling {
            on_a: Bijection::identity(a.iter().cloned()),
            on_b: Bijection::identity(b.iter().cloned()),
        }
    }

    pub fn on_a(&self) -> &Bijection {
        &self.on_a
    }

    pub fn on_b(&self) -> &Bijection {
        &self.on_b
    }

    /// `self ∘ first`: act by `first`, then by `self`.
    pub fn after(&self, first: &Relabeling) -> Result<Relabeling> {
        Ok(Relabeling {
            on_a: self.on_a.compose(&first.on_a)?,
            on_b: self.on_b.compose(&first.on_b)?,
        })
    }

    pub fn inverse(&self) -> Relabeling {
        Relabeling {
            on_a: self.on_a.inverse(),
            on_b: self.on_b.inverse(),
        }
    }

    /// Transports a base map `g: A -> B` along the relabeling.
    pub fn transport(&self, g: &Bijection) -> Result<Bijection> {
        g.conjugate(&self.on_a, &self.on_b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::atoms;

    fn set(labels: &[&str]) -> BTreeSet<Element> {
        atoms(labels.iter().copied()).into_iter().collect()
    }

    fn pairs(list: &[(&str, &str)]) -> Vec<(Element, Element)> {
        list.iter().map(|(x, y)| (Element::atom(*x), Element::atom(*y))).collect()
    }

    #[test]
    fn rejects_non_injective() {
        let err = Bijection::from_pairs(pairs(&[("a", "x"), ("b", "x")])).unwrap_err();
        assert!(matches!(err, Error::NotABijection(_)));
    }

    #[test]
    fn rejects_partial() {
        let err = Bijection::between(&set(&["a", "b"]), &set(&["x", "y"]), pairs(&[("a", "x")]))
            .unwrap_err();
        assert!(matches!(err, Error::NotABijection(_)));
    }

    #[test]
    fn inverse_round_trips() {
        let f = Bijection::from_pairs(pairs(&[("a", "y"), ("b", "x")])).unwrap();
        assert!(f.inverse().compose(&f).unwrap().is_identity());
        assert!(f.compose(&f.inverse()).unwrap().is_identity());
    }

    #[test]
    fn cycle_notation_skips_fixed_points() {
        let p = Bijection::from_pairs(pairs(&[("p", "r"), ("q", "s"), ("r", "p"), ("s", "q"), ("t", "t")]))
            .unwrap();
        assert_eq!(p.cycle_notation(), "(p r)(q s)");
        assert_eq!(Bijection::identity(set(&["a"])).cycle_notation(), "id");
    }

    #[test]
    fn relabeling_rejects_non_permutation() {
        let f = Bijection::from_pairs(pairs(&[("a", "b")])).unwrap();
        let id = Bijection::identity(set(&["b"]));
        assert!(matches!(Relabeling::new(f, id), Err(Error::DomainMismatch(_))));
    }
}
