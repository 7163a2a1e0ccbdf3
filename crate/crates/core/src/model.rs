//! Validated instance types. Malformed data never becomes a value here, so
//! every downstream operation may rely on the invariants.

use std::collections::{BTreeMap, BTreeSet};

use crate::bijection::{Bijection, Relabeling};
use crate::element::{times_slots, Element};
use crate::error::{Error, Result};

fn distinct_set(items: impl IntoIterator<Item = Element>) -> Result<BTreeSet<Element>> {
    let mut set = BTreeSet::new();
    for x in items {
        if !set.insert(x.clone()) {
            return Err(Error::DuplicateElement(x));
        }
    }
    Ok(set)
}

/// A shoe instance: sets `A`, `B`, an arity `n` and a bijection
/// `h: A×{1..n} -> B×{1..n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShoeInstance {
    a: BTreeSet<Element>,
    b: BTreeSet<Element>,
    n: usize,
    h: Bijection,
}

impl ShoeInstance {
    /// Validates raw data. `h` is given as `((a, i), (b, j))` pairs.
    pub fn new(
        a: impl IntoIterator<Item = Element>,
        b: impl IntoIterator<Item = Element>,
        n: usize,
        h: impl IntoIterator<Item = ((Element, usize), (Element, usize))>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroArity);
        }
        let a = distinct_set(a)?;
        let b = distinct_set(b)?;
        if a.len() != b.len() {
            return Err(Error::SizeMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        let mut pairs = Vec::new();
        for ((x, i), (y, j)) in h {
            for (side, base, slot, set) in [("A", &x, i, &a), ("B", &y, j, &b)] {
                if !(1..=n).contains(&slot) {
                    return Err(Error::ArityMismatch(format!(
                        "slot {slot} of {base} is outside 1..{n}"
                    )));
                }
                if !set.contains(base) {
                    return Err(Error::DomainMismatch(format!("{base} is not in {side}")));
                }
            }
            pairs.push((Element::tuple(x, i), Element::tuple(y, j)));
        }
        let h = Bijection::between(
            &times_slots(a.iter().cloned(), n).into_iter().collect(),
            &times_slots(b.iter().cloned(), n).into_iter().collect(),
            pairs,
        )?;
        Ok(ShoeInstance { a, b, n, h })
    }

    /// Validates an `h` already built over tuple elements.
    pub fn from_bijection(
        a: BTreeSet<Element>,
        b: BTreeSet<Element>,
        n: usize,
        h: &Bijection,
    ) -> Result<Self> {
        let pairs = h
            .iter()
            .map(|(x, y)| {
                let split = |e: &Element| {
                    e.as_tuple()
                        .map(|(base, slot)| (base.clone(), slot))
                        .ok_or_else(|| Error::ArityMismatch(format!("{e} is not an indexed pair")))
                };
                Ok((split(x)?, split(y)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(a, b, n, pairs)
    }

    pub fn a(&self) -> &BTreeSet<Element> {
        &self.a
    }

    pub fn b(&self) -> &BTreeSet<Element> {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &Bijection {
        &self.h
    }

    /// `h(a, i)` as `(b, j)`.
    pub fn image(&self, a: &Element, shoe: usize) -> Option<(&Element, usize)> {
        self.h
            .apply(&Element::tuple(a.clone(), shoe))
            .and_then(Element::as_tuple)
    }

    /// `h⁻¹(b, j)` as `(a, i)`.
    pub fn preimage(&self, b: &Element, slot: usize) -> Option<(&Element, usize)> {
        self.h
            .preimage(&Element::tuple(b.clone(), slot))
            .and_then(Element::as_tuple)
    }

    /// The pair list of `h` in canonical order.
    pub fn darts(&self) -> Vec<((Element, usize), (Element, usize))> {
        self.h
            .iter()
            .map(|(x, y)| {
                let (a, i) = x.as_tuple().expect("validated");
                let (b, j) = y.as_tuple().expect("validated");
                ((a.clone(), i), (b.clone(), j))
            })
            .collect()
    }

    /// True when some shoe of `a` lands among the slots of `b`.
    pub fn has_edge(&self, a: &Element, b: &Element) -> bool {
        (1..=self.n).any(|i| self.image(a, i).is_some_and(|(y, _)| y == b))
    }
}

/// Conjugates `h` by the relabeling; slots are untouched.
pub fn apply_relabeling_shoe(inst: &ShoeInstance, r: &Relabeling) -> Result<ShoeInstance> {
    if r.on_a().domain().ne(inst.a.iter()) {
        return Err(Error::DomainMismatch("onA does not permute A".into()));
    }
    if r.on_b().domain().ne(inst.b.iter()) {
        return Err(Error::DomainMismatch("onB does not permute B".into()));
    }
    let h = inst.darts().into_iter().map(|((a, i), (b, j))| {
        (
            (r.on_a().apply(&a).expect("permutes A").clone(), i),
            (r.on_b().apply(&b).expect("permutes B").clone(), j),
        )
    });
    ShoeInstance::new(inst.a.iter().cloned(), inst.b.iter().cloned(), inst.n, h)
}

/// A family of disjoint fibers of equal size over a base set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SockBundle {
    arity: usize,
    fibers: BTreeMap<Element, BTreeSet<Element>>,
    projection: BTreeMap<Element, Element>,
}

impl SockBundle {
    pub fn new(
        arity: usize,
        fibers: impl IntoIterator<Item = (Element, Vec<Element>)>,
    ) -> Result<Self> {
        if arity == 0 {
            return Err(Error::ZeroArity);
        }
        let mut map = BTreeMap::new();
        let mut projection = BTreeMap::new();
        for (base, members) in fibers {
            if map.contains_key(&base) {
                return Err(Error::DuplicateElement(base));
            }
            let fiber = distinct_set(members)?;
            if fiber.len() != arity {
                return Err(Error::FiberSizeError {
                    base,
                    expected: arity,
                    found: fiber.len(),
                });
            }
            for x in &fiber {
                if projection.insert(x.clone(), base.clone()).is_some() {
                    return Err(Error::FibersOverlap(x.clone()));
                }
            }
            map.insert(base, fiber);
        }
        Ok(SockBundle {
            arity,
            fibers: map,
            projection,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn base(&self) -> BTreeSet<Element> {
        self.fibers.keys().cloned().collect()
    }

    pub fn base_len(&self) -> usize {
        self.fibers.len()
    }

    pub fn fibers(&self) -> &BTreeMap<Element, BTreeSet<Element>> {
        &self.fibers
    }

    pub fn fiber(&self, base: &Element) -> Option<&BTreeSet<Element>> {
        self.fibers.get(base)
    }

    pub fn total_space(&self) -> BTreeSet<Element> {
        self.projection.keys().cloned().collect()
    }

    pub fn total_len(&self) -> usize {
        self.projection.len()
    }

    /// π: total space -> base.
    pub fn project(&self, x: &Element) -> Option<&Element> {
        self.projection.get(x)
    }

    /// Renames base points; fibers keep their members.
    pub fn rebase(&self, on_base: &Bijection) -> Result<SockBundle> {
        if on_base.domain().ne(self.fibers.keys()) {
            return Err(Error::DomainMismatch("relabeling does not permute the base".into()));
        }
        SockBundle::new(
            self.arity,
            self.fibers
                .iter()
                .map(|(a, fib)| (on_base.apply(a).expect("checked").clone(), fib.iter().cloned().collect())),
        )
    }
}

/// The bundle `A × {1..n}` with fiber `{(a,1), ..., (a,n)}` at each `a`.
pub fn trivial_bundle(base: impl IntoIterator<Item = Element>, n: usize) -> Result<SockBundle> {
    SockBundle::new(
        n,
        base.into_iter()
            .map(|a| (a.clone(), times_slots([a], n)))
            .collect::<Vec<_>>(),
    )
}

/// Whether `f` carries each fiber `X_a` onto `Y_a` (π′∘f = π).
pub fn is_bundle_isomorphism(f: &Bijection, x: &SockBundle, y: &SockBundle) -> Result<bool> {
    if x.fibers.keys().ne(y.fibers.keys()) {
        return Err(Error::DomainMismatch("bundles have different bases".into()));
    }
    if f.domain().ne(x.projection.keys()) {
        return Err(Error::DomainMismatch("map is not defined on the total space".into()));
    }
    if f.codomain().ne(y.projection.keys()) {
        return Err(Error::DomainMismatch("map does not land on the target total space".into()));
    }
    Ok(x.projection
        .iter()
        .all(|(elem, a)| y.project(f.apply(elem).expect("checked")) == Some(a)))
}

/// Two sock bundles of one arity plus a bijection of their total spaces.
/// No fiber-respecting condition is imposed on `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SockInstance {
    left: SockBundle,
    right: SockBundle,
    u: Bijection,
}

impl SockInstance {
    pub fn new(left: SockBundle, right: SockBundle, u: Bijection) -> Result<Self> {
        if left.arity != right.arity {
            let (base, found) = right
                .fibers
                .iter()
                .next()
                .map(|(b, f)| (b.clone(), f.len()))
                .unwrap_or((Element::atom(""), right.arity));
            return Err(Error::FiberSizeError {
                base,
                expected: left.arity,
                found,
            });
        }
        u.check_sets(&left.total_space(), &right.total_space())?;
        Ok(SockInstance { left, right, u })
    }

    /// Validates raw fibers and a pair list for `u`.
    pub fn from_raw(
        n: usize,
        left: impl IntoIterator<Item = (Element, Vec<Element>)>,
        right: impl IntoIterator<Item = (Element, Vec<Element>)>,
        u: impl IntoIterator<Item = (Element, Element)>,
    ) -> Result<Self> {
        let left = SockBundle::new(n, left)?;
        let right = SockBundle::new(n, right)?;
        Self::new(left, right, Bijection::from_pairs(u)?)
    }

    pub fn left(&self) -> &SockBundle {
        &self.left
    }

    pub fn right(&self) -> &SockBundle {
        &self.right
    }

    pub fn u(&self) -> &Bijection {
        &self.u
    }

    pub fn arity(&self) -> usize {
        self.left.arity
    }

    /// If `u` carries every left fiber onto a single right fiber, the
    /// base bijection it induces.
    pub fn induced_base_map(&self) -> Option<Bijection> {
        let mut pairs = Vec::new();
        for (a, fib) in &self.left.fibers {
            let mut targets = fib
                .iter()
                .map(|x| self.right.project(self.u.apply(x).expect("validated")).expect("validated"));
            let first = targets.next()?.clone();
            if targets.any(|b| *b != first) {
                return None;
            }
            pairs.push((a.clone(), first));
        }
        Bijection::from_pairs(pairs).ok()
    }
}

/// One element picked from each fiber of an indexed family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoiceAssignment {
    selection: BTreeMap<Element, Element>,
}

impl ChoiceAssignment {
    /// Checks `selection(i) ∈ fibers(i)` for every index.
    pub fn new(
        selection: BTreeMap<Element, Element>,
        fibers: &BTreeMap<Element, BTreeSet<Element>>,
    ) -> Result<Self> {
        if selection.keys().ne(fibers.keys()) {
            return Err(Error::DomainMismatch("selection is not indexed by the family".into()));
        }
        for (i, x) in &selection {
            if !fibers[i].contains(x) {
                return Err(Error::DomainMismatch(format!("{x} is not in the fiber at {i}")));
            }
        }
        Ok(ChoiceAssignment { selection })
    }

    pub fn selection(&self) -> &BTreeMap<Element, Element> {
        &self.selection
    }

    pub fn get(&self, index: &Element) -> Option<&Element> {
        self.selection.get(index)
    }
}

/// Instances that a base relabeling acts on.
pub trait Relabel: Sized {
    fn left_base(&self) -> BTreeSet<Element>;
    fn right_base(&self) -> BTreeSet<Element>;
    fn relabel(&self, r: &Relabeling) -> Result<Self>;
}

impl Relabel for ShoeInstance {
    fn left_base(&self) -> BTreeSet<Element> {
        self.a.clone()
    }

    fn right_base(&self) -> BTreeSet<Element> {
        self.b.clone()
    }

    fn relabel(&self, r: &Relabeling) -> Result<Self> {
        apply_relabeling_shoe(self, r)
    }
}

impl Relabel for SockInstance {
    fn left_base(&self) -> BTreeSet<Element> {
        self.left.base()
    }

    fn right_base(&self) -> BTreeSet<Element> {
        self.right.base()
    }

    /// Renames the base points; socks and `u` stay as they are.
    fn relabel(&self, r: &Relabeling) -> Result<Self> {
        SockInstance::new(
            self.left.rebase(r.on_a())?,
            self.right.rebase(r.on_b())?,
            self.u.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::atoms;

    fn e(s: &str) -> Element {
        Element::atom(s)
    }

    fn d(a: &str, i: usize, b: &str, j: usize) -> ((Element, usize), (Element, usize)) {
        ((e(a), i), (e(b), j))
    }

    pub(crate) fn small_shoes() -> ShoeInstance {
        ShoeInstance::new(
            atoms(["a1", "a2"]),
            atoms(["b1", "b2"]),
            2,
            [
                d("a1", 1, "b1", 1),
                d("a1", 2, "b2", 1),
                d("a2", 1, "b1", 2),
                d("a2", 2, "b2", 2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn smallest_shoe_instance_is_valid() {
        let inst = ShoeInstance::new(atoms(["a"]), atoms(["b"]), 1, [d("a", 1, "b", 1)]).unwrap();
        assert_eq!(inst.image(&e("a"), 1), Some((&e("b"), 1)));
    }

    #[test]
    fn shoe_size_mismatch() {
        let err = ShoeInstance::new(atoms(["a1", "a2"]), atoms(["b"]), 2, [d("a1", 1, "b", 1)]).unwrap_err();
        assert!(matches!(err, Error::SizeMismatch { left: 2, right: 1 }));
    }

    #[test]
    fn shoe_not_injective() {
        let err = ShoeInstance::new(atoms(["a"]), atoms(["b"]), 2, [d("a", 1, "b", 1), d("a", 2, "b", 1)])
            .unwrap_err();
        assert!(matches!(err, Error::NotABijection(_)));
    }

    #[test]
    fn shoe_slot_out_of_range() {
        let err = ShoeInstance::new(atoms(["a"]), atoms(["b"]), 1, [d("a", 2, "b", 1)]).unwrap_err();
        assert!(matches!(err, Error::ArityMismatch(_)));
    }

    #[test]
    fn shoe_inverse_is_identity() {
        let inst = small_shoes();
        for ((a, i), _) in inst.darts() {
            let (b, j) = inst.image(&a, i).unwrap();
            assert_eq!(inst.preimage(b, j), Some((&a, i)));
        }
    }

    #[test]
    fn empty_shoe_instance_is_legal() {
        let inst = ShoeInstance::new([], [], 3, []).unwrap();
        assert!(inst.h().is_empty());
    }

    #[test]
    fn sock_instance_examples() {
        SockInstance::from_raw(
            2,
            [(e("a"), atoms(["p", "q"]))],
            [(e("b"), atoms(["t", "v"]))],
            [(e("p"), e("t")), (e("q"), e("v"))],
        )
        .unwrap();

        let overlap = SockBundle::new(2, [(e("a1"), atoms(["p", "q"])), (e("a2"), atoms(["q", "r"]))]);
        assert!(matches!(overlap, Err(Error::FibersOverlap(x)) if x == e("q")));

        let left = SockBundle::new(2, [(e("a"), atoms(["p", "q"]))]).unwrap();
        let right = SockBundle::new(3, [(e("b"), atoms(["t", "v", "w"]))]).unwrap();
        let u = Bijection::identity(atoms(["p"]));
        assert!(matches!(SockInstance::new(left, right, u), Err(Error::FiberSizeError { .. })));
    }

    #[test]
    fn sock_instance_rejects_partial_u() {
        let err = SockInstance::from_raw(
            2,
            [(e("a"), atoms(["p", "q"]))],
            [(e("b"), atoms(["t", "v"]))],
            [(e("p"), e("t"))],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotABijection(_)));
    }

    #[test]
    fn relabeling_identity_and_swap() {
        let inst = small_shoes();
        let id = Relabeling::identity(inst.a(), inst.b());
        assert_eq!(apply_relabeling_shoe(&inst, &id).unwrap(), inst);

        let swap = Relabeling::new(
            Bijection::from_pairs([(e("a1"), e("a2")), (e("a2"), e("a1"))]).unwrap(),
            Bijection::identity(atoms(["b1", "b2"])),
        )
        .unwrap();
        let got = apply_relabeling_shoe(&inst, &swap).unwrap();
        // rows of h exchanged
        let want = ShoeInstance::new(
            atoms(["a1", "a2"]),
            atoms(["b1", "b2"]),
            2,
            [
                d("a2", 1, "b1", 1),
                d("a2", 2, "b2", 1),
                d("a1", 1, "b1", 2),
                d("a1", 2, "b2", 2),
            ],
        )
        .unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn relabeling_on_wrong_set() {
        let inst = small_shoes();
        let r = Relabeling::new(
            Bijection::identity(atoms(["z1", "z2"])),
            Bijection::identity(atoms(["b1", "b2"])),
        )
        .unwrap();
        assert!(matches!(apply_relabeling_shoe(&inst, &r), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn bundle_isomorphism_examples() {
        let x = SockBundle::new(2, [(e("a"), atoms(["p", "q"])), (e("b"), atoms(["r", "s"]))]).unwrap();
        let id = Bijection::identity(x.total_space());
        assert!(is_bundle_isomorphism(&id, &x, &x).unwrap());

        let cross = Bijection::from_pairs([(e("p"), e("r")), (e("r"), e("p")), (e("q"), e("s")), (e("s"), e("q"))])
            .unwrap();
        assert!(!is_bundle_isomorphism(&cross, &x, &x).unwrap());

        let within = Bijection::from_pairs([(e("p"), e("q")), (e("q"), e("p")), (e("r"), e("s")), (e("s"), e("r"))])
            .unwrap();
        assert!(is_bundle_isomorphism(&within, &x, &x).unwrap());

        let other = SockBundle::new(2, [(e("c"), atoms(["p", "q"])), (e("b"), atoms(["r", "s"]))]).unwrap();
        assert!(matches!(is_bundle_isomorphism(&id, &x, &other), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn trivial_bundle_examples() {
        let t = trivial_bundle(atoms(["a"]), 2).unwrap();
        let fib: Vec<String> = t.fiber(&e("a")).unwrap().iter().map(|x| x.to_string()).collect();
        assert_eq!(fib, ["(a,1)", "(a,2)"]);
        assert_eq!(trivial_bundle([], 3).unwrap().total_len(), 0);
        let t = trivial_bundle(atoms(["a1", "a2"]), 1).unwrap();
        assert!(t.fibers().values().all(|f| f.len() == 1));
    }
}
