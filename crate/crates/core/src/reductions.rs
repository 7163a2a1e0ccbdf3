//! Constructive reductions between sock division, choice for pair families,
//! and "multiplication is repeated addition", plus trivialization and
//! divisibility witnesses.

use std::collections::{BTreeMap, BTreeSet};

use crate::bijection::Bijection;
use crate::element::{times_slots, Element};
use crate::error::{Error, Result};
use crate::model::{ChoiceAssignment, ShoeInstance, SockBundle, SockInstance};
use crate::shoe::shoe_divide;

/// Anything claiming to divide sock instances: given a bijection of total
/// spaces, return a bijection `left base -> right base`. Must be pure.
pub trait SockDivider {
    fn divide(&self, inst: &SockInstance) -> Result<Bijection>;
}

impl<F> SockDivider for F
where
    F: Fn(&SockInstance) -> Result<Bijection>,
{
    fn divide(&self, inst: &SockInstance) -> Result<Bijection> {
        self(inst)
    }
}

/// Calls the oracle and checks its answer is a bijection of the bases.
pub fn invoke_oracle(oracle: &dyn SockDivider, inst: &SockInstance) -> Result<Bijection> {
    let g = oracle.divide(inst)?;
    g.check_sets(&inst.left().base(), &inst.right().base())
        .map_err(|e| Error::OracleViolation(e.to_string()))?;
    Ok(g)
}

/// Disjoint fibers of size `n` indexed by an ordered list. The order stands
/// in for the natural numbers in the pair-family argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairFamily {
    n: usize,
    order: Vec<Element>,
    pairs: BTreeMap<Element, BTreeSet<Element>>,
}

impl PairFamily {
    pub fn new(
        n: usize,
        order: Vec<Element>,
        pairs: impl IntoIterator<Item = (Element, Vec<Element>)>,
    ) -> Result<Self> {
        let bundle = SockBundle::new(n, pairs)?;
        let listed: BTreeSet<_> = order.iter().cloned().collect();
        if listed.len() != order.len() {
            let dup = order
                .iter()
                .enumerate()
                .find(|(k, x)| order[..*k].contains(x))
                .map(|(_, x)| x.clone())
                .expect("a repeat exists");
            return Err(Error::DuplicateElement(dup));
        }
        if listed != bundle.base() {
            return Err(Error::DomainMismatch("order does not list exactly the indices".into()));
        }
        Ok(PairFamily {
            n,
            order,
            pairs: bundle.fibers().clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> &[Element] {
        &self.order
    }

    pub fn pairs(&self) -> &BTreeMap<Element, BTreeSet<Element>> {
        &self.pairs
    }

    pub fn socks(&self) -> BTreeSet<Element> {
        self.pairs.values().flatten().cloned().collect()
    }

    fn rank(&self, index: &Element) -> Option<usize> {
        self.order.iter().position(|x| x == index)
    }
}

/// Rows of the grids: base is the set of socks, fiber at `x` is
/// `{(x,1), …, (x,n)}`.
pub fn rows_bundle(family: &PairFamily) -> SockBundle {
    SockBundle::new(
        family.n,
        family.socks().into_iter().map(|x| (x.clone(), times_slots([x], family.n))),
    )
    .expect("rows of disjoint fibers are disjoint")
}

/// Columns of the grids: base is `indices × {1..n}`, fiber at `(i,s)` is
/// `A_i × {s}`.
pub fn columns_bundle(family: &PairFamily) -> SockBundle {
    let n = family.n;
    SockBundle::new(
        n,
        family.pairs.iter().flat_map(|(i, fiber)| {
            (1..=n).map(move |s| {
                (
                    Element::tuple(i.clone(), s),
                    fiber.iter().map(|x| Element::tuple(x.clone(), s)).collect(),
                )
            })
        }),
    )
    .expect("columns of disjoint fibers are disjoint")
}

/// The sock instance whose two sides are the rows and the columns over the
/// same total space, joined by the identity.
pub fn rows_columns_instance(family: &PairFamily) -> SockInstance {
    let rows = rows_bundle(family);
    let cols = columns_bundle(family);
    let u = Bijection::identity(rows.total_space());
    SockInstance::new(rows, cols, u).expect("identical total spaces")
}

/// Picks one sock from each fiber given a sock divider: divide the rows by
/// the columns, then keep the sock whose image `(i, s)` is least in
/// (index order, slot) order.
pub fn choice_from_sock_divider(family: &PairFamily, oracle: &dyn SockDivider) -> Result<ChoiceAssignment> {
    let inst = rows_columns_instance(family);
    let f = invoke_oracle(oracle, &inst)?;
    let key = |x: &Element| {
        let (index, slot) = f.apply(x).and_then(Element::as_tuple).expect("checked by invoke_oracle");
        (family.rank(index).expect("columns are indexed by the family"), slot)
    };
    let selection = family
        .pairs
        .iter()
        .map(|(i, fiber)| {
            let pick = fiber.iter().min_by_key(|x| key(x)).expect("fibers are nonempty");
            (i.clone(), pick.clone())
        })
        .collect();
    ChoiceAssignment::new(selection, &family.pairs)
}

/// The doubled space `⋃(X_a × n)` split two ways: by `(a, i)` into
/// `{(x,i) : x ∈ X_a}` on the left and by `x` into `{(x,i) : i ≤ n}` on the
/// right, joined by the identity.
pub fn doubled_instance(bundle: &SockBundle) -> Result<SockInstance> {
    let n = bundle.arity();
    let by_slot = SockBundle::new(
        n,
        bundle.fibers().iter().flat_map(|(a, fiber)| {
            (1..=n).map(move |i| {
                (
                    Element::tuple(a.clone(), i),
                    fiber.iter().map(|x| Element::tuple(x.clone(), i)).collect(),
                )
            })
        }),
    )?;
    let by_sock = SockBundle::new(
        n,
        bundle.total_space().into_iter().map(|x| (x.clone(), times_slots([x], n))),
    )?;
    let u = Bijection::identity(by_slot.total_space());
    SockInstance::new(by_slot, by_sock, u)
}

/// From a sock divider, a bijection `⋃X_a -> A×{1..n}`: divide the
/// [`doubled_instance`] to get `A×n -> ⋃X_a` and invert. It need not carry
/// `X_a` onto `{a}×n`.
pub fn mra_from_sock_divider(bundle: &SockBundle, oracle: &dyn SockDivider) -> Result<Bijection> {
    let inst = doubled_instance(bundle)?;
    let g = invoke_oracle(oracle, &inst)?.inverse();
    let codomain: BTreeSet<_> = times_slots(bundle.base(), bundle.arity()).into_iter().collect();
    g.check_sets(&bundle.total_space(), &codomain)
        .map_err(|e| Error::OracleViolation(e.to_string()))?;
    Ok(g)
}

/// Fiber-respecting bijection `⋃X_a -> A×n` that orders each fiber by how
/// many of its members `other_side` sends into a common fiber (larger
/// groups first), then by label.
///
/// Only the final label tie-break depends on names; the equivariance suite
/// reports whatever residual dependence that leaves.
fn order_fibers(bundle: &SockBundle, across: &Bijection, other: &SockBundle) -> Bijection {
    let mut pairs = Vec::new();
    for (a, fiber) in bundle.fibers() {
        let target = |x: &Element| other.project(across.apply(x).expect("total")).expect("total").clone();
        let mut members: Vec<(usize, String, Element)> = fiber
            .iter()
            .map(|x| {
                let t = target(x);
                let group = fiber.iter().filter(|y| target(y) == t).count();
                (usize::MAX - group, x.to_string(), x.clone())
            })
            .collect();
        members.sort();
        for (k, (_, _, x)) in members.into_iter().enumerate() {
            pairs.push((x, Element::tuple(a.clone(), k + 1)));
        }
    }
    Bijection::from_pairs(pairs).expect("fibers are disjoint")
}

/// Sock division through repeated addition: trivialize both sides, carry
/// `u` over to `A×n -> B×n`, then divide shoes.
pub fn sock_divide_from_mra(inst: &SockInstance) -> Result<Bijection> {
    let left = order_fibers(inst.left(), inst.u(), inst.right());
    let right = order_fibers(inst.right(), &inst.u().inverse(), inst.left());
    let h = right.compose(inst.u())?.compose(&left.inverse())?;
    let shoes = ShoeInstance::from_bijection(inst.left().base(), inst.right().base(), inst.arity(), &h)?;
    Ok(shoe_divide(&shoes)?.matching)
}

/// A total order on a finite carrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearOrder {
    rank: BTreeMap<Element, usize>,
}

impl LinearOrder {
    /// Ranks elements by their position in `sequence`.
    pub fn new(sequence: impl IntoIterator<Item = Element>) -> Result<Self> {
        let mut rank = BTreeMap::new();
        for (k, x) in sequence.into_iter().enumerate() {
            if rank.insert(x.clone(), k).is_some() {
                return Err(Error::DuplicateElement(x));
            }
        }
        Ok(LinearOrder { rank })
    }

    pub fn rank(&self, x: &Element) -> Option<usize> {
        self.rank.get(x).copied()
    }

    pub fn carrier(&self) -> impl Iterator<Item = &Element> {
        self.rank.keys()
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }
}

/// Uses an order on the base and any bijection `f: ⋃X_a -> A×n` to order
/// every fiber at once, then sends the k-th member of `X_a` to `(a, k)`.
pub fn trivialize_with_order(bundle: &SockBundle, order: &LinearOrder, f: &Bijection) -> Result<Bijection> {
    if order.carrier().ne(bundle.fibers().keys()) {
        return Err(Error::DomainMismatch("order does not cover the base".into()));
    }
    let n = bundle.arity();
    let trivial: BTreeSet<_> = times_slots(bundle.base(), n).into_iter().collect();
    if !f.has_sets(&bundle.total_space(), &trivial) {
        return Err(Error::DomainMismatch("f is not a bijection onto A×n".into()));
    }
    let rank = |x: &Element| {
        let (a, slot) = f.apply(x).and_then(Element::as_tuple).expect("checked");
        (order.rank(a).expect("checked"), slot)
    };
    let mut pairs = Vec::with_capacity(bundle.total_len());
    for (a, fiber) in bundle.fibers() {
        let mut members: Vec<&Element> = fiber.iter().collect();
        members.sort_by_key(|x| rank(x));
        for (k, x) in members.into_iter().enumerate() {
            pairs.push((x.clone(), Element::tuple(a.clone(), k + 1)));
        }
    }
    Bijection::from_pairs(pairs)
}

/// `B` with `|A| = |B × n|`, and the bijection `A -> B×n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrongWitness {
    pub quotient: BTreeSet<Element>,
    pub pairing: Bijection,
}

fn fresh_labels(count: usize, avoid: &BTreeSet<Element>) -> Vec<Element> {
    let mut prefix = String::from("q");
    while avoid.iter().any(|x| matches!(x, Element::Atom(s) if s.starts_with(&prefix))) {
        prefix.push('q');
    }
    (1..=count).map(|k| Element::atom(format!("{prefix}{k}"))).collect()
}

fn chunks(set: &BTreeSet<Element>, n: usize) -> Option<Vec<Vec<Element>>> {
    if n == 0 || !set.len().is_multiple_of(n) {
        return None;
    }
    let items: Vec<Element> = set.iter().cloned().collect();
    Some(items.chunks(n).map(<[Element]>::to_vec).collect())
}

pub fn strong_divisibility_witness(set: &BTreeSet<Element>, n: usize) -> Option<StrongWitness> {
    let groups = chunks(set, n)?;
    let quotient = fresh_labels(groups.len(), set);
    let pairing = Bijection::from_pairs(groups.into_iter().zip(&quotient).flat_map(|(group, q)| {
        group
            .into_iter()
            .enumerate()
            .map(move |(k, x)| (x, Element::tuple(q.clone(), k + 1)))
    }))
    .expect("chunks are disjoint");
    Some(StrongWitness {
        quotient: quotient.into_iter().collect(),
        pairing,
    })
}

/// A sock bundle whose total space is exactly `set`.
pub fn weak_divisibility_witness(set: &BTreeSet<Element>, n: usize) -> Option<SockBundle> {
    let groups = chunks(set, n)?;
    let base = fresh_labels(groups.len(), set);
    Some(SockBundle::new(n, base.into_iter().zip(groups)).expect("chunks are disjoint"))
}

/// Re-validates a strong witness against `set`.
pub fn check_strong_witness(set: &BTreeSet<Element>, n: usize, w: &StrongWitness) -> bool {
    let target: BTreeSet<_> = times_slots(w.quotient.iter().cloned(), n).into_iter().collect();
    w.pairing.has_sets(set, &target)
}

/// Re-validates a weak witness against `set`.
pub fn check_weak_witness(set: &BTreeSet<Element>, n: usize, w: &SockBundle) -> bool {
    w.arity() == n && w.total_space() == *set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::atoms;
    use crate::model::is_bundle_isomorphism;

    fn trivial(base: BTreeSet<Element>, n: usize) -> SockBundle {
        crate::model::trivial_bundle(base, n).expect("n >= 1")
    }

    fn e(s: &str) -> Element {
        Element::atom(s)
    }

    fn family(pairs: &[(&str, [&str; 2])]) -> PairFamily {
        PairFamily::new(
            2,
            pairs.iter().map(|(i, _)| e(i)).collect(),
            pairs.iter().map(|(i, p)| (e(i), atoms(*p))),
        )
        .unwrap()
    }

    /// Sorts both bases by label and pairs them positionally.
    fn by_label(inst: &SockInstance) -> Result<Bijection> {
        let mut l: Vec<_> = inst.left().base().into_iter().collect();
        let mut r: Vec<_> = inst.right().base().into_iter().collect();
        l.sort_by_key(|x| x.to_string());
        r.sort_by_key(|x| x.to_string());
        Bijection::from_pairs(l.into_iter().zip(r))
    }

    fn strings(set: &BTreeSet<Element>) -> Vec<String> {
        set.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn rows_of_one_pair() {
        let rows = rows_bundle(&family(&[("i0", ["x0", "y0"])]));
        assert_eq!(strings(rows.fiber(&e("x0")).unwrap()), ["(x0,1)", "(x0,2)"]);
        assert_eq!(strings(rows.fiber(&e("y0")).unwrap()), ["(y0,1)", "(y0,2)"]);
    }

    #[test]
    fn columns_of_one_pair() {
        let cols = columns_bundle(&family(&[("i0", ["x0", "y0"])]));
        let c1 = Element::tuple(e("i0"), 1);
        let c2 = Element::tuple(e("i0"), 2);
        assert_eq!(strings(cols.fiber(&c1).unwrap()), ["(x0,1)", "(y0,1)"]);
        assert_eq!(strings(cols.fiber(&c2).unwrap()), ["(x0,2)", "(y0,2)"]);
    }

    #[test]
    fn empty_family_gives_empty_bundles() {
        let f = PairFamily::new(2, vec![], []).unwrap();
        assert_eq!(rows_bundle(&f).total_len(), 0);
        assert_eq!(columns_bundle(&f).total_len(), 0);
    }

    #[test]
    fn two_pairs_sizes() {
        let f = family(&[("i0", ["x0", "y0"]), ("i1", ["x1", "y1"])]);
        let rows = rows_bundle(&f);
        let cols = columns_bundle(&f);
        assert_eq!((rows.base_len(), rows.total_len()), (4, 8));
        assert_eq!((cols.base_len(), cols.total_len()), (4, 8));
        assert_eq!(rows.total_space(), cols.total_space());
    }

    #[test]
    fn choice_with_label_oracle() {
        let f = family(&[("i0", ["x0", "y0"]), ("i1", ["x1", "y1"])]);
        let choice = choice_from_sock_divider(&f, &by_label).unwrap();
        for (i, pair) in f.pairs() {
            assert!(pair.contains(choice.get(i).unwrap()));
        }
    }

    #[test]
    fn choice_rejects_non_bijective_oracle() {
        let f = family(&[("i0", ["x0", "y0"])]);
        let bad = |inst: &SockInstance| -> Result<Bijection> {
            let target = inst.right().base().into_iter().next().unwrap();
            let source = inst.left().base().into_iter().next().unwrap();
            Bijection::from_pairs([(source, target)])
        };
        assert!(matches!(
            choice_from_sock_divider(&f, &bad),
            Err(Error::OracleViolation(_))
        ));
    }

    #[test]
    fn mra_single_fiber() {
        let x = SockBundle::new(2, [(e("a"), atoms(["p", "q"]))]).unwrap();
        let g = mra_from_sock_divider(&x, &by_label).unwrap();
        assert_eq!(g.domain_set(), x.total_space());
        assert_eq!(strings(&g.codomain_set()), ["(a,1)", "(a,2)"]);
    }

    #[test]
    fn mra_empty_bundle() {
        let x = SockBundle::new(2, []).unwrap();
        assert!(mra_from_sock_divider(&x, &by_label).unwrap().is_empty());
    }

    #[test]
    fn sock_divide_single_fibers() {
        let inst = SockInstance::from_raw(
            2,
            [(e("a"), atoms(["p", "q"]))],
            [(e("b"), atoms(["t", "v"]))],
            [(e("p"), e("v")), (e("q"), e("t"))],
        )
        .unwrap();
        let g = sock_divide_from_mra(&inst).unwrap();
        assert_eq!(g, Bijection::from_pairs([(e("a"), e("b"))]).unwrap());
    }

    #[test]
    fn sock_divide_fiber_respecting() {
        let inst = SockInstance::from_raw(
            2,
            [(e("a1"), atoms(["p", "q"])), (e("a2"), atoms(["r", "s"]))],
            [(e("b1"), atoms(["t", "u"])), (e("b2"), atoms(["v", "w"]))],
            [(e("p"), e("w")), (e("q"), e("v")), (e("r"), e("u")), (e("s"), e("t"))],
        )
        .unwrap();
        let g = sock_divide_from_mra(&inst).unwrap();
        assert_eq!(g, inst.induced_base_map().unwrap());
        assert_eq!(g.apply(&e("a1")), Some(&e("b2")));
    }

    #[test]
    fn sock_divide_empty() {
        let inst = SockInstance::from_raw(2, [], [], []).unwrap();
        assert!(sock_divide_from_mra(&inst).unwrap().is_empty());
    }

    #[test]
    fn trivialize_sorts_by_image_rank() {
        let x = SockBundle::new(2, [(e("a"), atoms(["p", "q"]))]).unwrap();
        let a1 = Element::tuple(e("a"), 1);
        let a2 = Element::tuple(e("a"), 2);
        let f = Bijection::from_pairs([(e("p"), a2.clone()), (e("q"), a1.clone())]).unwrap();
        let order = LinearOrder::new([e("a")]).unwrap();
        let t = trivialize_with_order(&x, &order, &f).unwrap();
        assert_eq!(t.apply(&e("q")), Some(&a1));
        assert_eq!(t.apply(&e("p")), Some(&a2));
        assert!(is_bundle_isomorphism(&t, &x, &trivial(x.base(), 2)).unwrap());
    }

    #[test]
    fn trivialize_trivial_with_identity() {
        let t = trivial(atoms(["a", "b"]).into_iter().collect(), 2);
        let id = Bijection::identity(t.total_space());
        let order = LinearOrder::new(atoms(["b", "a"])).unwrap();
        assert!(trivialize_with_order(&t, &order, &id).unwrap().is_identity());
    }

    #[test]
    fn trivialize_with_crossing_f() {
        let x = SockBundle::new(2, [(e("a"), atoms(["p", "q"])), (e("b"), atoms(["r", "s"]))]).unwrap();
        let t = |a: &str, k| Element::tuple(e(a), k);
        // p and r swap base points under f
        let f = Bijection::from_pairs([
            (e("p"), t("b", 1)),
            (e("q"), t("a", 2)),
            (e("r"), t("a", 1)),
            (e("s"), t("b", 2)),
        ])
        .unwrap();
        let order = LinearOrder::new(atoms(["a", "b"])).unwrap();
        let triv = trivialize_with_order(&x, &order, &f).unwrap();
        assert!(is_bundle_isomorphism(&triv, &x, &trivial(x.base(), 2)).unwrap());
        assert_eq!(triv.apply(&e("q")), Some(&t("a", 1)));
    }

    #[test]
    fn trivialize_rejects_partial_order() {
        let x = SockBundle::new(1, [(e("a"), atoms(["p"])), (e("b"), atoms(["r"]))]).unwrap();
        let f = Bijection::from_pairs([(e("p"), Element::tuple(e("a"), 1)), (e("r"), Element::tuple(e("b"), 1))]).unwrap();
        let order = LinearOrder::new([e("a")]).unwrap();
        assert!(matches!(trivialize_with_order(&x, &order, &f), Err(Error::DomainMismatch(_))));
    }

    fn set_of(size: usize) -> BTreeSet<Element> {
        (0..size).map(|k| Element::atom(format!("x{k}"))).collect()
    }

    #[test]
    fn divisibility_examples() {
        let w = strong_divisibility_witness(&set_of(6), 3).unwrap();
        assert_eq!(w.quotient.len(), 2);
        assert!(check_strong_witness(&set_of(6), 3, &w));
        assert!(strong_divisibility_witness(&set_of(5), 3).is_none());
        assert!(strong_divisibility_witness(&set_of(0), 4).unwrap().quotient.is_empty());

        let b = weak_divisibility_witness(&set_of(4), 2).unwrap();
        assert!(check_weak_witness(&set_of(4), 2, &b));
        assert!(weak_divisibility_witness(&set_of(3), 2).is_none());
    }

    #[test]
    fn fresh_labels_avoid_collisions() {
        let set: BTreeSet<_> = atoms(["q1", "q2"]).into_iter().collect();
        let w = weak_divisibility_witness(&set, 1).unwrap();
        assert!(w.base().is_disjoint(&set));
    }
}
