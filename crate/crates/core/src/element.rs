use std::fmt;

/// An opaque set member.
///
/// Atoms carry a user label. Tuples are the reserved constructor for
/// Cartesian products with a slot set `{1..n}`, so `(x, 2)` can never collide
/// with a user label. The derived ordering is a storage detail only.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Atom(String),
    Tuple(Box<Element>, usize),
}

impl Element {
    pub fn atom(label: impl Into<String>) -> Self {
        Element::Atom(label.into())
    }

    pub fn tuple(base: Element, slot: usize) -> Self {
        Element::Tuple(Box::new(base), slot)
    }

    /// Splits a tuple into `(base, slot)`.
    pub fn as_tuple(&self) -> Option<(&Element, usize)> {
        match self {
            Element::Tuple(base, slot) => Some((base, *slot)),
            Element::Atom(_) => None,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Element::Atom(_))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Atom(label) => f.write_str(label),
            Element::Tuple(base, slot) => write!(f, "({base},{slot})"),
        }
    }
}

impl From<&str> for Element {
    fn from(label: &str) -> Self {
        Element::atom(label)
    }
}

/// Shorthand for a list of atoms, mostly for tests and fixtures.
pub fn atoms<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<Element> {
    labels.into_iter().map(Element::atom).collect()
}

/// `A × {1..n}` in row-major order.
pub fn times_slots(set: impl IntoIterator<Item = Element>, n: usize) -> Vec<Element> {
    set.into_iter()
        .flat_map(|x| (1..=n).map(move |s| Element::tuple(x.clone(), s)))
        .collect()
}
