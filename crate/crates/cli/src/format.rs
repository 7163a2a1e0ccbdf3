//! The JSON instance files.
//!
//! Atoms are JSON strings; a product element `(x, i)` is the array `[x, i]`.
//! Object keys are strings, so a product key is written as its compact JSON
//! text (`"[\"i0\",1]"`), and atom labels may not start with `[`.
//!
//! [`emit`] writes the canonical form: compact JSON, fields in schema order,
//! element lists sorted, object keys sorted, and a trailing newline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use sockdiv::reductions::PairFamily;
use sockdiv::{Bijection, Element, ShoeInstance, SockBundle, SockInstance};

/// An element on the wire.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct El(pub Element);

impl Serialize for El {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            Element::Atom(label) => s.serialize_str(label),
            Element::Tuple(x, i) => {
                let mut seq = s.serialize_seq(Some(2))?;
                seq.serialize_element(&El((**x).clone()))?;
                seq.serialize_element(i)?;
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for El {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ElVisitor;

        impl<'de> Visitor<'de> for ElVisitor {
            type Value = El;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a label string or a pair [element, slot]")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<El, E> {
                atom_label(v).map(El).map_err(E::custom)
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<El, A::Error> {
                let x: El = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let i: usize = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(El(Element::tuple(x.0, i)))
            }
        }

        d.deserialize_any(ElVisitor)
    }
}

fn atom_label(v: &str) -> Result<Element, String> {
    if v.starts_with('[') {
        return Err(format!("label {v:?} starts with '[', which is reserved for product keys"));
    }
    Ok(Element::atom(v))
}

/// Object-key form of an element.
pub fn key_text(x: &Element) -> String {
    match x {
        Element::Atom(label) => label.clone(),
        Element::Tuple(..) => serde_json::to_string(&El(x.clone())).expect("elements serialize"),
    }
}

/// Inverse of [`key_text`].
pub fn parse_key(text: &str) -> Result<Element, String> {
    if text.starts_with('[') {
        serde_json::from_str::<El>(text)
            .map(|e| e.0)
            .map_err(|e| format!("bad product key {text:?}: {e}"))
    } else {
        atom_label(text)
    }
}

/// A JSON object read in document order, rejecting repeated keys.
#[derive(Debug)]
struct StrictMap<V>(Vec<(Element, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for StrictMap<V> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct MapVisitor<V>(std::marker::PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for MapVisitor<V> {
            type Value = StrictMap<V>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut seen = BTreeSet::new();
                let mut entries = Vec::new();
                while let Some(key) = map.next_key::<String>()? {
                    let k = parse_key(&key).map_err(de::Error::custom)?;
                    if !seen.insert(k.clone()) {
                        return Err(de::Error::custom(format!("duplicate key {key:?}")));
                    }
                    entries.push((k, map.next_value()?));
                }
                Ok(StrictMap(entries))
            }
        }

        d.deserialize_map(MapVisitor(std::marker::PhantomData))
    }
}

type Pairs = Vec<(El, El)>;
type RawDart = (El, usize);

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    kind: String,
    n: Option<usize>,
    #[serde(rename = "A")]
    a: Option<Vec<El>>,
    #[serde(rename = "B")]
    b: Option<Vec<El>>,
    h: Option<Vec<(RawDart, RawDart)>>,
    left: Option<StrictMap<Vec<El>>>,
    right: Option<StrictMap<Vec<El>>>,
    u: Option<Pairs>,
    order: Option<Vec<El>>,
    pairs: Option<StrictMap<Vec<El>>>,
    fibers: Option<StrictMap<Vec<El>>>,
    f: Option<Pairs>,
    elements: Option<Vec<El>>,
}

/// A parsed, validated instance file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceFile {
    Shoe(ShoeInstance),
    Sock(SockInstance),
    PairFamily(PairFamily),
    /// A sock bundle, optionally with a bijection `f: ⋃X_a -> A×n`.
    Bundle { bundle: SockBundle, f: Option<Bijection> },
    /// A bare finite set, for divisibility questions.
    Set(BTreeSet<Element>),
}

impl InstanceFile {
    pub fn kind(&self) -> &'static str {
        match self {
            InstanceFile::Shoe(_) => "shoe",
            InstanceFile::Sock(_) => "sock",
            InstanceFile::PairFamily(_) => "pair-family",
            InstanceFile::Bundle { .. } => "bundle",
            InstanceFile::Set(_) => "set",
        }
    }
}

#[derive(Debug)]
pub enum FileErrorKind {
    /// Not JSON, or not in the schema.
    Parse(String),
    /// Well-formed, but not a valid instance.
    Invalid(sockdiv::Error),
}

/// A parse or validation error with its position in the file.
#[derive(Debug)]
pub struct FileError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub kind: FileErrorKind,
}

impl FileError {
    pub fn is_parse(&self) -> bool {
        matches!(self.kind, FileErrorKind::Parse(_))
    }
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match (self.line, &self.field) {
            (Some(line), Some(field)) => write!(f, "line {line}, field {field:?}: ")?,
            (Some(line), None) => write!(f, "line {line}: ")?,
            (None, Some(field)) => write!(f, "field {field:?}: ")?,
            (None, None) => {}
        }
        match &self.kind {
            FileErrorKind::Parse(msg) => write!(f, "parse error: {msg}"),
            FileErrorKind::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for FileError {}

/// 1-based line of the first `"field":` in `text`.
fn locate(text: &str, field: &str) -> Option<usize> {
    let key = format!("\"{field}\"");
    let mut from = 0;
    let start = loop {
        let at = from + text[from..].find(&key)?;
        let rest = text[at + key.len()..].trim_start();
        if rest.starts_with(':') {
            break at;
        }
        from = at + key.len();
    };
    Some(text[..start].matches('\n').count() + 1)
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn parse(&self, field: &str, msg: impl Into<String>) -> FileError {
        FileError {
            line: locate(self.text, field),
            field: Some(field.to_string()),
            kind: FileErrorKind::Parse(msg.into()),
        }
    }

    fn invalid(&self, field: &str, e: sockdiv::Error) -> FileError {
        FileError {
            line: locate(self.text, field),
            field: Some(field.to_string()),
            kind: FileErrorKind::Invalid(e),
        }
    }

    fn require<T>(&self, value: Option<T>, field: &str, kind: &str) -> Result<T, FileError> {
        value.ok_or_else(|| FileError {
            line: None,
            field: Some(field.to_string()),
            kind: FileErrorKind::Parse(format!("a {kind} file needs {field:?}")),
        })
    }

    /// Rejects fields that belong to other kinds.
    fn only(&self, raw: &RawFile, kind: &str, allowed: &[&str]) -> Result<(), FileError> {
        let present = [
            ("n", raw.n.is_some()),
            ("A", raw.a.is_some()),
            ("B", raw.b.is_some()),
            ("h", raw.h.is_some()),
            ("left", raw.left.is_some()),
            ("right", raw.right.is_some()),
            ("u", raw.u.is_some()),
            ("order", raw.order.is_some()),
            ("pairs", raw.pairs.is_some()),
            ("fibers", raw.fibers.is_some()),
            ("f", raw.f.is_some()),
            ("elements", raw.elements.is_some()),
        ];
        match present.iter().find(|(name, there)| *there && !allowed.contains(name)) {
            Some((name, _)) => Err(self.parse(name, format!("field {name:?} does not belong in a {kind} file"))),
            None => Ok(()),
        }
    }

    /// The list as a set, rejecting repeats.
    fn distinct(&self, field: &str, list: Vec<El>) -> Result<Vec<Element>, FileError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(list.len());
        for El(x) in list {
            if !seen.insert(x.clone()) {
                let needle = serde_json::to_string(&El(x.clone())).expect("serializes");
                // the second occurrence after the key is the repeat
                let first = self.text.find(&format!("\"{field}\"")).unwrap_or(0);
                let line = self.text[first..]
                    .match_indices(&needle)
                    .nth(1)
                    .map(|(at, _)| self.text[..first + at].matches('\n').count() + 1)
                    .or_else(|| locate(self.text, field));
                return Err(FileError {
                    line,
                    field: Some(field.to_string()),
                    kind: FileErrorKind::Parse(format!("duplicate label {x} in {field:?}")),
                });
            }
            out.push(x);
        }
        Ok(out)
    }

    fn bundle(&self, field: &str, n: usize, map: StrictMap<Vec<El>>) -> Result<SockBundle, FileError> {
        let fibers = map
            .0
            .into_iter()
            .map(|(a, xs)| (a, xs.into_iter().map(|e| e.0).collect()))
            .collect::<Vec<_>>();
        SockBundle::new(n, fibers).map_err(|e| self.invalid(field, e))
    }

    fn bijection(&self, field: &str, pairs: Pairs) -> Result<Bijection, FileError> {
        Bijection::from_pairs(pairs.into_iter().map(|(x, y)| (x.0, y.0))).map_err(|e| self.invalid(field, e))
    }
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<InstanceFile, FileError> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| FileError {
        line: (e.line() > 0).then_some(e.line()),
        field: None,
        kind: FileErrorKind::Parse(e.to_string()),
    })?;
    let cx = Ctx { text };
    match raw.kind.as_str() {
        "shoe" => {
            cx.only(&raw, "shoe", &["n", "A", "B", "h"])?;
            let n = cx.require(raw.n, "n", "shoe")?;
            let a = cx.distinct("A", cx.require(raw.a, "A", "shoe")?)?;
            let b = cx.distinct("B", cx.require(raw.b, "B", "shoe")?)?;
            let h = cx.require(raw.h, "h", "shoe")?;
            let h = h.into_iter().map(|((x, i), (y, j))| ((x.0, i), (y.0, j)));
            let field = |e: &sockdiv::Error| match e {
                sockdiv::Error::ZeroArity => "n",
                sockdiv::Error::SizeMismatch { .. } => "B",
                _ => "h",
            };
            ShoeInstance::new(a, b, n, h)
                .map(InstanceFile::Shoe)
                .map_err(|e| cx.invalid(field(&e), e))
        }
        "sock" => {
            cx.only(&raw, "sock", &["n", "left", "right", "u"])?;
            let n = cx.require(raw.n, "n", "sock")?;
            let left = cx.bundle("left", n, cx.require(raw.left, "left", "sock")?)?;
            let right = cx.bundle("right", n, cx.require(raw.right, "right", "sock")?)?;
            let u = cx.bijection("u", cx.require(raw.u, "u", "sock")?)?;
            SockInstance::new(left, right, u)
                .map(InstanceFile::Sock)
                .map_err(|e| cx.invalid("u", e))
        }
        "pair-family" => {
            cx.only(&raw, "pair-family", &["n", "order", "pairs"])?;
            let n = cx.require(raw.n, "n", "pair-family")?;
            let order = cx.distinct("order", cx.require(raw.order, "order", "pair-family")?)?;
            let pairs = cx.require(raw.pairs, "pairs", "pair-family")?;
            let pairs = pairs.0.into_iter().map(|(i, xs)| (i, xs.into_iter().map(|e| e.0).collect()));
            PairFamily::new(n, order, pairs).map(InstanceFile::PairFamily).map_err(|e| {
                let field = if matches!(e, sockdiv::Error::DomainMismatch(_)) { "order" } else { "pairs" };
                cx.invalid(field, e)
            })
        }
        "bundle" => {
            cx.only(&raw, "bundle", &["n", "fibers", "f"])?;
            let n = cx.require(raw.n, "n", "bundle")?;
            let bundle = cx.bundle("fibers", n, cx.require(raw.fibers, "fibers", "bundle")?)?;
            let f = match raw.f {
                Some(pairs) => {
                    let f = cx.bijection("f", pairs)?;
                    let target: BTreeSet<Element> = sockdiv::element::times_slots(bundle.base(), n).into_iter().collect();
                    f.check_sets(&bundle.total_space(), &target).map_err(|e| cx.invalid("f", e))?;
                    Some(f)
                }
                None => None,
            };
            Ok(InstanceFile::Bundle { bundle, f })
        }
        "set" => {
            cx.only(&raw, "set", &["elements"])?;
            let elements = cx.distinct("elements", cx.require(raw.elements, "elements", "set")?)?;
            Ok(InstanceFile::Set(elements.into_iter().collect()))
        }
        other => Err(cx.parse(
            "kind",
            format!("unknown kind {other:?}; expected shoe, sock, pair-family, bundle or set"),
        )),
    }
}

fn els<'a>(xs: impl IntoIterator<Item = &'a Element>) -> Vec<El> {
    xs.into_iter().cloned().map(El).collect()
}

/// `{key_text(a): sorted fiber}`.
pub fn fiber_map(fibers: &BTreeMap<Element, BTreeSet<Element>>) -> BTreeMap<String, Vec<El>> {
    fibers.iter().map(|(a, xs)| (key_text(a), els(xs))).collect()
}

pub fn pairs_of(g: &Bijection) -> Pairs {
    g.iter().map(|(x, y)| (El(x.clone()), El(y.clone()))).collect()
}

#[derive(Serialize)]
struct ShoeOut {
    kind: &'static str,
    n: usize,
    #[serde(rename = "A")]
    a: Vec<El>,
    #[serde(rename = "B")]
    b: Vec<El>,
    h: Vec<((El, usize), (El, usize))>,
}

#[derive(Serialize)]
struct SockOut {
    kind: &'static str,
    n: usize,
    left: BTreeMap<String, Vec<El>>,
    right: BTreeMap<String, Vec<El>>,
    u: Pairs,
}

#[derive(Serialize)]
struct PairFamilyOut {
    kind: &'static str,
    n: usize,
    order: Vec<El>,
    pairs: BTreeMap<String, Vec<El>>,
}

#[derive(Serialize)]
struct BundleOut {
    kind: &'static str,
    n: usize,
    fibers: BTreeMap<String, Vec<El>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<Pairs>,
}

#[derive(Serialize)]
struct SetOut {
    kind: &'static str,
    elements: Vec<El>,
}

/// Canonical text of an instance.
pub fn emit(file: &InstanceFile) -> String {
    let text = match file {
        InstanceFile::Shoe(inst) => serde_json::to_string(&ShoeOut {
            kind: "shoe",
            n: inst.n(),
            a: els(inst.a()),
            b: els(inst.b()),
            h: inst
                .darts()
                .into_iter()
                .map(|((a, i), (b, j))| ((El(a), i), (El(b), j)))
                .collect(),
        }),
        InstanceFile::Sock(inst) => serde_json::to_string(&SockOut {
            kind: "sock",
            n: inst.arity(),
            left: fiber_map(inst.left().fibers()),
            right: fiber_map(inst.right().fibers()),
            u: pairs_of(inst.u()),
        }),
        InstanceFile::PairFamily(family) => serde_json::to_string(&PairFamilyOut {
            kind: "pair-family",
            n: family.n(),
            order: els(family.order()),
            pairs: fiber_map(family.pairs()),
        }),
        InstanceFile::Bundle { bundle, f } => serde_json::to_string(&BundleOut {
            kind: "bundle",
            n: bundle.arity(),
            fibers: fiber_map(bundle.fibers()),
            f: f.as_ref().map(pairs_of),
        }),
        InstanceFile::Set(elements) => serde_json::to_string(&SetOut {
            kind: "set",
            elements: els(elements),
        }),
    };
    text.expect("instances serialize") + "\n"
}

/// Splits a comma-separated list of keys, leaving commas inside product
/// keys alone: `i0,["i1",2]` is two keys.
pub fn split_keys(list: &str) -> Result<Vec<Element>, String> {
    let mut keys = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (k, c) in list.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                keys.push(parse_key(list[start..k].trim())?);
                start = k + 1;
            }
            _ => {}
        }
    }
    if !list[start..].trim().is_empty() || !keys.is_empty() {
        keys.push(parse_key(list[start..].trim())?);
    }
    Ok(keys)
}
