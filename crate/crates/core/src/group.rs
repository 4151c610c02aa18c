//! Exact normal forms for the bundled countable groups.
//!
//! Four families are supported: free groups `F_r`, lattices `Z^n`, the
//! Baumslag–Solitar group `BS(1,2) = <a, b | b a b^-1 = a^2>` and binary
//! direct products of these. Every [`GroupElement`] is stored in a canonical
//! normal form, so structural equality is group equality.
//!
//! `BS(1,2)` is realized as the semidirect product `Z[1/2] ⋊ Z` with
//! `(x, k)(y, l) = (x + 2^k y, k + l)`; the generators are `a = (1, 0)` and
//! `b = (0, 1)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Generator labels; `e` is reserved for the identity.
const LABELS: &[u8] = b"abcdfghijklmnopqrstuvwxyz";

/// Largest number of generators a descriptor may carry.
pub const MAX_GENERATORS: usize = LABELS.len();

/// A dyadic rational `numerator · 2^exponent` in lowest terms.
///
/// The numerator is odd, or zero with exponent zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: i64,
}

impl Dyadic {
    pub fn new(numerator: BigInt, exponent: i64) -> Self {
        if numerator.is_zero() {
            return Self::zero();
        }
        let twos = numerator.trailing_zeros().unwrap_or(0);
        Dyadic {
            numerator: numerator >> twos,
            exponent: exponent + twos as i64,
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            numerator: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(BigInt::from(n), 0)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// The value as an integer, if it is one.
    pub fn to_integer(&self) -> Option<BigInt> {
        (self.exponent >= 0).then(|| &self.numerator << self.exponent as usize)
    }

    /// Multiplication by `2^k`.
    pub fn shifted(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Dyadic {
            numerator: self.numerator.clone(),
            exponent: self.exponent + k,
        }
    }

    pub fn neg(&self) -> Self {
        Dyadic {
            numerator: -&self.numerator,
            exponent: self.exponent,
        }
    }

    /// Both numerators rescaled to the smaller exponent.
    fn aligned(&self, other: &Self) -> (BigInt, BigInt, i64) {
        let e = self.exponent.min(other.exponent);
        (
            &self.numerator << (self.exponent - e) as usize,
            &other.numerator << (other.exponent - e) as usize,
            e,
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (a, b, e) = self.aligned(other);
        Self::new(a + b, e)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_integer() {
            Some(n) => write!(f, "{n}"),
            None => {
                let den = BigInt::one() << (-self.exponent) as usize;
                write!(f, "{}/{}", self.numerator, den)
            }
        }
    }
}

/// A generator or its formal inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter { generator, inverse }
    }

    pub fn pos(generator: usize) -> Self {
        Letter::new(generator, false)
    }

    pub fn neg(generator: usize) -> Self {
        Letter::new(generator, true)
    }

    pub fn inverted(self) -> Self {
        Letter {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    /// `+1` or `-1`.
    pub fn sign(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }
}

/// An element of `BS(1,2)` as a pair `(x, height)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BsElement {
    pub x: Dyadic,
    pub height: i64,
}

/// Normal form of an element of one of the bundled groups.
///
/// The derived order is the canonical total order used for every
/// deterministic tie-break: lexicographic on letters for words, on
/// coordinates for vectors, numeric on `(x, height)` for `BS(1,2)` and
/// componentwise for pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Word(Vec<Letter>),
    Vector(Vec<i64>),
    Bs(BsElement),
    Pair(Box<GroupElement>, Box<GroupElement>),
}

impl GroupElement {
    /// Integer payload of a rank-one lattice element.
    pub fn as_integer(&self) -> Option<i64> {
        match self {
            GroupElement::Vector(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }

    pub fn integer(n: i64) -> Self {
        GroupElement::Vector(vec![n])
    }

    pub fn bs(x: Dyadic, height: i64) -> Self {
        GroupElement::Bs(BsElement { x, height })
    }
}

fn write_word(f: &mut fmt::Formatter<'_>, word: &[Letter], offset: usize) -> fmt::Result {
    if word.is_empty() {
        return f.write_str("e");
    }
    for (i, l) in word.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        if l.inverse {
            f.write_str("-")?;
        }
        match LABELS.get(l.generator + offset) {
            Some(&c) => write!(f, "{}", c as char)?,
            None => write!(f, "g{}", l.generator + offset)?,
        }
    }
    Ok(())
}

struct Rendered<'a> {
    element: &'a GroupElement,
    group: Option<&'a GroupDescriptor>,
    offset: usize,
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.element {
            GroupElement::Word(w) => write_word(f, w, self.offset),
            GroupElement::Vector(v) => {
                f.write_str("(")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            GroupElement::Bs(b) => write!(f, "({}, {})", b.x, b.height),
            GroupElement::Pair(l, r) => {
                let (lg, rg, shift) = match self.group {
                    Some(GroupDescriptor::Product(lg, rg)) => {
                        (Some(&**lg), Some(&**rg), lg.generator_count())
                    }
                    _ => (None, None, 0),
                };
                write!(
                    f,
                    "[{} | {}]",
                    Rendered {
                        element: l,
                        group: lg,
                        offset: self.offset,
                    },
                    Rendered {
                        element: r,
                        group: rg,
                        offset: self.offset + shift,
                    }
                )
            }
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Rendered {
            element: self,
            group: None,
            offset: 0,
        }
        .fmt(f)
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// One of the bundled countable groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupDescriptor {
    Free { rank: usize },
    Lattice { rank: usize },
    BaumslagSolitar12,
    Product(Box<GroupDescriptor>, Box<GroupDescriptor>),
}

impl GroupDescriptor {
    pub fn free(rank: usize) -> Result<Self> {
        Self::validated(GroupDescriptor::Free { rank })
    }

    pub fn lattice(rank: usize) -> Result<Self> {
        Self::validated(GroupDescriptor::Lattice { rank })
    }

    pub fn product(left: GroupDescriptor, right: GroupDescriptor) -> Result<Self> {
        Self::validated(GroupDescriptor::Product(Box::new(left), Box::new(right)))
    }

    /// The integers `Z = lattice:1`.
    pub fn integers() -> Self {
        GroupDescriptor::Lattice { rank: 1 }
    }

    fn validated(g: GroupDescriptor) -> Result<Self> {
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        match self {
            GroupDescriptor::Free { rank } | GroupDescriptor::Lattice { rank } if *rank == 0 => {
                return Err(Error::InvalidDescriptor(format!("{self}: rank must be ≥ 1")))
            }
            GroupDescriptor::Product(l, r) => {
                l.validate()?;
                r.validate()?;
            }
            _ => {}
        }
        if self.generator_count() > MAX_GENERATORS {
            return Err(Error::InvalidDescriptor(format!(
                "{self}: at most {MAX_GENERATORS} generators are supported"
            )));
        }
        Ok(())
    }

    pub fn generator_count(&self) -> usize {
        match self {
            GroupDescriptor::Free { rank } | GroupDescriptor::Lattice { rank } => *rank,
            GroupDescriptor::BaumslagSolitar12 => 2,
            GroupDescriptor::Product(l, r) => l.generator_count() + r.generator_count(),
        }
    }

    /// Labels of the generators; formal inverses are written with a leading `-`.
    pub fn generator_labels(&self) -> Vec<String> {
        LABELS[..self.generator_count()]
            .iter()
            .map(|&c| (c as char).to_string())
            .collect()
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            GroupDescriptor::Free { rank } => *rank == 1,
            GroupDescriptor::Lattice { .. } => true,
            GroupDescriptor::BaumslagSolitar12 => false,
            GroupDescriptor::Product(l, r) => l.is_abelian() && r.is_abelian(),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupDescriptor::Free { .. } => GroupElement::Word(Vec::new()),
            GroupDescriptor::Lattice { rank } => GroupElement::Vector(vec![0; *rank]),
            GroupDescriptor::BaumslagSolitar12 => GroupElement::bs(Dyadic::zero(), 0),
            GroupDescriptor::Product(l, r) => {
                GroupElement::Pair(Box::new(l.identity()), Box::new(r.identity()))
            }
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    /// Whether `g` is a normal form of this group.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (self, g) {
            (GroupDescriptor::Free { rank }, GroupElement::Word(w)) => {
                w.iter().all(|l| l.generator < *rank)
                    && w.windows(2).all(|p| p[0] != p[1].inverted())
            }
            (GroupDescriptor::Lattice { rank }, GroupElement::Vector(v)) => v.len() == *rank,
            (GroupDescriptor::BaumslagSolitar12, GroupElement::Bs(b)) => {
                b.x.is_zero() && b.x.exponent == 0
                    || b.x.numerator.is_odd()
            }
            (GroupDescriptor::Product(lg, rg), GroupElement::Pair(l, r)) => {
                lg.contains(l) && rg.contains(r)
            }
            _ => false,
        }
    }

    pub fn check(&self, g: &GroupElement) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                group: self.to_string(),
                element: g.to_string(),
            })
        }
    }

    /// Renders `g` with this group's generator labels.
    pub fn render(&self, g: &GroupElement) -> String {
        Rendered {
            element: g,
            group: Some(self),
            offset: 0,
        }
        .to_string()
    }

    /// The group law, returning the normal form of `g·h`.
    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.compose_unchecked(g, h))
    }

    /// [`compose`](Self::compose) without membership checks; both operands
    /// must already be normal forms of this group.
    pub fn compose_unchecked(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match (self, g, h) {
            (GroupDescriptor::Free { .. }, GroupElement::Word(a), GroupElement::Word(b)) => {
                let mut out = Vec::with_capacity(a.len() + b.len());
                out.extend_from_slice(a);
                for &l in b {
                    if out.last() == Some(&l.inverted()) {
                        out.pop();
                    } else {
                        out.push(l);
                    }
                }
                GroupElement::Word(out)
            }
            (GroupDescriptor::Lattice { .. }, GroupElement::Vector(a), GroupElement::Vector(b)) => {
                GroupElement::Vector(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupDescriptor::BaumslagSolitar12, GroupElement::Bs(a), GroupElement::Bs(b)) => {
                GroupElement::bs(a.x.add(&b.x.shifted(a.height)), a.height + b.height)
            }
            (
                GroupDescriptor::Product(lg, rg),
                GroupElement::Pair(al, ar),
                GroupElement::Pair(bl, br),
            ) => GroupElement::Pair(
                Box::new(lg.compose_unchecked(al, bl)),
                Box::new(rg.compose_unchecked(ar, br)),
            ),
            _ => panic!("compose_unchecked: {g} or {h} does not belong to {self}"),
        }
    }

    pub fn invert(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(self.invert_unchecked(g))
    }

    pub fn invert_unchecked(&self, g: &GroupElement) -> GroupElement {
        match (self, g) {
            (GroupDescriptor::Free { .. }, GroupElement::Word(w)) => {
                GroupElement::Word(w.iter().rev().map(|l| l.inverted()).collect())
            }
            (GroupDescriptor::Lattice { .. }, GroupElement::Vector(v)) => {
                GroupElement::Vector(v.iter().map(|c| -c).collect())
            }
            // (x, k)^-1 = (-2^-k x, -k)
            (GroupDescriptor::BaumslagSolitar12, GroupElement::Bs(b)) => {
                GroupElement::bs(b.x.shifted(-b.height).neg(), -b.height)
            }
            (GroupDescriptor::Product(lg, rg), GroupElement::Pair(l, r)) => GroupElement::Pair(
                Box::new(lg.invert_unchecked(l)),
                Box::new(rg.invert_unchecked(r)),
            ),
            _ => panic!("invert_unchecked: {g} does not belong to {self}"),
        }
    }

    /// `g^-1 h`, the element whose norm is `d(g, h)`.
    pub fn quotient_unchecked(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        self.compose_unchecked(&self.invert_unchecked(g), h)
    }

    pub fn generator(&self, index: usize) -> Result<GroupElement> {
        let count = self.generator_count();
        if index >= count {
            return Err(Error::GeneratorOutOfRange {
                group: self.to_string(),
                index,
                count,
            });
        }
        Ok(match self {
            GroupDescriptor::Free { .. } => GroupElement::Word(vec![Letter::pos(index)]),
            GroupDescriptor::Lattice { rank } => {
                let mut v = vec![0; *rank];
                v[index] = 1;
                GroupElement::Vector(v)
            }
            GroupDescriptor::BaumslagSolitar12 => {
                if index == 0 {
                    GroupElement::bs(Dyadic::from_int(1), 0)
                } else {
                    GroupElement::bs(Dyadic::zero(), 1)
                }
            }
            GroupDescriptor::Product(l, r) => {
                let split = l.generator_count();
                if index < split {
                    GroupElement::Pair(Box::new(l.generator(index)?), Box::new(r.identity()))
                } else {
                    GroupElement::Pair(Box::new(l.identity()), Box::new(r.generator(index - split)?))
                }
            }
        })
    }

    pub fn letter(&self, letter: Letter) -> Result<GroupElement> {
        let g = self.generator(letter.generator)?;
        Ok(if letter.inverse {
            self.invert_unchecked(&g)
        } else {
            g
        })
    }

    /// The standard symmetric generating set `{s, s^-1}` in letter order.
    pub fn standard_generators(&self) -> Vec<GroupElement> {
        (0..self.generator_count())
            .flat_map(|i| [Letter::pos(i), Letter::neg(i)])
            .map(|l| self.letter(l).expect("index in range"))
            .collect()
    }

    /// Normal form of the product of `letters`; the empty word is the identity.
    pub fn evaluate_word(&self, letters: &[Letter]) -> Result<GroupElement> {
        let mut acc = self.identity();
        for &l in letters {
            let s = self.letter(l)?;
            acc = self.compose_unchecked(&acc, &s);
        }
        Ok(acc)
    }

    /// `g^n` by repeated squaring.
    pub fn power(&self, g: &GroupElement, n: i64) -> Result<GroupElement> {
        self.check(g)?;
        let base = if n < 0 { self.invert_unchecked(g) } else { g.clone() };
        let mut e = n.unsigned_abs();
        let mut sq = base;
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.compose_unchecked(&acc, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = self.compose_unchecked(&sq, &sq);
            }
        }
        Ok(acc)
    }

    /// A factorization of `g` into generator powers `(generator, exponent)`.
    ///
    /// For free groups this is the unique shortest syllable factorization of
    /// the reduced word. `BS(1,2)` elements `(n/2^j, k)` factor as
    /// `b^-j a^n b^(j+k)`.
    pub fn syllables(&self, g: &GroupElement) -> Result<Vec<(usize, i64)>> {
        self.check(g)?;
        self.syllables_at(g, 0)
    }

    fn syllables_at(&self, g: &GroupElement, offset: usize) -> Result<Vec<(usize, i64)>> {
        let mut out: Vec<(usize, i64)> = Vec::new();
        match (self, g) {
            (GroupDescriptor::Free { .. }, GroupElement::Word(w)) => {
                for l in w {
                    match out.last_mut() {
                        Some((gen, exp)) if *gen == l.generator + offset => *exp += l.sign(),
                        _ => out.push((l.generator + offset, l.sign())),
                    }
                }
            }
            (GroupDescriptor::Lattice { .. }, GroupElement::Vector(v)) => {
                out.extend(
                    v.iter()
                        .enumerate()
                        .filter(|(_, c)| **c != 0)
                        .map(|(i, c)| (i + offset, *c)),
                );
            }
            (GroupDescriptor::BaumslagSolitar12, GroupElement::Bs(b)) => {
                let to_i64 = |n: &BigInt| {
                    n.to_i64()
                        .ok_or_else(|| Error::Overflow(format!("factoring {g}")))
                };
                let k = b.height;
                if b.x.is_zero() {
                    if k != 0 {
                        out.push((offset + 1, k));
                    }
                } else if let Some(n) = b.x.to_integer() {
                    out.push((offset, to_i64(&n)?));
                    if k != 0 {
                        out.push((offset + 1, k));
                    }
                } else {
                    let j = -b.x.exponent;
                    out.push((offset + 1, -j));
                    out.push((offset, to_i64(&b.x.numerator)?));
                    if j + k != 0 {
                        out.push((offset + 1, j + k));
                    }
                }
            }
            (GroupDescriptor::Product(lg, rg), GroupElement::Pair(l, r)) => {
                out = lg.syllables_at(l, offset)?;
                out.extend(rg.syllables_at(r, offset + lg.generator_count())?);
            }
            _ => unreachable!("checked by caller"),
        }
        Ok(out)
    }

    /// The abelianized exponent sums of a lattice element; used by
    /// homomorphism tables whose domain is abelian.
    pub fn lattice_coordinates<'a>(&self, g: &'a GroupElement) -> Option<&'a [i64]> {
        match (self, g) {
            (GroupDescriptor::Lattice { .. }, GroupElement::Vector(v)) => Some(v),
            _ => None,
        }
    }

    /// Parses a word expression over this group's generator labels.
    ///
    /// Grammar: juxtaposition is the product, `-x` is the inverse of atom
    /// `x`, `( … )` groups, `^n` raises an atom to an integer power and `e`
    /// is the identity. Example: `"e"`, `"a b -a"`, `"(-b)a"`, `"a^3 -b^2"`.
    pub fn parse_word(&self, text: &str) -> Result<GroupElement> {
        let mut p = WordParser {
            group: self,
            chars: text.chars().filter(|c| !c.is_whitespace()).collect(),
            pos: 0,
        };
        let g = p.expr()?;
        if p.pos != p.chars.len() {
            return Err(Error::parse(
                "word",
                format!("unexpected '{}' in {text:?}", p.chars[p.pos]),
            ));
        }
        Ok(g)
    }

    /// Like [`parse_word`](Self::parse_word), but lattice elements may also be
    /// written as vectors `(1,-2)` and elements of `Z` as bare integers.
    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        let t = text.trim();
        if let GroupDescriptor::Lattice { rank } = self {
            if let Ok(n) = t.parse::<i64>() {
                if *rank == 1 {
                    return Ok(GroupElement::integer(n));
                }
            }
            if let Some(inner) = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
                let coords: std::result::Result<Vec<i64>, _> =
                    inner.split(',').map(|c| c.trim().parse::<i64>()).collect();
                if let Ok(v) = coords {
                    if v.len() != *rank {
                        return Err(Error::KindMismatch {
                            group: self.to_string(),
                            element: t.to_string(),
                        });
                    }
                    return Ok(GroupElement::Vector(v));
                }
            }
        }
        self.parse_word(t)
    }

    fn label_index(&self, c: char) -> Option<usize> {
        LABELS[..self.generator_count()]
            .iter()
            .position(|&l| l as char == c)
    }
}

struct WordParser<'a> {
    group: &'a GroupDescriptor,
    chars: Vec<char>,
    pos: usize,
}

impl WordParser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<GroupElement> {
        let mut acc = self.group.identity();
        while let Some(c) = self.peek() {
            if c == ')' {
                break;
            }
            let t = self.term()?;
            acc = self.group.compose_unchecked(&acc, &t);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<GroupElement> {
        let atom = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let start = self.pos;
            if self.peek() == Some('-') {
                self.pos += 1;
            }
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let digits: String = self.chars[start..self.pos].iter().collect();
            let n: i64 = digits
                .parse()
                .map_err(|_| Error::parse("word", format!("bad exponent {digits:?}")))?;
            return self.group.power(&atom, n);
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<GroupElement> {
        let negate = self.peek() == Some('-');
        if negate {
            self.pos += 1;
        }
        let g = match self.peek() {
            Some('(') => {
                self.pos += 1;
                let g = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(Error::parse("word", "missing ')'"));
                }
                self.pos += 1;
                g
            }
            Some('e') => {
                self.pos += 1;
                self.group.identity()
            }
            Some(c) => {
                let idx = self.group.label_index(c).ok_or_else(|| {
                    Error::parse("word", format!("unknown generator '{c}' in {}", self.group))
                })?;
                self.pos += 1;
                self.group.generator(idx)?
            }
            None => return Err(Error::parse("word", "unexpected end of input")),
        };
        Ok(if negate {
            self.group.invert_unchecked(&g)
        } else {
            g
        })
    }
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupDescriptor::Free { rank } => write!(f, "free:{rank}"),
            GroupDescriptor::Lattice { rank } => write!(f, "lattice:{rank}"),
            GroupDescriptor::BaumslagSolitar12 => f.write_str("bs12"),
            GroupDescriptor::Product(l, r) => write!(f, "product({l},{r})"),
        }
    }
}

impl FromStr for GroupDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::parse("group descriptor", format!("{s:?}"));
        if s == "bs12" {
            return Ok(GroupDescriptor::BaumslagSolitar12);
        }
        if let Some(inner) = s.strip_prefix("product(").and_then(|t| t.strip_suffix(')')) {
            let mut depth = 0usize;
            let split = inner.char_indices().find_map(|(i, c)| {
                match c {
                    '(' => depth += 1,
                    ')' => depth = depth.saturating_sub(1),
                    ',' if depth == 0 => return Some(i),
                    _ => {}
                }
                None
            });
            let i = split.ok_or_else(bad)?;
            return GroupDescriptor::product(inner[..i].parse()?, inner[i + 1..].parse()?);
        }
        let (kind, rank) = s.split_once(':').ok_or_else(bad)?;
        let rank: usize = rank.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "free" => GroupDescriptor::free(rank),
            "lattice" => GroupDescriptor::lattice(rank),
            _ => Err(bad()),
        }
    }
}

impl Serialize for GroupDescriptor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs() -> GroupDescriptor {
        GroupDescriptor::BaumslagSolitar12
    }

    #[test]
    fn free_reduction() {
        let f2 = GroupDescriptor::free(2).unwrap();
        let g = f2.parse_word("a b").unwrap();
        let h = f2.parse_word("-b a").unwrap();
        assert_eq!(f2.compose(&g, &h).unwrap(), f2.parse_word("a a").unwrap());
        assert_eq!(f2.render(&f2.invert(&g).unwrap()), "-b -a");
        let w = f2
            .evaluate_word(&[Letter::pos(0), Letter::pos(1), Letter::neg(1), Letter::pos(0)])
            .unwrap();
        assert_eq!(w, GroupElement::Word(vec![Letter::pos(0), Letter::pos(0)]));
    }

    #[test]
    fn bs_defining_relation() {
        let g = bs();
        let lhs = g.parse_word("b a -b").unwrap();
        assert_eq!(lhs, GroupElement::bs(Dyadic::from_int(2), 0));
        assert_eq!(lhs, g.parse_word("a a").unwrap());
        let half = g
            .evaluate_word(&[Letter::neg(1), Letter::pos(0), Letter::pos(1)])
            .unwrap();
        assert_eq!(half, GroupElement::bs(Dyadic::new(1.into(), -1), 0));
        assert_eq!(g.render(&half), "(1/2, 0)");
    }

    #[test]
    fn bs_inverse() {
        let g = bs();
        let x = GroupElement::bs(Dyadic::from_int(1), 1);
        let inv = g.invert(&x).unwrap();
        assert_eq!(inv, GroupElement::bs(Dyadic::new((-1).into(), -1), -1));
        assert!(g.is_identity(&g.compose(&x, &inv).unwrap()));
        assert!(g.is_identity(&g.invert(&g.identity()).unwrap()));
    }

    #[test]
    fn lattice_ops() {
        let z2 = GroupDescriptor::lattice(2).unwrap();
        let s = z2
            .compose(&GroupElement::Vector(vec![1, 2]), &GroupElement::Vector(vec![3, -1]))
            .unwrap();
        assert_eq!(s, GroupElement::Vector(vec![4, 1]));
        let z = GroupDescriptor::integers();
        let w = z
            .evaluate_word(&[Letter::pos(0), Letter::pos(0), Letter::neg(0)])
            .unwrap();
        assert_eq!(w, GroupElement::integer(1));
    }

    #[test]
    fn kind_mismatch_and_range() {
        let z2 = GroupDescriptor::lattice(2).unwrap();
        let err = z2.compose(&GroupElement::Vector(vec![1]), &z2.identity());
        assert!(matches!(err, Err(Error::KindMismatch { .. })));
        assert!(matches!(
            z2.evaluate_word(&[Letter::pos(2)]),
            Err(Error::GeneratorOutOfRange { .. })
        ));
        assert!(!GroupDescriptor::free(2)
            .unwrap()
            .contains(&GroupElement::Word(vec![Letter::pos(0), Letter::neg(0)])));
    }

    #[test]
    fn descriptor_parsing() {
        for s in ["free:2", "lattice:3", "bs12", "product(lattice:2,lattice:1)", "product(bs12,product(free:1,lattice:2))"] {
            let g: GroupDescriptor = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("free:0".parse::<GroupDescriptor>().is_err());
        assert!("lattice:26".parse::<GroupDescriptor>().is_err());
        assert!("torus:2".parse::<GroupDescriptor>().is_err());
        let p: GroupDescriptor = "product(lattice:2,lattice:1)".parse().unwrap();
        assert_eq!(p.generator_labels(), vec!["a", "b", "c"]);
        let c = p.parse_word("c a").unwrap();
        assert_eq!(p.render(&c), "[(1,0) | (1)]");
    }

    #[test]
    fn labels_skip_identity_symbol() {
        let f5 = GroupDescriptor::free(5).unwrap();
        assert_eq!(f5.generator_labels(), vec!["a", "b", "c", "d", "f"]);
        assert!(f5.is_identity(&f5.parse_word("e").unwrap()));
        assert_eq!(f5.parse_word("f").unwrap(), f5.generator(4).unwrap());
    }

    #[test]
    fn word_expressions() {
        let g = bs();
        let x = g.parse_word("(-b)a").unwrap();
        assert_eq!(x, g.compose(&g.parse_word("-b").unwrap(), &g.parse_word("a").unwrap()).unwrap());
        assert_eq!(g.parse_word("a^3").unwrap(), GroupElement::bs(Dyadic::from_int(3), 0));
        assert_eq!(g.parse_word("-(a b)").unwrap(), g.invert(&g.parse_word("a b").unwrap()).unwrap());
        assert!(g.parse_word("a)").is_err());
        assert!(g.parse_word("q").is_err());
    }

    #[test]
    fn syllable_factorizations_reproduce_elements() {
        let g = bs();
        let x = g.parse_word("-b -b a^3 b a").unwrap();
        let syl = g.syllables(&x).unwrap();
        let mut acc = g.identity();
        for (gen, exp) in syl {
            acc = g.compose_unchecked(&acc, &g.power(&g.generator(gen).unwrap(), exp).unwrap());
        }
        assert_eq!(acc, x);

        let f2 = GroupDescriptor::free(2).unwrap();
        let w = f2.parse_word("a a a -b -b").unwrap();
        assert_eq!(f2.syllables(&w).unwrap(), vec![(0, 3), (1, -2)]);
    }

    #[test]
    fn dyadic_order_and_display() {
        let half = Dyadic::new(1.into(), -1);
        let three_quarters = Dyadic::new(3.into(), -2);
        assert!(half < three_quarters);
        assert!(Dyadic::from_int(-1) < Dyadic::zero());
        assert_eq!(three_quarters.to_string(), "3/4");
        assert_eq!(Dyadic::new(12.into(), -2), Dyadic::from_int(3));
        assert_eq!(half.add(&half), Dyadic::from_int(1));
    }
}
