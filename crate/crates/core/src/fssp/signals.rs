//! Kinds, speeds and data of the synchronisation machine, plus signal constructors.

use crate::continuum::{Direction, SemiDirection};
use crate::engine::Signal;
use crate::rational::{frac, int, zero, Q};
use num::pow;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeSet;
use std::fmt;

/// Finite sequence of directions; each letter is the direction to take when leaving a vertex
/// (or, for the first letter of a stationary signal's word, when leaving its own position).
pub type Word = Vec<Direction>;

pub type Sig = Signal<Kind, Datum>;
pub type Set = BTreeSet<Sig>;

/// The kinds that freezing suspends. Each has a stationary frozen counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Freezable {
    Divide(u8),
    ReflectedDivide,
    Terminal,
    Fire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Initiate,
    Leaf,
    Count,
    Midpoint,
    Find,
    ReflectedFind,
    Slowed,
    Freeze,
    Thaw,
    Divide(u8),
    ReflectedDivide,
    /// Speed-1/2 companion of a type-0 divide signal in a cascade without deeper types. It reaches
    /// the far boundary exactly when the cascade fires and marks that end.
    Terminal,
    Boundary,
    Fire,
    Frozen(Freezable),
}

impl Freezable {
    pub fn thawed(self) -> Kind {
        match self {
            Freezable::Divide(n) => Kind::Divide(n),
            Freezable::ReflectedDivide => Kind::ReflectedDivide,
            Freezable::Terminal => Kind::Terminal,
            Freezable::Fire => Kind::Fire,
        }
    }
}

/// `(2/3)^n / (2 - (2/3)^n)`, written as `2^n / (2·3^n - 2^n)`.
pub fn divide_speed(n: u8) -> Q {
    let two = pow(num::BigInt::from(2), n as usize);
    let three = pow(num::BigInt::from(3), n as usize);
    Q::new(two.clone(), three * 2 - two)
}

impl Kind {
    pub fn speed(self) -> Q {
        match self {
            Kind::Initiate | Kind::Find | Kind::ReflectedFind | Kind::Freeze | Kind::Thaw | Kind::ReflectedDivide => {
                int(1)
            }
            Kind::Slowed => frac(1, 3),
            Kind::Divide(n) => divide_speed(n),
            Kind::Terminal => frac(1, 2),
            Kind::Leaf | Kind::Count | Kind::Midpoint | Kind::Boundary | Kind::Fire | Kind::Frozen(_) => zero(),
        }
    }

    pub fn freezable(self) -> Option<Freezable> {
        match self {
            Kind::Divide(n) => Some(Freezable::Divide(n)),
            Kind::ReflectedDivide => Some(Freezable::ReflectedDivide),
            Kind::Terminal => Some(Freezable::Terminal),
            Kind::Fire => Some(Freezable::Fire),
            _ => None,
        }
    }

    /// Divide, reflected divide and terminal signals, frozen or not.
    pub fn is_divide_family(self) -> bool {
        matches!(
            self,
            Kind::Divide(_)
                | Kind::ReflectedDivide
                | Kind::Terminal
                | Kind::Frozen(Freezable::Divide(_))
                | Kind::Frozen(Freezable::ReflectedDivide)
                | Kind::Frozen(Freezable::Terminal)
        )
    }

    pub fn is_fire_family(self) -> bool {
        matches!(self, Kind::Fire | Kind::Frozen(Freezable::Fire))
    }

    pub fn label(self) -> String {
        match self {
            Kind::Initiate => "I".into(),
            Kind::Leaf => "L".into(),
            Kind::Count => "C".into(),
            Kind::Midpoint => "M".into(),
            Kind::Find => "U".into(),
            Kind::ReflectedFind => "Ǔ".into(),
            Kind::Slowed => "V".into(),
            Kind::Freeze => "F".into(),
            Kind::Thaw => "T".into(),
            Kind::Divide(n) => format!("D{n}"),
            Kind::ReflectedDivide => "Ď".into(),
            Kind::Terminal => "Dt".into(),
            Kind::Boundary => "B".into(),
            Kind::Fire => "X".into(),
            Kind::Frozen(f) => format!("F{}", f.thawed().label()),
        }
    }

    pub fn from_label(text: &str) -> Option<Kind> {
        let plain = |t: &str| -> Option<Kind> {
            Some(match t {
                "I" => Kind::Initiate,
                "L" => Kind::Leaf,
                "C" => Kind::Count,
                "M" => Kind::Midpoint,
                "U" => Kind::Find,
                "Ǔ" => Kind::ReflectedFind,
                "V" => Kind::Slowed,
                "F" => Kind::Freeze,
                "T" => Kind::Thaw,
                "Ď" => Kind::ReflectedDivide,
                "Dt" => Kind::Terminal,
                "B" => Kind::Boundary,
                "X" => Kind::Fire,
                _ => {
                    let n = t.strip_prefix('D')?;
                    if n.is_empty() || n.starts_with('+') {
                        return None;
                    }
                    Kind::Divide(n.parse().ok()?)
                }
            })
        };
        if let Some(k) = plain(text) {
            return Some(k);
        }
        let inner = plain(text.strip_prefix('F')?)?;
        inner.freezable().map(Kind::Frozen)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Kind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Kind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Kind::from_label(&text).ok_or_else(|| serde::de::Error::custom(format!("unknown kind {text:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Datum {
    None,
    /// Leaf: the direction onto the part the virtual leaf ends.
    Direction(Direction),
    /// Count: directions from which the slowest reflected searches have returned.
    Directions(BTreeSet<Direction>),
    /// Midpoint: words to both ends, stored in ascending order.
    Pair(Word, Word),
    /// Find-midpoint: word back to the origin.
    Word(Word),
    /// Reflected and slowed-down find-midpoint.
    Marked {
        origin: Word,
        reflection: Word,
        marked: bool,
    },
    Thaw {
        word: Word,
        thawing: bool,
    },
    /// Divide signals: how many further levels of subdivision they may start. Initiate signals:
    /// the depth of the cascades they launch.
    Budget(u8),
    Frozen {
        heading: SemiDirection,
        inner: Box<Datum>,
    },
}

pub fn cons(d: Direction, w: &[Direction]) -> Word {
    let mut out = Vec::with_capacity(w.len() + 1);
    out.push(d);
    out.extend_from_slice(w);
    out
}

pub fn concat(a: &[Direction], b: &[Direction]) -> Word {
    let mut out = a.to_vec();
    out.extend_from_slice(b);
    out
}

/// Initiate signals carry the depth cap of the divide cascades they start.
pub fn initiate(d: Direction, depth: u8) -> Sig {
    Signal::moving(Kind::Initiate, d, Datum::Budget(depth))
}

pub fn leaf(d: Direction) -> Sig {
    Signal::still(Kind::Leaf, Datum::Direction(d))
}

pub fn count(ds: BTreeSet<Direction>) -> Sig {
    Signal::still(Kind::Count, Datum::Directions(ds))
}

/// Panics if the two words are equal.
pub fn midpoint(w: Word, w2: Word) -> Sig {
    assert_ne!(w, w2, "midpoint words must differ");
    let (a, b) = if w < w2 { (w, w2) } else { (w2, w) };
    Signal::still(Kind::Midpoint, Datum::Pair(a, b))
}

pub fn find(origin: Word, d: Direction) -> Sig {
    Signal::moving(Kind::Find, d, Datum::Word(origin))
}

pub fn reflected_find(origin: Word, d: Direction, reflection: Word, marked: bool) -> Sig {
    Signal::moving(
        Kind::ReflectedFind,
        d,
        Datum::Marked {
            origin,
            reflection,
            marked,
        },
    )
}

pub fn slowed(d: Direction, origin: Word, reflection: Word, marked: bool) -> Sig {
    Signal::moving(
        Kind::Slowed,
        d,
        Datum::Marked {
            origin,
            reflection,
            marked,
        },
    )
}

pub fn freeze(d: Direction) -> Sig {
    Signal::moving(Kind::Freeze, d, Datum::None)
}

pub fn thaw(d: Direction, word: Word, thawing: bool) -> Sig {
    Signal::moving(Kind::Thaw, d, Datum::Thaw { word, thawing })
}

pub fn divide(n: u8, d: Direction, budget: u8) -> Sig {
    Signal::moving(Kind::Divide(n), d, Datum::Budget(budget))
}

pub fn reflected_divide(d: Direction) -> Sig {
    Signal::moving(Kind::ReflectedDivide, d, Datum::None)
}

pub fn terminal(d: Direction) -> Sig {
    Signal::moving(Kind::Terminal, d, Datum::None)
}

pub fn boundary() -> Sig {
    Signal::still(Kind::Boundary, Datum::None)
}

pub fn fire() -> Sig {
    Signal::still(Kind::Fire, Datum::None)
}

/// A full cascade of divide signals of budget `b`: types `0..=b`, plus the terminal signal
/// once no deeper subdivision is allowed.
pub fn cascade(d: Direction, b: u8) -> Set {
    let mut out: Set = (0..=b).map(|n| divide(n, d, b)).collect();
    if b == 0 {
        out.insert(terminal(d));
    }
    out
}

pub fn direction_of(s: &Sig) -> Option<Direction> {
    s.dir.direction()
}

pub fn is_moving(s: &Sig) -> bool {
    s.dir != SemiDirection::Every
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeId;

    #[test]
    fn speeds() {
        assert_eq!(Kind::Divide(0).speed(), int(1));
        assert_eq!(Kind::Divide(1).speed(), frac(1, 2));
        assert_eq!(Kind::Divide(2).speed(), frac(2, 7));
        assert_eq!(Kind::Slowed.speed(), frac(1, 3));
        assert_eq!(Kind::Frozen(Freezable::Divide(3)).speed(), int(0));
    }

    #[test]
    fn labels_round_trip() {
        let kinds = [
            Kind::Initiate,
            Kind::ReflectedFind,
            Kind::Divide(12),
            Kind::ReflectedDivide,
            Kind::Terminal,
            Kind::Frozen(Freezable::Divide(2)),
            Kind::Frozen(Freezable::Fire),
            Kind::Frozen(Freezable::ReflectedDivide),
            Kind::Frozen(Freezable::Terminal),
            Kind::Freeze,
        ];
        for k in kinds {
            assert_eq!(Kind::from_label(&k.label()), Some(k));
        }
        assert_eq!(Kind::Frozen(Freezable::Divide(2)).label(), "FD2");
        assert_eq!(Kind::from_label("FM"), None);
        assert_eq!(Kind::from_label("D"), None);
    }

    #[test]
    fn cascade_shape() {
        let d = Direction::new(EdgeId(0), true);
        assert_eq!(cascade(d, 3).len(), 4);
        assert!(cascade(d, 0).contains(&terminal(d)));
    }
}
