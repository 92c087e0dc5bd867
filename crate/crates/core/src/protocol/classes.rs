use serde::{Deserialize, Serialize};

pub const NUM_CLASSES: usize = 10;

/// Equality pattern of three local outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalPattern {
    /// `[1³]`: all equal.
    AllEqual,
    /// `[21]`: exactly one equal pair; payload is the position set as a bitmask
    /// over positions `{0, 1, 2}`.
    Pair(u8),
    /// `[123]`: all distinct.
    Distinct,
}

impl LocalPattern {
    pub fn of(a: usize, b: usize, c: usize) -> Self {
        match (a == b, b == c, a == c) {
            (true, true, _) => LocalPattern::AllEqual,
            (true, false, _) => LocalPattern::Pair(0b011),
            (false, true, _) => LocalPattern::Pair(0b110),
            (false, false, true) => LocalPattern::Pair(0b101),
            (false, false, false) => LocalPattern::Distinct,
        }
    }
}

/// The ten reduced classes `C0 … C9`, indexed in this order everywhere.
///
/// | class | A pattern | B pattern |
/// |-------|-----------|-----------|
/// | C0 | `[1³]` | `[1³]` |
/// | C1 | `[1³]` | `[21]` |
/// | C2 | `[1³]` | `[123]` |
/// | C3 | `[21]` | `[1³]` |
/// | C4 | `[21]` | `[21]`, same pair |
/// | C5 | `[21]` | `[21]`, different pairs |
/// | C6 | `[21]` | `[123]` |
/// | C7 | `[123]` | `[1³]` |
/// | C8 | `[123]` | `[21]` |
/// | C9 | `[123]` | `[123]` |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternClass {
    C0,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
}

impl PatternClass {
    pub const ALL: [PatternClass; NUM_CLASSES] = [
        PatternClass::C0,
        PatternClass::C1,
        PatternClass::C2,
        PatternClass::C3,
        PatternClass::C4,
        PatternClass::C5,
        PatternClass::C6,
        PatternClass::C7,
        PatternClass::C8,
        PatternClass::C9,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// `true` if the class requires three distinct outcomes on A (resp. B).
    pub fn needs_distinct(self) -> (bool, bool) {
        use PatternClass::*;
        (matches!(self, C7 | C8 | C9), matches!(self, C2 | C6 | C9))
    }
}

/// Three outcome pairs `(i_A, i_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeTriple(pub [(usize, usize); 3]);

pub fn classify_pair_patterns(a: LocalPattern, b: LocalPattern) -> PatternClass {
    use LocalPattern::*;
    use PatternClass::*;
    match (a, b) {
        (AllEqual, AllEqual) => C0,
        (AllEqual, Pair(_)) => C1,
        (AllEqual, Distinct) => C2,
        (Pair(_), AllEqual) => C3,
        (Pair(pa), Pair(pb)) if pa == pb => C4,
        (Pair(_), Pair(_)) => C5,
        (Pair(_), Distinct) => C6,
        (Distinct, AllEqual) => C7,
        (Distinct, Pair(_)) => C8,
        (Distinct, Distinct) => C9,
    }
}

pub fn classify_triple(t: &OutcomeTriple) -> PatternClass {
    let [(a0, b0), (a1, b1), (a2, b2)] = t.0;
    classify_pair_patterns(LocalPattern::of(a0, a1, a2), LocalPattern::of(b0, b1, b2))
}
