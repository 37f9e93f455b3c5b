use std::fmt;

/// Index of a nonterminal inside its [`Grammar`](crate::grammar::Grammar).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NonterminalId(pub u32);

impl NonterminalId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A grammar symbol as it appears on the right-hand side of a production.
///
/// Terminals are single bytes; the end marker never appears in a production
/// and is modelled separately by [`Terminal::End`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Terminal(u8),
    Nonterminal(NonterminalId),
}

impl Symbol {
    pub fn is_terminal(self) -> bool {
        matches!(self, Symbol::Terminal(_))
    }
}

/// An input symbol for the automaton: one byte or the end marker `$`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminal {
    Byte(u8),
    End,
}

impl Terminal {
    /// Number of distinct terminals (256 bytes plus `$`).
    pub const COUNT: usize = 257;

    pub fn index(self) -> usize {
        match self {
            Terminal::Byte(b) => b as usize,
            Terminal::End => 256,
        }
    }

    pub fn from_index(i: usize) -> Terminal {
        match i {
            0..=255 => Terminal::Byte(i as u8),
            256 => Terminal::End,
            _ => panic!("terminal index {i} out of range"),
        }
    }

    pub fn all() -> impl Iterator<Item = Terminal> {
        (0..Self::COUNT).map(Terminal::from_index)
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Byte(b) => write!(f, "{}", escape_byte(*b)),
            Terminal::End => f.write_str("$"),
        }
    }
}

pub(crate) fn escape_byte(b: u8) -> String {
    match b {
        b'"' => "\\\"".to_string(),
        b'\\' => "\\\\".to_string(),
        0x20..=0x7e => (b as char).to_string(),
        _ => format!("\\x{b:02x}"),
    }
}

/// Set of terminals: a 256-bit byte mask plus a flag for `$`.
#[derive(Copy, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TerminalSet {
    bytes: [u64; 4],
    end: bool,
}

impl TerminalSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(t: Terminal) -> Self {
        let mut s = Self::new();
        s.insert(t);
        s
    }

    pub fn insert(&mut self, t: Terminal) -> bool {
        let had = self.contains(t);
        match t {
            Terminal::Byte(b) => self.bytes[(b >> 6) as usize] |= 1u64 << (b & 63),
            Terminal::End => self.end = true,
        }
        !had
    }

    pub fn remove(&mut self, t: Terminal) {
        match t {
            Terminal::Byte(b) => self.bytes[(b >> 6) as usize] &= !(1u64 << (b & 63)),
            Terminal::End => self.end = false,
        }
    }

    pub fn contains(&self, t: Terminal) -> bool {
        match t {
            Terminal::Byte(b) => self.bytes[(b >> 6) as usize] >> (b & 63) & 1 == 1,
            Terminal::End => self.end,
        }
    }

    pub fn contains_byte(&self, b: u8) -> bool {
        self.bytes[(b >> 6) as usize] >> (b & 63) & 1 == 1
    }

    pub fn contains_end(&self) -> bool {
        self.end
    }

    /// Adds every member of `other`; returns whether anything changed.
    pub fn union_with(&mut self, other: &TerminalSet) -> bool {
        let before = *self;
        for (a, b) in self.bytes.iter_mut().zip(other.bytes.iter()) {
            *a |= *b;
        }
        self.end |= other.end;
        before != *self
    }

    pub fn intersects(&self, other: &TerminalSet) -> bool {
        (self.end && other.end)
            || self
                .bytes
                .iter()
                .zip(other.bytes.iter())
                .any(|(a, b)| a & b != 0)
    }

    pub fn is_empty(&self) -> bool {
        !self.end && self.bytes.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.bytes
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>()
            + self.end as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = Terminal> + '_ {
        let bytes = (0..=255u8)
            .filter(move |b| self.contains_byte(*b))
            .map(Terminal::Byte);
        bytes.chain(self.end.then_some(Terminal::End))
    }

    /// The byte mask as four little-endian 64-bit words (bit `b` = byte `b`).
    pub fn byte_words(&self) -> [u64; 4] {
        self.bytes
    }

    pub fn from_parts(bytes: [u64; 4], end: bool) -> Self {
        TerminalSet { bytes, end }
    }
}

impl FromIterator<Terminal> for TerminalSet {
    fn from_iter<I: IntoIterator<Item = Terminal>>(iter: I) -> Self {
        let mut s = TerminalSet::new();
        for t in iter {
            s.insert(t);
        }
        s
    }
}

impl fmt::Debug for TerminalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, t) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_operations() {
        let mut s = TerminalSet::new();
        assert!(s.is_empty());
        assert!(s.insert(Terminal::Byte(0)));
        assert!(!s.insert(Terminal::Byte(0)));
        s.insert(Terminal::Byte(255));
        s.insert(Terminal::End);
        assert_eq!(s.len(), 3);
        assert_eq!(
            s.iter().collect::<Vec<_>>(),
            vec![Terminal::Byte(0), Terminal::Byte(255), Terminal::End]
        );
        s.remove(Terminal::Byte(0));
        assert!(!s.contains(Terminal::Byte(0)));
        let other = TerminalSet::singleton(Terminal::Byte(255));
        assert!(s.intersects(&other));
        let mut u = TerminalSet::singleton(Terminal::Byte(7));
        assert!(u.union_with(&other));
        assert!(!u.union_with(&other));
    }

    #[test]
    fn terminal_index_roundtrip() {
        for t in Terminal::all() {
            assert_eq!(Terminal::from_index(t.index()), t);
        }
    }
}
