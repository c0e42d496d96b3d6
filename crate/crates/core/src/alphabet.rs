//! Alphabets and index-encoded symbol sequences.
//!
//! Symbols are single printable ASCII characters. A sequence stores one byte
//! per symbol holding its alphabet index, so every model in the crate works
//! on the dense range `0..r` rather than on characters.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of distinct single-character symbols, `r >= 2`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Alphabet {
    symbols: Vec<u8>,
    #[serde(skip)]
    lookup: Box<[u8; 256]>,
}

const NO_INDEX: u8 = u8::MAX;

impl Alphabet {
    /// The four-letter alphabet used by the simulation experiments.
    pub fn abcd() -> Self {
        Self::new("ABCD").expect("static alphabet is valid")
    }

    pub fn dna() -> Self {
        Self::new("ACGT").expect("static alphabet is valid")
    }

    pub fn new(symbols: &str) -> Result<Self> {
        Self::from_bytes(symbols.as_bytes())
    }

    pub fn from_bytes(symbols: &[u8]) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::InvalidAlphabet(format!(
                "need at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        // Index 255 is reserved as the lookup sentinel.
        if symbols.len() > 254 {
            return Err(Error::InvalidAlphabet(format!(
                "at most 254 symbols are supported, got {}",
                symbols.len()
            )));
        }
        let mut lookup = Box::new([NO_INDEX; 256]);
        for (i, &b) in symbols.iter().enumerate() {
            if !b.is_ascii_graphic() {
                return Err(Error::InvalidAlphabet(format!(
                    "symbol {:?} is not a printable ASCII character",
                    b as char
                )));
            }
            if lookup[b as usize] != NO_INDEX {
                return Err(Error::InvalidAlphabet(format!(
                    "duplicate symbol {:?}",
                    b as char
                )));
            }
            lookup[b as usize] = i as u8;
        }
        Ok(Self {
            symbols: symbols.to_vec(),
            lookup,
        })
    }

    /// Resolves a CLI alphabet argument: `dna` is an alias for `ACGT`,
    /// anything else is taken literally.
    pub fn from_arg(arg: &str) -> Result<Self> {
        match arg {
            "dna" | "DNA" => Ok(Self::dna()),
            other => Self::new(other),
        }
    }

    /// Cardinality `r`.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn index(&self, symbol: char) -> Option<u8> {
        if !symbol.is_ascii() {
            return None;
        }
        match self.lookup[symbol as usize] {
            NO_INDEX => None,
            i => Some(i),
        }
    }

    pub fn symbol(&self, index: u8) -> char {
        self.symbols[index as usize] as char
    }

    pub fn as_str(&self) -> &str {
        // Constructed from ASCII only.
        std::str::from_utf8(&self.symbols).expect("alphabet is ASCII")
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({:?})", self.as_str())
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::abcd()
    }
}

impl TryFrom<String> for Alphabet {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(&value)
    }
}

impl From<Alphabet> for String {
    fn from(value: Alphabet) -> Self {
        value.as_str().to_owned()
    }
}

/// A categorical time series stored as alphabet indices.
#[derive(Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    alphabet: Alphabet,
    data: Vec<u8>,
}

impl SymbolSequence {
    /// Wraps raw indices, checking each one against the alphabet.
    pub fn new(alphabet: Alphabet, data: Vec<u8>) -> Result<Self> {
        let r = alphabet.len();
        if let Some(pos) = data.iter().position(|&x| x as usize >= r) {
            return Err(Error::InvalidParameter(format!(
                "index {} at position {pos} is out of range for an alphabet of {r} symbols",
                data[pos]
            )));
        }
        Ok(Self { alphabet, data })
    }

    pub(crate) fn from_trusted(alphabet: Alphabet, data: Vec<u8>) -> Self {
        debug_assert!(data.iter().all(|&x| (x as usize) < alphabet.len()));
        Self { alphabet, data }
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            data: Vec::new(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Sequence length `T`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn cardinality(&self) -> usize {
        self.alphabet.len()
    }
}

impl fmt::Debug for SymbolSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const PREVIEW: usize = 32;
        let head: String = self.data[..self.data.len().min(PREVIEW)]
            .iter()
            .map(|&i| self.alphabet.symbol(i))
            .collect();
        let ellipsis = if self.data.len() > PREVIEW { "..." } else { "" };
        write!(
            f,
            "SymbolSequence {{ alphabet: {}, T: {}, data: \"{head}{ellipsis}\" }}",
            self.alphabet,
            self.data.len()
        )
    }
}

/// How `parse_sequence` obtains its alphabet.
#[derive(Debug, Clone)]
pub enum AlphabetSpec {
    Fixed(Alphabet),
    /// Distinct characters in order of first appearance.
    Inferred,
}

impl From<Alphabet> for AlphabetSpec {
    fn from(value: Alphabet) -> Self {
        AlphabetSpec::Fixed(value)
    }
}

/// Parses text into a sequence. ASCII whitespace is skipped; every other
/// character must belong to the alphabet. Offsets in errors are character
/// offsets into `text`, whitespace included.
pub fn parse_sequence(text: &str, alphabet: impl Into<AlphabetSpec>) -> Result<SymbolSequence> {
    match alphabet.into() {
        AlphabetSpec::Fixed(alphabet) => {
            let mut data = Vec::with_capacity(text.len());
            for (offset, c) in text.chars().enumerate() {
                if c.is_ascii_whitespace() {
                    continue;
                }
                match alphabet.index(c) {
                    Some(i) => data.push(i),
                    None => {
                        return Err(Error::UnknownSymbol {
                            character: c,
                            offset,
                        })
                    }
                }
            }
            Ok(SymbolSequence { alphabet, data })
        }
        AlphabetSpec::Inferred => {
            let mut seen = Vec::new();
            for (offset, c) in text.chars().enumerate() {
                if c.is_ascii_whitespace() {
                    continue;
                }
                if !c.is_ascii_graphic() {
                    return Err(Error::UnknownSymbol {
                        character: c,
                        offset,
                    });
                }
                if !seen.contains(&(c as u8)) {
                    seen.push(c as u8);
                }
            }
            let alphabet = Alphabet::from_bytes(&seen)?;
            parse_sequence(text, alphabet)
        }
    }
}

pub fn render_sequence(seq: &SymbolSequence) -> String {
    seq.data
        .iter()
        .map(|&i| seq.alphabet.symbols[i as usize] as char)
        .collect()
}

pub fn read_sequence_file(path: &Path, alphabet: impl Into<AlphabetSpec>) -> Result<SymbolSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sequence(&text, alphabet)
}

/// Writes the rendered sequence followed by a single newline.
pub fn write_sequence_file(path: &Path, seq: &SymbolSequence) -> Result<()> {
    let mut text = render_sequence(seq);
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
