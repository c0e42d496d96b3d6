//! Range coder driven by the adaptive FCM, and the `FCM1` container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "FCM1" | version u8 | k u8 | alpha f64 bits u64 | r u8 | r alphabet bytes | T u64 | payload
//! ```
//!
//! The payload is the range-coded symbol stream. A sequence of length zero
//! has an empty payload.

use std::path::Path;

use crate::alphabet::{Alphabet, SymbolSequence};
use crate::error::{Error, Result};
use crate::fcm::{AdaptiveModel, HyperParams, Prediction};

pub const MAGIC: [u8; 4] = *b"FCM1";
pub const VERSION: u8 = 1;

/// Fixed-point scale of the per-symbol weights.
pub const FREQ_SCALE: u32 = 1 << 16;

const TOP: u32 = 1 << 24;
// Keeps `r * weight` inside a u64 for any alphabet.
const MAX_WEIGHT: f64 = (1u64 << 55) as f64;

/// A parsed `FCM1` container.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedContainer {
    pub params: HyperParams,
    pub alphabet: Alphabet,
    pub len: u64,
    pub payload: Vec<u8>,
}

impl CompressedContainer {
    pub fn header_len(&self) -> usize {
        4 + 1 + 1 + 8 + 1 + self.alphabet.len() + 8
    }

    pub fn payload_bits(&self) -> u64 {
        self.payload.len() as u64 * 8
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header_len() + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.params.k as u8);
        out.extend_from_slice(&self.params.alpha.to_bits().to_le_bytes());
        out.push(self.alphabet.len() as u8);
        out.extend_from_slice(self.alphabet.symbols());
        out.extend_from_slice(&self.len.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { bytes, pos: 0 };
        if rd.take(4, "magic")? != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = rd.take(1, "version")?[0];
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let k = rd.take(1, "header")?[0] as usize;
        let alpha = f64::from_bits(u64::from_le_bytes(rd.take(8, "header")?.try_into().unwrap()));
        let params = HyperParams::new(k, alpha).map_err(|e| Error::Corrupt(e.to_string()))?;
        if alpha <= 0.0 {
            return Err(Error::Corrupt(format!("alpha must be positive, got {alpha}")));
        }
        let r = rd.take(1, "header")?[0] as usize;
        let alphabet = Alphabet::from_bytes(rd.take(r, "alphabet")?).map_err(|e| Error::Corrupt(e.to_string()))?;
        let len = u64::from_le_bytes(rd.take(8, "header")?.try_into().unwrap());
        Ok(Self {
            params,
            alphabet,
            len,
            payload: bytes[rd.pos..].to_vec(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Truncated(what));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

/// Integer frequencies for the next symbol, identical on both ends.
///
/// Each symbol gets the weight `max(1, round((n_s + alpha) * 2^16))`; the
/// weights are then rescaled so their sum is at most `2^16`, keeping at
/// least 1 per symbol. Before `k` symbols are known every symbol gets 1.
fn frequency_table(model: &AdaptiveModel, freqs: &mut Vec<u32>) -> u32 {
    let r = model.cardinality();
    freqs.clear();
    let row = match model.predict() {
        Prediction::Bootstrap => {
            freqs.resize(r, 1);
            return r as u32;
        }
        Prediction::Context { counts, .. } => counts,
    };
    let alpha = model.alpha();
    let weight = |n: u32| ((n as f64 + alpha) * FREQ_SCALE as f64).round().clamp(1.0, MAX_WEIGHT) as u64;
    let mut weights = [0u64; 256];
    let mut sum = 0u64;
    for (s, w) in weights[..r].iter_mut().enumerate() {
        *w = weight(row.map_or(0, |c| c[s]));
        sum += *w;
    }
    let budget = (FREQ_SCALE as usize - r) as u128;
    let mut total = 0;
    for &w in &weights[..r] {
        let f = ((w as u128 * budget) / sum as u128).max(1) as u32;
        freqs.push(f);
        total += f;
    }
    total
}

struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Encoder {
    fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    // Splits the current range exactly at floor(range * cum / total), so
    // no part of the interval is wasted.
    fn encode(&mut self, cum: u32, freq: u32, total: u32) {
        let range = self.range as u64;
        let lo = range * cum as u64 / total as u64;
        let hi = range * (cum + freq) as u64 / total as u64;
        self.low += lo;
        self.range = (hi - lo) as u32;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

struct Decoder<'a> {
    code: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn new(input: &'a [u8]) -> Result<Self> {
        if input.len() < 5 {
            return Err(Error::Truncated("payload"));
        }
        if input[0] != 0 {
            return Err(Error::Corrupt("payload does not start with a zero byte".into()));
        }
        let code = u32::from_be_bytes(input[1..5].try_into().unwrap());
        Ok(Self {
            code,
            range: u32::MAX,
            input,
            pos: 5,
        })
    }

    fn decode(&mut self, freqs: &[u32], total: u32) -> Result<u8> {
        let range = self.range as u64;
        let code = self.code as u64;
        let bound = |cum: u32| range * cum as u64 / total as u64;
        let mut cum = 0u32;
        let mut chosen = None;
        for (s, &f) in freqs.iter().enumerate() {
            if code < bound(cum + f) {
                chosen = Some((s, cum, f));
                break;
            }
            cum += f;
        }
        let (s, cum, f) = chosen.ok_or_else(|| Error::Corrupt("code value outside the coding interval".into()))?;
        let lo = bound(cum);
        self.code = (code - lo) as u32;
        self.range = (bound(cum + f) - lo) as u32;
        while self.range < TOP {
            let byte = *self.input.get(self.pos).ok_or(Error::Truncated("payload"))?;
            self.pos += 1;
            self.code = (self.code << 8) | byte as u32;
            self.range <<= 8;
        }
        Ok(s as u8)
    }
}

/// Range-codes `seq` with the adaptive model of `params`.
///
/// `alpha` must be positive: the integer coder cannot represent the
/// zero-probability events of the unsmoothed model.
pub fn compress(seq: &SymbolSequence, params: &HyperParams) -> Result<CompressedContainer> {
    compress_traced(seq, params, |_| {})
}

fn check_params(params: &HyperParams, alphabet: &Alphabet) -> Result<()> {
    HyperParams::new(params.k, params.alpha)?;
    if params.alpha <= 0.0 {
        return Err(Error::InvalidParameter(
            "the coder needs alpha > 0; pass a small epsilon such as 1e-6 instead of 0".into(),
        ));
    }
    if params.k > u8::MAX as usize {
        return Err(Error::InvalidParameter(format!("k must be at most 255, got {}", params.k)));
    }
    // Rejects orders whose context space does not fit.
    AdaptiveModel::new(params.k, params.alpha, alphabet.clone())?;
    Ok(())
}

fn compress_traced(
    seq: &SymbolSequence,
    params: &HyperParams,
    mut trace: impl FnMut(&[u32]),
) -> Result<CompressedContainer> {
    check_params(params, seq.alphabet())?;
    let mut payload = Vec::new();
    if !seq.is_empty() {
        let mut model = AdaptiveModel::new(params.k, params.alpha, seq.alphabet().clone())?;
        let mut enc = Encoder::new();
        let mut freqs = Vec::with_capacity(seq.cardinality());
        for &s in seq.data() {
            let total = frequency_table(&model, &mut freqs);
            trace(&freqs);
            let cum: u32 = freqs[..s as usize].iter().sum();
            enc.encode(cum, freqs[s as usize], total);
            model.observe(s);
        }
        payload = enc.finish();
    }
    Ok(CompressedContainer {
        params: *params,
        alphabet: seq.alphabet().clone(),
        len: seq.len() as u64,
        payload,
    })
}

/// Exact inverse of [`compress`]. Truncated or over-long payloads are
/// rejected.
pub fn decompress(container: &CompressedContainer) -> Result<SymbolSequence> {
    decompress_traced(container, |_| {})
}

fn decompress_traced(container: &CompressedContainer, mut trace: impl FnMut(&[u32])) -> Result<SymbolSequence> {
    check_params(&container.params, &container.alphabet).map_err(|e| Error::Corrupt(e.to_string()))?;
    let alphabet = container.alphabet.clone();
    if container.len == 0 {
        if !container.payload.is_empty() {
            return Err(Error::Corrupt("empty sequence with a non-empty payload".into()));
        }
        return Ok(SymbolSequence::empty(alphabet));
    }
    let len = usize::try_from(container.len).map_err(|_| Error::Corrupt("length does not fit in memory".into()))?;
    // Each symbol shrinks the range by at least a factor 1 - 2^-16 + 2^-24,
    // so one payload byte covers fewer than 368,000 symbols.
    if len as u128 > container.payload.len() as u128 * 368_000 {
        return Err(Error::Truncated("payload"));
    }
    let mut model = AdaptiveModel::new(container.params.k, container.params.alpha, alphabet.clone())?;
    let mut dec = Decoder::new(&container.payload)?;
    let mut freqs = Vec::with_capacity(alphabet.len());
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let total = frequency_table(&model, &mut freqs);
        trace(&freqs);
        let s = dec.decode(&freqs, total)?;
        model.observe(s);
        data.push(s);
    }
    if dec.pos != container.payload.len() {
        return Err(Error::Corrupt(format!(
            "{} trailing payload bytes",
            container.payload.len() - dec.pos
        )));
    }
    SymbolSequence::new(alphabet, data)
}
