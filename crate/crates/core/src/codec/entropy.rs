//! Adaptive binary range coder.
//!
//! Probabilities are 12-bit estimates of a zero bin, adapted with a shift of
//! five after every coded bin. The carry-propagating encoder/decoder pair is
//! the classic LZMA design. [`RateMeter`] mirrors the encoder's context
//! evolution without producing bytes and accumulates the ideal code length
//! `Σ −log₂ p(bin)` in 1/65536-bit units; that is the rate fed to the cost
//! functions.

use std::sync::OnceLock;

use crate::{Error, Result};

const PROB_BITS: u32 = 12;
const PROB_ONE: u32 = 1 << PROB_BITS;
const ADAPT_SHIFT: u32 = 5;
const TOP: u32 = 1 << 24;

/// Fixed-point scale of [`RateMeter`] costs.
pub const RATE_ONE: u64 = 1 << 16;

/// Adaptive probability that the next bin is zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Context(u16);

impl Default for Context {
    fn default() -> Self {
        Context((PROB_ONE / 2) as u16)
    }
}

impl Context {
    #[inline]
    fn p0(self) -> u32 {
        u32::from(self.0)
    }

    #[inline]
    fn update(&mut self, bit: bool) {
        if bit {
            self.0 -= self.0 >> ADAPT_SHIFT;
        } else {
            self.0 += ((PROB_ONE - u32::from(self.0)) >> ADAPT_SHIFT) as u16;
        }
    }
}

/// Sink for binary decisions.
pub trait BinWriter {
    fn encode(&mut self, ctx: &mut Context, bit: bool);
    fn encode_bypass(&mut self, bit: bool);

    /// Writes the low `n` bits of `value`, most significant first.
    fn encode_bypass_bits(&mut self, value: u32, n: u32) {
        for i in (0..n).rev() {
            self.encode_bypass((value >> i) & 1 == 1);
        }
    }
}

#[derive(Clone, Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low as u32) >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = u64::from((self.low as u32) << 8);
    }

    #[inline]
    fn normalize(&mut self) {
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

impl BinWriter for RangeEncoder {
    #[inline]
    fn encode(&mut self, ctx: &mut Context, bit: bool) {
        let bound = (self.range >> PROB_BITS) * ctx.p0();
        if bit {
            self.low += u64::from(bound);
            self.range -= bound;
        } else {
            self.range = bound;
        }
        ctx.update(bit);
        self.normalize();
    }

    #[inline]
    fn encode_bypass(&mut self, bit: bool) {
        self.range >>= 1;
        if bit {
            self.low += u64::from(self.range);
        }
        self.normalize();
    }
}

fn cost_table() -> &'static [u32; PROB_ONE as usize] {
    static TABLE: OnceLock<Box<[u32; PROB_ONE as usize]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([0u32; PROB_ONE as usize]);
        for (p, slot) in t.iter_mut().enumerate().skip(1) {
            let bits = -(p as f64 / f64::from(PROB_ONE)).log2();
            *slot = (bits * RATE_ONE as f64).round() as u32;
        }
        t[0] = t[1];
        t
    })
}

/// Ideal-code-length accumulator sharing the encoder's context evolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RateMeter {
    cost: u64,
}

impl RateMeter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accumulated cost in 1/65536 bit.
    pub fn raw(&self) -> u64 {
        self.cost
    }

    pub fn bits(&self) -> f64 {
        self.cost as f64 / RATE_ONE as f64
    }

    /// Cost of coding `bit` with `ctx` without touching either.
    #[inline]
    pub fn peek(ctx: &Context, bit: bool) -> u64 {
        let p = if bit { PROB_ONE - ctx.p0() } else { ctx.p0() };
        u64::from(cost_table()[p as usize])
    }
}

impl BinWriter for RateMeter {
    #[inline]
    fn encode(&mut self, ctx: &mut Context, bit: bool) {
        self.cost += Self::peek(ctx, bit);
        ctx.update(bit);
    }

    #[inline]
    fn encode_bypass(&mut self, _bit: bool) {
        self.cost += RATE_ONE;
    }

    fn encode_bypass_bits(&mut self, _value: u32, n: u32) {
        self.cost += RATE_ONE * u64::from(n);
    }
}

#[derive(Clone, Debug)]
pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    /// Offset of `data` within the enclosing file, for error reporting.
    base: usize,
    range: u32,
    code: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8], base: usize) -> Result<Self> {
        let mut d = RangeDecoder {
            data,
            pos: 0,
            base,
            range: u32::MAX,
            code: 0,
        };
        for _ in 0..5 {
            d.code = (d.code << 8) | u32::from(d.next_byte()?);
        }
        Ok(d)
    }

    #[inline]
    fn next_byte(&mut self) -> Result<u8> {
        let b = *self.data.get(self.pos).ok_or(Error::Truncated {
            offset: self.base + self.pos,
        })?;
        self.pos += 1;
        Ok(b)
    }

    #[inline]
    fn normalize(&mut self) -> Result<()> {
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | u32::from(self.next_byte()?);
        }
        Ok(())
    }

    #[inline]
    pub fn decode(&mut self, ctx: &mut Context) -> Result<bool> {
        let bound = (self.range >> PROB_BITS) * ctx.p0();
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        ctx.update(bit);
        self.normalize()?;
        Ok(bit)
    }

    #[inline]
    pub fn decode_bypass(&mut self) -> Result<bool> {
        self.range >>= 1;
        let bit = if self.code >= self.range {
            self.code -= self.range;
            true
        } else {
            false
        };
        self.normalize()?;
        Ok(bit)
    }

    pub fn decode_bypass_bits(&mut self, n: u32) -> Result<u32> {
        let mut v = 0;
        for _ in 0..n {
            v = (v << 1) | u32::from(self.decode_bypass()?);
        }
        Ok(v)
    }

    /// Bytes consumed so far.
    pub fn position(&self) -> usize {
        self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Clone, Debug)]
    enum Sym {
        Ctx(usize, bool),
        Bypass(bool),
    }

    fn encode(syms: &[Sym], n_ctx: usize) -> (Vec<u8>, u64) {
        let mut enc = RangeEncoder::new();
        let mut meter = RateMeter::new();
        let mut ctx = vec![Context::default(); n_ctx];
        let mut ctx2 = ctx.clone();
        for s in syms {
            match *s {
                Sym::Ctx(i, b) => {
                    enc.encode(&mut ctx[i], b);
                    meter.encode(&mut ctx2[i], b);
                }
                Sym::Bypass(b) => {
                    enc.encode_bypass(b);
                    meter.encode_bypass(b);
                }
            }
        }
        (enc.finish(), meter.raw())
    }

    fn decode(bytes: &[u8], syms: &[Sym], n_ctx: usize) -> Result<Vec<Sym>> {
        let mut dec = RangeDecoder::new(bytes, 0)?;
        let mut ctx = vec![Context::default(); n_ctx];
        syms.iter()
            .map(|s| match *s {
                Sym::Ctx(i, _) => dec.decode(&mut ctx[i]).map(|b| Sym::Ctx(i, b)),
                Sym::Bypass(_) => dec.decode_bypass().map(Sym::Bypass),
            })
            .collect()
    }

    fn same(a: &[Sym], b: &[Sym]) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| match (x, y) {
                (Sym::Ctx(i, p), Sym::Ctx(j, q)) => i == j && p == q,
                (Sym::Bypass(p), Sym::Bypass(q)) => p == q,
                _ => false,
            })
    }

    #[test]
    fn empty_stream() {
        let (bytes, cost) = encode(&[], 1);
        assert_eq!(bytes.len(), 5);
        assert_eq!(cost, 0);
        assert!(decode(&bytes, &[], 1).unwrap().is_empty());
    }

    #[test]
    fn deterministic_output() {
        let syms: Vec<Sym> = (0..500).map(|i| Sym::Ctx(i % 3, i % 7 == 0)).collect();
        assert_eq!(encode(&syms, 3), encode(&syms, 3));
    }

    #[test]
    fn truncated_stream_reports_offset() {
        let syms: Vec<Sym> = (0..4000).map(|i| Sym::Bypass(i % 3 == 0)).collect();
        let (bytes, _) = encode(&syms, 1);
        let cut = &bytes[..bytes.len() / 2];
        match decode(cut, &syms, 1) {
            Err(Error::Truncated { offset }) => assert_eq!(offset, cut.len()),
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn skewed_source_compresses() {
        let syms: Vec<Sym> = (0..20_000).map(|i| Sym::Ctx(0, i % 50 == 0)).collect();
        let (bytes, cost) = encode(&syms, 1);
        let ideal_bits = cost as f64 / RATE_ONE as f64;
        assert!(bytes.len() * 8 < 20_000 / 4);
        // Range coding overhead is a few bytes on top of the ideal length.
        assert!(((bytes.len() * 8) as f64 - ideal_bits).abs() < 64.0, "{} vs {ideal_bits}", bytes.len() * 8);
    }

    proptest! {
        #[test]
        fn round_trip(raw in proptest::collection::vec((0usize..5, any::<bool>(), any::<bool>()), 0..3000)) {
            let syms: Vec<Sym> = raw
                .into_iter()
                .map(|(c, bypass, b)| if bypass { Sym::Bypass(b) } else { Sym::Ctx(c, b) })
                .collect();
            let (bytes, cost) = encode(&syms, 5);
            let back = decode(&bytes, &syms, 5).unwrap();
            prop_assert!(same(&syms, &back));
            let ideal = cost as f64 / RATE_ONE as f64;
            prop_assert!(((bytes.len() * 8) as f64) < ideal + 64.0);
        }
    }
}
