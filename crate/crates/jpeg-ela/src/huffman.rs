//! Canonical Huffman code construction from DHT-style (counts, values)
//! pairs, plus the standard sequential decode procedure.

use crate::bits::BitReader;
use crate::error::{JpegElaError, Result};

/// Encoder side: symbol → (code, length).
pub struct HuffEncoder {
    codes: [(u32, u32); 256],
}

impl HuffEncoder {
    pub fn build(bits: &[u8; 16], values: &[u8]) -> Self {
        let mut codes = [(0u32, 0u32); 256];
        let mut code = 0u32;
        let mut vi = 0usize;
        for (len_idx, &count) in bits.iter().enumerate() {
            let len = len_idx as u32 + 1;
            for _ in 0..count {
                codes[values[vi] as usize] = (code, len);
                code += 1;
                vi += 1;
            }
            code <<= 1;
        }
        HuffEncoder { codes }
    }

    #[inline]
    pub fn code(&self, symbol: u8) -> (u32, u32) {
        let c = self.codes[symbol as usize];
        debug_assert!(c.1 > 0, "symbol {symbol:#x} has no code");
        c
    }
}

/// Decoder side, driven by min/max code per length as in the standard's
/// sequential decoding flow.
pub struct HuffDecoder {
    mincode: [i32; 17],
    maxcode: [i32; 17],
    valptr: [usize; 17],
    values: Vec<u8>,
}

impl HuffDecoder {
    pub fn build(bits: &[u8; 16], values: Vec<u8>) -> Result<Self> {
        let total: usize = bits.iter().map(|&b| b as usize).sum();
        if total != values.len() || total > 256 {
            return Err(JpegElaError::Data(format!(
                "huffman table declares {total} codes but carries {} values",
                values.len()
            )));
        }
        let mut mincode = [0i32; 17];
        let mut maxcode = [-1i32; 17];
        let mut valptr = [0usize; 17];
        let mut code = 0i32;
        let mut vi = 0usize;
        for l in 1..=16usize {
            let count = bits[l - 1] as usize;
            if count > 0 {
                valptr[l] = vi;
                mincode[l] = code;
                code += count as i32;
                vi += count;
                maxcode[l] = code - 1;
            } else {
                maxcode[l] = -1;
            }
            code <<= 1;
        }
        Ok(HuffDecoder {
            mincode,
            maxcode,
            valptr,
            values,
        })
    }

    pub fn decode(&self, reader: &mut BitReader) -> Result<u8> {
        let mut code = 0i32;
        for l in 1..=16usize {
            code = (code << 1) | reader.bit()? as i32;
            if self.maxcode[l] >= code && code >= self.mincode[l] {
                let idx = self.valptr[l] + (code - self.mincode[l]) as usize;
                return Ok(self.values[idx]);
            }
        }
        Err(JpegElaError::Parse {
            offset: reader.offset(),
            message: "invalid huffman code".into(),
        })
    }
}
