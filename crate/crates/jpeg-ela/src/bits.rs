//! Entropy-layer bit I/O with the JPEG byte-stuffing rule: a 0xFF data
//! byte is followed by 0x00 on the wire, and 0xFF followed by anything
//! else is a marker.

use crate::error::{JpegElaError, Result};

pub struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        BitWriter {
            out: Vec::new(),
            acc: 0,
            nbits: 0,
        }
    }

    pub fn put(&mut self, code: u32, len: u32) {
        debug_assert!(len <= 24);
        if len == 0 {
            return;
        }
        let mask = (1u32 << len) - 1;
        self.acc = (self.acc << len) | (code & mask);
        self.nbits += len;
        while self.nbits >= 8 {
            self.nbits -= 8;
            let byte = ((self.acc >> self.nbits) & 0xff) as u8;
            self.out.push(byte);
            if byte == 0xff {
                self.out.push(0x00);
            }
        }
    }

    /// Pad any partial byte with 1-bits.
    pub fn align(&mut self) {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put((1 << pad) - 1, pad);
        }
    }

    /// Append marker bytes verbatim; only valid on a byte boundary.
    pub fn push_marker(&mut self, m: u8) {
        debug_assert_eq!(self.nbits, 0);
        self.out.push(0xff);
        self.out.push(m);
    }

    /// Pad the final partial byte with 1-bits and return the stream.
    pub fn finish(mut self) -> Vec<u8> {
        self.align();
        self.out
    }
}

pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u32,
    nbits: u32,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8], pos: usize) -> Self {
        BitReader {
            data,
            pos,
            acc: 0,
            nbits: 0,
        }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    fn fill(&mut self) -> Result<()> {
        if self.pos >= self.data.len() {
            return Err(JpegElaError::Parse {
                offset: self.pos,
                message: "entropy data ran out before scan completed".into(),
            });
        }
        let byte = self.data[self.pos];
        if byte == 0xff {
            match self.data.get(self.pos + 1) {
                Some(0x00) => {
                    self.pos += 2;
                }
                _ => {
                    return Err(JpegElaError::Parse {
                        offset: self.pos,
                        message: "unexpected marker inside entropy data".into(),
                    })
                }
            }
        } else {
            self.pos += 1;
        }
        self.acc = (self.acc << 8) | byte as u32;
        self.nbits += 8;
        Ok(())
    }

    pub fn bit(&mut self) -> Result<u32> {
        if self.nbits == 0 {
            self.fill()?;
        }
        self.nbits -= 1;
        Ok((self.acc >> self.nbits) & 1)
    }

    pub fn bits(&mut self, n: u32) -> Result<u32> {
        let mut v = 0;
        for _ in 0..n {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }

    /// Drop any buffered partial byte (used at restart markers).
    pub fn byte_align(&mut self) {
        self.nbits = 0;
        self.acc = 0;
    }

    /// After aligning, consume an expected two-byte marker.
    pub fn take_marker(&mut self) -> Result<u8> {
        if self.pos + 1 >= self.data.len() || self.data[self.pos] != 0xff {
            return Err(JpegElaError::Parse {
                offset: self.pos,
                message: "expected a marker".into(),
            });
        }
        let m = self.data[self.pos + 1];
        self.pos += 2;
        Ok(m)
    }
}
