//! Baseline sequential JPEG, 4:4:4, fixed standard tables. The encoder is
//! byte-deterministic: same pixels and quality always produce the same
//! stream. The decoder handles streams from this encoder plus any other
//! baseline 4:4:4 file (restart markers included).

use crate::bits::{BitReader, BitWriter};
use crate::dct;
use crate::error::{JpegElaError, Result};
use crate::huffman::{HuffDecoder, HuffEncoder};
use crate::image::ImageBuffer;
use crate::tables::{
    scale_quant_table, AC_CHROMA, AC_LUMA, CHROMA_QUANT_BASE, DC_CHROMA, DC_LUMA, LUMA_QUANT_BASE,
    ZIGZAG,
};

// ── color space ─────────────────────────────────────────────────────

#[inline]
fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
    let cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
    (y, cb, cr)
}

#[inline]
fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

#[inline]
fn ycbcr_to_rgb(y: f64, cb: f64, cr: f64) -> [u8; 3] {
    let cb = cb - 128.0;
    let cr = cr - 128.0;
    [
        clamp_u8(y + 1.402 * cr),
        clamp_u8(y - 0.344136 * cb - 0.714136 * cr),
        clamp_u8(y + 1.772 * cb),
    ]
}

// ── encoder ─────────────────────────────────────────────────────────

/// Pad to the block grid by edge replication, one plane per component.
fn build_planes(img: &ImageBuffer) -> (usize, usize, [Vec<f64>; 3]) {
    let (w, h) = (img.width(), img.height());
    let pw = w.div_ceil(8) * 8;
    let ph = h.div_ceil(8) * 8;
    let mut planes = [vec![0.0; pw * ph], vec![0.0; pw * ph], vec![0.0; pw * ph]];
    for py in 0..ph {
        let sy = py.min(h - 1);
        for px in 0..pw {
            let sx = px.min(w - 1);
            let [r, g, b] = img.get(sx, sy);
            let (y, cb, cr) = rgb_to_ycbcr(r as f64, g as f64, b as f64);
            planes[0][py * pw + px] = y;
            planes[1][py * pw + px] = cb;
            planes[2][py * pw + px] = cr;
        }
    }
    (pw, ph, planes)
}

#[inline]
fn category(v: i32) -> u32 {
    32 - v.unsigned_abs().leading_zeros()
}

#[inline]
fn amplitude_bits(v: i32, s: u32) -> u32 {
    if v >= 0 {
        v as u32
    } else {
        (v - 1) as u32 & ((1 << s) - 1)
    }
}

struct SegmentWriter {
    out: Vec<u8>,
}

impl SegmentWriter {
    fn marker(&mut self, m: u8) {
        self.out.push(0xff);
        self.out.push(m);
    }

    fn segment(&mut self, m: u8, payload: &[u8]) {
        self.marker(m);
        let len = payload.len() as u16 + 2;
        self.out.extend_from_slice(&len.to_be_bytes());
        self.out.extend_from_slice(payload);
    }
}

fn encode_block(
    writer: &mut BitWriter,
    coeffs: &[i32; 64],
    pred: &mut i32,
    dc: &HuffEncoder,
    ac: &HuffEncoder,
) {
    let diff = coeffs[0] - *pred;
    *pred = coeffs[0];
    let s = if diff == 0 { 0 } else { category(diff) };
    let (code, len) = dc.code(s as u8);
    writer.put(code, len);
    if s > 0 {
        writer.put(amplitude_bits(diff, s), s);
    }

    let mut run = 0u32;
    for k in 1..64 {
        let v = coeffs[ZIGZAG[k]];
        if v == 0 {
            run += 1;
            continue;
        }
        while run >= 16 {
            let (code, len) = ac.code(0xf0);
            writer.put(code, len);
            run -= 16;
        }
        let s = category(v);
        let (code, len) = ac.code(((run << 4) | s) as u8);
        writer.put(code, len);
        writer.put(amplitude_bits(v, s), s);
        run = 0;
    }
    if run > 0 {
        let (code, len) = ac.code(0x00);
        writer.put(code, len);
    }
}

pub fn jpeg_encode(img: &ImageBuffer, quality: u8) -> Result<Vec<u8>> {
    encode_impl(img, quality, 0)
}

/// Encode with a restart marker after every `interval` MCUs.
pub fn jpeg_encode_restart(img: &ImageBuffer, quality: u8, interval: u16) -> Result<Vec<u8>> {
    if interval == 0 {
        return Err(JpegElaError::Config(
            "restart interval must be at least 1 MCU".into(),
        ));
    }
    encode_impl(img, quality, interval as usize)
}

fn encode_impl(img: &ImageBuffer, quality: u8, restart_interval: usize) -> Result<Vec<u8>> {
    let luma_q = scale_quant_table(&LUMA_QUANT_BASE, quality)?;
    let chroma_q = scale_quant_table(&CHROMA_QUANT_BASE, quality)?;

    let mut sw = SegmentWriter { out: Vec::new() };
    sw.marker(0xd8); // SOI

    // APP0: JFIF 1.1, no density units, no thumbnail.
    sw.segment(
        0xe0,
        &[b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0],
    );

    // DQT: both tables in one segment, entries in zigzag order.
    let mut dqt = Vec::with_capacity(130);
    for (id, table) in [(0u8, &luma_q), (1u8, &chroma_q)] {
        dqt.push(id);
        for &zz in &ZIGZAG {
            dqt.push(table[zz] as u8);
        }
    }
    sw.segment(0xdb, &dqt);

    // SOF0: 8-bit precision, three 1×1-sampled components.
    let (w, h) = (img.width() as u16, img.height() as u16);
    let mut sof = vec![8];
    sof.extend_from_slice(&h.to_be_bytes());
    sof.extend_from_slice(&w.to_be_bytes());
    sof.push(3);
    for (id, tq) in [(1u8, 0u8), (2, 1), (3, 1)] {
        sof.extend_from_slice(&[id, 0x11, tq]);
    }
    sw.segment(0xc0, &sof);

    // DHT: four tables.
    for (class_id, spec) in [
        (0x00u8, &DC_LUMA),
        (0x10, &AC_LUMA),
        (0x01, &DC_CHROMA),
        (0x11, &AC_CHROMA),
    ] {
        let mut dht = vec![class_id];
        dht.extend_from_slice(&spec.bits);
        dht.extend_from_slice(spec.values);
        sw.segment(0xc4, &dht);
    }

    if restart_interval > 0 {
        sw.segment(0xdd, &(restart_interval as u16).to_be_bytes());
    }

    // SOS header.
    sw.segment(0xda, &[3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0]);

    // Entropy-coded data.
    let (pw, ph, planes) = build_planes(img);
    let dc_luma = HuffEncoder::build(&DC_LUMA.bits, DC_LUMA.values);
    let ac_luma = HuffEncoder::build(&AC_LUMA.bits, AC_LUMA.values);
    let dc_chroma = HuffEncoder::build(&DC_CHROMA.bits, DC_CHROMA.values);
    let ac_chroma = HuffEncoder::build(&AC_CHROMA.bits, AC_CHROMA.values);
    let qtables = [&luma_q, &chroma_q, &chroma_q];

    let mut writer = BitWriter::new();
    let mut preds = [0i32; 3];
    let mut block = [0f64; 64];
    let mut coeffs = [0i32; 64];
    let mut mcus_done = 0usize;
    let mut rst = 0u8;
    for by in 0..ph / 8 {
        for bx in 0..pw / 8 {
            if restart_interval > 0 && mcus_done > 0 && mcus_done.is_multiple_of(restart_interval) {
                writer.align();
                writer.push_marker(0xd0 + rst);
                rst = (rst + 1) % 8;
                preds = [0; 3];
            }
            mcus_done += 1;
            for comp in 0..3 {
                let plane = &planes[comp];
                for y in 0..8 {
                    for x in 0..8 {
                        block[y * 8 + x] = plane[(by * 8 + y) * pw + bx * 8 + x] - 128.0;
                    }
                }
                dct::forward(&mut block);
                let q = qtables[comp];
                for i in 0..64 {
                    coeffs[i] = (block[i] / q[i] as f64).round() as i32;
                }
                let (dc, ac) = if comp == 0 {
                    (&dc_luma, &ac_luma)
                } else {
                    (&dc_chroma, &ac_chroma)
                };
                encode_block(&mut writer, &coeffs, &mut preds[comp], dc, ac);
            }
        }
    }
    sw.out.extend_from_slice(&writer.finish());
    sw.marker(0xd9); // EOI
    Ok(sw.out)
}

// ── decoder ─────────────────────────────────────────────────────────

struct FrameComponent {
    id: u8,
    tq: usize,
}

struct Frame {
    width: usize,
    height: usize,
    components: Vec<FrameComponent>,
}

struct Parser<'a> {
    data: &'a [u8],
    pos: usize,
    qtables: [Option<[u16; 64]>; 4],
    dc_tables: [Option<HuffDecoder>; 4],
    ac_tables: [Option<HuffDecoder>; 4],
    frame: Option<Frame>,
    restart_interval: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(JpegElaError::Parse {
            offset,
            message: message.into(),
        })
    }

    fn u8(&mut self) -> Result<u8> {
        match self.data.get(self.pos) {
            Some(&b) => {
                self.pos += 1;
                Ok(b)
            }
            None => self.err(self.pos, "unexpected end of stream"),
        }
    }

    fn u16(&mut self) -> Result<u16> {
        let hi = self.u8()? as u16;
        let lo = self.u8()? as u16;
        Ok((hi << 8) | lo)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return self.err(self.pos, "segment extends past end of stream");
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn segment_body(&mut self) -> Result<&'a [u8]> {
        let at = self.pos;
        let len = self.u16()? as usize;
        if len < 2 {
            return self.err(at, "segment length below 2");
        }
        self.take(len - 2)
    }

    fn parse_dqt(&mut self) -> Result<()> {
        let at = self.pos;
        let body = self.segment_body()?;
        let mut i = 0;
        while i < body.len() {
            let pq_tq = body[i];
            i += 1;
            let pq = pq_tq >> 4;
            let tq = (pq_tq & 0x0f) as usize;
            if pq != 0 {
                return self.err(at, "only 8-bit quantization tables are baseline");
            }
            if tq > 3 {
                return self.err(at, format!("quantization table id {tq} out of range"));
            }
            if i + 64 > body.len() {
                return self.err(at, "quantization table truncated");
            }
            let mut table = [0u16; 64];
            for (k, &raster) in ZIGZAG.iter().enumerate() {
                table[raster] = body[i + k] as u16;
            }
            if table.contains(&0) {
                return self.err(at, "quantization table contains zero");
            }
            self.qtables[tq] = Some(table);
            i += 64;
        }
        Ok(())
    }

    fn parse_dht(&mut self) -> Result<()> {
        let at = self.pos;
        let body = self.segment_body()?;
        let mut i = 0;
        while i < body.len() {
            if i + 17 > body.len() {
                return self.err(at, "huffman table header truncated");
            }
            let tc_th = body[i];
            let tc = tc_th >> 4;
            let th = (tc_th & 0x0f) as usize;
            if tc > 1 || th > 3 {
                return self.err(at, format!("huffman table class/id {tc}/{th} out of range"));
            }
            let mut bits = [0u8; 16];
            bits.copy_from_slice(&body[i + 1..i + 17]);
            let total: usize = bits.iter().map(|&b| b as usize).sum();
            i += 17;
            if i + total > body.len() {
                return self.err(at, "huffman table values truncated");
            }
            let values = body[i..i + total].to_vec();
            i += total;
            let table = HuffDecoder::build(&bits, values).map_err(|e| JpegElaError::Parse {
                offset: at,
                message: e.to_string(),
            })?;
            if tc == 0 {
                self.dc_tables[th] = Some(table);
            } else {
                self.ac_tables[th] = Some(table);
            }
        }
        Ok(())
    }

    fn parse_sof0(&mut self) -> Result<()> {
        let at = self.pos;
        let body = self.segment_body()?;
        if body.len() < 6 {
            return self.err(at, "frame header truncated");
        }
        if body[0] != 8 {
            return self.err(at, format!("sample precision {} unsupported", body[0]));
        }
        let height = u16::from_be_bytes([body[1], body[2]]) as usize;
        let width = u16::from_be_bytes([body[3], body[4]]) as usize;
        let n = body[5] as usize;
        if n != 3 {
            return self.err(at, format!("{n} components unsupported, need 3 (4:4:4)"));
        }
        if body.len() != 6 + 3 * n {
            return self.err(at, "frame header length mismatch");
        }
        if width == 0 || height == 0 {
            return self.err(at, "zero image dimension");
        }
        let mut components = Vec::with_capacity(n);
        for c in 0..n {
            let id = body[6 + c * 3];
            let hv = body[7 + c * 3];
            let tq = body[8 + c * 3] as usize;
            if hv != 0x11 {
                return self.err(at, "chroma subsampling unsupported, need 4:4:4");
            }
            if tq > 3 {
                return self.err(at, format!("quantization table id {tq} out of range"));
            }
            components.push(FrameComponent { id, tq });
        }
        self.frame = Some(Frame {
            width,
            height,
            components,
        });
        Ok(())
    }

    fn parse_dri(&mut self) -> Result<()> {
        let at = self.pos;
        let body = self.segment_body()?;
        if body.len() != 2 {
            return self.err(at, "restart interval segment malformed");
        }
        self.restart_interval = u16::from_be_bytes([body[0], body[1]]) as usize;
        Ok(())
    }

    /// SOS: scan header, then the entropy-coded data for all MCUs.
    fn parse_scan(&mut self) -> Result<ImageBuffer> {
        let at = self.pos;
        let body = self.segment_body()?.to_vec();
        let frame = match &self.frame {
            Some(f) => f,
            None => return self.err(at, "scan before frame header"),
        };
        if body.len() < 6 || body[0] as usize != frame.components.len() {
            return self.err(at, "scan header malformed");
        }
        let n = body[0] as usize;
        if body.len() != 1 + 2 * n + 3 {
            return self.err(at, "scan header length mismatch");
        }
        let mut scan_tables = Vec::with_capacity(n);
        for c in 0..n {
            let cid = body[1 + c * 2];
            let td_ta = body[2 + c * 2];
            let comp_index =
                frame
                    .components
                    .iter()
                    .position(|fc| fc.id == cid)
                    .ok_or(JpegElaError::Parse {
                        offset: at,
                        message: format!("scan references unknown component {cid}"),
                    })?;
            scan_tables.push((comp_index, (td_ta >> 4) as usize, (td_ta & 0x0f) as usize));
        }
        let (ss, se, ah_al) = (body[1 + 2 * n], body[2 + 2 * n], body[3 + 2 * n]);
        if ss != 0 || se != 63 || ah_al != 0 {
            return self.err(at, "progressive or partial scan unsupported");
        }

        let (w, h) = (frame.width, frame.height);
        let pw = w.div_ceil(8) * 8;
        let ph = h.div_ceil(8) * 8;
        let mut planes = vec![vec![0u8; pw * ph]; n];
        let qtables: Vec<[u16; 64]> = frame
            .components
            .iter()
            .map(|fc| {
                self.qtables[fc.tq].ok_or(JpegElaError::Parse {
                    offset: at,
                    message: format!("missing quantization table {}", fc.tq),
                })
            })
            .collect::<Result<_>>()?;

        let mut reader = BitReader::new(self.data, self.pos);
        let mut preds = vec![0i32; n];
        let mut block = [0f64; 64];
        let mcus_x = pw / 8;
        let mcus_y = ph / 8;
        let mut mcu_index = 0usize;
        let mut next_rst = 0u8;

        for my in 0..mcus_y {
            for mx in 0..mcus_x {
                if self.restart_interval > 0
                    && mcu_index > 0
                    && mcu_index.is_multiple_of(self.restart_interval)
                {
                    reader.byte_align();
                    let m = reader.take_marker()?;
                    if m != 0xd0 + next_rst {
                        return self.err(
                            reader.offset(),
                            format!("expected restart marker {next_rst}, found {m:#x}"),
                        );
                    }
                    next_rst = (next_rst + 1) % 8;
                    preds.iter_mut().for_each(|p| *p = 0);
                }
                for (scan_idx, &(comp, td, ta)) in scan_tables.iter().enumerate() {
                    let dc = self.dc_tables[td].as_ref().ok_or(JpegElaError::Parse {
                        offset: at,
                        message: format!("missing dc table {td}"),
                    })?;
                    let ac = self.ac_tables[ta].as_ref().ok_or(JpegElaError::Parse {
                        offset: at,
                        message: format!("missing ac table {ta}"),
                    })?;
                    decode_block(
                        &mut reader,
                        dc,
                        ac,
                        &qtables[scan_idx],
                        &mut preds[scan_idx],
                        &mut block,
                    )?;
                    let plane = &mut planes[comp];
                    for y in 0..8 {
                        for x in 0..8 {
                            plane[(my * 8 + y) * pw + mx * 8 + x] =
                                clamp_u8(block[y * 8 + x] + 128.0);
                        }
                    }
                }
                mcu_index += 1;
            }
        }
        reader.byte_align();
        self.pos = reader.offset();

        // Crop and convert.
        let mut pixels = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                let i = y * pw + x;
                let rgb = ycbcr_to_rgb(
                    planes[0][i] as f64,
                    planes[1][i] as f64,
                    planes[2][i] as f64,
                );
                pixels.extend_from_slice(&rgb);
            }
        }
        ImageBuffer::from_pixels(w, h, pixels)
    }
}

fn extend(v: u32, s: u32) -> i32 {
    if s == 0 {
        0
    } else if v < (1 << (s - 1)) {
        v as i32 - (1 << s) + 1
    } else {
        v as i32
    }
}

fn decode_block(
    reader: &mut BitReader,
    dc: &HuffDecoder,
    ac: &HuffDecoder,
    q: &[u16; 64],
    pred: &mut i32,
    out: &mut [f64; 64],
) -> Result<()> {
    let mut coeffs = [0i32; 64];
    let s = dc.decode(reader)? as u32;
    if s > 11 {
        return Err(JpegElaError::Parse {
            offset: reader.offset(),
            message: format!("dc category {s} out of range"),
        });
    }
    let diff = extend(reader.bits(s)?, s);
    *pred += diff;
    coeffs[0] = *pred * q[0] as i32;

    let mut k = 1usize;
    while k < 64 {
        let rs = ac.decode(reader)?;
        let run = (rs >> 4) as usize;
        let size = (rs & 0x0f) as u32;
        if size == 0 {
            if rs == 0x00 {
                break; // end of block
            }
            if rs == 0xf0 {
                k += 16;
                continue;
            }
            return Err(JpegElaError::Parse {
                offset: reader.offset(),
                message: format!("ac symbol {rs:#x} malformed"),
            });
        }
        k += run;
        if k >= 64 {
            return Err(JpegElaError::Parse {
                offset: reader.offset(),
                message: "ac run past end of block".into(),
            });
        }
        let raster = ZIGZAG[k];
        coeffs[raster] = extend(reader.bits(size)?, size) * q[raster] as i32;
        k += 1;
    }

    for i in 0..64 {
        out[i] = coeffs[i] as f64;
    }
    dct::inverse(out);
    Ok(())
}

pub fn jpeg_decode(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut p = Parser {
        data: bytes,
        pos: 0,
        qtables: [None, None, None, None],
        dc_tables: [None, None, None, None],
        ac_tables: [None, None, None, None],
        frame: None,
        restart_interval: 0,
    };
    if p.u8()? != 0xff || p.u8()? != 0xd8 {
        return p.err(0, "missing start-of-image marker");
    }
    let mut decoded: Option<ImageBuffer> = None;
    loop {
        let at = p.pos;
        let b = p.u8()?;
        if b != 0xff {
            return p.err(at, format!("expected marker, found {b:#x}"));
        }
        // Fill bytes (repeated 0xff) before the marker code are legal.
        let mut m = p.u8()?;
        while m == 0xff {
            m = p.u8()?;
        }
        match m {
            0xd9 => {
                // EOI
                return match decoded {
                    Some(img) => Ok(img),
                    None => p.err(at, "end of image before any scan"),
                };
            }
            0xe0..=0xef | 0xfe => {
                p.segment_body()?;
            }
            0xdb => p.parse_dqt()?,
            0xc4 => p.parse_dht()?,
            0xc0 => p.parse_sof0()?,
            0xc1..=0xcf => {
                return p.err(at, format!("frame type {m:#x} unsupported, baseline only"));
            }
            0xdd => p.parse_dri()?,
            0xda => {
                decoded = Some(p.parse_scan()?);
            }
            _ => {
                return p.err(at, format!("unexpected marker {m:#x}"));
            }
        }
    }
}
