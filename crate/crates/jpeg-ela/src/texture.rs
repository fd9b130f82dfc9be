//! Seeded synthetic textures in place of photographs: band-limited value
//! noise run through a three-anchor palette, with a few soft shapes for
//! larger structure. Band-limited matters; white noise would not survive
//! a quality-90 roundtrip within the error budget the tests assume, while
//! these do, like ordinary photographic content.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::image::ImageBuffer;

#[derive(Debug, Clone, Copy)]
pub struct Palette {
    pub anchors: [[u8; 3]; 3],
}

pub const NEWSPRINT: Palette = Palette {
    anchors: [[216, 214, 206], [168, 164, 150], [96, 92, 84]],
};

pub const MEADOW: Palette = Palette {
    anchors: [[82, 128, 70], [150, 186, 118], [214, 232, 240]],
};

pub const DUSK: Palette = Palette {
    anchors: [[242, 152, 92], [178, 92, 112], [58, 50, 92]],
};

pub const HARBOR: Palette = Palette {
    anchors: [[52, 84, 120], [120, 160, 184], [226, 222, 204]],
};

/// Deliberately loud palette for donor patches that are supposed to look
/// pasted-in.
pub const VIVID: Palette = Palette {
    anchors: [[232, 58, 178], [56, 220, 208], [250, 238, 88]],
};

pub const HOST_PALETTES: [Palette; 4] = [NEWSPRINT, MEADOW, DUSK, HARBOR];

#[inline]
fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// One octave of value noise: random lattice values, smoothstep-bilinear
/// interpolation between them.
struct Octave {
    cell: usize,
    amp: f64,
    gw: usize,
    lattice: Vec<f64>,
}

impl Octave {
    fn new(rng: &mut ChaCha8Rng, width: usize, height: usize, cell: usize, amp: f64) -> Self {
        let gw = width / cell + 2;
        let gh = height / cell + 2;
        let lattice = (0..gw * gh).map(|_| rng.gen::<f64>()).collect();
        Octave {
            cell,
            amp,
            gw,
            lattice,
        }
    }

    fn sample(&self, x: usize, y: usize) -> f64 {
        let fx = x as f64 / self.cell as f64;
        let fy = y as f64 / self.cell as f64;
        let gx = fx.floor() as usize;
        let gy = fy.floor() as usize;
        let tx = smoothstep(fx - gx as f64);
        let ty = smoothstep(fy - gy as f64);
        let v00 = self.lattice[gy * self.gw + gx];
        let v10 = self.lattice[gy * self.gw + gx + 1];
        let v01 = self.lattice[(gy + 1) * self.gw + gx];
        let v11 = self.lattice[(gy + 1) * self.gw + gx + 1];
        lerp(lerp(v00, v10, tx), lerp(v01, v11, tx), ty) * self.amp
    }
}

fn palette_color(palette: &Palette, t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    let (a, b, u) = if t < 0.5 {
        (palette.anchors[0], palette.anchors[1], t * 2.0)
    } else {
        (palette.anchors[1], palette.anchors[2], t * 2.0 - 1.0)
    };
    [
        lerp(a[0] as f64, b[0] as f64, u),
        lerp(a[1] as f64, b[1] as f64, u),
        lerp(a[2] as f64, b[2] as f64, u),
    ]
}

struct Blob {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: [f64; 3],
    alpha: f64,
}

/// Deterministic texture for (dimensions, seed, palette).
pub fn synth_texture(
    width: usize,
    height: usize,
    seed: u64,
    palette: &Palette,
) -> Result<ImageBuffer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let octaves = [
        Octave::new(&mut rng, width, height, 24, 1.0),
        Octave::new(&mut rng, width, height, 11, 0.5),
        Octave::new(&mut rng, width, height, 5, 0.25),
    ];
    let amp_sum: f64 = octaves.iter().map(|o| o.amp).sum();

    let n_blobs = rng.gen_range(2..=4);
    let blobs: Vec<Blob> = (0..n_blobs)
        .map(|_| {
            let t = rng.gen::<f64>();
            Blob {
                cx: rng.gen_range(0.0..width as f64),
                cy: rng.gen_range(0.0..height as f64),
                rx: rng.gen_range(width as f64 * 0.08..width as f64 * 0.3),
                ry: rng.gen_range(height as f64 * 0.08..height as f64 * 0.3),
                color: palette_color(palette, t),
                alpha: rng.gen_range(0.25..0.6),
            }
        })
        .collect();

    let mut pixels = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let n: f64 = octaves.iter().map(|o| o.sample(x, y)).sum::<f64>() / amp_sum;
            let mut rgb = palette_color(palette, n);
            for blob in &blobs {
                let dx = (x as f64 - blob.cx) / blob.rx;
                let dy = (y as f64 - blob.cy) / blob.ry;
                let d2 = dx * dx + dy * dy;
                if d2 < 1.0 {
                    // smooth falloff toward the rim
                    let a = blob.alpha * smoothstep(1.0 - d2);
                    for (c, &b) in rgb.iter_mut().zip(&blob.color) {
                        *c = lerp(*c, b, a);
                    }
                }
            }
            for c in rgb {
                pixels.push(c.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    ImageBuffer::from_pixels(width, height, pixels)
}
