use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use jpeg_ela::texture::{synth_texture, HOST_PALETTES, VIVID};
use jpeg_ela::{jpeg_encode, synth_splice, Rect};

use crate::article::{write_manifest, Article, Label};
use crate::config::{CorpusConfig, CorpusMode};
use crate::error::{io_at, CorpusError, Result};
use crate::templates::Family;

/// Ground truth for one spliced image, stored beside the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpliceEntry {
    pub id: String,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub host_quality: u8,
    pub donor_quality: u8,
}

impl SpliceEntry {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug)]
pub struct GeneratedCorpus {
    pub manifest_path: PathBuf,
    pub splices_path: PathBuf,
    pub articles: Vec<Article>,
    pub splices: Vec<SpliceEntry>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ImageKind {
    Clean,
    Spliced,
}

struct Plan {
    label: Label,
    family: Family,
    image: ImageKind,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Unimodal Bayes accuracy for a binary cue: the best label guess per cue
/// value, scored over the whole plan.
fn bayes_accuracy(plan: &[Plan], cue: impl Fn(&Plan) -> bool) -> f64 {
    let mut counts = [[0usize; 2]; 2];
    for p in plan {
        counts[cue(p) as usize][(p.label == Label::Satire) as usize] += 1;
    }
    let correct: usize = counts.iter().map(|c| c[0].max(c[1])).sum();
    correct as f64 / plan.len() as f64
}

fn build_plan(cfg: &CorpusConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Plan>> {
    let mut plan = Vec::with_capacity(cfg.n_satire + cfg.n_regular);
    match cfg.mode {
        CorpusMode::Simple => {
            for _ in 0..cfg.n_satire {
                let spliced = rng.gen_bool(cfg.splice_probability);
                plan.push(Plan {
                    label: Label::Satire,
                    family: Family::Absurd,
                    image: if spliced {
                        ImageKind::Spliced
                    } else {
                        ImageKind::Clean
                    },
                });
            }
            for _ in 0..cfg.n_regular {
                plan.push(Plan {
                    label: Label::Regular,
                    family: Family::Mundane,
                    image: ImageKind::Clean,
                });
            }
        }
        CorpusMode::CrossModal => {
            // Four cells over (headline register, image treatment). The
            // label flips exactly when one cue is active, and the off-cells
            // get enough mass that neither cue alone separates the classes.
            let b = cfg.n_satire / 2; // mundane text, spliced image
            let c = cfg.n_satire - b; // absurd text, clean image
            let d = cfg.n_regular / 6; // absurd text, spliced image
            let a = cfg.n_regular - d; // mundane text, clean image
            let cells = [
                (a, Label::Regular, Family::Mundane, ImageKind::Clean),
                (b, Label::Satire, Family::Mundane, ImageKind::Spliced),
                (c, Label::Satire, Family::Absurd, ImageKind::Clean),
                (d, Label::Regular, Family::Absurd, ImageKind::Spliced),
            ];
            for (count, label, family, image) in cells {
                for _ in 0..count {
                    plan.push(Plan {
                        label,
                        family,
                        image,
                    });
                }
            }
            let text_acc = bayes_accuracy(&plan, |p| p.family == Family::Absurd);
            let image_acc = bayes_accuracy(&plan, |p| p.image == ImageKind::Spliced);
            if text_acc > 0.75 + 1e-9 || image_acc > 0.75 + 1e-9 {
                return Err(CorpusError::Data(format!(
                    "class counts {}:{} make a single cue too predictive \
                     (text {:.1}%, image {:.1}%); use larger, more balanced counts",
                    cfg.n_satire,
                    cfg.n_regular,
                    100.0 * text_acc,
                    100.0 * image_acc
                )));
            }
        }
    }
    Ok(plan)
}

fn sample_rect(rng: &mut ChaCha8Rng, size: usize) -> Rect {
    let w = 8 * rng.gen_range(3..=6);
    let h = 8 * rng.gen_range(3..=6);
    let mut x = rng.gen_range(0..=size - w);
    let y = rng.gen_range(0..=size - h);
    // An origin aligned to the block grid in both axes would let the patch
    // re-compress cleanly; nudge off the grid so the splice is detectable.
    if x % 8 == 0 && y % 8 == 0 {
        x = if x < size - w { x + 1 } else { x - 1 };
    }
    Rect::new(x, y, w, h)
}

const SOURCES: [&str; 4] = ["daily-ledger", "metro-wire", "evening-post", "harbor-times"];

/// Write a full synthetic corpus: JPEG images, a line-delimited manifest,
/// and a sidecar listing every splice with its ground-truth rectangle.
/// Byte-deterministic in the config (seed included).
pub fn generate_synthetic_corpus(cfg: &CorpusConfig, out_dir: &Path) -> Result<GeneratedCorpus> {
    cfg.validate()?;
    let images_dir = out_dir.join("images");
    fs::create_dir_all(&images_dir).map_err(io_at(&images_dir))?;

    let mut plan_rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed));
    let plan = build_plan(cfg, &mut plan_rng)?;

    let mut articles = Vec::with_capacity(plan.len());
    let mut splices = Vec::new();
    for (i, entry) in plan.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ (i as u64 + 1)));
        let id = format!("a{i:05}");
        let headline = cfg.templates.headline(entry.family, &mut rng);

        let palette = &HOST_PALETTES[rng.gen_range(0..HOST_PALETTES.len())];
        let host = synth_texture(cfg.image_size, cfg.image_size, rng.gen(), palette)?;
        let bytes = match entry.image {
            ImageKind::Clean => jpeg_encode(&host, cfg.host_quality)?,
            ImageKind::Spliced => {
                let donor = synth_texture(cfg.image_size, cfg.image_size, rng.gen(), &VIVID)?;
                let rect = sample_rect(&mut rng, cfg.image_size);
                let (spliced, _) =
                    synth_splice(&host, &donor, rect, cfg.host_quality, cfg.donor_quality)?;
                splices.push(SpliceEntry {
                    id: id.clone(),
                    x: rect.x,
                    y: rect.y,
                    w: rect.w,
                    h: rect.h,
                    host_quality: cfg.host_quality,
                    donor_quality: cfg.donor_quality,
                });
                jpeg_encode(&spliced, cfg.host_quality)?
            }
        };
        let image_path = format!("images/{id}.jpg");
        let file = out_dir.join(&image_path);
        fs::write(&file, bytes).map_err(io_at(&file))?;

        articles.push(Article {
            id,
            headline,
            image_path,
            label: entry.label,
            source: SOURCES[i % SOURCES.len()].to_string(),
        });
    }

    let manifest_path = out_dir.join("manifest.jsonl");
    write_manifest(&manifest_path, &articles)?;
    let splices_path = out_dir.join("splices.jsonl");
    write_splices(&splices_path, &splices)?;

    Ok(GeneratedCorpus {
        manifest_path,
        splices_path,
        articles,
        splices,
    })
}

pub fn write_splices(path: &Path, entries: &[SpliceEntry]) -> Result<()> {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&serde_json::to_string(entry).map_err(|e| {
            CorpusError::Data(format!("splice entry {} does not serialize: {e}", entry.id))
        })?);
        out.push('\n');
    }
    fs::write(path, out).map_err(io_at(path))?;
    Ok(())
}

pub fn load_splices(path: &Path) -> Result<Vec<SpliceEntry>> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    let mut entries = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let entry: SpliceEntry = serde_json::from_str(line)
            .map_err(|e| CorpusError::Data(format!("splice record {index}: {e}")))?;
        entries.push(entry);
    }
    Ok(entries)
}
