//! Synthetic pen-motion corpora: glyph templates → pen path → IMU channels.

mod kinematics;
mod template;

pub use kinematics::{
    glyph_trajectory, trajectory_to_imu, WriterStyle, BRIDGE_MS, GLYPH_SIZE_M, STANDARD_GRAVITY, TREMOR_GYRO_DPS_PER_G,
};
pub use template::{alphabet_index, bundled_templates, parse_templates, select_templates, GlyphTemplate, Point};

use std::collections::BTreeMap;

use crate::error::Result;
use crate::rng;
use crate::types::{Alphabet, Dataset, LabeledSequence, Origin};

pub const DEFAULT_GRAVITY_G: [f64; 3] = [0.0, 0.0, 1.0];

/// Generates `per_class` samples of every glyph for every writer from the
/// bundled templates. Class order follows `glyphs`.
pub fn generate_dataset(
    alphabet: Alphabet,
    glyphs: &[char],
    writers: &[WriterStyle],
    per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    generate_from_templates(&bundled_templates(), alphabet, glyphs, writers, per_class, seed)
}

pub fn generate_from_templates(
    templates: &[GlyphTemplate],
    alphabet: Alphabet,
    glyphs: &[char],
    writers: &[WriterStyle],
    per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    let chosen = select_templates(templates, alphabet, glyphs)?;
    for w in writers {
        w.validate()?;
    }
    let mut items = Vec::with_capacity(writers.len() * chosen.len() * per_class);
    for w in writers {
        for t in &chosen {
            for rep in 0..per_class {
                let tag = format!("{}/{}/{}", w.id, t.glyph, rep);
                let item_seed = rng::derive_seed_str(seed, &tag);
                let path = glyph_trajectory(t, w, rng::derive_seed(item_seed, 1))?;
                let sequence = trajectory_to_imu(&path, w, DEFAULT_GRAVITY_G, rng::derive_seed(item_seed, 2))?;
                items.push(LabeledSequence {
                    id: format!("{}_{}{:02}_{:03}", w.id, t.glyph.alphabet, t.glyph.char_index, rep),
                    sequence,
                    label: t.glyph,
                    writer_id: w.id.clone(),
                    origin: Origin::Synthetic,
                    parent_id: None,
                });
            }
        }
    }
    let mut ds = Dataset::new(items, chosen.iter().map(|t| t.glyph).collect())?;
    ds.metadata = BTreeMap::from([("source".to_string(), "synth".to_string()), ("seed".to_string(), seed.to_string())]);
    Ok(ds)
}

/// The first `k` template glyphs of an alphabet, in file order.
pub fn default_glyphs(alphabet: Alphabet, k: usize) -> Vec<char> {
    bundled_templates().iter().filter(|t| t.glyph.alphabet == alphabet).map(|t| t.glyph.glyph).take(k).collect()
}
