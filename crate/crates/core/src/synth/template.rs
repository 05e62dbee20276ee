use crate::error::{Error, Result};
use crate::types::{Alphabet, CharacterLabel};

pub type Point = [f64; 2];

const BUNDLED: &str = include_str!("../../data/templates.txt");

/// One glyph as cubic Bezier chains in the unit box.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphTemplate {
    pub glyph: CharacterLabel,
    /// Each chain has `3k + 1` control points.
    pub strokes: Vec<Vec<Point>>,
    pub duration_ms: f64,
}

impl GlyphTemplate {
    pub fn validate(&self) -> Result<()> {
        let name = self.glyph.glyph;
        if self.strokes.is_empty() {
            return Err(Error::DegenerateTemplate(format!("{name}: no strokes")));
        }
        for s in &self.strokes {
            if s.len() < 4 || (s.len() - 1) % 3 != 0 {
                return Err(Error::DegenerateTemplate(format!(
                    "{name}: stroke has {} control points, expected 3k+1",
                    s.len()
                )));
            }
            if s.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::DegenerateTemplate(format!("{name}: control point outside unit box")));
            }
        }
        let first = self.strokes[0][0];
        if self.strokes.iter().flatten().all(|p| *p == first) {
            return Err(Error::DegenerateTemplate(format!("{name}: all control points equal")));
        }
        if !(self.duration_ms > 0.0) {
            return Err(Error::DegenerateTemplate(format!("{name}: duration must be positive")));
        }
        Ok(())
    }

    /// Moves every interior joint to the midpoint of its two handles, which
    /// makes each chain C¹ regardless of how the handles were placed.
    pub fn smooth_joints(&mut self) {
        for s in &mut self.strokes {
            smooth_chain(s);
        }
    }
}

pub(crate) fn smooth_chain(s: &mut [Point]) {
    let mut k = 3;
    while k + 1 < s.len() {
        let (a, b) = (s[k - 1], s[k + 1]);
        s[k] = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        k += 3;
    }
}

/// Position of `ch` within its alphabet: `a..z` for Latin, the 33 modern
/// Mkhedruli letters from U+10D0 for Georgian.
pub fn alphabet_index(alphabet: Alphabet, ch: char) -> Option<usize> {
    let (base, len) = match alphabet {
        Alphabet::Latin => ('a' as u32, 26),
        Alphabet::Georgian => (0x10D0, 33),
    };
    let c = ch as u32;
    (base..base + len).contains(&c).then(|| (c - base) as usize)
}

/// Parses the template text format.
pub fn parse_templates(text: &str) -> Result<Vec<GlyphTemplate>> {
    let mut out: Vec<GlyphTemplate> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let syntax = |message: String| Error::TemplateSyntax { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("glyph") => {
                let fields: Vec<&str> = parts.collect();
                let [g, alpha, dur] = fields[..] else {
                    return Err(syntax("expected `glyph <char> <alphabet> <duration_ms>`".into()));
                };
                let mut chars = g.chars();
                let (Some(ch), None) = (chars.next(), chars.next()) else {
                    return Err(syntax(format!("glyph {g:?} is not a single character")));
                };
                let alphabet: Alphabet = alpha.parse().map_err(|_| syntax(format!("unknown alphabet {alpha:?}")))?;
                let idx =
                    alphabet_index(alphabet, ch).ok_or_else(|| syntax(format!("{ch:?} is not a {alphabet} letter")))?;
                let duration_ms: f64 = dur.parse().map_err(|_| syntax(format!("bad duration {dur:?}")))?;
                out.push(GlyphTemplate {
                    glyph: CharacterLabel::new(alphabet, idx, ch),
                    strokes: Vec::new(),
                    duration_ms,
                });
            }
            Some("stroke") => {
                let vals: Vec<f64> = parts
                    .map(|v| v.parse::<f64>().map_err(|_| syntax(format!("bad coordinate {v:?}"))))
                    .collect::<Result<_>>()?;
                if !vals.len().is_multiple_of(2) {
                    return Err(syntax("odd number of coordinates".into()));
                }
                let cur = out.last_mut().ok_or_else(|| syntax("stroke before any glyph".into()))?;
                cur.strokes.push(vals.chunks(2).map(|c| [c[0], c[1]]).collect());
            }
            Some(other) => return Err(syntax(format!("unknown directive {other:?}"))),
            None => unreachable!(),
        }
    }
    for t in &mut out {
        t.validate()?;
        t.smooth_joints();
    }
    Ok(out)
}

/// The template set shipped with the crate.
pub fn bundled_templates() -> Vec<GlyphTemplate> {
    parse_templates(BUNDLED).expect("bundled templates are valid")
}

/// Looks up templates for `glyphs` (in that order) within one alphabet.
pub fn select_templates(all: &[GlyphTemplate], alphabet: Alphabet, glyphs: &[char]) -> Result<Vec<GlyphTemplate>> {
    glyphs
        .iter()
        .map(|&g| {
            all.iter()
                .find(|t| t.glyph.alphabet == alphabet && t.glyph.glyph == g)
                .cloned()
                .ok_or(Error::MissingTemplate(g))
        })
        .collect()
}

/// Evaluates one cubic segment.
pub(crate) fn cubic(p: &[Point], u: f64) -> Point {
    let v = 1.0 - u;
    let (b0, b1, b2, b3) = (v * v * v, 3.0 * v * v * u, 3.0 * v * u * u, u * u * u);
    [
        b0 * p[0][0] + b1 * p[1][0] + b2 * p[2][0] + b3 * p[3][0],
        b0 * p[0][1] + b1 * p[1][1] + b2 * p[2][1] + b3 * p[3][1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_set_covers_both_alphabets() {
        let all = bundled_templates();
        let latin = all.iter().filter(|t| t.glyph.alphabet == Alphabet::Latin).count();
        let georgian = all.iter().filter(|t| t.glyph.alphabet == Alphabet::Georgian).count();
        assert!(latin >= 8 && georgian >= 8, "{latin} latin, {georgian} georgian");
        assert_eq!(alphabet_index(Alphabet::Georgian, 'ბ'), Some(1));
        assert_eq!(alphabet_index(Alphabet::Latin, 'z'), Some(25));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_templates("glyph a latin 500\nstroke 0 0 1\n").unwrap_err();
        assert!(matches!(err, Error::TemplateSyntax { line: 2, .. }));
        let err = parse_templates("\nstroke 0 0 1 1\n").unwrap_err();
        assert!(matches!(err, Error::TemplateSyntax { line: 2, .. }));
        let err = parse_templates("glyph q klingon 500\n").unwrap_err();
        assert!(matches!(err, Error::TemplateSyntax { line: 1, .. }));
    }

    #[test]
    fn degenerate_templates_rejected() {
        let same = "glyph a latin 500\nstroke 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5\n";
        assert!(matches!(parse_templates(same), Err(Error::DegenerateTemplate(_))));
        let outside = "glyph a latin 500\nstroke 0 0 0.2 0.2 0.4 1.2 1 1\n";
        assert!(matches!(parse_templates(outside), Err(Error::DegenerateTemplate(_))));
        let all = bundled_templates();
        assert!(matches!(select_templates(&all, Alphabet::Latin, &['a', 'q']), Err(Error::MissingTemplate('q'))));
    }

    #[test]
    fn smoothed_joints_are_c1() {
        for t in bundled_templates() {
            for s in &t.strokes {
                for k in (3..s.len() - 1).step_by(3) {
                    let d_in = [s[k][0] - s[k - 1][0], s[k][1] - s[k - 1][1]];
                    let d_out = [s[k + 1][0] - s[k][0], s[k + 1][1] - s[k][1]];
                    assert!((d_in[0] - d_out[0]).abs() < 1e-12 && (d_in[1] - d_out[1]).abs() < 1e-12);
                }
            }
        }
    }
}
