//! Plain-text symbol files.
//!
//! ```text
//! HIQSYM 1
//! version 5
//! levels L,M
//! randomized 1
//! seed 4242
//! layer 1
//! 0101...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::ecc::EcLevel;
use crate::error::{HiqError, Result};

use super::format::FormatInfo;
use super::layout::dimension;
use super::symbol::{assemble_symbol, HiqSymbol, LayerMatrix};

const MAGIC: &str = "HIQSYM 1";

pub fn to_text(sym: &HiqSymbol) -> String {
    let f = &sym.format;
    let mut s = String::new();
    let levels: Vec<String> = f.ec_levels.iter().map(|l| l.to_string()).collect();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "version {}", sym.version).unwrap();
    writeln!(s, "levels {}", levels.join(",")).unwrap();
    writeln!(s, "randomized {}", f.randomized as u8).unwrap();
    writeln!(s, "seed {}", f.seed).unwrap();
    for (i, l) in sym.layers.iter().enumerate() {
        writeln!(s, "layer {}", i + 1).unwrap();
        for row in l.bits.chunks(l.dim) {
            s.extend(row.iter().map(|&b| if b == 1 { '1' } else { '0' }));
            s.push('\n');
        }
    }
    s
}

pub fn from_text(text: &str) -> Result<HiqSymbol> {
    let bad = |m: String| HiqError::Parse(format!("symbol file: {m}"));
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing header".into()));
    }
    fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<String> {
        let bad = |m: String| HiqError::Parse(format!("symbol file: {m}"));
        let line = lines.next().ok_or_else(|| bad(format!("missing {key}")))?;
        line.strip_prefix(key)
            .map(|v| v.trim().to_string())
            .ok_or_else(|| bad(format!("expected `{key}`, found `{line}`")))
    }
    let version: u8 = field(&mut lines, "version")?.parse().map_err(|e| bad(format!("version: {e}")))?;
    let levels = field(&mut lines, "levels")?
        .split(',')
        .map(|s| s.trim().parse::<EcLevel>())
        .collect::<Result<Vec<_>>>()?;
    let randomized = field(&mut lines, "randomized")? == "1";
    let seed: u16 = field(&mut lines, "seed")?.parse().map_err(|e| bad(format!("seed: {e}")))?;
    if !(1..=40).contains(&version) {
        return Err(bad(format!("version {version} out of range")));
    }
    let dim = dimension(version);
    let mut layers = Vec::new();
    for i in 0..levels.len() {
        if field(&mut lines, "layer")? != (i + 1).to_string() {
            return Err(bad(format!("layer {} out of order", i + 1)));
        }
        let mut m = LayerMatrix::zeros(dim);
        for r in 0..dim {
            let row = lines.next().ok_or_else(|| bad(format!("layer {} truncated", i + 1)))?;
            if row.len() != dim {
                return Err(bad(format!("row of {} modules, expected {dim}", row.len())));
            }
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c, 1),
                    _ => return Err(bad(format!("unexpected character `{ch}`"))),
                }
            }
        }
        layers.push(m);
    }
    assemble_symbol(version, layers, FormatInfo::new(levels, randomized, seed)?)
}

pub fn save(sym: &HiqSymbol, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, to_text(sym))?)
}

pub fn load(path: &Path) -> Result<HiqSymbol> {
    from_text(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbology::{encode, EncodeOptions};

    #[test]
    fn text_round_trip() {
        let opts = EncodeOptions {
            version: 2,
            ec_levels: vec![EcLevel::M, EcLevel::L],
            randomize: true,
            seed: 17,
        };
        let sym = encode(b"round trip", &opts).unwrap();
        let back = from_text(&to_text(&sym)).unwrap();
        assert_eq!(back, sym);
        assert_eq!(back.payload().unwrap(), b"round trip");
    }

    #[test]
    fn rejects_garbage() {
        assert!(from_text("nope").is_err());
        assert!(from_text("HIQSYM 1\nversion 2\nlevels L\nrandomized 0\nseed 1\nlayer 1\n01\n").is_err());
    }
}
