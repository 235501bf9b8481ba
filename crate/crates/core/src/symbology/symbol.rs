use serde::{Deserialize, Serialize};

use crate::color::{self, Rgb};
use crate::ecc::{self, BlockPlan, EcLevel};
use crate::error::{HiqError, Result};

use super::codebook::{build_codebook, tuple_index, ColorCodebook};
use super::format::{vote_layer_count, FormatInfo};
use super::layout::{check_version, Layout, ModuleRole};
use super::placement::Placement;

/// Finder core colors, top-left / top-right / bottom-left.
pub const FINDER_CORE_COLORS: [Rgb; 3] = [color::RED, color::GREEN, color::BLUE];
/// Finder outer ring color for n = 1..=4 layers.
pub const FINDER_RING_COLORS: [Rgb; 4] = [color::BLACK, color::CYAN, color::MAGENTA, color::YELLOW];
pub const ALIGNMENT_RING_COLOR: Rgb = color::BLACK;
pub const ALIGNMENT_CORE_COLOR: Rgb = color::MAGENTA;

/// One layer's bits, row-major over the module grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerMatrix {
    pub dim: usize,
    pub bits: Vec<u8>,
}

impl LayerMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, bits: vec![0; dim * dim] }
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.bits[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, b: u8) {
        self.bits[r * self.dim + c] = b & 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiqSymbol {
    pub version: u8,
    pub format: FormatInfo,
    pub layers: Vec<LayerMatrix>,
    codebook: ColorCodebook,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeOptions {
    pub version: u8,
    pub ec_levels: Vec<EcLevel>,
    pub randomize: bool,
    pub seed: u16,
}

/// Block plans of every layer for this version and level list.
pub fn layer_plans(version: u8, ec_levels: &[EcLevel]) -> Result<Vec<BlockPlan>> {
    let budget = Layout::get(version)?.codeword_budget();
    ec_levels
        .iter()
        .map(|&l| BlockPlan::new(version, l, budget))
        .collect()
}

/// Total payload bytes the symbol can carry.
pub fn capacity(version: u8, ec_levels: &[EcLevel]) -> Result<usize> {
    Ok(layer_plans(version, ec_levels)?
        .iter()
        .map(BlockPlan::payload_capacity)
        .sum())
}

/// Splits `len` bytes over layers as evenly as their capacities allow.
pub fn split_payload(len: usize, caps: &[usize]) -> Result<Vec<usize>> {
    let max: usize = caps.iter().sum();
    if len > max {
        return Err(HiqError::CapacityExceeded { requested: len, max });
    }
    let mut shares = vec![0usize; caps.len()];
    let mut rest = len;
    let mut open: Vec<usize> = (0..caps.len()).collect();
    while rest > 0 {
        let (base, extra) = (rest / open.len(), rest % open.len());
        let mut next = Vec::new();
        for (j, &i) in open.iter().enumerate() {
            let want = base + (j < extra) as usize;
            let give = want.min(caps[i] - shares[i]);
            shares[i] += give;
            rest -= give;
            if shares[i] < caps[i] {
                next.push(i);
            }
        }
        open = next;
    }
    Ok(shares)
}

/// Stream bit `i` of a layer belongs to block `ids[i]`; `None` for filler.
pub fn bit_block_ids(plan: &BlockPlan, n_modules: usize) -> Vec<Option<usize>> {
    let mut ids = Vec::with_capacity(n_modules);
    for (b, spec) in plan.blocks.iter().enumerate() {
        for _ in 0..8 * (spec.data_len + spec.ecc_len) {
            ids.push(Some(b));
        }
    }
    ids.resize(n_modules, None);
    ids.truncate(n_modules);
    ids
}

fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1))
        .collect()
}

/// Packs bits (MSB first) into bytes; a trailing partial byte is dropped.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks_exact(8)
        .map(|c| c.iter().fold(0u8, |a, &b| (a << 1) | (b & 1)))
        .collect()
}

/// Full per-layer bit stream: codewords followed by pad-pattern filler.
fn layer_stream(blocks: &[ecc::RsBlock], n_modules: usize) -> Vec<u8> {
    let mut bits = bytes_to_bits(&ecc::blocks_to_stream(blocks));
    let mut filler = bytes_to_bits(&[0xec, 0x11]).into_iter().cycle();
    while bits.len() < n_modules {
        bits.push(filler.next().unwrap());
    }
    bits
}

pub fn pattern_color(layout: &Layout, n_layers: usize, r: usize, c: usize) -> Option<Rgb> {
    match layout.role(r, c) {
        ModuleRole::Finder(f) => Some(match layout.finder_ring(r, c) {
            Some((_, 3)) => FINDER_RING_COLORS[n_layers - 1],
            Some((_, 2)) | None => color::WHITE,
            Some(_) => FINDER_CORE_COLORS[f as usize],
        }),
        ModuleRole::Alignment => Some(match layout.alignment_ring(r, c) {
            Some(2) => ALIGNMENT_RING_COLOR,
            Some(0) => ALIGNMENT_CORE_COLOR,
            _ => color::WHITE,
        }),
        _ => None,
    }
}

/// Builds a symbol from layer matrices. Data and format modules are kept as
/// given; function-pattern modules are overwritten by the pattern bits.
pub fn assemble_symbol(
    version: u8,
    layers: Vec<LayerMatrix>,
    format: FormatInfo,
) -> Result<HiqSymbol> {
    check_version(version)?;
    let layout = Layout::get(version)?;
    if layers.len() != format.n_layers {
        return Err(HiqError::LayerMismatch(format!(
            "{} layer matrices for a {}-layer format",
            layers.len(),
            format.n_layers
        )));
    }
    if let Some(bad) = layers.iter().find(|l| l.dim != layout.dim || l.bits.len() != layout.dim * layout.dim) {
        return Err(HiqError::LayerMismatch(format!(
            "layer of dimension {} in a {}-module symbol",
            bad.dim, layout.dim
        )));
    }
    let codebook = build_codebook(format.n_layers)?;
    let mut sym = HiqSymbol { version, format, layers, codebook };
    sym.paint_patterns();
    Ok(sym)
}

/// Encodes `payload` into a fresh symbol.
pub fn encode(payload: &[u8], opts: &EncodeOptions) -> Result<HiqSymbol> {
    let format = FormatInfo::new(opts.ec_levels.clone(), opts.randomize, opts.seed)?;
    let layout = Layout::get(opts.version)?;
    let plans = layer_plans(opts.version, &opts.ec_levels)?;
    let caps: Vec<usize> = plans.iter().map(BlockPlan::payload_capacity).collect();
    let shares = split_payload(payload.len(), &caps)?;
    let placement = Placement::build(layout, opts.randomize, opts.seed);

    let mut layers = Vec::with_capacity(plans.len());
    let mut offset = 0;
    for (i, plan) in plans.iter().enumerate() {
        let part = &payload[offset..offset + shares[i]];
        offset += shares[i];
        let blocks = ecc::rs_encode(part, plan, i)?;
        let stream = layer_stream(&blocks, layout.data_module_count());
        let mut m = LayerMatrix::zeros(layout.dim);
        placement.scatter(layout, &stream, &mut m.bits);
        layers.push(m);
    }
    let copy = format.encode_bits();
    for region in layout.format_copies() {
        for (&(r, c), &b) in region.iter().zip(&copy) {
            layers[0].set(r, c, b);
        }
    }
    assemble_symbol(opts.version, layers, format)
}

impl HiqSymbol {
    pub fn dim(&self) -> usize {
        self.layers[0].dim
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layout(&self) -> &'static Layout {
        Layout::get(self.version).expect("version checked at construction")
    }

    pub fn codebook(&self) -> &ColorCodebook {
        &self.codebook
    }

    /// Writes the monochrome pattern bits into every layer. Idempotent.
    pub fn paint_patterns(&mut self) {
        let layout = self.layout();
        for r in 0..layout.dim {
            for c in 0..layout.dim {
                if let Some(b) = layout.pattern_bit(r, c) {
                    for l in &mut self.layers {
                        l.set(r, c, b);
                    }
                }
            }
        }
    }

    /// Tuple class `k` of a module (layer 1 most significant).
    pub fn module_class(&self, r: usize, c: usize) -> usize {
        let bits: Vec<u8> = self.layers.iter().map(|l| l.get(r, c)).collect();
        tuple_index(&bits)
    }

    pub fn module_color(&self, r: usize, c: usize) -> Rgb {
        pattern_color(self.layout(), self.n_layers(), r, c)
            .unwrap_or_else(|| self.codebook.color(self.module_class(r, c)))
    }

    /// Row-major colors of all modules.
    pub fn colors(&self) -> Vec<Rgb> {
        let d = self.dim();
        (0..d * d).map(|i| self.module_color(i / d, i % d)).collect()
    }

    pub fn layer_plans(&self) -> Result<Vec<BlockPlan>> {
        layer_plans(self.version, &self.format.ec_levels)
    }

    pub fn placement(&self) -> Placement {
        Placement::build(self.layout(), self.format.randomized, self.format.seed)
    }

    /// Decodes the payload straight from the layer matrices.
    pub fn payload(&self) -> Result<Vec<u8>> {
        let layout = self.layout();
        let placement = self.placement();
        let mut out = Vec::new();
        for (i, plan) in self.layer_plans()?.iter().enumerate() {
            let bits = placement.gather(layout, &self.layers[i].bits);
            out.extend(decode_layer_stream(&bits, plan, i)?);
        }
        Ok(out)
    }
}

/// Error-corrects a layer's stream (in stream order) and returns its payload.
pub fn decode_layer_stream(bits: &[u8], plan: &BlockPlan, layer_id: usize) -> Result<Vec<u8>> {
    let blocks = ecc::stream_to_blocks(&bits_to_bytes(bits), plan, layer_id)?;
    let mut data = Vec::with_capacity(plan.data_codewords());
    for b in &blocks {
        data.extend(ecc::rs_decode_block(b)?.data);
    }
    ecc::unframe_payload(&data, plan)
}

/// Layer-count reading of each finder from its outer-ring color.
pub fn finder_layer_reads(ring_colors: [Option<Rgb>; 3]) -> [Option<usize>; 3] {
    ring_colors.map(|c| c.map(|c| color::nearest(c, &FINDER_RING_COLORS) + 1))
}

/// The two 44-bit format copies from a layer-1 bit grid.
pub fn format_copies_from_grid(layout: &Layout, layer1: &[u8]) -> [Vec<u8>; 2] {
    layout
        .format_copies()
        .map(|region| region.iter().map(|&(r, c)| layer1[r * layout.dim + c]).collect())
}

/// Reads the format of an ideal symbol from its colors alone.
pub fn read_format(version: u8, colors: &[Rgb]) -> Result<FormatInfo> {
    let layout = Layout::get(version)?;
    let d = layout.dim;
    let rings = layout.finder_centers().map(|(r, c)| Some(colors[(r - 3) * d + c]));
    let n = vote_layer_count(finder_layer_reads(rings))?;
    let cb = build_codebook(n)?;
    let layer1: Vec<u8> = colors
        .iter()
        .map(|&c| ((cb.nearest(c) >> (n - 1)) & 1) as u8)
        .collect();
    let [a, b] = format_copies_from_grid(layout, &layer1);
    let info = FormatInfo::decode_copies(&a, &b)?;
    if info.n_layers != n {
        return Err(HiqError::FormatUnreadable(format!(
            "finders report {n} layers, format region {}",
            info.n_layers
        )));
    }
    Ok(info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EcLevel::*;

    fn opts(version: u8, levels: &[EcLevel], randomize: bool) -> EncodeOptions {
        EncodeOptions { version, ec_levels: levels.to_vec(), randomize, seed: 4242 }
    }

    #[test]
    fn encode_then_read_back() {
        for (v, levels, rnd) in [(1, vec![L], false), (4, vec![M, L], true), (7, vec![L, L, L], true), (3, vec![Q, Q, M, L], false)] {
            let o = opts(v, &levels, rnd);
            let cap = capacity(v, &levels).unwrap();
            let payload: Vec<u8> = (0..cap).map(|i| (i * 31 + 7) as u8).collect();
            let sym = encode(&payload, &o).unwrap();
            assert_eq!(sym.payload().unwrap(), payload);
            assert_eq!(read_format(v, &sym.colors()).unwrap(), sym.format);
        }
    }

    #[test]
    fn over_capacity_is_rejected() {
        let cap = capacity(2, &[L, M]).unwrap();
        let err = encode(&vec![0; cap + 1], &opts(2, &[L, M], false)).unwrap_err();
        assert_eq!(err, HiqError::CapacityExceeded { requested: cap + 1, max: cap });
    }

    #[test]
    fn assemble_keeps_layers_and_paint_is_idempotent() {
        let sym = encode(b"layers", &opts(5, &[L, M, Q], true)).unwrap();
        let again = assemble_symbol(5, sym.layers.clone(), sym.format.clone()).unwrap();
        assert_eq!(again.layers, sym.layers);
        let mut twice = again.clone();
        twice.paint_patterns();
        twice.paint_patterns();
        assert_eq!(twice, again);
    }

    #[test]
    fn layer_count_mismatch() {
        let sym = encode(b"x", &opts(2, &[L, L], false)).unwrap();
        let f3 = FormatInfo::new(vec![L, L, L], false, 0).unwrap();
        assert!(matches!(assemble_symbol(2, sym.layers, f3), Err(HiqError::LayerMismatch(_))));
    }

    #[test]
    fn data_modules_follow_codebook() {
        let sym = encode(b"codebook check", &opts(3, &[L, L, L], true)).unwrap();
        let layout = sym.layout();
        for &(r, c) in layout.data_positions() {
            let bits: Vec<u8> = sym.layers.iter().map(|l| l.get(r, c)).collect();
            assert_eq!(sym.module_color(r, c), sym.codebook().map(&bits));
        }
    }

    #[test]
    fn three_layer_capacity_at_40_l() {
        assert_eq!(capacity(40, &[L, L, L]).unwrap(), 8859);
    }

    #[test]
    fn payload_split_is_even() {
        assert_eq!(split_payload(10, &[5, 5, 5]).unwrap(), vec![4, 3, 3]);
        assert_eq!(split_payload(10, &[1, 20]).unwrap(), vec![1, 9]);
        assert!(split_payload(10, &[1, 2]).is_err());
    }

    #[test]
    fn randomized_blocks_are_spread_over_quadrants() {
        let sym_opts = opts(40, &[L], true);
        let layout = Layout::get(40).unwrap();
        let plan = &layer_plans(40, &[L]).unwrap()[0];
        let ids = bit_block_ids(plan, layout.data_module_count());
        let placement = Placement::build(layout, true, sym_opts.seed);
        let half = layout.dim / 2;
        let mut counts = vec![[0usize; 4]; plan.blocks.len()];
        for (i, &m) in placement.order().iter().enumerate() {
            if let Some(b) = ids[i] {
                let (r, c) = layout.data_positions()[m];
                counts[b][(r >= half) as usize * 2 + (c >= half) as usize] += 1;
            }
        }
        for q in counts {
            let total: usize = q.iter().sum();
            let max = *q.iter().max().unwrap();
            assert!((max as f64) / (total as f64) <= 0.35, "{q:?}");
        }
    }
}
