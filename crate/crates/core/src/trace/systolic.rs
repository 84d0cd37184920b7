//! Off-chip access traces of a systolic-array convolution accelerator.
//!
//! Each layer is lowered to a GEMM (pixels x reduction x filters) and cut into
//! compute steps of at most `pe_rows` output pixels by `pe_cols` filters. An
//! operand that fits in half of its double-buffered SRAM is loaded once and
//! stays resident for the layer; otherwise every compute step loads the
//! operand tile it needs, so data shared by neighbouring tiles (overlapping
//! convolution windows, or the same filters revisited by another pixel fold)
//! is fetched again. Loads go out one word per cycle; each step computes for
//! `reduction + rows + cols - 2` cycles and then writes its outputs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AccessKind, AccessSequence, LayerMark, MemoryAccess};
use crate::error::{Error, Result};

// The small offsets keep the three operands apart in the low address bits
// too, so a table indexed by low block-address bits does not alias them.
pub const IFMAP_BASE: u64 = 0x100_0000_0000;
pub const FILTER_BASE: u64 = 0x200_0020_0000;
pub const OFMAP_BASE: u64 = 0x300_0040_0000;
/// Address space reserved per layer inside each operand region.
pub const REGION_STRIDE: u64 = 0x1_0000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dataflow {
    OS,
    WS,
    IS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub ifmap_h: u32,
    pub ifmap_w: u32,
    pub filt_h: u32,
    pub filt_w: u32,
    pub channels: u32,
    pub num_filters: u32,
    pub stride: u32,
    pub dataflow: Dataflow,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.ifmap_h,
            self.ifmap_w,
            self.filt_h,
            self.filt_w,
            self.channels,
            self.num_filters,
            self.stride,
        ];
        if dims.contains(&0) {
            return Err(Error::Validation("layer dimensions must be positive".into()));
        }
        if self.filt_h > self.ifmap_h || self.filt_w > self.ifmap_w {
            return Err(Error::Validation(format!(
                "filter {}x{} larger than ifmap {}x{}",
                self.filt_h, self.filt_w, self.ifmap_h, self.ifmap_w
            )));
        }
        Ok(())
    }

    pub fn out_h(&self) -> u64 {
        ((self.ifmap_h - self.filt_h) / self.stride + 1) as u64
    }

    pub fn out_w(&self) -> u64 {
        ((self.ifmap_w - self.filt_w) / self.stride + 1) as u64
    }

    pub fn pixels(&self) -> u64 {
        self.out_h() * self.out_w()
    }

    /// Words in one filter (and in one convolution window).
    pub fn reduction(&self) -> u64 {
        self.filt_h as u64 * self.filt_w as u64 * self.channels as u64
    }

    pub fn ifmap_words(&self) -> u64 {
        self.ifmap_h as u64 * self.ifmap_w as u64 * self.channels as u64
    }

    pub fn filter_words(&self) -> u64 {
        self.reduction() * self.num_filters as u64
    }

    pub fn ofmap_words(&self) -> u64 {
        self.pixels() * self.num_filters as u64
    }
}

fn default_word_bytes() -> u32 {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceleratorSpec {
    pub pe_rows: u32,
    pub pe_cols: u32,
    pub sram_ifmap_kb: u32,
    pub sram_ofmap_kb: u32,
    pub sram_filter_kb: u32,
    /// Bytes per operand element.
    #[serde(default = "default_word_bytes")]
    pub word_bytes: u32,
    pub layers: Vec<LayerSpec>,
}

impl AcceleratorSpec {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            self.pe_rows,
            self.pe_cols,
            self.sram_ifmap_kb,
            self.sram_ofmap_kb,
            self.sram_filter_kb,
            self.word_bytes,
        ];
        if sizes.contains(&0) {
            return Err(Error::Validation(
                "accelerator sizes must all be positive".into(),
            ));
        }
        for (i, l) in self.layers.iter().enumerate() {
            l.validate()
                .map_err(|e| Error::Validation(format!("layer {i}: {e}")))?;
            let w = self.word_bytes as u64;
            let biggest = l.ifmap_words().max(l.filter_words()).max(l.ofmap_words()) * w;
            if biggest > REGION_STRIDE {
                return Err(Error::Validation(format!(
                    "layer {i} operand of {biggest} bytes exceeds the per-layer region"
                )));
            }
        }
        Ok(())
    }

    /// Words that one half of a double-buffered SRAM of `kb` KiB holds.
    fn tile_words(&self, kb: u32) -> u64 {
        kb as u64 * 1024 / self.word_bytes as u64 / 2
    }
}

/// Contiguous range of output pixels and filters computed together.
#[derive(Debug, Clone, Copy)]
struct Fold {
    start: u64,
    len: u64,
}

fn folds(total: u64, width: u64) -> Vec<Fold> {
    (0..total.div_ceil(width))
        .map(|i| {
            let start = i * width;
            Fold {
                start,
                len: width.min(total - start),
            }
        })
        .collect()
}

struct LayerPlan<'a> {
    layer: &'a LayerSpec,
    layer_id: u64,
    word: u64,
    ifmap_resident: bool,
    filter_resident: bool,
    pixel_folds: Vec<Fold>,
    filter_folds: Vec<Fold>,
}

impl<'a> LayerPlan<'a> {
    fn new(spec: &AcceleratorSpec, layer: &'a LayerSpec, layer_id: u64) -> Result<Self> {
        let cap_if = spec.tile_words(spec.sram_ifmap_kb);
        let cap_fl = spec.tile_words(spec.sram_filter_kb);
        let cap_of = spec.tile_words(spec.sram_ofmap_kb);
        let red = layer.reduction();
        let k = layer.num_filters as u64;
        let pixels = layer.pixels();

        let filter_resident = layer.filter_words() <= cap_fl;
        let mut filt_width = (spec.pe_cols as u64).min(k);
        if !filter_resident {
            let fit = cap_fl / red;
            if fit == 0 {
                return Err(Error::Generation(format!(
                    "layer {layer_id}: one filter ({red} words) exceeds the filter SRAM tile \
                     ({cap_fl} words); use a smaller layer or a larger SRAM"
                )));
            }
            filt_width = filt_width.min(fit);
        }

        let ifmap_resident = layer.ifmap_words() <= cap_if;
        let mut pix_width = (spec.pe_rows as u64).min(pixels);
        if !ifmap_resident {
            while pix_width > 1 && window_union_words(layer, 0, pix_width) > cap_if {
                pix_width = pix_width.div_ceil(2);
            }
            if window_union_words(layer, 0, pix_width) > cap_if {
                return Err(Error::Generation(format!(
                    "layer {layer_id}: a single convolution window ({red} words) exceeds the \
                     ifmap SRAM tile ({cap_if} words); use a smaller layer or a larger SRAM"
                )));
            }
        }
        while pix_width * filt_width > cap_of && pix_width > 1 {
            pix_width = pix_width.div_ceil(2);
        }
        if pix_width * filt_width > cap_of {
            filt_width = cap_of.max(1);
        }
        Ok(Self {
            layer,
            layer_id,
            word: spec.word_bytes as u64,
            ifmap_resident,
            filter_resident,
            pixel_folds: folds(pixels, pix_width),
            filter_folds: folds(k, filt_width),
        })
    }

    fn ifmap_addr(&self, y: u64, x: u64, c: u64) -> u64 {
        let l = self.layer;
        let idx = (y * l.ifmap_w as u64 + x) * l.channels as u64 + c;
        IFMAP_BASE + self.layer_id * REGION_STRIDE + idx * self.word
    }

    fn filter_addr(&self, k: u64, off: u64) -> u64 {
        FILTER_BASE + self.layer_id * REGION_STRIDE + (k * self.layer.reduction() + off) * self.word
    }

    fn ofmap_addr(&self, pixel: u64, k: u64) -> u64 {
        OFMAP_BASE
            + self.layer_id * REGION_STRIDE
            + (pixel * self.layer.num_filters as u64 + k) * self.word
    }

    fn ifmap_tile(&self, fold: Fold) -> Vec<u64> {
        let l = self.layer;
        let c = l.channels as u64;
        window_union(l, fold.start, fold.len)
            .into_iter()
            .flat_map(|(y, x)| (0..c).map(move |ch| (y, x, ch)))
            .map(|(y, x, ch)| self.ifmap_addr(y, x, ch))
            .collect()
    }

    fn whole_ifmap(&self) -> Vec<u64> {
        let l = self.layer;
        let mut v = Vec::with_capacity(l.ifmap_words() as usize);
        for y in 0..l.ifmap_h as u64 {
            for x in 0..l.ifmap_w as u64 {
                for ch in 0..l.channels as u64 {
                    v.push(self.ifmap_addr(y, x, ch));
                }
            }
        }
        v
    }

    fn filter_tile(&self, fold: Fold) -> Vec<u64> {
        let red = self.layer.reduction();
        (fold.start..fold.start + fold.len)
            .flat_map(|k| (0..red).map(move |o| (k, o)))
            .map(|(k, o)| self.filter_addr(k, o))
            .collect()
    }

    fn ofmap_tile(&self, pf: Fold, kf: Fold, filter_major: bool) -> Vec<u64> {
        let mut v = Vec::with_capacity((pf.len * kf.len) as usize);
        if filter_major {
            for k in kf.start..kf.start + kf.len {
                for p in pf.start..pf.start + pf.len {
                    v.push(self.ofmap_addr(p, k));
                }
            }
        } else {
            for p in pf.start..pf.start + pf.len {
                for k in kf.start..kf.start + kf.len {
                    v.push(self.ofmap_addr(p, k));
                }
            }
        }
        v
    }
}

/// Input pixels `(y, x)` touched by the windows of output pixels
/// `start..start+len`, in row-major order.
fn window_union(l: &LayerSpec, start: u64, len: u64) -> Vec<(u64, u64)> {
    let ow = l.out_w();
    let s = l.stride as u64;
    let mut set = BTreeSet::new();
    for p in start..start + len {
        let (oy, ox) = (p / ow, p % ow);
        for dy in 0..l.filt_h as u64 {
            for dx in 0..l.filt_w as u64 {
                set.insert((oy * s + dy, ox * s + dx));
            }
        }
    }
    set.into_iter().collect()
}

fn window_union_words(l: &LayerSpec, start: u64, len: u64) -> u64 {
    window_union(l, start, len).len() as u64 * l.channels as u64
}

/// One pending access with a tie-break sequence number.
struct Stamped {
    ts: u64,
    seq: u64,
    addr: u64,
    kind: AccessKind,
}

struct Timeline {
    dma_free: u64,
    write_free: u64,
    compute_end: [u64; 2],
    seq: u64,
    out: Vec<Stamped>,
}

impl Timeline {
    fn load(&mut self, addrs: &[u64], not_before: u64) {
        let mut t = self.dma_free.max(not_before);
        for &addr in addrs {
            self.out.push(Stamped {
                ts: t,
                seq: self.seq,
                addr,
                kind: AccessKind::Read,
            });
            self.seq += 1;
            t += 1;
        }
        self.dma_free = t;
    }

    fn store(&mut self, addrs: &[u64], at: u64) {
        let mut t = self.write_free.max(at);
        for &addr in addrs {
            self.out.push(Stamped {
                ts: t,
                seq: self.seq,
                addr,
                kind: AccessKind::Write,
            });
            self.seq += 1;
            t += 1;
        }
        self.write_free = t;
    }
}

pub fn generate_systolic_trace(spec: &AcceleratorSpec, seed: u64) -> Result<AccessSequence> {
    spec.validate()?;
    let accel_id = 0u8;
    let mut accesses = Vec::new();
    let mut marks = Vec::new();
    let mut clock = 0u64;

    for (layer_id, layer) in spec.layers.iter().enumerate() {
        let plan = LayerPlan::new(spec, layer, layer_id as u64)?;
        let mut tl = Timeline {
            dma_free: clock,
            write_free: clock,
            compute_end: [clock; 2],
            seq: 0,
            out: Vec::new(),
        };
        let mut step = 0usize;
        let mut loaded_ifmap = false;
        let mut loaded_filters = false;

        let mut run_step = |tl: &mut Timeline, pf: Fold, kf: Fold, ifmap_first: bool| {
            // buffer slot frees when the step two back finished computing
            let slot_free = tl.compute_end[step % 2];
            let mut loads: Vec<Vec<u64>> = Vec::with_capacity(2);
            let ifmap = if plan.ifmap_resident {
                if loaded_ifmap {
                    None
                } else {
                    loaded_ifmap = true;
                    Some(plan.whole_ifmap())
                }
            } else {
                Some(plan.ifmap_tile(pf))
            };
            let filters = if plan.filter_resident {
                if loaded_filters {
                    None
                } else {
                    loaded_filters = true;
                    Some(plan.filter_tile(Fold {
                        start: 0,
                        len: layer.num_filters as u64,
                    }))
                }
            } else {
                Some(plan.filter_tile(kf))
            };
            if ifmap_first {
                loads.extend(ifmap);
                loads.extend(filters);
            } else {
                loads.extend(filters);
                loads.extend(ifmap);
            }
            for l in &loads {
                tl.load(l, slot_free);
            }
            let prev_end = tl.compute_end[(step + 1) % 2];
            let start = tl.dma_free.max(prev_end);
            let end = start + layer.reduction() + pf.len + kf.len - 2;
            tl.compute_end[step % 2] = end;
            let filter_major = !matches!(layer.dataflow, Dataflow::OS);
            tl.store(&plan.ofmap_tile(pf, kf, filter_major), end);
            step += 1;
        };

        match layer.dataflow {
            // output- and input-stationary both walk pixel folds outermost
            Dataflow::OS | Dataflow::IS => {
                for &pf in &plan.pixel_folds {
                    for &kf in &plan.filter_folds {
                        run_step(&mut tl, pf, kf, true);
                    }
                }
            }
            Dataflow::WS => {
                for &kf in &plan.filter_folds {
                    for &pf in &plan.pixel_folds {
                        run_step(&mut tl, pf, kf, false);
                    }
                }
            }
        }

        let mut out = std::mem::take(&mut tl.out);
        out.sort_by_key(|s| (s.ts, s.seq));
        marks.push(LayerMark {
            position: accesses.len(),
            layer_id: layer_id as u32,
        });
        for s in &out {
            accesses.push(MemoryAccess {
                timestamp: s.ts,
                requester_id: accel_id,
                address: s.addr,
                kind: s.kind,
                tag: 0,
            });
        }
        clock = tl
            .dma_free
            .max(tl.write_free)
            .max(tl.compute_end[0])
            .max(tl.compute_end[1]);
    }

    let mut seq = AccessSequence::new(
        accesses,
        format!(
            "systolic pe={}x{} sram_kb={}/{}/{} word={} layers={} seed={seed}",
            spec.pe_rows,
            spec.pe_cols,
            spec.sram_ifmap_kb,
            spec.sram_ofmap_kb,
            spec.sram_filter_kb,
            spec.word_bytes,
            spec.layers.len()
        ),
    );
    seq.layer_marks = marks;
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn tiny(df: Dataflow) -> LayerSpec {
        LayerSpec {
            ifmap_h: 4,
            ifmap_w: 4,
            filt_h: 3,
            filt_w: 3,
            channels: 1,
            num_filters: 1,
            stride: 1,
            dataflow: df,
        }
    }

    fn spec_with(layers: Vec<LayerSpec>, kb: u32) -> AcceleratorSpec {
        AcceleratorSpec {
            pe_rows: 8,
            pe_cols: 8,
            sram_ifmap_kb: kb,
            sram_ofmap_kb: kb,
            sram_filter_kb: kb,
            word_bytes: 4,
            layers,
        }
    }

    #[test]
    fn whole_layer_fits_reads_each_once() {
        let seq = generate_systolic_trace(&spec_with(vec![tiny(Dataflow::OS)], 64), 0).unwrap();
        let mut counts: HashMap<u64, usize> = HashMap::new();
        for a in &seq.accesses {
            *counts.entry(a.address).or_default() += 1;
        }
        assert!(counts.values().all(|&c| c == 1));
        let reads_if = seq
            .accesses
            .iter()
            .filter(|a| (IFMAP_BASE..FILTER_BASE).contains(&a.address))
            .count();
        let reads_fl = seq
            .accesses
            .iter()
            .filter(|a| (FILTER_BASE..OFMAP_BASE).contains(&a.address))
            .count();
        let writes = seq
            .accesses
            .iter()
            .filter(|a| a.kind == AccessKind::Write)
            .count();
        assert_eq!((reads_if, reads_fl, writes), (16, 9, 4));
    }

    #[test]
    fn regions_and_kinds() {
        let layer = LayerSpec {
            ifmap_h: 12,
            ifmap_w: 12,
            filt_h: 3,
            filt_w: 3,
            channels: 8,
            num_filters: 16,
            stride: 1,
            dataflow: Dataflow::OS,
        };
        let seq = generate_systolic_trace(&spec_with(vec![layer, layer], 1), 0).unwrap();
        seq.validate().unwrap();
        assert_eq!(seq.layer_marks.len(), 2);
        for a in &seq.accesses {
            assert_eq!(a.tag, 0);
            if a.address >= OFMAP_BASE {
                assert_eq!(a.kind, AccessKind::Write);
            } else {
                assert_eq!(a.kind, AccessKind::Read);
            }
        }
    }

    #[test]
    fn oversized_window_is_an_error() {
        let layer = LayerSpec {
            ifmap_h: 16,
            ifmap_w: 16,
            filt_h: 16,
            filt_w: 16,
            channels: 4,
            num_filters: 1,
            stride: 1,
            dataflow: Dataflow::OS,
        };
        let err = generate_systolic_trace(&spec_with(vec![layer], 1), 0).unwrap_err();
        assert!(matches!(err, Error::Generation(m) if m.contains("smaller layer")));
    }

    #[test]
    fn invalid_layer_rejected() {
        let mut l = tiny(Dataflow::OS);
        l.filt_h = 5;
        assert!(generate_systolic_trace(&spec_with(vec![l], 64), 0).is_err());
    }
}
