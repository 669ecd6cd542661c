//! Size binning, distribution reports and distribution-matched resplits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

use super::manifest::{DatasetManifest, Split};

/// Equal-width bins over `[lo, hi]`; heights outside are clamped into the
/// first or last bin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeBins {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl SizeBins {
    pub const DEFAULT_COUNT: usize = 8;

    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 || !(lo <= hi) {
            return Err(invalid(format!("bad size bins [{lo}, {hi}] x {count}")));
        }
        Ok(SizeBins { lo, hi, count })
    }

    /// Bins spanning the heights present in `manifest`.
    pub fn spanning(manifest: &DatasetManifest, count: usize) -> Result<Self> {
        let hs = manifest.entries.iter().map(|e| e.height as f64);
        let lo = hs.clone().fold(f64::INFINITY, f64::min);
        let hi = hs.fold(f64::NEG_INFINITY, f64::max);
        if manifest.is_empty() {
            return Err(invalid("manifest is empty"));
        }
        Self::new(lo, hi, count)
    }

    pub fn bin_of(&self, height: u32) -> usize {
        if self.hi == self.lo {
            return 0;
        }
        let t = (height as f64 - self.lo) / (self.hi - self.lo) * self.count as f64;
        (t.max(0.0) as usize).min(self.count - 1)
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.count)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / self.count as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitDistribution {
    pub split: Split,
    pub total: usize,
    /// Per class (catalog order).
    pub class_frequency: Vec<f64>,
    /// Per class, counts per size bin.
    pub size_histogram: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionReport {
    pub classes: Vec<String>,
    pub edges: Vec<f64>,
    pub splits: Vec<SplitDistribution>,
}

impl DistributionReport {
    pub fn get(&self, split: Split) -> &SplitDistribution {
        self.splits
            .iter()
            .find(|s| s.split == split)
            .expect("both splits present")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let edges: Vec<String> = self.edges.iter().map(|e| format!("{e:.1}")).collect();
        let _ = writeln!(out, "size bin edges: {}", edges.join(" "));
        for s in &self.splits {
            if s.total == 0 {
                let _ = writeln!(out, "[{}] EMPTY", s.split);
                continue;
            }
            let _ = writeln!(out, "[{}] {} images", s.split, s.total);
            for (k, c) in self.classes.iter().enumerate() {
                let hist: Vec<String> = s.size_histogram[k].iter().map(usize::to_string).collect();
                let _ = writeln!(out, "{c}: {:.4} | {}", s.class_frequency[k], hist.join(" "));
            }
        }
        out
    }

    /// `split,class,frequency,bin0,...` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,class,frequency");
        for i in 0..self.edges.len().saturating_sub(1) {
            let _ = write!(out, ",bin{i}");
        }
        out.push('\n');
        for s in &self.splits {
            for (k, c) in self.classes.iter().enumerate() {
                let _ = write!(out, "{},{c},{:.6}", s.split, s.class_frequency[k]);
                for n in &s.size_histogram[k] {
                    let _ = write!(out, ",{n}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Per-split class frequencies and per-class size histograms. Empty
/// splits are reported with all-zero frequencies.
pub fn distribution_report(
    manifest: &DatasetManifest,
    bins: &SizeBins,
) -> Result<DistributionReport> {
    if manifest.is_empty() {
        return Err(invalid("manifest is empty"));
    }
    let classes = manifest.classes();
    let splits = Split::ALL
        .iter()
        .map(|&split| {
            let mut counts = vec![0usize; classes.len()];
            let mut hist = vec![vec![0usize; bins.count]; classes.len()];
            for e in manifest.split(split) {
                let k = classes.binary_search(&e.label).expect("label from catalog");
                counts[k] += 1;
                hist[k][bins.bin_of(e.height)] += 1;
            }
            let total: usize = counts.iter().sum();
            let class_frequency = counts
                .iter()
                .map(|&c| {
                    if total == 0 {
                        0.0
                    } else {
                        c as f64 / total as f64
                    }
                })
                .collect();
            SplitDistribution {
                split,
                total,
                class_frequency,
                size_histogram: hist,
            }
        })
        .collect();
    Ok(DistributionReport {
        classes,
        edges: bins.edges(),
        splits,
    })
}

/// Reassigns splits so that every (class, size bin) cell is divided at
/// `train_ratio`. Each cell is shuffled, gets `floor(n·r)` train entries,
/// and the remaining train slots up to `round(N·r)` go to the cells with the
/// largest fractional parts, preferring cells that keep a test entry.
/// Returns the new manifest and warnings for empty cells.
pub fn stratified_resplit(
    manifest: &DatasetManifest,
    train_ratio: f64,
    bins: &SizeBins,
    seed: u64,
) -> Result<(DatasetManifest, Vec<String>)> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(invalid(format!("train ratio {train_ratio} not in (0, 1)")));
    }
    manifest.validate()?;
    let classes = manifest.classes();
    let mut cells: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        let k = classes.binary_search(&e.label).expect("label from catalog");
        cells.entry((k, bins.bin_of(e.height))).or_default().push(i);
    }
    let mut warnings = Vec::new();
    for (k, c) in classes.iter().enumerate() {
        for b in 0..bins.count {
            if !cells.contains_key(&(k, b)) {
                warnings.push(format!("class '{c}' has no images in size bin {b}"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: Vec<Vec<usize>> = cells
        .into_values()
        .map(|mut members| {
            members.sort_by(|&a, &b| manifest.entries[a].id.cmp(&manifest.entries[b].id));
            members.shuffle(&mut rng);
            members
        })
        .collect();
    let mut quota: Vec<usize> = cells
        .iter()
        .map(|c| (c.len() as f64 * train_ratio).floor() as usize)
        .collect();
    let target = (manifest.len() as f64 * train_ratio).round() as usize;
    let assigned: usize = quota.iter().sum();
    let mut order: Vec<usize> = (0..cells.len()).collect();
    let frac = |i: usize| cells[i].len() as f64 * train_ratio - quota[i] as f64;
    let keeps_test = |i: usize| quota[i] + 1 < cells[i].len();
    order.sort_by(|&a, &b| {
        keeps_test(b)
            .cmp(&keeps_test(a))
            .then(frac(b).total_cmp(&frac(a)))
            .then(a.cmp(&b))
    });
    let mut extra = target.saturating_sub(assigned);
    for i in order {
        if extra == 0 {
            break;
        }
        if quota[i] < cells[i].len() {
            quota[i] += 1;
            extra -= 1;
        }
    }
    let mut out = manifest.clone();
    for (members, q) in cells.iter_mut().zip(quota) {
        for (pos, &i) in members.iter().enumerate() {
            out.entries[i].split = if pos < q { Split::Train } else { Split::Test };
        }
    }
    Ok((out, warnings))
}
