//! Price-bin tercile labelling and train/test splitting.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::record::{ListingRecord, PopularityLabel};
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_BIN_WIDTH: f64 = 30.0;

/// Per-bin tercile boundaries kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub bin: u64,
    pub lower_price: f64,
    pub count: usize,
    /// `ceil(n/3)`: number of High records.
    pub cut_high: usize,
    /// `ceil(2n/3)`: High plus Medium records.
    pub cut_medium: usize,
    /// Lowest occupancy labelled High.
    pub high_min_occupancy: f64,
    /// Lowest occupancy labelled Medium, if any.
    pub medium_min_occupancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedDataset {
    pub records: Vec<(ListingRecord, PopularityLabel)>,
    pub bin_width: f64,
    pub bins: Vec<BinSummary>,
}

impl StratifiedDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn with_label(&self, label: PopularityLabel) -> impl Iterator<Item = &ListingRecord> {
        self.records.iter().filter(move |(_, l)| *l == label).map(|(r, _)| r)
    }
}

pub fn price_bin(record: &ListingRecord, bin_width: f64) -> u64 {
    (record.price_per_bedroom() / bin_width).floor() as u64
}

/// Occupancy descending, then id ascending.
pub fn popularity_order(a: &ListingRecord, b: &ListingRecord) -> Ordering {
    b.occupancy_rate.partial_cmp(&a.occupancy_rate).unwrap_or(Ordering::Equal).then_with(|| a.id.cmp(&b.id))
}

/// Label for position `rank` among `n` records sorted by [`popularity_order`].
pub fn tercile(rank: usize, n: usize) -> PopularityLabel {
    let cut_high = n.div_ceil(3);
    let cut_medium = (2 * n).div_ceil(3);
    if rank < cut_high {
        PopularityLabel::High
    } else if rank < cut_medium {
        PopularityLabel::Medium
    } else {
        PopularityLabel::Low
    }
}

/// Groups records into fixed-width price-per-bedroom bins and labels the
/// occupancy terciles within each bin. Output is ordered by bin, then by
/// popularity within the bin.
pub fn stratify(records: &[ListingRecord], bin_width: f64) -> Result<StratifiedDataset> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidArgument(format!("bin_width must be positive, got {bin_width}")));
    }
    if records.is_empty() {
        return Err(Error::NoData("cannot stratify an empty record set".into()));
    }
    let mut bins: BTreeMap<u64, Vec<&ListingRecord>> = BTreeMap::new();
    for r in records {
        bins.entry(price_bin(r, bin_width)).or_default().push(r);
    }

    let mut out = Vec::with_capacity(records.len());
    let mut summaries = Vec::with_capacity(bins.len());
    for (bin, mut members) in bins {
        members.sort_by(|a, b| popularity_order(a, b));
        let n = members.len();
        let cut_high = n.div_ceil(3);
        let cut_medium = (2 * n).div_ceil(3);
        summaries.push(BinSummary {
            bin,
            lower_price: bin as f64 * bin_width,
            count: n,
            cut_high,
            cut_medium,
            high_min_occupancy: members[cut_high - 1].occupancy_rate,
            medium_min_occupancy: (cut_medium > cut_high).then(|| members[cut_medium - 1].occupancy_rate),
        });
        out.extend(members.into_iter().enumerate().map(|(rank, r)| (r.clone(), tercile(rank, n))));
    }
    Ok(StratifiedDataset { records: out, bin_width, bins: summaries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset<T> {
    pub train: Vec<T>,
    pub test: Vec<T>,
    pub seed: u64,
    pub ratio: f64,
}

/// Seeded shuffle; the first `round(ratio * n)` items go to train.
pub fn train_test_split<T: Clone>(items: &[T], ratio: f64, seed: u64) -> Result<SplitDataset<T>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio must be in (0,1), got {ratio}")));
    }
    if items.len() < 2 {
        return Err(Error::NoData(format!("need at least 2 items to split, got {}", items.len())));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng::substream(seed, "split"));
    let n_train = (ratio * items.len() as f64).round() as usize;
    let (train, test) = order.split_at(n_train);
    Ok(SplitDataset {
        train: train.iter().map(|&i| items[i].clone()).collect(),
        test: test.iter().map(|&i| items[i].clone()).collect(),
        seed,
        ratio,
    })
}
