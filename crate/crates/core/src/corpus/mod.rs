//! Listing ingestion, tokenisation, vocabulary and popularity labelling.

pub mod record;
pub mod stratify;
pub mod synthetic;
pub mod vocab;

pub use record::{
    parse_labeled, parse_listings, price_per_bedroom, write_csv, ListingRecord, ParseReport, PopularityLabel,
};
pub use stratify::{stratify, train_test_split, BinSummary, SplitDataset, StratifiedDataset, DEFAULT_BIN_WIDTH};
pub use synthetic::{generate_labeled, generate_synthetic_corpus, SyntheticSpec};
pub use vocab::{tokenize, Vocabulary, OOV_TOKEN};
