//! Listing records and their CSV form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FIELDS: [&str; 7] = ["id", "description", "price", "bedrooms", "bathrooms", "zipcode", "occupancy_rate"];

pub const LABEL_FIELD: &str = "label";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListingRecord {
    pub id: String,
    pub description: String,
    /// Nightly price.
    pub price: f64,
    pub bedrooms: u32,
    pub bathrooms: f64,
    pub zipcode: String,
    /// Fraction of available time the listing was booked.
    pub occupancy_rate: f64,
}

impl ListingRecord {
    /// Price divided by bedroom count; studios (0 bedrooms) count as one.
    pub fn price_per_bedroom(&self) -> f64 {
        price_per_bedroom(self.price, self.bedrooms)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(0.0..=1.0).contains(&self.occupancy_rate) {
            return Err(format!("occupancy_rate {} outside [0,1]", self.occupancy_rate));
        }
        if !(self.price >= 0.0 && self.price.is_finite()) {
            return Err(format!("price {} is negative or not finite", self.price));
        }
        if !(self.bathrooms >= 0.0 && self.bathrooms.is_finite()) {
            return Err(format!("bathrooms {} is negative or not finite", self.bathrooms));
        }
        Ok(())
    }
}

pub fn price_per_bedroom(price: f64, bedrooms: u32) -> f64 {
    price / f64::from(bedrooms.max(1))
}

/// Popularity tercile. Ordered `Low < Medium < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopularityLabel {
    Low,
    Medium,
    High,
}

impl PopularityLabel {
    pub const ALL: [PopularityLabel; 3] = [Self::High, Self::Medium, Self::Low];

    /// Class index used by the classifier: High 0, Medium 1, Low 2.
    pub fn index(self) -> usize {
        match self {
            Self::High => 0,
            Self::Medium => 1,
            Self::Low => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::High => "high",
            Self::Medium => "medium",
            Self::Low => "low",
        }
    }
}

impl fmt::Display for PopularityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PopularityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Self::High),
            "medium" => Ok(Self::Medium),
            "low" => Ok(Self::Low),
            other => Err(Error::Format(format!("unknown label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub rows_read: usize,
    pub rows_rejected: usize,
    pub reasons: Vec<String>,
}

impl ParseReport {
    fn reject(&mut self, row: usize, reason: impl fmt::Display) {
        self.rows_rejected += 1;
        self.reasons.push(format!("row {row}: {reason}"));
    }
}

struct Columns {
    fields: [usize; 7],
    label: Option<usize>,
}

fn locate_columns(headers: &csv::StringRecord) -> Result<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut fields = [0; 7];
    for (slot, name) in fields.iter_mut().zip(FIELDS) {
        *slot = find(name).ok_or_else(|| Error::Format(format!("header is missing `{name}`")))?;
    }
    Ok(Columns { fields, label: find(LABEL_FIELD) })
}

fn field<T: FromStr>(row: &csv::StringRecord, col: usize, name: &str) -> std::result::Result<T, String> {
    let raw = row.get(col).ok_or_else(|| format!("missing `{name}`"))?;
    raw.trim().parse().map_err(|_| format!("cannot parse `{name}` from {raw:?}"))
}

fn parse_record(row: &csv::StringRecord, cols: &Columns) -> std::result::Result<ListingRecord, String> {
    let [id, desc, price, bedrooms, bathrooms, zipcode, occ] = cols.fields;
    let record = ListingRecord {
        id: field(row, id, "id")?,
        description: field(row, desc, "description")?,
        price: field(row, price, "price")?,
        bedrooms: field(row, bedrooms, "bedrooms")?,
        bathrooms: field(row, bathrooms, "bathrooms")?,
        zipcode: field(row, zipcode, "zipcode")?,
        occupancy_rate: field(row, occ, "occupancy_rate")?,
    };
    record.validate()?;
    Ok(record)
}

type Rows = Vec<(ListingRecord, Option<PopularityLabel>)>;

fn parse_rows(csv_bytes: &[u8], want_label: bool) -> Result<(Rows, ParseReport)> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(csv_bytes);
    let cols = locate_columns(reader.headers()?)?;
    if want_label && cols.label.is_none() {
        return Err(Error::Format(format!("header is missing `{LABEL_FIELD}`")));
    }
    let width = reader.headers()?.len();
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        report.rows_read += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.reject(row_no, e);
                continue;
            }
        };
        if row.len() != width {
            report.reject(row_no, format!("expected {width} fields, found {}", row.len()));
            continue;
        }
        let label = match cols.label.filter(|_| want_label) {
            Some(c) => match row.get(c).unwrap_or("").parse::<PopularityLabel>() {
                Ok(l) => Some(l),
                Err(e) => {
                    report.reject(row_no, e);
                    continue;
                }
            },
            None => None,
        };
        match parse_record(&row, &cols) {
            Ok(r) => out.push((r, label)),
            Err(reason) => report.reject(row_no, reason),
        }
    }
    Ok((out, report))
}

/// Parses listing CSV. Invalid rows are skipped and described in the
/// report; a header without the seven listing fields is an error.
pub fn parse_listings(csv_bytes: &[u8]) -> Result<(Vec<ListingRecord>, ParseReport)> {
    let (rows, report) = parse_rows(csv_bytes, false)?;
    Ok((rows.into_iter().map(|(r, _)| r).collect(), report))
}

/// Parses a stratified CSV (listing fields plus a `label` column).
pub fn parse_labeled(csv_bytes: &[u8]) -> Result<(Vec<(ListingRecord, PopularityLabel)>, ParseReport)> {
    let (rows, report) = parse_rows(csv_bytes, true)?;
    Ok((rows.into_iter().map(|(r, l)| (r, l.expect("label column checked"))).collect(), report))
}

/// Writes records as CSV, with a `label` column when labels are given.
pub fn write_csv<'a, I>(rows: I, with_label: bool) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = (&'a ListingRecord, Option<PopularityLabel>)>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = FIELDS.to_vec();
    if with_label {
        header.push(LABEL_FIELD);
    }
    w.write_record(&header)?;
    for (r, label) in rows {
        let mut fields = vec![
            r.id.clone(),
            r.description.clone(),
            r.price.to_string(),
            r.bedrooms.to_string(),
            r.bathrooms.to_string(),
            r.zipcode.clone(),
            r.occupancy_rate.to_string(),
        ];
        if with_label {
            fields.push(label.map(|l| l.as_str().to_string()).unwrap_or_default());
        }
        w.write_record(&fields)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}
