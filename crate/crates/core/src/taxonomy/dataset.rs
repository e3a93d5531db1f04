use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scheme::{CategoryLabel, TaxonomyScheme};
use super::TaxonomyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    /// Train and dev instances carry gold labels into corpora; test does not.
    pub fn is_labeled(self) -> bool {
        matches!(self, Split::Train | Split::Dev)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub entity_id: String,
    /// Verbatim, case preserved.
    pub name: String,
    pub raw_code: String,
    pub label: CategoryLabel,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    /// 2,700 / 900 / 1,800 out of 5,400.
    fn default() -> Self {
        Self {
            train: 0.5,
            dev: 1.0 / 6.0,
            test: 1.0 / 3.0,
        }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<(), TaxonomyError> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r <= 0.0)
            || ((parts.iter().sum::<f64>()) - 1.0).abs() > 1e-9
        {
            return Err(TaxonomyError::BadRatios(parts));
        }
        Ok(())
    }

    /// Train and test take `floor(n * ratio)`; dev takes what remains.
    pub fn counts(&self, n: usize) -> Result<SplitCounts, TaxonomyError> {
        self.validate()?;
        // absorbs representation error such as (1/3) * 5400 = 1799.9999...
        let floor = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
        let train = floor(self.train).min(n);
        let test = floor(self.test).min(n - train);
        Ok(SplitCounts {
            train,
            dev: n - train - test,
            test,
        })
    }
}

/// Assigns splits by a seeded shuffle followed by contiguous train/dev/test
/// blocks. Record order is left untouched.
pub fn split_dataset(
    records: &mut [EntityRecord],
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitCounts, TaxonomyError> {
    let counts = ratios.counts(records.len())?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    for (pos, &idx) in order.iter().enumerate() {
        records[idx].split = if pos < counts.train {
            Split::Train
        } else if pos < counts.train + counts.dev {
            Split::Dev
        } else {
            Split::Test
        };
    }
    Ok(counts)
}

/// How to assign splits when the file leaves the split column empty.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub ratios: SplitRatios,
    pub seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            ratios: SplitRatios::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Deserialize)]
struct DatasetRow {
    entity_id: String,
    name: String,
    raw_code: String,
    #[serde(default)]
    split: Option<String>,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Debug, Serialize)]
struct DatasetRowOut<'a> {
    entity_id: &'a str,
    name: &'a str,
    raw_code: &'a str,
    split: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scheme: TaxonomyScheme,
    pub records: Vec<EntityRecord>,
}

impl Dataset {
    pub fn load(path: impl AsRef<Path>, scheme: &TaxonomyScheme) -> Result<Self, TaxonomyError> {
        Self::load_with(path, scheme, LoadOptions::default())
    }

    pub fn load_with(
        path: impl AsRef<Path>,
        scheme: &TaxonomyScheme,
        opts: LoadOptions,
    ) -> Result<Self, TaxonomyError> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_reader(file, scheme, opts)
    }

    /// Parses the `entity_id,name,raw_code,split` CSV. Either every row names
    /// its split or none does; in the latter case splits come from `opts`.
    pub fn from_reader<R: Read>(
        reader: R,
        scheme: &TaxonomyScheme,
        opts: LoadOptions,
    ) -> Result<Self, TaxonomyError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if headers.is_empty() || headers.iter().all(str::is_empty) {
            return Err(parse_err(1, "missing header row"));
        }
        for required in ["entity_id", "name", "raw_code"] {
            if !headers.iter().any(|h| h == required) {
                return Err(parse_err(1, format!("missing column {required:?}")));
            }
        }

        let mut records = Vec::new();
        let mut seen = HashSet::new();
        let mut with_split = 0usize;
        for result in rdr.records() {
            let raw = result.map_err(|e| {
                let line = e.position().map_or(records.len() + 2, |p| p.line() as usize);
                parse_err(line, e.to_string())
            })?;
            let row_no = raw.position().map_or(records.len() + 2, |p| p.line() as usize);
            let row: DatasetRow = raw
                .deserialize(Some(&headers))
                .map_err(|e| parse_err(row_no, e.to_string()))?;
            if row.entity_id.is_empty() {
                return Err(parse_err(row_no, "empty entity_id"));
            }
            if row.name.trim().is_empty() {
                return Err(parse_err(row_no, "empty name"));
            }
            let label = scheme
                .label_for_code(&row.raw_code)
                .map_err(|e| TaxonomyError::InvalidRow {
                    row: row_no,
                    source: Box::new(e),
                })?
                .clone();
            if let Some(given) = row.label.as_deref().filter(|l| !l.is_empty()) {
                if given != label.id {
                    return Err(TaxonomyError::LabelMismatch {
                        row: row_no,
                        given: given.to_string(),
                        derived: label.id,
                    });
                }
            }
            let split = match row.split.as_deref().map(str::trim).filter(|s| !s.is_empty()) {
                Some(s) => {
                    with_split += 1;
                    s.parse::<Split>().map_err(|m| parse_err(row_no, m))?
                }
                None => Split::Train,
            };
            if !seen.insert(row.entity_id.clone()) {
                return Err(TaxonomyError::DuplicateEntity {
                    row: row_no,
                    entity_id: row.entity_id,
                });
            }
            records.push(EntityRecord {
                entity_id: row.entity_id,
                name: row.name,
                raw_code: row.raw_code,
                label,
                split,
            });
        }

        if with_split != 0 && with_split != records.len() {
            return Err(TaxonomyError::MixedSplits {
                with_split,
                total: records.len(),
            });
        }
        if with_split == 0 {
            split_dataset(&mut records, opts.ratios, opts.seed)?;
        }
        Ok(Self {
            scheme: scheme.clone(),
            records,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TaxonomyError> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(DatasetRowOut {
                entity_id: &r.entity_id,
                name: &r.name,
                raw_code: &r.raw_code,
                split: r.split.as_str(),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TaxonomyError> {
        let file = std::fs::File::create(path.as_ref())?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn split_counts(&self) -> SplitCounts {
        let mut counts = SplitCounts::default();
        for r in &self.records {
            match r.split {
                Split::Train => counts.train += 1,
                Split::Dev => counts.dev += 1,
                Split::Test => counts.test += 1,
            }
        }
        counts
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &EntityRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn get(&self, entity_id: &str) -> Option<&EntityRecord> {
        self.records.iter().find(|r| r.entity_id == entity_id)
    }
}

fn parse_err(row: usize, message: impl Into<String>) -> TaxonomyError {
    TaxonomyError::Parse {
        row,
        message: message.into(),
    }
}
