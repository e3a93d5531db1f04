//! Label spaces for the two classification tasks.
//!
//! SIC labels are the two-digit major group of a four-digit SIC code. Healthcare
//! labels are provider groupings, reached through a bundled code table so that
//! new NUCC codes only need a data change.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TaxonomyError;
use crate::util::sha256_hex;

const SIC_CATEGORIES: &str = include_str!("../../data/sic_categories.csv");
const HEALTHCARE_CODES: &str = include_str!("../../data/healthcare_codes.csv");

pub const SIC_CATEGORY_COUNT: usize = 27;
pub const HEALTHCARE_CATEGORY_COUNT: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskId {
    Sic,
    Healthcare,
}

impl TaskId {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Sic => "sic",
            TaskId::Healthcare => "healthcare",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sic" => Ok(TaskId::Sic),
            "healthcare" | "hc" => Ok(TaskId::Healthcare),
            other => Err(TaxonomyError::UnknownTask(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CategoryLabel {
    pub id: String,
    pub display_name: String,
}

/// The ordered category list of a task plus the raw-code mapping into it.
///
/// Category order is significant: it fixes model row order, argmax
/// tie-breaking and the row order of every per-category report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyScheme {
    task: TaskId,
    categories: Vec<CategoryLabel>,
    // raw code -> index into `categories`; empty for SIC (prefix rule)
    code_map: BTreeMap<String, usize>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Deserialize)]
struct CategoryRow {
    category_id: String,
    category_name: String,
}

#[derive(Debug, Deserialize)]
struct CodeRow {
    code: String,
    category_id: String,
    category_name: String,
}

impl TaxonomyScheme {
    /// Validates and assembles a scheme.
    pub fn new(
        task: TaskId,
        categories: Vec<CategoryLabel>,
        code_map: BTreeMap<String, usize>,
    ) -> Result<Self, TaxonomyError> {
        let expected = match task {
            TaskId::Sic => SIC_CATEGORY_COUNT,
            TaskId::Healthcare => HEALTHCARE_CATEGORY_COUNT,
        };
        if categories.len() != expected {
            return Err(TaxonomyError::InvalidScheme(format!(
                "{task} scheme needs {expected} categories, got {}",
                categories.len()
            )));
        }
        let mut index = HashMap::with_capacity(categories.len());
        for (i, c) in categories.iter().enumerate() {
            if task == TaskId::Sic && !is_ascii_digits(&c.id, 2) {
                return Err(TaxonomyError::InvalidScheme(format!(
                    "SIC category id {:?} is not two ASCII digits",
                    c.id
                )));
            }
            if c.id.is_empty() || index.insert(c.id.clone(), i).is_some() {
                return Err(TaxonomyError::InvalidScheme(format!(
                    "duplicate or empty category id {:?}",
                    c.id
                )));
            }
        }
        if let Some((code, _)) = code_map.iter().find(|(_, &i)| i >= categories.len()) {
            return Err(TaxonomyError::InvalidScheme(format!(
                "code {code:?} maps outside the category list"
            )));
        }
        Ok(Self {
            task,
            categories,
            code_map,
            index,
        })
    }

    /// The bundled 27-category SIC scheme.
    pub fn sic() -> Self {
        Self::sic_from_reader(SIC_CATEGORIES.as_bytes()).expect("bundled SIC table is valid")
    }

    pub fn sic_from_reader<R: Read>(reader: R) -> Result<Self, TaxonomyError> {
        let mut categories = Vec::new();
        for row in csv::Reader::from_reader(reader).deserialize::<CategoryRow>() {
            let row = row?;
            categories.push(CategoryLabel {
                id: row.category_id,
                display_name: row.category_name,
            });
        }
        Self::new(TaskId::Sic, categories, BTreeMap::new())
    }

    /// The bundled healthcare scheme and code table.
    pub fn healthcare() -> Self {
        Self::healthcare_from_reader(HEALTHCARE_CODES.as_bytes())
            .expect("bundled healthcare table is valid")
    }

    pub fn healthcare_from_table(path: impl AsRef<Path>) -> Result<Self, TaxonomyError> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::healthcare_from_reader(file)
    }

    /// Reads a `code,category_id,category_name` table. Categories are ordered
    /// by first appearance.
    pub fn healthcare_from_reader<R: Read>(reader: R) -> Result<Self, TaxonomyError> {
        let mut categories: Vec<CategoryLabel> = Vec::new();
        let mut by_id: HashMap<String, usize> = HashMap::new();
        let mut code_map = BTreeMap::new();
        for row in csv::Reader::from_reader(reader).deserialize::<CodeRow>() {
            let row = row?;
            if !is_healthcare_shape(&row.code) {
                return Err(TaxonomyError::InvalidScheme(format!(
                    "table code {:?} is not 10 alphanumeric characters",
                    row.code
                )));
            }
            let idx = match by_id.get(&row.category_id) {
                Some(&i) => {
                    if categories[i].display_name != row.category_name {
                        return Err(TaxonomyError::InvalidScheme(format!(
                            "category {:?} has conflicting names",
                            row.category_id
                        )));
                    }
                    i
                }
                None => {
                    categories.push(CategoryLabel {
                        id: row.category_id.clone(),
                        display_name: row.category_name,
                    });
                    by_id.insert(row.category_id, categories.len() - 1);
                    categories.len() - 1
                }
            };
            if code_map.insert(row.code.clone(), idx).is_some() {
                return Err(TaxonomyError::InvalidScheme(format!(
                    "code {:?} listed twice",
                    row.code
                )));
            }
        }
        Self::new(TaskId::Healthcare, categories, code_map)
    }

    pub fn for_task(task: TaskId) -> Self {
        match task {
            TaskId::Sic => Self::sic(),
            TaskId::Healthcare => Self::healthcare(),
        }
    }

    pub fn task(&self) -> TaskId {
        self.task
    }

    pub fn categories(&self) -> &[CategoryLabel] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.id.clone()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&CategoryLabel> {
        self.index_of(id).map(|i| &self.categories[i])
    }

    pub fn code_map(&self) -> &BTreeMap<String, usize> {
        &self.code_map
    }

    /// Maps a raw 10-character taxonomy code to its category, if tabled.
    pub fn category_for_raw_code(&self, code: &str) -> Option<&CategoryLabel> {
        self.code_map.get(code).map(|&i| &self.categories[i])
    }

    /// SIC: the category named by the first two digits of a four-digit code.
    pub fn normalize_sic(&self, code: &str) -> Result<&CategoryLabel, TaxonomyError> {
        let prefix = sic_prefix(code)?;
        self.get(prefix).ok_or_else(|| TaxonomyError::UnknownCategory {
            code: code.to_string(),
            prefix: prefix.to_string(),
        })
    }

    pub fn lookup_healthcare_category(&self, code: &str) -> Result<&CategoryLabel, TaxonomyError> {
        if !is_healthcare_shape(code) {
            return Err(TaxonomyError::MalformedCode {
                task: TaskId::Healthcare,
                code: code.to_string(),
            });
        }
        self.category_for_raw_code(code)
            .ok_or_else(|| TaxonomyError::UnknownCode(code.to_string()))
    }

    /// Resolves a dataset raw code using this scheme's task rule.
    pub fn label_for_code(&self, code: &str) -> Result<&CategoryLabel, TaxonomyError> {
        match self.task {
            TaskId::Sic => self.normalize_sic(code),
            TaskId::Healthcare => self.lookup_healthcare_category(code),
        }
    }

    /// Stable digest of task, category list and code table.
    pub fn fingerprint(&self) -> String {
        let mut buf = String::new();
        buf.push_str(self.task.as_str());
        for c in &self.categories {
            buf.push('\u{1f}');
            buf.push_str(&c.id);
            buf.push('\u{1e}');
            buf.push_str(&c.display_name);
        }
        for (code, idx) in &self.code_map {
            buf.push('\u{1d}');
            buf.push_str(code);
            buf.push('=');
            buf.push_str(&self.categories[*idx].id);
        }
        sha256_hex(buf.as_bytes())
    }
}

/// Returns the two-digit major group of a four-digit SIC code. Codes are
/// handled as strings throughout so leading zeros survive.
pub fn sic_prefix(code: &str) -> Result<&str, TaxonomyError> {
    if !is_ascii_digits(code, 4) {
        return Err(TaxonomyError::MalformedCode {
            task: TaskId::Sic,
            code: code.to_string(),
        });
    }
    Ok(&code[..2])
}

fn is_ascii_digits(s: &str, len: usize) -> bool {
    s.len() == len && s.bytes().all(|b| b.is_ascii_digit())
}

pub(crate) fn is_healthcare_shape(s: &str) -> bool {
    s.len() == 10 && s.bytes().all(|b| b.is_ascii_alphanumeric())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bundled_schemes_have_expected_sizes() {
        assert_eq!(TaxonomyScheme::sic().len(), 27);
        assert_eq!(TaxonomyScheme::healthcare().len(), 17);
    }

    #[test]
    fn sic_display_names_follow_category_table() {
        let s = TaxonomyScheme::sic();
        assert_eq!(s.get("36").unwrap().display_name, "Electronic");
        assert_eq!(s.get("67").unwrap().display_name, "Holding and Other Investment Offices");
        // zero-based positions used when discussing misclassifications
        assert_eq!(s.index_of("36"), Some(7));
        assert_eq!(s.index_of("38"), Some(9));
        assert_eq!(s.index_of("65"), Some(20));
        assert_eq!(s.index_of("67"), Some(21));
    }

    #[test]
    fn normalize_sic_examples() {
        let s = TaxonomyScheme::sic();
        assert_eq!(s.normalize_sic("2000").unwrap().id, "20");
        assert_eq!(s.normalize_sic("1311").unwrap().id, "13");
        assert!(matches!(
            s.normalize_sic("ABCD"),
            Err(TaxonomyError::MalformedCode { .. })
        ));
        assert!(matches!(
            s.normalize_sic("201"),
            Err(TaxonomyError::MalformedCode { .. })
        ));
    }

    #[test]
    fn leading_zero_prefix_is_kept() {
        assert_eq!(sic_prefix("0116").unwrap(), "01");
        // agricultural groups are not among the 27 categories
        let err = TaxonomyScheme::sic().normalize_sic("0116").unwrap_err();
        match err {
            TaxonomyError::UnknownCategory { prefix, .. } => assert_eq!(prefix, "01"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn healthcare_lookup_examples() {
        let s = TaxonomyScheme::healthcare();
        assert_eq!(
            s.lookup_healthcare_category("207RC0000X").unwrap().display_name,
            "Allopathic & Osteopathic Physicians"
        );
        assert!(matches!(
            s.lookup_healthcare_category(""),
            Err(TaxonomyError::MalformedCode { .. })
        ));
        assert!(matches!(
            s.lookup_healthcare_category("ZZZZZZZZZZ"),
            Err(TaxonomyError::UnknownCode(_))
        ));
    }

    #[test]
    fn rejects_wrong_category_count() {
        let cats = vec![CategoryLabel {
            id: "10".into(),
            display_name: "Metal Mining".into(),
        }];
        assert!(matches!(
            TaxonomyScheme::new(TaskId::Sic, cats, BTreeMap::new()),
            Err(TaxonomyError::InvalidScheme(_))
        ));
    }

    #[test]
    fn fingerprints_differ_between_tasks() {
        assert_ne!(
            TaxonomyScheme::sic().fingerprint(),
            TaxonomyScheme::healthcare().fingerprint()
        );
        assert_eq!(TaxonomyScheme::sic().fingerprint(), TaxonomyScheme::sic().fingerprint());
    }

    proptest! {
        #[test]
        fn prefix_rule_holds_for_all_valid_codes(n in 0u32..10000) {
            let s = TaxonomyScheme::sic();
            let code = format!("{n:04}");
            match s.normalize_sic(&code) {
                Ok(label) => prop_assert_eq!(&label.id, &code[..2]),
                Err(TaxonomyError::UnknownCategory { prefix, .. }) => {
                    prop_assert!(s.get(&prefix).is_none());
                }
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }
    }
}
