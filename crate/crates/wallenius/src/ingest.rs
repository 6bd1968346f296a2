//! Converting raw preference data into frequency datasets.
//!
//! Two protocols are supported. Ratings tables (user, item, rating) are
//! thresholded: each user's draw is the set of items they rated at or above
//! the threshold, counted per category. Preference lists (respondent, item)
//! are counted directly: each respondent's draw is their list.
//!
//! Items belong to categories through a category map. An item carrying
//! several categories is resolved to the one appearing earliest in a
//! priority order supplied alongside the map.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::abc::{AbcError, Dataset};
use crate::urn::FrequencyVector;

/// Category map for the 2015 ISI "Statistics and Probability" journal list,
/// grouped into five research areas.
pub const JOURNALS_FIXTURE: &str = include_str!("../fixtures/journal_categories.csv");

/// Genre priority order for movie data, least general genre first.
pub const GENRE_PRIORITY_FIXTURE: &str = include_str!("../fixtures/genre_priority.txt");

/// Default rating scale: 5 stars with half-star increments.
pub const DEFAULT_RATING_SCALE: (f64, f64) = (0.5, 5.0);

/// Preference lists outside these bounds are reported as warnings.
pub const PREFERENCE_LIST_BOUNDS: (usize, usize) = (10, 20);

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: file has no data rows")]
    Empty { path: String },
    #[error("line {line}: expected {expected} fields, got {actual}")]
    FieldCount {
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("duplicate item id {item:?}")]
    DuplicateItem { item: String },
    #[error("item {item:?} maps to multiple categories but no priority order was given")]
    AmbiguousItem { item: String },
    #[error("category name {name:?} contains a comma")]
    CategoryNameComma { name: String },
    #[error("priority order is not a permutation of the map categories: {reason}")]
    BadPriorityOrder { reason: String },
    #[error("unmapped item id {item:?}")]
    UnmappedItem { item: String },
    #[error("respondent {respondent:?} lists item {item:?} twice")]
    DuplicateListEntry { respondent: String, item: String },
    #[error("respondent {respondent:?} has an empty list")]
    EmptyList { respondent: String },
    #[error("rating {rating} for user {user:?}, item {item:?} is outside the scale [{lo}, {hi}]")]
    RatingOutOfScale {
        user: String,
        item: String,
        rating: f64,
        lo: f64,
        hi: f64,
    },
    #[error("threshold {threshold} is outside the rating scale [{lo}, {hi}]")]
    InvalidThreshold { threshold: f64, lo: f64, hi: f64 },
    #[error("every user fell below the rating threshold")]
    AllUsersDropped,
    #[error(transparent)]
    Dataset(#[from] AbcError),
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// An ordered set of categories plus the item -> category assignment.
///
/// Category order is first appearance in the map source; it fixes the
/// component order of every dataset built from the map.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMap {
    categories: Vec<String>,
    item_to_category: HashMap<String, usize>,
    priority_order: Option<Vec<String>>,
}

impl CategoryMap {
    /// Parses a map from `item,category` CSV text, resolving multi-category
    /// items through `priority` (one category per line, highest priority
    /// first) when given.
    pub fn from_csv_str(map_csv: &str, priority: Option<&str>) -> Result<Self, IngestError> {
        let mut categories: Vec<String> = Vec::new();
        let mut category_index: HashMap<String, usize> = HashMap::new();
        // all categories an item was listed under, in file order
        let mut raw: Vec<(String, Vec<usize>)> = Vec::new();
        let mut raw_index: HashMap<String, usize> = HashMap::new();

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(map_csv.as_bytes());
        let mut rows = 0usize;
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|source| IngestError::Csv {
                path: "<category map>".into(),
                source,
            })?;
            if record.len() != 2 {
                return Err(IngestError::FieldCount {
                    line: line + 2,
                    expected: 2,
                    actual: record.len(),
                });
            }
            rows += 1;
            let item = record[0].trim().to_string();
            let category = record[1].trim().to_string();
            if item.is_empty() || category.is_empty() {
                return Err(IngestError::Malformed {
                    line: line + 2,
                    reason: "empty item or category".into(),
                });
            }
            if category.contains(',') {
                return Err(IngestError::CategoryNameComma { name: category });
            }
            let cat_idx = *category_index.entry(category.clone()).or_insert_with(|| {
                categories.push(category.clone());
                categories.len() - 1
            });
            match raw_index.get(&item) {
                Some(&i) => {
                    if raw[i].1.contains(&cat_idx) {
                        return Err(IngestError::DuplicateItem { item });
                    }
                    raw[i].1.push(cat_idx);
                }
                None => {
                    raw_index.insert(item.clone(), raw.len());
                    raw.push((item, vec![cat_idx]));
                }
            }
        }
        if rows == 0 {
            return Err(IngestError::Empty {
                path: "<category map>".into(),
            });
        }

        let priority_order = match priority {
            None => None,
            Some(text) => {
                let order: Vec<String> = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect();
                let mut seen = HashMap::new();
                for name in &order {
                    if seen.insert(name.clone(), ()).is_some() {
                        return Err(IngestError::BadPriorityOrder {
                            reason: format!("category {name:?} repeated"),
                        });
                    }
                    if !category_index.contains_key(name) {
                        return Err(IngestError::BadPriorityOrder {
                            reason: format!("category {name:?} not present in the map"),
                        });
                    }
                }
                for name in &categories {
                    if !seen.contains_key(name) {
                        return Err(IngestError::BadPriorityOrder {
                            reason: format!("map category {name:?} missing from the order"),
                        });
                    }
                }
                Some(order)
            }
        };

        // rank of each category in the priority order, if any
        let rank: Option<HashMap<usize, usize>> = priority_order.as_ref().map(|order| {
            order
                .iter()
                .enumerate()
                .map(|(r, name)| (category_index[name], r))
                .collect()
        });

        let mut item_to_category = HashMap::new();
        for (item, cats) in raw {
            let resolved = if cats.len() == 1 {
                cats[0]
            } else {
                match &rank {
                    None => return Err(IngestError::AmbiguousItem { item }),
                    Some(rank) => *cats
                        .iter()
                        .min_by_key(|&&c| rank[&c])
                        .expect("non-empty category list"),
                }
            };
            item_to_category.insert(item, resolved);
        }

        Ok(CategoryMap {
            categories,
            item_to_category,
            priority_order,
        })
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn num_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn priority_order(&self) -> Option<&[String]> {
        self.priority_order.as_deref()
    }

    /// Resolved category index of an item.
    pub fn category_of(&self, item: &str) -> Option<usize> {
        self.item_to_category.get(item).copied()
    }

    /// Items per category: the urn multiplicities implied by the map.
    pub fn multiplicities(&self) -> Vec<u64> {
        let mut m = vec![0u64; self.categories.len()];
        for &idx in self.item_to_category.values() {
            m[idx] += 1;
        }
        m
    }

    pub fn num_items(&self) -> usize {
        self.item_to_category.len()
    }
}

/// Loads a category map from an `item,category` CSV file, plus an optional
/// priority-order text file.
pub fn load_category_map(
    map_path: &Path,
    priority_path: Option<&Path>,
) -> Result<CategoryMap, IngestError> {
    let map_csv = fs::read_to_string(map_path).map_err(|e| io_err(map_path, e))?;
    let priority = match priority_path {
        None => None,
        Some(p) => Some(fs::read_to_string(p).map_err(|e| io_err(p, e))?),
    };
    CategoryMap::from_csv_str(&map_csv, priority.as_deref())
}

/// The bundled journal category map (124 items over 5 categories).
pub fn journals_category_map() -> CategoryMap {
    CategoryMap::from_csv_str(JOURNALS_FIXTURE, None).expect("bundled journal fixture is valid")
}

/// One rating event on a declared scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
}

/// Reads `user,item,rating,timestamp` CSV (timestamp ignored), validating
/// every rating against the scale bounds.
pub fn load_ratings(path: &Path, scale: (f64, f64)) -> Result<Vec<RatingRecord>, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_ratings_str(&text, scale)
}

pub fn parse_ratings_str(text: &str, scale: (f64, f64)) -> Result<Vec<RatingRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|source| IngestError::Csv {
            path: "<ratings>".into(),
            source,
        })?;
        if record.len() < 3 {
            return Err(IngestError::FieldCount {
                line: line + 2,
                expected: 3,
                actual: record.len(),
            });
        }
        let user = record[0].trim().to_string();
        let item = record[1].trim().to_string();
        let rating: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| IngestError::Malformed {
                line: line + 2,
                reason: format!("unparseable rating {:?}", &record[2]),
            })?;
        if rating < scale.0 || rating > scale.1 {
            return Err(IngestError::RatingOutOfScale {
                user,
                item,
                rating,
                lo: scale.0,
                hi: scale.1,
            });
        }
        out.push(RatingRecord { user, item, rating });
    }
    if out.is_empty() {
        return Err(IngestError::Empty {
            path: "<ratings>".into(),
        });
    }
    Ok(out)
}

/// A dataset plus bookkeeping about what ingestion had to discard or flag.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub dataset: Dataset,
    /// Users whose every rating fell below the threshold (ratings protocol).
    pub dropped_users: usize,
    /// Respondents whose list length fell outside the expected bounds
    /// (preference-list protocol).
    pub out_of_bounds_lists: usize,
}

/// Thresholds ratings into per-user category counts of well-rated items.
///
/// Each user contributes one observation: the number of items they rated at
/// or above `threshold` in each category. Users with no such item carry no
/// draw and are dropped (counted in the outcome). The urn multiplicities are
/// the per-category item totals of the map.
pub fn ratings_to_frequencies(
    records: &[RatingRecord],
    map: &CategoryMap,
    threshold: f64,
    scale: (f64, f64),
) -> Result<IngestOutcome, IngestError> {
    if threshold < scale.0 || threshold > scale.1 {
        return Err(IngestError::InvalidThreshold {
            threshold,
            lo: scale.0,
            hi: scale.1,
        });
    }
    let c = map.num_categories();
    // per-user counts in first-appearance order
    let mut user_order: Vec<String> = Vec::new();
    let mut user_counts: HashMap<String, Vec<u64>> = HashMap::new();
    for record in records {
        let cat = map
            .category_of(&record.item)
            .ok_or_else(|| IngestError::UnmappedItem {
                item: record.item.clone(),
            })?;
        let counts = user_counts.entry(record.user.clone()).or_insert_with(|| {
            user_order.push(record.user.clone());
            vec![0u64; c]
        });
        if record.rating >= threshold {
            counts[cat] += 1;
        }
    }
    let mut observations = Vec::new();
    let mut dropped_users = 0usize;
    for user in &user_order {
        let counts = &user_counts[user];
        if counts.iter().all(|&v| v == 0) {
            dropped_users += 1;
        } else {
            observations.push(FrequencyVector::new(counts.clone()));
        }
    }
    if observations.is_empty() {
        return Err(IngestError::AllUsersDropped);
    }
    let dataset = Dataset::with_categories(
        observations,
        map.multiplicities(),
        map.categories().to_vec(),
    )?;
    Ok(IngestOutcome {
        dataset,
        dropped_users,
        out_of_bounds_lists: 0,
    })
}

/// Turns per-respondent item lists into category counts, `n_h` being the
/// list length. List lengths outside [`PREFERENCE_LIST_BOUNDS`] are flagged,
/// not rejected, so surveys with other rules still load.
pub fn preference_lists_to_frequencies(
    lists: &[(String, Vec<String>)],
    map: &CategoryMap,
) -> Result<IngestOutcome, IngestError> {
    let c = map.num_categories();
    let mut observations = Vec::with_capacity(lists.len());
    let mut out_of_bounds_lists = 0usize;
    for (respondent, items) in lists {
        if items.is_empty() {
            return Err(IngestError::EmptyList {
                respondent: respondent.clone(),
            });
        }
        let mut seen: HashMap<&str, ()> = HashMap::new();
        let mut counts = vec![0u64; c];
        for item in items {
            if seen.insert(item.as_str(), ()).is_some() {
                return Err(IngestError::DuplicateListEntry {
                    respondent: respondent.clone(),
                    item: item.clone(),
                });
            }
            let cat = map
                .category_of(item)
                .ok_or_else(|| IngestError::UnmappedItem { item: item.clone() })?;
            counts[cat] += 1;
        }
        if items.len() < PREFERENCE_LIST_BOUNDS.0 || items.len() > PREFERENCE_LIST_BOUNDS.1 {
            out_of_bounds_lists += 1;
        }
        observations.push(FrequencyVector::new(counts));
    }
    let dataset = Dataset::with_categories(
        observations,
        map.multiplicities(),
        map.categories().to_vec(),
    )?;
    Ok(IngestOutcome {
        dataset,
        dropped_users: 0,
        out_of_bounds_lists,
    })
}

/// Reads `respondent,item` CSV into per-respondent lists, respondents in
/// first-appearance order.
pub fn load_preference_lists(path: &Path) -> Result<Vec<(String, Vec<String>)>, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_preference_lists_str(&text)
}

pub fn parse_preference_lists_str(text: &str) -> Result<Vec<(String, Vec<String>)>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut order: Vec<String> = Vec::new();
    let mut lists: HashMap<String, Vec<String>> = HashMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|source| IngestError::Csv {
            path: "<preference lists>".into(),
            source,
        })?;
        if record.len() != 2 {
            return Err(IngestError::FieldCount {
                line: line + 2,
                expected: 2,
                actual: record.len(),
            });
        }
        let respondent = record[0].trim().to_string();
        let item = record[1].trim().to_string();
        lists
            .entry(respondent.clone())
            .or_insert_with(|| {
                order.push(respondent.clone());
                Vec::new()
            })
            .push(item);
    }
    if order.is_empty() {
        return Err(IngestError::Empty {
            path: "<preference lists>".into(),
        });
    }
    Ok(order
        .into_iter()
        .map(|r| {
            let items = lists.remove(&r).expect("respondent recorded");
            (r, items)
        })
        .collect())
}

/// Serialises a dataset in the frequency CSV format: a `#m=` multiplicity
/// line, a `n,<categories...>` header, one respondent per row.
pub fn dataset_to_frequency_csv(dataset: &Dataset) -> String {
    let mut out = String::new();
    out.push_str("#m=");
    let m: Vec<String> = dataset
        .multiplicities()
        .iter()
        .map(u64::to_string)
        .collect();
    out.push_str(&m.join(","));
    out.push('\n');
    out.push_str("n,");
    out.push_str(&dataset.categories().join(","));
    out.push('\n');
    for obs in dataset.observations() {
        out.push_str(&obs.draw_size().to_string());
        for &x in obs.counts() {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_frequency_csv(dataset: &Dataset, path: &Path) -> Result<(), IngestError> {
    fs::write(path, dataset_to_frequency_csv(dataset)).map_err(|e| io_err(path, e))
}

pub fn read_frequency_csv(path: &Path) -> Result<Dataset, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    dataset_from_frequency_csv(&text)
}

pub fn dataset_from_frequency_csv(text: &str) -> Result<Dataset, IngestError> {
    let mut lines = text.lines().enumerate();
    let (_, m_line) = lines.next().ok_or_else(|| IngestError::Empty {
        path: "<frequency csv>".into(),
    })?;
    let m_body = m_line
        .strip_prefix("#m=")
        .ok_or_else(|| IngestError::Malformed {
            line: 1,
            reason: "expected a #m=... multiplicity line".into(),
        })?;
    let multiplicities: Vec<u64> = m_body
        .split(',')
        .map(|v| {
            v.trim().parse().map_err(|_| IngestError::Malformed {
                line: 1,
                reason: format!("unparseable multiplicity {v:?}"),
            })
        })
        .collect::<Result<_, _>>()?;
    let (_, header) = lines.next().ok_or_else(|| IngestError::Malformed {
        line: 2,
        reason: "missing header line".into(),
    })?;
    let mut fields = header.split(',');
    if fields.next().map(str::trim) != Some("n") {
        return Err(IngestError::Malformed {
            line: 2,
            reason: "header must start with the n column".into(),
        });
    }
    let categories: Vec<String> = fields.map(|f| f.trim().to_string()).collect();
    if categories.len() != multiplicities.len() {
        return Err(IngestError::Malformed {
            line: 2,
            reason: format!(
                "{} category columns but {} multiplicities",
                categories.len(),
                multiplicities.len()
            ),
        });
    }
    let mut observations = Vec::new();
    for (idx, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let values: Vec<u64> = row
            .split(',')
            .map(|v| {
                v.trim().parse().map_err(|_| IngestError::Malformed {
                    line: idx + 1,
                    reason: format!("unparseable count {v:?}"),
                })
            })
            .collect::<Result<_, _>>()?;
        if values.len() != multiplicities.len() + 1 {
            return Err(IngestError::FieldCount {
                line: idx + 1,
                expected: multiplicities.len() + 1,
                actual: values.len(),
            });
        }
        let n = values[0];
        let counts = values[1..].to_vec();
        let obs = FrequencyVector::from_parts(counts, n).map_err(|e| IngestError::Malformed {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        observations.push(obs);
    }
    Ok(Dataset::with_categories(
        observations,
        multiplicities,
        categories,
    )?)
}
