//! Coincidence coefficients, swadesh distances and the matrices built from them.
//!
//! A coincidence coefficient `C` is the percentage of basic-list slots on
//! which two lects carry the same cognate class. The distance in swadesh
//! units is `L = 100 ln(100 / C)`, so one swadesh corresponds to roughly one
//! percent of list mismatch. Values are kept as reals on the 0..=100 scale;
//! rounding is a display concern.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A coincidence coefficient on the percentage scale, `0 < C <= 100`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Coincidence(f64);

impl Coincidence {
    pub fn new(value: f64) -> Result<Self> {
        Self::for_pair(value, "?")
    }

    /// Like [`Coincidence::new`] but names `pair` in the error.
    pub fn for_pair(value: f64, pair: &str) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value <= 100.0 {
            Ok(Self(value))
        } else {
            Err(Error::CoincidenceOutOfRange {
                pair: pair.to_string(),
                value,
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A lexicostatistic distance in swadesh units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SwadeshDistance(f64);

impl SwadeshDistance {
    pub fn new(value: f64) -> Result<Self> {
        Self::for_pair(value, "?")
    }

    pub fn for_pair(value: f64, pair: &str) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidDistance {
                pair: pair.to_string(),
                value,
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `L = 100 ln(100 / C)`.
pub fn distance_from_coincidence(c: Coincidence) -> SwadeshDistance {
    // ln(100/100) is exactly 0, so no clamping is needed at the identity.
    SwadeshDistance(100.0 * (100.0 / c.0).ln())
}

/// `C = 100 exp(-L / 100)`, the inverse of [`distance_from_coincidence`].
pub fn coincidence_from_distance(l: SwadeshDistance) -> Coincidence {
    // exp of a non-positive value stays in (0, 1]; underflow to 0 is only
    // possible for L beyond ~74000 swadesh.
    Coincidence((100.0 * (-l.0 / 100.0).exp()).max(f64::MIN_POSITIVE))
}

fn pair_name(labels: &[String], i: usize, j: usize) -> String {
    format!("({}, {})", labels[i], labels[j])
}

/// Strict upper triangle of a symmetric matrix with an undefined diagonal.
#[derive(Debug, Clone, PartialEq)]
struct Triangle {
    k: usize,
    cells: Vec<f64>,
}

impl Triangle {
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        debug_assert!(i != j && j < self.k);
        i * self.k - i * (i + 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[self.index(i, j)]
    }

    fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut cells = Vec::with_capacity(k * k.saturating_sub(1) / 2);
        for i in 0..k {
            for j in (i + 1)..k {
                cells.push(f(i, j));
            }
        }
        Self { k, cells }
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// Symmetric matrix of coincidence coefficients between `k` languages.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMatrix {
    labels: Vec<String>,
    cells: Triangle,
    list_size: Option<u32>,
}

impl CoincidenceMatrix {
    /// Builds a matrix from labels and a full square table. Diagonal entries
    /// are ignored; off-diagonal entries must be symmetric.
    pub fn from_square(
        labels: Vec<String>,
        rows: &[Vec<f64>],
        list_size: Option<u32>,
    ) -> Result<Self> {
        let k = labels.len();
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParameter(format!(
                "expected a {k}x{k} table for {k} labels"
            )));
        }
        let mut bad = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                if rows[i][j] != rows[j][i] {
                    bad.push(format!(
                        "{}/{}",
                        pair_name(&labels, i, j),
                        pair_name(&labels, j, i)
                    ));
                }
            }
        }
        if !bad.is_empty() {
            return Err(Error::Asymmetric(bad.join(", ")));
        }
        Self::from_fn(labels, list_size, |i, j| rows[i][j])
    }

    /// Builds a matrix from a function evaluated on every pair `i < j`.
    pub fn from_fn(
        labels: Vec<String>,
        list_size: Option<u32>,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        check_labels(&labels)?;
        if labels.is_empty() {
            return Err(Error::TooFewLanguages {
                required: 1,
                got: 0,
            });
        }
        if list_size == Some(0) {
            return Err(Error::InvalidParameter("list size must be positive".into()));
        }
        let cells = Triangle::from_fn(labels.len(), f);
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                Coincidence::for_pair(cells.get(i, j), &pair_name(&labels, i, j))?;
            }
        }
        Ok(Self {
            labels,
            cells,
            list_size,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of independent off-diagonal values, `k(k-1)/2`.
    pub fn pair_count(&self) -> usize {
        self.cells.cells.len()
    }

    pub fn list_size(&self) -> Option<u32> {
        self.list_size
    }

    /// Coefficient of a pair; 100 on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Coincidence {
        if i == j {
            return Coincidence(100.0);
        }
        Coincidence(self.cells.get(i, j))
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Iterates over `(i, j, C_ij)` for `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, Coincidence)> + '_ {
        let k = self.len();
        (0..k).flat_map(move |i| ((i + 1)..k).map(move |j| (i, j, self.get(i, j))))
    }

    /// Rounds every coefficient to the nearest integer, emulating tables that
    /// print integer percentages.
    pub fn rounded(&self) -> Result<Self> {
        Self::from_fn(self.labels.clone(), self.list_size, |i, j| {
            self.cells.get(i, j).round()
        })
    }

    /// Applies [`adjust_coincidence_for_borrowings`] to every pair.
    pub fn adjust_for_borrowings(&self, adj: &BorrowingAdjustment) -> Result<Self> {
        let mut err = None;
        let m = Self::from_fn(
            self.labels.clone(),
            Some(adj.n0 - adj.n3),
            |i, j| match adjust_value(self.cells.get(i, j), adj, &pair_name(&self.labels, i, j)) {
                Ok(c) => c,
                Err(e) => {
                    err.get_or_insert(e);
                    100.0
                }
            },
        );
        match err {
            Some(e) => Err(e),
            None => m,
        }
    }
}

/// Symmetric matrix of swadesh distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    cells: Triangle,
}

impl DistanceMatrix {
    pub fn from_fn(labels: Vec<String>, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_labels(&labels)?;
        let cells = Triangle::from_fn(labels.len(), f);
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                SwadeshDistance::for_pair(cells.get(i, j), &pair_name(&labels, i, j))?;
            }
        }
        Ok(Self { labels, cells })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distance of a pair; 0 on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.cells.get(i, j)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let k = self.len();
        (0..k).flat_map(move |i| ((i + 1)..k).map(move |j| (i, j, self.get(i, j))))
    }

    /// Converts back to coefficients with `C = 100 exp(-L/100)`.
    pub fn to_coincidence(&self, list_size: Option<u32>) -> Result<CoincidenceMatrix> {
        CoincidenceMatrix::from_fn(self.labels.clone(), list_size, |i, j| {
            coincidence_from_distance(SwadeshDistance(self.get(i, j))).value()
        })
    }
}

/// Converts every pair of `m` with [`distance_from_coincidence`].
pub fn distance_matrix(m: &CoincidenceMatrix) -> DistanceMatrix {
    // Entries of a CoincidenceMatrix are validated on construction.
    DistanceMatrix {
        labels: m.labels.clone(),
        cells: Triangle::from_fn(m.len(), |i, j| {
            distance_from_coincidence(m.get(i, j)).value()
        }),
    }
}

/// Effect of removing `n3` borrowed slots from a list of `n0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BorrowingAdjustment {
    n0: u32,
    n3: u32,
    shift_s: f64,
}

impl BorrowingAdjustment {
    pub fn new(n0: u32, n3: u32) -> Result<Self> {
        if n0 == 0 || n3 >= n0 {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= N3 < N0, got N0={n0}, N3={n3}"
            )));
        }
        let shift_s = 100.0 * (f64::from(n0) / f64::from(n0 - n3)).ln();
        Ok(Self { n0, n3, shift_s })
    }

    pub fn n0(&self) -> u32 {
        self.n0
    }

    pub fn n3(&self) -> u32 {
        self.n3
    }

    /// `s = 100 ln(N0 / (N0 - N3))`, the uniform drop of every distance.
    pub fn shift(&self) -> f64 {
        self.shift_s
    }
}

fn adjust_value(c: f64, adj: &BorrowingAdjustment, pair: &str) -> Result<f64> {
    let value = c * f64::from(adj.n0) / f64::from(adj.n0 - adj.n3);
    if value > 100.0 + 1e-9 {
        return Err(Error::InconsistentBorrowings {
            pair: pair.to_string(),
            value,
        });
    }
    Ok(value.min(100.0))
}

/// `C' = C N0 / (N0 - N3)`: the coefficient observed once the borrowed slots
/// are dropped from both lists, assuming they were mismatches before.
pub fn adjust_coincidence_for_borrowings(
    c: Coincidence,
    adj: &BorrowingAdjustment,
) -> Result<Coincidence> {
    adjust_value(c.0, adj, "?").map(Coincidence)
}

/// One row of a cognacy table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CognacyRow {
    pub language: String,
    pub slot: String,
    pub class: String,
    pub borrowed: bool,
}

/// Cognate-class assignments of every language on every basic-list slot.
///
/// Classes are interned; two languages agree on a slot iff their class ids
/// are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct CognacyTable {
    languages: Vec<String>,
    slots: Vec<String>,
    /// `classes[language][slot]`
    classes: Vec<Vec<u32>>,
    borrowed: Vec<Vec<bool>>,
}

impl CognacyTable {
    /// Builds a table from rows. Languages and slots are ordered by first
    /// appearance. Every language must cover every slot exactly once.
    pub fn from_rows(rows: impl IntoIterator<Item = CognacyRow>) -> Result<Self> {
        let mut lang_index: HashMap<String, usize> = HashMap::new();
        let mut slot_index: HashMap<String, usize> = HashMap::new();
        let mut class_index: HashMap<String, u32> = HashMap::new();
        let mut languages = Vec::new();
        let mut slots = Vec::new();
        let mut cells: Vec<HashMap<usize, (u32, bool)>> = Vec::new();

        for row in rows {
            let li = *lang_index.entry(row.language.clone()).or_insert_with(|| {
                languages.push(row.language.clone());
                cells.push(HashMap::new());
                languages.len() - 1
            });
            let si = *slot_index.entry(row.slot.clone()).or_insert_with(|| {
                slots.push(row.slot.clone());
                slots.len() - 1
            });
            let next = class_index.len() as u32;
            let ci = *class_index.entry(row.class).or_insert(next);
            if cells[li].insert(si, (ci, row.borrowed)).is_some() {
                return Err(Error::DuplicateRow {
                    language: row.language,
                    slot: row.slot,
                });
            }
        }

        let mut classes = Vec::with_capacity(languages.len());
        let mut borrowed = Vec::with_capacity(languages.len());
        for (li, lang) in languages.iter().enumerate() {
            let missing: Vec<&str> = (0..slots.len())
                .filter(|s| !cells[li].contains_key(s))
                .map(|s| slots[s].as_str())
                .collect();
            if !missing.is_empty() {
                return Err(Error::MissingSlots {
                    language: lang.clone(),
                    slots: missing.join(", "),
                });
            }
            let (c, b): (Vec<u32>, Vec<bool>) = (0..slots.len()).map(|s| cells[li][&s]).unzip();
            classes.push(c);
            borrowed.push(b);
        }
        Ok(Self {
            languages,
            slots,
            classes,
            borrowed,
        })
    }

    /// Builds a table directly from interned class ids, `classes[language][slot]`.
    pub fn from_parts(
        languages: Vec<String>,
        slots: Vec<String>,
        classes: Vec<Vec<u32>>,
        borrowed: Vec<Vec<bool>>,
    ) -> Result<Self> {
        check_labels(&languages)?;
        let n = slots.len();
        if classes.len() != languages.len()
            || borrowed.len() != languages.len()
            || classes.iter().any(|c| c.len() != n)
            || borrowed.iter().any(|b| b.len() != n)
        {
            return Err(Error::InvalidParameter(
                "cognacy table shape mismatch".into(),
            ));
        }
        Ok(Self {
            languages,
            slots,
            classes,
            borrowed,
        })
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    /// `N0`, the number of distinct slots.
    pub fn list_size(&self) -> usize {
        self.slots.len()
    }

    /// Iterates over the table in language-major order.
    pub fn rows(&self) -> impl Iterator<Item = CognacyRow> + '_ {
        self.languages
            .iter()
            .enumerate()
            .flat_map(move |(li, lang)| {
                self.slots
                    .iter()
                    .enumerate()
                    .map(move |(si, slot)| CognacyRow {
                        language: lang.clone(),
                        slot: slot.clone(),
                        class: format!("c{}", self.classes[li][si]),
                        borrowed: self.borrowed[li][si],
                    })
            })
    }

    fn borrowed_mask(&self) -> Vec<bool> {
        (0..self.slots.len())
            .map(|s| self.borrowed.iter().any(|b| b[s]))
            .collect()
    }

    /// `N3`, the number of slots flagged borrowed in at least one language.
    pub fn borrowed_slot_count(&self) -> usize {
        self.borrowed_mask().iter().filter(|&&b| b).count()
    }

    pub fn has_borrowings(&self) -> bool {
        self.borrowed.iter().any(|b| b.iter().any(|&x| x))
    }
}

/// Counts shared cognate classes for every language pair.
///
/// With `exclude_borrowed`, a slot flagged borrowed in any language is
/// dropped for all languages and the list size becomes `N0 - N3`.
pub fn coincidence_from_cognacy(
    t: &CognacyTable,
    exclude_borrowed: bool,
) -> Result<CoincidenceMatrix> {
    if t.languages.is_empty() {
        return Err(Error::TooFewLanguages {
            required: 1,
            got: 0,
        });
    }
    let keep: Vec<bool> = if exclude_borrowed {
        t.borrowed_mask().into_iter().map(|b| !b).collect()
    } else {
        vec![true; t.slots.len()]
    };
    let effective = keep.iter().filter(|&&k| k).count();
    if effective == 0 {
        return Err(Error::EmptyList);
    }
    CoincidenceMatrix::from_fn(t.languages.clone(), Some(effective as u32), |i, j| {
        let shared = t.classes[i]
            .iter()
            .zip(&t.classes[j])
            .zip(&keep)
            .filter(|((a, b), k)| **k && a == b)
            .count();
        // A pair with no shared slot has C = 0, which is rejected by the
        // matrix constructor with the pair named.
        100.0 * shared as f64 / effective as f64
    })
}

impl fmt::Display for SwadeshDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.0)
    }
}

impl fmt::Display for Coincidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.0)
    }
}
