//! Design-matrix assembly: one-hot towns, numeric features, seeded splits.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, RealVector};
use crate::pipeline::TownYearGroup;

/// Sorted distinct category names. Every category gets its own column; none
/// is dropped, so together with an intercept the block is exactly collinear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryEncoder {
    categories: Vec<String>,
}

impl CategoryEncoder {
    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(value))
            .ok()
    }
}

pub fn fit_one_hot<S: AsRef<str>>(values: &[S]) -> Result<CategoryEncoder> {
    if values.is_empty() {
        return Err(Error::Empty("fit_one_hot"));
    }
    let set: BTreeSet<&str> = values.iter().map(AsRef::as_ref).collect();
    Ok(CategoryEncoder {
        categories: set.into_iter().map(str::to_string).collect(),
    })
}

/// One row per value with a single `1.0` in the value's category column.
pub fn encode<S: AsRef<str>>(enc: &CategoryEncoder, values: &[S]) -> Result<DenseMatrix> {
    let k = enc.len();
    let mut data = vec![0.0; values.len() * k];
    for (i, v) in values.iter().enumerate() {
        let v = v.as_ref();
        let j = enc
            .index_of(v)
            .ok_or_else(|| Error::UnknownCategory(v.to_string()))?;
        data[i * k + j] = 1.0;
    }
    DenseMatrix::new(values.len(), k, data)
}

/// Feature matrix, 0/1 targets and column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: DenseMatrix,
    pub y: RealVector,
    pub column_names: Vec<String>,
    pub encoder: CategoryEncoder,
}

impl DesignMatrix {
    /// Index of the first town column in `x`.
    pub const TOWN_OFFSET: usize = 0;

    /// Number of numeric columns after the one-hot block.
    pub const NUMERIC_COLUMNS: usize = 3;

    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    /// Copy with feature column `j` removed, e.g. to break the dummy-variable trap.
    pub fn without_column(&self, j: usize) -> Result<DesignMatrix> {
        let x = self.x.drop_column(j)?;
        let mut column_names = self.column_names.clone();
        column_names.remove(j);
        Ok(DesignMatrix {
            x,
            y: self.y.clone(),
            column_names,
            encoder: self.encoder.clone(),
        })
    }
}

/// Columns: one-hot town block (encoder order), year, median rate, median
/// sale ratio. Targets are the buy labels as `0.0` / `1.0`.
pub fn build_design_matrix(groups: &[TownYearGroup]) -> Result<DesignMatrix> {
    if groups.is_empty() {
        return Err(Error::Empty("build_design_matrix"));
    }
    let towns: Vec<&str> = groups.iter().map(|g| g.town.as_str()).collect();
    let encoder = fit_one_hot(&towns)?;
    let one_hot = encode(&encoder, &towns)?;
    let k = encoder.len();
    let cols = k + DesignMatrix::NUMERIC_COLUMNS;

    let mut data = Vec::with_capacity(groups.len() * cols);
    let mut y = Vec::with_capacity(groups.len());
    for (i, g) in groups.iter().enumerate() {
        let buy = g.buy.ok_or_else(|| Error::Unlabeled {
            town: g.town.clone(),
            year: g.year,
        })?;
        data.extend_from_slice(one_hot.row(i));
        data.push(f64::from(g.year));
        data.push(g.median_rate);
        data.push(g.median_sale_ratio);
        y.push(if buy { 1.0 } else { 0.0 });
    }

    let column_names = encoder
        .categories()
        .iter()
        .map(|t| format!("town={t}"))
        .chain(["year", "median_rate", "median_sale_ratio"].map(String::from))
        .collect();

    Ok(DesignMatrix {
        x: DenseMatrix::new(groups.len(), cols, data)?,
        y: RealVector::new(y)?,
        column_names,
        encoder,
    })
}

/// Disjoint train/test row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub test_size: f64,
}

/// Shuffles `0..m` with Fisher–Yates driven by ChaCha8 seeded from `seed`,
/// then takes the first `round(m · test_size)` indices as the test set.
///
/// Swap targets are drawn as `u64` so the sequence does not depend on the
/// platform's pointer width.
pub fn train_test_split(m: usize, test_size: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_size > 0.0 && test_size < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_size must lie in (0, 1), got {test_size}"
        )));
    }
    let n_test = (m as f64 * test_size).round() as usize;
    if m < 2 || n_test == 0 || n_test >= m {
        return Err(Error::InvalidArgument(format!(
            "cannot split {m} rows with test_size {test_size} into non-empty train and test sets"
        )));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..m).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        idx.swap(i, j);
    }
    let train = idx.split_off(n_test);
    Ok(SplitIndices {
        train,
        test: idx,
        seed,
        test_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn group(town: &str, year: i32, buy: Option<bool>) -> TownYearGroup {
        TownYearGroup {
            town: town.to_string(),
            year,
            median_sale_ratio: 0.7,
            sale_count: 1,
            median_rate: 5.0,
            financials: None,
            buy,
        }
    }

    #[test]
    fn fit_dedupes_and_sorts() {
        assert_eq!(
            fit_one_hot(&["B", "A", "B"]).unwrap().categories(),
            &["A", "B"]
        );
        assert_eq!(fit_one_hot(&["X"]).unwrap().categories(), &["X"]);
        assert!(matches!(fit_one_hot::<&str>(&[]), Err(Error::Empty(_))));
        // Byte order: uppercase before lowercase.
        assert_eq!(
            fit_one_hot(&["b", "B", "a"]).unwrap().categories(),
            &["B", "a", "b"]
        );
    }

    #[test]
    fn encode_rows() {
        let enc = fit_one_hot(&["A", "B"]).unwrap();
        assert_eq!(encode(&enc, &["B"]).unwrap().as_slice(), &[0.0, 1.0]);
        assert_eq!(
            encode(&enc, &["A", "B", "A"]).unwrap().as_slice(),
            &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]
        );
        let single = fit_one_hot(&["A"]).unwrap();
        match encode(&single, &["C"]) {
            Err(Error::UnknownCategory(v)) => assert_eq!(v, "C"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn design_single_row() {
        let d = build_design_matrix(&[group("Avon", 2010, Some(true))]).unwrap();
        assert_eq!(d.x.shape(), (1, 4));
        assert_eq!(d.x.as_slice(), &[1.0, 2010.0, 5.0, 0.7]);
        assert_eq!(d.y.as_slice(), &[1.0]);
        assert_eq!(
            d.column_names,
            ["town=Avon", "year", "median_rate", "median_sale_ratio"]
        );
    }

    #[test]
    fn design_two_towns() {
        let d = build_design_matrix(&[group("B", 2010, Some(false)), group("A", 2011, Some(true))])
            .unwrap();
        assert_eq!(d.x.shape(), (2, 5));
        assert_eq!(&d.x.row(0)[..2], &[0.0, 1.0]);
        assert_eq!(&d.x.row(1)[..2], &[1.0, 0.0]);
        assert_eq!(d.y.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn design_rejects_unlabeled() {
        match build_design_matrix(&[group("A", 2010, Some(true)), group("B", 2012, None)]) {
            Err(Error::Unlabeled { town, year }) => assert_eq!((town.as_str(), year), ("B", 2012)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_small() {
        let s = train_test_split(4, 0.25, 42).unwrap();
        assert_eq!(s.test.len(), 1);
        assert_eq!(s.train.len(), 3);
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert_eq!(train_test_split(4, 0.25, 42).unwrap(), s);
    }

    #[test]
    fn split_seeds_differ() {
        let a = train_test_split(1000, 0.25, 1).unwrap();
        let b = train_test_split(1000, 0.25, 2).unwrap();
        let sa: BTreeSet<_> = a.test.iter().collect();
        let overlap = b.test.iter().filter(|i| sa.contains(i)).count();
        assert!(overlap < 250, "overlap {overlap}");
    }

    #[test]
    fn split_frozen_for_seed_42() {
        // Pins the generator choice; changing it changes every downstream report.
        let s = train_test_split(10, 0.3, 42).unwrap();
        assert_eq!(s.test, FROZEN_TEST_10_03_42);
    }

    const FROZEN_TEST_10_03_42: [usize; 3] = [9, 7, 2];

    #[test]
    fn split_rejects_degenerate() {
        assert!(train_test_split(1, 0.5, 0).is_err());
        assert!(train_test_split(4, 0.0, 0).is_err());
        assert!(train_test_split(4, 1.0, 0).is_err());
        assert!(train_test_split(3, 0.1, 0).is_err());
        assert!(train_test_split(2, 0.9, 0).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_partition(m in 2usize..300, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let n_test = (m as f64 * frac).round() as usize;
            prop_assume!(n_test >= 1 && n_test < m);
            let s = train_test_split(m, frac, seed).unwrap();
            prop_assert_eq!(s.test.len(), n_test);
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
        }

        #[test]
        fn one_hot_rows_sum_to_one(labels in proptest::collection::vec(0u8..6, 1..60)) {
            let names: Vec<String> = labels.iter().map(|l| format!("t{l}")).collect();
            let enc = fit_one_hot(&names).unwrap();
            let m = encode(&enc, &names).unwrap();
            for i in 0..m.rows() {
                prop_assert_eq!(m.row(i).iter().sum::<f64>(), 1.0);
            }
            for (j, cat) in enc.categories().iter().enumerate() {
                let count = names.iter().filter(|n| *n == cat).count() as f64;
                prop_assert_eq!(m.column(j).iter().sum::<f64>(), count);
            }
        }
    }
}
