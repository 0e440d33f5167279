use super::CurationError;
use crate::scalar::Scalar;

/// Fleiss' kappa for an `items x categories` count table where every row
/// sums to `raters_per_item`.
pub fn fleiss_kappa<T: Scalar>(counts: &[Vec<u32>], raters_per_item: u32) -> Result<T, CurationError> {
    let invalid = |m: String| CurationError::InvalidRatings(m);
    if counts.is_empty() {
        return Err(invalid("no items".into()));
    }
    if raters_per_item < 2 {
        return Err(invalid(format!("need at least 2 raters per item, got {raters_per_item}")));
    }
    let k = counts[0].len();
    if k < 2 {
        return Err(invalid(format!("need at least 2 categories, got {k}")));
    }
    let mut column = vec![0u64; k];
    for (i, row) in counts.iter().enumerate() {
        if row.len() != k {
            return Err(invalid(format!("item {i} has {} categories, expected {k}", row.len())));
        }
        let s: u32 = row.iter().sum();
        if s != raters_per_item {
            return Err(invalid(format!("item {i} sums to {s}, expected {raters_per_item}")));
        }
        for (c, &v) in column.iter_mut().zip(row) {
            *c += u64::from(v);
        }
    }
    let items = counts.len() as u64;
    let total = items * u64::from(raters_per_item);
    if column.contains(&total) {
        return Err(CurationError::KappaUndefined);
    }

    let n = T::lit(f64::from(raters_per_item));
    let p_bar = counts
        .iter()
        .map(|row| {
            let sq: u64 = row.iter().map(|&v| u64::from(v) * u64::from(v)).sum();
            (T::lit(sq as f64) - n) / (n * (n - T::one()))
        })
        .sum::<T>()
        / T::lit(items as f64);
    let p_e: T = column
        .iter()
        .map(|&c| {
            let p = T::lit(c as f64) / T::lit(total as f64);
            p * p
        })
        .sum();
    Ok((p_bar - p_e) / (T::one() - p_e))
}
