/// Bin count used for continuous features.
pub const DEFAULT_BINS: usize = 4;

/// Maps values to bin codes in `0..bins`.
///
/// Columns with at most `bins` distinct values (group, label, binary flags)
/// are coded by the rank of each distinct value. Anything else is cut at
/// equal-frequency quantiles; tied values always share a bin, so heavy ties
/// can leave some bins empty.
pub fn discretize(values: &[f64], bins: usize) -> Vec<usize> {
    let bins = bins.max(1);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= bins {
        return values
            .iter()
            .map(|v| distinct.partition_point(|d| d.total_cmp(v).is_lt()))
            .collect();
    }
    let n = sorted.len();
    let cuts: Vec<f64> = (1..bins).map(|i| sorted[i * n / bins]).collect();
    values
        .iter()
        .map(|v| cuts.partition_point(|c| c.total_cmp(v).is_le()))
        .collect()
}
