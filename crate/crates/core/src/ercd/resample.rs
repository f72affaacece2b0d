use super::ErcdError;
use crate::datagen::{Dataset, Group};
use crate::numerics::RngStream;

/// Stratified resampling with replacement to equal group shares.
///
/// The output has `|d|` samples; when `|d|` is odd the group that was
/// larger in the input receives the extra sample. Draws within a group are
/// uniform, so each group's feature distribution is preserved.
pub fn fairness_resample(d: &Dataset, rng: &mut RngStream) -> Result<Dataset, ErcdError> {
    let urban: Vec<usize> = (0..d.len()).filter(|&i| d.samples[i].group == Group::Urban).collect();
    let rural: Vec<usize> = (0..d.len()).filter(|&i| d.samples[i].group == Group::Rural).collect();
    if urban.is_empty() || rural.is_empty() {
        return Err(ErcdError::SingleGroupDataset);
    }
    let n = d.len();
    let half = n / 2;
    let (n_urban, n_rural) = if urban.len() >= rural.len() { (n - half, half) } else { (half, n - half) };

    let mut picks = Vec::with_capacity(n);
    for (pool, count) in [(&urban, n_urban), (&rural, n_rural)] {
        for _ in 0..count {
            picks.push(pool[rng.below(pool.len())]);
        }
    }
    // index order keeps duplicates adjacent and the output canonical
    picks.sort_unstable();

    let mut out = Dataset {
        schema: d.schema.clone(),
        samples: picks.into_iter().map(|i| d.samples[i].clone()).collect(),
        metadata: d.metadata.clone(),
    };
    out.note_lineage(&format!("fairness_resample:{n_urban}/{n_rural}"));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, SimulationParams};

    fn with_groups(n_urban: usize, n_rural: usize) -> Dataset {
        let mut d = generate(&SimulationParams::default(), n_urban + n_rural, &RngStream::new(8, 0)).unwrap();
        for (i, s) in d.samples.iter_mut().enumerate() {
            s.group = if i < n_urban { Group::Urban } else { Group::Rural };
        }
        d
    }

    #[test]
    fn balances_seven_to_three() {
        let d = with_groups(7000, 3000);
        let out = fairness_resample(&d, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(out.group_counts(), (5000, 5000));
        assert_eq!(out.len(), d.len());
    }

    #[test]
    fn odd_total_within_one() {
        let d = with_groups(4, 7);
        let out = fairness_resample(&d, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(out.group_counts(), (5, 6));
    }

    #[test]
    fn balanced_input_keeps_counts() {
        let d = with_groups(300, 300);
        let out = fairness_resample(&d, &mut RngStream::new(2, 0)).unwrap();
        assert_eq!(out.group_counts(), (300, 300));
    }

    #[test]
    fn draws_come_from_own_group() {
        let d = with_groups(60, 140);
        let out = fairness_resample(&d, &mut RngStream::new(3, 0)).unwrap();
        for s in &out.samples {
            let mut bare = s.clone();
            bare.provenance.lineage.pop();
            assert!(d.samples.contains(&bare));
        }
        assert!(out.metadata.lineage.last().unwrap().starts_with("fairness_resample"));
    }

    #[test]
    fn single_group_rejected() {
        let d = with_groups(10, 0);
        assert_eq!(fairness_resample(&d, &mut RngStream::new(0, 0)).unwrap_err(), ErcdError::SingleGroupDataset);
    }
}
