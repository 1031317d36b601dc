use crate::error::{Error, Result};

/// Mean and population standard deviation over replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Summary {
    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std / (self.count as f64).sqrt()
        }
    }
}

/// Aggregates `(replicate index, value)` pairs. Values are summed in
/// replicate order, so any permutation of the input gives identical bits.
pub fn aggregate_replicates(values: &[(u64, f64)]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::UndefinedInput("no replicates to aggregate".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = sorted.len() as f64;
    let mean = sorted.iter().map(|v| v.1).sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v.1 - mean).powi(2)).sum::<f64>() / n;
    Ok(Summary {
        mean,
        std: var.sqrt(),
        count: sorted.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let s = aggregate_replicates(&[(0, 4.5)]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (4.5, 0.0, 1));
    }

    #[test]
    fn two_values() {
        let s = aggregate_replicates(&[(0, 1.0), (1, 3.0)]).unwrap();
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }

    #[test]
    fn empty_is_undefined() {
        assert!(matches!(
            aggregate_replicates(&[]),
            Err(Error::UndefinedInput(_))
        ));
    }

    #[test]
    fn permutation_is_bit_identical() {
        let vals: Vec<(u64, f64)> = (0..50)
            .map(|i| (i, (i as f64 * 0.37).sin() * 1e3 + 0.1))
            .collect();
        let mut rev = vals.clone();
        rev.reverse();
        let mut shuffled = vals.clone();
        shuffled.swap(3, 40);
        shuffled.swap(10, 11);
        let a = aggregate_replicates(&vals).unwrap();
        assert_eq!(a, aggregate_replicates(&rev).unwrap());
        assert_eq!(a, aggregate_replicates(&shuffled).unwrap());
    }
}
