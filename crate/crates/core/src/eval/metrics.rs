use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::EmptyDataset("no labels to score".into()));
    }
    if let Some(&c) = y_true.iter().chain(y_pred).find(|&&c| c >= n_classes) {
        return Err(Error::UnknownClass(c));
    }
    Ok(())
}

/// Micro-averaged F1 over `n_classes` classes, from pooled TP/FP/FN counts.
///
/// Every wrong prediction is one false positive (predicted class) and one
/// false negative (true class), so this is `2c / 2n`, i.e. accuracy.
pub fn f1_micro(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    check(y_true, y_pred, n_classes)?;
    let tp = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    let fp = y_true.len() - tp;
    let fn_ = fp;
    Ok((2 * tp) as f64 / (2 * tp + fp + fn_) as f64)
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
    let correct = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    correct as f64 / y_true.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub label: String,
    /// `None` when the class was never predicted.
    pub precision: Option<f64>,
    /// `None` when the class never occurs.
    pub recall: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub n: usize,
    pub f1_micro: f64,
    pub precision_micro: f64,
    pub recall_micro: f64,
    pub per_class: Vec<ClassScore>,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    check(y_true, y_pred, n_classes)?;
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        m[t][p] += 1;
    }
    Ok(m)
}

pub fn score(y_true: &[usize], y_pred: &[usize], labels: &[String]) -> Result<Scores> {
    let k = labels.len();
    let confusion = confusion_matrix(y_true, y_pred, k)?;
    let tp: usize = (0..k).map(|c| confusion[c][c]).sum();
    let n = y_true.len();
    let per_class = (0..k)
        .map(|c| {
            let predicted: usize = (0..k).map(|t| confusion[t][c]).sum();
            let support: usize = confusion[c].iter().sum();
            let ratio = |den: usize| (den > 0).then(|| confusion[c][c] as f64 / den as f64);
            ClassScore {
                label: labels[c].clone(),
                precision: ratio(predicted),
                recall: ratio(support),
                support,
            }
        })
        .collect();
    Ok(Scores {
        n,
        f1_micro: f1_micro(y_true, y_pred, k)?,
        precision_micro: tp as f64 / n as f64,
        recall_micro: tp as f64 / n as f64,
        per_class,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(f1_micro(&[0, 1, 2, 1], &[0, 2, 2, 1], 3).unwrap(), 0.75);
        assert_eq!(f1_micro(&[2, 2, 0], &[2, 2, 0], 3).unwrap(), 1.0);
        assert!(matches!(f1_micro(&[0, 1], &[0], 3), Err(Error::LengthMismatch(2, 1))));
        assert!(matches!(f1_micro(&[0, 3], &[0, 1], 3), Err(Error::UnknownClass(3))));
    }

    #[test]
    fn per_class_and_confusion() {
        let labels: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let s = score(&[0, 1, 2, 1], &[0, 2, 2, 1], &labels).unwrap();
        assert_eq!(s.confusion, vec![vec![1, 0, 0], vec![0, 1, 1], vec![0, 0, 1]]);
        assert_eq!(s.per_class[1].recall, Some(0.5));
        assert_eq!(s.per_class[2].precision, Some(0.5));
        assert_eq!(s.precision_micro, s.recall_micro);
        assert_eq!(s.precision_micro, s.f1_micro);
        let s = score(&[0, 0], &[0, 0], &labels).unwrap();
        assert_eq!(s.per_class[1].precision, None);
        assert_eq!(s.per_class[1].recall, None);
    }

    proptest! {
        #[test]
        fn f1_equals_accuracy(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..300)) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            prop_assert_eq!(f1_micro(&t, &p, 3).unwrap(), accuracy(&t, &p));
        }
    }
}
