use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

use super::Label;

/// 2x2 confusion counts with Scam as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Scam, Label::Scam) => self.tp += 1,
            (Label::Normal, Label::Scam) => self.fp += 1,
            (Label::Scam, Label::Normal) => self.fn_ += 1,
            (Label::Normal, Label::Normal) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn ratio(num: u64, den: u64) -> Ratio<u64> {
    if den == 0 {
        Ratio::zero()
    } else {
        Ratio::new(num, den)
    }
}

fn as_f64<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(r.to_f64().unwrap_or(0.0))
}

/// Exact metrics derived from a confusion matrix. Undefined ratios (zero
/// denominators) are reported as 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalMetrics {
    pub confusion: Confusion,
    #[serde(serialize_with = "as_f64")]
    pub accuracy: Ratio<u64>,
    #[serde(serialize_with = "as_f64")]
    pub precision: Ratio<u64>,
    #[serde(serialize_with = "as_f64")]
    pub recall: Ratio<u64>,
    #[serde(serialize_with = "as_f64")]
    pub f1: Ratio<u64>,
}

impl EvalMetrics {
    pub fn from_confusion(c: Confusion) -> Self {
        EvalMetrics {
            confusion: c,
            accuracy: ratio(c.tp + c.tn, c.total()),
            precision: ratio(c.tp, c.tp + c.fp),
            recall: ratio(c.tp, c.tp + c.fn_),
            // equals 2PR/(P+R) whenever P+R > 0
            f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = Confusion::default();
        for (truth, predicted) in pairs {
            c.record(truth, predicted);
        }
        Self::from_confusion(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_predictor() {
        let m = EvalMetrics::from_confusion(Confusion { tp: 0, fp: 0, fn_: 3, tn: 7 });
        assert_eq!(m.recall, Ratio::zero());
        assert_eq!(m.precision, Ratio::zero());
        assert_eq!(m.accuracy, Ratio::new(7, 10));
    }
}
