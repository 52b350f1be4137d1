//! Compensated accumulation for long oscillating sums.

use serde::{Deserialize, Serialize};

/// Accumulator precision for the Voronoi sums.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Kahan-Babuska-Neumaier compensation.
    #[default]
    Double,
    /// Double-double accumulation: every addition is an error-free transform
    /// and the running error is itself kept to double-double accuracy.
    Extended,
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(format!("unknown precision mode `{other}` (double|extended)")),
        }
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Neumaier's improved Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Double-double accumulator (`hi + lo` with `|lo| <= ulp(hi) / 2`).
#[derive(Clone, Copy, Debug, Default)]
pub struct DoubleDoubleSum {
    hi: f64,
    lo: f64,
}

impl DoubleDoubleSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = two_sum(s, e + self.lo);
        self.hi = hi;
        self.lo = lo;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Accumulator selected by [`Precision`].
#[derive(Clone, Copy, Debug)]
pub enum Accumulator {
    Double(NeumaierSum),
    Extended(DoubleDoubleSum),
}

impl Accumulator {
    pub fn new(precision: Precision) -> Self {
        match precision {
            Precision::Double => Accumulator::Double(NeumaierSum::new()),
            Precision::Extended => Accumulator::Extended(DoubleDoubleSum::default()),
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        match self {
            Accumulator::Double(s) => s.add(x),
            Accumulator::Extended(s) => s.add(x),
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Accumulator::Double(s) => s.value(),
            Accumulator::Extended(s) => s.value(),
        }
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I, precision: Precision) -> f64 {
    let mut acc = Accumulator::new(precision);
    for v in values {
        acc.add(v);
    }
    acc.value()
}
