//! Post-labeling: turns a trained, anonymous map into a classifier using a
//! handful of annotated samples.
//!
//! For every labeled sample, each neuron's activity `exp(-d / alpha)` is
//! divided by the activity of the best matching unit and added to the
//! neuron's accumulator for the sample's class. Class columns are then
//! averaged over the number of samples of that class, and each neuron takes
//! the class with the largest accumulator.

use crate::distance::activity;
use crate::error::{Error, Result};
use crate::som::SomMap;

/// Label of a neuron that received no evidence.
pub const UNLABELED: i32 = -1;

/// Per-neuron, per-class accumulated activity (`k x C`, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAccumulators {
    num_classes: usize,
    table: Vec<f64>,
    counts: Vec<u32>,
}

impl ClassAccumulators {
    pub fn new(neurons: usize, num_classes: usize) -> Self {
        Self {
            num_classes,
            table: vec![0.0; neurons * num_classes],
            counts: vec![0; num_classes],
        }
    }

    /// Rebuilds accumulators from stored values; entries must be finite and
    /// nonnegative.
    pub fn from_parts(num_classes: usize, table: Vec<f64>, counts: Vec<u32>) -> Result<Self> {
        if num_classes == 0 || !table.len().is_multiple_of(num_classes) || counts.len() != num_classes {
            return Err(Error::invalid("accumulator shape mismatch"));
        }
        if let Some(i) = table.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid(format!(
                "accumulator for neuron {} class {} is negative or not finite",
                i / num_classes,
                i % num_classes
            )));
        }
        Ok(Self {
            num_classes,
            table,
            counts,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn neurons(&self) -> usize {
        self.table.len() / self.num_classes.max(1)
    }

    pub fn get(&self, neuron: usize, class: usize) -> f64 {
        self.table[neuron * self.num_classes + class]
    }

    pub fn row(&self, neuron: usize) -> &[f64] {
        &self.table[neuron * self.num_classes..(neuron + 1) * self.num_classes]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Labeled samples seen per class.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

/// A map whose neurons carry class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSom {
    som: SomMap,
    labels: Vec<i32>,
    accumulators: ClassAccumulators,
    alpha: f64,
}

/// Labels the neurons of `som` from `(vector, class)` pairs with class ids
/// in `0..num_classes`, using kernel width `alpha`.
pub fn label_som<'a, I>(som: SomMap, labeled: I, num_classes: usize, alpha: f64) -> Result<LabeledSom>
where
    I: IntoIterator<Item = (&'a [f32], u32)>,
{
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if num_classes == 0 {
        return Err(Error::invalid("need at least one class"));
    }
    let k = som.len();
    let mut acc = ClassAccumulators::new(k, num_classes);
    let mut act = vec![0.0; k];
    let mut seen = 0usize;

    for (i, (v, class)) in labeled.into_iter().enumerate() {
        let c = class as usize;
        if c >= num_classes {
            return Err(Error::invalid(format!(
                "labeled sample {i}: unknown class {class} (have {num_classes})"
            )));
        }
        // 1. activities
        for (a, d) in act.iter_mut().zip(som.distances(v)?) {
            *a = activity(d, alpha);
        }
        // 2. best matching unit
        let mut bmu = 0;
        for (n, &a) in act.iter().enumerate().skip(1) {
            if a > act[bmu] {
                bmu = n;
            }
        }
        // 3. accumulate activities relative to the BMU
        let top = act[bmu];
        if top > 0.0 {
            for (n, &a) in act.iter().enumerate() {
                acc.table[n * num_classes + c] += a / top;
            }
        }
        acc.counts[c] += 1;
        seen += 1;
    }
    if seen == 0 {
        return Err(Error::invalid("labeled set is empty"));
    }

    // 4. average each class column over its sample count
    for row in acc.table.chunks_exact_mut(num_classes) {
        for (x, &count) in row.iter_mut().zip(&acc.counts) {
            if count > 0 {
                *x /= f64::from(count);
            }
        }
    }

    // 5. strongest class per neuron
    let labels = acc.table.chunks_exact(num_classes).map(strongest_class).collect();

    Ok(LabeledSom {
        som,
        labels,
        accumulators: acc,
        alpha,
    })
}

fn strongest_class(row: &[f64]) -> i32 {
    let mut best = 0;
    for (c, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = c;
        }
    }
    if row[best] > 0.0 {
        best as i32
    } else {
        UNLABELED
    }
}

impl LabeledSom {
    pub fn from_parts(som: SomMap, labels: Vec<i32>, accumulators: ClassAccumulators, alpha: f64) -> Result<Self> {
        if labels.len() != som.len() || accumulators.neurons() != som.len() {
            return Err(Error::invalid("labels or accumulators do not match the map size"));
        }
        let c = accumulators.num_classes() as i32;
        if let Some(n) = labels.iter().position(|&l| l != UNLABELED && !(0..c).contains(&l)) {
            return Err(Error::invalid(format!(
                "neuron {n} has label {} outside [-1, {c})",
                labels[n]
            )));
        }
        // Labels must agree with the table. Ties and values that rounded to
        // zero in storage are allowed, so this only rejects contradictions.
        for (n, &l) in labels.iter().enumerate() {
            let row = accumulators.row(n);
            let max = row.iter().copied().fold(0.0, f64::max);
            let consistent = match usize::try_from(l) {
                Ok(c) => row[c] == max,
                Err(_) => max == 0.0,
            };
            if !consistent {
                return Err(Error::invalid(format!(
                    "neuron {n} has label {l}, which is not its strongest class"
                )));
            }
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            som,
            labels,
            accumulators,
            alpha,
        })
    }

    pub fn som(&self) -> &SomMap {
        &self.som
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn accumulators(&self) -> &ClassAccumulators {
        &self.accumulators
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_classes(&self) -> usize {
        self.accumulators.num_classes()
    }

    pub fn labeled_neurons(&self) -> usize {
        self.labels.iter().filter(|&&l| l != UNLABELED).count()
    }

    /// Label of the most active labeled neuron, i.e. the nearest labeled
    /// prototype; ties go to the lowest neuron index.
    pub fn predict(&self, v: &[f32]) -> Result<u32> {
        let dist = self.som.distances(v)?;
        let mut best: Option<(usize, f64)> = None;
        for (n, (&label, &d)) in self.labels.iter().zip(&dist).enumerate() {
            if label != UNLABELED && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((n, d));
            }
        }
        match best {
            Some((n, _)) => Ok(self.labels[n] as u32),
            None => Err(Error::InvalidState("no neuron carries a label".into())),
        }
    }

    /// Fraction of `(vector, class)` queries predicted correctly.
    pub fn evaluate<'a, I>(&self, queries: I) -> Result<f64>
    where
        I: IntoIterator<Item = (&'a [f32], u32)>,
    {
        let (mut correct, mut total) = (0usize, 0usize);
        for (v, class) in queries {
            if self.predict(v)? == class {
                correct += 1;
            }
            total += 1;
        }
        if total == 0 {
            return Err(Error::invalid("no queries to evaluate"));
        }
        Ok(correct as f64 / total as f64)
    }
}
