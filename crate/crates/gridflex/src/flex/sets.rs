use super::FlexError;

/// Shape of the adjustable uncertainty set `T(alpha)` around the nominal
/// demand vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetShape {
    /// Two-sided box: `center - alpha*dev_neg <= xi <= center + alpha*dev_pos`.
    Hyperbox,
    /// Weighted 1-norm ball of radius alpha.
    L1,
    /// Weighted infinity-norm ball of radius alpha.
    Linf,
    /// Ellipsoid; representable but not solvable by the linear backends.
    Ellipsoid,
}

/// Adjustable uncertainty set in MW coordinates.
#[derive(Debug, Clone)]
pub struct UncertaintySet {
    pub shape: SetShape,
    /// Nominal point, MW.
    pub center: Vec<f64>,
    /// Downward deviation per unit alpha, MW (hyperbox) or weight (balls).
    pub dev_neg: Vec<f64>,
    /// Upward deviation per unit alpha, MW or weight.
    pub dev_pos: Vec<f64>,
}

impl UncertaintySet {
    pub fn hyperbox(center: Vec<f64>, dev_neg: Vec<f64>, dev_pos: Vec<f64>) -> Self {
        UncertaintySet { shape: SetShape::Hyperbox, center, dev_neg, dev_pos }
    }

    /// Symmetric box with deviations `frac * center`.
    pub fn hyperbox_fraction(center: Vec<f64>, frac: f64) -> Self {
        let dev: Vec<f64> = center.iter().map(|v| frac * v.abs()).collect();
        UncertaintySet { shape: SetShape::Hyperbox, center, dev_neg: dev.clone(), dev_pos: dev }
    }

    pub fn l1(center: Vec<f64>, weights: Vec<f64>) -> Self {
        UncertaintySet { shape: SetShape::L1, center, dev_neg: weights.clone(), dev_pos: weights }
    }

    pub fn linf(center: Vec<f64>, weights: Vec<f64>) -> Self {
        UncertaintySet { shape: SetShape::Linf, center, dev_neg: weights.clone(), dev_pos: weights }
    }

    pub fn ellipsoid(center: Vec<f64>, semi_axes: Vec<f64>) -> Self {
        UncertaintySet { shape: SetShape::Ellipsoid, center, dev_neg: semi_axes.clone(), dev_pos: semi_axes }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self, n_xi: usize) -> Result<(), FlexError> {
        if self.center.len() != n_xi || self.dev_neg.len() != n_xi || self.dev_pos.len() != n_xi {
            return Err(FlexError::Argument(format!(
                "set dimension {} does not match the system's {} uncertain parameters",
                self.center.len(),
                n_xi
            )));
        }
        for v in self.center.iter().chain(&self.dev_neg).chain(&self.dev_pos) {
            if !v.is_finite() {
                return Err(FlexError::Argument("set data must be finite".into()));
            }
        }
        if self.dev_neg.iter().chain(&self.dev_pos).any(|&d| d < 0.0) {
            return Err(FlexError::Argument("deviations must be nonnegative".into()));
        }
        Ok(())
    }

    /// True when `T(alpha)` is the single point `center` for every alpha.
    pub fn is_degenerate(&self) -> bool {
        self.dev_neg.iter().all(|&d| d == 0.0) && self.dev_pos.iter().all(|&d| d == 0.0)
    }

    /// The candidate worst-case points of `T(alpha)`: box corners for
    /// Hyperbox/Linf, the 2n axis extremes for L1. Since the feasibility
    /// function is convex, the worst case over the set is attained here.
    pub fn vertices(&self, alpha: f64) -> Result<Vec<Vec<f64>>, FlexError> {
        let n = self.dim();
        match self.shape {
            SetShape::Hyperbox | SetShape::Linf => {
                let free: Vec<usize> = (0..n)
                    .filter(|&k| self.dev_neg[k] > 0.0 || self.dev_pos[k] > 0.0)
                    .collect();
                let mut out = Vec::with_capacity(1 << free.len());
                for mask in 0..(1u64 << free.len()) {
                    let mut v = self.center.clone();
                    for (bit, &k) in free.iter().enumerate() {
                        if mask >> bit & 1 == 1 {
                            v[k] += alpha * self.dev_pos[k];
                        } else {
                            v[k] -= alpha * self.dev_neg[k];
                        }
                    }
                    out.push(v);
                }
                Ok(out)
            }
            SetShape::L1 => {
                let mut out = Vec::with_capacity(2 * n);
                for k in 0..n {
                    if self.dev_pos[k] > 0.0 {
                        let mut v = self.center.clone();
                        v[k] += alpha * self.dev_pos[k];
                        out.push(v);
                    }
                    if self.dev_neg[k] > 0.0 {
                        let mut v = self.center.clone();
                        v[k] -= alpha * self.dev_neg[k];
                        out.push(v);
                    }
                }
                if out.is_empty() {
                    out.push(self.center.clone());
                }
                Ok(out)
            }
            SetShape::Ellipsoid => Err(FlexError::UnsupportedShape(
                "ellipsoidal sets have no finite candidate-vertex list".into(),
            )),
        }
    }

    /// Largest sensible alpha before some demand in the set goes negative
    /// by more than the whole nominal value; used to sanity-cap searches.
    pub fn natural_cap(&self) -> f64 {
        let mut cap = f64::INFINITY;
        for k in 0..self.dim() {
            if self.dev_neg[k] > 0.0 && self.center[k] > 0.0 {
                cap = cap.min(self.center[k] / self.dev_neg[k]);
            }
        }
        cap
    }
}
