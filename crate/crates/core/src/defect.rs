/// Max-norm discrepancy of an identity together with the magnitude of the
/// terms it balances. Thresholds are applied by callers, not here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect {
    pub max_abs: f64,
    pub scale: f64,
}

impl Defect {
    pub fn new(max_abs: f64, scale: f64) -> Self {
        Defect { max_abs, scale }
    }

    /// Defect divided by `max(scale, 1)`.
    pub fn relative(&self) -> f64 {
        self.max_abs / self.scale.max(1.0)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.relative() <= tol
    }
}
