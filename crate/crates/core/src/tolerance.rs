/// Thresholds used by every pointwise verdict. Several are relative: the
/// effective value is `base · (1 + scale)` where `scale` is the largest
/// magnitude of the quantity being tested on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Curvature counts as zero below `flat · (1 + max|θ|)`.
    pub flat: f64,
    /// `|tr U| ≤ trace · max|U|`.
    pub trace: f64,
    /// `det U ≥ det · max|U|²`.
    pub det: f64,
    /// `|θ'ᵢⱼ + θ'ⱼᵢ| ≤ skew · (1 + max|θ'|)`.
    pub skew: f64,
    /// Compatibility residual bound, relative like `skew`.
    pub compat: f64,
    /// Residual bound for the closed-form matrix kernels.
    pub kernel: f64,
    /// Loop holonomy or period integral counted as a global obstruction.
    pub defect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            flat: 1e-9,
            trace: 1e-8,
            det: 1e-10,
            skew: 1e-8,
            compat: 1e-8,
            kernel: 1e-10,
            defect: 1e-6,
        }
    }
}

impl Tolerances {
    /// Multiplies every threshold by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        Tolerances {
            flat: self.flat * factor,
            trace: self.trace * factor,
            det: self.det * factor,
            skew: self.skew * factor,
            compat: self.compat * factor,
            kernel: self.kernel * factor,
            defect: self.defect * factor,
        }
    }

    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("compat", self.compat),
            ("defect", self.defect),
            ("det", self.det),
            ("flat", self.flat),
            ("kernel", self.kernel),
            ("skew", self.skew),
            ("trace", self.trace),
        ]
    }
}
