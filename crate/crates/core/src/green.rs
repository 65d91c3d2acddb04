use num_complex::Complex64;

/// 2x2 Green matrix between the two end sites of the N-fold sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenMatrix2 {
    pub ll: Complex64,
    pub lr: Complex64,
    pub rl: Complex64,
    pub rr: Complex64,
    pub energy: f64,
    pub n: u64,
}

impl GreenMatrix2 {
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.ll * v[0] + self.lr * v[1],
            self.rl * v[0] + self.rr * v[1],
        ]
    }
}
