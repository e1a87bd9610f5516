use super::GeneratorKind;

/// Mesh generating function `phi` on `[0, 1/2]` with `phi(0) = 0` and
/// `phi(1/2) = ln N`, together with its characterising function
/// `psi = exp(-phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshGenFunction {
    pub kind: GeneratorKind,
    /// Total number of mesh cells `N` the function is built for.
    pub n: usize,
}

impl MeshGenFunction {
    pub fn new(kind: GeneratorKind, n: usize) -> Self {
        MeshGenFunction { kind, n }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn n(&self) -> f64 {
        self.n as f64
    }

    pub fn phi(&self, t: f64) -> f64 {
        let n = self.n();
        match self.kind {
            GeneratorKind::Shishkin => 2.0 * t * libm::log(n),
            GeneratorKind::BakhvalovS => -libm::log(1.0 - 2.0 * (1.0 - 1.0 / n) * t),
        }
    }

    pub fn dphi(&self, t: f64) -> f64 {
        let n = self.n();
        match self.kind {
            GeneratorKind::Shishkin => 2.0 * libm::log(n),
            GeneratorKind::BakhvalovS => {
                let q = 2.0 * (1.0 - 1.0 / n);
                q / (1.0 - q * t)
            }
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        libm::exp(-self.phi(t))
    }

    /// `max phi'` over `[0, 1/2]`.
    pub fn max_dphi(&self) -> f64 {
        self.dphi(0.5)
    }

    /// `max |psi'|` over `[0, 1/2]`.
    pub fn max_abs_dpsi(&self) -> f64 {
        match self.kind {
            // psi = N^(-2t), |psi'| = 2 ln N N^(-2t)
            GeneratorKind::Shishkin => 2.0 * libm::log(self.n()),
            // psi = 1 - 2(1 - 1/N) t
            GeneratorKind::BakhvalovS => 2.0 * (1.0 - 1.0 / self.n()),
        }
    }
}
