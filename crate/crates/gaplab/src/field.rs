//! Pointwise-evaluable scalar fields and bivariate weights.

use crate::error::{GapError, Result};

/// A scalar field over ℝ^d. Evaluation must be pure (thread-safe by
/// construction); evaluation outside the declared support box returns 0.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// A.e. gradient written into `out`; fields without gradient data
    /// report `MissingGradient`.
    fn gradient(&self, _x: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(GapError::MissingGradient)
    }

    /// Declared support box, if compactly supported.
    fn support(&self) -> Option<Vec<[f64; 2]>> {
        None
    }
}

pub fn in_box(x: &[f64], support: &[[f64; 2]]) -> bool {
    x.iter().zip(support).all(|(t, iv)| *t >= iv[0] && *t <= iv[1])
}

/// Closure-backed field for oracles and randomized test families.
pub struct FnField<F: Fn(&[f64]) -> f64 + Send + Sync> {
    d: usize,
    f: F,
    support: Option<Vec<[f64; 2]>>,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnField<F> {
    pub fn new(d: usize, f: F) -> Self {
        Self { d, f, support: None }
    }

    pub fn with_support(d: usize, support: Vec<[f64; 2]>, f: F) -> Self {
        Self { d, f, support: Some(support) }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if let Some(s) = &self.support {
            if !in_box(x, s) {
                return 0.0;
            }
        }
        (self.f)(x)
    }

    fn support(&self) -> Option<Vec<[f64; 2]>> {
        self.support.clone()
    }
}

/// Closure-backed field with an analytic gradient.
pub struct GradFnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    d: usize,
    f: F,
    g: G,
    support: Option<Vec<[f64; 2]>>,
}

impl<F, G> GradFnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(d: usize, f: F, g: G) -> Self {
        Self { d, f, g, support: None }
    }

    pub fn with_support(d: usize, support: Vec<[f64; 2]>, f: F, g: G) -> Self {
        Self { d, f, g, support: Some(support) }
    }
}

impl<F, G> Field for GradFnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if let Some(s) = &self.support {
            if !in_box(x, s) {
                return 0.0;
            }
        }
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if let Some(s) = &self.support {
            if !in_box(x, s) {
                out.fill(0.0);
                return Ok(());
            }
        }
        (self.g)(x, out);
        Ok(())
    }

    fn support(&self) -> Option<Vec<[f64; 2]>> {
        self.support.clone()
    }
}

/// Central finite-difference gradient, for cross-checks against analytic ones.
pub fn fd_gradient(field: &dyn Field, x: &[f64], h: f64, out: &mut [f64]) {
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = field.eval(&xp);
        xp[i] = x[i] - h;
        let fm = field.eval(&xp);
        xp[i] = x[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
}

/// Symmetric bivariate weight `a(y, z) >= 0`.
pub trait PairWeight: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[f64], z: &[f64]) -> f64;
}

/// Constant weight; `ConstWeight(1.0)` reduces the weighted phase to the
/// plain Gagliardo phase.
pub struct ConstWeight(pub f64, pub usize);

impl PairWeight for ConstWeight {
    fn dim(&self) -> usize {
        self.1
    }

    fn eval(&self, _y: &[f64], _z: &[f64]) -> f64 {
        self.0
    }
}

/// Univariate weight `a(x) >= 0` for the local second phase.
pub trait UniWeight: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
}

pub struct ConstUniWeight(pub f64, pub usize);

impl UniWeight for ConstUniWeight {
    fn dim(&self) -> usize {
        self.1
    }

    fn eval(&self, _x: &[f64]) -> f64 {
        self.0
    }
}
