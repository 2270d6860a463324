use rug::Float;

use crate::error::{Error, Result};

/// Working precision for coefficient arithmetic and the relative tolerance
/// used to size truncations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionContext {
    bits: u32,
    tol: f64,
}

impl PrecisionContext {
    pub const DEFAULT_BITS: u32 = 256;
    pub const DEFAULT_TOL: f64 = 1e-30;

    pub fn new(bits: u32, tol: f64) -> Result<Self> {
        if bits < 64 {
            return Err(Error::InvalidArgument(format!(
                "precision must be at least 64 bits, got {bits}"
            )));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must lie in (0, 1), got {tol}"
            )));
        }
        Ok(Self { bits, tol })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Same tolerance at twice the mantissa width.
    pub fn escalated(&self) -> Self {
        Self {
            bits: self.bits.saturating_mul(2),
            tol: self.tol,
        }
    }

    pub fn zero(&self) -> Float {
        Float::new(self.bits)
    }

    pub fn float<T>(&self, v: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.bits, v)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self {
            bits: Self::DEFAULT_BITS,
            tol: Self::DEFAULT_TOL,
        }
    }
}
