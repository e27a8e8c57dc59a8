use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::basis::{Basis, BasisSpec};
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;

/// Truncated Hermite expansion `f ~ sum_k c_k h_k` with `c_k` stored in basis order.
#[derive(Debug, Clone)]
pub struct HermiteSeries {
    basis: Basis,
    coeffs: Vec<f64>,
}

/// Sobolev weight `(2|k| + d)^{2p}`.
pub fn sobolev_weight(k_total: usize, d: usize, p: f64) -> f64 {
    ((2 * k_total + d) as f64).powf(2.0 * p)
}

impl HermiteSeries {
    pub fn zeros(basis: &Basis) -> Self {
        HermiteSeries {
            basis: basis.clone(),
            coeffs: vec![0.0; basis.len()],
        }
    }

    pub fn from_coeffs(basis: &Basis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::BasisMismatch(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(HermiteSeries {
            basis: basis.clone(),
            coeffs,
        })
    }

    /// `h_k` itself.
    pub fn unit(basis: &Basis, k: &MultiIndex) -> Result<Self> {
        let pos = basis
            .position(k)
            .ok_or_else(|| Error::InvalidArgument(format!("index {k} outside the basis")))?;
        let mut s = HermiteSeries::zeros(basis);
        s.coeffs[pos] = 1.0;
        Ok(s)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `h_k`; zero outside the truncation.
    pub fn get(&self, k: &MultiIndex) -> f64 {
        self.basis.position(k).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn scale(&self, a: f64) -> Self {
        HermiteSeries {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &HermiteSeries) -> Result<()> {
        self.basis.check_same(&other.basis)?;
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
        Ok(())
    }

    pub fn sub(&self, other: &HermiteSeries) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Re-expresses the series in another basis of the same dimension,
    /// dropping or zero-padding coefficients.
    pub fn restrict(&self, target: &Basis) -> Result<Self> {
        if target.d() != self.basis.d() {
            return Err(Error::BasisMismatch(format!(
                "cannot move a d={} series to d={}",
                self.basis.d(),
                target.d()
            )));
        }
        let mut out = HermiteSeries::zeros(target);
        let n = target.len().min(self.basis.len());
        // graded-lex order means a smaller basis is a prefix of a larger one
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        Ok(out)
    }

    /// `⟨f, f⟩_p` without the square root.
    pub fn sobolev_norm_sq(&self, p: f64) -> f64 {
        let d = self.basis.d();
        self.basis
            .indices()
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| sobolev_weight(k.total(), d, p) * c * c)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// `⟨f, g⟩_p = sum_k (2|k| + d)^{2p} f_k g_k`.
pub fn sobolev_inner(f: &HermiteSeries, g: &HermiteSeries, p: f64) -> Result<f64> {
    f.basis.check_same(&g.basis)?;
    let d = f.basis.d();
    Ok(f.basis
        .indices()
        .iter()
        .zip(f.coeffs.iter().zip(&g.coeffs))
        .map(|(k, (a, b))| sobolev_weight(k.total(), d, p) * a * b)
        .sum())
}

pub fn sobolev_norm(f: &HermiteSeries, p: f64) -> f64 {
    f.sobolev_norm_sq(p).sqrt()
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    d: usize,
    n_max: usize,
    entries: Vec<(MultiIndex, f64)>,
}

impl Serialize for HermiteSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            d: self.basis.d(),
            n_max: self.basis.n_max(),
            entries: self
                .basis
                .indices()
                .iter()
                .cloned()
                .zip(self.coeffs.iter().copied())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermiteSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SeriesJson::deserialize(deserializer)?;
        let basis = Basis::new(BasisSpec::new(raw.d, raw.n_max)).map_err(D::Error::custom)?;
        let mut out = HermiteSeries::zeros(&basis);
        for (k, c) in raw.entries {
            if k.dim() != raw.d {
                return Err(D::Error::custom(format!("index {k} has wrong dimension")));
            }
            let pos = basis
                .position(&k)
                .ok_or_else(|| D::Error::custom(format!("index {k} exceeds n_max")))?;
            out.coeffs[pos] = c;
        }
        Ok(out)
    }
}
