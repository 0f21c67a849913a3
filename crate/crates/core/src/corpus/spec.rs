use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::codec::{Reader, Writer};
use crate::error::{DecodeError, Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FactorSpec {
    pub name: String,
    pub cardinality: usize,
    pub transform_strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CorpusSpec {
    pub n_frames: usize,
    pub input_dim: usize,
    pub n_classes: usize,
    pub factors: Vec<FactorSpec>,
    /// Distance between any two class means.
    pub class_separation: f64,
    /// Isotropic spread of the source clusters.
    pub noise_sigma: f64,
    /// Spread of the fresh noise added to non-identity target frames.
    pub target_noise_sigma: f64,
    pub seed: u64,
    pub include_identity_condition: bool,
}

impl Default for CorpusSpec {
    /// The bundled pilot corpus: four classes in eight dimensions, a three-way
    /// environment factor and a four-way speaker factor, each with an
    /// identity condition.
    fn default() -> Self {
        Self {
            n_frames: 10_000,
            input_dim: 8,
            n_classes: 4,
            factors: alloc::vec![
                FactorSpec { name: "environment".into(), cardinality: 3, transform_strength: 25.0 },
                FactorSpec { name: "speaker".into(), cardinality: 4, transform_strength: 25.0 },
            ],
            class_separation: 5.0,
            noise_sigma: 1.0,
            target_noise_sigma: 0.3,
            seed: 0,
            include_identity_condition: true,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 {
            return Err(Error::spec("n_frames must be at least 1"));
        }
        if self.n_classes == 0 {
            return Err(Error::spec("n_classes must be at least 1"));
        }
        if self.input_dim < self.n_classes {
            return Err(Error::spec(format!(
                "input_dim {} must be at least n_classes {} to place class means on a simplex",
                self.input_dim, self.n_classes
            )));
        }
        if !(self.class_separation > 0.0) || !self.class_separation.is_finite() {
            return Err(Error::spec("class_separation must be positive"));
        }
        if !(self.noise_sigma >= 0.0) || !(self.target_noise_sigma >= 0.0) {
            return Err(Error::spec("noise levels must be nonnegative"));
        }
        if self.input_dim == self.n_classes && self.factors.iter().any(|f| f.transform_strength > 0.0) {
            return Err(Error::spec(
                "input_dim must exceed n_classes when a factor distorts: distortions live outside the class-mean span",
            ));
        }
        for (i, f) in self.factors.iter().enumerate() {
            if f.cardinality == 0 {
                return Err(Error::spec(format!("factor `{}` needs cardinality >= 1", f.name)));
            }
            if !(f.transform_strength >= 0.0) || !f.transform_strength.is_finite() {
                return Err(Error::spec(format!("factor `{}` transform_strength must be >= 0", f.name)));
            }
            if self.factors[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::spec(format!("duplicate factor name `{}`", f.name)));
            }
        }
        Ok(())
    }

    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }

    pub fn factor_index(&self, name: &str) -> Result<usize> {
        self.factors.iter().position(|f| f.name == name).ok_or_else(|| Error::UnknownFactor {
            name: name.into(),
            available: self.factor_names(),
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.u64(self.n_frames as u64);
        w.u32(self.input_dim as u32);
        w.u32(self.n_classes as u32);
        w.u32(self.factors.len() as u32);
        for f in &self.factors {
            w.str(&f.name);
            w.u32(f.cardinality as u32);
            w.f64(f.transform_strength);
        }
        w.f64(self.class_separation);
        w.f64(self.noise_sigma);
        w.f64(self.target_noise_sigma);
        w.u64(self.seed);
        w.u8(self.include_identity_condition as u8);
        w.into_inner()
    }

    pub fn decode(bytes: &[u8]) -> core::result::Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let n_frames = r.u64("corpus.n_frames")? as usize;
        let input_dim = r.u32("corpus.input_dim")? as usize;
        let n_classes = r.u32("corpus.n_classes")? as usize;
        let nf = r.u32("corpus.factors")? as usize;
        let mut factors = Vec::new();
        for _ in 0..nf {
            factors.push(FactorSpec {
                name: r.string("corpus.factor.name")?,
                cardinality: r.u32("corpus.factor.cardinality")? as usize,
                transform_strength: r.f64("corpus.factor.transform_strength")?,
            });
        }
        let spec = Self {
            n_frames,
            input_dim,
            n_classes,
            factors,
            class_separation: r.f64("corpus.class_separation")?,
            noise_sigma: r.f64("corpus.noise_sigma")?,
            target_noise_sigma: r.f64("corpus.target_noise_sigma")?,
            seed: r.u64("corpus.seed")?,
            include_identity_condition: match r.u8("corpus.include_identity_condition")? {
                0 => false,
                1 => true,
                _ => return Err(DecodeError::Malformed("corpus.include_identity_condition")),
            },
        };
        r.expect_end()?;
        spec.validate().map_err(|_| DecodeError::Malformed("corpus spec"))?;
        Ok(spec)
    }
}
