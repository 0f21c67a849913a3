use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::codec::{Reader, Writer};
use crate::error::{DecodeError, Error, Result};

/// Hidden widths of a condition head when the configuration gives none.
pub const DEFAULT_HEAD_HIDDEN: [usize; 2] = [32, 32];

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorHead {
    pub name: String,
    pub classes: usize,
}

/// Architecture of the teacher, the factored student, and its condition heads.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub task_classes: usize,
    /// Number of hidden layers in the feature extractor; the feature tap
    /// sits after hidden layer `split_index`.
    pub split_index: usize,
    pub factors: Vec<FactorHead>,
    pub condition_head_hidden: Vec<usize>,
}

impl NetSpec {
    /// Spec with the feature tap after the last hidden layer and no factors.
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, task_classes: usize) -> Self {
        let split_index = hidden_dims.len();
        Self {
            input_dim,
            hidden_dims,
            task_classes,
            split_index,
            factors: Vec::new(),
            condition_head_hidden: DEFAULT_HEAD_HIDDEN.to_vec(),
        }
    }

    pub fn with_factors(mut self, factors: Vec<FactorHead>) -> Self {
        self.factors = factors;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.task_classes == 0 {
            return Err(Error::spec("input_dim and task_classes must be positive"));
        }
        if self.hidden_dims.is_empty() {
            return Err(Error::spec("at least one hidden layer is required"));
        }
        if self.hidden_dims.iter().chain(&self.condition_head_hidden).any(|&d| d == 0) {
            return Err(Error::spec("layer widths must be positive"));
        }
        if self.split_index == 0 || self.split_index > self.hidden_dims.len() {
            return Err(Error::spec(format!(
                "split_index {} outside 1..={}",
                self.split_index,
                self.hidden_dims.len()
            )));
        }
        for f in &self.factors {
            if f.classes == 0 {
                return Err(Error::spec(format!("factor `{}` has no classes", f.name)));
            }
        }
        Ok(())
    }

    /// Teacher widths `[input, hidden..., classes]`.
    pub fn teacher_dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden_dims.len() + 2);
        d.push(self.input_dim);
        d.extend_from_slice(&self.hidden_dims);
        d.push(self.task_classes);
        d
    }

    pub fn feature_dim(&self) -> usize {
        self.hidden_dims[self.split_index - 1]
    }

    pub fn head_dims(&self, factor: usize) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.condition_head_hidden.len() + 2);
        d.push(self.feature_dim());
        d.extend_from_slice(&self.condition_head_hidden);
        d.push(self.factors[factor].classes);
        d
    }

    /// True when `other` describes the same teacher (input, hidden, classes).
    pub fn same_teacher(&self, other: &NetSpec) -> bool {
        self.teacher_dims() == other.teacher_dims()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.u32(self.input_dim as u32);
        w.u32(self.hidden_dims.len() as u32);
        for &h in &self.hidden_dims {
            w.u32(h as u32);
        }
        w.u32(self.task_classes as u32);
        w.u32(self.split_index as u32);
        w.u32(self.factors.len() as u32);
        for f in &self.factors {
            w.str(&f.name);
            w.u32(f.classes as u32);
        }
        w.u32(self.condition_head_hidden.len() as u32);
        for &h in &self.condition_head_hidden {
            w.u32(h as u32);
        }
        w.into_inner()
    }

    pub fn decode(bytes: &[u8]) -> core::result::Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let input_dim = r.u32("net.input_dim")? as usize;
        let n = r.u32("net.hidden")? as usize;
        let hidden_dims = read_dims(&mut r, n, "net.hidden")?;
        let task_classes = r.u32("net.task_classes")? as usize;
        let split_index = r.u32("net.split_index")? as usize;
        let nf = r.u32("net.factors")? as usize;
        let mut factors = Vec::new();
        for _ in 0..nf {
            let name = r.string("net.factor.name")?;
            let classes = r.u32("net.factor.classes")? as usize;
            factors.push(FactorHead { name, classes });
        }
        let nh = r.u32("net.head_hidden")? as usize;
        let condition_head_hidden = read_dims(&mut r, nh, "net.head_hidden")?;
        r.expect_end()?;
        let spec = Self { input_dim, hidden_dims, task_classes, split_index, factors, condition_head_hidden };
        spec.validate().map_err(|_| DecodeError::Malformed("net spec"))?;
        Ok(spec)
    }
}

fn read_dims(r: &mut Reader<'_>, n: usize, what: &'static str) -> core::result::Result<Vec<usize>, DecodeError> {
    Ok(r.u32s(n, what)?.into_iter().map(|v| v as usize).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn split_bounds() {
        let mut s = NetSpec::new(4, vec![8, 8], 3);
        assert_eq!(s.split_index, 2);
        s.validate().unwrap();
        s.split_index = 0;
        assert!(s.validate().is_err());
        s.split_index = 3;
        assert!(s.validate().is_err());
    }

    #[test]
    fn canonical_encoding_round_trips() {
        let s = NetSpec::new(4, vec![8, 6], 3)
            .with_factors(vec![FactorHead { name: "environment".into(), classes: 3 }]);
        assert_eq!(NetSpec::decode(&s.encode()).unwrap(), s);
        assert_eq!(s.head_dims(0), vec![6, 32, 32, 3]);
    }
}
