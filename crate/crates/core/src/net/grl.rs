use crate::tensor::Matrix;

/// Gradient reversal: identity on the way forward, `−λ·g` on the way back.
///
/// `lambda` is read at backward time, so it can be changed between steps
/// without rebuilding the graph.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grl {
    pub lambda: f64,
}

impl Grl {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        x.clone()
    }

    pub fn backward(&self, grad: &Matrix) -> Matrix {
        let k = -self.lambda;
        grad.map(|g| k * g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{rng_uniform, Rng};

    #[test]
    fn identity_forward_reversed_backward() {
        let mut rng = Rng::new(4);
        let x = rng_uniform(&mut rng, -3.0, 3.0, 4, 5).unwrap();
        for lambda in [0.0, 1.0, 5.0] {
            let grl = Grl::new(lambda);
            let y = grl.forward(&x);
            assert!(y.as_slice().iter().zip(x.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
            let g = grl.backward(&x);
            for (gi, xi) in g.as_slice().iter().zip(x.as_slice()) {
                assert_eq!(*gi, -lambda * xi);
            }
        }
    }
}
