use super::{Arch, Real};

/// One tensor per weight and bias of the network, stored flat.
///
/// Conv weights are laid out `[out][in][k]`, dense weights `[out][in]`.
/// The same structure holds gradients and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<F> {
    pub conv_w: [Vec<F>; 4],
    pub conv_b: [Vec<F>; 4],
    pub dense_w: [Vec<F>; 3],
    pub dense_b: [Vec<F>; 3],
}

impl<F: Real> ParamSet<F> {
    pub fn zeros(arch: &Arch) -> Self {
        let conv_w = std::array::from_fn(|k| {
            let (o, i, kk) = arch.conv_shape(k);
            vec![F::zero(); o * i * kk]
        });
        let conv_b = std::array::from_fn(|k| vec![F::zero(); arch.conv_shape(k).0]);
        let dense_w = std::array::from_fn(|k| {
            let (o, i) = arch.dense_shape(k);
            vec![F::zero(); o * i]
        });
        let dense_b = std::array::from_fn(|k| vec![F::zero(); arch.dense_shape(k).0]);
        ParamSet {
            conv_w,
            conv_b,
            dense_w,
            dense_b,
        }
    }

    /// Tensors in serialization order: conv1..conv4 weights, conv biases,
    /// dense1..dense3 weights, dense biases.
    pub fn tensors(&self) -> impl Iterator<Item = &Vec<F>> {
        self.conv_w
            .iter()
            .chain(&self.conv_b)
            .chain(&self.dense_w)
            .chain(&self.dense_b)
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<F>> {
        self.conv_w
            .iter_mut()
            .chain(&mut self.conv_b)
            .chain(&mut self.dense_w)
            .chain(&mut self.dense_b)
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.tensors().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_shape<G>(&self, other: &ParamSet<G>) -> bool {
        self.conv_w.iter().zip(&other.conv_w).all(|(a, b)| a.len() == b.len())
            && self.conv_b.iter().zip(&other.conv_b).all(|(a, b)| a.len() == b.len())
            && self.dense_w.iter().zip(&other.dense_w).all(|(a, b)| a.len() == b.len())
            && self.dense_b.iter().zip(&other.dense_b).all(|(a, b)| a.len() == b.len())
    }

    fn locate(&self, mut index: usize) -> (usize, usize) {
        for (t, tensor) in self.tensors().enumerate() {
            if index < tensor.len() {
                return (t, index);
            }
            index -= tensor.len();
        }
        panic!("parameter index out of range");
    }

    /// Scalar at flat position `index` in serialization order.
    pub fn get(&self, index: usize) -> F {
        let (t, i) = self.locate(index);
        self.tensors().nth(t).unwrap()[i]
    }

    pub fn set(&mut self, index: usize, value: F) {
        let (t, i) = self.locate(index);
        self.tensors_mut().nth(t).unwrap()[i] = value;
    }

    pub fn to_vec(&self) -> Vec<F> {
        self.tensors().flatten().copied().collect()
    }

    pub fn cast<G: Real>(&self) -> ParamSet<G> {
        let conv = |v: &Vec<F>| v.iter().map(|&x| G::lit(x.as_f64())).collect::<Vec<G>>();
        ParamSet {
            conv_w: std::array::from_fn(|k| conv(&self.conv_w[k])),
            conv_b: std::array::from_fn(|k| conv(&self.conv_b[k])),
            dense_w: std::array::from_fn(|k| conv(&self.dense_w[k])),
            dense_b: std::array::from_fn(|k| conv(&self.dense_b[k])),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().flatten().all(|x| x.is_finite())
    }

    pub(crate) fn scale(&mut self, factor: F) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }
}
