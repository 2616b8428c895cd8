use crate::tensor::{ConvParams, Tensor};

/// Anything that owns named weight tensors.
///
/// Visiting order is stable and defines the checkpoint layout.
pub trait Params {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, t| n += t.len());
        n
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

impl<const D: usize> Params for ConvParams<D> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        f(join(prefix, "weight"), &self.weight);
        f(join(prefix, "bias"), &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        f(join(prefix, "weight"), &mut self.weight);
        f(join(prefix, "bias"), &mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_conv_count() {
        let conv = ConvParams::<1>::new(2, 4, [3]);
        assert_eq!(conv.num_params(), 2 * 4 * 3 + 4);
        let mut names = Vec::new();
        conv.visit("conv_pre", &mut |n, _| names.push(n));
        assert_eq!(names, ["conv_pre.weight", "conv_pre.bias"]);
    }
}
