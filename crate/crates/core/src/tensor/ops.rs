use super::Tensor;
use crate::error::{Error, Result};

pub fn leaky_relu(x: &Tensor, slope: f32) -> Tensor {
    let mut y = x.clone();
    leaky_relu_inplace(&mut y, slope);
    y
}

pub fn leaky_relu_inplace(x: &mut Tensor, slope: f32) {
    for v in x.data_mut() {
        if *v < 0.0 {
            *v *= slope;
        }
    }
}

/// ShuffleNet channel shuffle: input channel `c` lands at
/// `(c % groups) * (C / groups) + c / groups`.
pub fn channel_shuffle(x: &Tensor, groups: usize) -> Result<Tensor> {
    let c = x.channels();
    if groups == 0 || !c.is_multiple_of(groups) {
        return Err(Error::Shape(format!(
            "{groups} groups do not divide {c} channels"
        )));
    }
    let per_group = c / groups;
    let n = x.channel_len();
    let mut data = vec![0.0; x.len()];
    for src in 0..c {
        let dst = (src % groups) * per_group + src / groups;
        data[dst * n..(dst + 1) * n].copy_from_slice(x.channel(src));
    }
    Tensor::new(x.shape().to_vec(), data)
}

/// Splits the channel axis into two contiguous halves.
pub fn channel_split(x: &Tensor) -> Result<(Tensor, Tensor)> {
    let c = x.channels();
    if !c.is_multiple_of(2) {
        return Err(Error::Shape(format!("cannot split {c} channels in half")));
    }
    let mut shape = x.shape().to_vec();
    shape[0] = c / 2;
    let mid = x.len() / 2;
    Ok((
        Tensor::new(shape.clone(), x.data()[..mid].to_vec())?,
        Tensor::new(shape, x.data()[mid..].to_vec())?,
    ))
}

/// Stacks `b`'s channels after `a`'s.
pub fn channel_concat(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.ndim() != b.ndim() || a.shape()[1..] != b.shape()[1..] {
        return Err(Error::Shape(format!(
            "cannot concatenate {:?} with {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut shape = a.shape().to_vec();
    shape[0] += b.channels();
    let mut data = Vec::with_capacity(a.len() + b.len());
    data.extend_from_slice(a.data());
    data.extend_from_slice(b.data());
    Tensor::new(shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(c: usize, n: usize) -> Tensor {
        Tensor::new(
            vec![c, n],
            (0..c)
                .flat_map(|ch| std::iter::repeat_n(ch as f32, n))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn leaky_relu_values() {
        let x = Tensor::new(vec![3], vec![2.0, -1.0, 0.0]).unwrap();
        let y = leaky_relu(&x, 0.1);
        assert_eq!(y.data()[0], 2.0);
        assert!((y.data()[1] + 0.1).abs() < 1e-7);
        assert_eq!(y.data()[2], 0.0);
    }

    #[test]
    fn shuffle_two_groups() {
        let y = channel_shuffle(&labelled(4, 2), 2).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 2.0, 2.0, 1.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn shuffle_one_group_is_identity() {
        let x = labelled(5, 3);
        assert_eq!(channel_shuffle(&x, 1).unwrap(), x);
    }

    #[test]
    fn shuffle_inverse() {
        let x = labelled(6, 2);
        let y = channel_shuffle(&channel_shuffle(&x, 2).unwrap(), 3).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn shuffle_rejects_bad_groups() {
        assert!(channel_shuffle(&labelled(6, 1), 4).is_err());
    }

    #[test]
    fn split_and_concat() {
        let x = labelled(2, 3);
        let (a, b) = channel_split(&x).unwrap();
        assert_eq!(a.shape(), &[1, 3]);
        assert_eq!(b.data(), &[1.0; 3]);
        assert_eq!(channel_concat(&a, &b).unwrap(), x);
        assert!(channel_split(&labelled(3, 2)).is_err());
    }

    #[test]
    fn concat_with_zeros() {
        let x = labelled(3, 4);
        let y = channel_concat(&x, &Tensor::zeros_like(&x)).unwrap();
        assert_eq!(y.shape(), &[6, 4]);
        assert_eq!(&y.data()[..12], x.data());
        assert!(channel_concat(&x, &Tensor::zeros(&[3, 5])).is_err());
    }
}
