mod common;

use common::{oracle1d, oracle2d, random_case, rel_err, rng};
use istftnet_core::tensor::{
    channel_shuffle, conv1d, conv2d, conv_transpose1d, conv_transpose2d, Conv1dParams,
};
use istftnet_core::Tensor;
use proptest::prelude::*;

const CASES: usize = 150;
const TOL: f64 = 1e-5;

#[test]
fn conv1d_matches_oracle() {
    let mut r = rng(11);
    for i in 0..CASES {
        let (x, p) = random_case::<1>(&mut r, false);
        let e = rel_err(conv1d(&x, &p).unwrap().data(), oracle1d(&x, &p).data());
        assert!(e <= TOL, "case {i}: {e:e} for {p:?}");
    }
}

#[test]
fn conv_transpose1d_matches_oracle() {
    let mut r = rng(12);
    for i in 0..CASES {
        let (x, p) = random_case::<1>(&mut r, true);
        let want = oracle1d(&x, &p);
        let got = conv_transpose1d(&x, &p).unwrap();
        assert_eq!(got.shape(), want.shape());
        let e = rel_err(got.data(), want.data());
        assert!(e <= TOL, "case {i}: {e:e}");
    }
}

#[test]
fn conv2d_matches_oracle() {
    let mut r = rng(13);
    for i in 0..CASES {
        let (x, p) = random_case::<2>(&mut r, false);
        let e = rel_err(conv2d(&x, &p).unwrap().data(), oracle2d(&x, &p).data());
        assert!(e <= TOL, "case {i}: {e:e}");
    }
}

#[test]
fn conv_transpose2d_matches_oracle() {
    let mut r = rng(14);
    for i in 0..CASES {
        let (x, p) = random_case::<2>(&mut r, true);
        let want = oracle2d(&x, &p);
        let got = conv_transpose2d(&x, &p).unwrap();
        assert_eq!(got.shape(), want.shape());
        let e = rel_err(got.data(), want.data());
        assert!(e <= TOL, "case {i}: {e:e}");
    }
}

#[test]
fn hifigan_upsampler_geometry() {
    // ×8 transposed conv with kernel 16 and padding 4 yields exactly 8T samples.
    let p = Conv1dParams::new_transposed(2, 1, [16])
        .with_stride([8])
        .with_padding([4]);
    for t in 1..20 {
        let y = conv_transpose1d(&Tensor::zeros(&[2, t]), &p).unwrap();
        assert_eq!(y.shape(), &[1, 8 * t]);
    }
}

fn tensor_strategy(c: usize, t: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-1.0f32..1.0, c * t)
        .prop_map(move |v| Tensor::new(vec![c, t], v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_is_linear_without_bias(
        x in tensor_strategy(3, 17),
        y in tensor_strategy(3, 17),
        w in prop::collection::vec(-1.0f32..1.0, 2 * 3 * 5),
        a in -2.0f32..2.0,
        stride in 1usize..4,
    ) {
        let mut p = Conv1dParams::new(3, 2, [5]).with_stride([stride]).with_padding([2]);
        p.weight = Tensor::new(vec![2, 3, 5], w).unwrap();
        let mix: Vec<f32> = x.data().iter().zip(y.data()).map(|(u, v)| a * u + v).collect();
        let lhs = conv1d(&Tensor::new(vec![3, 17], mix).unwrap(), &p).unwrap();
        let (cx, cy) = (conv1d(&x, &p).unwrap(), conv1d(&y, &p).unwrap());
        let rhs: Vec<f32> = cx.data().iter().zip(cy.data()).map(|(u, v)| a * u + v).collect();
        prop_assert!(rel_err(lhs.data(), &rhs) < 1e-5);
    }

    #[test]
    fn transposed_length_law(t in 1usize..50, s in 1usize..9, k in 1usize..12, d in 1usize..4) {
        let pad = (d * (k - 1)) / 2;
        let p = Conv1dParams::new_transposed(1, 1, [k]).with_stride([s]).with_dilation([d]).with_padding([pad]);
        let want = ((t - 1) * s + d * (k - 1) + 1) as isize - 2 * pad as isize;
        match conv_transpose1d(&Tensor::zeros(&[1, t]), &p) {
            Ok(y) => prop_assert_eq!(y.shape()[1] as isize, want),
            Err(_) => prop_assert!(want <= 0),
        }
    }

    #[test]
    fn shuffle_is_a_permutation_inverted_by_transpose(g in 1usize..5, per in 1usize..5, t in 1usize..4) {
        let c = g * per;
        let x = Tensor::new(vec![c, t], (0..c * t).map(|v| v as f32).collect()).unwrap();
        let y = channel_shuffle(&x, g).unwrap();
        let mut sorted = y.data().to_vec();
        sorted.sort_by(f32::total_cmp);
        prop_assert_eq!(&sorted[..], x.data());
        prop_assert_eq!(channel_shuffle(&y, per).unwrap(), x);
    }
}
