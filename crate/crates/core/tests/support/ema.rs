use fddet_core::sslsim::{ema_update, EmaConfig, ToyModel};
use fddet_core::{Category, FoodType};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

type Check = Result<(), TestCaseError>;

fn cats(n: usize) -> Vec<Category> {
    FoodType::ALL[..n]
        .iter()
        .map(|&f| Category::normal(f))
        .collect()
}

/// Two models of identical shape with arbitrary tensors.
pub fn model_pair() -> impl Strategy<Value = (ToyModel, ToyModel)> {
    (1usize..5, 1usize..7).prop_flat_map(|(c, d)| {
        let model = move || {
            (
                prop::collection::vec(prop::collection::vec(-50.0f64..50.0, d), c),
                prop::collection::vec(-10.0f64..10.0, d),
                prop::collection::vec(1e-3f64..20.0, d),
                0.05f64..5.0,
            )
                .prop_map(
                    move |(centroids, running_mean, running_var, temperature)| ToyModel {
                        categories: cats(c),
                        centroids,
                        running_mean,
                        running_var,
                        temperature,
                    },
                )
        };
        (model(), model())
    })
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn affine(t: &[f64], s: &[f64], m: f64) -> Vec<f64> {
    t.iter()
        .zip(s)
        .map(|(a, b)| m * a + (1.0 - m) * b)
        .collect()
}

pub type AffineCase = ((ToyModel, ToyModel), f64, bool);

pub fn affine_case() -> impl Strategy<Value = AffineCase> {
    (model_pair(), 0.0f64..=1.0, any::<bool>())
}

/// Centroids always, buffers only when enabled, follow `m*t + (1-m)*s`.
pub fn check_affine(((t, s), m, buffers): AffineCase) -> Check {
    let out = ema_update(
        &t,
        &s,
        &EmaConfig {
            momentum: m,
            update_buffers: buffers,
        },
    )
    .unwrap();
    for (k, c) in out.centroids.iter().enumerate() {
        prop_assert!(close(
            c,
            &affine(&t.centroids[k], &s.centroids[k], m),
            1e-12
        ));
    }
    if buffers {
        prop_assert!(close(
            &out.running_mean,
            &affine(&t.running_mean, &s.running_mean, m),
            1e-12
        ));
        prop_assert!(close(
            &out.running_var,
            &affine(&t.running_var, &s.running_var, m),
            1e-12
        ));
    } else {
        prop_assert_eq!(&out.running_mean, &t.running_mean);
        prop_assert_eq!(&out.running_var, &t.running_var);
    }
    prop_assert_eq!(out.temperature, s.temperature);
    Ok(())
}

pub fn check_endpoints((t, s): (ToyModel, ToyModel)) -> Check {
    let keep = ema_update(
        &t,
        &s,
        &EmaConfig {
            momentum: 1.0,
            update_buffers: true,
        },
    )
    .unwrap();
    prop_assert_eq!(&keep.centroids, &t.centroids);
    prop_assert_eq!(&keep.running_mean, &t.running_mean);
    prop_assert_eq!(&keep.running_var, &t.running_var);
    let copy = ema_update(
        &t,
        &s,
        &EmaConfig {
            momentum: 0.0,
            update_buffers: true,
        },
    )
    .unwrap();
    prop_assert_eq!(&copy.centroids, &s.centroids);
    prop_assert_eq!(&copy.running_mean, &s.running_mean);
    prop_assert_eq!(&copy.running_var, &s.running_var);
    Ok(())
}
