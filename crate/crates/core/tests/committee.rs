mod common;

use common::random_image;
use proptest::prelude::*;
use scn_core::committee::{average, CommitteeName};
use scn_core::metrics::mse;
use scn_core::transforms::{apply_d4, invert_d4};
use scn_core::{
    build_preset, committee_spread, run_committee, ConvFilterRestorer, D4Transform, Image,
    InputStats,
};

const LINEAR_COMMITTEES: [CommitteeName; 5] = [
    CommitteeName::ScnF,
    CommitteeName::ScnR,
    CommitteeName::ScnFr,
    CommitteeName::ScnI,
    CommitteeName::ScnFull,
];

fn filter_from(taps: &[f32]) -> ConvFilterRestorer {
    ConvFilterRestorer::new(taps.to_vec(), 3, 3).unwrap()
}

fn image_from(h: usize, w: usize, data: Vec<f32>) -> Image {
    Image::new(h, w, data).unwrap()
}

#[test]
fn d4_compositions_close_over_the_group() {
    let base = Image::from_fn(3, 4, |r, c| (r * 4 + c) as f32).unwrap();
    let elements: Vec<(D4Transform, Image)> = D4Transform::all()
        .map(|t| (t, apply_d4(t, &base)))
        .collect();
    for (i, (_, a)) in elements.iter().enumerate() {
        for (j, (_, b)) in elements.iter().enumerate() {
            assert!(
                i == j || a != b,
                "group elements must be distinct permutations"
            );
        }
    }
    for first in D4Transform::all() {
        for second in D4Transform::all() {
            let composed = apply_d4(second, &apply_d4(first, &base));
            let hits: Vec<D4Transform> = elements
                .iter()
                .filter(|(_, img)| *img == composed)
                .map(|&(t, _)| t)
                .collect();
            assert_eq!(hits.len(), 1, "{second} after {first}");
            assert_eq!(second.after(first), hits[0], "{second} after {first}");
        }
    }
}

#[test]
fn preset_sizes_and_order() {
    for name in CommitteeName::ALL {
        let stats = InputStats {
            min: 0.1,
            max: 0.6,
            mean: 0.3,
        };
        let preset = build_preset(name, Some(stats)).unwrap();
        assert_eq!(preset.spec.members.len(), name.member_count(), "{name:?}");
    }
    let full = build_preset(CommitteeName::ScnFull, None)
        .unwrap()
        .spec
        .members;
    for (i, m) in full.iter().enumerate() {
        assert_eq!(m.d4.index() as usize, i % 8 + 1);
        assert_eq!(m.affine.alpha(), if i < 8 { 1.0 } else { -1.0 });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn committee_never_worse_than_mean_member(
        taps in prop::collection::vec(-0.5f32..1.0, 9),
        truth in prop::collection::vec(0.0f32..1.0, 64),
        noise in prop::collection::vec(-0.2f32..0.2, 64),
    ) {
        let f = filter_from(&taps);
        let clean = image_from(8, 8, truth.clone());
        let noisy = image_from(8, 8, truth.iter().zip(&noise).map(|(a, b)| a + b).collect());
        for name in LINEAR_COMMITTEES {
            let spec = build_preset(name, None).unwrap().spec;
            let out = run_committee(&spec, &f, &noisy).unwrap();
            let mean_member = out.members.iter().map(|m| mse(m, &clean).unwrap()).sum::<f64>()
                / out.members.len() as f64;
            prop_assert!(mse(&out.output, &clean).unwrap() <= mean_member + 1e-9);
        }
    }

    #[test]
    fn symmetric_filter_collapses_flip_rotation_committee(
        center in 0.0f32..1.0, edge in -0.5f32..0.5, corner in -0.5f32..0.5,
        h in 1usize..12, w in 1usize..12, seed in any::<u64>(),
    ) {
        let f = filter_from(&[corner, edge, corner, edge, center, edge, corner, edge, corner]);
        let img = random_image(h, w, seed);
        let base = scn_core::Restorer::restore(&f, &img).unwrap();
        let spec = build_preset(CommitteeName::ScnFr, None).unwrap().spec;
        let out = run_committee(&spec, &f, &img).unwrap();
        prop_assert!(out.output.max_abs_diff(&base) <= 1e-5);
        prop_assert!(committee_spread(&out.members).unwrap() <= 1e-5);
    }

    #[test]
    fn normalized_filter_collapses_inversion_committee(
        raw in prop::collection::vec(0.01f32..1.0, 9), seed in any::<u64>(),
    ) {
        let total: f32 = raw.iter().sum();
        let f = filter_from(&raw.iter().map(|v| v / total).collect::<Vec<_>>());
        let img = random_image(9, 7, seed);
        let base = scn_core::Restorer::restore(&f, &img).unwrap();
        let spec = build_preset(CommitteeName::ScnI, None).unwrap().spec;
        let out = run_committee(&spec, &f, &img).unwrap();
        prop_assert!(out.output.max_abs_diff(&base) <= 1e-5);
    }

    #[test]
    fn averaging_copies_of_an_estimate_is_identity(
        n in 1usize..17, seed in any::<u64>(),
    ) {
        let img = random_image(5, 6, seed);
        let copies = vec![img.clone(); n];
        let avg = average(&copies).unwrap();
        prop_assert!(avg.max_abs_diff(&img) <= 1e-6);
        let again = average(&[avg.clone(), avg.clone()]).unwrap();
        prop_assert_eq!(again, avg);
    }

    #[test]
    fn d4_round_trips_are_exact(k in 1u8..=8, h in 1usize..9, w in 1usize..9, seed in any::<u64>()) {
        let t = D4Transform::new(k).unwrap();
        let img = random_image(h, w, seed);
        prop_assert_eq!(invert_d4(t, &apply_d4(t, &img)), img.clone());
        prop_assert_eq!(apply_d4(t.inverse(), &apply_d4(t, &img)), img);
    }
}
