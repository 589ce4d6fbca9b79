use proptest::prelude::*;

use margulis_core::diagnostics::{build_schottky_so12_affine, enumerate_reduced_words, reduced_word_count};
use margulis_core::invariants::{cyclic_reduction, labeled_neutral_lines, margulis_alpha_letters, theta};
use margulis_core::qspace::{exp_so, random_isometry, random_lie};
use margulis_core::{GroupElement, ModelData, QSpace, Subspace, Word};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn letters(max_len: usize) -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 0..max_len)
}

fn free_reduce(letters: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::new();
    for &a in letters {
        if out.last() == Some(&-a) {
            out.pop();
        } else {
            out.push(a);
        }
    }
    out
}

fn is_rotation(a: &[i32], b: &[i32]) -> bool {
    a.len() == b.len() && (a.is_empty() || (0..a.len()).any(|j| a[j..].iter().chain(&a[..j]).eq(b.iter())))
}

fn image(m: &ModelData, g: &margulis_core::Isometry) -> (Subspace, Subspace) {
    (m.w_plus_plane().transform(g.matrix()).unwrap(), m.w_minus_plane().transform(g.matrix()).unwrap())
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn exponentials_preserve_the_form(n in 2usize..=4, seed in any::<u64>(), scale in 0.0f64..1.5, affine in any::<bool>()) {
        let space = if affine { QSpace::affine(n) } else { QSpace::linear(n) };
        let g = exp_so(&space, &random_lie(&space, seed, scale), 1.0).unwrap();
        prop_assert!(g.form_residual() <= 1e-9);
        prop_assert!(g.compose(&g.inverse()).form_residual() <= 1e-9);
    }

    #[test]
    fn labeling_is_equivariant(n in 2usize..=4, s1 in any::<u64>(), s2 in any::<u64>()) {
        let m = ModelData::new(n);
        let space = m.linear_space();
        let g = random_isometry(&space, s1, 0.3).unwrap();
        let h = random_isometry(&space, s2, 0.3).unwrap();
        let (a, b) = image(&m, &g);
        let (ha, hb) = image(&m, &h.compose(&g));
        let lab = labeled_neutral_lines(&space, &a, &b).unwrap();
        let moved = labeled_neutral_lines(&space, &ha, &hb).unwrap();
        let hv = h.apply(&lab.v_plus);
        let cos = moved.v_plus.dot(&hv) / hv.norm();
        prop_assert!(1.0 - cos.abs() <= 1e-8);
    }

    #[test]
    fn theta_is_symmetric_under_pair_swap(s in any::<u64>()) {
        let m = ModelData::new(2);
        let space = m.linear_space();
        let p: Vec<Subspace> = (0..4)
            .map(|i| image(&m, &random_isometry(&space, s.wrapping_add(i), 0.3).unwrap()).0)
            .collect();
        if let (Ok(x), Ok(y)) = (theta(&space, [&p[0], &p[1], &p[2], &p[3]]), theta(&space, [&p[2], &p[3], &p[0], &p[1]])) {
            if x.abs() > 1e-3 && x.abs() < 1e3 {
                prop_assert!((x / y - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn cyclic_reduction_is_idempotent(w in letters(24)) {
        let r = cyclic_reduction(&w);
        prop_assert_eq!(cyclic_reduction(&r), r.clone());
        prop_assert_eq!(free_reduce(&r), r.clone());
        if r.len() >= 2 {
            prop_assert_ne!(r[0], -r[r.len() - 1]);
        }
    }

    #[test]
    fn cyclic_reduction_forgets_conjugation(w in letters(16), x in letters(6)) {
        let mut conj: Vec<i32> = x.clone();
        conj.extend(&w);
        conj.extend(x.iter().rev().map(|a| -a));
        prop_assert!(is_rotation(&cyclic_reduction(&w), &cyclic_reduction(&conj)));
    }

    #[test]
    fn words_display_and_parse(w in letters(20)) {
        let w = Word::new(free_reduce(&w)).unwrap();
        let again = Word::parse(&w.to_string());
        if w.is_empty() {
            prop_assert_eq!(w.to_string(), "1");
        } else {
            prop_assert_eq!(again.unwrap(), w);
        }
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn alpha_is_a_class_function(w in letters(6), x in letters(3)) {
        let rep = build_schottky_so12_affine(2.0, 1.0, 7);
        let r = cyclic_reduction(&w);
        prop_assume!(!r.is_empty());
        let mut conj: Vec<i32> = x.clone();
        conj.extend(&r);
        conj.extend(x.iter().rev().map(|a| -a));
        let a = margulis_alpha_letters(&rep, &r).unwrap();
        let b = margulis_alpha_letters(&rep, &conj).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}

#[test]
fn word_counts_match_the_closed_form() {
    for k in 1..=3usize {
        for l in 0..=5usize {
            let expected: usize = (1..=l).map(|j| 2 * k * (2 * k - 1).pow(j as u32 - 1)).sum();
            assert_eq!(reduced_word_count(k, l), expected);
            assert_eq!(enumerate_reduced_words(k, l).len(), expected);
        }
    }
}
